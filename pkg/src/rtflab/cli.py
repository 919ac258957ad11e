"""Command-line front end.

    rtflab pairs enumerate --q 5 --level 0
    rtflab arch schur --k 3 --m 1
    rtflab orbital compare --q 3 --cls sigma2 --splitting inert --xi 3 --pair 2
    rtflab global verify --config ex1.json
    rtflab lfunc check-thm1 --config ex1.json
    rtflab verify-all

Every command emits a report (text, or JSON with --json).  Exit codes:
0 all verdicts pass, 1 some verdict failed, 2 usage error, 3 invalid
arithmetic setup, 4 missing or incomplete data, 5 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__

SCHEMA = "rtflab-report/1"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SETUP, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5


@dataclass
class RunReport:
    command: list
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    schema: str = SCHEMA

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def to_json(self) -> dict:
        return _jsonable({
            "schema": self.schema, "command": self.command, "inputs": self.inputs,
            "outputs": self.outputs, "timing": self.timing, "verdicts": self.verdicts,
        })

    @classmethod
    def from_json(cls, d: dict) -> "RunReport":
        return cls(d["command"], d["inputs"], d["outputs"], d["timing"], d["verdicts"], d["schema"])

    def text(self) -> str:
        lines = [" ".join(self.command)]
        for k, v in self.outputs.items():
            if isinstance(v, (dict, list)):
                v = json.dumps(v, sort_keys=True, default=str)
            lines.append(f"  {k}: {v}")
        for k, v in self.verdicts.items():
            lines.append(f"  [{'PASS' if v else 'FAIL'}] {k}")
        if self.timing:
            lines.append(f"  seconds: {self.timing.get('seconds', 0):.3f}")
        return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational number: {s}") from e


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float):
        return x
    if hasattr(x, "to_json"):
        return _jsonable(x.to_json())
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def _pairs(args, rep: RunReport):
    from .pairs import AdmissiblePair, enumerate_level0_pairs, enumerate_level_half_pairs, is_admissible

    if args.action == "enumerate":
        fn = enumerate_level0_pairs if args.level == "0" else enumerate_level_half_pairs
        classes = fn(args.q)
        rep.outputs["count"] = len(classes)
        rep.outputs["classes"] = [c.label for c in classes]
        rep.verdicts["all admissible"] = all(is_admissible(c) for c in classes)
    else:
        param = tuple(args.param)
        pair = AdmissiblePair(args.q, args.level, param)
        rep.outputs["pair"] = pair.label
        rep.verdicts["admissible"] = is_admissible(pair)


def _arch(args, rep: RunReport):
    from .arch import (
        ArchPlace, arch_orbital_closed, arch_orbital_numeric, arch_spectral_numeric, beta_binomial_identity,
    )

    place = ArchPlace(args.k, args.m)
    if args.action == "schur":
        num = arch_spectral_numeric(place, quad_steps=max(args.quad_steps, 64))
        import math

        target = 4 * math.pi ** 2 / (2 * args.k - 1)
        rep.outputs.update(quadrature=num, closed=target, closed_exact=f"4*pi^2/{2 * args.k - 1}")
        rep.verdicts["schur orthogonality"] = abs(num - target) <= 1e-6 * target
    elif args.action == "orbital":
        closed = arch_orbital_closed(place, args.xi)
        num = arch_orbital_numeric(place, args.xi, quad_steps=args.quad_steps)
        c = float(closed)
        rep.outputs.update(closed=str(closed), closed_float=c, quadrature=num)
        rep.verdicts["closed form = quadrature"] = abs(num - c) <= 1e-6 * max(abs(c), 1.0)
    else:
        v = beta_binomial_identity(args.k, args.m)
        rep.outputs["value"] = str(v)
        rep.verdicts["identity = 1"] = v == 1


def _orbital(args, rep: RunReport):
    from .localfield import LocalFieldDesc, QuadExt, quotient_characters
    from .orbital import (
        RegularOrbitPoint, ramified_bound, regular_orbital_closed, regular_orbital_oracle,
    )
    from .pairs import AdmissiblePair, PlaceData, build_test_function

    pl = PlaceData(args.q, args.cls, args.splitting)
    M = args.precision
    if args.cls == "sigma2":
        obj = AdmissiblePair(args.q, "0", (args.pair[0],))
    elif args.cls == "sigma3":
        obj = AdmissiblePair(args.q, "1/2", tuple(args.pair[:2]))
    elif args.char is not None:
        kind = {"inert": "unramified", "ramified": "ramified", "split": "split"}[args.splitting]
        ext = QuadExt(LocalFieldDesc(args.q, 1, M), kind)
        level, index = args.char
        obj = quotient_characters(ext, level)[index]
    else:
        obj = None
    tf = build_test_function(pl, obj, M)
    pt = RegularOrbitPoint(args.xi)
    oracle = regular_orbital_oracle(pl, tf, pt, M)
    rep.outputs["oracle"] = oracle.to_json()
    if tf.n_omega > 0 and args.cls == "other":
        bound = ramified_bound(pl, tf, pt)
        rep.outputs["bound"] = bound.to_json()
        oc, ou = oracle.normalized()
        bc, bu = bound.normalized()
        one = {"vol(F^x\\E^x)": 1.0, "vol(U_v)": 1.0}
        lhs = 0.0 if oracle.is_zero() else abs(oc.to_complex()) * ou.to_float(one)
        rep.verdicts["oracle within bound"] = lhs <= bc.to_complex().real * bu.to_float(one) + 1e-12
    else:
        closed = regular_orbital_closed(pl, tf, pt)
        rep.outputs["closed"] = closed.to_json()
        rep.verdicts["closed form = oracle"] = closed.same_as(oracle)


def _load_setup(path):
    from .globalrtf import GlobalSetup

    return GlobalSetup.load(path)


def _global(args, rep: RunReport):
    from . import globalrtf as g

    if args.action == "subconvexity":
        out = g.subconvexity_report(args.t, args.eps, args.alpha)
        rep.outputs.update(_jsonable(out))
        rep.verdicts["t in window"] = bool(out["in_window"])
        return
    setup = _load_setup(args.config)
    rep.inputs["setup"] = setup.to_json()
    if args.action == "verify":
        r = g.verify_identity(setup)
        rep.outputs.update(_jsonable(r.to_json()))
        rep.verdicts["identity"] = r.verdict == "equal"
    elif args.action == "enumerate":
        pts = g.enumerate_regular_support(setup)
        crit = g.emptiness_criteria(setup)
        rep.outputs.update(
            criteria=list(crit), support=[str(p.xi) for p in pts],
            membership={str(p.xi): g.membership_report(setup, p.xi)["all"] for p in pts},
        )
        rep.verdicts["support finite and members valid"] = all(g.membership_report(setup, p.xi)["all"] for p in pts)
        if any(crit):
            rep.verdicts["empty under criteria"] = not pts
    elif args.action == "bound":
        b = g.regular_bound_total(setup)
        rep.outputs.update(_jsonable(b.to_json()))
    elif args.action == "conductor":
        rep.outputs.update(_jsonable(g.conductor_table(setup)))


def _lfunc(args, rep: RunReport):
    from . import lfunc as lf

    if args.action == "L1eta":
        exact, series = lf.L_one_eta(lf.QuadraticCharacter(args.disc))
        rep.outputs.update(exact=str(exact), exact_float=float(exact), series=series)
        rep.verdicts["formula = series"] = abs(float(exact) - series) < 1e-6
        return
    setup = _load_setup(args.config)
    rep.inputs["setup"] = setup.to_json()
    level, weight = setup.N1 * setup.N2 ** 2 * setup.N3 ** 3, 2 * setup.k[0]
    if args.online:
        fixtures = lf.fetch_fixtures(level, weight, cache_dir=args.fixtures)
    elif args.fixtures:
        fixtures = lf.load_fixtures(args.fixtures, level=level, weight=weight)
    else:
        fixtures = None
    r = lf.theorem1_numeric_check(setup, fixtures)
    if not args.per_form:
        r.pop("per_form", None)
    rep.outputs.update(_jsonable(r))
    rep.verdicts["LHS = RHS (completed L-values)"] = r["verdict"] == "agree"


def _verify_all(args, rep: RunReport):
    from .acceptance import run_all

    for res in run_all(quick=args.quick):
        rep.outputs[res.name] = {"passed": res.passed, "detail": _jsonable(res.detail), "seconds": res.seconds}
        rep.verdicts[res.name] = res.passed


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    common.add_argument("--precision", type=int, default=6, help="p-adic working precision M")
    common.add_argument("--quad-steps", type=int, default=64, help="quadrature nodes per axis")

    p = _Parser(prog="rtflab", description="relative trace formula toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sp = sub.add_parser("pairs", parents=[common])
    sp.add_argument("action", choices=["enumerate", "check"])
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--level", choices=["0", "1/2"], default="0")
    sp.add_argument("--param", type=int, nargs="+", default=[])

    sa = sub.add_parser("arch", parents=[common])
    sa.add_argument("action", choices=["schur", "orbital", "beta"])
    sa.add_argument("--k", type=int, required=True)
    sa.add_argument("--m", type=int, default=0)
    sa.add_argument("--xi", type=_frac, default=Fraction(-1))

    so = sub.add_parser("orbital", parents=[common])
    so.add_argument("action", choices=["compare"])
    so.add_argument("--q", type=int, required=True)
    so.add_argument("--cls", choices=["sigma1", "sigma2", "sigma3", "other"], required=True)
    so.add_argument("--splitting", choices=["inert", "ramified", "split"], required=True)
    so.add_argument("--xi", type=_frac, required=True)
    so.add_argument("--pair", type=int, nargs="+", default=[], help="a (sigma2) or sign beta (sigma3)")
    so.add_argument("--char", type=int, nargs=2, default=None, metavar=("LEVEL", "INDEX"),
                    help="character of E^x/F^x U_E^LEVEL, by index")

    sg = sub.add_parser("global", parents=[common])
    sg.add_argument("action", choices=["verify", "enumerate", "bound", "conductor", "subconvexity"])
    sg.add_argument("--config")
    sg.add_argument("--t", type=_frac, default=Fraction(1, 6))
    sg.add_argument("--eps", type=_frac, default=Fraction(1, 100))
    sg.add_argument("--alpha", type=_frac, default=None)

    sl = sub.add_parser("lfunc", parents=[common])
    sl.add_argument("action", choices=["check-thm1", "L1eta"])
    sl.add_argument("--config")
    sl.add_argument("--fixtures")
    sl.add_argument("--disc", type=int, default=-4)
    sl.add_argument("--online", action="store_true")
    sl.add_argument("--per-form", action="store_true")

    sv = sub.add_parser("verify-all", parents=[common])
    sv.add_argument("--quick", action="store_true", help="skip the fixture-gated numeric check")
    return p


HANDLERS = {"pairs": _pairs, "arch": _arch, "orbital": _orbital, "global": _global, "lfunc": _lfunc,
            "verify-all": _verify_all}


def dispatch(argv) -> tuple[RunReport, int]:
    from .arch import QuadratureNotConverged
    from .globalrtf import CriteriaNotMet, SetupError, UnsupportedBaseField
    from .lfunc import FixtureIncomplete, InsufficientCoefficients, NoHeckeCharacter, UnknownLocalType
    from .orbital import NotClosedForm, SupportNotCertified

    args = build_parser().parse_args(argv)
    if args.cmd in ("global", "lfunc") and getattr(args, "action", "") not in ("subconvexity", "L1eta") and not args.config:
        print(f"rtflab {args.cmd}: error: --config is required", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    rep = RunReport(command=["rtflab"] + list(argv), inputs={k: _jsonable(v) for k, v in vars(args).items()})
    t0 = time.time()
    code = None
    try:
        HANDLERS[args.cmd](args, rep)
    except (SetupError, CriteriaNotMet, UnsupportedBaseField, NotClosedForm, NoHeckeCharacter, ValueError) as e:
        if isinstance(e, (FixtureIncomplete, InsufficientCoefficients, UnknownLocalType)):
            code = EXIT_DATA
        else:
            code = EXIT_SETUP
        rep.outputs["error"] = f"{type(e).__name__}: {e}"
    except (FileNotFoundError, KeyError) as e:
        code = EXIT_DATA
        rep.outputs["error"] = f"{type(e).__name__}: {e}"
    except (QuadratureNotConverged, SupportNotCertified, ArithmeticError) as e:
        code = EXIT_NUMERIC
        rep.outputs["error"] = f"{type(e).__name__}: {e}"
    rep.timing["seconds"] = time.time() - t0
    if code is None:
        code = EXIT_OK if rep.ok else EXIT_FAIL
    return rep, code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        rep, code = dispatch(argv)
    except SystemExit as e:
        return int(e.code or 0)
    as_json = "--json" in argv
    print(json.dumps(rep.to_json(), indent=2, sort_keys=True) if as_json else rep.text())
    return code


if __name__ == "__main__":
    sys.exit(main())
