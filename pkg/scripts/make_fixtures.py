"""Regenerate the bundled newform fixture (offline; needs cypari2, not a package dependency).

    python3 scripts/make_fixtures.py --level 693 --weight 4 --sigma1 7 11 --sigma2 3

Every Galois orbit of newforms of the given level and weight is expanded into its
complex embeddings.  A form is kept when its component at each sigma2 prime q is a
depth-zero supercuspidal, which for q^2 || N means it is not the twist by the
quadratic character of conductor q of a form of level N/q^2 or N/q.
"""
import argparse
import json
import sys
import time

import cypari2

TWIST_PRIMES = 12  # primes used to recognise twists


def embeddings(pari, mf_name, basis_name, nmax):
    """List of (orbit index, [a_1..a_nmax] as floats) over all complex embeddings."""
    out = []
    count = int(pari(f"#{basis_name}"))
    for i in range(1, count + 1):
        pari(f"my_f={basis_name}[{i}]; my_c=mfcoefs(my_f,{nmax}); my_E=mfembed(my_f,my_c)")
        if not int(pari('type(my_E[1])=="t_VEC"')):
            pari("my_E=[my_E]")
        for j in range(1, int(pari("#my_E")) + 1):
            coeffs = [float(pari(f"real(my_E[{j}][{n + 1}])")) for n in range(nmax + 1)]
            out.append((i, j, coeffs))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--level", type=int, default=693)
    ap.add_argument("--weight", type=int, default=4)
    ap.add_argument("--sigma1", type=int, nargs="*", default=[7, 11])
    ap.add_argument("--sigma2", type=int, nargs="*", default=[3])
    ap.add_argument("--nmax", type=int, default=6000)
    ap.add_argument("--out", default="src/rtflab/data/newforms_693_4.json")
    args = ap.parse_args()

    t0 = time.time()
    pari = cypari2.Pari()
    pari.allocatemem(4 * 10 ** 9)
    pari.set_real_precision(40)
    N, w = args.level, args.weight
    pari(f"mf=mfinit([{N},{w}],0); L=mfeigenbasis(mf)")
    dim = int(pari("mfdim(mf)"))
    small = embeddings(pari, "mf", "L", 40)
    primes = [int(p) for p in pari("primes([2,40])") if N % int(p)][:TWIST_PRIMES]

    lower = []
    for q in args.sigma2:
        qstar = q if q % 4 == 1 else -q
        for M in (N // (q * q), N // q):
            pari(f"mfl=mfinit([{M},{w}],0); Ll=mfeigenbasis(mfl)")
            lower += [(qstar, c) for _, _, c in embeddings(pari, "mfl", "Ll", 40)]

    keep, excluded = [], []
    for i, j, c in small:
        label = f"{N}.{w}.{i}.{j}"
        twist = any(
            all(abs(c[p] - int(pari(f"kronecker({qs},{p})")) * d[p]) < 1e-6 for p in primes)
            for qs, d in lower
        )
        if twist:
            excluded.append({"label": label, "reason": "twist of lower level (principal series or twisted Steinberg at sigma2)"})
        else:
            keep.append((i, j, label))

    pari_primes = [int(p) for p in pari(f"primes([2,{args.nmax}])")]
    forms = []
    done = {}
    for i, j, label in keep:
        if i not in done:
            done[i] = {jj: cc for _, jj, cc in embeddings(pari, "mf", f"[L[{i}]]", args.nmax)}
        coeffs = done[i][j]
        local = [{"p": q, "type": "depth_zero_supercuspidal"} for q in args.sigma2]
        local += [{"p": p, "type": "steinberg"} for p in args.sigma1]
        forms.append({
            "label": label, "level": N, "weight": w,
            "ap": [[p, coeffs[p]] for p in pari_primes],
            "local_types": sorted(local, key=lambda d: d["p"]),
        })
        print(label, file=sys.stderr)

    data = {
        "source": f"PARI/GP mfinit([{N},{w}],0), mfeigenbasis, mfembed; real_precision 40",
        "level": N, "weight": w,
        "newspace_dimension": dim,
        "prime_bound": args.nmax,
        "forms": forms,
        "excluded": excluded,
    }
    with open(args.out, "w") as fh:
        json.dump(data, fh)
    print(f"{len(forms)} kept, {len(excluded)} excluded, dim {dim}, {time.time() - t0:.0f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
