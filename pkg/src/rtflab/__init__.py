"""Exact and numerical tools for a relative trace formula on a definite quaternion algebra."""

__version__ = "0.1.0"
