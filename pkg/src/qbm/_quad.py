"""Thin wrappers around QUADPACK that turn silent warnings into errors."""

import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure

RTOL_FLOOR = 64 * np.finfo(float).eps


def quad(f, a, b, *, rel_tol=1e-11, abs_tol=0.0, limit=400, **kw):
    """Integrate a real function, raising instead of warning.

    Returns ``(value, abserr)``. Any ``IntegrationWarning`` from QUADPACK
    is escalated to :class:`QuadratureFailure`. ``rel_tol`` is raised just above
    QUADPACK's floor of ``50 eps``; callers compare the returned error with
    their own target.
    """
    rel_tol = max(rel_tol, RTOL_FLOOR)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsrel=rel_tol, epsabs=abs_tol,
                                      limit=limit, **kw)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quad on [{a}, {b}]: {exc}") from None
    if not np.isfinite(val):
        raise QuadratureFailure(f"quad on [{a}, {b}] returned {val}")
    return val, err


def quad_pieces(f, edges, *, rel_tol=1e-11, abs_tol=0.0, tail=True, **kw):
    """Integrate over consecutive ``edges`` and optionally out to infinity.

    ``edges`` must be increasing. The returned error is the sum of the
    per-piece QUADPACK estimates.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = quad(f, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol, **kw)
        total += v
        err += e
    if tail:
        # the tail is small; ask for accuracy relative to the running total
        tail_abs = max(abs_tol, 1e-2 * rel_tol * abs(total))
        v, e = semi_infinite(f, edges[-1], rel_tol=rel_tol, abs_tol=tail_abs, **kw)
        total += v
        err += e
    return total, err


def semi_infinite(f, a, *, rel_tol=1e-11, abs_tol=0.0, **kw):
    """Integrate ``f`` over ``[a, inf)``, ``a > 0``, through ``w = a/u``."""
    if not a > 0:
        raise ValueError("semi_infinite needs a positive lower limit")

    def g(u):
        if u == 0.0:
            return 0.0
        return f(a / u) * a / (u * u)

    return quad(g, 0.0, 1.0, rel_tol=rel_tol, abs_tol=abs_tol, **kw)


def frequency_edges(anchors, lo=0.0, hi=None, per_decade=4):
    """Breakpoints for a half-line frequency integral.

    Collects ``lo``, every positive anchor, and a log-spaced ladder from the
    smallest anchor up to ``hi`` (default ``1e3`` times the largest anchor).
    """
    anchors = np.asarray([a for a in anchors if a > 0 and np.isfinite(a)], dtype=float)
    top = anchors.max()
    if hi is None:
        hi = 1e3 * top
    bottom = min(anchors.min(), hi)
    n = max(2, int(np.ceil(per_decade * np.log10(hi / bottom))) + 1)
    ladder = np.geomspace(bottom, hi, n)
    return np.unique(np.concatenate([[lo], anchors, ladder]))
