"""Adaptive quadrature helpers for integrals over (0, inf).

All radial integrands here carry a u**(-1-alpha) style weight with an
integrable endpoint singularity, so everything is integrated after the
substitution u = exp(v).  The v-range is wide because transformed
integrands can decay as slowly as exp((p - alpha) v) toward -inf; the
default floor keeps the discarded tail below 1e-13 for p - alpha >= 0.2.
"""

import numpy as np
from scipy.integrate import quad

from .errors import NumericError

_V_LO = -200.0
_V_HI = 60.0

ABS_TOL = 1e-10
REL_TOL = 1e-8


def integrate_halfline(f, lower=0.0, upper=np.inf, *, abs_tol=ABS_TOL,
                       rel_tol=REL_TOL, points=None, limit=400):
    """Integrate f over (lower, upper) within (0, inf) via u = exp(v).

    `points` are u-locations of known kinks (mapped into v-space).
    """
    v_lo = _V_LO if lower <= 0.0 else max(np.log(lower), _V_LO)
    v_hi = _V_HI if np.isinf(upper) else min(np.log(upper), _V_HI)
    if v_hi <= v_lo:
        return 0.0
    v_pts = None
    if points is not None:
        v_pts = [np.log(p) for p in points if lower < p < upper]
        v_pts = [v for v in v_pts if v_lo < v < v_hi] or None

    def g(v):
        u = np.exp(v)
        return f(u) * u

    val, err = quad(g, v_lo, v_hi, epsabs=abs_tol, epsrel=rel_tol,
                    points=v_pts, limit=limit)
    if not np.isfinite(val):
        raise NumericError("halfline quadrature returned a non-finite value")
    return val


def integrate_halfline_complex(f, **kwargs):
    """Complex-valued variant of integrate_halfline (real and imag parts)."""
    re = integrate_halfline(lambda u: np.real(f(u)), **kwargs)
    im = integrate_halfline(lambda u: np.imag(f(u)), **kwargs)
    return re + 1j * im


def gauss_legendre_panel(a, b, n=16):
    """Nodes and weights for fixed-order Gauss-Legendre on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _oscillatory_segment(g, a, b, c, limit=200):
    """int_a^b g(u) exp(i c u) du for real g, via QAWO weights."""
    ac = abs(c)
    re = quad(g, a, b, weight="cos", wvar=ac, limit=limit)[0]
    im = quad(g, a, b, weight="sin", wvar=ac, limit=limit)[0]
    return re + 1j * np.sign(c) * im


def psi_levy_integral(qfun, alpha, c, points=None, tail_tol=1e-13):
    """int_0^inf (exp(icu) - 1 - icu h_a(u)) q(u) u**(-1-alpha) du.

    h_a is 0 for alpha < 1, the indicator of u <= 1 for alpha = 1, and 1
    for alpha > 1.  The piece on (0, 1] is integrated after u = exp(v)
    (bounded oscillation, singular weight); the far field uses oscillatory
    Clenshaw-Curtis quadrature with the non-oscillatory parts split off,
    truncated where 2 q(u) u**(-alpha) / alpha falls below tail_tol.
    """
    if c == 0.0:
        return 0.0 + 0.0j  # psi vanishes identically at zero frequency
    points = sorted(p for p in (points or []) if p > 0.0)

    def h_radial(u):
        if alpha < 1.0:
            return np.zeros_like(np.asarray(u, dtype=float))
        if alpha == 1.0:
            return (np.asarray(u, dtype=float) <= 1.0).astype(float)
        return np.ones_like(np.asarray(u, dtype=float))

    def near_integrand(u):
        psi = np.exp(1j * c * u) - 1.0 - 1j * c * u * h_radial(u)
        return psi * qfun(u) * u ** (-1.0 - alpha)

    near = integrate_halfline_complex(
        near_integrand, upper=1.0, points=[p for p in points if p < 1.0]
    )

    # far-field cutoff where the tail bound drops below tolerance
    upper = 64.0
    while 2.0 * qfun(upper) * upper ** (-alpha) / alpha > tail_tol and upper < 1e12:
        upper *= 2.0

    g = lambda u: qfun(u) * u ** (-1.0 - alpha)
    inner_pts = [p for p in points if 1.0 < p < upper]
    edges = [1.0] + inner_pts + [upper]
    far = 0.0 + 0.0j
    for a_e, b_e in zip(edges[:-1], edges[1:]):
        far += _oscillatory_segment(g, a_e, b_e, c)
    # the non-oscillatory pieces integrate accurately in log scale
    far -= integrate_halfline(g, lower=1.0, upper=upper, points=inner_pts)
    if alpha > 1.0:
        drift = integrate_halfline(
            lambda u: qfun(u) * u ** (-alpha), lower=1.0, upper=upper,
            points=inner_pts,
        )
        far -= 1j * c * drift
    return near + far
