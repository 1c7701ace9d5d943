"""Sampler for the infinite-activity base term of a transition increment:
a tempered stable vector with scaled spherical measure, alpha in (0,1).

Construction: per direction atom (xi, w), unit-rate arrival times Gamma_1 <
Gamma_2 < ... are mapped through the inverse tail u = (alpha*Gamma/w)**(-1/alpha)
into decreasing stable jump sizes, each kept with probability q(xi, u), and
the series is cut once u < trunc_eps.  The discarded small-jump mass has
expected norm at most w * eps**(1-alpha) / (1-alpha) per direction; with
tail compensation on, that mean is added back deterministically.

Each direction consumes two child streams (arrivals, thinning), so runs
that differ only in trunc_eps see identical jumps above the coarser cutoff
and leave the parent stream untouched.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ._quad import integrate_halfline
from .dist_basic import positive_stable_sample_many
from .errors import ConfigError, NumericError, ParameterError, UnsupportedRegimeError
from .tempering import CONSTANT_ONE, HARD_TRUNCATION

_FIRST_BLOCK = 512
_MAX_BLOCK = 1 << 20

MAX_ESSCHER_ITERS = 10 ** 6


@dataclass(frozen=True)
class BaseIncrementSpec:
    """Frozen sampling plan: stability index, scaled spherical measure,
    tempering, jump-size cutoff, and whether to add the tail mean back."""

    alpha: float
    sigma0: object
    tempering: object
    trunc_eps: float
    tail_compensation: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise UnsupportedRegimeError(
                "series sampling supports alpha in (0,1) only (no compensated series)"
            )
        if not self.trunc_eps > 0.0:
            raise ParameterError("trunc_eps must be positive")
        if self.tail_compensation:
            means = tuple(
                w * self._tail_mean_unit(xi) for xi, w in self.sigma0.atoms
            )
        else:
            means = tuple(0.0 for _ in self.sigma0.atoms)
        object.__setattr__(self, "_tail_means", means)

    def _tail_mean_unit(self, xi):
        """int_0^eps u q(xi,u) u**(-1-alpha) du for a unit-weight direction."""
        a = self.alpha
        spec = self.tempering
        if spec.variant == CONSTANT_ONE:
            return self.trunc_eps ** (1.0 - a) / (1.0 - a)
        return integrate_halfline(
            lambda u: spec.q(xi, u) * u ** (-a), upper=self.trunc_eps
        )

    @staticmethod
    def from_model(model, t, error_target=1e-8, tail_compensation=True):
        """Plan for the base term of a time-t increment: spherical mass is
        scaled by (1 - e^{-alpha lam t}) and the cutoff is chosen so the
        truncation bound meets error_target."""
        factor = -math.expm1(-model.alpha * model.lam * t)
        sigma0 = model.sigma.scaled(factor)
        eps = eps_for_error_target(model.alpha, sigma0.total_mass, error_target)
        return BaseIncrementSpec(
            alpha=model.alpha,
            sigma0=sigma0,
            tempering=model.tempering,
            trunc_eps=eps,
            tail_compensation=tail_compensation,
        )


def eps_for_error_target(alpha, total_weight, target):
    """Cutoff achieving truncation bound <= target for the given total mass."""
    if target <= 0.0:
        raise ConfigError("truncation error target must be positive")
    return (target * (1.0 - alpha) / total_weight) ** (1.0 / (1.0 - alpha))


def truncation_error_bound(spec):
    """Upper bound on the expected norm of the discarded small-jump sum:
    sum_atoms w * eps**(1-alpha) / (1-alpha)."""
    a = spec.alpha
    return spec.sigma0.total_mass * spec.trunc_eps ** (1.0 - a) / (1.0 - a)


def check_against_tolerance(spec, tolerance):
    bound = truncation_error_bound(spec)
    if bound > tolerance:
        raise ConfigError(
            f"truncation bound {bound:.3e} exceeds the configured tolerance {tolerance:.3e}"
        )
    return bound


@dataclass
class SeriesDiagnostics:
    kept: int = 0
    thinned: int = 0
    truncation_bound: float = 0.0


def _direction_series(alpha, w, tempering, xi, eps, arrivals, thinning):
    """Kept-jump radial sum for one direction; returns (sum, kept, thinned)."""
    gamma_max = (w / alpha) * eps ** (-alpha)
    gen_a = arrivals.generator
    gen_t = thinning.generator
    spec = tempering
    p = spec.p
    mixture = spec.mixture_for(xi) if spec.is_p_tempered else None
    gamma_cut = spec.gamma_for(xi) if spec.variant == HARD_TRUNCATION else None

    total = 0.0
    kept = 0
    thinned = 0
    carry = 0.0
    block = _FIRST_BLOCK
    while carry <= gamma_max:
        e = gen_a.standard_exponential(block)
        g = carry + np.cumsum(e)
        carry = g[-1]
        live = g[g <= gamma_max]
        m = live.size
        if m:
            u = (alpha * live / w) ** (-1.0 / alpha)
            if spec.variant == CONSTANT_ONE:
                keep = np.ones(m, dtype=bool)
            elif gamma_cut is not None:
                keep = u <= gamma_cut
            else:
                s = mixture.sample(m, gen_t)
                if s is not None:
                    keep = gen_t.uniform(size=m) < np.exp(-s * u ** p)
                else:
                    keep = gen_t.uniform(size=m) < mixture.laplace(u ** p)
            total += u[keep].sum()
            kc = int(keep.sum())
            kept += kc
            thinned += m - kc
        block = min(block * 2, _MAX_BLOCK)
    return total, kept, thinned


def series_thinning_sample(spec, rng, collect=False):
    """One draw of the base increment vector (d,) by thinned inverse-tail
    series, direction by direction."""
    dim = spec.sigma0.dim
    out = np.zeros(dim)
    diag = SeriesDiagnostics(truncation_bound=truncation_error_bound(spec))
    for (xi, w), tail_mean in zip(spec.sigma0.atoms, spec._tail_means):
        arrivals = rng.child()
        thinning = rng.child()
        radial, kept, thinned = _direction_series(
            spec.alpha, w, spec.tempering, xi, spec.trunc_eps, arrivals, thinning
        )
        out += xi.vector * (radial + tail_mean)
        diag.kept += kept
        diag.thinned += thinned
    return (out, diag) if collect else out


# ---------------------------------------------------------------------------
# Esscher-tilt oracle for the classical one-sided case


def esscher_acceptance_rate(alpha, zeta, weight):
    """Acceptance probability exp(weight * Gamma(-alpha) * zeta**alpha)."""
    return math.exp(weight * gamma_fn(-alpha) * zeta ** alpha)


def esscher_tweedie_sample(alpha, zeta, weight, rng):
    """Exact draw from the classical exponentially tempered one-sided law
    (p = 1): propose a one-sided stable S and accept with probability
    exp(-zeta*S).  The accepted draw has Laplace transform
    exp(weight * Gamma(-alpha) * ((lam + zeta)**alpha - zeta**alpha))."""
    if zeta < 0.0:
        raise ParameterError("zeta must be nonnegative")
    for _ in range(MAX_ESSCHER_ITERS):
        s = positive_stable_sample_many(alpha, weight, 1, rng)[0]
        if zeta == 0.0:
            return float(s)
        if rng.generator.uniform() <= math.exp(-zeta * s):
            return float(s)
    raise NumericError(
        f"Esscher sampler exceeded {MAX_ESSCHER_ITERS} iterations "
        f"(acceptance rate {esscher_acceptance_rate(alpha, zeta, weight):.2e})"
    )


def esscher_tweedie_sample_many(alpha, zeta, weight, n, rng):
    """Vectorized variant with acceptance-rate-informed batching."""
    if zeta < 0.0:
        raise ParameterError("zeta must be nonnegative")
    n = int(n)
    rate = esscher_acceptance_rate(alpha, zeta, weight) if zeta > 0.0 else 1.0
    if rate < 1e-6:
        raise NumericError(f"acceptance rate {rate:.2e} is impractically small")
    out = np.empty(n)
    got = 0
    while got < n:
        m = int((n - got) / rate * 1.1) + 16
        s = positive_stable_sample_many(alpha, weight, m, rng)
        if zeta > 0.0:
            u = rng.generator.uniform(size=m)
            s = s[u <= np.exp(-zeta * s)]
        take = min(s.size, n - got)
        out[got:got + take] = s[:take]
        got += take
    return out
