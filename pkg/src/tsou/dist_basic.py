"""Auxiliary distributions: the beta/Pareto mixture used as a rejection
envelope (a modified log-Laplace law), the generalized gamma law, Poisson
counts, and a one-sided stable sampler.

Every sampler takes an RngStream, a thin wrapper around a counter-based
bit generator, so that sequences are reproducible across hosts and
independent across (seed, stream_id) pairs.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn, gammainc

from .errors import ParameterError


# ---------------------------------------------------------------------------
# deterministic random streams


@dataclass
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Streams are single-owner: never share one instance between concurrent
    callers.  `child()` derives a fresh independent substream; successive
    calls yield distinct children, so a parent can hand out one stream per
    direction/path without disturbing its own state.
    """

    seed: int
    stream_id: int = 0
    spawn_path: tuple = ()
    _spawned: int = field(default=0, repr=False)

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** 64) or not (0 <= self.stream_id < 2 ** 64):
            raise ParameterError("seed and stream_id must be unsigned 64-bit integers")
        key = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self.spawn_path)
        )
        self.generator = np.random.Generator(np.random.Philox(key))

    def child(self):
        """Derive the next independent substream of this stream."""
        s = RngStream(self.seed, self.stream_id, self.spawn_path + (self._spawned,))
        self._spawned += 1
        return s


# ---------------------------------------------------------------------------
# beta/Pareto mixture envelope (modified log-Laplace)


@dataclass(frozen=True)
class MllParams:
    """Parameters of the beta/Pareto mixture with density

        g(x) = alpha*(p-alpha)*delta**alpha / (alpha*delta**p + p - alpha)
               * (x**(p-alpha-1) on (0, delta]  |  x**(-1-alpha) on (delta, inf)).

    Requires p > alpha > 0 and delta > 0.
    """

    alpha: float
    p: float
    delta: float

    def __post_init__(self):
        if not (self.p > self.alpha > 0.0) or not self.delta > 0.0:
            raise ParameterError(
                f"need p > alpha > 0 and delta > 0, got alpha={self.alpha}, "
                f"p={self.p}, delta={self.delta}"
            )

    @property
    def h(self):
        """Mixing weight of the beta branch, alpha*delta**p / (alpha*delta**p + p - alpha)."""
        a, p, d = self.alpha, self.p, self.delta
        return a * d ** p / (a * d ** p + p - a)


def mll_pdf(x, params):
    """Density of the beta/Pareto mixture; zero off (0, inf)."""
    a, p, d = params.alpha, params.p, params.delta
    x = np.asarray(x, dtype=float)
    const = a * (p - a) * d ** a / (a * d ** p + p - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        body = np.where(
            x <= d,
            np.where(x > 0.0, x, 1.0) ** (p - a - 1.0),
            np.where(x > 0.0, x, 1.0) ** (-1.0 - a),
        )
    out = np.where(x > 0.0, const * body, 0.0)
    return out if out.ndim else float(out)


def mll_cdf(x, params):
    """Distribution function of the beta/Pareto mixture (closed form)."""
    a, p, d = params.alpha, params.p, params.delta
    h = params.h
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 1e-300, None)
    lower = h * (xc / d) ** (p - a)
    upper = h + (1.0 - h) * (1.0 - (d / xc) ** a)
    out = np.where(x <= 0.0, 0.0, np.where(x <= d, lower, upper))
    return out if out.ndim else float(out)


def mll_sample(params, rng):
    """One draw; consumes exactly two uniforms (branch pick + inversion)."""
    u1, u2 = rng.generator.uniform(size=2)
    d = params.delta
    if u2 < params.h:
        return u1 ** (1.0 / (params.p - params.alpha)) * d
    return u1 ** (-1.0 / params.alpha) * d


def mll_sample_many(params, n, rng):
    """Vectorized draws; consumes the same uniform pairs as n scalar calls."""
    u = rng.generator.uniform(size=(int(n), 2))
    d = params.delta
    beta_branch = u[:, 1] < params.h
    out = np.where(
        beta_branch,
        u[:, 0] ** (1.0 / (params.p - params.alpha)),
        u[:, 0] ** (-1.0 / params.alpha),
    )
    return out * d


# ---------------------------------------------------------------------------
# generalized gamma


@dataclass(frozen=True)
class GgaParams:
    """Generalized gamma with density p*theta**(beta/p)/Gamma(beta/p)
    * u**(beta-1) * exp(-theta*u**p) on (0, inf)."""

    beta: float
    p: float
    theta: float

    def __post_init__(self):
        if min(self.beta, self.p, self.theta) <= 0.0:
            raise ParameterError("beta, p, theta must all be positive")


def gga_pdf(u, params):
    b, p, th = params.beta, params.p, params.theta
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, 1e-300, None)
    val = p * th ** (b / p) / gamma_fn(b / p) * uc ** (b - 1.0) * np.exp(-th * uc ** p)
    out = np.where(u > 0.0, val, 0.0)
    return out if out.ndim else float(out)


def gga_cdf(u, params):
    b, p, th = params.beta, params.p, params.theta
    u = np.asarray(u, dtype=float)
    out = np.where(u > 0.0, gammainc(b / p, th * np.clip(u, 0.0, None) ** p), 0.0)
    return out if out.ndim else float(out)


def gga_sample(params, rng):
    """Draw via X ~ Gamma(beta/p, rate theta), return X**(1/p)."""
    x = rng.generator.gamma(shape=params.beta / params.p, scale=1.0 / params.theta)
    return x ** (1.0 / params.p)


def gga_sample_many(params, n, rng):
    x = rng.generator.gamma(
        shape=params.beta / params.p, scale=1.0 / params.theta, size=int(n)
    )
    return x ** (1.0 / params.p)


# ---------------------------------------------------------------------------
# Poisson counts


def poisson_sample(mean, rng):
    """Poisson count with the given mean (mean >= 0, finite)."""
    if not np.isfinite(mean) or mean < 0.0:
        raise ParameterError(f"Poisson mean must be finite and >= 0, got {mean}")
    if mean == 0.0:
        return 0
    return int(rng.generator.poisson(mean))


# ---------------------------------------------------------------------------
# one-sided stable


def positive_stable_sample(alpha, weight, rng):
    """One-sided alpha-stable draw S with

        E exp(-lam*S) = exp(weight * Gamma(-alpha) * lam**alpha),

    the time-1 marginal of the subordinator with jump intensity
    weight * u**(-1-alpha) du.  Uses Kanter's single-uniform-plus-
    exponential representation; requires alpha in (0,1) and weight > 0.
    """
    return float(positive_stable_sample_many(alpha, weight, 1, rng)[0])


def positive_stable_sample_many(alpha, weight, n, rng):
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0,1), got {alpha}")
    if not weight > 0.0:
        raise ParameterError(f"weight must be positive, got {weight}")
    u = rng.generator.uniform(size=int(n))
    e = rng.generator.standard_exponential(size=int(n))
    x = np.pi * u
    # Zolotarev/Kanter function; gives unit-scale S1 with E exp(-lam S1) = exp(-lam**alpha)
    a_x = (
        np.sin((1.0 - alpha) * x)
        * np.sin(alpha * x) ** (alpha / (1.0 - alpha))
        / np.sin(x) ** (1.0 / (1.0 - alpha))
    )
    s1 = (a_x / e) ** ((1.0 - alpha) / alpha)
    scale = (weight * gamma_fn(1.0 - alpha) / alpha) ** (1.0 / alpha)
    return scale * s1
