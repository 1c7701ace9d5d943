"""The compound-Poisson jump distribution H of the transition law.

H factorizes as a discrete direction law sigma_1 and a family of radial
densities

    f_xi(u) = kappa_xi * (q(xi, u) - q(xi, u e^{lam t})) * u**(-1-alpha),

with kappa_xi the normalizer.  Mixture-tempered directions are sampled by
rejection from either a beta/Pareto mixture envelope (algorithm 1) or a
generalized gamma envelope (algorithm 2, available when the mixing measure
stays away from 0); hard truncation admits an exact inverse CDF.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ._quad import integrate_halfline
from .dist_basic import (
    GgaParams,
    MllParams,
    gga_sample_many,
    mll_sample,
    mll_sample_many,
)
from .errors import (
    EnvelopeViolationError,
    NumericError,
    ParameterError,
    UnsupportedRegimeError,
)
from .tempering import CONSTANT_ONE, HARD_TRUNCATION, compute_K

MAX_REJECTION_ITERS = 10 ** 6
_PHI_TOL = 1e-9


# ---------------------------------------------------------------------------
# normalizers and the radial density


def kappa_xi(model, t, xi):
    """Radial normalizer 1 / int (q(xi,u) - q(xi,u e^{lam t})) u**(-1-alpha) du."""
    a = model.alpha
    spec = model.tempering
    lt = model.lam * t
    if spec.variant == CONSTANT_ONE:
        raise UnsupportedRegimeError("stable tempering has no jump component")
    if spec.variant == HARD_TRUNCATION:
        g = spec.gamma_for(xi)
        return a * g ** a / math.expm1(a * lt)
    p = spec.p
    if p <= a:
        raise UnsupportedRegimeError("the jump law requires tempering power p > alpha")
    m = spec.mixture_for(xi).moment(a / p)
    if not np.isfinite(m):
        raise UnsupportedRegimeError("infinite mixing mass: the jump law is undefined")
    return a / (gamma_fn(1.0 - a / p) * math.expm1(a * lt) * m)


def kappa_xi_quadrature(model, t, xi):
    """Oracle twin of kappa_xi via direct quadrature."""
    a = model.alpha
    scale = math.exp(model.lam * t)
    spec = model.tempering
    pts = None
    if spec.variant == HARD_TRUNCATION:
        g = spec.gamma_for(xi)
        pts = [g / scale, g]
    inv = integrate_halfline(
        lambda u: spec.q_diff(xi, u, scale) * u ** (-1.0 - a), points=pts
    )
    return 1.0 / inv


def sigma1_build(model, t):
    """Direction marginal of H: probabilities proportional to w_xi / kappa_xi."""
    k_total = compute_K(model, t)
    if k_total == 0.0:
        raise ParameterError("K = 0: the model has no jump component")
    if not np.isfinite(k_total):
        raise UnsupportedRegimeError("K is infinite; the jump law is undefined")
    masses = [w / kappa_xi(model, t, xi) for xi, w in model.sigma.atoms]
    total = sum(masses)
    return tuple(
        (xi, m / total) for (xi, _), m in zip(model.sigma.atoms, masses)
    )


def f_xi_pdf(model, t, xi, u):
    """Radial jump density at u > 0, vectorized."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ParameterError("the radial density lives on (0, inf)")
    a = model.alpha
    scale = math.exp(model.lam * t)
    k = kappa_xi(model, t, xi)
    out = k * model.tempering.q_diff(xi, u, scale) * u ** (-1.0 - a)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# envelopes


def envelope_v1(model, t, xi):
    """Beta/Pareto envelope constant and parameters for a mixture direction.

    With the envelope scale fixed at 1, V1 reduces to
    max(1, M (e^{p lam t} - 1)) / (Gamma(2 - a/p) (e^{a lam t} - 1) m_{a/p}).
    """
    spec = model.tempering
    if not spec.is_p_tempered:
        raise UnsupportedRegimeError("the envelope applies to mixture tempering")
    a, p = model.alpha, spec.p
    if p <= a:
        raise ParameterError("envelope requires tempering power p > alpha")
    mix = spec.mixture_for(xi)
    m_frac = mix.moment(a / p)
    m_first = mix.moment(1.0)
    if not np.isfinite(m_first):
        raise ParameterError(
            "envelope requires a finite first mixing moment (certificate invalid)"
        )
    lt = model.lam * t
    v1 = max(1.0, m_first * math.expm1(p * lt)) / (
        gamma_fn(2.0 - a / p) * math.expm1(a * lt) * m_frac
    )
    return v1, MllParams(alpha=a, p=p, delta=1.0)


def envelope_v2(model, t, xi):
    """Generalized gamma envelope (V2, GgaParams, zeta), or None when the
    mixing measure reaches down to 0 (zeta = 0)."""
    spec = model.tempering
    if not spec.is_p_tempered:
        raise UnsupportedRegimeError("the envelope applies to mixture tempering")
    a, p = model.alpha, spec.p
    mix = spec.mixture_for(xi)
    zeta = mix.support_lower
    if zeta <= 0.0:
        return None
    m_first = mix.moment(1.0)
    if not np.isfinite(m_first):
        return None
    m_frac = mix.moment(a / p)
    lt = model.lam * t
    v2 = (
        zeta ** (a / p - 1.0)
        * a
        * math.expm1(p * lt)
        * m_first
        / (p * math.expm1(a * lt) * m_frac)
    )
    return v2, GgaParams(beta=p - a, p=p, theta=zeta), zeta


# ---------------------------------------------------------------------------
# acceptance ratios


def _check_phi(phi, where):
    phi = np.atleast_1d(phi)
    if np.any(phi > 1.0 + _PHI_TOL) or np.any(phi < -1e-12):
        raise EnvelopeViolationError(
            f"acceptance ratio left [0,1] in {where}: "
            f"min={phi.min():.3e}, max={phi.max():.3e}"
        )


def make_phi1(model, t, xi):
    """phi_1(u) = f_xi(u) / (V1 g1(u)) with the normalizer cancelled."""
    spec = model.tempering
    p = spec.p
    mix = spec.mixture_for(xi)
    kappa_p = math.exp(p * model.lam * t)
    m_first = mix.moment(1.0)
    denom_const = max(1.0, m_first * (kappa_p - 1.0))

    def phi1(u):
        u = np.asarray(u, dtype=float)
        x = u ** p
        num = mix.laplace_diff(x, kappa_p)
        den = np.where(u <= 1.0, x, 1.0) * denom_const
        return num / den

    return phi1


def make_phi2(model, t, xi):
    """phi_2(u) = f_xi(u) / (V2 g2(u)); requires zeta > 0."""
    spec = model.tempering
    p = spec.p
    mix = spec.mixture_for(xi)
    zeta = mix.support_lower
    if zeta <= 0.0:
        raise ParameterError("phi_2 needs a mixing measure bounded away from 0")
    kappa_p = math.exp(p * model.lam * t)
    m_first = mix.moment(1.0)

    if mix.atoms is not None:
        atoms = mix.atoms

        def phi2(u):
            u = np.asarray(u, dtype=float)
            x = u ** p
            num = np.zeros_like(x)
            for s, w in atoms:
                # exp(zeta x) * w * exp(-s x) * (1 - exp(-s x (kappa-1)))
                num += w * np.exp(-(s - zeta) * x) * (-np.expm1(-s * x * (kappa_p - 1.0)))
            return num / ((kappa_p - 1.0) * m_first * x)

    else:

        def phi2(u):
            u = np.asarray(u, dtype=float)
            x = u ** p
            num = mix.laplace_diff(x, kappa_p) * np.exp(zeta * x)
            return num / ((kappa_p - 1.0) * m_first * x)

    return phi2


# ---------------------------------------------------------------------------
# samplers


def hardtrunc_sample(gamma, alpha, lam, t, rng):
    """Exact inverse-CDF draw from the hard-truncation radial density,
    supported on (gamma e^{-lam t}, gamma]."""
    if gamma <= 0.0:
        raise ParameterError("truncation level must be positive")
    u = rng.generator.uniform()
    return hardtrunc_inverse_cdf(u, gamma, alpha, lam, t)


def hardtrunc_inverse_cdf(y, gamma, alpha, lam, t):
    e_alt = math.exp(alpha * lam * t)
    y = np.asarray(y, dtype=float)
    out = gamma * (e_alt - (e_alt - 1.0) * y) ** (-1.0 / alpha)
    return out if out.ndim else float(out)


def hardtrunc_cdf(x, gamma, alpha, lam, t):
    e_alt = math.exp(alpha * lam * t)
    x = np.asarray(x, dtype=float)
    body = gamma ** alpha / (e_alt - 1.0) * (
        e_alt * gamma ** (-alpha) - np.clip(x, 1e-300, None) ** (-alpha)
    )
    out = np.clip(np.where(x <= gamma * math.exp(-lam * t), 0.0, body), 0.0, 1.0)
    return out if out.ndim else float(out)


@dataclass
class _DirectionLaw:
    """Per-direction radial sampler bundle (internal to JumpLaw)."""

    xi: object
    algorithm: str            # "mll" | "gga" | "inverse-cdf"
    v1: float = None
    mll: MllParams = None
    phi1: object = None
    v2: float = None
    gga: GgaParams = None
    zeta: float = None
    phi2: object = None
    gamma: float = None       # hard truncation level

    def envelope_constant(self):
        return {"mll": self.v1, "gga": self.v2, "inverse-cdf": 1.0}[self.algorithm]


class JumpLaw:
    """Sampler for H: direction draw from sigma_1, then a radial draw from
    f_xi by the per-direction algorithm (envelope with the smaller constant,
    inverse CDF under hard truncation)."""

    def __init__(self, model, t):
        self.model = model
        self.t = t
        self.K = compute_K(model, t)
        if self.K == 0.0:
            raise ParameterError("K = 0: the model has no jump component")
        if not np.isfinite(self.K):
            raise UnsupportedRegimeError("K is infinite; the jump law is undefined")
        pairs = sigma1_build(model, t)
        self.directions = tuple(xi for xi, _ in pairs)
        self.probs = np.array([pr for _, pr in pairs])
        self.laws = {}
        spec = model.tempering
        for xi in self.directions:
            if spec.variant == HARD_TRUNCATION:
                self.laws[xi] = _DirectionLaw(
                    xi=xi, algorithm="inverse-cdf", gamma=spec.gamma_for(xi)
                )
                continue
            v1, mll = envelope_v1(model, t, xi)
            law = _DirectionLaw(
                xi=xi, algorithm="mll", v1=v1, mll=mll,
                phi1=make_phi1(model, t, xi),
            )
            alt = envelope_v2(model, t, xi)
            if alt is not None:
                v2, gga, zeta = alt
                law.v2, law.gga, law.zeta = v2, gga, zeta
                law.phi2 = make_phi2(model, t, xi)
                if v2 < v1:
                    law.algorithm = "gga"
            self.laws[xi] = law

    # -- radial draws -------------------------------------------------------

    def sample_radial(self, xi, rng, algorithm=None):
        """One radial draw for direction xi; returns (w, proposals_used)."""
        law = self.laws[xi]
        algo = algorithm or law.algorithm
        if algo == "inverse-cdf":
            return (
                hardtrunc_sample(law.gamma, self.model.alpha, self.model.lam, self.t, rng),
                1,
            )
        phi, params, sampler = self._routes(law, algo)
        iters = 0
        while iters < MAX_REJECTION_ITERS:
            iters += 1
            y = sampler(params, rng)
            u = rng.generator.uniform()
            ph = float(phi(y))
            _check_phi(ph, f"algorithm for {algo} envelope")
            if u <= ph:
                return y, iters
        raise NumericError(
            f"rejection sampler exceeded {MAX_REJECTION_ITERS} iterations"
        )

    def sample_radial_many(self, xi, n, rng, algorithm=None):
        """n radial draws for direction xi; returns (draws, proposals_used)."""
        law = self.laws[xi]
        algo = algorithm or law.algorithm
        n = int(n)
        if algo == "inverse-cdf":
            u = rng.generator.uniform(size=n)
            return (
                hardtrunc_inverse_cdf(u, law.gamma, self.model.alpha, self.model.lam, self.t),
                n,
            )
        phi, params, _ = self._routes(law, algo)
        v_const = law.v1 if algo == "mll" else law.v2
        out = np.empty(n)
        got = 0
        proposals = 0
        while got < n:
            m = int((n - got) * v_const * 1.1) + 16
            if algo == "mll":
                y = mll_sample_many(params, m, rng)
            else:
                y = gga_sample_many(params, m, rng)
            u = rng.generator.uniform(size=m)
            ph = phi(y)
            _check_phi(ph, f"algorithm for {algo} envelope")
            hits = np.flatnonzero(u <= ph)
            take = min(hits.size, n - got)
            out[got:got + take] = y[hits[:take]]
            got += take
            # count proposals only up to the one that filled the request
            proposals += m if take == hits.size else int(hits[take - 1]) + 1
            if proposals > MAX_REJECTION_ITERS * max(n, 1):
                raise NumericError("batched rejection sampler is not accepting")
        return out, proposals

    @staticmethod
    def _routes(law, algo):
        if algo == "mll":
            if law.phi1 is None:
                raise ParameterError("no beta/Pareto envelope for this direction")
            return law.phi1, law.mll, mll_sample
        if algo == "gga":
            if law.phi2 is None:
                raise ParameterError("no generalized gamma envelope for this direction")
            return law.phi2, law.gga, lambda p, r: gga_sample_many(p, 1, r)[0]
        raise ParameterError(f"unknown algorithm {algo!r}")

    # -- full H draws -------------------------------------------------------

    def sample(self, rng):
        """One (direction, radius) pair from H; returns (xi, w, proposals)."""
        idx = int(rng.generator.choice(len(self.directions), p=self.probs))
        xi = self.directions[idx]
        w, iters = self.sample_radial(xi, rng)
        return xi, w, iters

    def sample_jump_sum(self, n, rng):
        """Sum of n iid jump vectors xi*W; returns (vector, proposals)."""
        total = np.zeros(self.model.dim)
        proposals = 0
        if n == 0:
            return total, proposals
        counts = rng.generator.multinomial(n, self.probs)
        for xi, cnt in zip(self.directions, counts):
            if cnt == 0:
                continue
            w, props = self.sample_radial_many(xi, cnt, rng)
            total += xi.vector * w.sum()
            proposals += props
        return total, proposals


def build_jump_law(model, t):
    return JumpLaw(model, t)


def algorithm1_sample(jump_law, xi, rng):
    """Draw from f_xi via the beta/Pareto envelope; returns (w, iterations)."""
    return jump_law.sample_radial(xi, rng, algorithm="mll")


def algorithm2_sample(jump_law, xi, rng):
    """Draw from f_xi via the generalized gamma envelope; returns (w, iterations)."""
    return jump_law.sample_radial(xi, rng, algorithm="gga")


def sample_H(jump_law, rng):
    """One jump (xi, W) from H."""
    xi, w, _ = jump_law.sample(rng)
    return xi, w
