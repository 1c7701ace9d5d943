"""Model algebra for tempered stable laws: tempering functions, spherical
and Rosinski measures, the jump-mass constant K, and Class-F certificates.

A model is TsouModel(alpha, lam, sigma, tempering, b); the tempering
function q(xi, u) comes in five flavours:

  constant-one        q == 1 (stable, no tempering)
  hard-truncation     q(xi, u) = 1[u <= gamma_xi]
  classical           q(xi, u) = exp(-zeta_xi * u**p)
  p-mixture           q(xi, u) = int exp(-s u**p) Q_xi(ds)
  power               p-mixture specialization with a polynomial mixing
                      density (built by models_pt)

Classical is stored as a point-mass mixture, so all mixture-backed
variants share one evaluation path.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from ._quad import integrate_halfline
from .errors import ParameterError, UnsupportedRegimeError

INFINITE_K = math.inf

CONSTANT_ONE = "constant-one"
HARD_TRUNCATION = "hard-truncation"
CLASSICAL = "classical"
P_MIXTURE = "p-mixture"
POWER = "power"

_MIXTURE_VARIANTS = (CLASSICAL, P_MIXTURE, POWER)

# spot-check grid for the boundedness/monotonicity assumptions on q
_Q_CHECK_GRID = np.logspace(-6.0, 6.0, 25)


# ---------------------------------------------------------------------------
# directions and spherical measures


@dataclass(frozen=True)
class Direction:
    """A unit vector in R^d, hashable so per-direction tables can key on it."""

    coords: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        object.__setattr__(self, "coords", c)
        norm = math.sqrt(sum(v * v for v in c))
        if abs(norm - 1.0) > 1e-12:
            raise ParameterError(f"direction must have unit norm, got |x| = {norm!r}")

    @property
    def vector(self):
        return np.asarray(self.coords, dtype=float)

    @property
    def dim(self):
        return len(self.coords)


def direction(*coords):
    return Direction(tuple(coords))


DIR_POS = direction(1.0)
DIR_NEG = direction(-1.0)


@dataclass(frozen=True)
class SphericalMeasure:
    """Finite atomic measure on the unit sphere: ((Direction, weight), ...)."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((xi, float(w)) for xi, w in self.atoms)
        if not atoms:
            raise ParameterError("spherical measure needs at least one atom")
        dim = atoms[0][0].dim
        seen = set()
        for xi, w in atoms:
            if not isinstance(xi, Direction):
                raise ParameterError("atoms must be keyed by Direction")
            if xi.dim != dim:
                raise ParameterError("all atoms must share one dimension")
            if xi.coords in seen:
                raise ParameterError(f"duplicate atom at {xi.coords}")
            seen.add(xi.coords)
            if not (w > 0.0 and np.isfinite(w)):
                raise ParameterError(f"atom weights must be positive finite, got {w}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dim(self):
        return self.atoms[0][0].dim

    @property
    def directions(self):
        return tuple(xi for xi, _ in self.atoms)

    @property
    def total_mass(self):
        return sum(w for _, w in self.atoms)

    def weight(self, xi):
        for d, w in self.atoms:
            if d == xi:
                return w
        raise ParameterError(f"{xi} is not an atom of this measure")

    def scaled(self, factor):
        if factor <= 0.0:
            raise ParameterError("scale factor must be positive")
        return SphericalMeasure(tuple((xi, w * factor) for xi, w in self.atoms))


# ---------------------------------------------------------------------------
# radial mixing measures Q_xi


class RadialMixture:
    """A probability measure Q on (0, inf) mixing exp(-s u**p) kernels.

    Either a finite atom list ((s_i, w_i), ...) with weights summing to 1,
    or a density with optional fast hooks:

      laplace_fn(x)              -> int exp(-s x) Q(ds), vectorized
      laplace_diff_fn(x, kappa)  -> int (exp(-s x) - exp(-s x kappa)) Q(ds)
      moment_fn(r)               -> int s**r Q(ds) (may return inf)
      sampler_fn(n, generator)   -> n draws of s ~ Q

    Hooked evaluations must agree with direct quadrature of the density;
    the test suite enforces this to 1e-9.
    """

    def __init__(self, atoms=None, density=None, support_lower=None,
                 laplace_fn=None, laplace_diff_fn=None, moment_fn=None,
                 sampler_fn=None, check_mass=True):
        if (atoms is None) == (density is None):
            raise ParameterError("provide exactly one of atoms or density")
        self.density = density
        self.laplace_fn = laplace_fn
        self.laplace_diff_fn = laplace_diff_fn
        self.moment_fn = moment_fn
        self.sampler_fn = sampler_fn
        self._moments = {}
        if atoms is not None:
            atoms = tuple((float(s), float(w)) for s, w in atoms)
            for s, w in atoms:
                if s <= 0.0 or w <= 0.0:
                    raise ParameterError("atom locations and weights must be positive")
            total = sum(w for _, w in atoms)
            if abs(total - 1.0) > 1e-12:
                raise ParameterError(f"atom weights must sum to 1, got {total!r}")
            self.atoms = atoms
            self.support_lower = min(s for s, _ in atoms)
        else:
            self.atoms = None
            if support_lower is None:
                raise ParameterError("density mixtures must declare support_lower")
            self.support_lower = float(support_lower)
            if check_mass:
                mass = self.moment(0.0)
                if abs(mass - 1.0) > 1e-6:
                    raise ParameterError(f"mixture density mass {mass!r} != 1")

    # -- moments ----------------------------------------------------------

    def moment(self, r):
        """int s**r Q(ds); returns inf when the integral diverges."""
        r = float(r)
        if r in self._moments:
            return self._moments[r]
        if self.atoms is not None:
            val = sum(w * s ** r for s, w in self.atoms)
        elif self.moment_fn is not None:
            val = float(self.moment_fn(r))
        else:
            val = self._density_moment(r)
        self._moments[r] = val
        return val

    def _density_moment(self, r):
        """Moment of a density mixture; classifies divergent tails by the
        decay of successive two-decade block masses."""
        f = lambda s: s ** r * self.density(s)
        lo = max(self.support_lower, 0.0)
        total = integrate_halfline(f, lower=lo, upper=1e6)
        blocks = []
        edges = 10.0 ** np.arange(6, 27, 2)
        for a, b in zip(edges[:-1], edges[1:]):
            blocks.append(integrate_halfline(f, lower=a, upper=b))
        blocks = np.array(blocks)
        if blocks[-1] > 1e-14 * max(total, 1e-300):
            ratio = blocks[-1] / blocks[-2] if blocks[-2] > 0 else 1.0
            if ratio > 0.7:
                return math.inf
            # geometric remainder for asymptotically power-law tails
            total += blocks[-1] * ratio / (1.0 - ratio)
        return total + blocks.sum()

    # -- Laplace transform and tempering difference ------------------------

    def laplace(self, x):
        """int exp(-s x) Q(ds) for x >= 0, vectorized."""
        x = np.asarray(x, dtype=float)
        if self.atoms is not None:
            out = np.zeros_like(x)
            for s, w in self.atoms:
                out += w * np.exp(-s * x)
        elif self.laplace_fn is not None:
            out = np.asarray(self.laplace_fn(x), dtype=float)
        else:
            out = np.vectorize(
                lambda xx: quad(lambda s: np.exp(-s * xx) * self.density(s),
                                self.support_lower, np.inf,
                                epsabs=1e-10, epsrel=1e-10, limit=200)[0]
            )(x)
        return out if out.ndim else float(out)

    def laplace_diff(self, x, kappa):
        """int (exp(-s x) - exp(-s x kappa)) Q(ds), evaluated without
        catastrophic cancellation for small x (kappa > 1)."""
        x = np.asarray(x, dtype=float)
        if self.atoms is not None:
            out = np.zeros_like(x)
            for s, w in self.atoms:
                out += w * np.exp(-s * x) * (-np.expm1(-s * x * (kappa - 1.0)))
        elif self.laplace_diff_fn is not None:
            out = np.asarray(self.laplace_diff_fn(x, kappa), dtype=float)
        else:
            def one(xx):
                return quad(
                    lambda s: np.exp(-s * xx)
                    * (-np.expm1(-s * xx * (kappa - 1.0)))
                    * self.density(s),
                    self.support_lower, np.inf,
                    epsabs=1e-12, epsrel=1e-10, limit=200,
                )[0]

            out = np.vectorize(one)(x)
        return out if out.ndim else float(out)

    def sample(self, n, generator):
        """n draws of s ~ Q; None when no exact sampler is available."""
        if self.atoms is not None:
            locs = np.array([s for s, _ in self.atoms])
            probs = np.array([w for _, w in self.atoms])
            return locs[generator.choice(len(locs), size=int(n), p=probs)]
        if self.sampler_fn is not None:
            return np.asarray(self.sampler_fn(int(n), generator), dtype=float)
        return None


# ---------------------------------------------------------------------------
# tempering specifications


@dataclass(frozen=True)
class TemperingSpec:
    """Tagged tempering function with per-direction payload.

    Use the constructors `constant_one`, `hard_truncation`, `classical`,
    and `p_mixture` rather than building instances directly.
    """

    variant: str
    p: float = None
    gammas: tuple = None        # ((Direction, gamma), ...) for hard truncation
    mixtures: tuple = None      # ((Direction, RadialMixture), ...) for mixtures
    meta: tuple = ()            # extra tags, e.g. (("ell", 1.0),) for power

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant_one():
        return TemperingSpec(variant=CONSTANT_ONE)

    @staticmethod
    def hard_truncation(gammas):
        items = tuple((xi, float(g)) for xi, g in dict(gammas).items())
        for xi, g in items:
            if g <= 0.0:
                raise ParameterError("truncation levels must be positive")
        spec = TemperingSpec(variant=HARD_TRUNCATION, gammas=items)
        spec._check_assumptions()
        return spec

    @staticmethod
    def classical(zetas, p):
        if p <= 0.0:
            raise ParameterError("tempering power p must be positive")
        items = tuple(
            (xi, RadialMixture(atoms=((float(z), 1.0),)))
            for xi, z in dict(zetas).items()
        )
        spec = TemperingSpec(variant=CLASSICAL, p=float(p), mixtures=items)
        spec._check_assumptions()
        return spec

    @staticmethod
    def p_mixture(mixtures, p, variant=P_MIXTURE, meta=()):
        if p <= 0.0:
            raise ParameterError("tempering power p must be positive")
        if variant not in (P_MIXTURE, POWER):
            raise ParameterError(f"unknown mixture variant {variant!r}")
        items = tuple(dict(mixtures).items())
        spec = TemperingSpec(variant=variant, p=float(p), mixtures=items,
                             meta=tuple(meta))
        spec._check_assumptions()
        return spec

    # -- lookup ------------------------------------------------------------

    @property
    def is_p_tempered(self):
        return self.variant in _MIXTURE_VARIANTS

    @property
    def directions(self):
        if self.variant == HARD_TRUNCATION:
            return tuple(xi for xi, _ in self.gammas)
        if self.is_p_tempered:
            return tuple(xi for xi, _ in self.mixtures)
        return None  # constant-one applies everywhere

    def gamma_for(self, xi):
        for d, g in self.gammas:
            if d == xi:
                return g
        raise ParameterError(f"{xi} has no truncation level")

    def mixture_for(self, xi):
        for d, m in self.mixtures:
            if d == xi:
                return m
        raise ParameterError(f"{xi} has no mixing measure")

    # -- evaluation --------------------------------------------------------

    def q(self, xi, u):
        """q(xi, u), vectorized over u > 0."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0):
            raise ParameterError("q is defined for u > 0 only")
        if self.variant == CONSTANT_ONE:
            out = np.ones_like(u)
        elif self.variant == HARD_TRUNCATION:
            out = (u <= self.gamma_for(xi)).astype(float)
        else:
            out = self.mixture_for(xi).laplace(u ** self.p)
        return out if np.ndim(out) else float(out)

    def q_diff(self, xi, u, scale):
        """q(xi, u) - q(xi, u*scale) for scale > 1, cancellation-safe."""
        u = np.asarray(u, dtype=float)
        if self.variant == CONSTANT_ONE:
            out = np.zeros_like(u)
        elif self.variant == HARD_TRUNCATION:
            g = self.gamma_for(xi)
            out = ((u <= g) & (u * scale > g)).astype(float)
        else:
            out = self.mixture_for(xi).laplace_diff(u ** self.p, scale ** self.p)
        return out if np.ndim(out) else float(out)

    def _check_assumptions(self):
        """Spot-assert 0 <= q <= 1 and monotone decay on a log grid."""
        dirs = self.directions
        if dirs is None:
            return
        for xi in dirs:
            vals = np.atleast_1d(self.q(xi, _Q_CHECK_GRID))
            if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-9):
                raise ParameterError(f"tempering values leave [0,1] for {xi}")
            if np.any(np.diff(vals) > 1e-9):
                raise ParameterError(f"tempering is not nonincreasing for {xi}")


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class TsouModel:
    """Tempered stable OU model: stability alpha in (0,2), mean reversion
    lam > 0, spherical measure sigma, tempering spec, shift b (tuple)."""

    alpha: float
    lam: float
    sigma: SphericalMeasure
    tempering: TemperingSpec
    b: tuple = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ParameterError(f"alpha must lie in (0,2), got {self.alpha}")
        if not self.lam > 0.0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        b = self.b if self.b is not None else (0.0,) * self.sigma.dim
        b = tuple(float(v) for v in np.atleast_1d(b))
        if len(b) != self.sigma.dim:
            raise ParameterError("shift dimension does not match sigma")
        object.__setattr__(self, "b", b)
        covered = self.tempering.directions
        if covered is not None:
            missing = [xi for xi in self.sigma.directions if xi not in covered]
            if missing:
                raise ParameterError(f"tempering lacks payload for {missing}")

    @property
    def dim(self):
        return self.sigma.dim

    @property
    def shift(self):
        return np.asarray(self.b, dtype=float)


def _check_exp_scale(model, t):
    p = model.tempering.p or 1.0
    if p * model.lam * t > 700.0:
        raise ParameterError(
            f"exp({p * model.lam * t:g}) overflows double precision; "
            "reduce lam*t or the tempering power"
        )


# ---------------------------------------------------------------------------
# operations


def q_eval(spec, xi, u):
    """Evaluate the tempering function q(xi, u); exact for non-density
    variants, quadrature (or a certified fast hook) for density mixtures."""
    return spec.q(xi, u)


def lemma3_integral(alpha, p, kappa):
    """Closed form of int_0^inf (exp(-u**p) - exp(-u**p * kappa)) u**(-1-alpha) du
    for 0 < alpha < p and kappa >= 1:  Gamma(1 - alpha/p) (kappa**(alpha/p) - 1) / alpha.
    """
    if not p > alpha > 0.0:
        raise ParameterError(f"need p > alpha > 0, got alpha={alpha}, p={p}")
    if kappa < 1.0:
        raise ParameterError(f"kappa must be >= 1, got {kappa}")
    r = alpha / p
    return gamma_fn(1.0 - r) * math.expm1(r * math.log(kappa)) / alpha


def compute_K(model, t):
    """Total jump-law mass K for the time-t transition of the model.

    Returns 0.0 for constant-one tempering, a closed form for mixture and
    hard-truncation variants, and INFINITE_K (math.inf) when p <= alpha or
    the mixing measure has an infinite fractional moment.
    """
    if t <= 0.0:
        raise ParameterError("t must be positive")
    _check_exp_scale(model, t)
    spec = model.tempering
    a = model.alpha
    lt = model.lam * t
    if spec.variant == CONSTANT_ONE:
        return 0.0
    if spec.variant == HARD_TRUNCATION:
        total = sum(
            w * spec.gamma_for(xi) ** (-a) for xi, w in model.sigma.atoms
        )
        return total * math.expm1(a * lt) / a
    p = spec.p
    if p <= a:
        return INFINITE_K
    r_mass = 0.0
    for xi, w in model.sigma.atoms:
        m = spec.mixture_for(xi).moment(a / p)
        if not np.isfinite(m):
            return INFINITE_K
        r_mass += w * m
    return r_mass * gamma_fn(1.0 - a / p) * math.expm1(a * lt) / a


def compute_K_quadrature(model, t):
    """Oracle twin of compute_K: direct double quadrature of the defining
    integral.  Used to certify the closed forms."""
    a = model.alpha
    scale = math.exp(model.lam * t)
    spec = model.tempering
    total = 0.0
    for xi, w in model.sigma.atoms:
        pts = None
        if spec.variant == HARD_TRUNCATION:
            g = spec.gamma_for(xi)
            pts = [g / scale, g]
        total += w * integrate_halfline(
            lambda u: spec.q_diff(xi, u, scale) * u ** (-1.0 - a), points=pts
        )
    return total


def rosinski_mass(model):
    """Total mass of the Rosinski measure, sum_xi w_xi int s**(a/p) Q_xi(ds)."""
    spec = model.tempering
    if not spec.is_p_tempered:
        raise UnsupportedRegimeError("Rosinski mass is defined for mixture tempering")
    r = model.alpha / spec.p
    return sum(w * spec.mixture_for(xi).moment(r) for xi, w in model.sigma.atoms)


# ---------------------------------------------------------------------------
# Rosinski measures


@dataclass(frozen=True)
class RosinskiMeasure:
    """Mixing measure R on R^d \\ {0} parameterizing a p-tempered alpha-stable
    law.  Either finite atoms ((coords tuple, weight), ...) or per-direction
    radial densities ((Direction, density callable), ...)."""

    alpha: float
    p: float
    atoms: tuple = None
    radial: tuple = None

    def __post_init__(self):
        if (self.atoms is None) == (self.radial is None):
            raise ParameterError("provide exactly one of atoms or radial densities")
        if self.atoms is not None:
            atoms = []
            for coords, w in self.atoms:
                x = np.asarray(coords, dtype=float)
                r = float(np.linalg.norm(x))
                if r == 0.0:
                    raise ParameterError("Rosinski measures carry no mass at 0")
                if w <= 0.0:
                    raise ParameterError("atom weights must be positive")
                atoms.append((tuple(x), float(w)))
            object.__setattr__(self, "atoms", tuple(atoms))

    def total_mass(self):
        if self.atoms is not None:
            return sum(w for _, w in self.atoms)
        return sum(
            integrate_halfline(dens, upper=np.inf) for _, dens in self.radial
        )

    def alpha_moment(self):
        """int |x|**alpha R(dx); must be finite for a valid measure."""
        if self.atoms is not None:
            return sum(
                np.linalg.norm(x) ** self.alpha * w for x, w in self.atoms
            )
        return sum(
            integrate_halfline(lambda r: r ** self.alpha * dens(r))
            for _, dens in self.radial
        )


def decompose_rosinski(rosinski):
    """Split R into the spherical measure sigma and the per-direction mixing
    family {Q_xi}.

    sigma accumulates |x|**alpha * weight at x/|x|; the radial part maps
    through s = |x|**(-p) with the same |x|**alpha weighting and is then
    normalized per direction.
    """
    a, p = rosinski.alpha, rosinski.p
    if rosinski.atoms is not None:
        sigma_w = {}
        radial_atoms = {}
        for coords, w in rosinski.atoms:
            x = np.asarray(coords, dtype=float)
            r = float(np.linalg.norm(x))
            xi = Direction(tuple(x / r))
            mass = r ** a * w
            sigma_w[xi] = sigma_w.get(xi, 0.0) + mass
            radial_atoms.setdefault(xi, []).append((r ** (-p), mass))
        sigma = SphericalMeasure(tuple(sigma_w.items()))
        mixtures = {}
        for xi, pairs in radial_atoms.items():
            total = sigma_w[xi]
            merged = {}
            for s, m in pairs:
                merged[s] = merged.get(s, 0.0) + m / total
            mixtures[xi] = RadialMixture(atoms=tuple(sorted(merged.items())))
        return sigma, mixtures

    sigma_atoms = []
    mixtures = {}
    for xi, dens in rosinski.radial:
        sigma_w = integrate_halfline(lambda r: r ** a * dens(r))
        sigma_atoms.append((xi, sigma_w))

        def q_density(s, dens=dens, norm=sigma_w):
            r = s ** (-1.0 / p)
            return dens(r) * s ** (-(a + p + 1.0) / p) / (p * norm)

        mixtures[xi] = RadialMixture(density=q_density, support_lower=0.0)
    return SphericalMeasure(tuple(sigma_atoms)), mixtures


def compose_rosinski(sigma, mixtures, alpha, p):
    """Inverse of decompose_rosinski for atomic mixing families."""
    atoms = []
    for xi, w in sigma.atoms:
        mix = mixtures[xi]
        if mix.atoms is None:
            raise ParameterError("compose_rosinski requires atomic mixtures")
        for s, q_w in mix.atoms:
            point = tuple(xi.vector * s ** (-1.0 / p))
            atoms.append((point, s ** (alpha / p) * w * q_w))
    return RosinskiMeasure(alpha=alpha, p=p, atoms=tuple(atoms))


# ---------------------------------------------------------------------------
# Class F


@dataclass(frozen=True)
class ClassFCertificate:
    """Local power-Hoelder certificate enabling the beta/Pareto envelope.

    epsilon is fixed at exp(lam*t) so the envelope scale epsilon*exp(-lam*t)
    is exactly 1; m_const maps each direction to the first moment of its
    mixing measure (the Hoelder constant)."""

    epsilon: float
    m_const: tuple       # ((Direction, M_xi), ...)
    p_exp: float
    valid: bool

    def m_for(self, xi):
        for d, m in self.m_const:
            if d == xi:
                return m
        raise ParameterError(f"{xi} has no certificate entry")


def check_class_f(model, t):
    """Certificate for mixture-tempered models with p > alpha.

    The per-direction constant is the first moment of Q_xi; an infinite
    moment flips the validity flag instead of raising."""
    spec = model.tempering
    if not spec.is_p_tempered:
        raise UnsupportedRegimeError(
            "Class F certification applies to mixture tempering only"
        )
    if not spec.p > model.alpha:
        raise ParameterError("certificate requires tempering power p > alpha")
    entries = []
    valid = True
    for xi, _ in model.sigma.atoms:
        m = spec.mixture_for(xi).moment(1.0)
        entries.append((xi, m))
        if not np.isfinite(m):
            valid = False
    return ClassFCertificate(
        epsilon=math.exp(model.lam * t),
        m_const=tuple(entries),
        p_exp=spec.p,
        valid=valid,
    )
