"""Validation oracles: characteristic-function inversion, Kolmogorov-Smirnov
statistics, empirical-CF distances, and envelope domination scans.

Everything here is deliberately independent of the sampler code paths it
certifies: only quadrature, FFTs, and closed forms.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError


@dataclass
class CfHandle:
    """A characteristic function z -> complex, vectorized over 1-d arrays.

    `decay_alpha` is an optional integrability hint (tail index of the
    underlying law); it is informational only.
    """

    fn: object
    dim: int = 1
    decay_alpha: float | None = None

    def __call__(self, z):
        return self.fn(z)


# ---------------------------------------------------------------------------
# CF inversion


def _find_truncation(cf, cf_tol, z_cap=2.0 ** 40):
    """Doubling search for Z with |cf| < cf_tol on [Z, 2Z] (spot-checked)."""
    z = 1.0
    while z < z_cap:
        probes = np.linspace(z, 2.0 * z, 9)
        if np.max(np.abs(cf(probes))) < cf_tol:
            return z
        z *= 2.0
    raise NumericError("CF modulus does not fall below tolerance; cannot truncate")


@dataclass
class InvertedDensity:
    """Density/cdf of a univariate law recovered from its CF on a dense grid."""

    x: np.ndarray
    pdf_values: np.ndarray
    cdf_values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cdf_values is None:
            dx = self.x[1] - self.x[0]
            c = np.concatenate(
                [[0.0], np.cumsum(0.5 * (self.pdf_values[1:] + self.pdf_values[:-1]) * dx)]
            )
            total = c[-1]
            if total <= 0:
                raise NumericError("inverted density has nonpositive mass")
            self.cdf_values = np.clip(c / total, 0.0, 1.0)
            self.mass = total

    def pdf(self, x):
        return np.interp(x, self.x, self.pdf_values, left=0.0, right=0.0)

    def cdf(self, x):
        return np.interp(x, self.x, self.cdf_values, left=0.0, right=1.0)


def invert_cf(cf, x_max, *, cf_tol=1e-8, n_min=2 ** 20, n_cap=2 ** 25):
    """Invert a univariate CF onto a dense symmetric grid covering [-x_max, x_max].

    The CF is evaluated on a uniform z-grid out to the truncation point found
    by doubling search, then transformed with a single FFT.  The x-period is
    at least 4*x_max so that aliasing from wrapped tails is negligible for
    laws essentially supported inside the window.
    """
    z_star = _find_truncation(cf, cf_tol)
    x_per = max(4.0 * (x_max + 10.0), 512.0)
    dz = 2.0 * np.pi / x_per
    n = 1
    while n < max(n_min, int(np.ceil(2.0 * z_star / dz))):
        n *= 2
    if n > n_cap:
        raise NumericError(
            f"CF inversion grid would need {n} points (truncation {z_star:g}); "
            "tail decays too slowly"
        )
    j = np.arange(n)
    z = (j - n // 2) * dz
    vals = np.empty(n, dtype=complex)
    # evaluate in chunks and zero out the region beyond the certified truncation
    chunk = 1 << 18
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        vals[lo:hi] = cf(z[lo:hi])
    vals[np.abs(z) > 2.0 * z_star] = 0.0
    # f(x_k) = (dz/2pi) * sum_j cf(z_j) exp(-i z_j x_k)
    x = np.fft.fftshift(np.fft.fftfreq(n, d=dz / (2.0 * np.pi)))
    pdf = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(vals))).real * dz / (2.0 * np.pi)
    keep = np.abs(x) <= x_max
    return InvertedDensity(x=x[keep], pdf_values=np.maximum(pdf[keep], 0.0))


def cf_invert(cf, x_grid, *, cf_tol=1e-8):
    """Density values on x_grid by numeric inversion of a univariate CF."""
    x_grid = np.asarray(x_grid, dtype=float)
    dens = invert_cf(cf, float(np.max(np.abs(x_grid))) + 1.0, cf_tol=cf_tol)
    return dens.pdf(x_grid)


# ---------------------------------------------------------------------------
# KS statistics


def ks_statistic(samples, cdf):
    """Exact sup-distance between the empirical cdf of samples and `cdf`."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 10:
        raise ParameterError("need at least 10 samples for a KS statistic")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def two_sample_ks(a, b):
    """Exact two-sample KS sup-distance."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < 10 or b.size < 10:
        raise ParameterError("need at least 10 samples per side")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_threshold(n, level=0.99):
    """Asymptotic one-sample KS critical value (1.63/sqrt(n) at 99%)."""
    coeff = {0.99: 1.63, 0.95: 1.36}[level]
    return coeff / np.sqrt(n)


def two_sample_ks_threshold(n, m, level=0.99):
    coeff = {0.99: 1.63, 0.95: 1.36}[level]
    return coeff * np.sqrt((n + m) / (n * m))


# ---------------------------------------------------------------------------
# empirical CF distance


def ecf_distance(samples, cf, z_grid):
    """max_z | mean_j exp(i<z, X_j>) - cf(z) | over the grid.

    samples: (n,) for d=1 or (n, d); z_grid: (m,) or (m, d) to match.
    """
    samples = np.asarray(samples, dtype=float)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size == 0:
        raise ParameterError("z grid must be nonempty")
    if samples.ndim == 1:
        phases = np.exp(1j * np.outer(z_grid, samples))
        emp = phases.mean(axis=1)
        ref = np.asarray(cf(z_grid), dtype=complex)
    else:
        emp = np.array(
            [np.mean(np.exp(1j * samples @ z)) for z in np.atleast_2d(z_grid)]
        )
        ref = np.array([complex(cf(z)) for z in np.atleast_2d(z_grid)])
    return float(np.max(np.abs(emp - ref)))


# ---------------------------------------------------------------------------
# envelope scans


@dataclass(frozen=True)
class EnvelopeScanResult:
    worst_slack: float          # min over grid of V*g(u) - f(u)
    worst_relative_slack: float  # same, scaled by V*g(u) pointwise
    argmin_u: float

    @property
    def dominated(self):
        return self.worst_relative_slack >= -1e-12


def envelope_scan(f, v_const, g, u_grid):
    """Check f(u) <= V*g(u) on a grid; negative slack is reported, not raised."""
    u = np.asarray(u_grid, dtype=float)
    fu = np.asarray(f(u), dtype=float)
    bound = v_const * np.asarray(g(u), dtype=float)
    slack = bound - fu
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(bound > 0.0, slack / bound, np.where(fu > 0.0, -np.inf, 0.0))
    k = int(np.argmin(rel))
    return EnvelopeScanResult(
        worst_slack=float(np.min(slack)),
        worst_relative_slack=float(rel[k]),
        argmin_u=float(u[k]),
    )


# ---------------------------------------------------------------------------
# kernel density estimate (for figure-style comparisons)


def kde_gaussian(samples, x_grid, bandwidth=None):
    """Gaussian KDE with a Silverman-style bandwidth default."""
    s = np.asarray(samples, dtype=float)
    n = s.size
    if bandwidth is None:
        sd = np.std(s)
        iqr = np.subtract(*np.percentile(s, [75, 25]))
        scale = min(sd, iqr / 1.34) if iqr > 0 else sd
        bandwidth = 0.9 * scale * n ** (-0.2)
    x = np.asarray(x_grid, dtype=float)
    out = np.zeros_like(x)
    chunk = max(1, int(5e7) // max(x.size, 1))
    for lo in range(0, n, chunk):
        block = s[lo:lo + chunk]
        out += np.exp(-0.5 * ((x[:, None] - block[None, :]) / bandwidth) ** 2).sum(axis=1)
    return out / (n * bandwidth * np.sqrt(2.0 * np.pi))
