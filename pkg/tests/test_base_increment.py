import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from tsou._quad import integrate_halfline
from tsou.base_increment import (
    BaseIncrementSpec,
    check_against_tolerance,
    eps_for_error_target,
    esscher_acceptance_rate,
    esscher_tweedie_sample,
    esscher_tweedie_sample_many,
    series_thinning_sample,
    truncation_error_bound,
)
from tsou.dist_basic import RngStream
from tsou.errors import ConfigError, UnsupportedRegimeError
from tsou.models_pt import pt_build
from tsou.tempering import (
    DIR_POS,
    SphericalMeasure,
    TemperingSpec,
    TsouModel,
)
from tsou.ou_transition import limiting_cf
from tsou.validation import ecf_distance, two_sample_ks


def _single_direction_spec(weight, tempering, eps, tail_compensation=True, alpha=0.5):
    sigma = SphericalMeasure(((DIR_POS, weight),))
    return BaseIncrementSpec(
        alpha=alpha, sigma0=sigma, tempering=tempering, trunc_eps=eps,
        tail_compensation=tail_compensation,
    )


# ---------------------------------------------------------------------------
# truncation bookkeeping


def test_truncation_bound_arithmetic():
    spec = _single_direction_spec(
        1.0, TemperingSpec.constant_one(), 1e-8, tail_compensation=False
    )
    assert truncation_error_bound(spec) == pytest.approx(2e-4, rel=1e-12)


def test_truncation_bound_scaling():
    spec1 = _single_direction_spec(1.0, TemperingSpec.constant_one(), 1e-6, False, alpha=0.4)
    spec2 = _single_direction_spec(1.0, TemperingSpec.constant_one(), 5e-7, False, alpha=0.4)
    ratio = truncation_error_bound(spec2) / truncation_error_bound(spec1)
    assert ratio == pytest.approx(2.0 ** -(1.0 - 0.4), rel=1e-12)
    # monotone in eps
    bounds = [
        truncation_error_bound(
            _single_direction_spec(1.0, TemperingSpec.constant_one(), e, False)
        )
        for e in (1e-4, 1e-6, 1e-8)
    ]
    assert bounds[0] > bounds[1] > bounds[2] > 0.0


def test_eps_for_error_target_roundtrip():
    eps = eps_for_error_target(0.55, 0.02, 1e-6)
    spec = _single_direction_spec(0.02, TemperingSpec.constant_one(), eps, False, alpha=0.55)
    assert truncation_error_bound(spec) == pytest.approx(1e-6, rel=1e-10)


def test_tolerance_guard():
    spec = _single_direction_spec(1.0, TemperingSpec.constant_one(), 1e-4, False)
    with pytest.raises(ConfigError):
        check_against_tolerance(spec, 1e-8)


def test_alpha_regime_guard():
    with pytest.raises(UnsupportedRegimeError):
        _single_direction_spec(1.0, TemperingSpec.constant_one(), 1e-6, alpha=1.2)


# ---------------------------------------------------------------------------
# stable sanity: q == 1 gives the one-sided stable law


def test_series_stable_laplace_transform():
    alpha, w = 0.5, 0.15
    eps = eps_for_error_target(alpha, w, 1e-6)
    spec = _single_direction_spec(w, TemperingSpec.constant_one(), eps, alpha=alpha)
    rng = RngStream(seed=50)
    n = 200_000
    draws = np.array([series_thinning_sample(spec, rng)[0] for _ in range(n)])
    assert np.all(draws > 0)
    for lam in (0.5, 1.0, 2.0):
        target = math.exp(w * gamma_fn(-alpha) * lam ** alpha)
        second = math.exp(w * gamma_fn(-alpha) * (2 * lam) ** alpha)
        se = math.sqrt(max(second - target ** 2, 0.0) / n)
        assert abs(np.mean(np.exp(-lam * draws)) - target) < 4.0 * se


# ---------------------------------------------------------------------------
# thinning statistics


def test_thinned_count_mean_matches_intensity():
    # PT: expected thinned mass above a vanishing cutoff tends to
    # 2 c (1 - e^{-alpha lam t})
    model = pt_build(0.55, 1.0, 1.0, lam=1.0)
    t = 0.1
    factor = -math.expm1(-0.55 * 1.0 * t)
    sigma0 = model.sigma.scaled(factor)
    spec = BaseIncrementSpec(
        alpha=0.55, sigma0=sigma0, tempering=model.tempering, trunc_eps=1e-9
    )
    eta0 = 2.0 * 1.0 * factor
    # quadrature oracle for the same quantity
    w_dir = sigma0.weight(DIR_POS)
    eta_quad = 2.0 * w_dir * integrate_halfline(
        lambda u: (1.0 - model.tempering.q(DIR_POS, u)) * u ** (-1.55),
        lower=1e-9,
    )
    assert eta_quad == pytest.approx(eta0, rel=1e-4)
    rng = RngStream(seed=51)
    n = 4000
    thinned = np.empty(n)
    for i in range(n):
        _, diag = series_thinning_sample(spec, rng, collect=True)
        thinned[i] = diag.thinned
    se = math.sqrt(eta0 / n)  # Poisson variance = mean
    assert abs(thinned.mean() - eta0) < 4.0 * se


def test_counts_above_cutoff_are_poisson():
    alpha, w, zeta = 0.5, 0.4, 1.0
    cutoff = 0.05
    spec = _single_direction_spec(
        w, TemperingSpec.classical({DIR_POS: zeta}, p=1.0), cutoff, False, alpha=alpha
    )
    kept_mean = integrate_halfline(
        lambda u: math.exp(-zeta * u) * w * u ** (-1.0 - alpha), lower=cutoff
    )
    thinned_mean = integrate_halfline(
        lambda u: -math.expm1(-zeta * u) * w * u ** (-1.0 - alpha), lower=cutoff
    )
    rng = RngStream(seed=52)
    n = 10_000
    kept = np.empty(n)
    thinned = np.empty(n)
    for i in range(n):
        _, diag = series_thinning_sample(spec, rng, collect=True)
        kept[i] = diag.kept
        thinned[i] = diag.thinned
    for counts, mean in ((kept, kept_mean), (thinned, thinned_mean)):
        assert abs(counts.mean() - mean) < 4.0 * math.sqrt(mean / n)
        # equidispersion within 4 sigma (var of sample variance ~ 2 mu^2/n)
        assert abs(counts.var() / counts.mean() - 1.0) < 4.0 * math.sqrt(2.0 / n) + 0.02


# ---------------------------------------------------------------------------
# characteristic function of the output


def test_series_matches_levy_exponent():
    model = pt_build(0.55, 1.0, 1.0, lam=1.0)
    t = 0.1
    factor = -math.expm1(-0.55 * t)
    sigma0 = model.sigma.scaled(factor)
    spec = BaseIncrementSpec(
        alpha=0.55, sigma0=sigma0, tempering=model.tempering,
        trunc_eps=eps_for_error_target(0.55, sigma0.total_mass, 1e-5),
    )
    base_model = TsouModel(
        alpha=0.55, lam=1.0, sigma=sigma0, tempering=model.tempering
    )
    cf = limiting_cf(base_model)
    rng = RngStream(seed=53)
    n = 100_000
    draws = np.array([series_thinning_sample(spec, rng)[0] for _ in range(n)])
    z = np.concatenate([np.linspace(-6.0, -0.5, 10), np.linspace(0.5, 6.0, 10)])
    assert ecf_distance(draws, cf, z) < 4.0 / math.sqrt(n)


# ---------------------------------------------------------------------------
# coupling and determinism


def test_monotone_coupling_in_eps():
    tempering = TemperingSpec.classical({DIR_POS: 0.5}, p=1.0)
    values = []
    for eps in (1e-3, 1e-5, 1e-7):
        spec = _single_direction_spec(0.3, tempering, eps, tail_compensation=False)
        rng = RngStream(seed=54, stream_id=3)
        values.append(series_thinning_sample(spec, rng)[0])
    assert values[0] <= values[1] <= values[2]
    # and with compensation the ladder still converges to the same place
    spec_fine = _single_direction_spec(0.3, tempering, 1e-9, tail_compensation=False)
    rng = RngStream(seed=54, stream_id=3)
    finest = series_thinning_sample(spec_fine, rng)[0]
    assert finest - values[2] < 1e-3
    assert finest >= values[2]


def test_parent_stream_untouched_by_series():
    tempering = TemperingSpec.classical({DIR_POS: 0.5}, p=1.0)
    after = []
    for eps in (1e-3, 1e-7):
        spec = _single_direction_spec(0.3, tempering, eps)
        rng = RngStream(seed=55)
        series_thinning_sample(spec, rng)
        after.append(rng.generator.uniform(size=4))
    assert np.array_equal(after[0], after[1])


def test_series_deterministic():
    model = pt_build(0.55, 1.0, 1.0, lam=1.0)
    sigma0 = model.sigma.scaled(0.05)
    spec = BaseIncrementSpec(
        alpha=0.55, sigma0=sigma0, tempering=model.tempering, trunc_eps=1e-7
    )
    a = series_thinning_sample(spec, RngStream(seed=56))
    b = series_thinning_sample(spec, RngStream(seed=56))
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# the Esscher oracle


def test_esscher_zero_tilt_is_stable():
    rng1 = RngStream(seed=57)
    rng2 = RngStream(seed=57)
    from tsou.dist_basic import positive_stable_sample_many

    direct = positive_stable_sample_many(0.5, 0.2, 50, rng2)
    tilted = np.array([esscher_tweedie_sample(0.5, 0.0, 0.2, rng1) for _ in range(50)])
    assert np.allclose(direct, tilted)


def test_esscher_acceptance_rate():
    alpha, zeta, w = 0.5, 1.0, 0.1
    rate = esscher_acceptance_rate(alpha, zeta, w)
    assert rate == pytest.approx(math.exp(w * gamma_fn(-alpha)), rel=1e-12)
    rng = RngStream(seed=58)
    n = 1_000_000
    from tsou.dist_basic import positive_stable_sample_many

    s = positive_stable_sample_many(alpha, w, n, rng)
    accepted = np.mean(rng.generator.uniform(size=n) <= np.exp(-zeta * s))
    se = math.sqrt(rate * (1.0 - rate) / n)
    assert abs(accepted - rate) < 4.0 * se


def test_series_equals_esscher_on_tweedie():
    # the module's central correctness check
    alpha, zeta, w = 0.5, 1.0, 0.1
    n = 100_000
    eps = eps_for_error_target(alpha, w, 1e-4)
    spec = _single_direction_spec(
        w, TemperingSpec.classical({DIR_POS: zeta}, p=1.0), eps, alpha=alpha
    )
    rng = RngStream(seed=59)
    series = np.array([series_thinning_sample(spec, rng)[0] for _ in range(n)])
    oracle = esscher_tweedie_sample_many(alpha, zeta, w, n, RngStream(seed=60))
    assert two_sample_ks(series, oracle) < 0.0073


def test_esscher_rejects_negative_tilt():
    with pytest.raises(Exception):
        esscher_tweedie_sample(0.5, -1.0, 1.0, RngStream(seed=61))
