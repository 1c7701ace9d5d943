import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from tsou.errors import ParameterError, UnsupportedRegimeError
from tsou.tempering import (
    DIR_NEG,
    DIR_POS,
    Direction,
    INFINITE_K,
    RadialMixture,
    RosinskiMeasure,
    SphericalMeasure,
    TemperingSpec,
    TsouModel,
    check_class_f,
    compose_rosinski,
    compute_K,
    compute_K_quadrature,
    decompose_rosinski,
    direction,
    lemma3_integral,
    q_eval,
    rosinski_mass,
)


def _two_atom_mixture():
    return RadialMixture(atoms=((0.5, 0.4), (2.0, 0.6)))


def _model(alpha, lam, spec, weights=((1.0,), 1.0)):
    sigma = SphericalMeasure(((DIR_POS, 1.0),))
    return TsouModel(alpha=alpha, lam=lam, sigma=sigma, tempering=spec)


# ---------------------------------------------------------------------------
# directions / measures


def test_direction_validation():
    with pytest.raises(ParameterError):
        direction(0.5, 0.5)
    d = direction(3.0 / 5.0, 4.0 / 5.0)
    assert d.dim == 2
    assert np.allclose(d.vector, [0.6, 0.8])


def test_spherical_measure_validation():
    with pytest.raises(ParameterError):
        SphericalMeasure(())
    with pytest.raises(ParameterError):
        SphericalMeasure(((DIR_POS, -1.0),))
    with pytest.raises(ParameterError):
        SphericalMeasure(((DIR_POS, 1.0), (DIR_POS, 2.0)))
    m = SphericalMeasure(((DIR_POS, 1.5), (DIR_NEG, 0.5)))
    assert m.total_mass == pytest.approx(2.0)
    assert m.weight(DIR_NEG) == pytest.approx(0.5)
    assert m.scaled(2.0).total_mass == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# mixtures


def test_mixture_atom_validation():
    with pytest.raises(ParameterError):
        RadialMixture(atoms=((1.0, 0.5),))  # weights must sum to 1
    with pytest.raises(ParameterError):
        RadialMixture(atoms=((-1.0, 1.0),))
    mix = _two_atom_mixture()
    assert mix.support_lower == pytest.approx(0.5)
    assert mix.moment(1.0) == pytest.approx(0.4 * 0.5 + 0.6 * 2.0)


def test_mixture_laplace_and_diff_consistency():
    mix = _two_atom_mixture()
    x = np.array([1e-14, 1e-6, 0.3, 5.0])
    kappa = math.exp(0.2)
    direct = mix.laplace(x) - mix.laplace(x * kappa)
    stable = mix.laplace_diff(x, kappa)
    assert np.allclose(stable[2:], direct[2:], rtol=1e-12)
    # small-x expansion: diff ~ x (kappa-1) * mean
    expect = x[:2] * (kappa - 1.0) * mix.moment(1.0)
    assert np.allclose(stable[:2], expect, rtol=1e-5)


def test_mixture_density_moments_match_quadrature():
    dens = lambda s: np.exp(-s)
    mix = RadialMixture(density=dens, support_lower=0.0)
    for r in (0.3, 1.0, 1.7):
        ref = quad(lambda s: s ** r * np.exp(-s), 0, np.inf)[0]
        assert mix.moment(r) == pytest.approx(ref, rel=1e-8)


def test_mixture_density_detects_infinite_mean():
    # density (1+s)**-2 at infinity: unit mass but divergent first moment
    mix = RadialMixture(density=lambda s: (1.0 + s) ** (-2.0), support_lower=0.0)
    assert mix.moment(0.5) < np.inf
    assert mix.moment(1.0) == np.inf


def test_mixture_sampler_for_atoms():
    mix = _two_atom_mixture()
    gen = np.random.Generator(np.random.Philox(1))
    s = mix.sample(20_000, gen)
    assert set(np.unique(s)) == {0.5, 2.0}
    assert abs(np.mean(s == 2.0) - 0.6) < 0.02


# ---------------------------------------------------------------------------
# tempering specs


def test_q_eval_examples():
    classical = TemperingSpec.classical({DIR_POS: 1.0}, p=1.0)
    assert q_eval(classical, DIR_POS, 1.0) == pytest.approx(math.exp(-1.0))
    hard = TemperingSpec.hard_truncation({DIR_POS: 2.0})
    assert q_eval(hard, DIR_POS, 1.0) == 1.0
    assert q_eval(hard, DIR_POS, 3.0) == 0.0
    mix = TemperingSpec.p_mixture({DIR_POS: _two_atom_mixture()}, p=1.5)
    assert q_eval(mix, DIR_POS, 1e-9) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ParameterError):
        q_eval(mix, DIR_NEG, 1.0)  # direction carries no payload
    with pytest.raises(ParameterError):
        q_eval(mix, DIR_POS, -1.0)


def test_q_monotonicity_guard_catches_bad_hook():
    bad = RadialMixture(
        atoms=((1.0, 1.0),),
    )
    # sabotage with a hook that increases in x
    bad.laplace_fn = lambda x: np.clip(np.asarray(x) * 0.1, 0.0, 1.0)
    bad.atoms = None
    bad.density = lambda s: np.exp(-s)
    bad.support_lower = 0.0
    with pytest.raises(ParameterError):
        TemperingSpec.p_mixture({DIR_POS: bad}, p=1.0)


def test_q_diff_hard_truncation_window():
    hard = TemperingSpec.hard_truncation({DIR_POS: 2.0})
    scale = math.exp(0.5)
    u = np.array([0.5, 1.5, 2.0, 2.5])
    expect = ((u <= 2.0) & (u * scale > 2.0)).astype(float)
    assert np.array_equal(hard.q_diff(DIR_POS, u, scale), expect)


# ---------------------------------------------------------------------------
# lemma-3 closed form


def test_lemma3_zero_at_unit_kappa():
    assert lemma3_integral(0.5, 1.0, 1.0) == 0.0


def test_lemma3_point_value():
    # alpha=1/2, p=1, kappa=4: 2*Gamma(1/2)*(2-1) = 2*sqrt(pi)
    assert lemma3_integral(0.5, 1.0, 4.0) == pytest.approx(2.0 * math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.55, 0.75])
@pytest.mark.parametrize("p", [1.0, 2.0])
@pytest.mark.parametrize("kappa", [1.2, 4.0, 50.0])
def test_lemma3_matches_quadrature(alpha, p, kappa):
    # substitute u = exp(v); exp(-x) - exp(-x*kappa) = exp(-x)*(-expm1(-x(kappa-1)))
    def integrand(v):
        x = np.exp(v) ** p
        return np.exp(-x) * (-np.expm1(-x * (kappa - 1.0))) * np.exp(-alpha * v)

    ref = quad(integrand, -200, 10, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    assert lemma3_integral(alpha, p, kappa) == pytest.approx(ref, rel=1e-8)


def test_lemma3_domain_error():
    with pytest.raises(ParameterError):
        lemma3_integral(1.5, 1.0, 2.0)


# ---------------------------------------------------------------------------
# K


def test_K_zero_for_stable():
    model = _model(0.7, 1.0, TemperingSpec.constant_one())
    assert compute_K(model, 0.5) == 0.0


def test_K_infinite_when_p_below_alpha():
    spec = TemperingSpec.classical({DIR_POS: 1.0}, p=0.25)
    model = _model(0.5, 1.0, spec)
    assert compute_K(model, 0.1) == INFINITE_K


def test_K_infinite_for_infinite_rosinski_mass():
    # mass 1/0.3 in closed form; p = 1 = 2*alpha gives a finite lemma ratio
    heavy = RadialMixture(
        density=lambda s: 0.3 * (1.0 + s) ** (-1.3),
        support_lower=0.0,
        check_mass=False,
    )
    spec = TemperingSpec.p_mixture({DIR_POS: heavy}, p=1.0)
    model = _model(0.5, 1.0, spec)
    assert compute_K(model, 0.1) == INFINITE_K


@pytest.mark.parametrize("alpha", [0.3, 0.55, 0.75])
@pytest.mark.parametrize("p", [1.0, 2.0])
@pytest.mark.parametrize("lam_t", [0.05, 0.1, 0.5])
def test_K_closed_form_matches_double_quadrature(alpha, p, lam_t):
    spec = TemperingSpec.p_mixture(
        {DIR_POS: _two_atom_mixture(), DIR_NEG: RadialMixture(atoms=((1.3, 1.0),))},
        p=p,
    )
    sigma = SphericalMeasure(((DIR_POS, 0.8), (DIR_NEG, 1.7)))
    model = TsouModel(alpha=alpha, lam=1.0, sigma=sigma, tempering=spec)
    k_closed = compute_K(model, lam_t)
    k_quad = compute_K_quadrature(model, lam_t)
    assert k_quad == pytest.approx(k_closed, rel=1e-6)


def test_K_hard_truncation_closed_form():
    spec = TemperingSpec.hard_truncation({DIR_POS: 2.0, DIR_NEG: 0.5})
    sigma = SphericalMeasure(((DIR_POS, 1.0), (DIR_NEG, 3.0)))
    model = TsouModel(alpha=0.6, lam=1.0, sigma=sigma, tempering=spec)
    k_closed = compute_K(model, 0.25)
    assert k_closed == pytest.approx(compute_K_quadrature(model, 0.25), rel=1e-8)


def test_K_overflow_guard():
    spec = TemperingSpec.classical({DIR_POS: 1.0}, p=2.0)
    model = _model(0.5, 1.0, spec)
    with pytest.raises(ParameterError):
        compute_K(model, 400.0)


# ---------------------------------------------------------------------------
# Rosinski conversions


def test_decompose_point_mass():
    # R = a * zeta**alpha * delta_{1/zeta}: sigma = a*delta_1, Q_1 = delta_zeta
    a, zeta, alpha = 0.7, 2.5, 0.5
    r = RosinskiMeasure(alpha=alpha, p=1.0, atoms=(((1.0 / zeta,), a * zeta ** alpha),))
    sigma, mixtures = decompose_rosinski(r)
    assert sigma.atoms == ((DIR_POS, pytest.approx(a)),)
    assert mixtures[DIR_POS].atoms == ((pytest.approx(zeta), pytest.approx(1.0)),)


def test_decompose_unit_radius_atom():
    r = RosinskiMeasure(alpha=0.7, p=2.0, atoms=(((0.0, 1.0), 1.3),))
    sigma, mixtures = decompose_rosinski(r)
    assert sigma.total_mass == pytest.approx(1.3)
    assert mixtures[direction(0.0, 1.0)].atoms[0][0] == pytest.approx(1.0)


def test_rosinski_roundtrip():
    alpha, p = 0.55, 1.5
    atoms = (((0.5,), 0.7), ((2.0,), 0.3), ((-1.5,), 1.1))
    r = RosinskiMeasure(alpha=alpha, p=p, atoms=atoms)
    sigma, mixtures = decompose_rosinski(r)
    back = compose_rosinski(sigma, mixtures, alpha, p)
    orig = sorted(r.atoms)
    rebuilt = sorted(back.atoms)
    for (x0, w0), (x1, w1) in zip(orig, rebuilt):
        assert np.allclose(x0, x1, atol=1e-14)
        assert w1 == pytest.approx(w0, abs=1e-10)
    # reconstructed alpha-moment equals sigma total mass
    assert back.alpha_moment() == pytest.approx(sigma.total_mass, abs=1e-10)


def test_decompose_radial_density():
    # rho(r) = exp(-r) on the +1 ray with p = 1
    alpha, p = 0.6, 1.0
    r = RosinskiMeasure(alpha=alpha, p=p, radial=((DIR_POS, lambda u: np.exp(-u)),))
    sigma, mixtures = decompose_rosinski(r)
    assert sigma.weight(DIR_POS) == pytest.approx(gamma_fn(1.0 + alpha), rel=1e-9)
    mix = mixtures[DIR_POS]
    assert mix.moment(0.0) == pytest.approx(1.0, abs=1e-8)
    # Q density oracle: E s = int r**alpha * r**-p * rho / norm
    ref = quad(lambda u: u ** (alpha - p) * np.exp(-u), 0, np.inf)[0] / gamma_fn(1.0 + alpha)
    assert mix.moment(1.0) == pytest.approx(ref, rel=1e-7)


def test_rosinski_rejects_mass_at_zero():
    with pytest.raises(ParameterError):
        RosinskiMeasure(alpha=0.5, p=1.0, atoms=(((0.0,), 1.0),))


# ---------------------------------------------------------------------------
# Class F


def test_class_f_point_mass_moment():
    spec = TemperingSpec.classical({DIR_POS: 2.5}, p=1.0)
    model = _model(0.5, 1.0, spec)
    cert = check_class_f(model, 0.1)
    assert cert.valid
    assert cert.m_for(DIR_POS) == pytest.approx(2.5)
    assert cert.epsilon == pytest.approx(math.exp(0.1))


def test_class_f_flags_infinite_mean():
    heavy = RadialMixture(density=lambda s: (1.0 + s) ** (-2.0), support_lower=0.0)
    spec = TemperingSpec.p_mixture({DIR_POS: heavy}, p=1.0)
    model = _model(0.5, 1.0, spec)
    cert = check_class_f(model, 0.1)
    assert not cert.valid


def test_class_f_requires_mixture():
    model = _model(0.5, 1.0, TemperingSpec.constant_one())
    with pytest.raises(UnsupportedRegimeError):
        check_class_f(model, 0.1)


def test_class_f_requires_p_above_alpha():
    spec = TemperingSpec.classical({DIR_POS: 1.0}, p=0.4)
    model = _model(0.5, 1.0, spec)
    with pytest.raises(ParameterError):
        check_class_f(model, 0.1)


# ---------------------------------------------------------------------------
# model validation


def test_model_validation():
    sigma = SphericalMeasure(((DIR_POS, 1.0),))
    with pytest.raises(ParameterError):
        TsouModel(alpha=2.5, lam=1.0, sigma=sigma, tempering=TemperingSpec.constant_one())
    with pytest.raises(ParameterError):
        TsouModel(alpha=0.5, lam=-1.0, sigma=sigma, tempering=TemperingSpec.constant_one())
    with pytest.raises(ParameterError):
        TsouModel(
            alpha=0.5,
            lam=1.0,
            sigma=SphericalMeasure(((DIR_POS, 1.0), (DIR_NEG, 1.0))),
            tempering=TemperingSpec.classical({DIR_POS: 1.0}, p=1.0),
        )
    with pytest.raises(ParameterError):
        TsouModel(
            alpha=0.5, lam=1.0, sigma=sigma,
            tempering=TemperingSpec.constant_one(), b=(1.0, 2.0),
        )
    model = TsouModel(alpha=0.5, lam=1.0, sigma=sigma, tempering=TemperingSpec.constant_one())
    assert model.b == (0.0,)
    assert model.dim == 1


def test_rosinski_mass_equals_moment_sum():
    spec = TemperingSpec.classical({DIR_POS: 2.0}, p=1.0)
    model = _model(0.5, 1.0, spec)
    assert rosinski_mass(model) == pytest.approx(1.0 * 2.0 ** 0.5)
