import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levelsets import seeding
from levelsets.diagnostics import (
    MAX_MOMENT_GUESS,
    ConditionReport,
    check_density_condition,
    check_density_condition_radial,
    check_shotnoise_H2,
    compare_bound,
    crossing_counts,
    estimate_crossing_moments,
    tail_index,
    unit_ball_volume,
)
from levelsets.simulate import (
    Constant,
    Exponential,
    ExpPowerKernel,
    GaussianKernel,
    LaplaceKernel,
    OneSidedExponentialKernel,
    Pareto,
    PowerKernel,
    SechKernel,
    SineCosine,
    SpectralGaussian,
    Uniform,
    heavy_frequency_law,
)
from levelsets.stats import MomentEstimate


# density condition A on g = exp(-|t|): E exp(T) = lam / (lam - 1) for lam > 1
@pytest.mark.parametrize("lam", [1.5, 2.0, 3.0, 10.0])
def test_condition_A_laplace_closed_form(lam):
    rep = check_density_condition("A", LaplaceKernel(), lam)
    assert rep.converged
    assert rep.value == pytest.approx(lam / (lam - 1), rel=1e-8)


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0])
def test_condition_A_laplace_diverges(lam):
    rep = check_density_condition("A", LaplaceKernel(), lam)
    assert not rep.converged and rep.value == math.inf


@given(lam=st.floats(1.2, 20.0))
@settings(max_examples=15, deadline=None)
def test_condition_A_decreasing_in_intensity(lam):
    a = check_density_condition("A", LaplaceKernel(), lam).value
    b = check_density_condition("A", LaplaceKernel(), lam * 1.5).value
    assert b <= a


def test_condition_A_picks_the_better_side():
    rep = check_density_condition("A", OneSidedExponentialKernel(), 2.0)
    # g(-T) vanishes, g(T) = exp(-T) gives E exp(T) = 2
    assert rep.value == pytest.approx(2.0, rel=1e-8)
    assert rep.detail["side"] == "g(T)" and rep.detail["other_side"] == math.inf


def test_condition_A_gaussian_diverges():
    assert not check_density_condition("A", GaussianKernel(), 5.0).converged


def test_condition_A_against_quadrature():
    k = SechKernel()
    lam = 3.0
    val, _ = integrate.quad(lambda t: lam * math.exp(-lam * t) * math.cosh(t), 0, 60)
    assert check_density_condition("A", k, lam).value == pytest.approx(val, rel=1e-8)


def test_condition_A_density_bound():
    rep = check_density_condition("A", LaplaceKernel(), 2.0, impulse=Uniform(0.5, 1.5))
    assert rep.detail["density_bound"] == pytest.approx(2.0)


@pytest.mark.parametrize("lam", [2.0, 3.0, 7.0])
def test_condition_B1_one_sided_exponential(lam):
    rep = check_density_condition("B1", OneSidedExponentialKernel(), lam)
    assert rep.value == pytest.approx(lam / (lam - 1), rel=1e-8)


def test_condition_B1_diverges_for_small_intensity():
    assert not check_density_condition("B1", OneSidedExponentialKernel(), 0.5).converged


def test_condition_B_flags_vanishing_slope_at_origin():
    rep = check_density_condition("B1", GaussianKernel(), 2.0)
    assert not rep.converged
    assert rep.detail["derivative_vanishes_at_origin"]


def test_condition_B_requires_strictly_decreasing_kernel():
    # g(-x) = 0 for the one-sided kernel, so B2 is undefined
    rep = check_density_condition("B2", OneSidedExponentialKernel(), 2.0)
    assert not rep.converged and "undefined" in rep.detail


def test_condition_B_density_bound():
    # lam * E(1/beta) * E(1/g_*(T)) with E(1/beta) = 2/3 for Pareto(2)
    rep = check_density_condition("B1", LaplaceKernel(), 3.0, impulse=Pareto(2.0))
    assert rep.detail["density_bound"] == pytest.approx(3.0 * 2 / 3 * 1.5, rel=1e-8)
    rep = check_density_condition("B1", LaplaceKernel(), 3.0, impulse=Exponential(1.0))
    assert rep.detail["density_bound"] == math.inf


def test_condition_kind_validation():
    with pytest.raises(ValueError):
        check_density_condition("C", LaplaceKernel(), 1.0)
    with pytest.raises(ValueError):
        check_density_condition("A", LaplaceKernel(), 0.0)


def test_step_halving_is_converged():
    rep = check_density_condition("A", SechKernel(), 2.5)
    assert rep.detail["refinement_change"] < 1e-6


@pytest.mark.parametrize("d, q, lam, finite", [
    (4, 1, 1.0, True), (3, 1, 0.1, True), (2, 1, 1.0, True), (2, 1, 0.2, False),
    (2, 2, 50.0, False), (4, 2, 1.0, True), (4, 2, 0.1, False),
])
def test_radial_truth_table(d, q, lam, finite):
    rep = check_density_condition_radial(d, q, lam)
    assert rep.converged == finite == rep.detail["analytic_rule"]


def test_radial_value_against_quadrature():
    d, q, lam = 4, 1, 1.0
    kd = unit_ball_volume(d)
    f = lambda r: math.exp(r**2 - lam * kd * r**d) * r ** (d - 2) * d * lam * kd * r ** (d - 1)
    val, _ = integrate.quad(f, 0, np.inf, limit=200)
    assert check_density_condition_radial(d, q, lam).value == pytest.approx(val, rel=1e-7)


def test_unit_ball_volume():
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_H2_gaussian():
    rep = check_shotnoise_H2(GaussianKernel(), 1)
    assert rep.converged and rep.detail["certified"]
    d = rep.detail["d"]
    assert all(b <= a for a, b in zip(d[1:], d[2:]))
    # d_(1,1) is the global sup of |g'| = sqrt(2/e), padded by the Lipschitz term
    assert math.sqrt(2 / math.e) <= d[0] <= math.sqrt(2 / math.e) + 0.5 * 4e-3 * 2
    assert rep.value >= rep.detail["partial_sum"]


def test_H2_heavy_kernel_diverges():
    # (1 + t^2)^(-gamma/2) with gamma <= 1 has a non-summable tail
    assert not check_shotnoise_H2(PowerKernel(1.0), 0).converged
    assert check_shotnoise_H2(PowerKernel(3.0), 0).converged


def test_H2_validation():
    with pytest.raises(ValueError):
        check_shotnoise_H2(LaplaceKernel(), 1)
    with pytest.raises(ValueError):
        check_shotnoise_H2(GaussianKernel(), 1, n_max=2)
    rep = check_shotnoise_H2(LaplaceKernel(), 0)
    assert rep.converged and not rep.detail["certified"]


def test_condition_report_invariants_and_json():
    with pytest.raises(ValueError):
        ConditionReport("density_A", math.inf, True)
    with pytest.raises(ValueError):
        ConditionReport("density_A", 1.0, False)
    with pytest.raises(ValueError):
        ConditionReport("nope", 1.0, True)
    rep = check_density_condition("A", LaplaceKernel(), 0.5)
    doc = json.loads(rep.to_json())
    assert doc["value"] == "+inf" and doc["converged"] is False


def _est(mean, lo, hi):
    return MomentEstimate(mean, 0.1, lo, hi, 100)


def test_compare_bound():
    assert compare_bound(_est(1.0, 0.8, 1.2), 2.0).satisfied
    assert not compare_bound(_est(1.0, 0.8, 1.2), 1.1).satisfied
    assert compare_bound(_est(1.0, 0.8, 1.2), 1.1).margin == pytest.approx(0.1)
    assert compare_bound(_est(1.0, 0.8, 1.2), math.inf).margin == math.inf
    with pytest.raises(ValueError):
        compare_bound(_est(1.0, 0.8, 1.2), -1.0)
    with pytest.raises(ValueError):
        compare_bound(_est(1.0, 0.8, 1.2), math.nan)


@pytest.mark.parametrize("shape", [2.0, 3.0, 5.0])
def test_hill_recovers_pareto_index(shape):
    x = Pareto(shape).ppf(seeding.uniforms([int(shape)], np.arange(100000))[0])
    ti = tail_index(x, top_fraction=0.05)
    assert ti.index_estimate == pytest.approx(shape, rel=0.1)
    assert ti.finite_moment_guess == math.floor(ti.index_estimate - 0.1)
    assert not ti.jittered


def test_hill_bounded_samples_give_all():
    x = seeding.uniforms([3], np.arange(10000))[0]
    assert tail_index(x).finite_moment_guess == "all"


def test_hill_jitters_integer_samples():
    x = np.floor(Pareto(3.0).ppf(seeding.uniforms([1], np.arange(50000))[0])) + 1
    ti = tail_index(x, seed=4)
    assert ti.jittered
    assert ti.finite_moment_guess in (1, 2, 3)
    assert ti.index_estimate < MAX_MOMENT_GUESS


def test_hill_validation():
    with pytest.raises(ValueError):
        tail_index(np.ones(10))
    with pytest.raises(ValueError):
        tail_index(np.arange(2000.0), top_fraction=0.9)


def test_crossing_moments_of_spectral_gaussian():
    # Rice: E N_0 = 2 sqrt(lambda2 / lambda0) over [0, 2 pi]
    spec = SpectralGaussian(((1.0, 1.0), (1.0, 3.0)))
    est = estimate_crossing_moments(spec, 0.0, [1, 2], 4000, seed=1)
    assert abs(est[0].point_estimate - 2 * math.sqrt(5)) <= 4 * est[0].std_error
    assert est[1].point_estimate >= est[0].point_estimate**2
    with pytest.raises(ValueError):
        estimate_crossing_moments(spec, 0.0, [1], 50, seed=1)


def test_crossing_counts_seed_streams():
    a, _ = crossing_counts(SineCosine(), 0.0, 300, seed=5)
    b, _ = crossing_counts(SineCosine(), 0.0, 600, seed=5)
    np.testing.assert_array_equal(a.counts, b.counts[:300])


def test_heavy_frequency_moments_blow_up():
    # E N^p is finite for p <= M and infinite for p = M + 1; with M = 3 the
    # empirical fourth moment is dominated by its largest sample
    res, _ = crossing_counts(SineCosine(heavy_frequency_law(3)), 0.0, 20000, seed=8)
    n = res.counts.astype(float)
    share2 = np.max(n**2) / np.sum(n**2)
    share5 = np.max(n**5) / np.sum(n**5)
    assert share5 > 10 * share2


def test_bound_dominates_truncated_sine_cosine_moments():
    from levelsets.bounds import BoundParams, moment_bound_interval
    from levelsets.simulate import rayleigh_moment

    law = heavy_frequency_law(3, upper=10.0)
    k, h, m, p = 4, 0, 1, 1
    # sup |X^(k)| <= R w^k with R Rayleigh, so D_m = E R^m E w^(mk)
    D_m = rayleigh_moment(m) * law.moment(m * k)
    bound = moment_bound_interval(BoundParams(k, h, m, p, 1 / math.sqrt(2 * math.pi), D_m, 2 * math.pi))
    for seed in range(10):
        est = estimate_crossing_moments(SineCosine(law), 0.0, [p], 2000, seed)[0]
        assert compare_bound(est, bound).satisfied
