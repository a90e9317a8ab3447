import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levelsets import seeding
from levelsets.simulate import (
    ChiSquare,
    Constant,
    Exponential,
    ExpPowerKernel,
    ExponentialProfile,
    Gamma,
    GammaPulseKernel,
    LaplaceKernel,
    OneSidedExponentialKernel,
    Pareto,
    PowerKernel,
    QuadraticField,
    RegularizedDiffusion,
    SechKernel,
    ShotNoise1D,
    ShotNoiseBall,
    SineCosine,
    SpectralGaussian,
    SphereQuadraticField,
    SphereShotNoise,
    Uniform,
    draw_paths,
    exact_zero_count_sine_cosine,
    heavy_frequency_law,
    rayleigh_moment,
    sample_chi_square,
    sample_field,
    sample_regularized_diffusion,
    sample_shot_noise_1d,
    sample_sine_cosine,
    sample_spectral_gaussian,
)
from levelsets.simulate.paths import bump_constant, bump_derivatives

SMOOTH_KERNELS = [ExpPowerKernel(1), ExpPowerKernel(2, 0.7), SechKernel(), PowerKernel(1.5)]


@pytest.mark.parametrize("kernel", SMOOTH_KERNELS, ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_kernel_derivatives_match_finite_differences(kernel, order):
    t = np.linspace(-3.3, 3.1, 41)
    h = 1e-5
    fd = (kernel.derivative(t + h, order) - kernel.derivative(t - h, order)) / (2 * h)
    np.testing.assert_allclose(kernel.derivative(t, order + 1), fd, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("kernel", SMOOTH_KERNELS + [LaplaceKernel(), OneSidedExponentialKernel(),
                                                     GammaPulseKernel(3)], ids=lambda k: type(k).__name__)
def test_kernel_integral(kernel):
    val, _ = integrate.quad(lambda t: float(kernel(t)), -np.inf, np.inf, limit=400)
    assert kernel.integral() == pytest.approx(val, rel=1e-7)


@pytest.mark.parametrize("kernel", SMOOTH_KERNELS + [LaplaceKernel()], ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("order", [0, 1, 2])
def test_envelope_dominates_and_is_monotone(kernel, order):
    if order > kernel.smoothness:
        return
    s = np.linspace(0.01, 30, 3000)
    env = kernel.envelope(order, s)
    assert np.all(np.diff(env) <= 1e-15)
    assert np.all(env >= np.abs(kernel.derivative(s, order)) - 1e-12)
    assert np.all(env >= np.abs(kernel.derivative(-s, order)) - 1e-12)


def test_envelope_tail_matches_quadrature():
    k = ExpPowerKernel(1)
    val, _ = integrate.quad(lambda s: float(k.envelope(0, s)), 2.0, np.inf)
    assert k.envelope_tail(0, 2.0) >= val * (1 - 1e-6)
    assert k.envelope_tail(0, 2.0) <= val * 1.01


def test_nonintegrable_envelope_tail_is_infinite():
    assert PowerKernel(0.4).envelope_tail(0, 1.0) == math.inf


@pytest.mark.parametrize("dist", [Uniform(-1, 2), Exponential(2.0), Gamma(3.0, 0.5), Pareto(3.0, 1.0, 10.0)],
                         ids=repr)
def test_distribution_moments_against_sampling(dist):
    u = seeding.uniforms([5], np.arange(400000))[0]
    x = dist.ppf(u)
    assert x.mean() == pytest.approx(dist.mean, rel=1e-2, abs=1e-2)
    assert np.abs(x).mean() == pytest.approx(dist.abs_mean, rel=1e-2, abs=1e-2)


def test_pareto_moment_closed_form():
    law = heavy_frequency_law(3)
    assert law.moment(2) == pytest.approx(4 / 2)
    assert law.moment(4) == math.inf
    trunc = heavy_frequency_law(3, upper=10.0)
    val, _ = integrate.quad(lambda w: w**3 * 4 * w**-5, 1, 10)
    assert trunc.moment(3) == pytest.approx(val / (1 - 10.0**-4))
    assert trunc.moment(4) == pytest.approx(4 * math.log(10) / (1 - 10.0**-4))


def test_rayleigh_moment():
    r = np.hypot(*seeding.normals([1, 2], np.arange(200000)))
    for m in (1, 2, 3):
        assert rayleigh_moment(m) == pytest.approx(np.mean(r**m), rel=0.02)
    assert rayleigh_moment(2) == pytest.approx(2.0)


def test_sine_cosine_sample_is_exact_sinusoid():
    grid = np.linspace(0, 2 * math.pi, 101)
    sample, (omega, theta, amp) = sample_sine_cosine(SineCosine(), 3, grid, order=2)
    np.testing.assert_allclose(sample.values, amp * np.cos(omega * grid - theta), atol=1e-12)
    np.testing.assert_allclose(sample.derivatives[2], -omega**2 * sample.values, atol=1e-9)
    assert omega >= 1


def test_sine_cosine_frequency_law_tail():
    batch = draw_paths(SineCosine(), seeding.derive_seeds(1, 0, 50000))
    omega = batch.info["omega"]
    # P(w > x) = x^-4
    assert np.mean(omega > 2) == pytest.approx(2.0**-4, rel=0.05)


@given(omega=st.floats(1.0, 50.0), theta=st.floats(-math.pi, math.pi))
@settings(max_examples=200, deadline=None)
def test_exact_zero_count_against_enumeration(omega, theta):
    n = exact_zero_count_sine_cosine(omega, theta)
    j = np.arange(-10, int(4 * omega) + 10)
    roots = (theta + math.pi / 2 + j * math.pi) / omega
    assert n == int(np.sum((roots >= 0) & (roots <= 2 * math.pi)))
    assert abs(n - 2 * omega) <= 2


def test_spectral_gaussian_covariance():
    spec = SpectralGaussian(((1.0, 1.0), (0.5, 3.0)))
    batch = draw_paths(spec, seeding.derive_seeds(9, 0, 40000))
    rows = np.arange(40000)
    x0 = batch.path.evaluate(rows, np.zeros(40000))
    x1 = batch.path.evaluate(rows, np.full(40000, 0.7))
    d1 = batch.path.evaluate(rows, np.zeros(40000), 1)
    cov = 1.0 * math.cos(0.7) + 0.5 * math.cos(3 * 0.7)
    assert np.var(x0) == pytest.approx(spec.lambda0, rel=0.03)
    assert np.var(d1) == pytest.approx(spec.lambda2, rel=0.03)
    assert np.mean(x0 * x1) == pytest.approx(cov, abs=0.03)


def test_spectral_sample_derivative_consistency():
    grid = np.linspace(0, 2 * math.pi, 2001)
    s = sample_spectral_gaussian(SpectralGaussian(((1.0, 2.0), (0.3, 5.0))), 4, grid, order=3)
    for j in range(3):
        fd = np.gradient(s.derivatives[j], grid)
        np.testing.assert_allclose(s.derivatives[j + 1][5:-5], fd[5:-5], atol=5e-3 * 5 ** (j + 1))


def test_chi_square_is_sum_of_squares():
    grid = np.linspace(0, 2 * math.pi, 50)
    s = sample_chi_square(ChiSquare(3), 2, grid, order=2)
    assert np.all(s.values >= 0)
    with pytest.raises(ValueError):
        sample_chi_square(ChiSquare(3), 2, grid, order=3)


def test_shot_noise_mean_and_truncation():
    spec = ShotNoise1D(2.0, ExpPowerKernel(1), Exponential(1.5))
    batch = draw_paths(spec, seeding.derive_seeds(3, 0, 20000), order=1)
    x = batch.path.evaluate(np.arange(20000), np.full(20000, math.pi))
    # Campbell: E X = lam E beta int g
    assert np.mean(x) == pytest.approx(2.0 * 1.5 * math.sqrt(math.pi), rel=0.02)
    assert 0 < batch.truncation_error < 1e-7


def test_shot_noise_sample_derivatives():
    grid = np.linspace(0, 5, 5001)
    s = sample_shot_noise_1d(ShotNoise1D(1.0, SechKernel(), Constant(1.0)), 8, (0, 5), grid, order=2)
    fd = np.gradient(s.values, grid)
    np.testing.assert_allclose(s.derivatives[1][2:-2], fd[2:-2], atol=1e-5)


def test_shot_noise_rejects_rough_kernel():
    from levelsets.errors import ConfigError

    with pytest.raises(ConfigError):
        draw_paths(ShotNoise1D(1.0, LaplaceKernel()), [1], order=1)


def test_bump_normalised_and_smooth():
    val, _ = integrate.quad(lambda x: float(bump_derivatives(np.array([x]), 0)[0][0]), -1, 1)
    assert val == pytest.approx(1.0, rel=1e-9)
    assert bump_constant() > 0


def test_regularized_diffusion_brownian_variance():
    spec = RegularizedDiffusion(horizon=6.0, euler_step=0.01)
    batch = draw_paths(spec, seeding.derive_seeds(2, 0, 4000), order=1)
    x = batch.path.evaluate(np.arange(4000), np.full(4000, 4.0))
    # the bump average of W around 4 has variance 4 - O(1)
    assert 3.0 < np.var(x) < 4.2
    with pytest.raises(ValueError):
        sample_regularized_diffusion(spec, 1, np.linspace(0, 5, 10))


def test_paths_are_reproducible():
    grid = np.linspace(0, 2 * math.pi, 20)
    spec = ShotNoise1D(1.5, SechKernel(), Gamma(2.0, 1.0))
    a = sample_shot_noise_1d(spec, 123, spec.interval, grid)
    b = sample_shot_noise_1d(spec, 123, spec.interval, grid)
    assert a.to_csv() == b.to_csv()


def test_quadratic_field_directional_derivatives():
    f = QuadraticField(np.array([[1.0, 0.5], [0.0, 2.0]]), np.array([0.3, -1.0]), 0.2)
    p = np.array([0.4, -0.1])
    v = np.array([0.6, 0.8])
    d = f.directional_derivatives(p, v, 2)
    h = 1e-6
    assert d[1] == pytest.approx((f.eval(p + h * v) - f.eval(p - h * v)) / (2 * h), rel=1e-7)
    assert d[2] == pytest.approx((f.eval(p + h * v) - 2 * f.eval(p) + f.eval(p - h * v)) / h**2, rel=1e-3)


def test_sphere_field_along_great_circle():
    f = SphereQuadraticField(np.diag([1.0, -0.5, 0.2]), np.array([0.1, 0.0, 1.0]), 0.3)
    e1, e2 = np.array([1.0, 0, 0]), np.array([0, 0.6, 0.8])
    z = np.linspace(0, 2 * math.pi, 9)
    path = f.restrict_to_great_circles(e1, e2)
    pts = np.cos(z)[:, None] * e1 + np.sin(z)[:, None] * e2
    np.testing.assert_allclose(path.evaluate(np.zeros(9, int), z), f.eval(pts), atol=1e-12)
    tang = -np.sin(z)[:, None] * e1 + np.cos(z)[:, None] * e2
    np.testing.assert_allclose(f.directional_derivatives(pts, tang, 2)[:, 1], path.evaluate(np.zeros(9, int), z, 1),
                               atol=1e-12)


def test_ball_shot_noise_field_derivatives():
    field = sample_field(ShotNoiseBall(2, 3.0, ExpPowerKernel(1, 0.5), Exponential(1.0)), 7)
    p = np.array([0.2, -0.3])
    v = np.array([0.0, 1.0])
    h = 1e-5
    d = field.directional_derivatives(p, v, 2)
    f = lambda x: field.directional_derivatives(x, v, 0)[0]
    assert d[1] == pytest.approx((f(p + h * v) - f(p - h * v)) / (2 * h), rel=1e-6, abs=1e-9)
    assert field.truncation_error < 1e-7


def test_sphere_shot_noise_field_derivatives():
    field = sample_field(SphereShotNoise(2, 1.0, ExponentialProfile(2.0), Constant(1.0)), 3)
    e1, e2 = np.array([0.0, 0.6, 0.8]), np.array([1.0, 0.0, 0.0])
    z0, h = 0.4, 1e-5
    pt = lambda z: math.cos(z) * e1 + math.sin(z) * e2
    tang = -math.sin(z0) * e1 + math.cos(z0) * e2
    d = field.directional_derivatives(pt(z0), tang, 2)
    assert d[0] == pytest.approx(field.eval(pt(z0)))
    assert d[1] == pytest.approx((field.eval(pt(z0 + h)) - field.eval(pt(z0 - h))) / (2 * h), rel=1e-6, abs=1e-9)
    second = (field.eval(pt(z0 + h)) - 2 * field.eval(pt(z0)) + field.eval(pt(z0 - h))) / h**2
    assert d[2] == pytest.approx(second, rel=1e-3, abs=1e-4)
    with pytest.raises(ValueError):
        field.directional_derivatives(pt(z0), tang, 3)
    with pytest.raises(ValueError):
        field.directional_derivatives(pt(z0), e1, 1)


def test_sphere_shot_noise_point_count():
    spec = SphereShotNoise(2, 0.5)
    n = [len(sample_field(spec, s).beta) for s in range(400)]
    assert np.mean(n) == pytest.approx(0.5 * 4 * math.pi, rel=0.05)
    # Poisson counts: variance equals mean
    assert np.var(n, ddof=1) == pytest.approx(2 * math.pi, rel=0.2)


@pytest.mark.parametrize("build", [
    lambda: Exponential(-1.0), lambda: Gamma(0.0), lambda: Pareto(-2.0), lambda: Pareto(2.0, 1.0, 0.5),
    lambda: Uniform(1.0, 1.0), lambda: LaplaceKernel(0.0), lambda: SechKernel(-1.0),
    lambda: OneSidedExponentialKernel(0.0), lambda: PowerKernel(0.0), lambda: ExpPowerKernel(0),
    lambda: SpectralGaussian(()), lambda: ShotNoise1D(0.0),
])
def test_invalid_parameters_rejected(build):
    with pytest.raises(ValueError):
        build()
