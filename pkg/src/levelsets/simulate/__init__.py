"""Process and field simulation with exact derivatives."""

from .distributions import (
    Constant,
    Distribution,
    Exponential,
    Gamma,
    Pareto,
    Uniform,
    heavy_frequency_law,
    rayleigh_moment,
)
from .fields import (
    BallShotNoiseField,
    Field,
    QuadraticField,
    SphereQuadraticField,
    SphereShotNoiseField,
)
from .kernels import (
    ExpPowerKernel,
    ExponentialProfile,
    GammaPulseKernel,
    GaussianKernel,
    Kernel,
    LaplaceKernel,
    OneSidedExponentialKernel,
    PowerKernel,
    SechKernel,
)
from .paths import BatchPath, FunctionPath, PathSample
from .sampling import (
    PathBatch,
    draw_paths,
    exact_zero_count_sine_cosine,
    sample_chi_square,
    sample_field,
    sample_regularized_diffusion,
    sample_shot_noise_1d,
    sample_sine_cosine,
    sample_spectral_gaussian,
)
from .specs import (
    ChiSquare,
    DeterministicField,
    DeterministicPath,
    RegularizedDiffusion,
    ShotNoise1D,
    ShotNoiseBall,
    SineCosine,
    SpectralGaussian,
    SphereShotNoise,
    cosine_path,
)
