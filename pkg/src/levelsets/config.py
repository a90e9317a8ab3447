"""Line-oriented experiment configuration.

One ``key = value`` per line, ``#`` starts a comment, keys are dotted
(``process.kind``, ``process.kernel.width``). Lists are comma separated.
Every key must be consumed by the command being run; leftovers are errors,
so a misspelt key never silently falls back to a default.

Example::

    command = moments
    seed = 42
    replicates = 2000
    u = 0
    p_list = 1, 2
    process.kind = spectral_gaussian
    process.atoms = 1:1
"""

from __future__ import annotations

import hashlib
import math
from typing import Dict, List, Optional

from .bounds import UNBOUNDED_M, Ball, Sphere
from .errors import ConfigError
from .simulate import distributions as dist
from .simulate import kernels as kern
from .simulate.fields import QuadraticField, SphereQuadraticField
from .simulate.specs import (
    ChiSquare,
    DeterministicField,
    RegularizedDiffusion,
    ShotNoise1D,
    ShotNoiseBall,
    SineCosine,
    SpectralGaussian,
    SphereShotNoise,
    cosine_path,
)

COMMANDS = ("bound", "simulate", "count", "moments", "crofton", "kacrice", "diagnose", "report")
MAX_SEED = 2**64 - 1
#: sentinel default for keys that must be present
REQUIRED = object()


def parse_config(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines into an ordered dict of raw strings."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}", key=line)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not all(part.replace("_", "").isalnum() for part in key.split(".")):
            raise ConfigError(f"line {lineno}: malformed key {key!r}", key=key)
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key)
        out[key] = value
    return out


class Config:
    """Typed, consumption-tracked access to parsed config values."""

    def __init__(self, values: Dict[str, str]):
        self.values = dict(values)
        self.used = set()

    @classmethod
    def from_file(cls, path) -> "Config":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(parse_config(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", key="--config") from exc

    def canonical(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def __contains__(self, key):
        return key in self.values

    def set(self, key, value):
        self.values[key] = str(value)

    def raw(self, key, default=None) -> Optional[str]:
        self.used.add(key)
        return self.values.get(key, default)

    def _convert(self, key, conv, default, what):
        raw = self.raw(key)
        if raw is None:
            if default is REQUIRED:
                raise ConfigError(f"missing required key {key!r}", key=key)
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key {key!r}: expected {what}, got {raw!r}", key=key) from exc

    def get_str(self, key, default=None, choices=None):
        value = self._convert(key, str, default, "a string")
        if choices is not None and value is not None and value not in choices:
            raise ConfigError(f"key {key!r}: {value!r} is not one of {', '.join(choices)}", key=key)
        return value

    def get_float(self, key, default=None):
        return self._convert(key, _float, default, "a real number")

    def get_int(self, key, default=None):
        return self._convert(key, _int, default, "an integer")

    def get_floats(self, key, default=None) -> List[float]:
        return self._convert(key, lambda s: [_float(x) for x in _split(s)], default, "a list of reals")

    def get_ints(self, key, default=None) -> List[int]:
        return self._convert(key, lambda s: [_int(x) for x in _split(s)], default, "a list of integers")

    def require(self, key, check, message):
        if not check:
            raise ConfigError(f"key {key!r}: {message}", key=key)

    def check_unused(self):
        extra = [k for k in self.values if k not in self.used]
        if extra:
            raise ConfigError(f"unknown config key {extra[0]!r}", key=extra[0])


def _split(s):
    parts = [x.strip() for x in s.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty list item")
    return parts


def _float(s) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan")
    return v


def _int(s) -> int:
    return int(s, 0)


def moment_order(cfg: Config, key, default=REQUIRED):
    """An integer >= 1 or ``inf`` (UNBOUNDED_M)."""
    raw = cfg.raw(key)
    if raw is None:
        if default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return default
    if raw.lower() in ("inf", "infinity", "unbounded"):
        return UNBOUNDED_M
    try:
        m = int(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected an integer or 'inf', got {raw!r}", key=key) from exc
    cfg.require(key, m >= 1, "must be >= 1")
    return m


def _guard(key, build):
    try:
        return build()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{key}: {exc}", key=key) from exc


# ---------------------------------------------------------------------------
# distributions and kernels


def build_distribution(cfg: Config, prefix: str, default: str = "constant") -> dist.Distribution:
    kind = cfg.get_str(prefix, default, choices=("constant", "uniform", "exponential", "gamma", "pareto"))
    p = prefix + "."
    if kind == "constant":
        return _guard(prefix, lambda: dist.Constant(cfg.get_float(p + "value", 1.0)))
    if kind == "uniform":
        return _guard(prefix, lambda: dist.Uniform(cfg.get_float(p + "low", 0.0), cfg.get_float(p + "high", 1.0)))
    if kind == "exponential":
        return _guard(prefix, lambda: dist.Exponential(cfg.get_float(p + "scale", 1.0)))
    if kind == "gamma":
        return _guard(prefix, lambda: dist.Gamma(cfg.get_float(p + "shape", 2.0), cfg.get_float(p + "scale", 1.0)))
    return _guard(prefix, lambda: dist.Pareto(cfg.get_float(p + "shape", REQUIRED), cfg.get_float(p + "scale", 1.0),
                                              cfg.get_float(p + "upper", None)))


KERNELS = ("gaussian", "exp_power", "laplace", "one_sided_exponential", "sech", "gamma_pulse", "power")


def build_kernel(cfg: Config, prefix: str, default: str = "gaussian") -> kern.Kernel:
    kind = cfg.get_str(prefix, default, choices=KERNELS)
    p = prefix + "."
    builders = {
        "gaussian": lambda: kern.GaussianKernel(cfg.get_float(p + "width", 1.0)),
        "exp_power": lambda: kern.ExpPowerKernel(cfg.get_int(p + "q", 1), cfg.get_float(p + "width", 1.0)),
        "laplace": lambda: kern.LaplaceKernel(cfg.get_float(p + "rate", 1.0)),
        "one_sided_exponential": lambda: kern.OneSidedExponentialKernel(cfg.get_float(p + "rate", 1.0)),
        "sech": lambda: kern.SechKernel(cfg.get_float(p + "rate", 1.0)),
        "gamma_pulse": lambda: kern.GammaPulseKernel(cfg.get_int(p + "n", 2), cfg.get_float(p + "rate", 1.0)),
        "power": lambda: kern.PowerKernel(cfg.get_float(p + "gamma", 2.0)),
    }
    return _guard(prefix, builders[kind])


# ---------------------------------------------------------------------------
# process and field families


def _atoms(cfg: Config, key):
    raw = cfg.raw(key, "1:1")
    try:
        atoms = []
        for item in _split(raw):
            w, lam = item.split(":")
            atoms.append((_float(w), _float(lam)))
        return tuple(atoms)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected 'weight:frequency, ...', got {raw!r}", key=key) from exc


def _interval(cfg: Config, key, default):
    vals = cfg.get_floats(key, None)
    if vals is None:
        return default
    cfg.require(key, len(vals) == 2 and vals[1] > vals[0], "expected 'a, b' with a < b")
    return (vals[0], vals[1])


def _sine_cosine(cfg):
    omega = cfg.get_float("process.omega", None)
    if omega is not None:
        cfg.require("process.omega", omega > 0, "must be positive")
        return SineCosine(dist.Constant(omega))
    M = cfg.get_int("process.M", 3)
    cfg.require("process.M", M >= 1, "must be >= 1")
    upper = cfg.get_float("process.omega_upper", None)
    cfg.require("process.omega_upper", upper is None or upper > 1, "must exceed 1")
    return SineCosine(dist.heavy_frequency_law(M, upper))


def _spectral(cfg):
    return _guard("process.atoms", lambda: SpectralGaussian(_atoms(cfg, "process.atoms")))


def _chi_square(cfg):
    base = _spectral(cfg)
    return _guard("process.n", lambda: ChiSquare(cfg.get_int("process.n", 2), base))


def _shot_noise_1d(cfg):
    lam = cfg.get_float("process.lambda", REQUIRED)
    kernel = build_kernel(cfg, "process.kernel")
    impulse = build_distribution(cfg, "process.impulse")
    pad = cfg.get_float("process.pad", None)
    interval = _interval(cfg, "process.interval", (0.0, 2 * math.pi))
    return _guard("process.lambda", lambda: ShotNoise1D(lam, kernel, impulse, pad, interval))


def _ou_drift(rate):
    def drift(s, x):
        return -rate * x
    return drift


def _diffusion(cfg):
    rate = cfg.get_float("process.ou_rate", 0.0)
    sigma = cfg.get_float("process.sigma", 1.0)

    def vol(s, x):
        return sigma + 0.0 * x

    return _guard("process", lambda: RegularizedDiffusion(
        _ou_drift(rate), vol, cfg.get_float("process.horizon", 10.0), cfg.get_float("process.euler_step", 1e-3),
        cfg.get_float("process.burn_in", 1.0), cfg.get_float("process.x0", 0.0)))


PROCESSES = {
    "sine_cosine": _sine_cosine,
    "spectral_gaussian": _spectral,
    "chi_square": _chi_square,
    "shot_noise_1d": _shot_noise_1d,
    "regularized_diffusion": _diffusion,
    "cosine": lambda cfg: cosine_path(),
}


def build_process(cfg: Config):
    kind = cfg.get_str("process.kind", REQUIRED, choices=tuple(PROCESSES))
    return PROCESSES[kind](cfg)


FIELDS = ("circle", "sphere_height", "shot_noise_ball", "sphere_shot_noise")


def build_field(cfg: Config):
    """Field spec plus its Crofton domain."""
    kind = cfg.get_str("field.kind", REQUIRED, choices=FIELDS)
    d = cfg.get_int("field.d", 2)
    cfg.require("field.d", d >= 2, "must be >= 2")
    if kind == "circle":
        r = cfg.get_float("field.radius", 0.5)
        a = cfg.get_float("field.a", 1.0)
        cfg.require("field.radius", r > 0, "must be positive")
        domain = _guard("field.a", lambda: Ball(d, a))
        return DeterministicField(QuadraticField.sphere_level(d, r)), domain
    if kind == "sphere_height":
        return DeterministicField(SphereQuadraticField.height(d)), Sphere(d)
    if kind == "shot_noise_ball":
        lam = cfg.get_float("field.lambda", 1.0)
        q = cfg.get_int("field.q", 1)
        width = cfg.get_float("field.width", 1.0)
        a = cfg.get_float("field.a", 1.0)
        impulse = build_distribution(cfg, "field.impulse")
        spec = _guard("field", lambda: ShotNoiseBall(d, lam, kern.ExpPowerKernel(q, width), impulse, None, a))
        return spec, _guard("field.a", lambda: Ball(d, a))
    lam = cfg.get_float("field.lambda", 1.0)
    rate = cfg.get_float("field.rate", 4.0)
    impulse = build_distribution(cfg, "field.impulse")
    spec = _guard("field", lambda: SphereShotNoise(d, lam, kern.ExponentialProfile(rate), impulse))
    return spec, Sphere(d)


def seed_value(cfg: Config, override: Optional[int]) -> int:
    if override is not None:
        cfg.used.add("seed")
        seed = override
    else:
        seed = cfg.get_int("seed", REQUIRED)
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
    return seed
