import math

import pytest

from levelsets.bounds import UNBOUNDED_M
from levelsets.config import (
    REQUIRED,
    Config,
    build_distribution,
    build_field,
    build_kernel,
    build_process,
    moment_order,
    parse_config,
    seed_value,
)
from levelsets.errors import ConfigError
from levelsets.simulate import Exponential, Pareto, SechKernel, ShotNoise1D, SineCosine, SpectralGaussian


def test_parse_comments_and_whitespace():
    vals = parse_config("# header\n a = 1 \n\nb.c=x, y  # trailing\n")
    assert vals == {"a": "1", "b.c": "x, y"}


@pytest.mark.parametrize("text", ["a 1", "a = 1\na = 2", "a..b = 1", "= 3", "a-b = 1"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_getters_and_unused_keys():
    cfg = Config(parse_config("n = 3\nx = 0.5\nl = 1, 2.5\nextra = 1"))
    assert cfg.get_int("n") == 3 and cfg.get_float("x") == 0.5 and cfg.get_floats("l") == [1.0, 2.5]
    assert cfg.get_int("missing", 7) == 7
    with pytest.raises(ConfigError) as exc:
        cfg.check_unused()
    assert exc.value.key == "extra"


def test_type_errors_name_the_key():
    cfg = Config({"n": "three", "s": "b"})
    with pytest.raises(ConfigError) as exc:
        cfg.get_int("n")
    assert exc.value.key == "n"
    with pytest.raises(ConfigError):
        cfg.get_str("s", choices=("a",))
    with pytest.raises(ConfigError):
        cfg.get_int("absent", REQUIRED)


def test_canonical_digest_ignores_layout():
    a = Config(parse_config("x = 1\ny = 2"))
    b = Config(parse_config("# c\ny=2\n  x = 1"))
    assert a.digest() == b.digest()
    assert a.digest() != Config(parse_config("x = 1\ny = 3")).digest()


@pytest.mark.parametrize("raw, expected", [("3", 3), ("inf", UNBOUNDED_M), ("unbounded", UNBOUNDED_M)])
def test_moment_order(raw, expected):
    assert moment_order(Config({"m": raw}), "m") == expected


def test_moment_order_rejects_nonpositive():
    with pytest.raises(ConfigError):
        moment_order(Config({"m": "0"}), "m")


def test_build_distribution_and_kernel():
    cfg = Config(parse_config("b = pareto\nb.shape = 3\nk = sech\nk.rate = 2"))
    assert build_distribution(cfg, "b") == Pareto(3.0)
    assert build_kernel(cfg, "k") == SechKernel(2.0)
    cfg.check_unused()
    with pytest.raises(ConfigError):
        build_distribution(Config({"b": "exponential", "b.scale": "-1"}), "b")


def test_build_processes():
    spec = build_process(Config(parse_config("process.kind = sine_cosine\nprocess.M = 3\nprocess.omega_upper = 10")))
    assert isinstance(spec, SineCosine) and spec.omega_dist == Pareto(4.0, 1.0, 10.0)
    spec = build_process(Config(parse_config("process.kind = spectral_gaussian\nprocess.atoms = 1:1, 0.5:3")))
    assert spec == SpectralGaussian(((1.0, 1.0), (0.5, 3.0)))
    spec = build_process(Config(parse_config(
        "process.kind = shot_noise_1d\nprocess.lambda = 2\nprocess.kernel = sech\nprocess.impulse = exponential")))
    assert isinstance(spec, ShotNoise1D) and spec.impulse == Exponential(1.0)


def test_build_field_domains():
    spec, domain = build_field(Config(parse_config("field.kind = circle\nfield.radius = 0.5\nfield.a = 2")))
    assert domain.a == 2.0
    with pytest.raises(ConfigError):
        build_field(Config({"field.kind": "torus"}))


def test_seed_value():
    assert seed_value(Config({"seed": "5"}), None) == 5
    assert seed_value(Config({"seed": "5"}), 9) == 9
    with pytest.raises(ConfigError):
        seed_value(Config({"seed": "-1"}), None)
    with pytest.raises(ConfigError):
        seed_value(Config({}), 2**64)
    assert math.isfinite(seed_value(Config({}), 2**64 - 1))
