import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levelsets.kacrice import (
    DEFAULT_DELTAS,
    KacRiceReport,
    estimate_R_profile,
    rice_closed_form_gaussian,
    rice_window_average_gaussian,
    verify_kac_rice,
)
from levelsets.simulate import ChiSquare, SpectralGaussian, cosine_path
from levelsets.stats import MomentEstimate


def test_rice_closed_form_values():
    assert rice_closed_form_gaussian(1.0, 1.0, 0.0, 2 * math.pi) == pytest.approx(2.0)
    assert rice_closed_form_gaussian(1.0, 4.0, 0.0, 2 * math.pi) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        rice_closed_form_gaussian(0.0, 1.0, 0.0, 1.0)


@given(u=st.floats(0, 3), du=st.floats(0.01, 1))
def test_rice_closed_form_decreasing_in_level(u, du):
    assert rice_closed_form_gaussian(1.3, 2.0, u + du, 1.0) < rice_closed_form_gaussian(1.3, 2.0, u, 1.0)


@given(u=st.floats(-2, 2), delta=st.floats(0.01, 1.0))
@settings(max_examples=40)
def test_window_average_is_mean_of_closed_form(u, delta):
    val, _ = integrate.quad(lambda v: rice_closed_form_gaussian(2.0, 3.0, v, 5.0), u - delta, u + delta)
    assert rice_window_average_gaussian(2.0, 3.0, u, delta, 5.0) == pytest.approx(val / (2 * delta), rel=1e-9)


def test_window_average_tends_to_closed_form():
    exact = rice_closed_form_gaussian(1.0, 1.0, 0.3, 2 * math.pi)
    errs = [abs(rice_window_average_gaussian(1.0, 1.0, 0.3, d, 2 * math.pi) - exact) for d in DEFAULT_DELTAS]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_cosine_path_counts_exactly_two():
    rep = verify_kac_rice(cosine_path(), 0.0, n_replicates=20)
    assert rep.crossing_estimate.point_estimate == 2.0
    assert rep.crossing_estimate.std_error == 0.0
    for e in rep.kac_estimates:
        assert e.point_estimate == pytest.approx(2.0, abs=1e-9)


def test_kac_mean_matches_exact_window_average():
    rep = verify_kac_rice(SpectralGaussian(), 0.0, deltas=(0.5, 0.1), n_replicates=3000, seed=3)
    assert rep.closed_form == pytest.approx(2.0)
    for d, e in zip(rep.deltas, rep.kac_estimates):
        target = rice_window_average_gaussian(1.0, 1.0, 0.0, d, 2 * math.pi)
        assert abs(e.point_estimate - target) <= 4 * e.std_error + 1e-9


def test_kac_stabilizes_as_delta_shrinks():
    spec = SpectralGaussian(((1.0, 1.0), (0.5, 3.0)))
    rep = verify_kac_rice(spec, 0.4, n_replicates=1000, seed=2)
    gaps = [abs(e.point_estimate - rep.crossing_estimate.point_estimate) for e in rep.kac_estimates]
    assert gaps[-1] < gaps[0]
    assert gaps[-1] < 0.01


def test_kac_on_chi_square_process():
    rep = verify_kac_rice(ChiSquare(2), 1.0, deltas=(0.1, 0.01), n_replicates=500, seed=4)
    assert rep.closed_form is None
    assert abs(rep.kac_estimates[-1].point_estimate - rep.crossing_estimate.point_estimate) < 0.02


def test_deltas_must_decrease():
    with pytest.raises(ValueError):
        verify_kac_rice(cosine_path(), 0.0, deltas=(0.1, 0.2), n_replicates=5)
    with pytest.raises(ValueError):
        verify_kac_rice(cosine_path(), 0.0, deltas=(0.1, -0.2), n_replicates=5)


def test_report_serialisation():
    e = MomentEstimate(2.0, 0.0, 2.0, 2.0, 10)
    rep = KacRiceReport([0.5, 0.1], [e, e], e, 2.0, [(0.0, 2.0)], 0.0)
    doc = json.loads(rep.to_json())
    assert doc["deltas"] == [0.5, 0.1] and doc["closed_form"] == 2.0
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["delta", "mean", "stderr"] and rows[1] == ["0.5", "2", "0"]
    with pytest.raises(ValueError):
        KacRiceReport([0.5], [e, e], e)


def test_R_profile_matches_closed_form_per_level():
    prof = estimate_R_profile(SpectralGaussian(((1.0, 1.0), (0.5, 3.0))), 0.0, 0.5, 5, 0.05, 3000, seed=6)
    np.testing.assert_allclose(prof.levels, [-0.4, -0.2, 0.0, 0.2, 0.4])
    for est, target in zip(prof.estimates, prof.closed_form):
        assert abs(est.point_estimate - target) <= 4 * est.std_error
    assert len(prof.pairs()) == 5


def test_R_profile_window_average_tends_to_crossing_mean():
    prof = estimate_R_profile(SpectralGaussian(), 0.0, 0.05, 5, 0.005, 2000, seed=6)
    assert prof.window_average.point_estimate == pytest.approx(prof.crossing_estimate.point_estimate, abs=0.02)


def test_R_profile_validation():
    with pytest.raises(ValueError):
        estimate_R_profile(SpectralGaussian(), 0.0, 0.5, 5, 0.2, 100)
    with pytest.raises(ValueError):
        estimate_R_profile(SpectralGaussian(), 0.0, 0.0, 5, 0.01, 100)
