import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from partobs.core import (DegenerateSample, EstimationSpace, ObservabilityReport, OutputSeries,
                          Weighting, continuum_norm, fmt17, gram_matrix, norm_consistency_check,
                          output_inner, output_norm, simpson, time_weights)
from partobs.models import BurgersConfig, HeatConfig, burgers_model, heat_model

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
series_values = arrays(np.float64, (21, 2), elements=finite)
T = np.linspace(0.0, 2.0, 21)


def test_weighting_parse_aliases():
    assert Weighting.parse("dt_weighted_l2") is Weighting.DT
    assert Weighting.parse("unweighted") is Weighting.UNWEIGHTED
    with pytest.raises(ValueError):
        Weighting.parse("l1")


def test_time_weights_integrate_polynomials():
    t = np.linspace(0.0, 3.0, 31)
    w = time_weights(t, Weighting.DT)
    assert w.sum() == pytest.approx(3.0, rel=1e-14)
    assert w @ t ** 3 == pytest.approx(3.0 ** 4 / 4, rel=1e-13)  # Simpson is exact for cubics
    assert np.all(time_weights(t, Weighting.UNWEIGHTED) == 1.0)


def test_time_weights_nonuniform_grid_uses_trapezoid():
    t = np.array([0.0, 0.1, 0.5, 1.0])
    w = time_weights(t, Weighting.DT)
    assert w @ t == pytest.approx(0.5, rel=1e-14)


def test_output_norm_empty_raises():
    with pytest.raises(ValueError, match="empty output"):
        output_norm(OutputSeries(np.zeros(0), np.zeros((0, 1))))


def test_output_series_length_mismatch():
    with pytest.raises(ValueError):
        OutputSeries(np.linspace(0, 1, 3), np.zeros(4))


@settings(max_examples=50, deadline=None)
@given(series_values, series_values, st.floats(-10, 10), st.sampled_from(["dt", "unweighted"]))
def test_output_norm_axioms(a, b, lam, weighting):
    ya, yb = OutputSeries(T, a, weighting), OutputSeries(T, b, weighting)
    na, nb = output_norm(ya), output_norm(yb)
    scaled = OutputSeries(T, lam * a, weighting)
    assert output_norm(scaled) == pytest.approx(abs(lam) * na, rel=1e-9, abs=1e-9)
    total = OutputSeries(T, a + b, weighting)
    assert output_norm(total) <= na + nb + 1e-9 * (1 + na + nb)
    assert output_inner(ya, yb) == pytest.approx(output_inner(yb, ya), rel=1e-12, abs=1e-9)
    assert output_norm(ya - ya) == 0.0


def test_simpson_exact_for_cubic_and_rejects_odd():
    x = np.linspace(-1, 2, 7)
    assert simpson(x ** 3 - x, -1, 2) == pytest.approx(2.25, rel=1e-14)
    with pytest.raises(ValueError):
        simpson(np.ones(4), 0, 1)


def test_estimation_space_validation():
    inner = lambda a, b: float(a @ b)
    with pytest.raises(ValueError):
        EstimationSpace([], [], inner)
    with pytest.raises(ValueError):
        EstimationSpace([np.ones(2)], ["a", "b"], inner)
    with pytest.raises(ValueError):
        EstimationSpace([np.ones(2), np.ones(3)], ["a", "b"], inner)
    with pytest.raises(ValueError):
        EstimationSpace([np.ones(1), np.ones(1)], ["a", "b"], inner)


def test_gram_matrix_symmetric_and_rejects_nonfinite():
    space = EstimationSpace([np.array([1.0, 2.0]), np.array([0.5, -1.0])], ["a", "b"],
                            lambda a, b: float(a @ b))
    S = gram_matrix(space)
    assert np.array_equal(S, S.T)
    assert S[0, 1] == pytest.approx(-1.5)
    bad = EstimationSpace([np.array([np.inf, 0.0])], ["a"], lambda a, b: float(a @ b))
    with pytest.raises(ValueError):
        gram_matrix(bad)


def test_space_extend_and_permute():
    space = EstimationSpace([np.array([1.0, 0.0, 0.0])], ["a"], lambda a, b: float(a @ b))
    ext = space.extended(np.array([0.0, 1.0, 0.0]), "b")
    assert ext.size == 2 and ext.labels == ("a", "b")
    assert ext.permuted([1, 0]).labels == ("b", "a")
    np.testing.assert_array_equal(ext.combine([2, 3]), [2, 3, 0])


def test_heat_norm_consistency_is_exact():
    model = heat_model(HeatConfig(N=8))
    samples = [lambda x, k=k: np.sin(k * x / 2) for k in (1, 3, 8)]
    defects = norm_consistency_check(None, model, samples)
    assert max(defects) < 1e-12


def test_burgers_norm_consistency():
    # trig polynomials in the estimation span are integrated exactly by the grid rule
    w_samples = [lambda x: np.cos(x) - 1, lambda x: np.sin(2 * x) + 0.3 * (np.cos(2 * x) - 1)]
    for n in (20, 80):
        model = burgers_model(BurgersConfig(N=n))
        assert max(norm_consistency_check(None, model, w_samples)) < 1e-12
    # a sample outside the span shows the defect shrinking with refinement
    bump = [lambda x: x * (2 * np.pi - x) * np.exp(-x)]
    coarse = norm_consistency_check(None, burgers_model(BurgersConfig(N=20)), bump)[0]
    fine = norm_consistency_check(None, burgers_model(BurgersConfig(N=80)), bump)[0]
    assert fine < coarse


def test_norm_consistency_rejects_zero_sample():
    model = heat_model(HeatConfig(N=4))
    with pytest.raises(DegenerateSample, match="degenerate sample"):
        norm_consistency_check(None, model, [lambda x: np.zeros_like(x)])


def test_continuum_norm_matches_analytic():
    model = burgers_model(BurgersConfig(N=20))
    assert continuum_norm(model, np.sin) == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_report_error_bound():
    rep = ObservabilityReport(0.25, 2.0, 0.5e-3, 1e-3, "gramian")
    assert rep.worst_error_bound(0.1) == pytest.approx(0.2)
    assert ObservabilityReport(0.0, math.inf, 0.0, 1e-3, "gramian").worst_error_bound(1) == math.inf


@given(st.floats(allow_nan=True, allow_infinity=True))
def test_fmt17_round_trips(x):
    text = fmt17(x)
    back = float(text)
    assert (math.isnan(x) and math.isnan(back)) or back == x
