import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xgsim.errors import ComparabilityError, DegenerateOutcomeError, ScoringError
from xgsim.features import DistanceZone, build_design_matrix, map_distance_zone, model_spec
from xgsim.glm import (
    GlmWarning,
    compare_models,
    fit,
    fit_shots,
    log_likelihood,
    predict,
    predict_design,
    score,
    sigmoid,
)
from xgsim.ingest import ShotEvent


def shot(bodypart=1, is_goal=0, location=3, situation=1):
    return ShotEvent("M1", 1, "A", 1, is_goal, location, 4, bodypart, situation, 1, 0)


def two_group_shots():
    a = [shot(2, int(i < 3)) for i in range(10)]   # 3 / 10
    b = [shot(1, int(i < 1)) for i in range(10)]   # 1 / 10, reference
    return a + b


@pytest.fixture(scope="module")
def base_fit(synthetic_season):
    return fit_shots(synthetic_season.shots, model_spec("base"))


def test_saturated_two_group_probabilities():
    d = build_design_matrix(two_group_shots(), model_spec("base", "onehot"))
    assert d.columns == ("(Intercept)", "bodypart[2]")
    f = fit(d)
    p = predict_design(f, d)
    assert np.allclose(p[:10], 0.3, atol=1e-8, rtol=0)
    assert np.allclose(p[10:], 0.1, atol=1e-8, rtol=0)
    assert abs(f.coefficients["(Intercept)"] - math.log(1 / 9)) < 1e-8
    assert abs(predict(f, {"(Intercept)": 1.0, "bodypart[2]": 1.0}) - 0.3) < 1e-8


def test_saturated_cells_equal_empirical_frequencies(synthetic_season):
    # zone x bodypart fully one-hot with all interactions is saturated in those cells
    shots = synthetic_season.shots
    spec = dataclasses.replace(model_spec("interaction", "onehot"),
                               covariates=("distance_zone", "bodypart"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GlmWarning)
        f = fit(d := build_design_matrix(shots, spec))
    p = predict_design(f, d)
    groups = {}
    for i, s in enumerate(shots):
        groups.setdefault((map_distance_zone(s.location), s.bodypart), []).append(i)
    for idx in groups.values():
        freq = d.y[idx].mean()
        if 0 < freq < 1:
            assert np.allclose(p[idx], freq, atol=1e-8, rtol=0)


def test_intercept_only_equals_sample_mean(synthetic_season):
    shots = synthetic_season.shots
    spec = dataclasses.replace(model_spec("base", "onehot"), covariates=())
    d = build_design_matrix(shots, spec)
    f = fit(d)
    rate = sum(s.is_goal for s in shots) / len(shots)
    assert np.allclose(predict_design(f, d), rate, atol=1e-10, rtol=0)


def test_gradient_matches_finite_differences(synthetic_season, base_fit):
    d = build_design_matrix(synthetic_season.shots, model_spec("base"), base_fit.layout)
    rng = np.random.default_rng(3)
    idx = rng.choice(d.n_obs, 50, replace=False)
    X, y = d.X[idx], d.y[idx]
    beta = base_fit.beta()
    g = score(X, y, beta)
    h = 1e-5
    fd = np.array([
        (log_likelihood(X, y, beta + h * e) - log_likelihood(X, y, beta - h * e)) / (2 * h)
        for e in np.eye(len(beta))
    ])
    assert np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-3)) < 1e-5


def test_gradient_vanishes_at_optimum(synthetic_season, base_fit):
    d = build_design_matrix(synthetic_season.shots, model_spec("base"), base_fit.layout)
    assert np.max(np.abs(score(d.X, d.y, base_fit.beta()))) < 1e-4


def test_aic_minus_deviance_is_twice_params(synthetic_season):
    for name in ("base", "interaction", "granular"):
        f = fit_shots(synthetic_season.shots, model_spec(name))
        assert f.converged
        assert f.aic - f.residual_deviance == 2 * f.n_params


def test_deviance_trace_is_monotone(base_fit):
    tr = np.array(base_fit.deviance_trace)
    assert len(tr) >= 2 and np.all(np.diff(tr) <= 0)


def test_row_permutation_invariance(synthetic_season, base_fit):
    shots = list(synthetic_season.shots)
    np.random.default_rng(11).shuffle(shots)
    f2 = fit_shots(shots, model_spec("base"))
    assert f2.columns == base_fit.columns
    assert np.max(np.abs(f2.beta() - base_fit.beta())) < 1e-8


def test_reference_level_invariance(synthetic_season):
    shots = synthetic_season.shots
    spec = model_spec("base", "onehot")
    d1 = build_design_matrix(shots, spec)
    spec2 = dataclasses.replace(spec, references={"distance_zone": DistanceZone.OUTSIDE_BOX,
                                                  "bodypart": 3})
    d2 = build_design_matrix(shots, spec2)
    assert d1.columns != d2.columns
    p1, p2 = predict_design(fit(d1), d1), predict_design(fit(d2), d2)
    assert np.max(np.abs(p1 - p2)) < 1e-8


@pytest.mark.parametrize("label", [0, 1])
def test_degenerate_labels(label):
    d = build_design_matrix([shot(1, label), shot(2, label)], model_spec("base", "onehot"))
    with pytest.raises(DegenerateOutcomeError):
        fit(d)


def test_aliased_column_dropped_with_warning():
    # bodypart 2 always at location 15: zone and bodypart indicators coincide
    shots = ([shot(1, i % 3 == 0, 3) for i in range(12)]
             + [shot(2, i % 4 == 0, 15) for i in range(12)])
    d = build_design_matrix(shots, model_spec("base", "onehot"))
    with pytest.warns(GlmWarning, match="aliased"):
        f = fit(d)
    assert len(f.aliased) == 1 and f.n_params == 2


def test_quasi_separation_warning():
    shots = [shot(1, i < 3) for i in range(10)] + [shot(2, 0) for _ in range(10)]
    d = build_design_matrix(shots, model_spec("base", "onehot"))
    with pytest.warns(GlmWarning, match="separation"):
        fit(d)


def test_sigmoid_limits():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    vals = sigmoid(np.array([1.0, 5.0, 30.0, 800.0]))
    assert np.all(np.diff(vals) >= 0) and vals[-1] == 1.0
    assert sigmoid(np.array([-800.0]))[0] == 0.0


@settings(max_examples=50)
@given(st.floats(-700, 700))
def test_sigmoid_symmetry(x):
    assert abs(sigmoid(np.array([x]))[0] + sigmoid(np.array([-x]))[0] - 1) < 1e-15


def test_predict_column_mismatch(base_fit):
    with pytest.raises(ScoringError, match="missing"):
        predict(base_fit, {"(Intercept)": 1.0})
    with pytest.raises(ScoringError):
        predict(base_fit, [1.0, 2.0])


def test_eta_zero_gives_half(base_fit):
    assert predict(base_fit, [0.0] * len(base_fit.columns)) == 0.5


def test_compare_models_orders_by_aic(synthetic_season):
    fits = [fit_shots(synthetic_season.shots, model_spec(n))
            for n in ("base", "interaction", "granular")]
    rows = compare_models(fits)
    assert [r.aic for r in rows] == sorted(r.aic for r in rows)
    assert rows[0].delta_aic == 0
    assert compare_models(fits[:1])[0].delta_aic == 0


def test_compare_models_ties_by_name(base_fit):
    clone = dataclasses.replace(base_fit, spec=dataclasses.replace(base_fit.spec, name="alpha"))
    assert [r.model for r in compare_models([base_fit, clone])] == ["alpha", "base"]


def test_compare_models_rejects_different_samples(synthetic_season, base_fit):
    other = fit_shots(synthetic_season.shots[:-200], model_spec("base"))
    with pytest.raises(ComparabilityError):
        compare_models([base_fit, other])


def test_matches_statsmodels(synthetic_season):
    sm = pytest.importorskip("statsmodels.api")
    for name in ("base", "interaction", "granular"):
        d = build_design_matrix(synthetic_season.shots, model_spec(name))
        ours = fit(d)
        ref = sm.GLM(d.y, d.X, family=sm.families.Binomial()).fit()
        assert abs(ours.residual_deviance - ref.deviance) < 1e-6
        assert abs(ours.aic - ref.aic) < 1e-6
        assert np.max(np.abs(ours.beta() - ref.params)) < 1e-5
