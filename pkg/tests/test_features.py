import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xgsim.errors import DomainError, ScoringError
from xgsim.features import (
    GRANULAR_MERGES,
    INTERCEPT,
    RAW_COVARIATES,
    DistanceZone,
    GranularZone,
    ModelSpec,
    build_design_matrix,
    granular_mapping_table,
    map_distance_zone,
    map_granular_zone,
    model_spec,
)
from xgsim.ingest import ShotEvent

codes = st.integers(min_value=1, max_value=19)


def shot(location=3, bodypart=1, shot_place=4, situation=1, assist_method=1,
         fast_break=0, is_goal=0):
    return ShotEvent("M1", 1, "A", 1, is_goal, location, shot_place, bodypart,
                     situation, assist_method, fast_break)


@pytest.mark.parametrize("code,zone", [
    (13, DistanceZone.CLOSE_RANGE), (3, DistanceZone.MEDIUM_RANGE),
    (19, DistanceZone.OTHER), (15, DistanceZone.OUTSIDE_BOX), (18, DistanceZone.LONG_RANGE),
])
def test_distance_zone_examples(code, zone):
    assert map_distance_zone(code) is zone


@pytest.mark.parametrize("code,zone", [
    (14, GranularZone.PENALTY_SPOT), (13, GranularZone.VERY_CLOSE),
    (19, GranularZone.OTHER), (11, GranularZone.SIDE_BOX), (12, GranularZone.SIX_YARD),
])
def test_granular_zone_examples(code, zone):
    assert map_granular_zone(code) is zone


@pytest.mark.parametrize("bad", [0, 20, -1, 3.5])
def test_out_of_range_location_rejected(bad):
    with pytest.raises(DomainError):
        map_distance_zone(bad)
    with pytest.raises(DomainError):
        map_granular_zone(bad)


@given(codes)
def test_zone_maps_are_total(code):
    assert isinstance(map_distance_zone(code), DistanceZone)
    assert isinstance(map_granular_zone(code), GranularZone)


@given(codes)
def test_granular_refines_other(code):
    assert (map_distance_zone(code) is DistanceZone.OTHER) == \
        (map_granular_zone(code) is GranularZone.OTHER)


def test_unknown_spec_and_encoding():
    with pytest.raises(DomainError):
        model_spec("quadratic")
    with pytest.raises(DomainError):
        model_spec("base", encoding="binary")


@pytest.mark.parametrize("encoding", ["coded", "onehot"])
def test_bodypart_change_touches_one_column(encoding):
    shots = [shot(bodypart=1), shot(bodypart=2)]
    d = build_design_matrix(shots, model_spec("base", encoding))
    diff = np.nonzero(d.X[0] != d.X[1])[0]
    assert len(diff) == 1
    assert d.columns[diff[0]].startswith("bodypart")


def test_interaction_column_is_product_of_indicators():
    cov = ("distance_zone", *RAW_COVARIATES)
    spec = ModelSpec("interaction", cov, (("distance_zone", "bodypart"),),
                     references={"distance_zone": DistanceZone.OTHER})
    shots = [shot(location=13, bodypart=3), shot(location=19, bodypart=1),
             shot(location=3, bodypart=3)]
    d = build_design_matrix(shots, spec)
    col = "distance_zone[close_range]:bodypart[3]"
    assert col in d.columns
    assert d.row(0)[col] == 1.0
    assert d.row(1)[col] == 0.0 and d.row(2)[col] == 0.0


def test_reference_level_is_lowest_code():
    d = build_design_matrix([shot(bodypart=2), shot(bodypart=3)], model_spec("base", "onehot"))
    assert "bodypart[3]" in d.columns and "bodypart[2]" not in d.columns
    assert d.columns[0] == INTERCEPT


def test_design_is_deterministic(synthetic_season):
    for name in ("base", "interaction", "granular"):
        a = build_design_matrix(synthetic_season.shots, model_spec(name))
        b = build_design_matrix(synthetic_season.shots, model_spec(name))
        assert a.columns == b.columns
        assert a.X.tobytes() == b.X.tobytes()


def test_parameter_counts(synthetic_season):
    counts = {n: len(build_design_matrix(synthetic_season.shots, model_spec(n)).columns)
              for n in ("base", "interaction", "granular")}
    assert counts == {"base": 10, "interaction": 14, "granular": 11}


def test_granular_merges_are_reported(synthetic_season):
    d = build_design_matrix(synthetic_season.shots, model_spec("granular"))
    assert d.notes
    table = granular_mapping_table(d.layout)
    src, dst = GRANULAR_MERGES[0]
    assert table[10] == dst.value and src.value not in table.values()


def test_unseen_level_under_frozen_layout(synthetic_season):
    d = build_design_matrix([shot(bodypart=1), shot(bodypart=2)], model_spec("base", "onehot"))
    with pytest.raises(ScoringError, match="bodypart"):
        build_design_matrix([shot(bodypart=3)], model_spec("base", "onehot"), layout=d.layout)


def test_onehot_design_is_binary(synthetic_season):
    d = build_design_matrix(synthetic_season.shots, model_spec("interaction", "onehot"))
    assert set(np.unique(d.X)) <= {0.0, 1.0}
