"""Shot covariates, model specifications and design-matrix encoding.

Two encodings are supported for the raw integer-coded covariates
(``shot_place``, ``bodypart``, ``situation``, ``assist_method``,
``fast_break``):

``coded``
    The code enters the linear predictor as a single numeric column, which is
    what an R ``glm()`` does with integer columns that were never wrapped in
    ``factor()``.  Engineered zone variables are still one-hot encoded.  This
    reproduces the 10 / 14 / 11 parameter counts of the reference model table.
``onehot``
    Every covariate is one-hot encoded against its lowest observed level.
"""
from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, ScoringError
from .ingest import ShotEvent

log = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"
ENCODINGS = ("coded", "onehot")
RAW_COVARIATES = ("shot_place", "bodypart", "situation", "assist_method", "fast_break")
ZONE_COVARIATES = ("distance_zone", "distance_zone_granular")


class DistanceZone(str, enum.Enum):
    CLOSE_RANGE = "close_range"
    MEDIUM_RANGE = "medium_range"
    OUTSIDE_BOX = "outside_box"
    LONG_RANGE = "long_range"
    OTHER = "other"


class GranularZone(str, enum.Enum):
    CENTRE_BOX = "centre_box"
    SIDE_BOX = "side_box"
    SIX_YARD = "six_yard"
    VERY_CLOSE = "very_close"
    PENALTY_SPOT = "penalty_spot"
    OUTSIDE_BOX = "outside_box"
    LONG_RANGE = "long_range"
    OTHER = "other"


_DISTANCE_MAP = {
    **dict.fromkeys((10, 12, 13, 14), DistanceZone.CLOSE_RANGE),
    **dict.fromkeys((3, 9, 11), DistanceZone.MEDIUM_RANGE),
    **dict.fromkeys((15, 16), DistanceZone.OUTSIDE_BOX),
    **dict.fromkeys((17, 18), DistanceZone.LONG_RANGE),
}

# Location legend of the event feed: 3 centre of the box, 9/11 left/right side
# of the box, 10/12 left/right of the six-yard box, 13 very close range,
# 14 penalty spot, 15 outside the box, 16 long range, 17/18 beyond 35/40 yards.
_GRANULAR_MAP = {
    3: GranularZone.CENTRE_BOX,
    **dict.fromkeys((9, 11), GranularZone.SIDE_BOX),
    **dict.fromkeys((10, 12), GranularZone.SIX_YARD),
    13: GranularZone.VERY_CLOSE,
    14: GranularZone.PENALTY_SPOT,
    15: GranularZone.OUTSIDE_BOX,
    **dict.fromkeys((16, 17, 18), GranularZone.LONG_RANGE),
}

# Applied in order while the granular design has more parameters than the
# spec's target count.
GRANULAR_MERGES = (
    (GranularZone.SIX_YARD, GranularZone.VERY_CLOSE),
    (GranularZone.LONG_RANGE, GranularZone.OUTSIDE_BOX),
    (GranularZone.SIDE_BOX, GranularZone.CENTRE_BOX),
)


def _check_location(location: int) -> None:
    if not isinstance(location, (int, np.integer)) or not 1 <= location <= 19:
        raise DomainError(f"location code must be an integer in 1-19, got {location!r}")


def map_distance_zone(location: int) -> DistanceZone:
    _check_location(location)
    return _DISTANCE_MAP.get(int(location), DistanceZone.OTHER)


def map_granular_zone(location: int) -> GranularZone:
    _check_location(location)
    return _GRANULAR_MAP.get(int(location), GranularZone.OTHER)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    covariates: tuple[str, ...]
    interactions: tuple[tuple[str, str], ...] = ()
    # covariates entering as a single numeric column; all others are one-hot
    linear: frozenset[str] = frozenset()
    # reference level override per covariate; default is the lowest observed
    references: Mapping[str, object] = field(default_factory=dict)
    # granular zones are merged (GRANULAR_MERGES order) down to this many parameters
    target_params: int | None = None

    def __post_init__(self):
        allowed = set(ZONE_COVARIATES) | set(RAW_COVARIATES)
        for c in self.covariates:
            if c not in allowed:
                raise DomainError(f"unknown covariate {c!r}")
        for a, b in self.interactions:
            if a not in self.covariates or b not in self.covariates:
                raise DomainError(f"interaction {a}:{b} uses a covariate not in this model spec")
        if self.interactions and self.name != "interaction":
            raise DomainError("only the 'interaction' spec may carry interaction terms")
        if not set(self.linear) <= set(RAW_COVARIATES):
            raise DomainError("only raw coded covariates may enter linearly")


SPEC_NAMES = ("base", "interaction", "granular")


def model_spec(name: str, encoding: str = "coded") -> ModelSpec:
    """One of the three built-in model specs."""
    if name not in SPEC_NAMES:
        raise DomainError(f"unknown model spec {name!r}; choose from {SPEC_NAMES}")
    if encoding not in ENCODINGS:
        raise DomainError(f"unknown encoding {encoding!r}; choose from {ENCODINGS}")
    zone = "distance_zone_granular" if name == "granular" else "distance_zone"
    linear = frozenset(RAW_COVARIATES) if encoding == "coded" else frozenset()
    inter = (("distance_zone", "bodypart"),) if name == "interaction" else ()
    target = 11 if name == "granular" and encoding == "coded" else None
    return ModelSpec(name, (zone, *RAW_COVARIATES), inter, linear, {}, target)


def _level_key(level):
    # zone enums sort by declaration order, codes numerically
    if isinstance(level, enum.Enum):
        return list(type(level)).index(level)
    return level


def _level_label(level) -> str:
    return level.value if isinstance(level, enum.Enum) else str(level)


@dataclass(frozen=True)
class DesignLayout:
    """Frozen column registry; lets new shots be scored against a fit."""

    spec: ModelSpec
    levels: Mapping[str, tuple]          # categorical covariate -> all levels, ref first
    granular_map: Mapping[int, GranularZone]
    columns: tuple[str, ...]

    def encode(self, covariate: str, values: Sequence) -> np.ndarray:
        """Columns for one covariate (excluding the reference level)."""
        if covariate in self.spec.linear:
            return np.asarray(values, dtype=float)[:, None]
        levels = self.levels[covariate]
        index = {lv: i for i, lv in enumerate(levels)}
        out = np.zeros((len(values), len(levels) - 1))
        for r, v in enumerate(values):
            try:
                i = index[v]
            except KeyError:
                raise ScoringError(
                    f"{covariate} level {_level_label(v)!r} unseen when the model was fitted"
                ) from None
            if i:
                out[r, i - 1] = 1.0
        return out

    def column_names(self, covariate: str) -> list[str]:
        if covariate in self.spec.linear:
            return [covariate]
        return [f"{covariate}[{_level_label(lv)}]" for lv in self.levels[covariate][1:]]


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    layout: DesignLayout
    notes: tuple[str, ...] = ()

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    def row(self, i: int) -> dict[str, float]:
        return dict(zip(self.columns, self.X[i]))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*self.columns, "y"])
            for xr, yv in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in xr] + [int(yv)])


def covariate_values(
    shots: Sequence[ShotEvent], covariate: str,
    granular_map: Mapping[int, GranularZone] | None = None,
) -> list:
    if covariate == "distance_zone":
        return [map_distance_zone(s.location) for s in shots]
    if covariate == "distance_zone_granular":
        gm = granular_map or {}
        return [gm.get(s.location) or map_granular_zone(s.location) for s in shots]
    return [getattr(s, covariate) for s in shots]


def _merged_granular_map(merges) -> dict[int, GranularZone]:
    out = {}
    for code in range(1, 20):
        z = map_granular_zone(code)
        for src, dst in merges:
            if z is src:
                z = dst
        out[code] = z
    return out


def _layout(shots, spec: ModelSpec, granular_map) -> DesignLayout:
    levels = {}
    for cov in spec.covariates:
        if cov in spec.linear:
            continue
        observed = sorted(set(covariate_values(shots, cov, granular_map)), key=_level_key)
        ref = spec.references.get(cov)
        if ref is not None:
            if ref not in observed:
                raise DomainError(f"reference level {ref!r} of {cov} not observed")
            observed.remove(ref)
            observed.insert(0, ref)
        levels[cov] = tuple(observed)
    proto = DesignLayout(spec, levels, granular_map, ())
    cols = [INTERCEPT]
    for cov in spec.covariates:
        cols += proto.column_names(cov)
    for a, b in spec.interactions:
        cols += [f"{ca}:{cb}" for ca in proto.column_names(a) for cb in proto.column_names(b)]
    return DesignLayout(spec, levels, granular_map, tuple(cols))


def build_layout(shots: Sequence[ShotEvent], spec: ModelSpec) -> tuple[DesignLayout, list[str]]:
    """Derive the column registry from the observed level sets."""
    notes = []
    merges = []
    gmap = _merged_granular_map(merges)
    layout = _layout(shots, spec, gmap)
    if spec.target_params is not None and "distance_zone_granular" in spec.covariates:
        for merge in GRANULAR_MERGES:
            if len(layout.columns) <= spec.target_params:
                break
            merges.append(merge)
            gmap = _merged_granular_map(merges)
            layout = _layout(shots, spec, gmap)
            notes.append(f"merged granular zone {merge[0].value} into {merge[1].value}")
        if len(layout.columns) != spec.target_params:
            notes.append(f"granular design has {len(layout.columns)} parameters, "
                         f"target was {spec.target_params}")
    return layout, notes


def build_design_matrix(
    shots: Sequence[ShotEvent], spec: ModelSpec, layout: DesignLayout | None = None
) -> DesignMatrix:
    """Encode shots into an intercept-first design matrix.

    Without ``layout`` the registry is built from the observed levels (first
    fit).  With a frozen ``layout`` an unseen level raises ScoringError.
    """
    notes: list[str] = []
    if layout is None:
        layout, notes = build_layout(shots, spec)
    elif layout.spec != spec:
        raise ScoringError(f"layout was built for spec {layout.spec.name!r}, not {spec.name!r}")

    n = len(shots)
    blocks = [np.ones((n, 1))]
    encoded = {}
    for cov in spec.covariates:
        encoded[cov] = layout.encode(cov, covariate_values(shots, cov, layout.granular_map))
        blocks.append(encoded[cov])
    for a, b in spec.interactions:
        ea, eb = encoded[a], encoded[b]
        blocks.append((ea[:, :, None] * eb[:, None, :]).reshape(n, -1))
    X = np.hstack(blocks) if n else np.zeros((0, len(layout.columns)))
    y = np.array([s.goal_label for s in shots], dtype=float)
    for note in notes:
        log.info("%s: %s", spec.name, note)
    return DesignMatrix(X, y, layout.columns, layout, tuple(notes))


def granular_mapping_table(layout: DesignLayout) -> dict[int, str]:
    """Final location-code to granular-zone assignment used by a layout."""
    return {code: layout.granular_map.get(code, map_granular_zone(code)).value
            for code in range(1, 20)}
