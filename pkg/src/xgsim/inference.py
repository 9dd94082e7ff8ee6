"""Outcome probabilities, agreement metrics and mid-season diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError
from .simulate import SimulationEnsemble
from .strength import MatchXg

TOP_N = 4
RELEGATION_N = 3


@dataclass(frozen=True)
class OutcomeSummary:
    team: str
    expected_points: float
    expected_rank: float
    points_interval: tuple[float, float]
    rank_interval: tuple[float, float]
    p_title: float
    p_top4: float
    p_releg: float


def outcome_probabilities(ensemble: SimulationEnsemble, top: int = TOP_N,
                          relegated: int = RELEGATION_N) -> list[OutcomeSummary]:
    """Per-team summaries, ordered by expected rank.

    Intervals are empirical 2.5 / 97.5 percentiles of the ensemble.
    """
    if ensemble.n_sims == 0:
        raise DomainError("empty ensemble")
    n_teams = len(ensemble.teams)
    pts, ranks = ensemble.points, ensemble.ranks
    p_lo, p_hi = np.percentile(pts, [2.5, 97.5], axis=0)
    r_lo, r_hi = np.percentile(ranks, [2.5, 97.5], axis=0)
    out = []
    for t, team in enumerate(ensemble.teams):
        r = ranks[:, t]
        out.append(OutcomeSummary(
            team,
            float(pts[:, t].mean()),
            float(r.mean()),
            (float(p_lo[t]), float(p_hi[t])),
            (float(r_lo[t]), float(r_hi[t])),
            float(np.count_nonzero(r == 1) / ensemble.n_sims),
            float(np.count_nonzero(r <= top) / ensemble.n_sims),
            float(np.count_nonzero(r > n_teams - relegated) / ensemble.n_sims),
        ))
    out.sort(key=lambda s: (s.expected_rank, s.team))
    return out


@dataclass(frozen=True)
class AgreementReport:
    spearman: float
    pearson: float
    r_squared: float
    rmse: float
    mae: float
    target: str
    n: int
    # False when either input has zero variance; correlations are then NaN
    correlation_defined: bool = True


def _aligned(predicted: Mapping[str, float], realized: Mapping[str, float]):
    if len(predicted) != len(realized) or set(predicted) != set(realized):
        raise DomainError(
            f"predicted ({len(predicted)} teams) and realized ({len(realized)} teams) "
            "must cover the same teams"
        )
    teams = sorted(predicted)
    return (np.array([predicted[t] for t in teams], float),
            np.array([realized[t] for t in teams], float))


def agreement_metrics(predicted: Mapping[str, float], realized: Mapping[str, float],
                      target: str = "points") -> AgreementReport:
    p, r = _aligned(predicted, realized)
    if p.size < 2:
        raise DomainError("at least two teams are required")
    err = p - r
    rmse = float(math.sqrt(np.mean(err ** 2)))
    mae = float(np.mean(np.abs(err)))
    if np.ptp(p) == 0 or np.ptp(r) == 0:
        nan = float("nan")
        return AgreementReport(nan, nan, nan, rmse, mae, target, p.size, False)
    rho = float(stats.spearmanr(p, r).statistic)
    pearson = float(np.clip(np.corrcoef(p, r)[0, 1], -1.0, 1.0))
    return AgreementReport(rho, pearson, pearson ** 2, rmse, mae, target, p.size)


def rank_by(values: Mapping[str, float], descending: bool = True) -> dict[str, int]:
    """Competition-free ranking 1..n; ties broken by team name."""
    sign = -1.0 if descending else 1.0
    order = sorted(values, key=lambda t: (sign * values[t], t))
    return {t: i + 1 for i, t in enumerate(order)}


@dataclass(frozen=True)
class RankGap:
    team: str
    xg_rank: int
    points_rank: int
    gap: int


def rank_gap(xg_ranks: Mapping[str, int], points_ranks: Mapping[str, int]) -> list[RankGap]:
    """Places a team sits higher on points than on xG (positive = overperforming).

    The gap is ``xg_rank - points_rank``: with rank 1 as best, a team first
    on points but fourth on xG has gap +3.
    """
    if set(xg_ranks) != set(points_ranks):
        raise DomainError("xG and points rankings must cover the same teams")
    rows = [RankGap(t, xg_ranks[t], points_ranks[t], xg_ranks[t] - points_ranks[t])
            for t in xg_ranks]
    rows.sort(key=lambda g: (-g.gap, g.team))
    return rows


@dataclass(frozen=True)
class QuartileRow:
    quartile: int
    teams: tuple[str, ...]
    mean_xg: float
    mean_second_half_points: float


def quartile_analysis(first_half_xg: Mapping[str, float],
                      second_half_points: Mapping[str, float]) -> list[QuartileRow]:
    """Group teams into quartiles by descending first-half xG (Q1 highest)."""
    if set(first_half_xg) != set(second_half_points):
        raise DomainError("xG and points must cover the same teams")
    order = sorted(first_half_xg, key=lambda t: (-first_half_xg[t], t))
    rows = []
    for q, group in enumerate(np.array_split(np.array(order, dtype=object), 4), start=1):
        g = tuple(group.tolist())
        rows.append(QuartileRow(
            q, g,
            float(np.mean([first_half_xg[t] for t in g])) if g else float("nan"),
            float(np.mean([second_half_points[t] for t in g])) if g else float("nan"),
        ))
    return rows


@dataclass(frozen=True)
class ResidualSignal:
    intercept: float
    slope: float
    correlation: float
    positive: bool
    residuals: Mapping[str, float]
    defined: bool = True


def residualized_signal(mid_points: Mapping[str, float], first_half_xg: Mapping[str, float],
                        second_half_points: Mapping[str, float]) -> ResidualSignal:
    """Regress second-half points on mid-season points; correlate residuals with xG."""
    if not (set(mid_points) == set(first_half_xg) == set(second_half_points)):
        raise DomainError("all inputs must cover the same teams")
    teams = sorted(mid_points)
    x = np.array([mid_points[t] for t in teams], float)
    y = np.array([second_half_points[t] for t in teams], float)
    g = np.array([first_half_xg[t] for t in teams], float)
    nan = float("nan")
    if np.ptp(x) == 0:
        return ResidualSignal(nan, nan, nan, False, {}, defined=False)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (intercept + slope * x)
    scale = max(1.0, float(np.abs(y).max()))
    if np.ptp(res) <= 1e-9 * scale or np.ptp(g) == 0:
        corr, defined = nan, False
    else:
        corr, defined = float(np.corrcoef(res, g)[0, 1]), True
    return ResidualSignal(float(intercept), float(slope), corr,
                          bool(defined and corr > 0), dict(zip(teams, res.tolist())),
                          defined)


@dataclass(frozen=True)
class TrajectoryPoint:
    match_index: int
    cumulative_points: int
    cumulative_xg: float


def cumulative_trajectory(team: str, match_xgs: Sequence[MatchXg],
                          teams: Sequence[str] | None = None) -> list[TrajectoryPoint]:
    """Running points and xG over the team's matches in date order."""
    known = set(teams) if teams is not None else {r.team for r in match_xgs}
    if known and team not in known:
        raise KeyError(f"unknown team {team!r}")
    rows = sorted((r for r in match_xgs if r.team == team), key=lambda r: (r.date, r.match_id))
    out, pts, xg = [], 0, 0.0
    for i, r in enumerate(rows, start=1):
        pts += r.points
        xg += r.xg_for
        out.append(TrajectoryPoint(i, pts, xg))
    return out


@dataclass(frozen=True)
class Deviation:
    team: str
    simulated_mean: float
    realized: float
    deviation: float


def prediction_error_table(simulated_means: Mapping[str, float],
                           realized: Mapping[str, float]) -> list[Deviation]:
    """``realized - simulated mean`` per team, largest positive first."""
    if set(simulated_means) != set(realized):
        raise DomainError("simulated and realized values must cover the same teams")
    rows = [Deviation(t, simulated_means[t], realized[t], realized[t] - simulated_means[t])
            for t in simulated_means]
    rows.sort(key=lambda d: (-d.deviation, d.team))
    return rows


def extreme_teams(summaries: Sequence[OutcomeSummary], k: int = 2) -> list[str]:
    """Teams ranked 1..k and last k by expected rank."""
    ordered = sorted(summaries, key=lambda s: (s.expected_rank, s.team))
    names = [s.team for s in ordered]
    return names[:k] + names[-k:]
