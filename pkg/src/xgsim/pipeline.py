"""End-to-end runs: load, fit, aggregate, simulate, summarise."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .features import SPEC_NAMES, granular_mapping_table, model_spec
from .glm import GlmFit, compare_models, fit_shots
from .inference import (
    AgreementReport,
    Deviation,
    OutcomeSummary,
    QuartileRow,
    RankGap,
    ResidualSignal,
    agreement_metrics,
    outcome_probabilities,
    prediction_error_table,
    quartile_analysis,
    rank_by,
    rank_gap,
    residualized_signal,
)
from .ingest import (
    DropReport,
    MatchRecord,
    RawEvent,
    ShotEvent,
    extract_shots,
    load_events,
    load_matches,
)
from .simulate import (
    LeagueTable,
    SimulationEnsemble,
    fixtures_from_matches,
    realized_results,
    simulate_season,
    simulate_second_half,
    standings,
)
from .strength import MatchXg, TeamStrength, league_mean_rate, match_xg, split_season, team_rates

log = logging.getLogger(__name__)

MODES = ("ex_post", "ex_ante_midseason")


@dataclass
class Season:
    matches: list[MatchRecord]
    events: list[RawEvent]
    shots: list[ShotEvent]
    report: DropReport = field(default_factory=DropReport)

    @property
    def teams(self) -> list[str]:
        return sorted({t for m in self.matches for t in m.teams})


def load_season(matches_path, events_path, league: str | None = None,
                season: str | None = None) -> Season:
    report = DropReport()
    matches = load_matches(matches_path, report, league=league, season=season)
    select = {m.match_id for m in matches} if (league or season) else None
    events = load_events(events_path, matches=matches, report=report, select=select)
    shots = extract_shots(events, report)
    return Season(matches, events, shots, report)


def fit_all(shots: Sequence[ShotEvent], specs: Sequence[str] = SPEC_NAMES,
            encoding: str = "coded") -> dict[str, GlmFit]:
    return {name: fit_shots(shots, model_spec(name, encoding)) for name in specs}


def _shots_in(shots, match_ids):
    return [s for s in shots if s.match_id in match_ids]


@dataclass
class ExPostRun:
    fit: GlmFit
    match_xgs: list[MatchXg]
    strengths: list[TeamStrength]
    league_mean: float
    ensemble: SimulationEnsemble
    summaries: list[OutcomeSummary]
    realized_table: LeagueTable
    agreement_points: AgreementReport
    agreement_ranks: AgreementReport
    mode: str = "ex_post"


def run_ex_post(season: Season, spec: str = "granular", encoding: str = "coded",
                n_sims: int = 1000, seed: int = 0, home_advantage: float = 1.0,
                n_jobs: int = 1, fit: GlmFit | None = None) -> ExPostRun:
    """Strengths from full-season xG; every fixture simulated."""
    fit = fit or fit_shots(season.shots, model_spec(spec, encoding))
    mx = match_xg(fit, season.shots, season.matches)
    strengths = team_rates(mx)
    lm = league_mean_rate(mx)
    fixtures = fixtures_from_matches(season.matches)
    ens = simulate_season(fixtures, strengths, lm, n_sims, seed, home_advantage, n_jobs)
    realized = standings(realized_results(season.matches, fixtures), seed=seed)
    return ExPostRun(
        fit, mx, strengths, lm, ens, outcome_probabilities(ens), realized,
        agreement_metrics(ens.mean_points(), realized.points(), "points"),
        agreement_metrics(ens.mean_rank(), realized.ranks(), "ranks"),
    )


@dataclass
class ExAnteRun:
    fit: GlmFit
    first_half: list[MatchRecord]
    second_half: list[MatchRecord]
    match_xgs: list[MatchXg]
    strengths: list[TeamStrength]
    league_mean: float
    ensemble: SimulationEnsemble
    summaries: list[OutcomeSummary]
    mid_table: LeagueTable
    final_table: LeagueTable
    first_half_xg: dict[str, float]
    second_half_points: dict[str, int]
    simulated_second_half_points: dict[str, float]
    rank_gaps: list[RankGap]
    quartiles: list[QuartileRow]
    residual: ResidualSignal
    prediction_errors: list[Deviation]
    agreement_points: AgreementReport
    agreement_ranks: AgreementReport
    mode: str = "ex_ante_midseason"


def run_ex_ante(season: Season, spec: str = "granular", encoding: str = "coded",
                n_sims: int = 1000, seed: int = 0, home_advantage: float = 1.0,
                n_jobs: int = 1) -> ExAnteRun:
    """Condition on first-half information only.

    The xG model is fitted on first-half shots, team strengths come from
    first-half match xG, realised first-half results are carried forward and
    the second half is simulated.
    """
    first, second = split_season(season.matches)
    first_ids = {m.match_id for m in first}
    shots1 = _shots_in(season.shots, first_ids)
    fit = fit_shots(shots1, model_spec(spec, encoding))
    mx = match_xg(fit, shots1, first)
    strengths = team_rates(mx, teams=season.teams)
    lm = league_mean_rate(mx)

    fixtures = fixtures_from_matches(season.matches)
    by_id = {f.match_id: f for f in fixtures}
    realized1 = realized_results(first, fixtures)
    ens = simulate_second_half(realized1, [by_id[m.match_id] for m in second], strengths, lm,
                               n_sims, seed, home_advantage, n_jobs)

    mid = standings(realized1, teams=season.teams, seed=seed)
    final = standings(realized_results(season.matches, fixtures), seed=seed)
    mid_pts = mid.points()
    second_pts = {t: final.points()[t] - mid_pts[t] for t in season.teams}
    sim_mean = ens.mean_points()
    sim_second = {t: sim_mean[t] - mid_pts[t] for t in season.teams}

    xg1 = {t: 0.0 for t in season.teams}
    for r in mx:
        xg1[r.team] += r.xg_for

    return ExAnteRun(
        fit=fit, first_half=first, second_half=second, match_xgs=mx, strengths=strengths,
        league_mean=lm, ensemble=ens, summaries=outcome_probabilities(ens),
        mid_table=mid, final_table=final, first_half_xg=xg1,
        second_half_points=second_pts, simulated_second_half_points=sim_second,
        rank_gaps=rank_gap(rank_by(xg1), mid.ranks()),
        quartiles=quartile_analysis(xg1, second_pts),
        residual=residualized_signal(mid_pts, xg1, second_pts),
        prediction_errors=prediction_error_table(sim_second, second_pts),
        agreement_points=agreement_metrics(sim_mean, final.points(), "points"),
        agreement_ranks=agreement_metrics(ens.mean_rank(), final.ranks(), "ranks"),
    )


def model_comparison(season: Season, specs: Sequence[str] = SPEC_NAMES,
                     encoding: str = "coded"):
    fits = fit_all(season.shots, specs, encoding)
    return fits, compare_models(list(fits.values()))


def granular_note(fit: GlmFit) -> dict[int, str] | None:
    if fit.layout is None or "distance_zone_granular" not in fit.spec.covariates:
        return None
    return granular_mapping_table(fit.layout)
