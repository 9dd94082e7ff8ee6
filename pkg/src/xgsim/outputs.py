"""CSV / JSON writers for fits, ensembles and plot-ready report tables.

All writers are deterministic: no timestamps, floats written with ``repr``
(shortest round-trip form), JSON keys sorted.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .glm import ComparisonRow, GlmFit
from .inference import AgreementReport, OutcomeSummary, cumulative_trajectory
from .simulate import LeagueTable, SimulationEnsemble, convergence_trace
from .strength import write_strengths


def git_blob_sha1(path: str | Path) -> str:
    """Content hash computed the way ``git hash-object`` does."""
    data = Path(path).read_bytes()
    h = hashlib.sha1(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def _clean(obj):
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return v


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_comparison(path, rows: Sequence[ComparisonRow]) -> None:
    write_rows(path, ["model", "aic", "residual_deviance", "n_params", "delta_aic"],
               [(r.model, r.aic, r.residual_deviance, r.n_params, r.delta_aic) for r in rows])


def write_outcomes(path, summaries: Sequence[OutcomeSummary]) -> None:
    write_rows(path, ["team", "expected_points", "points_lo", "points_hi", "expected_rank",
                      "rank_lo", "rank_hi", "p_title", "p_top4", "p_releg"],
               [(s.team, s.expected_points, *s.points_interval, s.expected_rank,
                 *s.rank_interval, s.p_title, s.p_top4, s.p_releg) for s in summaries])


def write_agreement(path, reports: Sequence[AgreementReport]) -> None:
    write_rows(path, ["target", "spearman", "pearson", "r_squared", "rmse", "mae", "n"],
               [(a.target, a.spearman, a.pearson, a.r_squared, a.rmse, a.mae, a.n)
                for a in reports])


def write_table(path, table: LeagueTable) -> None:
    write_rows(path, ["rank", "team", "played", "points", "wins", "draws", "losses",
                      "goals_for", "goals_against", "goal_difference"],
               [(r.rank, r.team, r.played, r.points, r.wins, r.draws, r.losses,
                 r.goals_for, r.goals_against, r.goal_difference) for r in table.rows])


def write_convergence(path, ensemble: SimulationEnsemble) -> None:
    """Long format: team, n_sims, running mean rank."""
    rows = []
    for team in ensemble.teams:
        trace = convergence_trace(ensemble, team)
        rows += [(team, k + 1, float(v)) for k, v in enumerate(trace)]
    write_rows(path, ["team", "n_sims", "running_mean_rank"], rows)


def write_rank_vs_realized(path, summaries: Sequence[OutcomeSummary],
                           realized: LeagueTable) -> None:
    ranks, pts = realized.ranks(), realized.points()
    write_rows(path, ["team", "expected_rank", "rank_lo", "rank_hi", "realized_rank",
                      "expected_points", "points_lo", "points_hi", "realized_points"],
               [(s.team, s.expected_rank, *s.rank_interval, ranks[s.team],
                 s.expected_points, *s.points_interval, pts[s.team]) for s in summaries])


def write_fit_outputs(outdir: Path, fits: dict[str, GlmFit], rows: Sequence[ComparisonRow],
                      granular: dict | None) -> list[Path]:
    written = []
    for name, f in fits.items():
        p = outdir / f"fit_{name}.json"
        summary = f.summary()
        if granular is not None and "distance_zone_granular" in f.spec.covariates:
            summary["granular_mapping"] = granular
        write_json(p, summary)
        written.append(p)
    p = outdir / "model_comparison.csv"
    write_comparison(p, rows)
    written.append(p)
    return written


def write_ex_post(outdir: Path, run) -> list[Path]:
    paths = {
        "ensemble": outdir / "ensemble.csv",
        "outcomes": outdir / "outcomes.csv",
        "agreement": outdir / "agreement.csv",
        "strengths": outdir / "strengths.csv",
        "realized": outdir / "realized_table.csv",
        "rank_vs_realized": outdir / "rank_vs_realized.csv",
        "convergence": outdir / "convergence.csv",
    }
    run.ensemble.to_csv(paths["ensemble"])
    write_outcomes(paths["outcomes"], run.summaries)
    write_agreement(paths["agreement"], [run.agreement_points, run.agreement_ranks])
    write_strengths(paths["strengths"], run.strengths)
    write_table(paths["realized"], run.realized_table)
    write_rank_vs_realized(paths["rank_vs_realized"], run.summaries, run.realized_table)
    write_convergence(paths["convergence"], run.ensemble)
    return list(paths.values())


def write_ex_ante(outdir: Path, run) -> list[Path]:
    p = {k: outdir / f"{k}.csv" for k in (
        "ensemble", "outcomes", "agreement", "strengths", "midseason_table", "final_table",
        "midseason_ranks", "rank_gap", "quartiles", "residualized_signal",
        "second_half_points", "rank_vs_realized", "prediction_error",
        "convergence", "cumulative_trajectory")}
    run.ensemble.to_csv(p["ensemble"])
    write_outcomes(p["outcomes"], run.summaries)
    write_agreement(p["agreement"], [run.agreement_points, run.agreement_ranks])
    write_strengths(p["strengths"], run.strengths)
    write_table(p["midseason_table"], run.mid_table)
    write_table(p["final_table"], run.final_table)
    write_rows(p["midseason_ranks"], ["team", "points_rank", "points", "xg_rank", "xg"],
               sorted(((g.team, g.points_rank, run.mid_table.points()[g.team], g.xg_rank,
                        run.first_half_xg[g.team]) for g in run.rank_gaps),
                      key=lambda r: r[1]))
    write_rows(p["rank_gap"], ["team", "xg_rank", "points_rank", "gap"],
               [(g.team, g.xg_rank, g.points_rank, g.gap) for g in run.rank_gaps])
    write_rows(p["quartiles"], ["quartile", "team", "first_half_xg", "second_half_points",
                                "quartile_mean_points"],
               [(q.quartile, t, run.first_half_xg[t], run.second_half_points[t],
                 q.mean_second_half_points) for q in run.quartiles for t in q.teams])
    res = run.residual
    write_rows(p["residualized_signal"],
               ["team", "first_half_xg", "residual", "slope", "correlation"],
               [(t, run.first_half_xg[t], res.residuals.get(t, float("nan")), res.slope,
                 res.correlation) for t in sorted(run.first_half_xg)])
    mid_pts = run.mid_table.points()
    write_rows(p["second_half_points"],
               ["team", "simulated_mean", "lo", "hi", "realized"],
               [(s.team, s.expected_points - mid_pts[s.team],
                 s.points_interval[0] - mid_pts[s.team], s.points_interval[1] - mid_pts[s.team],
                 run.second_half_points[s.team]) for s in run.summaries])
    write_rank_vs_realized(p["rank_vs_realized"], run.summaries, run.final_table)
    write_rows(p["prediction_error"], ["team", "simulated_mean", "realized", "deviation"],
               [(d.team, d.simulated_mean, d.realized, d.deviation)
                for d in run.prediction_errors])
    write_convergence(p["convergence"], run.ensemble)
    teams = sorted(run.first_half_xg)
    write_rows(p["cumulative_trajectory"],
               ["team", "match_index", "cumulative_points", "cumulative_xg"],
               [(t, tp.match_index, tp.cumulative_points, tp.cumulative_xg)
                for t in teams for tp in cumulative_trajectory(t, run.match_xgs, teams)])
    return list(p.values())
