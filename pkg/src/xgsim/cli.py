"""Command-line driver: ``xgsim validate | fit | simulate | report``.

Settings come from flags, optionally layered over a JSON config file
(``--config``); flags win.  Input paths default to ``ginf.csv`` and
``events.csv`` inside ``$XGSIM_DATA_DIR``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import secrets
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .errors import XgSimError
from .features import ENCODINGS, SPEC_NAMES
from .inference import outcome_probabilities
from .ingest import check_event_links, check_season, season_summary
from .outputs import git_blob_sha1, write_ex_ante, write_ex_post, write_fit_outputs, write_json
from .pipeline import MODES, granular_note, load_season, model_comparison, run_ex_ante, run_ex_post
from .simulate import check_ensemble

log = logging.getLogger("xgsim")

DATA_DIR_ENV = "XGSIM_DATA_DIR"
DEFAULT_MATCHES = "ginf.csv"
DEFAULT_EVENTS = "events.csv"


@dataclass
class RunConfig:
    matches_path: str | None = None
    events_path: str | None = None
    league: str | None = None
    season: str | None = None
    model_spec: str = "granular"
    encoding: str = "coded"
    n_sims: int = 1000
    master_seed: int | None = None
    mode: str = "ex_ante_midseason"
    home_advantage: float = 1.0
    output_dir: str = "xgsim-out"
    jobs: int = 1

    def validate(self) -> None:
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.model_spec not in SPEC_NAMES:
            raise ValueError(f"spec must be one of {SPEC_NAMES}")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}")
        if not self.home_advantage > 0:
            raise ValueError("home_advantage must be positive")


# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "matches": "matches_path", "events": "events_path", "league": "league",
    "season": "season", "spec": "model_spec", "encoding": "encoding", "n_sims": "n_sims",
    "seed": "master_seed", "mode": "mode", "home_advantage": "home_advantage",
    "out": "output_dir", "jobs": "jobs",
}


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        names = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig(**values)
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir:
        cfg.matches_path = cfg.matches_path or str(Path(data_dir) / DEFAULT_MATCHES)
        cfg.events_path = cfg.events_path or str(Path(data_dir) / DEFAULT_EVENTS)
    cfg.validate()
    return cfg


def _need_paths(cfg: RunConfig) -> None:
    if not cfg.matches_path or not cfg.events_path:
        raise ValueError(f"--matches and --events are required (or set {DATA_DIR_ENV})")


def _print_summary(summary) -> None:
    print(f"matches            {summary.n_matches}")
    print(f"team observations  {summary.n_team_observations}")
    print(f"goals              {summary.n_goals}")
    print(f"home wins          {summary.n_home_wins}")
    print(f"draws              {summary.n_draws}")
    print(f"away wins          {summary.n_away_wins}")


def cmd_validate(cfg: RunConfig) -> int:
    _need_paths(cfg)
    season = load_season(cfg.matches_path, cfg.events_path, cfg.league, cfg.season)
    _print_summary(season_summary(season.matches))
    print(f"events             {len(season.events)}")
    print(f"complete-case shots {len(season.shots)} "
          f"({sum(s.goal_label for s in season.shots)} goals)")
    for (col, reason), n in sorted(season.report.counts().items()):
        print(f"dropped {n:6d}  {col}: {reason}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    season.report.to_csv(out / "drop_report.csv")
    problems = check_season(season.matches) + check_event_links(season.events, season.matches)
    if not season.shots:
        problems.append("no complete-case shots in the event file")
    for p in problems[:50]:
        print(f"INTEGRITY: {p}", file=sys.stderr)
    if len(problems) > 50:
        print(f"INTEGRITY: ... {len(problems) - 50} more", file=sys.stderr)
    return 0 if not problems else 1


def cmd_fit(cfg: RunConfig, specs) -> int:
    _need_paths(cfg)
    season = load_season(cfg.matches_path, cfg.events_path, cfg.league, cfg.season)
    fits, rows = model_comparison(season, specs, cfg.encoding)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    gran = next((granular_note(f) for f in fits.values() if granular_note(f)), None)
    write_fit_outputs(out, fits, rows, gran)
    print(f"{'model':<12} {'AIC':>10} {'deviance':>10} {'params':>6} {'dAIC':>8}")
    for r in rows:
        print(f"{r.model:<12} {r.aic:10.2f} {r.residual_deviance:10.2f} "
              f"{r.n_params:6d} {r.delta_aic:8.2f}")
    bad = [f.name for f in fits.values() if not f.converged]
    for name in bad:
        print(f"WARNING: {name} did not converge", file=sys.stderr)
    return 0 if not bad else 1


def _input_manifest(cfg: RunConfig) -> dict:
    return {
        "matches": {"path": Path(cfg.matches_path).name,
                    "sha1": git_blob_sha1(cfg.matches_path)},
        "events": {"path": Path(cfg.events_path).name,
                   "sha1": git_blob_sha1(cfg.events_path)},
    }


def cmd_simulate(cfg: RunConfig) -> int:
    _need_paths(cfg)
    if cfg.master_seed is None:
        cfg.master_seed = secrets.randbits(32)
        log.warning("no --seed given; using generated seed %d", cfg.master_seed)
    season = load_season(cfg.matches_path, cfg.events_path, cfg.league, cfg.season)
    runner = run_ex_post if cfg.mode == "ex_post" else run_ex_ante
    run = runner(season, cfg.model_spec, cfg.encoding, cfg.n_sims, cfg.master_seed,
                 cfg.home_advantage, cfg.jobs)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = write_ex_post if cfg.mode == "ex_post" else write_ex_ante
    written = writer(out, run)
    fit_path = out / f"fit_{cfg.model_spec}.json"
    summary = run.fit.summary()
    if granular_note(run.fit):
        summary["granular_mapping"] = granular_note(run.fit)
    write_json(fit_path, summary)
    written.append(fit_path)

    problems = check_ensemble(run.ensemble, n_matches=len(season.matches))
    outcomes = outcome_probabilities(run.ensemble)
    n = len(outcomes)
    for label, total, want in (("p_title", sum(s.p_title for s in outcomes), 1),
                               ("p_top4", sum(s.p_top4 for s in outcomes), min(4, n)),
                               ("p_releg", sum(s.p_releg for s in outcomes), min(3, n))):
        if abs(total - want) > 1e-12:
            problems.append(f"sum of {label} is {total}, expected {want}")

    manifest = {
        "tool": "xgsim",
        "version": __version__,
        "config": asdict(cfg) | {"matches_path": Path(cfg.matches_path).name,
                                 "events_path": Path(cfg.events_path).name,
                                 "output_dir": None, "jobs": None},
        "inputs": _input_manifest(cfg),
        "simulation": dict(run.ensemble.manifest),
        "strength_window": "first_half" if cfg.mode != "ex_post" else "full_season",
        "intensity_model": "league_mean * attack_ratio(self) * defense_ratio(opponent)"
                           " * home_advantage^(+1 home, -1 away)",
        "tiebreakers": ["points", "goal_difference", "goals_for", "seeded_draw"],
        "fit": {"spec": run.fit.name, "aic": run.fit.aic, "n_obs": run.fit.n_obs},
        "outputs": {p.name: git_blob_sha1(p) for p in sorted(written)},
        "invariant_problems": problems,
    }
    write_json(out / "manifest.json", manifest)

    print(f"mode {cfg.mode}, {cfg.n_sims} simulations, seed {cfg.master_seed}")
    print(f"{'team':<24} {'E[pts]':>7} {'E[rank]':>7} {'title':>6} {'top4':>6} {'releg':>6}")
    for s in run.summaries:
        print(f"{s.team:<24} {s.expected_points:7.1f} {s.expected_rank:7.2f} "
              f"{s.p_title:6.3f} {s.p_top4:6.3f} {s.p_releg:6.3f}")
    for a in (run.agreement_points, run.agreement_ranks):
        print(f"agreement[{a.target}] spearman={a.spearman:.3f} pearson={a.pearson:.3f} "
              f"r2={a.r_squared:.3f} rmse={a.rmse:.3f} mae={a.mae:.3f}")
    for p in problems:
        print(f"INVARIANT: {p}", file=sys.stderr)
    return 0 if not problems else 1


def cmd_report(cfg: RunConfig) -> int:
    """Render a plain-text summary of a finished output directory."""
    out = Path(cfg.output_dir)
    lines = []
    manifest_path = out / "manifest.json"
    if manifest_path.is_file():
        m = json.loads(manifest_path.read_text(encoding="utf-8"))
        c = m.get("config", {})
        lines.append(f"run: mode={c.get('mode')} spec={c.get('model_spec')} "
                     f"n_sims={c.get('n_sims')} seed={c.get('master_seed')}")
        for p in m.get("invariant_problems", []):
            lines.append(f"invariant problem: {p}")
    comp = out / "model_comparison.csv"
    if comp.is_file():
        lines.append("")
        lines.append("model comparison")
        with open(comp, encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                lines.append(f"  {r['model']:<12} AIC {float(r['aic']):9.2f}  "
                             f"deviance {float(r['residual_deviance']):9.2f}  "
                             f"params {r['n_params']}")
    outcomes = out / "outcomes.csv"
    if outcomes.is_file():
        lines.append("")
        lines.append(f"{'team':<24} {'E[pts]':>7} {'95% pts':>13} {'E[rank]':>7} "
                     f"{'title':>6} {'top4':>6} {'releg':>6}")
        with open(outcomes, encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                lines.append(
                    f"{r['team']:<24} {float(r['expected_points']):7.1f} "
                    f"{float(r['points_lo']):6.1f}-{float(r['points_hi']):<6.1f} "
                    f"{float(r['expected_rank']):7.2f} {float(r['p_title']):6.3f} "
                    f"{float(r['p_top4']):6.3f} {float(r['p_releg']):6.3f}")
    agreement = out / "agreement.csv"
    if agreement.is_file():
        lines.append("")
        with open(agreement, encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                lines.append(f"agreement[{r['target']}] " + " ".join(
                    f"{k}={r[k]}" for k in ("spearman", "pearson", "r_squared", "rmse", "mae")))
    if not lines:
        print(f"nothing to report in {out}", file=sys.stderr)
        return 1
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xgsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--matches", help="match CSV (id_odsp, ht, at, date, fthg, ftag)")
    common.add_argument("--events", help="event CSV")
    common.add_argument("--league", help="select this league code from a multi-league match file")
    common.add_argument("--season", help="select this season value from the match file")
    common.add_argument("--encoding", choices=ENCODINGS)
    common.add_argument("--out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="data-quality report")
    fp = sub.add_parser("fit", parents=[common], help="fit and compare xG models")
    fp.add_argument("--spec", choices=SPEC_NAMES, action="append",
                    help="model spec (repeatable; default all three)")
    sp = sub.add_parser("simulate", parents=[common], help="Monte Carlo season simulation")
    sp.add_argument("--spec", choices=SPEC_NAMES)
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--n-sims", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--home-advantage", type=float)
    sp.add_argument("--jobs", type=int, help="worker threads (results do not depend on it)")
    rp = sub.add_parser("report", help="summarise an output directory")
    rp.add_argument("--out", help="output directory")
    rp.add_argument("--config", help="JSON file with RunConfig fields")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    specs = None
    if args.command == "fit":
        specs = args.spec or list(SPEC_NAMES)
        args.spec = None
    try:
        cfg = build_config(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, specs)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_report(cfg)
    except (XgSimError, OSError, ValueError) as exc:
        print(f"xgsim {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
