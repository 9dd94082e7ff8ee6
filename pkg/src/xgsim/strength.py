"""Match-level xG aggregation, team rates and Poisson intensities."""
from __future__ import annotations

import csv
import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Collection, Iterable, Sequence

import numpy as np

from .errors import CoverageError, DomainError, IntegrityError
from .glm import GlmFit, score_shots
from .ingest import MatchRecord, ShotEvent


@dataclass(frozen=True)
class MatchXg:
    match_id: str
    team: str
    opponent: str
    venue: str  # "home" | "away"
    xg_for: float
    xg_against: float
    date: dt.date
    goals_for: int
    goals_against: int

    @property
    def points(self) -> int:
        if self.goals_for > self.goals_against:
            return 3
        return 1 if self.goals_for == self.goals_against else 0


@dataclass(frozen=True)
class TeamStrength:
    team: str
    matches_observed: int
    attack_rate: float
    defense_rate: float
    attack_ratio: float
    defense_ratio: float


@dataclass(frozen=True)
class MatchIntensities:
    lambda_home: float
    lambda_away: float


def match_xg(
    fit: GlmFit | None,
    shots: Sequence[ShotEvent],
    matches: Sequence[MatchRecord],
    probabilities: Sequence[float] | None = None,
) -> list[MatchXg]:
    """Sum shot xG per (match, team); two records per match, home first.

    Shots are attributed through their ``side`` code; the shot's team name
    must equal the match's team on that side.  ``probabilities`` may be
    passed instead of ``fit`` when the shots were already scored.
    """
    if probabilities is None:
        if fit is None:
            raise DomainError("either a fit or precomputed probabilities is required")
        probabilities = score_shots(fit, shots) if shots else np.zeros(0)
    if len(probabilities) != len(shots):
        raise DomainError("one probability per shot is required")
    by_id = {m.match_id: m for m in matches}
    totals: dict[tuple[str, int], float] = defaultdict(float)
    for shot, p in zip(shots, probabilities):
        m = by_id.get(shot.match_id)
        if m is None:
            raise IntegrityError(f"shot references unknown match {shot.match_id!r}")
        team = m.home_team if shot.side == 1 else m.away_team
        if shot.event_team != team:
            raise IntegrityError(
                f"shot team {shot.event_team!r} is not the side-{shot.side} team "
                f"{team!r} of match {shot.match_id}"
            )
        totals[shot.match_id, shot.side] += float(p)

    out = []
    for m in matches:
        h, a = totals.get((m.match_id, 1), 0.0), totals.get((m.match_id, 2), 0.0)
        out.append(MatchXg(m.match_id, m.home_team, m.away_team, "home", h, a,
                           m.date, m.fthg, m.ftag))
        out.append(MatchXg(m.match_id, m.away_team, m.home_team, "away", a, h,
                           m.date, m.ftag, m.fthg))
    return out


Window = Callable[[MatchXg], bool] | Collection[str] | None


def _in_window(window: Window) -> Callable[[MatchXg], bool]:
    if window is None:
        return lambda r: True
    if callable(window):
        return window
    ids = set(window)
    return lambda r: r.match_id in ids


def league_mean_rate(match_xgs: Iterable[MatchXg], window: Window = None) -> float:
    """Mean xG per team-match inside the window."""
    keep = _in_window(window)
    rows = [r for r in match_xgs if keep(r)]
    if not rows:
        raise CoverageError("no matches in window")
    return sum(r.xg_for for r in rows) / len(rows)


def team_rates(
    match_xgs: Sequence[MatchXg],
    window: Window = None,
    teams: Iterable[str] | None = None,
) -> list[TeamStrength]:
    """Per-match attack/defense xG rates and their ratios to the league mean.

    ``window`` is a predicate or a set of match ids.  ``teams`` defaults to
    every team appearing in ``match_xgs``; each must have at least one match
    in the window.  Ratios are normalised by the match-weighted league mean,
    so the match-weighted mean of each ratio is 1.  A defense ratio above 1
    means the team concedes more chance quality than average.
    """
    keep = _in_window(window)
    all_teams = sorted(set(teams) if teams is not None else {r.team for r in match_xgs})
    n = dict.fromkeys(all_teams, 0)
    xf = dict.fromkeys(all_teams, 0.0)
    xa = dict.fromkeys(all_teams, 0.0)
    for r in match_xgs:
        if not keep(r):
            continue
        if r.team not in n:
            raise CoverageError(f"team {r.team!r} is not in the team list")
        n[r.team] += 1
        xf[r.team] += r.xg_for
        xa[r.team] += r.xg_against
    empty = [t for t in all_teams if n[t] == 0]
    if empty:
        raise CoverageError(f"no matches in window for: {', '.join(empty)}")
    total = sum(n.values())
    mean_for = sum(xf.values()) / total
    mean_against = sum(xa.values()) / total
    if mean_for <= 0 or mean_against <= 0:
        raise DomainError("league mean xG rate must be positive")
    out = []
    for t in all_teams:
        a, d = xf[t] / n[t], xa[t] / n[t]
        out.append(TeamStrength(t, n[t], a, d, a / mean_for, d / mean_against))
    return out


def match_intensities(
    home: TeamStrength,
    away: TeamStrength,
    league_mean_rate: float,
    home_advantage: float = 1.0,
) -> MatchIntensities:
    """Multiplicative attack x opposing-defense intensities."""
    vals = (home.attack_ratio, home.defense_ratio, away.attack_ratio,
            away.defense_ratio, league_mean_rate, home_advantage)
    if not all(math.isfinite(v) and v > 0 for v in vals):
        raise DomainError(f"intensity inputs must be finite and positive, got {vals}")
    lh = league_mean_rate * home.attack_ratio * away.defense_ratio * home_advantage
    la = league_mean_rate * away.attack_ratio * home.defense_ratio / home_advantage
    return MatchIntensities(lh, la)


def split_season(matches: Sequence[MatchRecord], half: int | None = None) -> tuple[list[MatchRecord], list[MatchRecord]]:
    """Partition a season into first-half and second-half fixtures.

    Walking matches in (date, match_id) order, a match belongs to the first
    half while both of its teams have played fewer than ``half`` matches
    (default: half of each team's season).  On a complete, cleanly
    scheduled season this is each team's first 19 matches.
    """
    ordered = sorted(matches, key=lambda m: (m.date, m.match_id))
    if half is None:
        per_team = defaultdict(int)
        for m in ordered:
            per_team[m.home_team] += 1
            per_team[m.away_team] += 1
        half = max(per_team.values(), default=0) // 2
    played = defaultdict(int)
    first, second = [], []
    for m in ordered:
        if played[m.home_team] < half and played[m.away_team] < half:
            first.append(m)
            played[m.home_team] += 1
            played[m.away_team] += 1
        else:
            second.append(m)
    return first, second


def write_strengths(path: str | Path, strengths: Iterable[TeamStrength]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team", "matches", "attack_rate", "defense_rate",
                    "attack_ratio", "defense_ratio"])
        for s in strengths:
            w.writerow([s.team, s.matches_observed, repr(s.attack_rate), repr(s.defense_rate),
                        repr(s.attack_ratio), repr(s.defense_ratio)])
