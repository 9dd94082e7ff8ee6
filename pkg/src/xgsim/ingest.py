"""Loading of match and event CSV files in the football-events layout.

Match file columns: ``id_odsp, ht, at, date, fthg, ftag`` (extra columns such
as betting odds are read past and ignored).  Event file columns: ``id_odsp,
event_type, event_team, side, is_goal, location, shot_place, bodypart,
situation, assist_method, fast_break``.

Row numbers in drop reports are physical file line numbers, so the header is
line 1 and the first data row is line 2.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import InputFormatError, IntegrityError, SchemaError

log = logging.getLogger(__name__)

SHOT_EVENT_TYPE = 1
MATCH_COLUMNS = ("id_odsp", "ht", "at", "date", "fthg", "ftag")
EVENT_COLUMNS = (
    "id_odsp",
    "event_type",
    "event_team",
    "side",
    "is_goal",
    "location",
    "shot_place",
    "bodypart",
    "situation",
    "assist_method",
    "fast_break",
)
# Covariates that must be present for a shot to enter the GLM sample.
MODEL_COVARIATES = (
    "location",
    "shot_place",
    "bodypart",
    "situation",
    "assist_method",
    "fast_break",
)
_REQUIRED_EVENT_CODES = ("event_type", "side", "is_goal")
LOCATION_CODES = range(1, 20)


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    home_team: str
    away_team: str
    date: dt.date
    fthg: int
    ftag: int
    # extra match-file columns (league, season, ...) kept for filtering only
    league: str | None = field(default=None, compare=False)
    season: str | None = field(default=None, compare=False)

    @property
    def teams(self) -> tuple[str, str]:
        return self.home_team, self.away_team


@dataclass(frozen=True)
class RawEvent:
    match_id: str
    event_type: int
    event_team: str
    side: int
    is_goal: int
    location: int | None
    shot_place: int | None
    bodypart: int | None
    situation: int | None
    assist_method: int | None
    fast_break: int | None
    row: int | None = field(default=None, compare=False)

    def is_shot(self) -> bool:
        return self.event_type == SHOT_EVENT_TYPE

    def missing_covariates(self) -> list[str]:
        return [c for c in MODEL_COVARIATES if getattr(self, c) is None]


@dataclass(frozen=True)
class ShotEvent:
    """A complete-case shot; the unit of xG estimation."""

    match_id: str
    event_type: int
    event_team: str
    side: int
    is_goal: int
    location: int
    shot_place: int
    bodypart: int
    situation: int
    assist_method: int
    fast_break: int
    row: int | None = field(default=None, compare=False)

    @property
    def goal_label(self) -> int:
        return self.is_goal

    def as_event(self) -> RawEvent:
        return RawEvent(**{f.name: getattr(self, f.name) for f in fields(self)})


@dataclass(frozen=True)
class SeasonSummary:
    n_matches: int
    n_team_observations: int
    n_goals: int
    n_home_wins: int
    n_draws: int
    n_away_wins: int

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(asdict(self).values())


@dataclass(frozen=True)
class DropRecord:
    row: int | None
    column: str
    reason: str


@dataclass
class DropReport:
    """Rows that were rejected or excluded, with the reason for each."""

    records: list[DropRecord] = field(default_factory=list)

    def add(self, row: int | None, column: str, reason: str) -> None:
        self.records.append(DropRecord(row, column, reason))

    def extend(self, other: "DropReport") -> None:
        self.records.extend(other.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def counts(self) -> Counter:
        return Counter((r.column, r.reason) for r in self.records)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "column", "reason"])
            for r in self.records:
                w.writerow(["" if r.row is None else r.row, r.column, r.reason])


def _read_table(path: str | Path, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        header = pd.read_csv(path, nrows=0, encoding="utf-8").columns
        header = [str(c).strip() for c in header]
        for col in required:
            if col not in header:
                raise SchemaError(path, col)
        usecols = [c for c in header if c in required or c in ("league", "season")]
        df = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            usecols=lambda c: str(c).strip() in usecols,
        )
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise InputFormatError(path, f"{type(exc).__name__}: {exc}") from exc
    df.columns = [str(c).strip() for c in df.columns]
    for col in df.columns:
        df[col] = df[col].str.strip()
    df["_row"] = np.arange(2, len(df) + 2)
    return df


def _parse_codes(values: pd.Series) -> tuple[pd.Series, pd.Series]:
    """Parse an integer-code column that may be blank or written as ``3.0``.

    Returns (codes as nullable ints, mask of non-blank cells that failed).
    """
    blank = values.isin(("", "NA", "NaN", "nan"))
    num = pd.to_numeric(values.where(~blank), errors="coerce")
    bad = ~blank & (num.isna() | (num != np.floor(num)))
    codes = num.where(~bad).astype("Int64")
    return codes, bad


def _parse_date(text: str) -> dt.date:
    for fmt in ("%Y-%m-%d", "%d/%m/%Y", "%d/%m/%y", "%Y/%m/%d"):
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognised date {text!r}")


def load_matches(
    path: str | Path,
    report: DropReport | None = None,
    league: str | None = None,
    season: str | None = None,
) -> list[MatchRecord]:
    """Parse the match file.

    ``league``/``season`` select rows of a multi-season file when it carries
    those columns; selection happens before validation.  Rows that fail
    validation go to ``report`` (or are logged when no report is given).
    Duplicate match ids raise :class:`IntegrityError`.
    """
    df = _read_table(path, MATCH_COLUMNS)
    if league is not None:
        if "league" not in df.columns:
            raise SchemaError(path, "league")
        df = df[df["league"] == str(league)]
    if season is not None:
        if "season" not in df.columns:
            raise SchemaError(path, "season")
        df = df[df["season"] == str(season)]

    local = DropReport()
    dup = df["id_odsp"][df["id_odsp"].duplicated()]
    if len(dup):
        raise IntegrityError(f"{path}: duplicate match_id {dup.iloc[0]!r}")

    out = []
    for rec in df.to_dict("records"):
        row = int(rec["_row"])
        mid = rec["id_odsp"]
        if not mid:
            local.add(row, "id_odsp", "missing match_id")
            continue
        if not rec["ht"] or not rec["at"]:
            local.add(row, "ht" if not rec["ht"] else "at", "missing team name")
            continue
        if rec["ht"] == rec["at"]:
            local.add(row, "at", "home and away team are the same")
            continue
        try:
            date = _parse_date(rec["date"])
        except ValueError as exc:
            local.add(row, "date", str(exc))
            continue
        goals = []
        for col in ("fthg", "ftag"):
            try:
                g = float(rec[col])
            except ValueError:
                local.add(row, col, f"non-numeric goal count {rec[col]!r}")
                break
            if g < 0 or g != int(g):
                local.add(row, col, f"invalid goal count {rec[col]!r}")
                break
            goals.append(int(g))
        if len(goals) != 2:
            continue
        out.append(
            MatchRecord(
                mid, rec["ht"], rec["at"], date, goals[0], goals[1],
                league=rec.get("league"), season=rec.get("season"),
            )
        )
    _flush(local, report, path)
    return out


def load_events(
    path: str | Path,
    matches: Iterable[MatchRecord] | None = None,
    report: DropReport | None = None,
    select: Iterable[str] | None = None,
) -> list[RawEvent]:
    """Parse the event file.

    ``select`` restricts loading to the given match ids before validation
    (used to cut one season out of a multi-season file).  When ``matches``
    is given, events whose match id is absent from it are flagged in the
    report and excluded.
    """
    df = _read_table(path, EVENT_COLUMNS)
    if select is not None:
        df = df[df["id_odsp"].isin(set(select))]
    local = DropReport()

    reject = pd.Series(False, index=df.index)
    parsed = {}
    for col in EVENT_COLUMNS[1:]:
        if col == "event_team":
            continue
        codes, bad = _parse_codes(df[col])
        for row, val in zip(df["_row"][bad & ~reject], df[col][bad & ~reject]):
            local.add(int(row), col, f"non-integer code {val!r}")
        reject |= bad
        if col in _REQUIRED_EVENT_CODES:
            miss = codes.isna() & ~reject
            for row in df["_row"][miss]:
                local.add(int(row), col, "missing required code")
            reject |= miss
        parsed[col] = codes

    checks = [
        ("side", ~parsed["side"].isin([1, 2]), "side must be 1 or 2"),
        ("is_goal", ~parsed["is_goal"].isin([0, 1]), "is_goal must be 0 or 1"),
        ("fast_break", parsed["fast_break"].notna() & ~parsed["fast_break"].isin([0, 1]),
         "fast_break must be 0 or 1"),
        ("location", parsed["location"].notna()
         & ((parsed["location"] < 1) | (parsed["location"] > 19)),
         "location code outside 1-19"),
        ("id_odsp", df["id_odsp"] == "", "missing match_id"),
        ("event_team", df["event_team"] == "", "missing event_team"),
    ]
    for col, mask, reason in checks:
        mask = mask.fillna(False).astype(bool) & ~reject
        for row in df["_row"][mask]:
            local.add(int(row), col, reason)
        reject |= mask

    if matches is not None:
        known = {m.match_id for m in matches}
        unknown = ~df["id_odsp"].isin(known) & ~reject
        for row, mid in zip(df["_row"][unknown], df["id_odsp"][unknown]):
            local.add(int(row), "id_odsp", f"match_id {mid!r} not in match table")
        reject |= unknown

    keep = ~reject
    cols = {c: [None if v is pd.NA else int(v) for v in parsed[c][keep].tolist()]
            for c in parsed}
    out = [
        RawEvent(mid, int(et), team, int(side), int(goal), loc, sp, bp, sit, am, fb, row=int(row))
        for mid, team, row, et, side, goal, loc, sp, bp, sit, am, fb in zip(
            df["id_odsp"][keep], df["event_team"][keep], df["_row"][keep],
            cols["event_type"], cols["side"], cols["is_goal"], cols["location"],
            cols["shot_place"], cols["bodypart"], cols["situation"],
            cols["assist_method"], cols["fast_break"],
        )
    ]
    _flush(local, report, path)
    return out


def _flush(local: DropReport, report: DropReport | None, path) -> None:
    if report is not None:
        report.extend(local)
    elif len(local):
        log.warning("%s: %d rows rejected during validation", path, len(local))


def extract_shots(
    events: Iterable[RawEvent], report: DropReport | None = None
) -> list[ShotEvent]:
    """Keep shot events whose six model covariates are all present."""
    shots = []
    for ev in events:
        if not ev.is_shot():
            continue
        missing = ev.missing_covariates()
        if missing:
            if report is not None:
                report.add(ev.row, missing[0], "shot excluded: missing covariate "
                           + ",".join(missing))
            continue
        shots.append(ShotEvent(**{f.name: getattr(ev, f.name) for f in fields(RawEvent)}))
    return shots


def season_summary(matches: Sequence[MatchRecord]) -> SeasonSummary:
    home = sum(m.fthg > m.ftag for m in matches)
    away = sum(m.fthg < m.ftag for m in matches)
    draws = len(matches) - home - away
    goals = sum(m.fthg + m.ftag for m in matches)
    return SeasonSummary(len(matches), 2 * len(matches), goals, home, draws, away)


def check_season(
    matches: Sequence[MatchRecord], n_teams: int = 20, n_rounds: int = 38
) -> list[str]:
    """List violations of the double round-robin structure (empty if none)."""
    problems = []
    home = Counter(m.home_team for m in matches)
    away = Counter(m.away_team for m in matches)
    teams = sorted(set(home) | set(away))
    if len(teams) != n_teams:
        problems.append(f"expected {n_teams} teams, found {len(teams)}")
    half = n_rounds // 2
    for t in teams:
        if home[t] != half or away[t] != half:
            problems.append(f"{t}: {home[t]} home / {away[t]} away matches, "
                            f"expected {half} / {half}")
    pairs = Counter((m.home_team, m.away_team) for m in matches)
    for pair, n in sorted(pairs.items()):
        if n > 1:
            problems.append(f"fixture {pair[0]} v {pair[1]} appears {n} times")
    return problems


def check_event_links(
    events: Iterable[RawEvent], matches: Sequence[MatchRecord]
) -> list[str]:
    """Every event must resolve to exactly one match and one of its two teams."""
    by_id = {m.match_id: m for m in matches}
    problems = []
    for ev in events:
        m = by_id.get(ev.match_id)
        if m is None:
            problems.append(f"row {ev.row}: unknown match_id {ev.match_id!r}")
            continue
        expected = m.home_team if ev.side == 1 else m.away_team
        if ev.event_team != expected:
            problems.append(
                f"row {ev.row}: event_team {ev.event_team!r} does not match "
                f"side {ev.side} team {expected!r} of {ev.match_id}"
            )
    return problems


def write_matches(path: str | Path, matches: Iterable[MatchRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MATCH_COLUMNS)
        for m in matches:
            w.writerow([m.match_id, m.home_team, m.away_team, m.date.isoformat(),
                        m.fthg, m.ftag])


def write_events(path: str | Path, events: Iterable[RawEvent | ShotEvent]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for e in events:
            w.writerow([e.match_id, e.event_type, e.event_team, e.side, e.is_goal]
                       + ["" if getattr(e, c) is None else getattr(e, c)
                          for c in MODEL_COVARIATES])
