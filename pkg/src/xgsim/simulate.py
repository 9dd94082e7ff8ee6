"""Monte Carlo season replay: scorelines, standings and ensembles."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CoverageError, IntegrityError
from .ingest import MatchRecord
from .rng import (
    TIE_DOMAIN,
    check_seed,
    keyed_poisson_array,
    mix_key,
    sample_poisson,
)
from .strength import MatchIntensities, TeamStrength, match_intensities

DEFAULT_N_SIMS = 1000
HOME_SLOT, AWAY_SLOT = 0, 1


@dataclass(frozen=True)
class Fixture:
    match_id: str
    home: str
    away: str
    index: int

    def __post_init__(self):
        if self.home == self.away:
            raise IntegrityError(f"fixture {self.match_id}: a team cannot play itself")


@dataclass(frozen=True)
class MatchResult:
    """Final score of a fixture, simulated or realised."""

    fixture: Fixture
    home_goals: int
    away_goals: int


SimulatedResult = MatchResult


@dataclass(frozen=True)
class TableRow:
    team: str
    played: int
    points: int
    wins: int
    draws: int
    losses: int
    goals_for: int
    goals_against: int
    goal_difference: int
    rank: int


@dataclass(frozen=True)
class LeagueTable:
    rows: tuple[TableRow, ...]

    def row(self, team: str) -> TableRow:
        for r in self.rows:
            if r.team == team:
                return r
        raise KeyError(team)

    @property
    def teams(self) -> list[str]:
        return [r.team for r in self.rows]

    def ranks(self) -> dict[str, int]:
        return {r.team: r.rank for r in self.rows}

    def points(self) -> dict[str, int]:
        return {r.team: r.points for r in self.rows}


def fixtures_from_matches(matches: Sequence[MatchRecord]) -> list[Fixture]:
    """Fixtures indexed by (date, match_id) order across the whole season."""
    ordered = sorted(matches, key=lambda m: (m.date, m.match_id))
    return [Fixture(m.match_id, m.home_team, m.away_team, i) for i, m in enumerate(ordered)]


def realized_results(matches: Sequence[MatchRecord],
                     fixtures: Sequence[Fixture] | None = None) -> list[MatchResult]:
    fixtures = fixtures or fixtures_from_matches(matches)
    by_id = {f.match_id: f for f in fixtures}
    return [MatchResult(by_id[m.match_id], m.fthg, m.ftag) for m in matches]


def simulate_match(intensities: MatchIntensities, rng: np.random.Generator,
                   fixture: Fixture | None = None) -> MatchResult:
    """Independent Poisson goals; home drawn first."""
    hg = sample_poisson(intensities.lambda_home, rng)
    ag = sample_poisson(intensities.lambda_away, rng)
    return MatchResult(fixture, hg, ag)


def _incidence(teams: Sequence[str], fixtures: Sequence[Fixture]):
    idx = {t: i for i, t in enumerate(teams)}
    H = np.zeros((len(fixtures), len(teams)))
    A = np.zeros((len(fixtures), len(teams)))
    for j, f in enumerate(fixtures):
        H[j, idx[f.home]] = 1.0
        A[j, idx[f.away]] = 1.0
    return H, A


def _accumulate(hg: np.ndarray, ag: np.ndarray, H: np.ndarray, A: np.ndarray) -> dict:
    """Per-team totals from goal arrays of shape (n_sims, n_fixtures)."""
    hw = (hg > ag).astype(float)
    aw = (hg < ag).astype(float)
    dr = (hg == ag).astype(float)
    hgf, agf = hg.astype(float), ag.astype(float)
    out = {
        "wins": hw @ H + aw @ A,
        "draws": dr @ H + dr @ A,
        "losses": aw @ H + hw @ A,
        "goals_for": hgf @ H + agf @ A,
        "goals_against": agf @ H + hgf @ A,
    }
    return {k: np.rint(v).astype(np.int64) for k, v in out.items()}


_STATS = ("wins", "draws", "losses", "goals_for", "goals_against")


def _rank(points, gd, gf, tie) -> np.ndarray:
    """Ranks 1..T per row: points, goal difference, goals for, then ``tie``."""
    order = np.lexsort((tie, -gf, -gd, -points), axis=-1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, order.shape[-1] + 1)[None, :], axis=-1)
    return ranks


def _tie_keys(seed: int, sims: np.ndarray, n_teams: int) -> np.ndarray:
    return mix_key(seed, np.asarray(sims, np.uint64)[:, None], TIE_DOMAIN,
                   np.arange(n_teams, dtype=np.uint64)[None, :])


def standings(results: Iterable[MatchResult], teams: Sequence[str] | None = None,
              seed: int = 0) -> LeagueTable:
    """League table with 3/1/0 points and points > GD > GF > seeded-draw ordering."""
    results = list(results)
    seen = set()
    for r in results:
        if r.fixture.match_id in seen:
            raise IntegrityError(f"duplicate fixture {r.fixture.match_id}")
        seen.add(r.fixture.match_id)
    playing = {t for r in results for t in (r.fixture.home, r.fixture.away)}
    teams = sorted(teams if teams is not None else playing)
    absent = [t for t in teams if t not in playing]
    if absent:
        raise CoverageError(f"teams without fixtures: {', '.join(absent)}")
    fixtures = [r.fixture for r in results]
    H, A = _incidence(teams, fixtures)
    hg = np.array([[r.home_goals for r in results]], dtype=np.int64).reshape(1, -1)
    ag = np.array([[r.away_goals for r in results]], dtype=np.int64).reshape(1, -1)
    st = _accumulate(hg, ag, H, A)
    return _table_from_arrays(teams, st, _tie_keys(check_seed(seed), np.zeros(1), len(teams)), 0)


def _table_from_arrays(teams, st, tie, i) -> LeagueTable:
    points = 3 * st["wins"] + st["draws"]
    gd = st["goals_for"] - st["goals_against"]
    ranks = _rank(points[i:i + 1], gd[i:i + 1], st["goals_for"][i:i + 1], tie[i:i + 1])[0]
    rows = []
    for t, team in enumerate(teams):
        w, d, l = int(st["wins"][i, t]), int(st["draws"][i, t]), int(st["losses"][i, t])
        rows.append(TableRow(team, w + d + l, int(points[i, t]), w, d, l,
                             int(st["goals_for"][i, t]), int(st["goals_against"][i, t]),
                             int(gd[i, t]), int(ranks[t])))
    rows.sort(key=lambda r: r.rank)
    return LeagueTable(tuple(rows))


@dataclass(frozen=True)
class SimulationEnsemble:
    """Final tables of ``n_sims`` replays; arrays are (n_sims, n_teams)."""

    teams: tuple[str, ...]
    n_sims: int
    master_seed: int
    wins: np.ndarray
    draws: np.ndarray
    losses: np.ndarray
    goals_for: np.ndarray
    goals_against: np.ndarray
    ranks: np.ndarray
    manifest: Mapping = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return 3 * self.wins + self.draws

    def team_index(self, team: str) -> int:
        try:
            return self.teams.index(team)
        except ValueError:
            raise KeyError(f"unknown team {team!r}") from None

    def rank_samples(self, team: str) -> np.ndarray:
        return self.ranks[:, self.team_index(team)]

    def point_samples(self, team: str) -> np.ndarray:
        return self.points[:, self.team_index(team)]

    def mean_points(self) -> dict[str, float]:
        return dict(zip(self.teams, self.points.mean(axis=0).tolist()))

    def mean_rank(self) -> dict[str, float]:
        return dict(zip(self.teams, self.ranks.mean(axis=0).tolist()))

    def table(self, i: int) -> LeagueTable:
        st = {k: getattr(self, k) for k in _STATS}
        gd = self.goals_for - self.goals_against
        rows = []
        for t, team in enumerate(self.teams):
            w, d, l = int(self.wins[i, t]), int(self.draws[i, t]), int(self.losses[i, t])
            rows.append(TableRow(team, w + d + l, 3 * w + d, w, d, l,
                                 int(st["goals_for"][i, t]), int(st["goals_against"][i, t]),
                                 int(gd[i, t]), int(self.ranks[i, t])))
        rows.sort(key=lambda r: r.rank)
        return LeagueTable(tuple(rows))

    def to_csv(self, path: str | Path) -> None:
        """One row per (simulation, team)."""
        pts = self.points
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sim", "team", "points", "rank", "wins", "draws", "losses",
                        "goals_for", "goals_against"])
            for s in range(self.n_sims):
                for t, team in enumerate(self.teams):
                    w.writerow([s, team, pts[s, t], self.ranks[s, t], self.wins[s, t],
                                self.draws[s, t], self.losses[s, t],
                                self.goals_for[s, t], self.goals_against[s, t]])


def _strength_map(strengths) -> dict[str, TeamStrength]:
    if isinstance(strengths, Mapping):
        return dict(strengths)
    return {s.team: s for s in strengths}


def fixture_intensities(fixtures: Sequence[Fixture], strengths, league_mean: float,
                        home_advantage: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    smap = _strength_map(strengths)
    missing = sorted({t for f in fixtures for t in (f.home, f.away)} - set(smap))
    if missing:
        raise CoverageError(f"no strength estimate for: {', '.join(missing)}")
    lams = [match_intensities(smap[f.home], smap[f.away], league_mean, home_advantage)
            for f in fixtures]
    return (np.array([m.lambda_home for m in lams]), np.array([m.lambda_away for m in lams]))


def _run(teams, fixtures, lam_h, lam_a, base, n_sims, seed, n_jobs, chunk, manifest):
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    seed = check_seed(seed)
    H, A = _incidence(teams, fixtures)
    fidx = np.array([f.index for f in fixtures], dtype=np.int64)

    def block(sims: np.ndarray) -> dict:
        hg = keyed_poisson_array(lam_h, seed, sims, fidx, HOME_SLOT)
        ag = keyed_poisson_array(lam_a, seed, sims, fidx, AWAY_SLOT)
        st = _accumulate(hg, ag, H, A)
        for k in _STATS:
            st[k] = st[k] + base[k][None, :]
        pts = 3 * st["wins"] + st["draws"]
        gf = st["goals_for"]
        st["ranks"] = _rank(pts, gf - st["goals_against"], gf,
                            _tie_keys(seed, sims, len(teams)))
        return st

    chunks = [np.arange(a, min(a + chunk, n_sims)) for a in range(0, n_sims, chunk)]
    if n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(block, chunks))
    else:
        parts = [block(c) for c in chunks]
    arrays = {k: np.concatenate([p[k] for p in parts]) for k in (*_STATS, "ranks")}
    manifest = {**manifest, "n_sims": n_sims, "master_seed": seed,
                "n_simulated_fixtures": len(fixtures)}
    return SimulationEnsemble(tuple(teams), n_sims, seed, manifest=manifest, **arrays)


def _zero_base(n):
    return {k: np.zeros(n, dtype=np.int64) for k in _STATS}


def simulate_season(
    fixtures: Sequence[Fixture],
    strengths,
    league_mean: float,
    n_sims: int = DEFAULT_N_SIMS,
    master_seed: int = 0,
    home_advantage: float = 1.0,
    n_jobs: int = 1,
    chunk: int = 250,
) -> SimulationEnsemble:
    """Replay every fixture ``n_sims`` times.

    Goals for simulation ``s`` and fixture index ``f`` come from the keys
    ``(master_seed, s, f, 0)`` (home) and ``(master_seed, s, f, 1)`` (away),
    so the ensemble is independent of ``n_jobs`` and ``chunk``.
    """
    teams = sorted({t for f in fixtures for t in (f.home, f.away)})
    lam_h, lam_a = fixture_intensities(fixtures, strengths, league_mean, home_advantage)
    manifest = {"mode": "full_season", "league_mean_rate": league_mean,
                "home_advantage": home_advantage}
    return _run(teams, list(fixtures), lam_h, lam_a, _zero_base(len(teams)),
                n_sims, master_seed, n_jobs, chunk, manifest)


def simulate_second_half(
    realized_first_half: Sequence[MatchResult],
    fixtures_second_half: Sequence[Fixture],
    strengths,
    league_mean: float,
    n_sims: int = DEFAULT_N_SIMS,
    master_seed: int = 0,
    home_advantage: float = 1.0,
    n_jobs: int = 1,
    chunk: int = 250,
) -> SimulationEnsemble:
    """Carry realised first-half results forward and simulate the rest."""
    done = {r.fixture.match_id for r in realized_first_half}
    overlap = sorted(done & {f.match_id for f in fixtures_second_half})
    if overlap:
        raise IntegrityError(f"fixtures both realised and simulated: {', '.join(overlap[:5])}")
    teams = sorted({t for r in realized_first_half for t in (r.fixture.home, r.fixture.away)}
                   | {t for f in fixtures_second_half for t in (f.home, f.away)})
    H, A = _incidence(teams, [r.fixture for r in realized_first_half])
    hg = np.array([r.home_goals for r in realized_first_half], dtype=np.int64)[None, :]
    ag = np.array([r.away_goals for r in realized_first_half], dtype=np.int64)[None, :]
    base = {k: v[0] for k, v in _accumulate(hg, ag, H, A).items()}
    if fixtures_second_half:
        lam_h, lam_a = fixture_intensities(fixtures_second_half, strengths, league_mean,
                                           home_advantage)
    else:
        lam_h = lam_a = np.zeros(0)
    manifest = {"mode": "second_half", "league_mean_rate": league_mean,
                "home_advantage": home_advantage,
                "n_realized_fixtures": len(realized_first_half)}
    return _run(teams, list(fixtures_second_half), lam_h, lam_a, base,
                n_sims, master_seed, n_jobs, chunk, manifest)


def convergence_trace(ensemble: SimulationEnsemble, team: str) -> np.ndarray:
    """Running mean rank: element k-1 is the mean over the first k simulations."""
    r = ensemble.rank_samples(team).astype(float)
    if r.size == 0:
        raise ValueError("empty ensemble")
    return np.cumsum(r) / np.arange(1, r.size + 1)


def check_ensemble(ensemble: SimulationEnsemble, n_matches: int | None = None) -> list[str]:
    """Accounting and rank-validity violations (empty when all hold)."""
    problems = []
    e = ensemble
    n_teams = len(e.teams)
    if e.ranks.shape != (e.n_sims, n_teams):
        problems.append("ensemble arrays have the wrong shape")
        return problems
    if not np.array_equal(np.sort(e.ranks, axis=1),
                          np.broadcast_to(np.arange(1, n_teams + 1), e.ranks.shape)):
        problems.append("ranks are not a permutation of 1..n in every simulation")
    if not np.array_equal(e.wins.sum(1), e.losses.sum(1)):
        problems.append("total wins differ from total losses")
    if np.any(e.draws.sum(1) % 2):
        problems.append("odd number of team draws")
    if not np.array_equal(e.goals_for.sum(1), e.goals_against.sum(1)):
        problems.append("goals for and against do not balance")
    decisive = e.wins.sum(1)
    drawn = e.draws.sum(1) // 2
    if not np.array_equal(e.points.sum(1), 3 * decisive + 2 * drawn):
        problems.append("points do not equal 3 per decisive and 2 per drawn match")
    if n_matches is not None and np.any(decisive + drawn != n_matches):
        problems.append(f"tables do not account for {n_matches} matches")
    return problems
