"""Error attribution, validity diagnostics, win-rate intervals, role and similarity analysis."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import urllib.request
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ConfigError, ErrorType, GameLog, OutcomeKind, PlayerId, UsageError
from .games import canonical_kind

log = logging.getLogger(__name__)

EXPECTED_LENGTH = {"blotto": 9, "ipd": 10, "codenames": 10, "mafia": 10}

# Engines whose non-fatal outcomes (retries, skips, defaults) are not counted as recorded errors.
FATAL_ONLY_ENVS = frozenset({"blotto", "ipd", "codenames"})

ERROR_RATE_THRESHOLD = 0.30
DEPTH_FRACTION_THRESHOLD = 0.5


@dataclass(frozen=True)
class ErrorEvent:
    player: PlayerId
    error_type: ErrorType
    fatal: bool
    turn_index: int
    phase: str = ""
    outcome: OutcomeKind = OutcomeKind.RETRY_REQUESTED
    depth: int = 0  # the player's completed (non-retry) turns before this one


@dataclass
class ErrorLedger:
    game_id: int
    env: str
    seating: dict[PlayerId, str]
    events: list[ErrorEvent] = field(default_factory=list)
    turn_limited: bool = False

    @property
    def recorded(self) -> list[ErrorEvent]:
        """Events that count as errors for attribution and error rates."""
        if self.env in FATAL_ONLY_ENVS:
            return [e for e in self.events if e.fatal]
        return list(self.events)

    @property
    def has_error(self) -> bool:
        return bool(self.recorded)

    @property
    def first_fatal(self) -> ErrorEvent | None:
        return next((e for e in self.events if e.fatal), None)


def build_ledger(game: GameLog) -> ErrorLedger:
    env = canonical_kind(game.env_name)
    events = []
    for pid, turns in game.trajectories.items():
        depth = 0
        for idx, turn in enumerate(turns):
            if turn.outcome is not OutcomeKind.VALID and turn.error_type is not None:
                events.append(
                    ErrorEvent(pid, turn.error_type, turn.outcome.fatal, idx, turn.phase, turn.outcome, depth)
                )
            if turn.outcome is not OutcomeKind.RETRY_REQUESTED:
                depth += 1
    events.sort(key=lambda e: (e.turn_index, e.player))
    turn_limited = any(r == "turn_limit" for r in game.reasons.values())
    return ErrorLedger(game.game_id, env, dict(game.seating), events, turn_limited)


# -- attribution ----------------------------------------------------------------------


@dataclass
class AttributionRow:
    model: str
    games: int = 0
    clean: int = 0
    caused: int = 0
    witnessed: int = 0
    self_forf: int = 0
    opp_forf: int = 0

    def as_dict(self) -> dict[str, int | str]:
        return {
            "model": self.model, "games": self.games, "clean": self.clean, "caused": self.caused,
            "witnessed": self.witnessed, "self_forf": self.self_forf, "opp_forf": self.opp_forf,
        }


def _as_ledger(game: GameLog | ErrorLedger) -> ErrorLedger:
    return game if isinstance(game, ErrorLedger) else build_ledger(game)


def attribute_errors(games: Iterable[GameLog | ErrorLedger], focal: str) -> AttributionRow:
    """Clean / Caused / Witnessed / Self-Forf. / Opp-Forf. counts for ``focal``.

    Every seat not held by ``focal`` counts as an opponent, teammates included.
    """
    row = AttributionRow(focal)
    for game in games:
        ledger = _as_ledger(game)
        mine = {pid for pid, model in ledger.seating.items() if model == focal}
        if not mine:
            log.warning("game %s has no seat for %s; skipped", ledger.game_id, focal)
            continue
        recorded = ledger.recorded
        row.games += 1
        row.clean += not recorded
        row.caused += any(e.player in mine for e in recorded)
        row.witnessed += any(e.player not in mine for e in recorded)
        row.self_forf += any(e.fatal and e.player in mine for e in recorded)
        row.opp_forf += any(e.fatal and e.player not in mine for e in recorded)
    return row


# -- validity diagnostic --------------------------------------------------------------


@dataclass(frozen=True)
class ValidityDiagnostic:
    error_rate: float
    median_depth: float | None
    expected_length: float
    median_fraction: float | None
    robustness_dominated: bool


def validity_diagnostic(
    error_rate: float, depths: Sequence[float], expected_length: float
) -> ValidityDiagnostic:
    """Flag an environment whose leaderboard mostly measures surviving opponents' failures.

    ``depths`` are termination depths (turns) of error-terminated games; when
    there are none the depth is reported as ``None`` and nothing is flagged.
    """
    if expected_length <= 0:
        raise ConfigError("expected length must be positive")
    if not 0.0 <= error_rate <= 1.0:
        raise UsageError("error rate must lie in [0, 1]")
    median = statistics.median(depths) if depths else None
    fraction = None if median is None else median / expected_length
    flagged = (
        fraction is not None
        and error_rate > ERROR_RATE_THRESHOLD
        and fraction < DEPTH_FRACTION_THRESHOLD
    )
    return ValidityDiagnostic(error_rate, median, expected_length, fraction, flagged)


def termination_depths(ledgers: Iterable[ErrorLedger]) -> list[int]:
    return [e.depth for led in ledgers if (e := led.first_fatal) is not None]


def env_diagnostic(games: Iterable[GameLog | ErrorLedger], env: str) -> ValidityDiagnostic:
    kind = canonical_kind(env)
    ledgers = [led for g in games if (led := _as_ledger(g)).env == kind]
    if not ledgers:
        raise UsageError(f"no {kind} games to diagnose")
    rate = sum(led.has_error for led in ledgers) / len(ledgers)
    return validity_diagnostic(rate, termination_depths(ledgers), EXPECTED_LENGTH[kind])


# -- intervals and role analysis ------------------------------------------------------


def wilson_interval(wins: int, games: int, confidence: float = 0.95) -> tuple[float, float]:
    if games <= 0:
        raise UsageError("Wilson interval needs at least one game")
    if not 0 <= wins <= games:
        raise UsageError("wins must lie in [0, games]")
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    p = wins / games
    denom = 1 + z * z / games
    centre = (p + z * z / (2 * games)) / denom
    half = z * math.sqrt(p * (1 - p) / games + z * z / (4 * games * games)) / denom
    lower = 0.0 if wins == 0 else max(0.0, centre - half)
    upper = 1.0 if wins == games else min(1.0, centre + half)
    return lower, upper


@dataclass
class RoleWinTable:
    cells: dict[tuple[str, str], list[int]] = field(default_factory=dict)  # (model, role) -> [wins, games]

    def add(self, model: str, role: str, won: bool) -> None:
        cell = self.cells.setdefault((model, role), [0, 0])
        cell[0] += bool(won)
        cell[1] += 1

    def roles(self, model: str) -> list[str]:
        return sorted(r for (m, r), c in self.cells.items() if m == model and c[1] > 0)

    def rate(self, model: str, role: str) -> float:
        wins, games = self.cells[(model, role)]
        return wins / games


def role_advantage(table: RoleWinTable, model: str) -> dict[str, float]:
    roles = table.roles(model)
    if not roles:
        raise UsageError(f"no role results for {model!r}")
    rates = {r: table.rate(model, r) for r in roles}
    mean = sum(rates.values()) / len(rates)
    return {r: w - mean for r, w in rates.items()}


def is_win(rewards: Mapping[PlayerId, float], pid: PlayerId) -> bool:
    return rewards[pid] > 0


def role_label(game: GameLog, pid: PlayerId) -> str:
    return game.roles.get(pid) or f"Player {pid}"


def role_table(games: Iterable[GameLog]) -> RoleWinTable:
    table = RoleWinTable()
    for g in games:
        for pid, model in g.seating.items():
            table.add(model, role_label(g, pid), is_win(g.rewards, pid))
    return table


# -- behavioral similarity ------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityMatrix:
    models: list[str]
    values: list[list[float | None]]

    def get(self, a: str, b: str) -> float | None:
        return self.values[self.models.index(a)][self.models.index(b)]


def behavioral_similarity(responses: Mapping[str, Sequence[Sequence[float]]]) -> SimilarityMatrix:
    """Cosine similarity between per-model mean response embeddings."""
    models = list(responses)
    means = []
    dim = None
    for m in models:
        arr = np.asarray(responses[m], dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise UsageError(f"{m!r} needs at least one vector")
        if dim is not None and arr.shape[1] != dim:
            raise UsageError("all vectors must share one dimension")
        dim = arr.shape[1]
        means.append(arr.mean(axis=0))
    norms = [float(np.linalg.norm(v)) for v in means]
    values: list[list[float | None]] = []
    for i in range(len(models)):
        row: list[float | None] = []
        for j in range(len(models)):
            if norms[i] == 0 or norms[j] == 0:
                row.append(None)
            elif i == j:
                row.append(1.0)
            else:
                s = float(np.dot(means[i], means[j]) / (norms[i] * norms[j]))
                row.append(max(-1.0, min(1.0, s)))
        values.append(row)
    # exact symmetry regardless of floating-point evaluation order
    for i in range(len(models)):
        for j in range(i):
            values[i][j] = values[j][i]
    return SimilarityMatrix(models, values)


def responses_by_model(games: Iterable[GameLog]) -> dict[str, list[str]]:
    """All logged action texts per model, unweighted."""
    out: dict[str, list[str]] = defaultdict(list)
    for g in games:
        for pid, turns in g.trajectories.items():
            out[g.seating[pid]].extend(t.action for t in turns)
    return dict(out)


def load_vectors(path: str | Path) -> dict[str, list[list[float]]]:
    """Read ``{"model": ..., "vector": [...]}`` lines."""
    out: dict[str, list[list[float]]] = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[rec["model"]].append([float(x) for x in rec["vector"]])
    return dict(out)


class RestEmbeddingClient:
    """Minimal client for a generic embedding endpoint: POST {"input": [...]} -> {"embeddings": [...]}.

    Responses shaped ``{"data": [{"embedding": [...]}, ...]}`` are accepted too.
    """

    def __init__(self, url: str, auth_header: str | None = None, timeout: float = 60.0):
        self.url, self.auth_header, self.timeout = url, auth_header, timeout

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        headers = {"Content-Type": "application/json"}
        if self.auth_header:
            headers["Authorization"] = self.auth_header
        req = urllib.request.Request(
            self.url, data=json.dumps({"input": list(texts)}).encode("utf-8"), headers=headers, method="POST"
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        if "embeddings" in payload:
            return payload["embeddings"]
        return [d["embedding"] for d in payload["data"]]


# -- failure composition --------------------------------------------------------------


class FailureCategory(str, Enum):
    FORMAT_STRUCTURE = "FormatStructure"
    RULE_VIOLATION = "RuleViolation"
    TURN_LIMIT = "TurnLimit"
    OTHER = "Other"


_CATEGORY = {
    ErrorType.INVALID_FORMAT: FailureCategory.FORMAT_STRUCTURE,
    ErrorType.INVALID_MOVE: FailureCategory.FORMAT_STRUCTURE,
    ErrorType.ILLEGAL_UNITS: FailureCategory.RULE_VIOLATION,
    ErrorType.ILLEGAL_CLUE: FailureCategory.RULE_VIOLATION,
    ErrorType.PROTECTION_OF_ELIMINATED: FailureCategory.RULE_VIOLATION,
}


def failure_category(error_type: ErrorType | str) -> FailureCategory:
    try:
        return _CATEGORY[ErrorType(error_type)]
    except ValueError:
        return FailureCategory.OTHER


def failure_mode_histogram(ledgers: Iterable[ErrorLedger | GameLog]) -> dict[str, dict[str, float]]:
    """Percent composition of invalid actions per environment (every non-Valid outcome counts)."""
    counts: dict[str, Counter] = defaultdict(Counter)
    for item in ledgers:
        led = _as_ledger(item)
        for e in led.events:
            counts[led.env][failure_category(e.error_type)] += 1
        if led.turn_limited:
            counts[led.env][FailureCategory.TURN_LIMIT] += 1
    out = {}
    for env, c in counts.items():
        total = sum(c.values())
        out[env] = {cat.value: 100.0 * c[cat] / total for cat in FailureCategory}
    return out


# -- exports --------------------------------------------------------------------------

ATTRIBUTION_COLUMNS = (
    "Environment", "Rank", "Model", "Games", "Clean", "Caused", "Witnessed", "Self-Forf.", "Opp-Forf.",
)


def write_attribution_table(rows: Mapping[str, Sequence[AttributionRow]], path: str | Path) -> None:
    """``rows`` maps environment -> rows in rank order (rank is the 1-based position)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ATTRIBUTION_COLUMNS)
        for env, env_rows in rows.items():
            for rank, r in enumerate(env_rows, 1):
                w.writerow([env, rank, r.model, r.games, r.clean, r.caused, r.witnessed, r.self_forf, r.opp_forf])


@dataclass(frozen=True)
class ScatterPoint:
    model: str
    env: str
    mu: float
    sigma: float
    cumulative_reward: float


def write_scatter_csv(points: Sequence[ScatterPoint], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "env", "mu", "sigma", "cumulative_reward"])
        for p in points:
            w.writerow([p.model, p.env, f"{p.mu:.6f}", f"{p.sigma:.6f}", f"{p.cumulative_reward:g}"])


def scatter_points(games: Sequence[GameLog]) -> list[ScatterPoint]:
    """Per-(model, env) TrueSkill posterior and cumulative reward, rating games in game_id order.

    Every model starts from the prior in each environment; a model seated
    more than once in a game is rated through its first seat only.
    """
    from .rating import RatingParams, rate, result_from_game

    params = RatingParams()
    ratings: dict[tuple[str, str], object] = {}
    rewards: dict[tuple[str, str], float] = defaultdict(float)
    for g in sorted(games, key=lambda g: g.game_id):
        env = canonical_kind(g.env_name)
        first_seat: dict[str, PlayerId] = {}
        for pid, model in sorted(g.seating.items()):
            first_seat.setdefault(model, pid)
            rewards[(model, env)] += g.rewards[pid]
        seat_ratings = {
            pid: ratings.get((model, env)) or params.fresh() for pid, model in g.seating.items()
        }
        updated = rate(seat_ratings, result_from_game(env, g.rewards), params)
        for model, pid in first_seat.items():
            ratings[(model, env)] = updated[pid]
    return [
        ScatterPoint(model, env, r.mu, r.sigma, rewards[(model, env)])  # type: ignore[attr-defined]
        for (model, env), r in sorted(ratings.items())
    ]
