"""Line-delimited JSON trajectory records, one per (game, player who acted).

Field names follow the released-dataset schema. Each entry of ``observations``
is a dict with ``observation`` and ``action`` plus the engine's ``outcome``,
``error_type`` and ``phase`` for that turn, and ``roles`` maps every seat to
its role. Files ending in ``.gz`` are compressed transparently.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Iterator

from .core import GameLog, Turn

STATUSES = frozenset({"finished"})
REASONS = frozenset({"normal", "self_forfeit", "opponent_forfeit", "player_eliminated_error", "turn_limit"})

FIELDS = (
    "player_game_id", "game_id", "env_name", "model_name", "player_id", "opponent_names",
    "rewards", "observations", "num_turns", "status", "reason", "roles",
)


@dataclass
class TrajectoryRecord:
    player_game_id: int
    game_id: int
    env_name: str
    model_name: str
    player_id: int
    opponent_names: dict[int, str]
    rewards: dict[int, float]
    observations: list[dict[str, Any]]
    num_turns: int
    status: str = "finished"
    reason: str = "normal"
    roles: dict[int, str] = field(default_factory=dict)

    @property
    def role(self) -> str:
        return self.roles.get(self.player_id, "")

    def to_json(self) -> str:
        d = {name: getattr(self, name) for name in FIELDS}
        d["opponent_names"] = {str(k): v for k, v in self.opponent_names.items()}
        d["rewards"] = {str(k): v for k, v in self.rewards.items()}
        d["roles"] = {str(k): v for k, v in self.roles.items()}
        return json.dumps(d, ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrajectoryRecord:
        return cls(
            player_game_id=d["player_game_id"],
            game_id=d["game_id"],
            env_name=d["env_name"],
            model_name=d["model_name"],
            player_id=d["player_id"],
            opponent_names={int(k): v for k, v in d["opponent_names"].items()},
            rewards={int(k): float(v) for k, v in d["rewards"].items()},
            observations=list(d["observations"]),
            num_turns=d["num_turns"],
            status=d.get("status", "finished"),
            reason=d.get("reason", "normal"),
            roles={int(k): v for k, v in d.get("roles", {}).items()},
        )

    @property
    def turns(self) -> list[Turn]:
        return [Turn.from_dict(t) for t in self.observations]


def player_game_id(game_id: int, player_id: int) -> int:
    return game_id * 100 + player_id


def records_from_game(game: GameLog) -> list[TrajectoryRecord]:
    """One record per player with at least one turn."""
    out = []
    for pid in sorted(game.trajectories):
        turns = game.trajectories[pid]
        if not turns:
            continue
        out.append(
            TrajectoryRecord(
                player_game_id=player_game_id(game.game_id, pid),
                game_id=game.game_id,
                env_name=game.env_name,
                model_name=game.seating[pid],
                player_id=pid,
                opponent_names={p: m for p, m in sorted(game.seating.items()) if p != pid},
                rewards=dict(sorted(game.rewards.items())),
                observations=[t.to_dict() for t in turns],
                num_turns=len(turns),
                status=game.status,
                reason=game.reasons.get(pid, "normal"),
                roles=dict(sorted(game.roles.items())),
            )
        )
    return out


def games_from_records(records: Iterable[TrajectoryRecord]) -> list[GameLog]:
    """Regroup player records into game logs (players without a record keep their seat)."""
    grouped: dict[int, list[TrajectoryRecord]] = {}
    for r in records:
        grouped.setdefault(r.game_id, []).append(r)
    games = []
    for gid in sorted(grouped):
        recs = grouped[gid]
        first = recs[0]
        seating = {**first.opponent_names, first.player_id: first.model_name}
        reasons = {pid: "normal" for pid in seating}
        roles = dict(first.roles)
        for r in recs:
            seating[r.player_id] = r.model_name
            reasons[r.player_id] = r.reason
        games.append(
            GameLog(
                game_id=gid,
                env_name=first.env_name,
                seating=dict(sorted(seating.items())),
                rewards=dict(first.rewards),
                trajectories={r.player_id: r.turns for r in sorted(recs, key=lambda r: r.player_id)},
                reasons=reasons,
                roles=roles,
                status=first.status,
            )
        )
    return games


def _open(path: str | Path, mode: str) -> IO[str]:
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")  # type: ignore[return-value]
    return open(path, mode, encoding="utf-8", newline="\n")


def write_records(games: Iterable[GameLog], path: str | Path) -> int:
    """Write every game's player records; returns the number of lines written."""
    n = 0
    with _open(path, "w") as fh:
        for game in games:
            for rec in records_from_game(game):
                fh.write(rec.to_json() + "\n")
                n += 1
    return n


def iter_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, line


def read_records(path: str | Path) -> list[TrajectoryRecord]:
    """Strict reader: raises on the first malformed line."""
    return [TrajectoryRecord.from_dict(json.loads(line)) for _, line in iter_lines(path)]


# -- validation -----------------------------------------------------------------------

_TYPES: dict[str, type | tuple[type, ...]] = {
    "player_game_id": int, "game_id": int, "env_name": str, "model_name": str, "player_id": int,
    "opponent_names": dict, "rewards": dict, "observations": list, "num_turns": int,
    "status": str, "reason": str,
}


@dataclass(frozen=True)
class Violation:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class DatasetSummary:
    games: int
    trajectories: int
    mean_turns: float

    def as_dict(self) -> dict[str, float]:
        return {"games": self.games, "trajectories": self.trajectories, "mean_turns": self.mean_turns}


@dataclass
class ValidationReport:
    records: list[TrajectoryRecord] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def summary(self) -> DatasetSummary:
        n = len(self.records)
        return DatasetSummary(
            games=len({r.game_id for r in self.records}),
            trajectories=n,
            mean_turns=sum(r.num_turns for r in self.records) / n if n else 0.0,
        )


def _check_record(d: Any) -> list[str]:
    if not isinstance(d, dict):
        return ["record is not an object"]
    problems = []
    for name, typ in _TYPES.items():
        if name not in d:
            problems.append(f"missing field '{name}'")
        elif not isinstance(d[name], typ) or (typ is int and isinstance(d[name], bool)):
            problems.append(f"field '{name}' has type {type(d[name]).__name__}")
    if problems:
        return problems
    obs = d["observations"]
    if d["num_turns"] != len(obs):
        problems.append(f"num_turns={d['num_turns']} but {len(obs)} observations")
    if not obs:
        problems.append("empty trajectory")
    for i, t in enumerate(obs):
        if not (isinstance(t, dict) and isinstance(t.get("observation"), str) and isinstance(t.get("action"), str)):
            problems.append(f"observations[{i}] lacks observation/action strings")
            break
    seats = {str(d["player_id"]), *map(str, d["opponent_names"])}
    if set(map(str, d["rewards"])) != seats:
        problems.append("reward keys do not cover the game's players")
    if d["status"] not in STATUSES:
        problems.append(f"unknown status {d['status']!r}")
    if d["reason"] not in REASONS:
        problems.append(f"unknown reason {d['reason']!r}")
    return problems


def read_and_validate(path: str | Path) -> ValidationReport:
    """Validate every line; malformed lines are reported, never fatal."""
    report = ValidationReport()
    seen: dict[int, int] = {}
    for lineno, line in iter_lines(path):
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            report.violations.append(Violation(lineno, f"invalid JSON ({exc.msg})"))
            continue
        problems = _check_record(d)
        if not problems and d["player_game_id"] in seen:
            problems.append(f"player_game_id {d['player_game_id']} repeats line {seen[d['player_game_id']]}")
        report.violations.extend(Violation(lineno, p) for p in problems)
        if not problems:
            seen[d["player_game_id"]] = lineno
            report.records.append(TrajectoryRecord.from_dict(d))
    return report
