"""Offline reference-pool tournament: factorial manifests, execution, and reporting.

A participant is scheduled against a frozen pool of reference agents under a
balanced factorial design per environment. Matches may run concurrently, but
rating updates are applied afterwards in manifest order, so the report does
not depend on completion order.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .agents import Agent, AgentContext, AgentUnavailable
from .codenames import ROLES as CODENAMES_ROLES
from .core import ConfigError, GameEnv, GameLog, PlayerId, StepResult, UsageError
from .games import ENV_ORDER, canonical_kind, make_env
from .metrics import AttributionRow, attribute_errors, is_win, role_label, wilson_interval
from .rating import Rating, RatingParams, rate, result_from_game

log = logging.getLogger(__name__)

SEED_OFFSETS = {"blotto": 10_000, "ipd": 20_000, "codenames": 30_000, "mafia": 40_000}
REDRAW_OFFSET = 100_000
MAX_REDRAWS = 3
MAX_STEPS = 10_000


class Track(str, Enum):
    GENERALIZATION = "Generalization"
    SOCIAL_DEDUCTION = "SocialDeduction"

    @property
    def envs(self) -> tuple[str, ...]:
        return ("blotto", "ipd", "codenames") if self is Track.GENERALIZATION else ("mafia",)

    @property
    def pool_size(self) -> int:
        return 3 if self is Track.GENERALIZATION else 4


@dataclass(frozen=True)
class Reference:
    agent_id: str
    ratings: dict[str, Rating]  # env kind -> frozen posterior


@dataclass(frozen=True)
class RefPool:
    track: Track
    references: tuple[Reference, ...]

    def __post_init__(self) -> None:
        track = Track(self.track)
        object.__setattr__(self, "track", track)
        if len(self.references) != track.pool_size:
            raise ConfigError(
                f"{track.value} pool needs {track.pool_size} references, got {len(self.references)}"
            )
        ids = [r.agent_id for r in self.references]
        if len(set(ids)) != len(ids):
            raise ConfigError("reference ids must be distinct")
        for ref in self.references:
            missing = [e for e in track.envs if e not in ref.ratings]
            if missing:
                raise ConfigError(f"reference {ref.agent_id} lacks ratings for {', '.join(missing)}")

    @property
    def ids(self) -> list[str]:
        return [r.agent_id for r in self.references]

    def rating(self, agent_id: str, env: str) -> Rating:
        for r in self.references:
            if r.agent_id == agent_id:
                return r.ratings[env]
        raise UsageError(f"{agent_id!r} is not in the pool")

    @classmethod
    def from_dict(cls, track: Track | str, entries: Sequence[Mapping[str, Any]]) -> RefPool:
        refs = tuple(
            Reference(
                e["id"],
                {canonical_kind(env): Rating(float(mu), float(sigma), frozen=True) for env, (mu, sigma) in e["ratings"].items()},
            )
            for e in entries
        )
        return cls(Track(track), refs)

    @classmethod
    def load(cls, track: Track | str, path: str | Path | None = None) -> RefPool:
        """Load a pool file (``{track: [{"id", "ratings": {env: [mu, sigma]}}]}``); default is the bundled one."""
        track = Track(track)
        if path is None:
            text = resources.files("gamearena").joinpath("data/reference_pool.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        data = json.loads(text)
        if track.value not in data:
            raise ConfigError(f"pool file has no {track.value} entry")
        return cls.from_dict(track, data[track.value])


# -- manifest -------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchSpec:
    env: str
    k: int
    seed: int
    seating: dict[PlayerId, str]
    replicate: int
    cell: str

    def to_json(self) -> str:
        return json.dumps(
            {"env": self.env, "k": self.k, "seed": self.seed,
             "seating": {str(p): a for p, a in sorted(self.seating.items())},
             "replicate": self.replicate, "cell": self.cell},
            sort_keys=False,
        )

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> MatchSpec:
        return cls(
            canonical_kind(d["env"]), int(d["k"]), int(d["seed"]),
            {int(p): a for p, a in d["seating"].items()}, int(d["replicate"]), d["cell"],
        )


@dataclass
class TournamentManifest:
    participant: str
    track: Track
    matches: list[MatchSpec]
    multiplier: int = 1

    def for_env(self, env: str) -> list[MatchSpec]:
        return [m for m in self.matches if m.env == env]

    def counts(self) -> dict[str, int]:
        return {e: len(self.for_env(e)) for e in ENV_ORDER if self.for_env(e)}

    def design_half_width(self, env: str) -> float:
        """Wald 95% half-width at p = 0.5 for this env's game count (design metadata only)."""
        return 1.96 * math.sqrt(0.25 / len(self.for_env(env)))

    def write(self, path: str | Path) -> None:
        header = {"participant": self.participant, "track": self.track.value, "multiplier": self.multiplier}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"manifest": header}) + "\n")
            for m in self.matches:
                fh.write(m.to_json() + "\n")

    def dumps(self) -> str:
        return "\n".join(m.to_json() for m in self.matches) + "\n"

    @classmethod
    def read(cls, path: str | Path) -> TournamentManifest:
        lines = [ln for ln in Path(path).read_text("utf-8").splitlines() if ln.strip()]
        if not lines:
            raise ConfigError(f"{path}: empty manifest")
        head = json.loads(lines[0]).get("manifest")
        if head is None:
            raise ConfigError(f"{path}: first line must be the manifest header")
        matches = [MatchSpec.from_dict(json.loads(ln)) for ln in lines[1:]]
        return cls(head["participant"], Track(head["track"]), matches, int(head.get("multiplier", 1)))


def seed_for(env: str, k: int) -> int:
    if k < 0:
        raise UsageError("match index must be non-negative")
    return SEED_OFFSETS[canonical_kind(env)] + k


def _blotto_cells(refs: list[str], me: str, m: int):
    for o, opp in enumerate(refs):
        for seat in range(2):
            for rep in range(5 * m):
                seating = {seat: me, 1 - seat: opp}
                yield seating, rep, f"opp={opp};seat={seat}"


def _ipd_cells(refs: list[str], me: str, m: int):
    for a, b in combinations(refs, 2):
        for seat in range(3):
            others = [p for p in range(3) if p != seat]
            for order, pair in enumerate(((a, b), (b, a))):
                for rep in range(2 * m):
                    seating = {seat: me, others[0]: pair[0], others[1]: pair[1]}
                    yield seating, rep, f"refs={a}+{b};seat={seat};order={order}"


def _codenames_cells(refs: list[str], me: str, m: int):
    for role in range(4):
        mate_seat = role ^ 1
        opp_seats = (2, 3) if role < 2 else (0, 1)
        for i, mate in enumerate(refs):
            pair = (refs[(i + 1) % 3], refs[(i + 2) % 3])
            for rep in range(3 * m):
                spy, op = pair if rep % 2 == 0 else pair[::-1]
                seating = {role: me, mate_seat: mate, opp_seats[0]: spy, opp_seats[1]: op}
                yield seating, rep, f"role={CODENAMES_ROLES[role]};teammate={mate}"


def _mafia_cells(refs: list[str], me: str, m: int):
    for dup in refs:
        fill = refs + [dup]
        for seat in range(6):
            others = [p for p in range(6) if p != seat]
            shift = -seat % 5
            arrangement = fill[shift:] + fill[:shift]
            for rep in range(4 * m):
                seating = {seat: me, **dict(zip(others, arrangement))}
                yield seating, rep, f"dup={dup};seat={seat}"


_CELLS: dict[str, Callable] = {
    "blotto": _blotto_cells, "ipd": _ipd_cells, "codenames": _codenames_cells, "mafia": _mafia_cells,
}


def build_manifest(
    pool: RefPool, participant: str, multiplier: int = 1, seed_shift: int = 0
) -> TournamentManifest:
    """Deterministic factorial schedule; ``multiplier`` scales only the replicate factor."""
    if not isinstance(multiplier, int) or multiplier < 1:
        raise ConfigError("replicate multiplier must be a positive integer")
    if seed_shift < 0:
        raise ConfigError("seed shift must be non-negative")
    if participant in pool.ids:
        raise ConfigError(f"participant id {participant!r} collides with a reference id")
    matches = []
    for env in ENV_ORDER:
        if env not in pool.track.envs:
            continue
        for k, (seating, rep, cell) in enumerate(_CELLS[env](pool.ids, participant, multiplier)):
            seating = dict(sorted(seating.items()))
            matches.append(MatchSpec(env, k, seed_for(env, k) + seed_shift, seating, rep, cell))
    return TournamentManifest(participant, pool.track, matches, multiplier)


# -- execution ------------------------------------------------------------------------


def play_game(
    env_kind: str,
    seed: int,
    seating: Mapping[PlayerId, str],
    agents: Mapping[str, Agent],
    game_id: int | None = None,
    env_options: Mapping[str, Any] | None = None,
    observer: Callable[[GameEnv, Mapping[PlayerId, str], StepResult], None] | None = None,
) -> GameLog:
    """Run one game to completion; AgentUnavailable propagates to the caller.

    ``observer`` is called after every step with the environment, the submitted
    actions and the step result.
    """
    env = make_env(env_kind, **dict(env_options or {}))
    players = [seating[p] for p in sorted(seating)]
    st = env.reset(seed, players)
    gid = seed if game_id is None else game_id
    for _ in range(MAX_STEPS):
        if st.terminal:
            break
        actions = {}
        for pid in env.active_players():
            ctx = AgentContext(gid, env.kind, pid, st.turn, st.phase)
            actions[pid] = agents[seating[pid]].act(env.observation(pid), ctx)
        result = env.step(actions)
        if observer is not None:
            observer(env, actions, result)
    else:
        raise RuntimeError(f"{env.name} seed {seed} did not finish within {MAX_STEPS} steps")
    return env.game_log(gid, seating)


@dataclass
class MatchRecord:
    spec: MatchSpec
    game: GameLog
    seed: int
    redraws: int = 0


def _run_one(spec: MatchSpec, agents: Mapping[str, Agent]) -> MatchRecord:
    for attempt in range(MAX_REDRAWS + 1):
        seed = spec.seed + attempt * REDRAW_OFFSET
        try:
            game = play_game(spec.env, seed, spec.seating, agents)
        except AgentUnavailable as exc:
            log.warning("%s k=%d seed=%d discarded (%s); re-drawing", spec.env, spec.k, seed, exc)
            continue
        return MatchRecord(spec, game, seed, attempt)
    raise AgentUnavailable(f"{spec.env} k={spec.k}: agents unavailable after {MAX_REDRAWS} re-draws")


@dataclass
class EnvReport:
    env: str
    label: str
    games: int
    mu: float
    sigma: float
    wins: int
    wilson: tuple[float, float]
    cumulative_reward: float
    roles: dict[str, tuple[int, int]]  # role -> (wins, games)
    attribution: AttributionRow
    redraws: int = 0

    @property
    def win_rate(self) -> float:
        return self.wins / self.games if self.games else 0.0


@dataclass
class TournamentReport:
    participant: str
    track: Track
    envs: list[EnvReport]
    aggregate: EnvReport
    design_half_width: dict[str, float] = field(default_factory=dict)

    def sections(self) -> list[EnvReport]:
        return [*self.envs, self.aggregate]

    def to_records(self) -> list[dict[str, Any]]:
        """One record per (environment, metric)."""
        out = []
        for r in self.sections():
            metrics: dict[str, Any] = {
                "label": r.label, "games": r.games, "mu": r.mu, "sigma": r.sigma, "wins": r.wins,
                "win_rate": r.win_rate, "wilson_lower": r.wilson[0], "wilson_upper": r.wilson[1],
                "cumulative_reward": r.cumulative_reward, "redraws": r.redraws,
                **{k: v for k, v in r.attribution.as_dict().items() if k != "model"},
            }
            for role, (w, g) in sorted(r.roles.items()):
                metrics[f"role:{role}"] = {"wins": w, "games": g, "win_rate": w / g}
            if r.env in self.design_half_width:
                metrics["design_wald_half_width"] = self.design_half_width[r.env]
            out += [{"participant": self.participant, "environment": r.env, "metric": k, "value": v}
                    for k, v in metrics.items()]
        return out

    def to_json(self) -> str:
        return "\n".join(json.dumps(rec, sort_keys=True) for rec in self.to_records()) + "\n"

    def to_text(self) -> str:
        lines = [f"Reference-pool tournament: participant {self.participant} ({self.track.value} track)", ""]
        for r in self.sections():
            a = r.attribution
            lines += [
                f"== {r.env} ({r.label}) ==",
                f"  games               {r.games}" + (f" ({r.redraws} re-drawn)" if r.redraws else ""),
                f"  error attribution   clean {a.clean}  caused {a.caused}  witnessed {a.witnessed}  "
                f"self-forf {a.self_forf}  opp-forf {a.opp_forf}",
                f"  TrueSkill           {r.mu:.3f} ± {r.sigma:.3f}  (mu ± sigma)",
                f"  win rate            {r.win_rate:.3f}  95% Wilson [{r.wilson[0]:.3f}, {r.wilson[1]:.3f}]",
                f"  cumulative reward   {r.cumulative_reward:g}",
            ]
            for role, (w, g) in sorted(r.roles.items()):
                lines.append(f"  role {role:<15} {w}/{g} ({w / g:.3f})")
            lines.append("")
        return "\n".join(lines)


@dataclass
class TournamentRun:
    manifest: TournamentManifest
    matches: list[MatchRecord]
    report: TournamentReport

    @property
    def games(self) -> list[GameLog]:
        return [m.game for m in self.matches]


def _summarise(
    env: str, label: str, records: list[MatchRecord], me: str, rating: Rating
) -> EnvReport:
    games = [r.game for r in records]
    wins = 0
    reward = 0.0
    roles: dict[str, list[int]] = {}
    for g in games:
        for pid, model in g.seating.items():
            if model != me:
                continue
            won = is_win(g.rewards, pid)
            wins += won
            reward += g.rewards[pid]
            cell = roles.setdefault(role_label(g, pid), [0, 0])
            cell[0] += won
            cell[1] += 1
    n = len(games)
    return EnvReport(
        env=env, label=label, games=n, mu=rating.mu, sigma=rating.sigma, wins=wins,
        wilson=wilson_interval(wins, n) if n else (0.0, 1.0),
        cumulative_reward=reward, roles={k: (v[0], v[1]) for k, v in roles.items()},
        attribution=attribute_errors(games, me), redraws=sum(r.redraws for r in records),
    )


def _apply_ratings(
    records: Sequence[MatchRecord], pool: RefPool, me: str, params: RatingParams
) -> Rating:
    mine = params.fresh()
    for rec in records:
        g = rec.game
        env = rec.spec.env
        seat_ratings = {
            pid: mine if model == me else pool.rating(model, env) for pid, model in g.seating.items()
        }
        updated = rate(seat_ratings, result_from_game(env, g.rewards), params)
        mine = next(updated[pid] for pid, model in g.seating.items() if model == me)
    return mine


def run_manifest(
    manifest: TournamentManifest,
    agents: Mapping[str, Agent],
    pool: RefPool,
    jobs: int = 1,
    params: RatingParams | None = None,
    trajectory_path: str | Path | None = None,
) -> TournamentRun:
    """Play every match, then rate the participant sequentially in manifest order.

    Each environment starts the participant at the prior; the aggregate section
    chains all matches of the manifest from a fresh prior.
    """
    params = params or RatingParams()
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    me = manifest.participant
    seated = {a for m in manifest.matches for a in m.seating.values()}
    missing = sorted(seated - set(agents))
    if missing:
        raise ConfigError(f"no agent registered for {', '.join(missing)}")
    if jobs == 1:
        records = [_run_one(spec, agents) for spec in manifest.matches]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            records = list(pool_exec.map(lambda s: _run_one(s, agents), manifest.matches))

    if trajectory_path is not None:
        from .dataio import write_records

        write_records((r.game for r in records), trajectory_path)

    sections = []
    for env in ENV_ORDER:
        env_records = [r for r in records if r.spec.env == env]
        if not env_records:
            continue
        label = "local estimate vs reference pool" if env == "mafia" else "TrueSkill"
        rating = _apply_ratings(env_records, pool, me, params)
        sections.append(_summarise(env, label, env_records, me, rating))
    aggregate = _summarise("aggregate", "all environments", records, me, _apply_ratings(records, pool, me, params))
    report = TournamentReport(
        me, manifest.track, sections, aggregate,
        {s.env: manifest.design_half_width(s.env) for s in sections},
    )
    return TournamentRun(manifest, records, report)
