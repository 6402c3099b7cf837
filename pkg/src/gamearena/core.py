"""Shared engine machinery: action outcomes, turn logging, and the environment base class.

Every game is a deterministic simulator with hidden state. Agents see only
rendered text observations and answer with raw text; the environment parses
the text, applies its invalid-action policy, and advances. Rewards appear
once, at the terminal transition.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Mapping

PlayerId = int

GAME_MESSAGE = -1  # sender id for engine-authored messages, rendered as "[-1]"


class ConfigError(ValueError):
    """Raised for invalid configuration (player counts, seeds, lexicons, pools)."""


class UsageError(RuntimeError):
    """Raised when the caller violates an operation's contract."""


class OutcomeKind(str, Enum):
    VALID = "Valid"
    NONFATAL_CORRECTED = "NonFatalCorrected"
    NONFATAL_SKIPPED = "NonFatalSkipped"
    RETRY_REQUESTED = "RetryRequested"
    FATAL_FORFEIT = "FatalForfeit"
    FATAL_ELIMINATION = "FatalElimination"

    @property
    def fatal(self) -> bool:
        return self in (OutcomeKind.FATAL_FORFEIT, OutcomeKind.FATAL_ELIMINATION)

    @property
    def is_error(self) -> bool:
        return self is not OutcomeKind.VALID


class ErrorType(str, Enum):
    INVALID_FORMAT = "InvalidFormat"
    ILLEGAL_UNITS = "IllegalUnits"
    ILLEGAL_CLUE = "IllegalClue"
    INVALID_MOVE = "InvalidMove"
    PROTECTION_OF_ELIMINATED = "ProtectionOfEliminated"


class ActionError(Exception):
    """A parse or legality failure for one submitted action string."""

    def __init__(self, error_type: ErrorType, message: str = ""):
        super().__init__(message or error_type.value)
        self.error_type = error_type


@dataclass(frozen=True)
class ActionOutcome:
    kind: OutcomeKind
    raw_text: str
    error_type: ErrorType | None = None

    def __post_init__(self) -> None:
        if (self.error_type is None) != (self.kind is OutcomeKind.VALID):
            raise ValueError("error_type must be set exactly when the outcome is not Valid")

    @classmethod
    def valid(cls, raw_text: str) -> ActionOutcome:
        return cls(OutcomeKind.VALID, raw_text)


@dataclass(frozen=True)
class Turn:
    """One logged (observation, action) pair for one player."""

    observation: str
    action: str
    outcome: OutcomeKind = OutcomeKind.VALID
    error_type: ErrorType | None = None
    phase: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "observation": self.observation,
            "action": self.action,
            "outcome": self.outcome.value,
            "error_type": self.error_type.value if self.error_type else None,
            "phase": self.phase,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Turn:
        et = d.get("error_type")
        return cls(
            observation=d["observation"],
            action=d["action"],
            outcome=OutcomeKind(d.get("outcome", "Valid")),
            error_type=ErrorType(et) if et else None,
            phase=d.get("phase", ""),
        )


@dataclass
class GameLog:
    """Everything needed downstream (persistence, metrics, rating) about one finished game."""

    game_id: int
    env_name: str
    seating: dict[PlayerId, str]
    rewards: dict[PlayerId, float]
    trajectories: dict[PlayerId, list[Turn]]
    reasons: dict[PlayerId, str]
    roles: dict[PlayerId, str] = field(default_factory=dict)
    status: str = "finished"
    seed: int | None = None

    @property
    def players(self) -> list[PlayerId]:
        return sorted(self.seating)


@dataclass
class StepResult:
    outcomes: dict[PlayerId, ActionOutcome]
    rewards: dict[PlayerId, float] | None = None

    @property
    def done(self) -> bool:
        return self.rewards is not None


@dataclass
class EnvState:
    """State fields shared by every environment; subclasses add the game-specific part."""

    turn: int = 1
    phase: str = ""
    terminal: bool = False
    inbox: dict[PlayerId, list[tuple[int, str]]] = field(default_factory=dict)
    strikes: dict[PlayerId, int] = field(default_factory=dict)
    retry_notice: dict[PlayerId, str] = field(default_factory=dict)
    rewards: dict[PlayerId, float] | None = None
    reasons: dict[PlayerId, str] = field(default_factory=dict)


def render_messages(messages: list[tuple[int, str]]) -> str:
    return "\n".join(f"[{sender}] {text}" for sender, text in messages)


class GameEnv(ABC):
    """Base environment: turn bookkeeping, trajectory logging, retry/strike policy.

    Subclasses implement ``_setup``, ``active_players``, ``_prompt`` and ``_apply``.
    """

    name: ClassVar[str]
    kind: ClassVar[str]
    num_players: ClassVar[int]
    expected_length: ClassVar[float]

    def __init__(self) -> None:
        self.state: EnvState | None = None
        self.seed: int | None = None
        self.players: list[str] = []
        self.trajectories: dict[PlayerId, list[Turn]] = {}

    # -- lifecycle -----------------------------------------------------------------

    def reset(self, seed: int, players: list[str] | None = None) -> EnvState:
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        if players is None:
            players = [f"player_{i}" for i in range(self.num_players)]
        if len(players) != self.num_players:
            raise ConfigError(
                f"{self.name} needs exactly {self.num_players} players, got {len(players)}"
            )
        self.seed = seed
        self.players = list(players)
        self.trajectories = {pid: [] for pid in range(self.num_players)}
        self.state = self._setup(random.Random(seed))
        st = self.state
        st.inbox = {pid: st.inbox.get(pid, []) for pid in range(self.num_players)}
        st.strikes = {pid: 0 for pid in range(self.num_players)}
        st.reasons = {pid: "normal" for pid in range(self.num_players)}
        return st

    @abstractmethod
    def _setup(self, rng: random.Random) -> EnvState:
        """Build s_1, posting any opening messages into ``state.inbox``."""

    @abstractmethod
    def active_players(self) -> tuple[PlayerId, ...]:
        """Players who must submit an action at the current state."""

    @abstractmethod
    def _prompt(self, pid: PlayerId) -> str | None:
        """State-dependent request text shown at the end of an active player's observation."""

    @abstractmethod
    def _apply(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        """Parse, validate and transition; may call ``_finish``."""

    def role_of(self, pid: PlayerId) -> str:
        return ""

    # -- observation ---------------------------------------------------------------

    def observation(self, pid: PlayerId) -> str:
        st = self._require_state()
        parts = []
        if st.inbox[pid]:
            parts.append(render_messages(st.inbox[pid]))
        prompt = self._prompt(pid) if pid in self._active_or_empty() else None
        if prompt:
            parts.append(f"[{GAME_MESSAGE}] {prompt}")
        if pid in st.retry_notice:
            parts.append(f"[{GAME_MESSAGE}] {st.retry_notice[pid]}")
        return "\n".join(parts)

    def _active_or_empty(self) -> tuple[PlayerId, ...]:
        return () if self._require_state().terminal else self.active_players()

    # -- stepping ------------------------------------------------------------------

    def step(self, actions: Mapping[PlayerId, str]) -> StepResult:
        st = self._require_state()
        if st.terminal:
            raise UsageError("step() called on a terminal state")
        active = self.active_players()
        if set(actions) != set(active):
            raise UsageError(f"actions must be keyed exactly by active players {active}")
        actions = {pid: actions[pid] for pid in active}
        phase = st.phase
        observed = {pid: self.observation(pid) for pid in active}
        seen = {pid: len(st.inbox[pid]) for pid in active}
        outcomes = self._apply(actions)
        for pid in active:
            out = outcomes[pid]
            self.trajectories[pid].append(
                Turn(observed[pid], actions[pid], out.kind, out.error_type, phase)
            )
            if out.kind is not OutcomeKind.RETRY_REQUESTED:
                del st.inbox[pid][: seen[pid]]
                st.retry_notice.pop(pid, None)
        st.turn += 1
        return StepResult(outcomes, dict(st.rewards) if st.terminal else None)

    def _strike(
        self, pid: PlayerId, raw: str, error: ActionError, fatal_kind: OutcomeKind
    ) -> ActionOutcome:
        """One retry per action slot; a second consecutive invalid action is fatal."""
        st = self._require_state()
        st.strikes[pid] += 1
        if st.strikes[pid] >= 2:
            st.strikes[pid] = 0
            return ActionOutcome(fatal_kind, raw, error.error_type)
        st.retry_notice[pid] = f"Invalid action ({error}). Please resubmit; one retry remains."
        return ActionOutcome(OutcomeKind.RETRY_REQUESTED, raw, error.error_type)

    def _clear_strikes(self, pid: PlayerId) -> None:
        self._require_state().strikes[pid] = 0

    def _post(self, text: str, to: list[PlayerId] | None = None, sender: int = GAME_MESSAGE) -> None:
        st = self._require_state()
        for pid in range(self.num_players) if to is None else to:
            st.inbox[pid].append((sender, text))

    def _finish(self, rewards: dict[PlayerId, float], reasons: dict[PlayerId, str] | None = None) -> None:
        st = self._require_state()
        st.terminal = True
        st.phase = "Terminal"
        st.rewards = {pid: float(rewards[pid]) for pid in range(self.num_players)}
        if reasons:
            st.reasons.update(reasons)

    def _require_state(self) -> EnvState:
        if self.state is None:
            raise UsageError("reset() must be called first")
        return self.state

    # -- results -------------------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.terminal

    def played_trajectories(self) -> dict[PlayerId, list[Turn]]:
        """Trajectories of players who acted at least once."""
        return {pid: list(t) for pid, t in self.trajectories.items() if t}

    def game_log(self, game_id: int, seating: Mapping[PlayerId, str] | None = None) -> GameLog:
        st = self._require_state()
        if not st.terminal:
            raise UsageError("game_log() requires a terminal state")
        seating = dict(seating) if seating else dict(enumerate(self.players))
        return GameLog(
            game_id=game_id,
            env_name=self.name,
            seating=seating,
            rewards=dict(st.rewards),
            trajectories=self.played_trajectories(),
            reasons=dict(st.reasons),
            roles={pid: self.role_of(pid) for pid in range(self.num_players)},
            seed=self.seed,
        )


def forfeit_reasons(num_players: int, offenders: set[PlayerId]) -> dict[PlayerId, str]:
    return {
        pid: "self_forfeit" if pid in offenders else "opponent_forfeit"
        for pid in range(num_players)
    }
