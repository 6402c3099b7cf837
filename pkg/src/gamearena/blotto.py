"""Colonel Blotto: two commanders split 20 units over fields A, B, C for nine rounds."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import (
    ActionError,
    ActionOutcome,
    EnvState,
    ErrorType,
    GameEnv,
    OutcomeKind,
    PlayerId,
    forfeit_reasons,
)

UNITS = 20
ROUNDS = 9
FIELDS = ("A", "B", "C")
COMMANDERS = ("Commander Alpha", "Commander Beta")

_ALLOCATION = re.compile(
    r"\[\s*A\s*(-?\d+)\s+B\s*(-?\d+)\s+C\s*(-?\d+)\s*\]", re.IGNORECASE
)


class Allocation(NamedTuple):
    a: int
    b: int
    c: int

    def __str__(self) -> str:
        return f"[A{self.a} B{self.b} C{self.c}]"


class RoundResult(NamedTuple):
    fields_won: tuple[tuple[str, ...], tuple[str, ...]]
    winner: int | None  # None for a round tie


def parse_allocation(text: str, units: int = UNITS) -> Allocation:
    """Parse the last ``[A<x> B<y> C<z>]`` token in ``text``.

    Raises ActionError(InvalidFormat) when there is no such token and
    ActionError(IllegalUnits) for negative counts or a total above ``units``.
    """
    matches = _ALLOCATION.findall(text)
    if not matches:
        raise ActionError(ErrorType.INVALID_FORMAT, "expected a token like '[A4 B2 C2]'")
    alloc = Allocation(*(int(v) for v in matches[-1]))
    if min(alloc) < 0:
        raise ActionError(ErrorType.ILLEGAL_UNITS, "negative unit count")
    if sum(alloc) > units:
        raise ActionError(ErrorType.ILLEGAL_UNITS, f"allocated {sum(alloc)} > {units} units")
    return alloc


def resolve_round(a0: Allocation, a1: Allocation) -> RoundResult:
    """Each field goes to the strictly larger commitment; ties go to neither."""
    won0 = tuple(f for f, x, y in zip(FIELDS, a0, a1) if x > y)
    won1 = tuple(f for f, x, y in zip(FIELDS, a0, a1) if y > x)
    if len(won0) > len(won1):
        winner = 0
    elif len(won1) > len(won0):
        winner = 1
    else:
        winner = None
    return RoundResult((won0, won1), winner)


def terminal_reward(rounds_won: tuple[int, int] | list[int]) -> dict[PlayerId, float]:
    w0, w1 = rounds_won
    if w0 == w1:
        return {0: 0.0, 1: 0.0}
    return {0: 1.0, 1: -1.0} if w0 > w1 else {0: -1.0, 1: 1.0}


@dataclass
class BlottoState(EnvState):
    round: int = 1
    rounds_won: list[int] = field(default_factory=lambda: [0, 0])
    ties: int = 0
    pending: dict[PlayerId, Allocation] = field(default_factory=dict)
    history: list[tuple[Allocation, Allocation]] = field(default_factory=list)


class BlottoEnv(GameEnv):
    name = "ColonelBlotto-v0"
    kind = "blotto"
    num_players = 2
    expected_length = 9

    def __init__(self, rounds: int = ROUNDS, units: int = UNITS):
        super().__init__()
        self.rounds = rounds
        self.units = units

    @property
    def _s(self) -> BlottoState:
        return self._require_state()  # type: ignore[return-value]

    def _setup(self, rng: random.Random) -> BlottoState:
        st = BlottoState(phase="Allocate")
        st.inbox = {pid: [] for pid in range(2)}
        for pid in range(2):
            st.inbox[pid].append((-1, (
                f"You are {COMMANDERS[pid]} in a game of ColonelBlotto. Each round, you can "
                f"allocate up to {self.units} units across fields: {', '.join(FIELDS)}\n"
                "Format: '[A4 B2 C2]'\n"
                "Win the majority of fields to win the round!"
            )))
        return st

    def role_of(self, pid: PlayerId) -> str:
        return COMMANDERS[pid]

    def active_players(self) -> tuple[PlayerId, ...]:
        st = self._s
        return tuple(pid for pid in (0, 1) if pid not in st.pending)

    def _prompt(self, pid: PlayerId) -> str:
        st = self._s
        return (
            f"=== COLONEL BLOTTO - Round {st.round}/{self.rounds} ===\n"
            f"Rounds Won - {COMMANDERS[0]}: {st.rounds_won[0]}, "
            f"{COMMANDERS[1]}: {st.rounds_won[1]}\n"
            f"Available fields: {', '.join(FIELDS)}\n"
            f"Units to allocate: {self.units}\n"
            "Format: '[A4 B2 C2]'."
        )

    def _apply(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        st = self._s
        outcomes: dict[PlayerId, ActionOutcome] = {}
        for pid, text in actions.items():
            try:
                st.pending[pid] = parse_allocation(text, self.units)
            except ActionError as err:
                outcomes[pid] = self._strike(pid, text, err, OutcomeKind.FATAL_FORFEIT)
            else:
                self._clear_strikes(pid)
                outcomes[pid] = ActionOutcome.valid(text)

        forfeits = {pid for pid, o in outcomes.items() if o.kind.fatal}
        if forfeits:
            if len(forfeits) == 2:
                rewards = {0: 0.0, 1: 0.0}
            else:
                (loser,) = forfeits
                rewards = {loser: -1.0, 1 - loser: 1.0}
            for pid in forfeits:
                self._post(f"{COMMANDERS[pid]} made two consecutive invalid moves and forfeits.")
            self._finish(rewards, forfeit_reasons(2, forfeits))
            return outcomes

        if len(st.pending) == 2:
            self._resolve()
        return outcomes

    def _resolve(self) -> None:
        st = self._s
        a0, a1 = st.pending[0], st.pending[1]
        result = resolve_round(a0, a1)
        st.history.append((a0, a1))
        st.pending = {}
        if result.winner is None:
            st.ties += 1
            verdict = "The round is a tie."
        else:
            st.rounds_won[result.winner] += 1
            verdict = f"{COMMANDERS[result.winner]} wins the round."
        self._post(
            f"Round {st.round} results: {COMMANDERS[0]} played {a0}, "
            f"{COMMANDERS[1]} played {a1}. {verdict}"
        )
        if st.round >= self.rounds:
            self._finish(terminal_reward(st.rounds_won))
        else:
            st.round += 1
