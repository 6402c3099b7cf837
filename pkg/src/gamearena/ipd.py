"""Three-player iterated prisoner's dilemma with a chat turn before every decision."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from enum import Enum

from .core import ActionOutcome, EnvState, ErrorType, GameEnv, OutcomeKind, PlayerId

ROUNDS = 5
NUM_PLAYERS = 3
CHAT_LIMIT = 512
TRUNCATION_MARKER = " [truncated]"


class Decision(str, Enum):
    COOPERATE = "cooperate"
    DEFECT = "defect"


C, D = Decision.COOPERATE, Decision.DEFECT

PAYOFFS: dict[tuple[Decision, Decision], tuple[int, int]] = {
    (C, C): (3, 3),
    (D, D): (1, 1),
    (D, C): (5, 0),
    (C, D): (0, 5),
}

_TOKEN = re.compile(r"\[\s*(\d+)\s+(cooperate|defect)\s*\]", re.IGNORECASE)


def pair_payoff(a: Decision, b: Decision) -> tuple[int, int]:
    return PAYOFFS[(Decision(a), Decision(b))]


def _explicit_decisions(text: str, me: PlayerId, num_players: int) -> dict[PlayerId, Decision]:
    found: dict[PlayerId, Decision] = {}
    for pid, word in _TOKEN.findall(text):
        opp = int(pid)
        if opp != me and 0 <= opp < num_players:
            found[opp] = Decision(word.lower())
    return found


def parse_decisions(text: str, me: PlayerId, num_players: int = NUM_PLAYERS) -> dict[PlayerId, Decision]:
    """Per-opponent decisions; anything missing or malformed defaults to cooperate."""
    found = _explicit_decisions(text, me, num_players)
    return {opp: found.get(opp, C) for opp in range(num_players) if opp != me}


def resolve_round(decisions: dict[PlayerId, dict[PlayerId, Decision]]) -> dict[PlayerId, int]:
    """Sum pairwise payoffs over every unordered pair of players."""
    deltas = {pid: 0 for pid in decisions}
    for i, j in itertools.combinations(sorted(decisions), 2):
        pi, pj = pair_payoff(decisions[i][j], decisions[j][i])
        deltas[i] += pi
        deltas[j] += pj
    return deltas


def terminal_reward(scores: dict[PlayerId, int] | list[int]) -> dict[PlayerId, float]:
    if not isinstance(scores, dict):
        scores = dict(enumerate(scores))
    best = max(scores.values())
    return {pid: 1.0 if s == best else -1.0 for pid, s in scores.items()}


@dataclass
class IpdState(EnvState):
    round: int = 1
    speaker: int = 0
    scores: dict[PlayerId, int] = field(default_factory=lambda: {p: 0 for p in range(NUM_PLAYERS)})
    transcript: list[tuple[int, int, str]] = field(default_factory=list)  # (round, player, text)
    decisions: list[dict[PlayerId, dict[PlayerId, Decision]]] = field(default_factory=list)


class IpdEnv(GameEnv):
    name = "ThreePlayerIPD-v0"
    kind = "ipd"
    num_players = NUM_PLAYERS
    expected_length = 10

    def __init__(self, rounds: int = ROUNDS, chat_limit: int = CHAT_LIMIT):
        super().__init__()
        self.rounds = rounds
        self.chat_limit = chat_limit

    @property
    def _s(self) -> IpdState:
        return self._require_state()  # type: ignore[return-value]

    def _setup(self, rng: random.Random) -> IpdState:
        st = IpdState(phase="Chat")
        st.inbox = {
            pid: [(-1, self._intro(pid)), (-1, self._round_banner(1))] for pid in range(NUM_PLAYERS)
        }
        return st

    def _intro(self, pid: PlayerId) -> str:
        return (
            f"You are Player {pid} in a 3-player Iterated Prisoner's Dilemma. "
            f"The match lasts {self.rounds} rounds.\n"
            "Round structure:\n"
            "  - 1 free-chat turns\n"
            "  - 1 decision turn - submit one token per opponent: '[<opp-id> cooperate]' or "
            "'[<opp-id> defect]' (i.e. '[1 defect] [2 cooperate]'; the default is 'cooperate').\n"
            "Pair-wise payoff matrix (applied to each unordered pair):\n"
            "  - Both cooperate  ->  3\n"
            "  - Both defect     ->  1\n"
            "  - You defect, they cooperate -> 5\n"
            "  - You cooperate, they defect -> 0\n"
            "The player(s) with the highest score at the end of all rounds wins.\n"
        )

    @staticmethod
    def _round_banner(r: int) -> str:
        return f"--- Starting Round {r} ---\tYou can converse freely for the next 1 rounds."

    def active_players(self) -> tuple[PlayerId, ...]:
        st = self._s
        if st.phase == "Chat":
            return (st.speaker,)
        return tuple(range(NUM_PLAYERS))

    def _prompt(self, pid: PlayerId) -> str | None:
        if self._s.phase != "Decision":
            return None
        opps = [o for o in range(NUM_PLAYERS) if o != pid]
        return (
            f"Chat is over for round {self._s.round}. Submit one decision token per opponent "
            f"({', '.join(f'Player {o}' for o in opps)}): '[<opp-id> cooperate]' or "
            "'[<opp-id> defect]'."
        )

    def _apply(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        st = self._s
        if st.phase == "Chat":
            (pid,) = actions
            text = actions[pid]
            if len(text) > self.chat_limit:
                text = text[: self.chat_limit] + TRUNCATION_MARKER
            st.transcript.append((st.round, pid, text))
            self._post(text, [p for p in range(NUM_PLAYERS) if p != pid], sender=pid)
            st.speaker += 1
            if st.speaker == NUM_PLAYERS:
                st.phase = "Decision"
            return {pid: ActionOutcome.valid(actions[pid])}

        outcomes = {}
        decisions = {}
        for pid, text in actions.items():
            explicit = _explicit_decisions(text, pid, NUM_PLAYERS)
            decisions[pid] = parse_decisions(text, pid, NUM_PLAYERS)
            if len(explicit) == NUM_PLAYERS - 1:
                outcomes[pid] = ActionOutcome.valid(text)
            else:
                outcomes[pid] = ActionOutcome(
                    OutcomeKind.NONFATAL_CORRECTED, text, ErrorType.INVALID_FORMAT
                )
        self._resolve(decisions)
        return outcomes

    def _resolve(self, decisions: dict[PlayerId, dict[PlayerId, Decision]]) -> None:
        st = self._s
        deltas = resolve_round(decisions)
        st.decisions.append(decisions)
        for pid, d in deltas.items():
            st.scores[pid] += d
        lines = [f"### Round {st.round} results:"]
        for i, j in itertools.combinations(range(NUM_PLAYERS), 2):
            pi, pj = pair_payoff(decisions[i][j], decisions[j][i])
            lines.append(
                f"Player {i} ({decisions[i][j].value}) vs Player {j} ({decisions[j][i].value}) "
                f"-> +{pi} / +{pj}"
            )
        lines.append("Scores: " + ", ".join(f"Player {p}={s}" for p, s in st.scores.items()))
        self._post("\n".join(lines))
        if st.round >= self.rounds:
            self._finish(terminal_reward(st.scores))
            return
        st.round += 1
        st.speaker = 0
        st.phase = "Chat"
        self._post(self._round_banner(st.round))
