"""Secret Mafia for six players: night kills, doctor saves, detective checks, day votes.

Night is split into three strictly ordered sub-phases (mafia vote, doctor,
detective) so that private information never races. Day is one statement
per living player in seat order, then a simultaneous vote.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .core import ActionError, ActionOutcome, EnvState, ErrorType, GameEnv, OutcomeKind, PlayerId

NUM_PLAYERS = 6


class Role(str, Enum):
    MAFIA = "Mafia"
    DOCTOR = "Doctor"
    DETECTIVE = "Detective"
    VILLAGER = "Villager"

    @property
    def team(self) -> str:
        return "Mafia" if self is Role.MAFIA else "Village"


ROLE_DECK = (Role.MAFIA, Role.MAFIA, Role.DOCTOR, Role.DETECTIVE, Role.VILLAGER, Role.VILLAGER)

_DESCRIPTIONS = {
    Role.MAFIA: "A Mafia member. Eliminate villagers and gain majority.",
    Role.DOCTOR: "A Villager who can protect one player from elimination each night.",
    Role.DETECTIVE: "A Villager who can investigate one player each night to learn if they are Mafia.",
    Role.VILLAGER: "A regular villager. Find and eliminate the Mafia.",
}
_NIGHT_RULE = {
    Role.MAFIA: "During NIGHT phase: '[Player X]' to vote and eliminate a villager.",
    Role.DOCTOR: "During NIGHT phase: '[Player X]' to protect a player.",
    Role.DETECTIVE: "During NIGHT phase: '[Player X]' to investigate a player.",
    Role.VILLAGER: "During NIGHT phase: you sleep.",
}
_WIN_RULE = {
    "Mafia": "Win by eliminating villagers until Mafia equal or outnumber them.",
    "Village": "Win by eliminating all Mafia members.",
}

MAFIA_VOTE = "Night.MafiaVote"
DOCTOR = "Night.Doctor"
DETECTIVE = "Night.Detective"
DISCUSSION = "Day.Discussion"
DAY_VOTE = "Day.Vote"

_VOTE = re.compile(r"\[\s*(?:player\s*)?(\d+)\s*\]", re.IGNORECASE)


def _target(text: str) -> int:
    matches = _VOTE.findall(text)
    if not matches:
        raise ActionError(ErrorType.INVALID_MOVE, "expected '[Player X]' or '[X]'")
    return int(matches[-1])


def parse_vote(text: str, valid_targets: Iterable[PlayerId]) -> PlayerId:
    target = _target(text)
    if target not in set(valid_targets):
        raise ActionError(ErrorType.INVALID_MOVE, f"Player {target} is not a valid target")
    return target


def plurality(votes: Mapping[PlayerId, PlayerId]) -> list[PlayerId]:
    """Targets with the most votes, ascending."""
    counts = Counter(votes.values())
    if not counts:
        return []
    top = max(counts.values())
    return sorted(t for t, n in counts.items() if n == top)


def resolve_day_vote(votes: Mapping[PlayerId, PlayerId]) -> PlayerId | None:
    """Strict plurality target, or None on a tie (or no votes)."""
    leaders = plurality(votes)
    return leaders[0] if len(leaders) == 1 else None


def check_win(roles: Mapping[PlayerId, Role], alive: Iterable[PlayerId]) -> dict[PlayerId, float] | None:
    alive = set(alive)
    mafia = sum(1 for p in alive if roles[p] is Role.MAFIA)
    village = len(alive) - mafia
    if mafia == 0:
        winner = "Village"
    elif mafia >= village:
        winner = "Mafia"
    else:
        return None
    return {p: (1.0 if r.team == winner else -1.0) for p, r in roles.items()}


@dataclass
class MafiaState(EnvState):
    roles: dict[PlayerId, Role] = field(default_factory=dict)
    alive: list[PlayerId] = field(default_factory=list)
    day: int = 1
    pending_votes: dict[PlayerId, PlayerId] = field(default_factory=dict)
    speakers: list[PlayerId] = field(default_factory=list)
    mafia_target: PlayerId | None = None
    protected: PlayerId | None = None
    investigated: PlayerId | None = None
    eliminated: list[tuple[PlayerId, str]] = field(default_factory=list)  # (player, cause)
    winner: str | None = None


class MafiaEnv(GameEnv):
    name = "SecretMafia-v0"
    kind = "mafia"
    num_players = NUM_PLAYERS
    expected_length = 10

    @property
    def _s(self) -> MafiaState:
        return self._require_state()  # type: ignore[return-value]

    def _setup(self, rng: random.Random) -> MafiaState:
        deck = list(ROLE_DECK)
        rng.shuffle(deck)
        st = MafiaState(phase=MAFIA_VOTE, roles=dict(enumerate(deck)), alive=list(range(NUM_PLAYERS)))
        st.inbox = {pid: [(-1, self._intro(pid, st.roles))] for pid in range(NUM_PLAYERS)}
        return st

    @staticmethod
    def _intro(pid: PlayerId, roles: dict[PlayerId, Role]) -> str:
        role = roles[pid]
        lines = [
            f"Welcome to Secret Mafia! You are Player {pid}.",
            f"Your role: {role.value}",
            f"Team: {role.team}",
            f"Description: {_DESCRIPTIONS[role]}",
            "",
            "Players: " + ", ".join(f"Player {p}" for p in range(NUM_PLAYERS)),
            "",
        ]
        if role is Role.MAFIA:
            mates = [p for p, r in roles.items() if r is Role.MAFIA]
            lines += ["Your teammates are: " + ", ".join(f"Player {p}" for p in mates) + ".", ""]
        lines += [
            "During DAY phase: Speak freely and vote.",
            _NIGHT_RULE[role],
            _WIN_RULE[role.team],
            "",
        ]
        return "\n".join(lines)

    def role_of(self, pid: PlayerId) -> str:
        return self._s.roles[pid].value

    # -- turn logic ----------------------------------------------------------------

    def _alive_with(self, role: Role) -> list[PlayerId]:
        st = self._s
        return [p for p in st.alive if st.roles[p] is role]

    def active_players(self) -> tuple[PlayerId, ...]:
        st = self._s
        if st.phase == MAFIA_VOTE:
            return tuple(p for p in self._alive_with(Role.MAFIA) if p not in st.pending_votes)
        if st.phase == DOCTOR:
            return tuple(self._alive_with(Role.DOCTOR))
        if st.phase == DETECTIVE:
            return tuple(self._alive_with(Role.DETECTIVE))
        if st.phase == DISCUSSION:
            return (st.speakers[0],)
        if st.phase == DAY_VOTE:
            return tuple(p for p in st.alive if p not in st.pending_votes)
        return ()

    def valid_targets(self, pid: PlayerId) -> list[PlayerId]:
        st = self._s
        if st.phase == MAFIA_VOTE:
            return [p for p in st.alive if st.roles[p] is not Role.MAFIA]
        if st.phase == DOCTOR:
            return list(st.alive)
        return [p for p in st.alive if p != pid]

    def _prompt(self, pid: PlayerId) -> str:
        st = self._s
        if st.phase == DISCUSSION:
            return f"Day {st.day} discussion: share one statement with the village."
        head = {
            MAFIA_VOTE: "Night has fallen. Mafia, agree on a victim.",
            DOCTOR: "Night has fallen. Doctor, choose one player to protect.",
            DETECTIVE: "Night has fallen. Detective, choose one player to investigate.",
            DAY_VOTE: f"Day {st.day} voting: vote to eliminate a player with '[Player X]'.",
        }[st.phase]
        return head + "\nValid targets: " + ", ".join(f"[{p}]" for p in self.valid_targets(pid))

    # -- transitions ---------------------------------------------------------------

    def _apply(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        phase = self._s.phase
        if phase in (MAFIA_VOTE, DAY_VOTE):
            return self._votes(actions)
        ((pid, text),) = actions.items()
        if phase == DISCUSSION:
            return {pid: self._speak(pid, text)}
        return {pid: self._special(pid, text)}

    def _votes(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        st = self._s
        night = st.phase == MAFIA_VOTE
        outcomes = {}
        for pid, text in actions.items():
            try:
                st.pending_votes[pid] = parse_vote(text, self.valid_targets(pid))
            except ActionError as err:
                outcomes[pid] = self._strike(pid, text, err, OutcomeKind.FATAL_ELIMINATION)
            else:
                self._clear_strikes(pid)
                outcomes[pid] = ActionOutcome.valid(text)
                if night:
                    mates = self._alive_with(Role.MAFIA)
                    self._post(f"Player {pid} voted for Player {st.pending_votes[pid]}.", mates)

        for pid, out in outcomes.items():
            if out.kind.fatal:
                self._eliminate(pid, "error")
                self._post(f"Player {pid} was eliminated for repeated invalid actions.")
                if st.terminal:
                    return outcomes

        if not self.active_players():
            if night:
                votes = {v: t for v, t in st.pending_votes.items() if v in st.alive}
                leaders = plurality(votes)
                st.mafia_target = leaders[0] if leaders else None
                st.pending_votes = {}
                self._next_night_phase(DOCTOR)
            else:
                self._resolve_day()
        return outcomes

    def _special(self, pid: PlayerId, text: str) -> ActionOutcome:
        st = self._s
        doctor = st.phase == DOCTOR
        try:
            target = _target(text)
            if doctor and 0 <= target < NUM_PLAYERS and target not in st.alive:
                raise ActionError(
                    ErrorType.PROTECTION_OF_ELIMINATED, f"Player {target} is already eliminated"
                )
            target = parse_vote(text, self.valid_targets(pid))
        except ActionError as err:
            outcome = ActionOutcome(OutcomeKind.NONFATAL_CORRECTED, text, err.error_type)
            target = None
        else:
            outcome = ActionOutcome.valid(text)
        if doctor:
            st.protected = target
            self._next_night_phase(DETECTIVE)
        else:
            st.investigated = target
            if target is not None:
                verdict = "Mafia" if st.roles[target] is Role.MAFIA else "Not Mafia"
                self._post(f"Investigation result: Player {target} is {verdict}.", [pid])
            self._next_night_phase(None)
        return outcome

    def _next_night_phase(self, phase: str | None) -> None:
        st = self._s
        order = [DOCTOR, DETECTIVE]
        while phase is not None:
            st.phase = phase
            if self.active_players():
                return
            i = order.index(phase)
            phase = order[i + 1] if i + 1 < len(order) else None
        self.resolve_night()

    def resolve_night(self) -> None:
        st = self._s
        target, protected = st.mafia_target, st.protected
        if target is not None and target != protected and target in st.alive:
            self._eliminate(target, "night")
            msg = f"Player {target} was eliminated during the night."
        else:
            msg = "No one was eliminated during the night."
        st.mafia_target = st.protected = st.investigated = None
        if st.terminal:
            self._post(msg)
            return
        self._post(f"Day {st.day} begins. {msg}")
        st.speakers = list(st.alive)
        st.phase = DISCUSSION

    def _speak(self, pid: PlayerId, text: str) -> ActionOutcome:
        st = self._s
        self._post(text, [p for p in range(NUM_PLAYERS) if p != pid], sender=pid)
        st.speakers.pop(0)
        if not st.speakers:
            st.phase = DAY_VOTE
            st.pending_votes = {}
        return ActionOutcome.valid(text)

    def _resolve_day(self) -> None:
        st = self._s
        votes = {v: t for v, t in st.pending_votes.items() if v in st.alive and t in st.alive}
        st.pending_votes = {}
        out = resolve_day_vote(votes)
        if out is None:
            self._post(f"Day {st.day} vote is tied; no one is eliminated.")
        else:
            self._eliminate(out, "vote")
            self._post(f"Player {out} was eliminated by vote.")
        if st.terminal:
            return
        st.day += 1
        st.phase = MAFIA_VOTE

    def _eliminate(self, pid: PlayerId, cause: str) -> None:
        st = self._s
        st.alive.remove(pid)
        st.eliminated.append((pid, cause))
        st.pending_votes.pop(pid, None)
        if cause == "error":
            st.reasons[pid] = "player_eliminated_error"
        if pid in st.speakers:
            st.speakers.remove(pid)
        rewards = check_win(st.roles, st.alive)
        if rewards is not None:
            mafioso = next(p for p, r in st.roles.items() if r is Role.MAFIA)
            st.winner = "Mafia" if rewards[mafioso] > 0 else "Village"
            self._post(f"Game over: the {st.winner} team wins.")
            self._finish(rewards)
