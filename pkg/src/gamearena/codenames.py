"""Codenames: two teams of (spymaster, operative) race to uncover their words.

Seats are fixed: 0 = Red spymaster, 1 = Red operative, 2 = Blue spymaster,
3 = Blue operative. Red always starts and owns 9 words.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Sequence

from .core import (
    ActionError,
    ActionOutcome,
    ConfigError,
    EnvState,
    ErrorType,
    GameEnv,
    OutcomeKind,
    PlayerId,
    forfeit_reasons,
)

BOARD_SIZE = 25


class Alignment(str, Enum):
    RED = "R"
    BLUE = "B"
    NEUTRAL = "N"
    ASSASSIN = "A"


class Team(str, Enum):
    RED = "Red"
    BLUE = "Blue"

    @property
    def other(self) -> Team:
        return Team.BLUE if self is Team.RED else Team.RED

    @property
    def alignment(self) -> Alignment:
        return Alignment.RED if self is Team.RED else Alignment.BLUE

    @property
    def spymaster(self) -> PlayerId:
        return 0 if self is Team.RED else 2

    @property
    def operative(self) -> PlayerId:
        return self.spymaster + 1

    @property
    def members(self) -> tuple[PlayerId, PlayerId]:
        return (self.spymaster, self.operative)


ALIGNMENT_COUNTS = {Alignment.RED: 9, Alignment.BLUE: 8, Alignment.NEUTRAL: 7, Alignment.ASSASSIN: 1}
ROLES = ("RedSpymaster", "RedOperative", "BlueSpymaster", "BlueOperative")


@dataclass
class Card:
    word: str
    alignment: Alignment
    revealed: bool = False


Board = list[Card]


class Clue(NamedTuple):
    word: str
    count: int


@lru_cache(maxsize=1)
def default_lexicon() -> tuple[str, ...]:
    text = resources.files("gamearena").joinpath("data/codenames_words.txt").read_text("utf-8")
    return tuple(w.strip() for w in text.splitlines() if w.strip())


def generate_board(seed: int, wordlist: Sequence[str] | None = None) -> Board:
    lexicon = list(dict.fromkeys(default_lexicon() if wordlist is None else wordlist))
    if len(lexicon) < BOARD_SIZE:
        raise ConfigError(f"lexicon needs at least {BOARD_SIZE} distinct words, got {len(lexicon)}")
    rng = random.Random(seed)
    words = rng.sample(lexicon, BOARD_SIZE)
    alignments = [a for a, n in ALIGNMENT_COUNTS.items() for _ in range(n)]
    rng.shuffle(alignments)
    return [Card(w, a) for w, a in zip(words, alignments)]


_CLUE = re.compile(r"\[\s*([^\s\[\]]+)\s+(\d+)\s*\]")
_GUESS = re.compile(r"\[\s*([^\[\]]*?)\s*\]")


def parse_and_validate_clue(text: str, board: Board) -> Clue:
    """Parse ``[<word> <count>]``; an on-board word (revealed or not) is an IllegalClue."""
    matches = _CLUE.findall(text)
    if not matches:
        raise ActionError(ErrorType.INVALID_FORMAT, "expected '[<word> <count>]'")
    word, count = matches[-1][0], int(matches[-1][1])
    if count < 1:
        raise ActionError(ErrorType.INVALID_FORMAT, "clue count must be positive")
    if word.lower() in {c.word.lower() for c in board}:
        raise ActionError(ErrorType.ILLEGAL_CLUE, f"'{word}' is a word on the board")
    return Clue(word, count)


def parse_guess(text: str) -> str:
    matches = _GUESS.findall(text)
    if not matches or not matches[-1]:
        raise ActionError(ErrorType.INVALID_FORMAT, "expected '[<word>]' or '[pass]'")
    return matches[-1].lower()


def team_reward(winner: Team | None) -> dict[PlayerId, float]:
    if winner is None:
        return {pid: 0.0 for pid in range(4)}
    return {pid: (1.0 if pid in winner.members else -1.0) for pid in range(4)}


@dataclass
class CodenamesState(EnvState):
    board: Board = field(default_factory=list)
    team: Team = Team.RED
    clue: Clue | None = None
    budget: int = 0
    guesses_this_turn: int = 0
    winner: Team | None = None
    cause: str = ""


class CodenamesEnv(GameEnv):
    name = "Codenames-v0"
    kind = "codenames"
    num_players = 4
    expected_length = 10

    def __init__(
        self,
        wordlist: Sequence[str] | None = None,
        max_turns: int | None = None,
        board: Board | None = None,
    ):
        super().__init__()
        self.wordlist = wordlist
        self.max_turns = max_turns
        self.fixed_board = board

    @property
    def _s(self) -> CodenamesState:
        return self._require_state()  # type: ignore[return-value]

    def _setup(self, rng: random.Random) -> CodenamesState:
        if self.fixed_board is not None:
            board = [Card(c.word, c.alignment, c.revealed) for c in self.fixed_board]
        else:
            board = generate_board(self.seed, self.wordlist)
        st = CodenamesState(phase="Spymaster", board=board)
        st.inbox = {pid: [(-1, self._intro(pid))] for pid in range(4)}
        return st

    def role_of(self, pid: PlayerId) -> str:
        return ROLES[pid]

    @staticmethod
    def _intro(pid: PlayerId) -> str:
        team = Team.RED if pid < 2 else Team.BLUE
        if pid == team.spymaster:
            you = f"You are Player {pid}, the Spymaster for {team.value} team. Give a one-word clue and number."
        else:
            you = f"You are Player {pid}, the Operative for {team.value} team. Guess words based on your Spymaster's clue."
        return (
            "You are playing Codenames, a 2v2 word deduction game. Each team (Red and Blue) "
            "has a Spymaster and an Operative.\n"
            "Rules:\n"
            "1. The Spymaster gives a one-word clue + number (e.g., '[wind 2]') based on the "
            "team's secret words (the clue may not contain any of the words on the board).\n"
            "2. The Operative guesses up to N+1 words (e.g., '[breeze]') based on the clue. "
            "They can also '[pass]'.\n"
            "3. Avoid guessing opponent words, neutral words (N), or the Assassin (A), which "
            "causes instant loss.\n"
            "4. First team to guess all their words wins.\n\n" + you
        )

    def active_players(self) -> tuple[PlayerId, ...]:
        st = self._s
        return (st.team.spymaster if st.phase == "Spymaster" else st.team.operative,)

    def render_board(self, spymaster: bool) -> str:
        lines = ["Codenames Words:"]
        for c in self._s.board:
            if spymaster or c.revealed:
                line = f"{c.word:<8} {c.alignment.value}"
                lines.append(line + " revealed" if c.revealed else line)
            else:
                lines.append(c.word)
        return "\n".join(lines)

    def _prompt(self, pid: PlayerId) -> str:
        st = self._s
        if st.phase == "Spymaster":
            return self.render_board(spymaster=True)
        return (
            self.render_board(spymaster=False)
            + f"\nClue: [{st.clue.word} {st.clue.count}]. Guesses remaining: {st.budget}."
        )

    # -- transitions ---------------------------------------------------------------

    def _apply(self, actions: dict[PlayerId, str]) -> dict[PlayerId, ActionOutcome]:
        st = self._s
        ((pid, text),) = actions.items()
        if st.phase == "Spymaster":
            outcome = self._clue(pid, text)
        else:
            outcome = self._guess(pid, text)
        if not st.terminal and self.max_turns is not None and st.turn >= self.max_turns:
            st.cause = "turn_limit"
            self._post("Turn limit reached; the game is a draw.")
            self._finish(team_reward(None), {p: "turn_limit" for p in range(4)})
        return {pid: outcome}

    def _clue(self, pid: PlayerId, text: str) -> ActionOutcome:
        st = self._s
        who = f"Spymaster of {st.team.value} team, Player {pid}"
        try:
            clue = parse_and_validate_clue(text, st.board)
        except ActionError as err:
            if err.error_type is ErrorType.ILLEGAL_CLUE:
                self._post(f"{who}, gave an illegal clue ({err}). {st.team.value} team forfeits.")
                self._win(st.team.other, "illegal_clue", forfeit_reasons(4, {pid}))
                return ActionOutcome(OutcomeKind.FATAL_FORFEIT, text, err.error_type)
            self._post(f"{who}, did not provide a valid clue. The teams turn will be skipped.")
            self._end_turn()
            return ActionOutcome(OutcomeKind.NONFATAL_SKIPPED, text, err.error_type)
        st.clue = clue
        st.budget = clue.count + 1
        st.guesses_this_turn = 0
        st.phase = "Operative"
        self._post(f"{who}, submitted [{clue.word} {clue.count}].")
        return ActionOutcome.valid(text)

    def _guess(self, pid: PlayerId, text: str) -> ActionOutcome:
        st = self._s
        who = f"Operator of {st.team.value} team, Player {pid}"
        skip = f"{who}, did not provide a valid guess. The teams turn will be skipped."
        try:
            word = parse_guess(text)
        except ActionError as err:
            self._post(skip)
            self._end_turn()
            return ActionOutcome(OutcomeKind.NONFATAL_SKIPPED, text, err.error_type)
        if word == "pass":
            self._post(f"{who}, passed.")
            self._end_turn()
            return ActionOutcome.valid(text)
        card = next((c for c in st.board if c.word.lower() == word), None)
        if card is None or card.revealed:
            self._post(skip)
            self._end_turn()
            return ActionOutcome(OutcomeKind.NONFATAL_SKIPPED, text, ErrorType.INVALID_MOVE)

        card.revealed = True
        st.budget -= 1
        st.guesses_this_turn += 1
        if card.alignment is Alignment.ASSASSIN:
            self._post(f"{who}, guessed the Assassin [{card.word}]. {st.team.value} team loses.")
            self._win(st.team.other, "assassin")
        elif card.alignment is st.team.alignment:
            self._post(f"{who}, correctly guessed [{card.word}].")
            if self._cleared(st.team):
                self._win(st.team, "all_words")
            elif st.budget == 0:
                self._end_turn()
        else:
            self._post(f"{who}, incorrectly guessed [{card.word}] ({card.alignment.value}).")
            if card.alignment is st.team.other.alignment and self._cleared(st.team.other):
                self._win(st.team.other, "all_words")
            else:
                self._end_turn()
        return ActionOutcome.valid(text)

    def _cleared(self, team: Team) -> bool:
        return all(c.revealed for c in self._s.board if c.alignment is team.alignment)

    def _end_turn(self) -> None:
        st = self._s
        st.team = st.team.other
        st.phase = "Spymaster"
        st.clue = None
        st.budget = 0
        st.guesses_this_turn = 0

    def _win(self, team: Team, cause: str, reasons: dict[PlayerId, str] | None = None) -> None:
        st = self._s
        st.winner = team
        st.cause = cause
        self._finish(team_reward(team), reasons)


def terminal_reward(state: CodenamesState) -> dict[PlayerId, float]:
    if not state.terminal:
        raise ValueError("terminal_reward needs a terminal state")
    return team_reward(state.winner)
