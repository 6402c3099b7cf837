"""Hand-built games with injected errors and their hand-computed attribution rows.

Focal model "A"; "B" and "C" fill the other seats. Each game lists only the
turns that matter; anything unlisted is a clean valid turn.
"""

from __future__ import annotations

from gamearena.core import ErrorType, GameLog, OutcomeKind, Turn

V = (OutcomeKind.VALID, None)
RETRY_FMT = (OutcomeKind.RETRY_REQUESTED, ErrorType.INVALID_FORMAT)
FORFEIT_UNITS = (OutcomeKind.FATAL_FORFEIT, ErrorType.ILLEGAL_UNITS)
FORFEIT_CLUE = (OutcomeKind.FATAL_FORFEIT, ErrorType.ILLEGAL_CLUE)
DEFAULTED = (OutcomeKind.NONFATAL_CORRECTED, ErrorType.INVALID_FORMAT)
SKIPPED = (OutcomeKind.NONFATAL_SKIPPED, ErrorType.INVALID_MOVE)
PROTECT_DEAD = (OutcomeKind.NONFATAL_CORRECTED, ErrorType.PROTECTION_OF_ELIMINATED)
RETRY_VOTE = (OutcomeKind.RETRY_REQUESTED, ErrorType.INVALID_MOVE)
ELIMINATED = (OutcomeKind.FATAL_ELIMINATION, ErrorType.INVALID_MOVE)


def _turns(spec):
    return [Turn(f"obs {i}", "act", kind, err) for i, (kind, err) in enumerate(spec)]


def _game(gid, env, seating, rewards, trajectories, reasons=None, roles=None):
    return GameLog(
        game_id=gid,
        env_name=env,
        seating=dict(enumerate(seating)),
        rewards=dict(enumerate(rewards)),
        trajectories={pid: _turns(spec) for pid, spec in trajectories.items()},
        reasons=reasons or {pid: "normal" for pid in range(len(seating))},
        roles=roles or {},
    )


def build_suite() -> list[GameLog]:
    cn_roles = {0: "RedSpymaster", 1: "RedOperative", 2: "BlueSpymaster", 3: "BlueOperative"}
    mafia_roles = {0: "Villager", 1: "Mafia", 2: "Doctor", 3: "Detective", 4: "Mafia", 5: "Villager"}
    return [
        # blotto 1: clean
        _game(1, "blotto", "AB", [1, -1], {0: [V] * 5, 1: [V] * 5}),
        # blotto 2: A retries once (non-fatal, not recorded); B forfeits after a retry
        _game(2, "blotto", "AB", [1, -1], {0: [V, RETRY_FMT, V], 1: [V, V, RETRY_FMT, FORFEIT_UNITS]},
              {0: "opponent_forfeit", 1: "self_forfeit"}),
        # blotto 3: A forfeits in round 3 after two valid rounds
        _game(3, "blotto", "BA", [1, -1], {0: [V] * 3, 1: [V, V, RETRY_FMT, FORFEIT_UNITS]},
              {0: "opponent_forfeit", 1: "self_forfeit"}),
        # ipd 4-6: defaults never count as recorded errors
        _game(4, "ipd", "ABC", [1, 1, -1], {0: [DEFAULTED] + [V] * 9, 1: [V, DEFAULTED] + [V] * 8, 2: [V] * 10}),
        _game(5, "ipd", "BAC", [-1, 1, -1], {0: [V] * 10, 1: [V] * 10, 2: [V] * 10}),
        _game(6, "ipd", "CBA", [-1, -1, 1], {0: [DEFAULTED] * 10, 1: [V] * 10, 2: [V] * 10}),
        # codenames 7: A as spymaster gives an illegal clue
        _game(7, "codenames", "ABCC", [-1, -1, 1, 1], {0: [V, FORFEIT_CLUE], 1: [V, V], 2: [V], 3: [V]},
              {0: "self_forfeit", 1: "self_forfeit", 2: "opponent_forfeit", 3: "opponent_forfeit"}, cn_roles),
        # codenames 8: A's teammate gives an illegal clue (teammates count as opponents)
        _game(8, "codenames", "BACC", [-1, -1, 1, 1], {0: [FORFEIT_CLUE], 1: []},
              {0: "self_forfeit", 1: "self_forfeit", 2: "opponent_forfeit", 3: "opponent_forfeit"}, cn_roles),
        # codenames 9: a skipped malformed guess is not recorded
        _game(9, "codenames", "CCAB", [1, 1, -1, -1], {0: [V, V], 1: [V, SKIPPED, V], 2: [V], 3: [V, V]},
              roles=cn_roles),
        # mafia 10: A protects a dead player (non-fatal), B needs a vote retry
        _game(10, "mafia", "CBACCB", [1, -1, 1, 1, -1, 1],
              {0: [V, V], 1: [V, RETRY_VOTE, V], 2: [PROTECT_DEAD, V], 3: [V], 4: [V], 5: [V]}, roles=mafia_roles),
        # mafia 11: A eliminated after a failed retry
        _game(11, "mafia", "CABCBC", [-1, 1, -1, -1, 1, -1],
              {0: [V], 1: [V, V, RETRY_VOTE, ELIMINATED], 2: [V], 3: [V], 4: [V], 5: [V]},
              {0: "normal", 1: "player_eliminated_error", 2: "normal", 3: "normal", 4: "normal", 5: "normal"},
              mafia_roles),
        # mafia 12: C eliminated on its first action
        _game(12, "mafia", "BBCBAB", [1, -1, 1, 1, -1, 1],
              {0: [V], 1: [V], 2: [RETRY_VOTE, ELIMINATED], 3: [V], 4: [V, V], 5: [V]},
              {0: "normal", 1: "normal", 2: "player_eliminated_error", 3: "normal", 4: "normal", 5: "normal"},
              mafia_roles),
    ]


# env -> (games, clean, caused, witnessed, self_forf, opp_forf) for focal "A"
EXPECTED_A = {
    "blotto": (3, 1, 1, 1, 1, 1),
    "ipd": (3, 3, 0, 0, 0, 0),
    "codenames": (3, 1, 1, 1, 1, 1),
    "mafia": (3, 0, 2, 2, 1, 1),
}
EXPECTED_A_TOTAL = (12, 5, 4, 4, 3, 3)
# the same blotto games from B's seat
EXPECTED_B_BLOTTO = (3, 1, 1, 1, 1, 1)
# first-fatal termination depths per game id
EXPECTED_DEPTHS = {2: 2, 3: 2, 7: 1, 8: 0, 11: 2, 12: 0}
