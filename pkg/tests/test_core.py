from __future__ import annotations

import pytest

from gamearena.blotto import BlottoEnv
from gamearena.core import (
    ActionOutcome,
    ConfigError,
    ErrorType,
    OutcomeKind,
    Turn,
    UsageError,
)
from gamearena.games import canonical_kind, reset
from gamearena.mafia import Role

from conftest import run_baselines


def test_outcome_error_type_iff_not_valid():
    ActionOutcome(OutcomeKind.VALID, "x")
    ActionOutcome(OutcomeKind.RETRY_REQUESTED, "x", ErrorType.INVALID_FORMAT)
    with pytest.raises(ValueError):
        ActionOutcome(OutcomeKind.VALID, "x", ErrorType.INVALID_FORMAT)
    with pytest.raises(ValueError):
        ActionOutcome(OutcomeKind.FATAL_FORFEIT, "x")


def test_fatal_kinds():
    assert {k for k in OutcomeKind if k.fatal} == {OutcomeKind.FATAL_FORFEIT, OutcomeKind.FATAL_ELIMINATION}


def test_turn_dict_roundtrip():
    t = Turn("obs", "act", OutcomeKind.NONFATAL_SKIPPED, ErrorType.INVALID_MOVE, "Operative")
    assert Turn.from_dict(t.to_dict()) == t


def test_reset_mafia_role_counts():
    env, st = reset("mafia", 40000, [f"a{i}" for i in range(6)])
    counts = [sum(r is role for r in st.roles.values()) for role in (Role.MAFIA, Role.DOCTOR, Role.DETECTIVE, Role.VILLAGER)]
    assert counts == [2, 1, 1, 2]
    assert st.turn == 1 and not st.terminal


def test_reset_blotto_starts_round_one():
    env, st = reset("blotto", 123, ["x", "y"])
    assert st.round == 1 and st.rounds_won == [0, 0]
    assert "Round 1/9" in env.observation(0)


def test_reset_is_deterministic():
    for kind in ("blotto", "ipd", "codenames", "mafia"):
        e1, s1 = reset(kind, 77)
        e2, s2 = reset(kind, 77)
        assert s1 == s2
        assert [e1.observation(p) for p in range(e1.num_players)] == [e2.observation(p) for p in range(e2.num_players)]


def test_wrong_player_count_and_negative_seed():
    with pytest.raises(ConfigError):
        reset("blotto", 0, ["only-one"])
    with pytest.raises(ConfigError):
        reset("ipd", -1)


def test_unknown_env():
    with pytest.raises(UsageError):
        canonical_kind("chess")
    assert canonical_kind("ColonelBlotto-v0") == "blotto"


def test_step_requires_active_keys_and_nonterminal():
    env = BlottoEnv()
    with pytest.raises(UsageError):
        env.observation(0)
    env.reset(0)
    with pytest.raises(UsageError):
        env.step({0: "[A7 B7 C6]"})
    for _ in range(9):
        res = env.step({0: "[A7 B7 C6]", 1: "[A6 B7 C7]"})
    assert res.done
    with pytest.raises(UsageError):
        env.step({0: "[A7 B7 C6]", 1: "[A6 B7 C7]"})


def test_rewards_only_at_terminal():
    env = BlottoEnv()
    env.reset(1)
    for r in range(9):
        res = env.step({0: "[A7 B7 C6]", 1: "[A6 B8 C6]"})
        assert res.done == (r == 8)
    assert sum(res.rewards.values()) == 0


def test_turn_counter_and_terminal_monotone():
    env = BlottoEnv()
    st = env.reset(2)
    turns = [st.turn]
    while not st.terminal:
        env.step({p: "[A7 B7 C6]" for p in env.active_players()})
        turns.append(st.turn)
    assert turns == sorted(set(turns))


@pytest.mark.parametrize("env", ["blotto", "ipd", "codenames", "mafia"])
def test_trajectories_only_for_players_who_acted(env):
    for seed in range(20):
        g = run_baselines(env, seed)
        assert all(len(t) >= 1 for t in g.trajectories.values())
        assert set(g.rewards) == set(range(len(g.seating)))


def test_raw_text_preserved_for_errors():
    env = BlottoEnv()
    env.reset(0)
    weird = "  I'd rather noté \t[A99 B0 C0]  "
    env.step({0: weird, 1: "[A7 B7 C6]"})
    turn = env.trajectories[0][0]
    assert turn.action == weird
    assert turn.outcome is OutcomeKind.RETRY_REQUESTED
