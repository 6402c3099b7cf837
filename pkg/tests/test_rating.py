from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamearena.core import UsageError
from gamearena.rating import (
    MatchResult,
    Rating,
    RatingParams,
    rate,
    rate_groups,
    result_from_game,
)

from oracle import oracle_rate


def test_fresh_one_on_one_win():
    (w,), (l,) = rate_groups([[Rating()], [Rating()]], [1, 2])
    assert w.mu == pytest.approx(29.3958, abs=1e-4)
    assert l.mu == pytest.approx(20.6042, abs=1e-4)
    assert w.sigma == pytest.approx(7.1715, abs=1e-4) and l.sigma == w.sigma
    assert w.mu - 25 == pytest.approx(25 - l.mu, abs=1e-12)


def test_fresh_draw_keeps_mean():
    (a,), (b,) = rate_groups([[Rating()], [Rating()]], [1, 1])
    assert a.mu == pytest.approx(25.0, abs=1e-12) and b.mu == pytest.approx(25.0, abs=1e-12)
    assert a.sigma < 25 / 3 and b.sigma < 25 / 3


def test_frozen_unchanged():
    ref = Rating(30.0, 1.0, frozen=True)
    out = rate({"ref": ref, "me": Rating()}, MatchResult([["ref"], ["me"]], [2, 1]))
    assert out["ref"] is ref
    assert out["me"].mu > 25


def test_usage_errors():
    with pytest.raises(UsageError):
        MatchResult([["a"], ["b"]], [1])
    with pytest.raises(UsageError):
        rate({"a": Rating()}, MatchResult([["a"], ["b"]], [1, 2]))
    with pytest.raises(UsageError):
        result_from_game("chess", {0: 1, 1: -1})


def test_result_from_game():
    assert result_from_game("blotto", {0: 0.0, 1: 0.0}).ranks == [1, 1]
    ipd = result_from_game("ipd", {0: 1.0, 1: 1.0, 2: -1.0})
    assert ipd.teams == [[0], [1], [2]] and ipd.ranks == [1, 1, 2]
    cn = result_from_game("codenames", {0: -1.0, 1: -1.0, 2: 1.0, 3: 1.0})
    assert cn.teams == [[0, 1], [2, 3]] and cn.ranks == [2, 1]
    mf = result_from_game("mafia", {0: 1.0, 1: -1.0, 2: -1.0, 3: 1.0, 4: -1.0, 5: -1.0})
    assert mf.teams == [[0, 3], [1, 2, 4, 5]] and mf.ranks == [1, 2]


def _random_case(rng: random.Random):
    shape = rng.choice([(1, 1), (1, 1, 1), (2, 2), (2, 4)])
    groups = [[Rating(rng.uniform(5, 45), rng.uniform(0.5, 9)) for _ in range(n)] for n in shape]
    ranks = [rng.randint(1, len(shape)) for _ in shape]
    return groups, ranks


def test_matches_oracle_on_random_results():
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(200):
        groups, ranks = _random_case(rng)
        ours = rate_groups(groups, ranks)
        ref = oracle_rate(groups, ranks)
        for team, ref_team in zip(ours, ref):
            for r, (mu, sigma) in zip(team, ref_team):
                worst = max(worst, abs(r.mu - mu), abs(r.sigma - sigma))
    assert worst <= 1e-6


@given(st.floats(1, 49), st.floats(0.5, 9), st.booleans())
def test_sigma_never_grows_on_decisive_result_without_dynamics(mu, sigma, won):
    params = RatingParams(tau=0.0)
    me = Rating(mu, sigma)
    ranks = [1, 2] if won else [2, 1]
    (new,), _ = rate_groups([[me], [Rating()]], ranks, params)
    assert new.sigma <= sigma + 1e-12


@given(st.floats(1, 49), st.floats(0.5, 9), st.integers(1, 2), st.integers(1, 2))
def test_frozen_entries_bitwise_equal(mu, sigma, r0, r1):
    frozen = Rating(mu, sigma, frozen=True)
    out = rate_groups([[frozen, Rating()], [Rating(), Rating()]], [r0, r1])
    assert out[0][0] is frozen
