from __future__ import annotations

import csv
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamearena.core import ConfigError, ErrorType, UsageError
from gamearena.metrics import (
    ATTRIBUTION_COLUMNS,
    ErrorEvent,
    ErrorLedger,
    FailureCategory,
    RoleWinTable,
    attribute_errors,
    behavioral_similarity,
    build_ledger,
    env_diagnostic,
    failure_category,
    failure_mode_histogram,
    load_vectors,
    role_advantage,
    role_table,
    scatter_points,
    termination_depths,
    validity_diagnostic,
    wilson_interval,
    write_attribution_table,
)

from gamearena.rating import Rating, rate_groups
from suite import EXPECTED_A, EXPECTED_A_TOTAL, EXPECTED_B_BLOTTO, EXPECTED_DEPTHS, build_suite


def _row(r):
    return (r.games, r.clean, r.caused, r.witnessed, r.self_forf, r.opp_forf)


def test_suite_attribution_per_env():
    games = build_suite()
    for env, expected in EXPECTED_A.items():
        assert _row(attribute_errors([g for g in games if g.env_name == env], "A")) == expected, env
    assert _row(attribute_errors(games, "A")) == EXPECTED_A_TOTAL
    blotto = [g for g in games if g.env_name == "blotto"]
    assert _row(attribute_errors(blotto, "B")) == EXPECTED_B_BLOTTO


def test_caused_equals_self_forfeit_in_forfeit_only_envs():
    games = build_suite()
    for env in ("blotto", "codenames"):
        for model in "ABC":
            r = attribute_errors([g for g in games if g.env_name == env and model in g.seating.values()], model)
            assert r.caused == r.self_forf


def test_termination_depths():
    for g in build_suite():
        led = build_ledger(g)
        first = led.first_fatal
        assert (first.depth if first else None) == EXPECTED_DEPTHS.get(g.game_id)


def test_games_without_focal_are_skipped(caplog):
    games = build_suite()
    row = attribute_errors(games, "Z")
    assert row.games == 0
    assert "no seat" in caplog.text


def test_real_blotto_forfeit_attribution():
    from gamearena.agents import baseline
    from gamearena.tournament import play_game

    agents = {"bad": baseline("blotto", "Faulty(1.0)"), "good": baseline("blotto", "Scripted", seed=1)}
    game = play_game("blotto", 4, {0: "bad", 1: "good"}, agents)
    assert game.reasons == {0: "self_forfeit", 1: "opponent_forfeit"}
    row = attribute_errors([game], "bad")
    assert (row.caused, row.self_forf, row.witnessed) == (1, 1, 0)


@pytest.mark.parametrize(
    "rate, depths, length, flagged",
    [
        (0.503, [3.0], 10, True),
        (0.0, [], 10, False),
        (0.35, [8.0], 10, False),
        (0.31, [4.9], 10, True),
        (0.30, [1.0], 10, False),
        (0.9, [5.0], 10, False),
    ],
)
def test_validity_thresholds(rate, depths, length, flagged):
    d = validity_diagnostic(rate, depths, length)
    assert d.robustness_dominated is flagged
    if not depths:
        assert d.median_depth is None and d.median_fraction is None


def test_validity_errors():
    with pytest.raises(ConfigError):
        validity_diagnostic(0.5, [1], 0)
    with pytest.raises(UsageError):
        validity_diagnostic(1.5, [1], 10)
    with pytest.raises(UsageError):
        env_diagnostic([], "ipd")


def test_env_diagnostic_on_suite():
    games = build_suite()
    d = env_diagnostic(games, "blotto")
    assert d.error_rate == pytest.approx(2 / 3)
    assert d.median_depth == 2 and d.median_fraction == pytest.approx(2 / 9)
    assert d.robustness_dominated
    assert env_diagnostic(games, "ipd").median_depth is None


def test_wilson_known_values():
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(0, 10)[1] == pytest.approx(0.2775, abs=1e-4)
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    assert wilson_interval(10, 10)[1] == 1.0
    with pytest.raises(UsageError):
        wilson_interval(0, 0)
    with pytest.raises(UsageError):
        wilson_interval(5, 4)


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_contains_point_estimate(case):
    wins, n = case
    lo, hi = wilson_interval(wins, n)
    assert 0.0 <= lo <= wins / n <= hi <= 1.0
    z = 1.959963984540054
    assert hi - lo <= 2 * z * math.sqrt(0.25 / n) + 1e-12


def test_role_advantage():
    table = RoleWinTable()
    for won in (1, 1, 1, 0):
        table.add("A", "Mafia", bool(won))
    for won in (1, 0, 0, 0):
        table.add("A", "Villager", bool(won))
    adv = role_advantage(table, "A")
    assert adv == {"Mafia": pytest.approx(0.25), "Villager": pytest.approx(-0.25)}
    with pytest.raises(UsageError):
        role_advantage(table, "B")


def test_role_table_from_suite():
    table = role_table(build_suite())
    assert table.cells[("A", "Player 0")] == [3, 3]
    assert table.cells[("A", "Player 1")] == [1, 2]
    assert table.cells[("A", "RedSpymaster")] == [0, 1]


def _vectors(dim, n, seed):
    rng = random.Random(seed)
    return [[rng.gauss(0, 1) for _ in range(dim)] for _ in range(n)]


@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(2, 8))
def test_similarity_matrix_properties(seed, models, dim):
    responses = {f"m{i}": _vectors(dim, 3, seed * 31 + i) for i in range(models)}
    sim = behavioral_similarity(responses)
    for i, a in enumerate(sim.models):
        assert sim.get(a, a) == 1.0
        for b in sim.models[i + 1:]:
            assert sim.get(a, b) == sim.get(b, a)
            assert -1.0 <= sim.get(a, b) <= 1.0


def test_similarity_edge_cases(tmp_path):
    sim = behavioral_similarity({"x": [[1.0, 0.0]], "y": [[2.0, 0.0]], "z": [[1.0, 0.0], [-1.0, 0.0]]})
    assert sim.get("x", "y") == pytest.approx(1.0)
    assert sim.get("x", "z") is None and sim.get("z", "z") is None
    with pytest.raises(UsageError):
        behavioral_similarity({"x": [[1.0, 0.0]], "y": [[1.0]]})
    path = tmp_path / "v.jsonl"
    path.write_text('{"model": "x", "vector": [1, 0]}\n{"model": "y", "vector": [0, 1]}\n', encoding="utf-8")
    assert behavioral_similarity(load_vectors(path)).get("x", "y") == pytest.approx(0.0)


def test_failure_histogram():
    led = ErrorLedger(1, "blotto", {0: "A", 1: "B"})
    for et in [ErrorType.INVALID_FORMAT] * 2 + [ErrorType.INVALID_MOVE] + [ErrorType.ILLEGAL_UNITS] * 2:
        led.events.append(ErrorEvent(0, et, False, 0))
    hist = failure_mode_histogram([led])
    assert hist["blotto"]["FormatStructure"] == pytest.approx(60.0)
    assert hist["blotto"]["RuleViolation"] == pytest.approx(40.0)
    assert failure_category("Bogus") is FailureCategory.OTHER
    assert set(failure_mode_histogram(build_suite())) == {"blotto", "ipd", "codenames", "mafia"}


def test_attribution_csv(tmp_path):
    games = build_suite()
    path = tmp_path / "a.csv"
    write_attribution_table({"blotto": [attribute_errors(games[:3], "A"), attribute_errors(games[:3], "B")]}, path)
    rows = list(csv.reader(path.open(encoding="utf-8")))
    assert tuple(rows[0]) == ATTRIBUTION_COLUMNS
    assert rows[1] == ["blotto", "1", "A", "3", "1", "1", "1", "1", "1"]
    assert rows[2][:3] == ["blotto", "2", "B"]


def test_scatter_points():
    pts = {(p.model, p.env): p for p in scatter_points(build_suite())}
    a = pts[("A", "blotto")]
    assert a.cumulative_reward == 1.0
    # A beats B twice then loses to B; both chains start from the prior
    r, opp = Rating(), Rating()
    for ranks in ([1, 2], [1, 2], [2, 1]):
        (r,), (opp,) = rate_groups([[r], [opp]], ranks)
    assert (a.mu, a.sigma) == pytest.approx((r.mu, r.sigma), abs=1e-12)
    assert pts[("B", "blotto")].cumulative_reward == -1.0
    assert termination_depths([build_ledger(g) for g in build_suite()[:3]]) == [2, 2]
