from __future__ import annotations

import gzip
import json

import pytest

from gamearena.dataio import (
    FIELDS,
    TrajectoryRecord,
    games_from_records,
    read_and_validate,
    read_records,
    records_from_game,
    write_records,
)

from conftest import run_baselines
from suite import build_suite


def test_record_fields_and_ids():
    game = run_baselines("ipd", 3)
    recs = records_from_game(game)
    assert [r.player_game_id for r in recs] == [300, 301, 302]
    d = json.loads(recs[0].to_json())
    assert tuple(d) == FIELDS
    assert d["opponent_names"] == {"1": "Scripted#1", "2": "Scripted#2"}
    assert d["num_turns"] == len(d["observations"])
    assert set(d["observations"][0]) == {"observation", "action", "outcome", "error_type", "phase"}


def test_hand_computed_aggregates(tmp_jsonl):
    games = build_suite()[:5]
    assert write_records(games, tmp_jsonl) == 12
    report = read_and_validate(tmp_jsonl)
    assert report.ok
    s = report.summary
    assert (s.games, s.trajectories) == (5, 12)
    # blotto: 5+5, 3+4, 3+4 turns; ipd: 3 x 10 turns in each game
    assert s.mean_turns == pytest.approx((10 + 7 + 7 + 30 + 30) / 12)


def test_players_without_turns_have_no_record(tmp_jsonl):
    game = build_suite()[7]
    recs = records_from_game(game)
    assert [r.player_id for r in recs] == [0]
    assert recs[0].roles[1] == "RedOperative"


def test_mafia_players_killed_before_acting_have_no_record():
    sizes = []
    for seed in range(40):
        game = run_baselines("mafia", seed)
        recs = records_from_game(game)
        assert len(recs) == sum(1 for t in game.trajectories.values() if t) <= 6
        sizes.append(len(recs))
    assert min(sizes) <= 5


def test_roundtrip_rebuilds_games(tmp_jsonl):
    envs = ("blotto", "ipd", "codenames", "mafia")
    games = [run_baselines(env, 10 * i + seed) for i, env in enumerate(envs) for seed in range(3)]
    write_records(games, tmp_jsonl)
    back = games_from_records(read_records(tmp_jsonl))
    key = lambda g: g.game_id  # noqa: E731
    for original, rebuilt in zip(sorted(games, key=key), back):
        assert rebuilt.rewards == original.rewards
        assert rebuilt.seating == original.seating
        assert rebuilt.roles == original.roles
        assert rebuilt.reasons == original.reasons
        assert {p: t for p, t in original.trajectories.items() if t} == rebuilt.trajectories


def test_gzip(tmp_path):
    path = tmp_path / "t.jsonl.gz"
    write_records([run_baselines("blotto", 1)], path)
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        assert len(fh.readlines()) == 2
    assert read_and_validate(path).ok


def test_corruption_is_reported_per_line(tmp_jsonl):
    write_records(build_suite()[:3], tmp_jsonl)
    lines = tmp_jsonl.read_text(encoding="utf-8").splitlines()
    bad = json.loads(lines[1])
    bad["num_turns"] += 1
    missing = json.loads(lines[3])
    del missing["rewards"]
    wrong_reason = json.loads(lines[4])
    wrong_reason["reason"] = "gave_up"
    lines[1] = json.dumps(bad)
    lines[2] = lines[2][:40]
    lines[3] = json.dumps(missing)
    lines[4] = json.dumps(wrong_reason)
    lines.append(lines[0])
    tmp_jsonl.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = read_and_validate(tmp_jsonl)
    flagged = {v.line for v in report.violations}
    assert flagged == {2, 3, 4, 5, 7}
    assert any("invalid JSON" in v.message for v in report.violations if v.line == 3)
    assert any("repeats line 1" in v.message for v in report.violations if v.line == 7)
    assert len(report.records) == 2
    assert str(report.violations[0]).startswith("line 2:")


def test_validator_catches_semantic_problems(tmp_jsonl):
    rec = records_from_game(run_baselines("ipd", 2))[0]
    d = json.loads(rec.to_json())
    cases = [
        {**d, "player_game_id": 1, "observations": [], "num_turns": 0},
        {**d, "player_game_id": 2, "rewards": {"0": 1}},
        {**d, "player_game_id": 3, "status": "running"},
        {**d, "player_game_id": 4, "observations": [{"observation": 1, "action": "x"}], "num_turns": 1},
        {**d, "player_game_id": 5, "player_id": True},
        [1, 2],
    ]
    tmp_jsonl.write_text("".join(json.dumps(c) + "\n" for c in cases), encoding="utf-8")
    report = read_and_validate(tmp_jsonl)
    assert {v.line for v in report.violations} == set(range(1, 7))
    assert not report.records


def test_record_role_property():
    rec = TrajectoryRecord.from_dict(json.loads(records_from_game(run_baselines("codenames", 1))[0].to_json()))
    assert rec.role == "RedSpymaster"
    assert rec.turns[0].observation.startswith("[-1]")
