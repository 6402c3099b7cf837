from __future__ import annotations

from pathlib import Path

import pytest

from gamearena.agents import baseline
from gamearena.core import GameLog
from gamearena.games import ENVIRONMENTS
from gamearena.tournament import play_game

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def run_baselines(env: str, seed: int, profile: str = "Scripted", agent_seed: int = 0) -> GameLog:
    """Play one game with every seat held by its own baseline agent."""
    n = ENVIRONMENTS[env].num_players
    agents = {f"{profile}#{i}": baseline(env, profile, seed=agent_seed + i) for i in range(n)}
    return play_game(env, seed, {i: f"{profile}#{i}" for i in range(n)}, agents)


@pytest.fixture
def tmp_jsonl(tmp_path: Path) -> Path:
    return tmp_path / "trajectories.jsonl"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
