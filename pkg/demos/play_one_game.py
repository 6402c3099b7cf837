"""Play one Colonel Blotto game between two scripted agents and print what each side saw."""

from __future__ import annotations

from gamearena.agents import ScriptedAgent
from gamearena.tournament import play_game

agents = {"alice": ScriptedAgent(seed=1), "bob": ScriptedAgent(seed=2)}
game = play_game("blotto", seed=7, seating={0: "alice", 1: "bob"}, agents=agents)

print("First observation for Player 0:\n")
print(game.trajectories[0][0].observation)
print("\nActions:")
for i, (t0, t1) in enumerate(zip(game.trajectories[0], game.trajectories[1]), 1):
    print(f"  round {i}: alice {t0.action:<16} bob {t1.action}")
print("\nRewards:", game.rewards, "reasons:", game.reasons)
