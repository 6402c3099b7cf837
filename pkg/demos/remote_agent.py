"""Serve an agent over HTTP and let it play Iterated Prisoner's Dilemma remotely.

The same transport is what a real participant would implement: POST /act
receives the observation and returns {"action": "..."}.
"""

from __future__ import annotations

from gamearena.agents import AgentServer, RemoteAgent, ScriptedAgent
from gamearena.tournament import play_game

with AgentServer(ScriptedAgent(seed=5)) as server:
    print("agent listening on", server.url)
    remote = RemoteAgent(server.url, timeout=10)
    print("healthy:", remote.healthy())
    agents = {"remote": remote, "local": ScriptedAgent(seed=6)}
    game = play_game("ipd", seed=3, seating={0: "remote", 1: "local", 2: "local"}, agents=agents)

print("rewards:", game.rewards)
print("last action of the remote player:", game.trajectories[0][-1].action)
