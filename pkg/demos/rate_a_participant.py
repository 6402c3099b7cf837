"""Rate an error-prone participant against the Generalization reference pool.

The participant is a scripted agent whose actions are replaced by malformed
text 20% of the time; references are played by scripted baselines.
"""

from __future__ import annotations

from gamearena.agents import FaultyAgent, ScriptedAgent
from gamearena.tournament import RefPool, Track, build_manifest, run_manifest

pool = RefPool.load(Track.GENERALIZATION)
manifest = build_manifest(pool, participant="me")
print("matches per environment:", manifest.counts())

agents = {ref: ScriptedAgent(seed=i + 1) for i, ref in enumerate(pool.ids)}
agents["me"] = FaultyAgent(ScriptedAgent(seed=0), p=0.2, seed=42)
run = run_manifest(manifest, agents, pool, jobs=4)

print(run.report.to_text())
for section in run.report.envs:
    a = section.attribution
    print(f"{section.env:<10} caused {a.caused:>2}  self-forfeits {a.self_forf:>2}  witnessed {a.witnessed:>2}")
