"""How invalid actions shape each environment: attribution, validity flag and failure modes.

Every seat is held by an agent that emits malformed text 30% of the time.
Blotto punishes this with forfeits, IPD silently substitutes defaults.
"""

from __future__ import annotations

from gamearena.agents import baseline
from gamearena.games import ENV_ORDER, ENVIRONMENTS
from gamearena.metrics import attribute_errors, env_diagnostic, failure_mode_histogram
from gamearena.tournament import play_game

games = []
for env in ENV_ORDER:
    n = ENVIRONMENTS[env].num_players
    for seed in range(100):
        seating = {p: f"faulty-{p}" for p in range(n)}
        agents = {m: baseline(env, "Faulty(0.3)", seed=seed * 10 + p) for p, m in seating.items()}
        games.append(play_game(env, seed, seating, agents))

for env in ENV_ORDER:
    env_games = [g for g in games if g.env_name == ENVIRONMENTS[env].name]
    d = env_diagnostic(env_games, env)
    row = attribute_errors(env_games, "faulty-0")
    depth = "n/a" if d.median_fraction is None else f"{d.median_fraction:.2f}"
    flag = "robustness-dominated" if d.robustness_dominated else "ok"
    print(f"{env:<10} error rate {d.error_rate:.2f}  depth fraction {depth:<5} {flag:<21} "
          f"seat 0: caused {row.caused}, self-forfeits {row.self_forf}")

print()
for env, comp in failure_mode_histogram(games).items():
    print(env, {k: round(v, 1) for k, v in comp.items()})
