"""Environment registry and the functional ``reset`` entry point."""

from __future__ import annotations

from typing import Any

from .blotto import BlottoEnv
from .codenames import CodenamesEnv
from .core import EnvState, GameEnv, UsageError
from .ipd import IpdEnv
from .mafia import MafiaEnv

ENVIRONMENTS: dict[str, type[GameEnv]] = {
    "blotto": BlottoEnv,
    "ipd": IpdEnv,
    "codenames": CodenamesEnv,
    "mafia": MafiaEnv,
}
ENV_ORDER = ("blotto", "ipd", "codenames", "mafia")

_ALIASES = {cls.name.lower(): kind for kind, cls in ENVIRONMENTS.items()}
_ALIASES.update({"colonelblotto": "blotto", "secretmafia": "mafia", "threeplayeripd": "ipd"})


def canonical_kind(env: str) -> str:
    key = str(env).strip().lower()
    if key in ENVIRONMENTS:
        return key
    try:
        return _ALIASES[key]
    except KeyError:
        raise UsageError(f"unknown environment {env!r}; choose from {', '.join(ENVIRONMENTS)}") from None


def make_env(env: str, **options: Any) -> GameEnv:
    return ENVIRONMENTS[canonical_kind(env)](**options)


def reset(env_kind: str, seed: int, players: list[str] | None = None, **options: Any) -> tuple[GameEnv, EnvState]:
    """Create an environment, reset it, and return it with its initial state."""
    env = make_env(env_kind, **options)
    return env, env.reset(seed, players)
