"""Command-line entry points: ``tournament``, ``play``, ``metrics``, ``validate``.

Exit codes: 0 success, 1 validation or configuration error, 2 agent transport failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Any, Mapping, Sequence

from .agents import DEFAULT_TIMEOUT, Agent, AgentUnavailable, RemoteAgent, baseline
from .core import ConfigError, GameEnv, PlayerId, StepResult, UsageError
from .dataio import games_from_records, read_and_validate, write_records
from .games import ENVIRONMENTS, ENV_ORDER, canonical_kind
from .metrics import (
    attribute_errors,
    env_diagnostic,
    failure_mode_histogram,
    role_advantage,
    role_table,
    scatter_points,
    write_attribution_table,
    write_scatter_csv,
)
from .tournament import RefPool, TournamentManifest, Track, build_manifest, play_game, run_manifest

EXIT_OK, EXIT_INVALID, EXIT_TRANSPORT = 0, 1, 2

log = logging.getLogger("gamearena")

_TOURNAMENT_DEFAULTS: dict[str, Any] = {
    "track": "Generalization",
    "manifest": None,
    "participant": "participant",
    "participant_url": None,
    "participant_profile": "Scripted",
    "reference_profile": "Scripted",
    "references": {},
    "pool": None,
    "out": None,
    "jobs": 1,
    "seed_offset_override": 0,
    "replicate_multiplier": 1,
    "timeout": DEFAULT_TIMEOUT,
    "dry_run": False,
}


def _agent_from_spec(spec: str, env: str, seed: int, timeout: float = DEFAULT_TIMEOUT) -> Agent:
    if spec.startswith(("http://", "https://")):
        return RemoteAgent(spec, timeout=timeout)
    try:
        return baseline(env, spec, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _tournament_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(_TOURNAMENT_DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    if cfg["out"] is None and not cfg["dry_run"]:
        raise ConfigError("--out is required")
    if int(cfg["jobs"]) < 1:
        raise ConfigError("--jobs must be at least 1")
    return cfg


def cmd_tournament(args: argparse.Namespace) -> int:
    cfg = _tournament_config(args)
    if cfg["manifest"]:
        manifest = TournamentManifest.read(cfg["manifest"])
        track = manifest.track
    else:
        track = Track(cfg["track"])
        manifest = None
    pool = RefPool.load(track, cfg["pool"])
    if manifest is None:
        manifest = build_manifest(
            pool, cfg["participant"], int(cfg["replicate_multiplier"]), int(cfg["seed_offset_override"])
        )
    if cfg["dry_run"]:
        sys.stdout.write(manifest.dumps())
        return EXIT_OK

    env = track.envs[0]
    timeout = float(cfg["timeout"])
    agents: dict[str, Agent] = {}
    for i, ref in enumerate(pool.ids):
        spec = cfg["references"].get(ref, cfg["reference_profile"])
        agents[ref] = _agent_from_spec(spec, env, seed=i + 1, timeout=timeout)
    participant_spec = cfg["participant_url"] or cfg["participant_profile"]
    agents[manifest.participant] = _agent_from_spec(participant_spec, env, seed=0, timeout=timeout)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest.write(out / "manifest.jsonl")
    run = run_manifest(manifest, agents, pool, jobs=int(cfg["jobs"]), trajectory_path=out / "trajectories.jsonl")
    report = run.report
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_attribution_table({s.env: [s.attribution] for s in report.envs}, out / "attribution.csv")
    sys.stdout.write(report.to_text())
    return EXIT_OK


def _print_step(env: GameEnv, actions: Mapping[PlayerId, str], result: StepResult) -> None:
    for pid, text in actions.items():
        outcome = result.outcomes[pid]
        note = "" if outcome.error_type is None else f"   <{outcome.kind.value}: {outcome.error_type.value}>"
        print(f"  Player {pid}> {text}{note}")


def cmd_play(args: argparse.Namespace) -> int:
    kind = canonical_kind(args.env)
    n = ENVIRONMENTS[kind].num_players
    specs = args.agents.split(",") if args.agents else ["Scripted"]
    if len(specs) == 1:
        specs = specs * n
    if len(specs) != n:
        raise ConfigError(f"{kind} needs {n} agents, got {len(specs)}")
    seating = {pid: f"{spec}#{pid}" for pid, spec in enumerate(specs)}
    agents = {seating[pid]: _agent_from_spec(spec, kind, seed=pid, timeout=args.timeout) for pid, spec in enumerate(specs)}

    last_turn = [0]

    def observer(env: GameEnv, actions: Mapping[PlayerId, str], result: StepResult) -> None:
        last_turn[0] += 1
        print(f"--- step {last_turn[0]} ---")
        _print_step(env, actions, result)

    game = play_game(kind, args.seed, seating, agents, observer=observer)
    print("=== final ===")
    for pid in sorted(game.rewards):
        role = f" ({game.roles[pid]})" if game.roles.get(pid) else ""
        print(f"Player {pid}{role}: reward {game.rewards[pid]:+g}, {game.reasons[pid]}")
    if args.out:
        write_records([game], args.out)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    records = []
    for path in args.inputs:
        report = read_and_validate(path)
        for v in report.violations:
            print(f"{path}: {v}", file=sys.stderr)
        records += report.records
    if not records:
        raise ConfigError("no trajectory records in the input")
    games = games_from_records(records)
    by_env: dict[str, list] = defaultdict(list)
    for g in games:
        by_env[canonical_kind(g.env_name)].append(g)

    lines = []
    table: dict[str, list] = {}
    for env in ENV_ORDER:
        if env not in by_env:
            continue
        env_games = by_env[env]
        models = sorted({m for g in env_games for m in g.seating.values()})
        focal = args.focal or models
        rows = [attribute_errors([g for g in env_games if m in g.seating.values()], m) for m in focal]
        table[env] = rows
        diag = env_diagnostic(env_games, env)
        depth = "n/a" if diag.median_fraction is None else f"{diag.median_fraction:.2f}"
        lines.append(
            f"== {env}: {len(env_games)} games, error rate {diag.error_rate:.3f}, "
            f"median depth fraction {depth}"
            + (", robustness-dominated" if diag.robustness_dominated else "")
        )
        for r in rows:
            lines.append(
                f"  {r.model:<20} games {r.games:>4}  clean {r.clean:>4}  caused {r.caused:>4}  "
                f"witnessed {r.witnessed:>4}  self-forf {r.self_forf:>4}  opp-forf {r.opp_forf:>4}"
            )
        roles = role_table(env_games)
        for m in focal:
            if not roles.roles(m):
                continue
            adv = role_advantage(roles, m)
            cells = ", ".join(
                f"{r} {roles.cells[(m, r)][0]}/{roles.cells[(m, r)][1]} ({adv[r]:+.2f})" for r in roles.roles(m)
            )
            lines.append(f"  roles {m}: {cells}")
    for env, comp in failure_mode_histogram(games).items():
        lines.append(f"failure modes {env}: " + ", ".join(f"{k} {v:.1f}%" for k, v in comp.items()))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_attribution_table(table, out / "attribution.csv")
        write_scatter_csv(scatter_points(games), out / "scatter.csv")
        (out / "metrics.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        report = read_and_validate(args.file)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.file}: {exc}") from None
    for v in report.violations:
        print(f"{args.file}: {v}")
    s = report.summary
    print(f"games {s.games}  trajectories {s.trajectories}  mean turns {s.mean_turns:.2f}")
    print("OK" if report.ok else f"{len(report.violations)} violation(s)")
    return EXIT_OK if report.ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamearena", description="Multi-agent text game arena.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tournament", help="rate a participant against the reference pool")
    t.add_argument("--config", help="JSON file with defaults for any of these options")
    t.add_argument("--track", choices=[x.value for x in Track])
    t.add_argument("--manifest", help="replay a saved manifest instead of building one")
    t.add_argument("--participant", help="participant agent id in the manifest")
    t.add_argument("--participant-url", help="base URL of a remote participant agent")
    t.add_argument("--participant-profile", help="baseline profile for a local participant")
    t.add_argument("--reference-profile", help="baseline profile standing in for reference agents")
    t.add_argument("--pool", help="reference pool JSON (default: bundled)")
    t.add_argument("--out", help="output directory")
    t.add_argument("--jobs", type=int, help="concurrent matches")
    t.add_argument("--seed-offset-override", type=int, help="shift added to every scheduled seed")
    t.add_argument("--replicate-multiplier", type=int, help="scale the replicate factor")
    t.add_argument("--timeout", type=float, help="remote agent timeout in seconds")
    t.add_argument("--dry-run", action="store_true", help="print the manifest and exit")
    t.set_defaults(func=cmd_tournament)

    pl = sub.add_parser("play", help="play one game and print the transcript")
    pl.add_argument("--env", required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--agents", help="comma-separated baseline profiles or agent URLs, one per seat")
    pl.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    pl.add_argument("--out", help="write the trajectories to this JSONL file")
    pl.set_defaults(func=cmd_play)

    m = sub.add_parser("metrics", help="error attribution and diagnostics from trajectory files")
    m.add_argument("inputs", nargs="+")
    m.add_argument("--focal", nargs="*", help="models to report (default: all)")
    m.add_argument("--out", help="directory for CSV exports")
    m.set_defaults(func=cmd_metrics)

    v = sub.add_parser("validate", help="check a trajectory file against the record schema")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except AgentUnavailable as exc:
        print(f"error: agent transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ConfigError, UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
