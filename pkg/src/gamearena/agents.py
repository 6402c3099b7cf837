"""Agent contract, scripted baselines, and the HTTP transport for remote agents.

Wire protocol ``mg-wire/1`` (the arena is the client, agents are servers):

    POST /act      {"protocol", "game_id", "env", "player_id", "turn", "phase", "observation"}
                   -> {"action": "<raw text>"}
    GET  /healthz  -> 200 {"status": "ok"}

Bodies are UTF-8 JSON. A timeout or transport failure raises ``AgentTimeout``
/ ``AgentUnavailable``; the tournament runner discards the match instead of
recording an invalid action.
"""

from __future__ import annotations

import json
import random
import re
import socket
import threading
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Protocol, runtime_checkable

from .games import canonical_kind

WIRE_PROTOCOL = "mg-wire/1"
DEFAULT_TIMEOUT = 120.0


@dataclass(frozen=True)
class AgentContext:
    game_id: int
    env: str
    player_id: int
    turn: int
    phase: str = ""


@runtime_checkable
class Agent(Protocol):
    def act(self, observation: str, context: AgentContext) -> str: ...


class AgentUnavailable(RuntimeError):
    """Transport-level failure talking to an agent."""


class AgentTimeout(AgentUnavailable):
    pass


def _rng(seed: int, ctx: AgentContext, salt: str = "") -> random.Random:
    return random.Random(f"{seed}:{ctx.env}:{ctx.game_id}:{ctx.player_id}:{ctx.turn}:{salt}")


# -- observation scraping -------------------------------------------------------------

_TARGETS = re.compile(r"Valid targets: (.*)")
_RESULT = re.compile(r"Player (\d+) \((cooperate|defect)\) vs Player (\d+) \((cooperate|defect)\)")
_CLUE_STATUS = re.compile(r"Clue: \[(\S+) (\d+)\]\. Guesses remaining: (\d+)\.")

# Clue words absent from the bundled lexicon; still checked against each board.
SAFE_CLUES = ("zephyr", "quasar", "nimbus", "tundra", "saffron", "obsidian", "meridian")


def valid_targets(observation: str) -> list[int]:
    found = _TARGETS.findall(observation)
    return [int(x) for x in re.findall(r"\[(\d+)\]", found[-1])] if found else []


def board_words(observation: str) -> tuple[list[str], list[str]]:
    """(all words, unrevealed words) from the last board listing in the observation."""
    start = observation.rfind("Codenames Words:")
    if start < 0:
        return [], []
    words, hidden = [], []
    for line in observation[start:].splitlines()[1:]:
        if not line or line.startswith("[") or line.startswith("Clue:"):
            break
        parts = line.split()
        words.append(parts[0])
        if "revealed" not in parts:
            hidden.append(parts[0])
    return words, hidden


def _safe_clue(words: list[str]) -> str:
    lowered = {w.lower() for w in words}
    return next(w for w in SAFE_CLUES if w not in lowered)


# -- baselines ------------------------------------------------------------------------

_ALL_ALLOCATIONS = [
    (a, b, c) for a in range(21) for b in range(21 - a) for c in range(21 - a - b)
]


class RandomValidAgent:
    """Uniformly random admissible actions; never triggers an engine error."""

    profile = "RandomValid"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def act(self, observation: str, context: AgentContext) -> str:
        rng = _rng(self.seed, context)
        kind, phase, me = canonical_kind(context.env), context.phase, context.player_id
        if kind == "blotto":
            a, b, c = rng.choice(_ALL_ALLOCATIONS)
            return f"[A{a} B{b} C{c}]"
        if kind == "ipd":
            if phase == "Chat":
                return rng.choice(["Let's all cooperate.", "I am watching closely.", "Hello everyone."])
            return " ".join(
                f"[{o} {rng.choice(['cooperate', 'defect'])}]" for o in range(3) if o != me
            )
        if kind == "codenames":
            words, hidden = board_words(observation)
            if phase == "Spymaster":
                return f"[{rng.choice([w for w in SAFE_CLUES if w not in words])} {rng.randint(1, 3)}]"
            return f"[{rng.choice(hidden + ['pass'])}]"
        if phase == "Day.Discussion":
            return f"I am Player {me}. " + rng.choice(["I trust no one yet.", "Let's think carefully."])
        return f"[Player {rng.choice(valid_targets(observation))}]"


class ScriptedAgent:
    """Simple deterministic-with-jitter strategies per game."""

    profile = "Scripted"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._memory: dict[tuple[int, int], dict] = {}
        self._lock = threading.Lock()

    def _mem(self, ctx: AgentContext) -> dict:
        with self._lock:
            return self._memory.setdefault((ctx.game_id, ctx.player_id), {})

    def act(self, observation: str, context: AgentContext) -> str:
        kind = canonical_kind(context.env)
        return getattr(self, f"_{kind}")(observation, context)

    def _blotto(self, observation: str, ctx: AgentContext) -> str:
        rng = _rng(self.seed, ctx)
        alloc = [7, 7, 6]
        rng.shuffle(alloc)
        for _ in range(rng.randint(0, 2)):
            src, dst = rng.sample(range(3), 2)
            if alloc[src] > 0:
                alloc[src] -= 1
                alloc[dst] += 1
        return "[A{} B{} C{}]".format(*alloc)

    def _ipd(self, observation: str, ctx: AgentContext) -> str:
        me, mem = ctx.player_id, self._mem(ctx)
        last = mem.setdefault("last", {})
        for i, di, j, dj in _RESULT.findall(observation):
            i, j = int(i), int(j)
            if i == me:
                last[j] = dj
            elif j == me:
                last[i] = di
        if ctx.phase == "Chat":
            return "I cooperate with anyone who cooperates with me."
        return " ".join(f"[{o} {last.get(o, 'cooperate')}]" for o in range(3) if o != me)

    def _codenames(self, observation: str, ctx: AgentContext) -> str:
        words, hidden = board_words(observation)
        if ctx.phase == "Spymaster":
            return f"[{_safe_clue(words)} 1]"
        status = _CLUE_STATUS.findall(observation)
        if status and int(status[-1][2]) == int(status[-1][1]) + 1 and hidden:
            return f"[{_rng(self.seed, ctx).choice(hidden)}]"
        return "[pass]"

    def _mafia(self, observation: str, ctx: AgentContext) -> str:
        mem = self._mem(ctx)
        found = mem.setdefault("found", [])
        found += re.findall(r"Investigation result: (Player \d+ is (?:Not )?Mafia)", observation)
        if ctx.phase == "Day.Discussion":
            if found:
                return f"I am Player {ctx.player_id}. My investigation says: {found[-1]}."
            return f"I am Player {ctx.player_id}. I have no firm information yet."
        return f"[Player {_rng(self.seed, ctx).choice(valid_targets(observation))}]"


MALFORMED = "I am not sure what to do here, so I will think about it."


class FaultyAgent:
    """With probability ``p`` replaces the wrapped agent's action by a malformed string."""

    def __init__(self, base: Agent, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.base, self.p, self.seed = base, p, seed
        self.profile = f"Faulty({p})"
        self.replaced = 0
        self.calls = 0

    def act(self, observation: str, context: AgentContext) -> str:
        action = self.base.act(observation, context)
        self.calls += 1
        if _rng(self.seed, context, "faulty").random() < self.p:
            self.replaced += 1
            return MALFORMED
        return action


def baseline(env_kind: str, profile: str = "Scripted", seed: int = 0, p: float | None = None) -> Agent:
    """Build a baseline agent: ``RandomValid``, ``Scripted`` or ``Faulty`` (wrapping Scripted).

    ``profile`` may also be given as ``"Faulty(0.3)"``.
    """
    canonical_kind(env_kind)
    m = re.fullmatch(r"\s*faulty\s*\(\s*([0-9.]+)\s*\)\s*", profile, re.IGNORECASE)
    if m:
        profile, p = "Faulty", float(m.group(1))
    key = profile.lower()
    if key in ("randomvalid", "random"):
        return RandomValidAgent(seed)
    if key == "scripted":
        return ScriptedAgent(seed)
    if key == "faulty":
        return FaultyAgent(ScriptedAgent(seed), 0.5 if p is None else p, seed)
    raise ValueError(f"unknown baseline profile {profile!r}")


# -- remote transport -----------------------------------------------------------------


class RemoteAgent:
    """Client for an agent served over HTTP (one request per turn)."""

    def __init__(self, base_url: str, token: str | None = None, timeout: float = DEFAULT_TIMEOUT):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json; charset=utf-8"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def act(self, observation: str, context: AgentContext) -> str:
        body = {"protocol": WIRE_PROTOCOL, **asdict(context), "observation": observation}
        req = urllib.request.Request(
            f"{self.base_url}/act",
            data=json.dumps(body, ensure_ascii=False).encode("utf-8"),
            headers=self._headers(),
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (socket.timeout, TimeoutError) as exc:
            raise AgentTimeout(f"{self.base_url} timed out after {self.timeout}s") from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                raise AgentTimeout(f"{self.base_url} timed out after {self.timeout}s") from exc
            raise AgentUnavailable(f"{self.base_url}: {exc}") from exc
        except (OSError, ValueError) as exc:
            raise AgentUnavailable(f"{self.base_url}: {exc}") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("action"), str):
            raise AgentUnavailable(f"{self.base_url}: response lacks a string 'action'")
        return payload["action"]

    def healthy(self) -> bool:
        req = urllib.request.Request(f"{self.base_url}/healthz", headers=self._headers())
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.status == 200
        except (OSError, urllib.error.URLError):
            return False


class AgentServer:
    """Serve an in-process agent over ``mg-wire/1``; mainly for tests and local bridges."""

    def __init__(self, agent: Agent, host: str = "127.0.0.1", port: int = 0):
        agent_ref = agent

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:  # keep test output quiet
                pass

            def _reply(self, code: int, payload: dict) -> None:
                data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self) -> None:
                if self.path == "/healthz":
                    self._reply(200, {"status": "ok", "protocol": WIRE_PROTOCOL})
                else:
                    self._reply(404, {"error": "not found"})

            def do_POST(self) -> None:
                if self.path != "/act":
                    self._reply(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length).decode("utf-8"))
                    ctx = AgentContext(
                        int(body["game_id"]), body["env"], int(body["player_id"]),
                        int(body["turn"]), body.get("phase", ""),
                    )
                    action = agent_ref.act(body["observation"], ctx)
                except (KeyError, ValueError, TypeError) as exc:
                    self._reply(400, {"error": str(exc)})
                    return
                self._reply(200, {"action": action})

        self.httpd = ThreadingHTTPServer((host, port), Handler)
        self.httpd.daemon_threads = True
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> AgentServer:
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self) -> AgentServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


class EchoAgent:
    """Returns the observation unchanged; checks transport byte-exactness."""

    def act(self, observation: str, context: AgentContext) -> str:
        return observation

