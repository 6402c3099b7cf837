"""TrueSkill ratings via expectation propagation on the team factor graph.

Gaussians are carried in natural parameters (precision ``pi`` and
precision-adjusted mean ``tau``). The message schedule is the usual one:
priors and team sums flow down once, the chain of team differences is
iterated to convergence, then everything flows back up to the skills.

Frozen ratings take part in the update of everyone else but are returned
untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Hashable, Mapping, Sequence

from .core import UsageError

MU = 25.0
SIGMA = MU / 3
BETA = SIGMA / 2
TAU = SIGMA / 100
DRAW_PROBABILITY = 0.10

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Rating:
    mu: float = MU
    sigma: float = SIGMA
    frozen: bool = False

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def freeze(self) -> Rating:
        return Rating(self.mu, self.sigma, True)

    def __str__(self) -> str:
        return f"{self.mu:.1f} ± {self.sigma:.1f}"


@dataclass(frozen=True)
class RatingParams:
    mu: float = MU
    sigma: float = SIGMA
    beta: float = BETA
    tau: float = TAU
    draw_probability: float = DRAW_PROBABILITY
    min_delta: float = 1e-4
    max_iterations: int = 10

    def fresh(self) -> Rating:
        return Rating(self.mu, self.sigma)

    def draw_margin(self, n_players: int) -> float:
        return NormalDist().inv_cdf((self.draw_probability + 1) / 2) * math.sqrt(n_players) * self.beta


@dataclass(frozen=True)
class MatchResult:
    teams: list[list[Hashable]]
    ranks: list[int]  # lower is better; equal ranks draw

    def __post_init__(self) -> None:
        if len(self.teams) != len(self.ranks):
            raise UsageError("teams and ranks must have the same length")
        if len(self.teams) < 2 or any(len(t) == 0 for t in self.teams):
            raise UsageError("need at least two non-empty teams")


# -- Gaussian algebra ---------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    pi: float = 0.0
    tau: float = 0.0

    @classmethod
    def from_moments(cls, mu: float, sigma: float) -> Gaussian:
        pi = 1.0 / sigma**2
        return cls(pi, pi * mu)

    @property
    def mu(self) -> float:
        return self.tau / self.pi if self.pi else 0.0

    @property
    def sigma(self) -> float:
        return math.sqrt(1.0 / self.pi) if self.pi else math.inf

    def __mul__(self, other: Gaussian) -> Gaussian:
        return Gaussian(self.pi + other.pi, self.tau + other.tau)

    def __truediv__(self, other: Gaussian) -> Gaussian:
        return Gaussian(self.pi - other.pi, self.tau - other.tau)

    def delta(self, other: Gaussian) -> float:
        return max(abs(self.tau - other.tau), math.sqrt(abs(self.pi - other.pi)))


def _pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def v_win(t: float, eps: float) -> float:
    x = t - eps
    denom = _cdf(x)
    return _pdf(x) / denom if denom > 0 else -x


def w_win(t: float, eps: float) -> float:
    v = v_win(t, eps)
    return v * (v + t - eps)


def v_draw(t: float, eps: float) -> float:
    a, b = eps - abs(t), -eps - abs(t)
    denom = _cdf(a) - _cdf(b)
    v = (_pdf(b) - _pdf(a)) / denom if denom > 0 else a
    return -v if t < 0 else v


def w_draw(t: float, eps: float) -> float:
    a, b = eps - abs(t), -eps - abs(t)
    denom = _cdf(a) - _cdf(b)
    if denom <= 0:
        raise FloatingPointError("draw truncation underflow")
    v = v_draw(abs(t), eps)
    return v * v + (a * _pdf(a) - b * _pdf(b)) / denom


# -- factor graph -------------------------------------------------------------------


class _Variable:
    def __init__(self) -> None:
        self.value = Gaussian()
        self.messages: dict[int, Gaussian] = {}

    def attach(self, factor: object) -> None:
        self.messages[id(factor)] = Gaussian()

    def cavity(self, factor: object) -> Gaussian:
        return self.value / self.messages[id(factor)]

    def set_message(self, factor: object, msg: Gaussian) -> float:
        old_value = self.value
        self.value = self.value / self.messages[id(factor)] * msg
        self.messages[id(factor)] = msg
        return old_value.delta(self.value)

    def set_value(self, factor: object, value: Gaussian) -> float:
        old_value = self.value
        self.messages[id(factor)] = value * self.messages[id(factor)] / self.value
        self.value = value
        return old_value.delta(value)


class _Prior:
    def __init__(self, var: _Variable, rating: Rating, tau: float):
        self.var, self.rating, self.tau = var, rating, tau
        var.attach(self)

    def down(self) -> None:
        sigma = math.sqrt(self.rating.sigma**2 + self.tau**2)
        self.var.set_value(self, Gaussian.from_moments(self.rating.mu, sigma))


class _Likelihood:
    """Performance = skill + N(0, beta^2) noise."""

    def __init__(self, skill: _Variable, perf: _Variable, variance: float):
        self.skill, self.perf, self.variance = skill, perf, variance
        skill.attach(self)
        perf.attach(self)

    def _send(self, src: _Variable, dst: _Variable) -> None:
        msg = src.cavity(self)
        a = 1.0 / (1.0 + self.variance * msg.pi)
        dst.set_message(self, Gaussian(a * msg.pi, a * msg.tau))

    def down(self) -> None:
        self._send(self.skill, self.perf)

    def up(self) -> None:
        self._send(self.perf, self.skill)


class _Sum:
    """total = sum(coeff_i * term_i)."""

    def __init__(self, total: _Variable, terms: Sequence[_Variable], coeffs: Sequence[float]):
        self.total, self.terms, self.coeffs = total, list(terms), list(coeffs)
        total.attach(self)
        for t in self.terms:
            t.attach(self)

    def _send(self, dst: _Variable, srcs: list[_Variable], coeffs: list[float]) -> None:
        pi_inv = 0.0
        mu = 0.0
        for var, c in zip(srcs, coeffs):
            msg = var.cavity(self)
            if msg.pi == 0:
                pi_inv = math.inf
                break
            pi_inv += c * c / msg.pi
            mu += c * msg.tau / msg.pi
        if math.isinf(pi_inv):
            dst.set_message(self, Gaussian())
            return
        pi = 1.0 / pi_inv
        dst.set_message(self, Gaussian(pi, pi * mu))

    def down(self) -> None:
        self._send(self.total, self.terms, self.coeffs)

    def up(self, index: int) -> None:
        c_i = self.coeffs[index]
        srcs = [self.total] + [t for j, t in enumerate(self.terms) if j != index]
        coeffs = [1.0 / c_i] + [-c / c_i for j, c in enumerate(self.coeffs) if j != index]
        self._send(self.terms[index], srcs, coeffs)


class _Truncate:
    def __init__(self, var: _Variable, draw: bool, margin: float):
        self.var, self.draw, self.margin = var, draw, margin
        var.attach(self)

    def up(self) -> float:
        msg = self.var.cavity(self)
        sqrt_pi = math.sqrt(msg.pi)
        t, eps = msg.tau / sqrt_pi, self.margin * sqrt_pi
        v = (v_draw if self.draw else v_win)(t, eps)
        w = (w_draw if self.draw else w_win)(t, eps)
        denom = 1.0 - w
        return self.var.set_value(self, Gaussian(msg.pi / denom, (msg.tau + sqrt_pi * v) / denom))


def rate_groups(
    groups: Sequence[Sequence[Rating]], ranks: Sequence[int], params: RatingParams | None = None
) -> list[list[Rating]]:
    """Posterior ratings for teams ``groups`` that finished at ``ranks``."""
    params = params or RatingParams()
    if len(groups) != len(ranks):
        raise UsageError("teams and ranks must have the same length")
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise UsageError("need at least two non-empty teams")

    order = sorted(range(len(groups)), key=lambda i: ranks[i])
    sorted_groups = [list(groups[i]) for i in order]
    sorted_ranks = [ranks[i] for i in order]
    flat = [r for g in sorted_groups for r in g]

    skills = [_Variable() for _ in flat]
    perfs = [_Variable() for _ in flat]
    team_perfs = [_Variable() for _ in sorted_groups]
    diffs = [_Variable() for _ in sorted_groups[1:]]

    priors = [_Prior(s, r, params.tau) for s, r in zip(skills, flat)]
    likelihoods = [_Likelihood(s, p, params.beta**2) for s, p in zip(skills, perfs)]
    team_sums = []
    start = 0
    for tp, g in zip(team_perfs, sorted_groups):
        team_sums.append(_Sum(tp, perfs[start : start + len(g)], [1.0] * len(g)))
        start += len(g)
    diff_sums = [_Sum(d, team_perfs[i : i + 2], [1.0, -1.0]) for i, d in enumerate(diffs)]
    truncs = [
        _Truncate(
            d,
            draw=sorted_ranks[i] == sorted_ranks[i + 1],
            margin=params.draw_margin(len(sorted_groups[i]) + len(sorted_groups[i + 1])),
        )
        for i, d in enumerate(diffs)
    ]

    for f in priors:
        f.down()
    for f in likelihoods:
        f.down()
    for f in team_sums:
        f.down()

    n = len(diff_sums)
    for _ in range(params.max_iterations):
        if n == 1:
            diff_sums[0].down()
            delta = truncs[0].up()
        else:
            delta = 0.0
            for i in range(n - 1):
                diff_sums[i].down()
                delta = max(delta, truncs[i].up())
                diff_sums[i].up(1)
            for i in range(n - 1, 0, -1):
                diff_sums[i].down()
                delta = max(delta, truncs[i].up())
                diff_sums[i].up(0)
        if delta <= params.min_delta:
            break
    diff_sums[0].up(0)
    diff_sums[-1].up(1)
    for f in team_sums:
        for i in range(len(f.terms)):
            f.up(i)
    for f in likelihoods:
        f.up()

    posts = iter(skills)
    updated_sorted = []
    for g in sorted_groups:
        team = []
        for old in g:
            post = next(posts).value
            team.append(old if old.frozen else Rating(post.mu, post.sigma))
        updated_sorted.append(team)
    result: list[list[Rating]] = [[] for _ in groups]
    for pos, i in enumerate(order):
        result[i] = updated_sorted[pos]
    return result


def rate(
    ratings: Mapping[Hashable, Rating], result: MatchResult, params: RatingParams | None = None
) -> dict[Hashable, Rating]:
    """Apply one match result; entries not in the match pass through unchanged."""
    try:
        groups = [[ratings[k] for k in team] for team in result.teams]
    except KeyError as exc:
        raise UsageError(f"no rating for participant {exc.args[0]!r}") from None
    new_groups = rate_groups(groups, result.ranks, params)
    out = dict(ratings)
    for team, new_team in zip(result.teams, new_groups):
        for key, new in zip(team, new_team):
            out[key] = new
    return out


def _dense_ranks(values: Sequence[float]) -> list[int]:
    distinct = sorted(set(values), reverse=True)
    return [distinct.index(v) + 1 for v in values]


def result_from_game(env_kind: str, rewards: Mapping[int, float]) -> MatchResult:
    """Map a terminal reward vector onto a rating result over player seats."""
    from .games import canonical_kind

    kind = canonical_kind(env_kind)
    seats = sorted(rewards)
    if kind in ("blotto", "ipd"):
        teams = [[p] for p in seats]
        ranks = _dense_ranks([rewards[p] for p in seats])
    elif kind == "codenames":
        teams = [[0, 1], [2, 3]]
        ranks = _dense_ranks([rewards[0], rewards[2]])
    elif kind == "mafia":
        values = sorted(set(rewards.values()), reverse=True)
        if len(values) == 1:
            raise UsageError("a mafia reward vector must separate two teams")
        teams = [[p for p in seats if rewards[p] == v] for v in values]
        ranks = list(range(1, len(teams) + 1))
    else:  # pragma: no cover - canonical_kind already rejects unknown kinds
        raise UsageError(f"unknown environment {env_kind!r}")
    return MatchResult(teams, ranks)


@dataclass
class RatingHistory:
    """Per-game trajectory of one agent's posterior, for exporting time series."""

    agent: str
    points: list[tuple[int, float, float]] = field(default_factory=list)  # (game_id, mu, sigma)

    def record(self, game_id: int, rating: Rating) -> None:
        self.points.append((game_id, rating.mu, rating.sigma))
