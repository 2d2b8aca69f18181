"""The F^alpha record model.

Edition ``n`` has ``alpha(n)`` participants with iid uniform scores; the
winner's score ``X_n`` has cdf ``x**alpha(n)``. A perfect record sequence is
``X_1 < X_2 < ... < X_N``.

Coupling with the tree ``T_alpha``: follow from the root the child with the
largest fitness at every step. Along that greedy path the fitness at level
``k >= 1`` is the maximum of ``ceil(k * alpha)`` uniforms, independent across
levels, and the path is accessible whenever those maxima increase. So the
record model with ``alpha(1) = 1`` (the root) and ``alpha(j) = ceil((j-1) * alpha)``
for ``j >= 2`` satisfies ``P(perfect record up to N) <= P(Lambda_{N-1})``.
That is the alignment used by :func:`coupling_report`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._util import wald_stderr
from .errors import ConfigError
from .exact import lambda_prob_exact, record_chain_prob
from .rng import trial_rng
from .tree import LinearCeil, _as_fraction


def parse_alpha_spec(spec: str, editions: int) -> tuple[int, ...]:
    """Participant counts for editions ``1..editions``.

    ``uniform``            every edition has one participant
    ``linear_ceil:A``      ``alpha(1) = 1``, ``alpha(n) = ceil((n+1) A)`` for ``n >= 2``
    ``tree:A``             ``alpha(1) = 1``, ``alpha(n) = ceil((n-1) A)`` for ``n >= 2``
    ``explicit:1,3,4``     given counts (a bare comma list also works)
    """
    if editions < 1:
        raise ConfigError(f"editions must be >= 1, got {editions}")
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        return (1,) * editions
    if kind in ("linear_ceil", "tree"):
        try:
            a = _as_fraction(float(arg))
        except ValueError:
            raise ConfigError(f"bad alpha in {spec!r}") from None
        if a <= 0:
            raise ConfigError(f"alpha must be positive in {spec!r}")
        shift = 1 if kind == "linear_ceil" else -1
        return (1,) + tuple(math.ceil((n + shift) * a) for n in range(2, editions + 1))
    body = arg if kind == "explicit" else spec
    try:
        counts = tuple(int(x) for x in body.split(","))
    except ValueError:
        raise ConfigError(f"unknown alpha spec {spec!r}") from None
    if len(counts) < editions:
        raise ConfigError(f"{spec!r} lists {len(counts)} editions, need {editions}")
    return counts[:editions]


@dataclass(frozen=True)
class RecordModelConfig:
    alphas: tuple[int, ...]
    editions: int
    trials: int = 0
    seed: int = 0
    alpha_spec: str = ""

    def __post_init__(self):
        if self.editions < 1:
            raise ConfigError(f"editions must be >= 1, got {self.editions}")
        if len(self.alphas) < self.editions:
            raise ConfigError("fewer participant counts than editions")
        if self.alphas[0] != 1:
            raise ConfigError(f"alpha(1) must be 1, got {self.alphas[0]}")
        if any(int(a) != a or a < 1 for a in self.alphas):
            raise ConfigError("participant counts must be positive integers")
        if self.trials < 0:
            raise ConfigError(f"trials must be >= 0, got {self.trials}")

    @classmethod
    def from_spec(cls, spec: str, editions: int, trials: int = 0, seed: int = 0) -> "RecordModelConfig":
        return cls(parse_alpha_spec(spec, editions), editions, trials, seed, spec)


def simulate_editions(alphas: Sequence[int], rng: np.random.Generator, method: str = "inverse") -> np.ndarray:
    """Winner scores ``X_1..X_N``.

    ``inverse`` draws ``U**(1/alpha(n))``; ``max`` takes the maximum of
    ``alpha(n)`` uniforms. Both have cdf ``x**alpha(n)``.
    """
    a = np.asarray(alphas, dtype=np.float64)
    if method == "inverse":
        return rng.random(a.size) ** (1.0 / a)
    if method == "max":
        return np.array([rng.random(int(k)).max() for k in alphas])
    raise ConfigError(f"unknown sampler {method!r}")


def record_time_sequence(scores: Sequence[float]) -> list[int]:
    """1-based record times ``S_0 = 1, S_1, ...`` within the observed horizon."""
    x = np.asarray(scores, dtype=np.float64)
    if x.size == 0:
        return []
    if np.unique(x).size != x.size:
        raise ConfigError("duplicate scores")
    times = [1]
    best = x[0]
    for j in range(1, x.size):
        if x[j] > best:
            times.append(j + 1)
            best = x[j]
    return times


def increasing_run(scores: np.ndarray) -> int:
    """Length of the initial strictly increasing run (records at editions 1..L)."""
    up = np.diff(scores) > 0
    bad = np.flatnonzero(~up)
    return int(bad[0]) + 1 if bad.size else int(scores.size)


@dataclass(frozen=True)
class RecordEstimate:
    N: int
    alpha_spec: str
    trials: int
    hits: int | None
    p_hat: float | None
    stderr: float | None
    exact_value: float | None

    CSV_HEADER = ("N", "alpha_spec", "trials", "hits", "p_hat", "stderr", "exact_value")

    def row(self) -> tuple:
        return (self.N, self.alpha_spec, self.trials, self.hits, self.p_hat, self.stderr, self.exact_value)

    def to_dict(self) -> dict:
        return asdict(self)


def perfect_record_prob(config: RecordModelConfig, exact: bool = True,
                        method: str = "inverse") -> list[RecordEstimate]:
    """Estimates of ``P(X_1 < ... < X_N)`` for every ``N <= config.editions``.

    Every trial ``t`` uses the stream keyed by ``(config.seed, t)``. With
    ``trials == 0`` only the exact values are reported.
    """
    N = config.editions
    alphas = config.alphas[:N]
    runs = np.array([increasing_run(simulate_editions(alphas, trial_rng(config.seed, t), method))
                     for t in range(config.trials)], dtype=np.int64)
    out = []
    for n in range(1, N + 1):
        ex = float(record_chain_prob(alphas, n)) if exact else None
        if config.trials:
            hits = int((runs >= n).sum())
            out.append(RecordEstimate(n, config.alpha_spec, config.trials, hits, hits / config.trials,
                                      wald_stderr(hits, config.trials), ex))
        else:
            out.append(RecordEstimate(n, config.alpha_spec, 0, None, None, None, ex))
    return out


def tree_aligned_alphas(alpha, editions: int) -> tuple[int, ...]:
    return parse_alpha_spec(f"tree:{float(alpha)!r}", editions)


@dataclass(frozen=True)
class CouplingRow:
    alpha: float
    N: int
    depth: int
    record_chain: Fraction
    lambda_prob: float
    lambda_method: str
    holds: bool
    alignment: str = "alpha(1)=1, alpha(j)=ceil((j-1)*alpha); N editions <-> depth N-1"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["record_chain"] = float(self.record_chain)
        return d


def coupling_report(alpha, editions: int, tol: float = 1e-10) -> list[CouplingRow]:
    """Compare the perfect-record probability with ``P(Lambda_{N-1})`` on ``T_alpha``.

    ``holds`` is evaluated with slack ``tol`` when the tree side comes from
    quadrature; a False row is a violation to inspect, not an error.
    """
    g = LinearCeil(alpha)
    alphas = tree_aligned_alphas(alpha, editions)
    rows = []
    for N in range(1, editions + 1):
        rec = record_chain_prob(alphas, N)
        lam = lambda_prob_exact(g, N - 1, "random")
        if lam.exact is not None:
            holds = rec <= lam.exact
        else:
            holds = float(rec) <= lam.value + tol
        rows.append(CouplingRow(float(g.alpha), N, N - 1, rec, lam.value, lam.method, holds))
    return rows
