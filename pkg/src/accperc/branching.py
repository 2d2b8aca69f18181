"""Block branching process embedded in the tree, and supercriticality checks.

Fix a block length ``n``. Generation ``j`` consists of the vertices at depth
``j*n`` reachable from the root through generation ``j-1``; an individual's
offspring are the vertices ``n`` levels below it reachable by increasing
paths. Survival of this process implies an infinite accessible path.

Two sampling modes:

``fresh_root``  every individual draws a new ``U(0,1)`` fitness before its
                block, giving iid offspring counts per generation.
``embedded``    an individual keeps the fitness it was reached with, which is
                the literal construction; consecutive blocks share that value.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from ._util import tail_inf_exceeds_one, wald_stderr
from .errors import CapacityError, ConfigError
from .rng import trial_rng
from .tree import GrowthFunction

MODES = ("fresh_root", "embedded")


def _to_float(x: Fraction) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BlockProcess:
    growth: GrowthFunction
    n: int
    mode: str = "fresh_root"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"block length must be >= 1, got {self.n}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


def block_mean_exact(g: GrowthFunction, j: int, n: int) -> Fraction:
    if j < 0 or n < 1:
        raise ConfigError(f"need j >= 0 and n >= 1, got j={j}, n={n}")
    leaves = math.prod(g.children(i) for i in range(j * n, j * n + n))
    return Fraction(leaves, math.factorial(n + 1))


def block_mean_offspring(g: GrowthFunction, j: int, n: int, exact: bool = False):
    """Mean offspring of a generation-``j`` individual: ``|block leaves| / (n+1)!``.

    Computed in log space unless ``exact`` asks for the rational value.
    """
    if exact:
        return block_mean_exact(g, j, n)
    if j < 0 or n < 1:
        raise ConfigError(f"need j >= 0 and n >= 1, got j={j}, n={n}")
    s = math.fsum(math.log(g.children(i)) for i in range(j * n, j * n + n))
    return math.exp(s - math.lgamma(n + 2))


def sample_block_offspring(g: GrowthFunction, j: int, n: int, rng: np.random.Generator,
                           mode: str = "fresh_root", root_fitness: float | None = None,
                           block_cap: int = 10**9) -> int:
    """Number of vertices ``n`` levels below a generation-``j`` individual reachable by increasing paths."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    children = g.children_array(j * n + n)[j * n:]
    if math.prod(int(c) for c in children) > block_cap:
        raise CapacityError(f"block at generation {j} has more than block_cap={block_cap} leaves")
    if mode == "fresh_root":
        root = rng.random()
    else:
        if root_fitness is None:
            raise ConfigError("embedded mode needs root_fitness")
        root = float(root_fitness)
    counts, _, _ = _kernels.evolve(rng, np.array([root]), children, np.ones(n), _kernels.NO_CAP, 0)
    return int(counts[-1])


def block_offspring_samples(g: GrowthFunction, j: int, n: int, samples: int, seed: int = 0,
                            block_cap: int = 10**9) -> np.ndarray:
    """``samples`` fresh-root offspring counts, sample ``s`` keyed by ``(seed, s)``."""
    return np.array([sample_block_offspring(g, j, n, trial_rng(seed, s), "fresh_root", block_cap=block_cap)
                     for s in range(samples)], dtype=np.int64)


@dataclass(frozen=True)
class SurvivalRow:
    generation: int
    n_alive_trials: int
    fraction: float
    stderr: float

    CSV_HEADER = ("generation", "n_alive_trials", "fraction")

    def row(self) -> tuple:
        return (self.generation, self.n_alive_trials, self.fraction)


def bpve_generation_sizes(process: BlockProcess, generations: int, trials: int,
                          population_cap: int | None = 100_000, seed: int = 0) -> np.ndarray:
    """``Z_0..Z_J`` per trial as a ``(trials, J+1)`` array.

    The population cap keeps the individuals with the smallest fitness at
    every level, so the survival it reports is a lower bound.
    """
    if generations < 0 or trials < 1:
        raise ConfigError("need generations >= 0 and trials >= 1")
    n = process.n
    depth = generations * n
    children = process.growth.children_array(depth)
    rho = np.ones(depth)
    cap = _kernels.NO_CAP if population_cap is None else int(population_cap)
    refresh = n if process.mode == "fresh_root" else 0
    sizes = np.zeros((trials, generations + 1), dtype=np.int64)
    for t in range(trials):
        rng = trial_rng(seed, t)
        counts, _, _ = _kernels.evolve(rng, np.array([rng.random()]), children, rho, cap, refresh)
        sizes[t] = counts[::n]
    return sizes


def bpve_survival_estimate(process: BlockProcess, generations: int, trials: int,
                           population_cap: int | None = 100_000, seed: int = 0) -> list[SurvivalRow]:
    sizes = bpve_generation_sizes(process, generations, trials, population_cap, seed)
    alive = (sizes > 0).sum(axis=0)
    return [SurvivalRow(j, int(alive[j]), float(alive[j] / trials), wald_stderr(int(alive[j]), trials))
            for j in range(generations + 1)]


@dataclass(frozen=True)
class SupercriticalReport:
    n: int
    mu_by_generation: list[float]
    min_mu: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_supercritical(g: GrowthFunction, n: int, horizon: int = 20) -> SupercriticalReport:
    """Block means for ``j = 0..horizon``; ``holds`` iff their minimum exceeds 1.

    Comparisons are exact. For nondecreasing growth functions the means are
    nondecreasing in ``j``, so the check certifies the liminf condition.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    mus = [block_mean_exact(g, j, n) for j in range(horizon + 1)]
    low = min(mus)
    return SupercriticalReport(n, [_to_float(m) for m in mus], _to_float(low), low > 1)


def find_supercritical_block(g: GrowthFunction, n_max: int = 64, horizon: int = 20) -> SupercriticalReport | None:
    """The smallest block length whose check holds, or None up to ``n_max``."""
    for n in range(1, n_max + 1):
        rep = check_supercritical(g, n, horizon)
        if rep.holds:
            return rep
    return None


def proof_block_length(alpha, n_max: int = 10_000) -> int | None:
    """Smallest ``n`` with ``alpha**n / (n + 1) > 1``, the lower bound used for linear-ceiling trees."""
    if alpha <= 1:
        return None
    la = math.log(alpha)
    for n in range(1, n_max + 1):
        if n * la > math.log(n + 1):
            return n
    return None


@dataclass(frozen=True)
class GrowthRateReport:
    geometric_means: list[float]
    tail_inf: float
    holds: bool
    margin: float

    def to_dict(self) -> dict:
        return asdict(self)


def growth_rate_condition(alphas: Sequence[int], horizon: int | None = None, margin: float = 1e-6) -> GrowthRateReport:
    """Geometric means ``(prod_{i<n} alpha_i)**(1/n)`` for ``n = 1..horizon``.

    ``holds`` iff their infimum over ``n`` in ``[horizon//2, horizon]``
    exceeds ``1 + margin``. The full sequence is reported so the liminf
    behaviour can be judged; a finite window cannot certify it.
    """
    if len(alphas) == 0:
        raise ConfigError("alphas must be nonempty")
    if any(int(a) != a or a < 1 for a in alphas):
        raise ConfigError("alphas must be positive integers")
    horizon = len(alphas) if horizon is None else horizon
    if not 1 <= horizon <= len(alphas):
        raise ConfigError(f"horizon must be in [1, {len(alphas)}], got {horizon}")
    logs = np.cumsum(np.log(np.asarray(alphas[:horizon], dtype=np.float64))) / np.arange(1, horizon + 1)
    tail_inf, holds = tail_inf_exceeds_one(list(logs), margin)
    return GrowthRateReport([float(v) for v in np.exp(logs)], tail_inf, holds, margin)
