"""Exact and quadrature evaluation of small-depth accessibility probabilities.

For a level-``i`` vertex with fitness ``x`` let ``u_i(x)`` be the probability
that some vertex ``n - i`` levels below it is reachable by an increasing
path. Then ``u_n = 1`` and

    u_i(x) = 1 - (1 - \\int_x^1 u_{i+1}(y) dy) ** children(i)

since each child independently beats ``x`` and continues. The polynomial
backend carries exact rational coefficients; the quadrature backend stores
``u_i`` on composite Gauss-Legendre panels and refines until two successive
panel counts agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .env import EnvSchedule
from .errors import AccuracyError, CapacityError, ConfigError
from .tree import GrowthFunction, _as_fraction

METHODS = ("auto", "polynomial", "quadrature")


class Polynomial:
    """Dense polynomial with exact rational coefficients, lowest degree first."""

    __slots__ = ("coef",)

    def __init__(self, coef: Sequence = (0,)):
        coef = [Fraction(c) for c in coef] or [Fraction(0)]
        while len(coef) > 1 and coef[-1] == 0:
            coef.pop()
        self.coef = coef

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls([c])

    @classmethod
    def monomial(cls, degree: int, c=1) -> "Polynomial":
        return cls([0] * degree + [c])

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def __call__(self, x):
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        for c in reversed(self.coef):
            acc = acc * x + c
        return acc

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coef), len(other.coef))
        a = self.coef + [Fraction(0)] * (n - len(self.coef))
        b = other.coef + [Fraction(0)] * (n - len(other.coef))
        return Polynomial([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coef])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        out = [Fraction(0)] * (len(self.coef) + len(other.coef) - 1)
        for i, a in enumerate(self.coef):
            if a:
                for j, b in enumerate(other.coef):
                    out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coef == other.coef

    def antiderivative(self) -> "Polynomial":
        """The antiderivative vanishing at 0."""
        return Polynomial([0] + [c / (k + 1) for k, c in enumerate(self.coef)])

    def integral(self, lo, hi) -> Fraction:
        a = self.antiderivative()
        return a(hi) - a(lo)

    def tail_integral(self) -> "Polynomial":
        """``x -> \\int_x^1 p(y) dy``."""
        a = self.antiderivative()
        return Polynomial.constant(a(1)) - a

    def __repr__(self):
        return f"Polynomial({[str(c) for c in self.coef]})"


def _as_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial.constant(x)


class PiecewisePolynomial:
    """Polynomial pieces on consecutive intervals ``[breaks[k], breaks[k+1]]``."""

    def __init__(self, breaks: Sequence[Fraction], pieces: Sequence[Polynomial]):
        if len(breaks) != len(pieces) + 1:
            raise ValueError("need one more breakpoint than pieces")
        self.breaks = [Fraction(b) for b in breaks]
        self.pieces = list(pieces)

    @property
    def lo(self) -> Fraction:
        return self.breaks[0]

    def __call__(self, x):
        for k, p in enumerate(self.pieces):
            if x <= self.breaks[k + 1]:
                return p(x)
        return self.pieces[-1](x)

    def integral(self) -> Fraction:
        return sum((p.integral(self.breaks[k], self.breaks[k + 1])
                    for k, p in enumerate(self.pieces)), Fraction(0))

    def clamped_tail(self, new_lo: Fraction) -> "PiecewisePolynomial":
        """``x -> \\int_{max(x, lo)}^{end} f`` on ``[new_lo, end]`` with ``new_lo <= lo``."""
        new_pieces = []
        after = Fraction(0)
        for k in range(len(self.pieces) - 1, -1, -1):
            p = self.pieces[k]
            a = p.antiderivative()
            right = self.breaks[k + 1]
            new_pieces.append(Polynomial.constant(a(right) + after) - a)
            after += p.integral(self.breaks[k], right)
        new_pieces.reverse()
        breaks = list(self.breaks)
        if new_lo < self.lo:
            breaks.insert(0, Fraction(new_lo))
            new_pieces.insert(0, Polynomial.constant(after))
        return PiecewisePolynomial(breaks, new_pieces)

    def scaled(self, c: Fraction) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breaks, [p * c for p in self.pieces])


@lru_cache(maxsize=None)
def _reference_panel(order: int):
    """Gauss nodes/weights on [-1, 1] and the matrix giving ``\\int_{t_i}^1`` of the interpolant."""
    t, w = legendre.leggauss(order)
    vander = legendre.legvander(t, order - 1)
    # antiderivative of each Legendre basis function, evaluated at 1 and at the nodes
    anti = np.empty((order, order))
    at_one = np.empty(order)
    for k in range(order):
        e = np.zeros(order)
        e[k] = 1.0
        ik = legendre.legint(e)
        anti[:, k] = legendre.legval(t, ik)
        at_one[k] = legendre.legval(1.0, ik)
    tail = (at_one[None, :] - anti) @ np.linalg.inv(vander)
    return t, w, tail


@dataclass
class GridFunction:
    """Function sampled at the Gauss nodes of ``panels`` equal panels on ``[lo, hi]``."""

    lo: float
    hi: float
    panels: int
    order: int
    values: np.ndarray  # shape (panels, order)

    @classmethod
    def from_callable(cls, f, lo=0.0, hi=1.0, panels=8, order=12) -> "GridFunction":
        g = cls(lo, hi, panels, order, np.zeros((panels, order)))
        return cls(lo, hi, panels, order, f(g.nodes()))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.panels

    def nodes(self) -> np.ndarray:
        t, _, _ = _reference_panel(self.order)
        left = self.lo + self.width * np.arange(self.panels)
        return left[:, None] + 0.5 * self.width * (t[None, :] + 1.0)

    def panel_integrals(self) -> np.ndarray:
        _, w, _ = _reference_panel(self.order)
        return 0.5 * self.width * (self.values @ w)

    def integral(self) -> float:
        return math.fsum(self.panel_integrals())

    def tail_integrals(self) -> np.ndarray:
        """``\\int_x^{hi}`` of the panelwise interpolant at every node."""
        _, _, tail = _reference_panel(self.order)
        inside = 0.5 * self.width * (self.values @ tail.T)
        full = self.panel_integrals()
        beyond = np.concatenate([np.cumsum(full[::-1])[::-1][1:], [0.0]])
        return inside + beyond[:, None]


@dataclass(frozen=True)
class ExactResult:
    config: dict
    n: int
    method: str
    value: float
    error_estimate: float
    exact: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "n": self.n,
            "method": self.method,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "exact": None if self.exact is None else str(self.exact),
        }


def predicted_degree(g: GrowthFunction, n: int) -> int:
    """Degree of ``u_0`` in the polynomial recursion."""
    deg = 0
    for i in range(n - 1, -1, -1):
        deg = g.children(i) * (deg + 1)
    return deg


def _lambda_polynomial(g: GrowthFunction, n: int, root_mode: str) -> Fraction:
    u = Polynomial.constant(1)
    for i in range(n - 1, -1, -1):
        u = 1 - (1 - u.tail_integral()) ** g.children(i)
    return u(Fraction(0)) if root_mode == "zero" else u.integral(0, 1)


def _lambda_quadrature(g: GrowthFunction, n: int, root_mode: str, panels: int, order: int) -> float:
    grid = GridFunction(0.0, 1.0, panels, order, np.ones((panels, order)))
    for i in range(n - 1, 0, -1):
        miss = np.clip(1.0 - grid.tail_integrals(), 0.0, 1.0)
        grid.values = 1.0 - miss ** g.children(i)
    if root_mode == "zero":
        return 1.0 - (1.0 - min(grid.integral(), 1.0)) ** g.children(0)
    miss = np.clip(1.0 - grid.tail_integrals(), 0.0, 1.0)
    grid.values = 1.0 - miss ** g.children(0)
    return grid.integral()


def lambda_prob_exact(g: GrowthFunction, n: int, root_mode: str = "random", method: str = "auto",
                      degree_cap: int = 256, tol: float = 1e-10, order: int = 12,
                      max_panels: int = 4096) -> ExactResult:
    """Probability that some vertex at depth ``n`` is reachable by an increasing path.

    ``root_mode='zero'`` fixes the root fitness at 0, otherwise it is uniform.
    ``method='auto'`` uses exact polynomials when the predicted degree is at
    most ``degree_cap`` and quadrature otherwise.
    """
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    if root_mode not in ("random", "zero"):
        raise ConfigError(f"unknown root_mode {root_mode!r}")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    config = {"growth": g.to_dict(), "root_mode": root_mode}
    if n == 0:
        return ExactResult(config, 0, "polynomial", 1.0, 0.0, Fraction(1))
    deg = predicted_degree(g, n)
    if method == "auto":
        method = "polynomial" if deg <= degree_cap else "quadrature"
    if method == "polynomial":
        if deg > degree_cap:
            raise CapacityError(
                f"polynomial degree {deg} exceeds degree_cap={degree_cap}; use method='quadrature'"
            )
        value = _lambda_polynomial(g, n, root_mode)
        return ExactResult(config, n, method, float(value), 0.0, value)

    panels = 4
    prev = _lambda_quadrature(g, n, root_mode, panels, order)
    while panels < max_panels:
        panels *= 2
        cur = _lambda_quadrature(g, n, root_mode, panels, order)
        if abs(cur - prev) < tol:
            return ExactResult({**config, "panels": panels, "order": order}, n, method, cur, abs(cur - prev))
        prev = cur
    raise AccuracyError(f"quadrature did not reach tol={tol} with {max_panels} panels")


def record_chain_prob(alpha_seq: Sequence[int], n: int) -> Fraction:
    """``P(X_1 < ... < X_n)`` for independent ``X_j`` with cdf ``x**alpha_seq[j-1]``.

    Runs ``q_1 = x**a_1``, ``q_j(x) = \\int_0^x q_{j-1}(y) a_j y**(a_j - 1) dy``
    and returns ``q_n(1)`` in exact rationals.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if len(alpha_seq) < n:
        raise ConfigError(f"need {n} participant counts, got {len(alpha_seq)}")
    alphas = list(alpha_seq[:n])
    for a in alphas:
        if int(a) != a or a < 1:
            raise ConfigError(f"participant counts must be positive integers, got {a}")
    q = Polynomial.monomial(int(alphas[0]))
    for a in alphas[1:]:
        a = int(a)
        q = (q * Polynomial.monomial(a - 1, a)).antiderivative()
    return q(Fraction(1))


def varyenv_chain_exact(env: EnvSchedule, n: int) -> Fraction:
    """``P(X_0 < X_1 < ... < X_n)`` for independent ``X_k ~ U(a_k, 1)``.

    Backward recursion on piecewise polynomials with breakpoints at the
    floors; each float ``a_k`` is read as the decimal it prints as, so 0.8
    means 4/5.
    """
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    a = [_as_fraction(env.level_floor(k)) for k in range(n + 1)]
    for k in range(n):
        if not 0 <= a[k] < a[k + 1] < 1:
            raise ConfigError(f"schedule must be strictly increasing in [0, 1): a_{k}={a[k]}, a_{k+1}={a[k + 1]}")
    # q: probability to continue the chain to level n from level k with value x
    q = PiecewisePolynomial([a[n], Fraction(1)], [Polynomial.constant(1)])
    for k in range(n - 1, -1, -1):
        q = q.clamped_tail(a[k]).scaled(1 / (1 - a[k + 1]))
    return q.integral() / (1 - a[0])
