"""Shared phase-space types, quadrature rules, regions, and seeded RNG streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


class ConfigError(Exception):
    """Invalid configuration or preset input."""


class NumericError(Exception):
    """Numerical failure (eigensolver, integration, calibration)."""


class TruncationError(NumericError):
    """Fock-basis truncation is inadequate for the requested operation."""


class DomainError(NumericError):
    """A grid does not cover the support of the state it must represent."""


class CalibrationError(NumericError):
    """Energy calibration could not bracket a root."""


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class ComplexAmplitude:
    """Displacement amplitude alpha; alpha = (q_mean + i p_mean)/sqrt(2)."""

    re: float
    im: float = 0.0

    def __post_init__(self) -> None:
        _require_finite("ComplexAmplitude", self.re, self.im)

    @classmethod
    def from_means(cls, q_mean: float, p_mean: float) -> "ComplexAmplitude":
        return cls(q_mean / math.sqrt(2.0), p_mean / math.sqrt(2.0))

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    @property
    def q_mean(self) -> float:
        return math.sqrt(2.0) * self.re

    @property
    def p_mean(self) -> float:
        return math.sqrt(2.0) * self.im


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self) -> None:
        _require_finite("PhasePoint", self.q, self.p)


@dataclass
class PhaseGrid:
    """Uniform rectangular (q,p) grid; values (when set) are row-major over (q,p)."""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    n_q: int
    n_p: int
    values: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (self.q_min < self.q_max and self.p_min < self.p_max):
            raise ValueError("grid bounds must satisfy q_min<q_max and p_min<p_max")
        if self.n_q < 2 or self.n_p < 2:
            raise ValueError("grids need at least 2 points per axis")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float).reshape(-1)
            if self.values.size != self.n_q * self.n_p:
                raise ValueError("values length must equal n_q*n_p")

    def q_nodes(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_q)

    def p_nodes(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def h_q(self) -> float:
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def h_p(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    def field(self) -> np.ndarray:
        """Values as an (n_q, n_p) array."""
        if self.values is None:
            raise ValueError("grid has no values")
        return self.values.reshape(self.n_q, self.n_p)

    def with_values(self, values: np.ndarray) -> "PhaseGrid":
        return PhaseGrid(self.q_min, self.q_max, self.p_min, self.p_max,
                         self.n_q, self.n_p, np.asarray(values, dtype=float).reshape(-1))


@dataclass(frozen=True)
class Region:
    """Phase-space region: a pure predicate plus optional quadrature structure.

    q_bounds restricts q to [lo, hi] with full p-range rows.
    p_intervals(q) lists per-row p-intervals; rows outside get zero weight.
    Regions with neither are integrated by indicator masking (lower order).
    """

    kind: str
    predicate: Callable[[float, float], bool]
    q_bounds: tuple[float, float] | None = None
    p_intervals: Callable[[float], list[tuple[float, float]]] | None = None

    @classmethod
    def half_line(cls, q1: float) -> "Region":
        return cls("half-line", lambda q, p: q > q1, q_bounds=(q1, math.inf))

    @classmethod
    def box(cls, q1: float, q2: float) -> "Region":
        if not q1 < q2:
            raise ValueError("box needs q1 < q2")
        return cls("box", lambda q, p: q1 < q < q2, q_bounds=(q1, q2))

    @classmethod
    def everywhere(cls) -> "Region":
        return cls("all", lambda q, p: True, q_bounds=(-math.inf, math.inf))


@dataclass(frozen=True)
class RngStream:
    """Deterministic RNG handle; (seed, stream_id) fixes the sample sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> Generator:
        return Generator(Philox(SeedSequence((self.seed, self.stream_id))))


def sample_uniform(stream: RngStream, low: float, high: float, n: int) -> np.ndarray:
    return stream.generator().uniform(low, high, size=n)


def sample_gaussian(stream: RngStream, mean: float, sigma: float, n: int) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return stream.generator().normal(mean, sigma, size=n)


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n uniform nodes at spacing h.

    Even interval counts get a 3/8 rule on the last three intervals so the
    order stays 4 on any grid. Two nodes fall back to the trapezoid rule.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if n == 2:
        return np.array([0.5, 0.5]) * h
    w = np.zeros(n)
    if n % 2 == 1:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-2:2] = 2.0
        w *= h / 3.0
        return w
    if n == 4:
        return np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    w[: n - 3] = simpson_weights(n - 3, h)
    w[n - 4 :] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


def _quad_cell(fm: float, f0: float, fp: float, h: float, x0: float,
               a: float, b: float) -> float:
    # integral over [a,b] of the parabola through (x0-h,fm), (x0,f0), (x0+h,fp)
    c1 = (fp - fm) / (2.0 * h)
    c2 = (fp - 2.0 * f0 + fm) / (2.0 * h * h)

    def prim(x: float) -> float:
        d = x - x0
        return f0 * d + 0.5 * c1 * d * d + (c2 / 3.0) * d * d * d

    return prim(b) - prim(a)


def integrate_subrange(f: np.ndarray, x: np.ndarray, a: float, b: float) -> float:
    """Integral of a uniformly sampled field over [a,b] clipped to the grid.

    Interior nodes use composite Simpson; partial edge cells use the local
    quadratic interpolant, keeping the rule order-4 for arbitrary bounds.
    """
    n = len(x)
    h = (x[-1] - x[0]) / (n - 1)
    a = max(a, float(x[0]))
    b = min(b, float(x[-1]))
    if b <= a:
        return 0.0
    i0 = int(math.ceil((a - x[0]) / h - 1e-9))
    i1 = int(math.floor((b - x[0]) / h + 1e-9))
    i0 = min(max(i0, 0), n - 1)
    i1 = min(max(i1, 0), n - 1)

    def cell(center: int, lo: float, hi: float) -> float:
        c = min(max(center, 1), n - 2)
        return _quad_cell(f[c - 1], f[c], f[c + 1], h, float(x[c]), lo, hi)

    if i1 < i0:
        return cell(i0, a, b)
    total = 0.0
    if a < x[i0]:
        total += cell(i0, a, float(x[i0]))
    if b > x[i1]:
        total += cell(i1, float(x[i1]), b)
    m = i1 - i0 + 1
    if m == 1:
        return total
    if m == 2:
        # single interval: integrate the quadratic centered on its left node
        return total + cell(i0, float(x[i0]), float(x[i1]))
    return total + float(simpson_weights(m, h) @ f[i0 : i1 + 1])


def integrate_2d(grid: PhaseGrid) -> float:
    """Composite Simpson quadrature of the grid's field over the full domain."""
    f = grid.field()
    wq = simpson_weights(grid.n_q, grid.h_q)
    wp = simpson_weights(grid.n_p, grid.h_p)
    # associate as wq @ (f @ wp) so the all-true region path, which integrates
    # p-rows first, reduces in the identical order and matches bit for bit
    return float(wq @ (f @ wp))


def integrate_region(grid: PhaseGrid, region: Region) -> float:
    """Quadrature of the grid's field restricted to a region.

    Half-line/box regions integrate exact q-subranges of the p-integrated
    rows; regions with per-row p-intervals integrate those subranges row by
    row; anything else falls back to indicator-masked weights.
    """
    f = grid.field()
    q = grid.q_nodes()
    p = grid.p_nodes()
    wq = simpson_weights(grid.n_q, grid.h_q)
    wp = simpson_weights(grid.n_p, grid.h_p)
    if region.p_intervals is not None:
        lo_q, hi_q = region.q_bounds if region.q_bounds else (-math.inf, math.inf)
        rows = np.zeros(grid.n_q)
        for i in range(grid.n_q):
            qi = float(q[i])
            if qi <= lo_q or qi >= hi_q:
                continue
            acc = 0.0
            for lo, hi in region.p_intervals(qi):
                acc += integrate_subrange(f[i], p, lo, hi)
            rows[i] = acc
        return float(wq @ rows)
    if region.q_bounds is not None:
        rows = f @ wp
        lo, hi = region.q_bounds
        return integrate_subrange(rows, q, lo, hi)
    mask = np.fromiter(
        (region.predicate(float(qi), float(pj)) for qi in q for pj in p),
        dtype=bool, count=grid.n_q * grid.n_p).reshape(grid.n_q, grid.n_p)
    return float(wq @ (f * mask) @ wp)
