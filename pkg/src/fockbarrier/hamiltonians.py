"""Quantum operators in the truncated Fock basis and the matching classical
Hamiltonian: barrier models, displaced Fock states, energies, separatrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .core import ComplexAmplitude, Region, TruncationError

INVERTED_OSCILLATOR = "inverted-oscillator"
KERR_INVERTED = "kerr-inverted"


@dataclass(frozen=True)
class HamiltonianSpec:
    """Barrier model parameters; kerr_k is ignored for the plain inverted oscillator."""

    kind: str = INVERTED_OSCILLATOR
    epsilon2: float = 0.5
    kerr_k: float = 0.0
    n_max: int = 100

    def __post_init__(self) -> None:
        if self.kind not in (INVERTED_OSCILLATOR, KERR_INVERTED):
            raise ValueError(f"unknown hamiltonian kind {self.kind!r}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.kerr_k < 0:
            raise ValueError("kerr_k must be >= 0")
        if self.kind == KERR_INVERTED and self.kerr_k == 0:
            raise ValueError("kerr-inverted requires kerr_k > 0")
        if self.kind == INVERTED_OSCILLATOR and self.kerr_k != 0:
            object.__setattr__(self, "kerr_k", 0.0)

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class OperatorMatrix:
    dim: int
    entries: np.ndarray


@dataclass(frozen=True)
class FockState:
    """Complex coefficient vector over the truncated Fock basis."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(c.view(float))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def build_operator(spec: HamiltonianSpec) -> OperatorMatrix:
    """Fock-basis matrix: -epsilon2*sqrt((n+1)(n+2)) on the +-2 bands,
    plus the Kerr diagonal K*n*(n-1)."""
    dim = spec.dim
    h = np.zeros((dim, dim))
    n = np.arange(dim - 2)
    band = -spec.epsilon2 * np.sqrt((n + 1.0) * (n + 2.0))
    h[n, n + 2] = band
    h[n + 2, n] = band
    if spec.kerr_k:
        d = np.arange(dim, dtype=float)
        h[np.diag_indices(dim)] += spec.kerr_k * d * (d - 1.0)
    return OperatorMatrix(dim, h)


def classical_hamiltonian(spec: HamiltonianSpec, q, p):
    """H(q,p) = epsilon2*(p^2 - q^2) + (K/4)*(q^2 + p^2)^2; accepts arrays."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    h = spec.epsilon2 * (p * p - q * q)
    if spec.kerr_k:
        r2 = q * q + p * p
        h = h + 0.25 * spec.kerr_k * r2 * r2
    return h if h.ndim else float(h)


def classical_rhs(spec: HamiltonianSpec, q, p):
    """Hamilton's equations: (dq/dt, dp/dt) = (dH/dp, -dH/dq)."""
    two_e2 = 2.0 * spec.epsilon2
    if spec.kerr_k:
        kr2 = spec.kerr_k * (q * q + p * p)
        return two_e2 * p + p * kr2, two_e2 * q - q * kr2
    return two_e2 * p, two_e2 * q


def displaced_fock(alpha, n: int, n_max: int) -> FockState:
    """Coefficients of D(alpha)|n> from the closed-form Laguerre matrix
    elements, renormalized after a truncation-adequacy check."""
    a = complex(alpha)
    if n < 0 or n > n_max:
        raise ValueError("need 0 <= n <= n_max")
    c = np.zeros(n_max + 1, dtype=complex)
    if a == 0:
        c[n] = 1.0
        return FockState(c)
    m = np.arange(n_max + 1)
    x = abs(a) ** 2
    la = math.log(abs(a))
    th = np.angle(a)
    k = m - n
    pos = k >= 0
    kp = k[pos]
    c[pos] = (np.exp(0.5 * (gammaln(n + 1) - gammaln(m[pos] + 1)) + kp * la - x / 2)
              * eval_genlaguerre(n, kp, x) * np.exp(1j * kp * th))
    neg = ~pos
    kn = -k[neg]
    c[neg] = ((-1.0) ** kn
              * np.exp(0.5 * (gammaln(m[neg] + 1) - gammaln(n + 1)) + kn * la - x / 2)
              * eval_genlaguerre(m[neg], kn, x) * np.exp(-1j * kn * th))
    norm2 = float(np.sum(np.abs(c) ** 2))
    if norm2 < 1.0 - 1e-8:
        raise TruncationError(
            f"displaced_fock(n={n}, |alpha|={abs(a):.3f}) loses {1.0 - norm2:.3e} "
            f"of its norm at n_max={n_max}")
    return FockState(c / math.sqrt(norm2))


def _ladder_means(state: FockState) -> tuple[complex, complex, float]:
    """(<a>, <a^2>, <n>) from the coefficient vector."""
    c = state.coeffs
    nm = len(c) - 1
    m = np.arange(1, nm + 1)
    a_mean = complex(np.sum(np.conj(c[:-1]) * np.sqrt(m) * c[1:]))
    a2_mean = 0.0 + 0.0j
    if nm >= 2:
        m2 = np.arange(2, nm + 1)
        a2_mean = complex(np.sum(np.conj(c[:-2]) * np.sqrt(m2 * (m2 - 1.0)) * c[2:]))
    n_mean = float(np.sum(np.abs(c) ** 2 * np.arange(nm + 1)))
    return a_mean, a2_mean, n_mean


def position_moments(state: FockState) -> tuple[float, float]:
    """(<q>, Var q) by ladder algebra."""
    a, a2, nbar = _ladder_means(state)
    mean = math.sqrt(2.0) * a.real
    var = a2.real + nbar + 0.5 - mean * mean
    return mean, max(var, 0.0)


def momentum_moments(state: FockState) -> tuple[float, float]:
    """(<p>, Var p) by ladder algebra."""
    a, a2, nbar = _ladder_means(state)
    mean = math.sqrt(2.0) * a.imag
    var = -a2.real + nbar + 0.5 - mean * mean
    return mean, max(var, 0.0)


def mean_energy(spec: HamiltonianSpec, state: FockState) -> float:
    """<psi|H|psi> as a matrix quadratic form, sized by the state's basis."""
    c = state.coeffs
    sized = HamiltonianSpec(spec.kind, spec.epsilon2, spec.kerr_k, state.n_max)
    h = build_operator(sized).entries
    return float(np.real(np.conj(c) @ (h @ c)))


def displaced_fock_energy(spec: HamiltonianSpec, alpha, n: int) -> float:
    """Closed-form mean energy of D(alpha)|n>:
    -2*eps2*Re(alpha^2) + K*(n(n-1) + 4n|alpha|^2 + |alpha|^4)."""
    a = complex(alpha)
    e = -2.0 * spec.epsilon2 * (a * a).real
    if spec.kerr_k:
        x = abs(a) ** 2
        e += spec.kerr_k * (n * (n - 1.0) + 4.0 * n * x + x * x)
    return e


def energy_variance(spec: HamiltonianSpec, state: FockState) -> float:
    """sqrt(<H^2> - <H>^2), evaluated in a basis enlarged by the operator
    bandwidth so the quadratic form is exact for the truncated state."""
    c = state.coeffs
    dim = len(c)
    tail = max(1, dim // 10)
    tail_amp = float(np.max(np.abs(c[-tail:])))
    if tail_amp > 1e-8:
        raise TruncationError(
            f"state tail amplitude {tail_amp:.3e} too large for a reliable variance")
    big = HamiltonianSpec(spec.kind, spec.epsilon2, spec.kerr_k, (dim - 1) + 4)
    h = build_operator(big).entries
    cb = np.zeros(big.dim, dtype=complex)
    cb[:dim] = c
    hc = h @ cb
    e1 = float(np.real(np.conj(cb) @ hc))
    e2 = float(np.real(np.conj(hc) @ hc))
    return math.sqrt(max(e2 - e1 * e1, 0.0))


@dataclass(frozen=True)
class Separatrix:
    """Level set H(q,p)=0 of the Kerr barrier with its landmarks."""

    spec: HamiltonianSpec
    wells: tuple[float, float]
    outer_crossings: tuple[float, float]

    def level(self, q, p):
        return classical_hamiltonian(self.spec, q, p)

    def p_edge_sq(self, q):
        return _p_edge_sq(self.spec, q, 0.0)

    def p_edge(self, q):
        return np.sqrt(np.maximum(self.p_edge_sq(q), 0.0))


def separatrix(spec: HamiltonianSpec) -> Separatrix:
    if spec.kerr_k == 0:
        raise ValueError(
            "no separatrix curve for the plain inverted oscillator; its "
            "separatrices are the straight lines p = +-q")
    well = math.sqrt(2.0 * spec.epsilon2 / spec.kerr_k)
    cross = math.sqrt(4.0 * spec.epsilon2 / spec.kerr_k)
    return Separatrix(spec, (-well, well), (-cross, cross))


def _p_edge_sq(spec: HamiltonianSpec, q, level: float):
    """p^2 on the H(q,p)=level curve (single nonnegative root); negative
    values mean the whole p-row lies on one side of the level."""
    q = np.asarray(q, dtype=float)
    e2 = spec.epsilon2
    if spec.kerr_k == 0:
        out = q * q + level / e2
        return out if out.ndim else float(out)
    k = spec.kerr_k
    disc = e2 * e2 + 2.0 * k * e2 * q * q + k * level
    out = np.where(disc >= 0.0,
                   (2.0 / k) * (np.sqrt(np.maximum(disc, 0.0)) - (e2 + 0.5 * k * q * q)),
                   -1.0)
    return out if out.ndim else float(out)


def _energy_intervals(spec: HamiltonianSpec, level: float, above: bool) -> Callable:
    def intervals(q: float) -> list[tuple[float, float]]:
        u = _p_edge_sq(spec, q, level)
        if u <= 0.0:
            # row entirely on one side; H grows with p^2, so the p=0 value is
            # the row minimum and u == 0 (curve touching the row only at p=0)
            # leaves all p != 0 above the level
            row_above = classical_hamiltonian(spec, q, 0.0) >= level
            full = [(-math.inf, math.inf)]
            return full if row_above == above else []
        pe = math.sqrt(u)
        if above:
            return [(-math.inf, -pe), (pe, math.inf)]
        return [(-pe, pe)]

    return intervals


def region_energy_above(spec: HamiltonianSpec, level: float = 0.0) -> Region:
    """Region {H(q,p) > level}."""
    return Region(
        "energy-above",
        lambda q, p: classical_hamiltonian(spec, q, p) > level,
        p_intervals=_energy_intervals(spec, level, above=True))


def region_energy_below(spec: HamiltonianSpec, level: float = 0.0) -> Region:
    """Region {H(q,p) < level}."""
    return Region(
        "energy-below",
        lambda q, p: classical_hamiltonian(spec, q, p) < level,
        p_intervals=_energy_intervals(spec, level, above=False))


def region_omega_r(spec: HamiltonianSpec) -> Region:
    """Classically forbidden right lobe {H < 0, q > 0}; needs K > 0."""
    if spec.kerr_k <= 0:
        raise ValueError("omega_r requires a Kerr spec with K > 0")
    sep = separatrix(spec)
    return Region(
        "omega-r",
        lambda q, p: q > 0 and classical_hamiltonian(spec, q, p) < 0,
        q_bounds=(0.0, sep.outer_crossings[1]),
        p_intervals=_energy_intervals(spec, 0.0, above=False))
