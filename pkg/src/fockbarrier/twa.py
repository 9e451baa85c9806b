"""Truncated Wigner approximation: phase-space samplers for the initial
states, classical trajectory ensembles, and Monte Carlo transmission
estimates with binomial error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import CalibrationError, ComplexAmplitude, RngStream
from .hamiltonians import HamiltonianSpec, classical_hamiltonian, classical_rhs

COHERENT_GAUSSIAN = "coherent-gaussian"
FOCK_RING = "fock-ring"

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B5 - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                     -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class SamplerSpec:
    """Initial-state sampler: a Gaussian cloud for coherent states or a
    Gaussian-width ring for displaced number states (n >= 1)."""

    kind: str
    alpha: ComplexAmplitude
    n: int = 0
    n_samples: int = 10000

    def __post_init__(self) -> None:
        if self.kind not in (COHERENT_GAUSSIAN, FOCK_RING):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.n_samples < 100:
            raise ValueError("n_samples must be at least 100")
        if self.kind == FOCK_RING and self.n < 1:
            raise ValueError("fock-ring needs n >= 1; use coherent-gaussian for n = 0")
        if self.kind == COHERENT_GAUSSIAN and self.n != 0:
            raise ValueError("coherent-gaussian samples the n = 0 state only")


@dataclass
class TrajectoryEnsemble:
    q: np.ndarray
    p: np.ndarray
    time: float
    stream: RngStream

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")

    @property
    def n_samples(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class TransmissionSeries:
    times: np.ndarray
    estimates: np.ndarray
    sigmas: np.ndarray
    method: str


def sample_initial(sampler: SamplerSpec, stream: RngStream) -> TrajectoryEnsemble:
    rng = stream.generator()
    n = sampler.n_samples
    q0 = sampler.alpha.q_mean
    p0 = sampler.alpha.p_mean
    if sampler.kind == COHERENT_GAUSSIAN:
        q = rng.normal(q0, math.sqrt(0.5), n)
        p = rng.normal(p0, math.sqrt(0.5), n)
    else:
        s = rng.normal(sampler.n + 0.5, 0.5, n)
        while True:
            bad = s <= 0.0
            if not bad.any():
                break
            s[bad] = rng.normal(sampler.n + 0.5, 0.5, int(bad.sum()))
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        r = np.sqrt(2.0 * s)
        q = q0 + r * np.cos(theta)
        p = p0 + r * np.sin(theta)
    return TrajectoryEnsemble(q, p, 0.0, stream)


def calibrate_energy(spec: HamiltonianSpec, ensemble: TrajectoryEnsemble,
                     target: float) -> tuple[TrajectoryEnsemble, float]:
    """Rigid momentum shift that matches the ensemble-mean classical energy to
    `target`; returns the shifted ensemble and the offset."""

    def gap(dp: float) -> float:
        return float(np.mean(classical_hamiltonian(spec, ensemble.q,
                                                   ensemble.p + dp))) - target

    lo, hi = gap(-2.0), gap(2.0)
    if lo * hi > 0.0:
        raise CalibrationError(
            f"no momentum offset in [-2, 2] reaches mean energy {target:.6g}")
    dp = float(brentq(gap, -2.0, 2.0, xtol=1e-10))
    shifted = TrajectoryEnsemble(ensemble.q.copy(), ensemble.p + dp,
                                 ensemble.time, ensemble.stream)
    if abs(gap(dp)) > 1e-4:
        raise CalibrationError("calibration did not converge to 1e-4")
    return shifted, dp


def _rk_leg(spec: HamiltonianSpec, q: np.ndarray, p: np.ndarray, dt: float,
            rtol: float, atol: float, h0: float) -> tuple[np.ndarray, np.ndarray, float]:
    t, h = 0.0, min(h0, dt)
    kq = [None] * 7
    kp = [None] * 7
    while t < dt - 1e-15:
        h = min(h, dt - t)
        kq[0], kp[0] = classical_rhs(spec, q, p)
        for s in range(1, 7):
            qq, pp = q.copy(), p.copy()
            for j, a in enumerate(_A[s]):
                if a != 0.0:
                    qq += h * a * kq[j]
                    pp += h * a * kp[j]
            kq[s], kp[s] = classical_rhs(spec, qq, pp)
        q5 = q + h * sum(_B5[j] * kq[j] for j in range(7) if _B5[j] != 0.0)
        p5 = p + h * sum(_B5[j] * kp[j] for j in range(7) if _B5[j] != 0.0)
        eq = h * sum(_E[j] * kq[j] for j in range(7) if _E[j] != 0.0)
        ep = h * sum(_E[j] * kp[j] for j in range(7) if _E[j] != 0.0)
        sq = atol + rtol * np.maximum(np.abs(q), np.abs(q5))
        sp = atol + rtol * np.maximum(np.abs(p), np.abs(p5))
        err = float(np.sqrt(np.maximum((eq / sq) ** 2, (ep / sp) ** 2)).max())
        if err <= 1.0:
            t += h
            q, p = q5, p5
        h *= min(5.0, max(0.2, 0.9 * (1.0 / max(err, 1e-10)) ** 0.2))
    return q, p, h


def propagate(spec: HamiltonianSpec, ensemble: TrajectoryEnsemble, times,
              rtol: float = 1e-8, atol: float = 1e-12,
              method: str = "auto"):
    """Evolve the ensemble under the classical flow to each requested time.

    Returns one TrajectoryEnsemble per entry of `times` (a single ensemble for
    a scalar). method "auto" picks the hyperbolic closed form when there is no
    Kerr term and adaptive Runge-Kutta otherwise.
    """
    scalar = np.isscalar(times)
    targets = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(targets) <= 0.0):
        raise ValueError("times must be strictly increasing")
    if targets[0] < ensemble.time - 1e-15:
        raise ValueError("cannot propagate backwards")
    if method == "auto":
        method = "closed-form" if spec.kerr_k == 0.0 else "rk"
    if method == "closed-form" and spec.kerr_k != 0.0:
        raise ValueError("closed-form propagation only applies without a Kerr term")
    if method not in ("closed-form", "rk"):
        raise ValueError(f"unknown method {method!r}")

    out: list[TrajectoryEnsemble] = []
    if method == "closed-form":
        # dq/dt = 2 eps2 p, dp/dt = 2 eps2 q: hyperbolic rotation at rate 2 eps2
        for t in targets:
            dt = t - ensemble.time
            ch = math.cosh(2.0 * spec.epsilon2 * dt)
            sh = math.sinh(2.0 * spec.epsilon2 * dt)
            out.append(TrajectoryEnsemble(ensemble.q * ch + ensemble.p * sh,
                                          ensemble.p * ch + ensemble.q * sh,
                                          float(t), ensemble.stream))
    else:
        q, p = ensemble.q.copy(), ensemble.p.copy()
        t_now, h = ensemble.time, 1e-3
        for t in targets:
            if t > t_now + 1e-15:
                q, p, h = _rk_leg(spec, q, p, float(t) - t_now, rtol, atol, h)
                t_now = float(t)
            out.append(TrajectoryEnsemble(q.copy(), p.copy(), float(t),
                                          ensemble.stream))
    return out[0] if scalar else out


def estimate_transmission(ensemble: TrajectoryEnsemble,
                          q1: float = 0.0) -> tuple[float, float]:
    """Fraction of trajectories with q > q1 and its binomial standard error."""
    n = ensemble.n_samples
    est = float(np.mean(ensemble.q > q1))
    return est, math.sqrt(est * (1.0 - est) / n)


def twa_series(spec: HamiltonianSpec, sampler: SamplerSpec, stream: RngStream,
               times, target_energy: float | None = None,
               rtol: float = 1e-8, method: str = "auto") -> TransmissionSeries:
    """Sample, optionally calibrate the mean energy, propagate, and estimate
    the transmitted fraction at each time."""
    targets = np.asarray(times, dtype=float)
    ens = sample_initial(sampler, stream)
    if target_energy is not None:
        ens, _ = calibrate_energy(spec, ens, target_energy)
    used = "closed-form" if (method == "auto" and spec.kerr_k == 0.0) else (
        "rk" if method == "auto" else method)
    est = np.empty(len(targets))
    sig = np.empty(len(targets))
    future = targets[targets > 1e-15]
    snaps = iter(propagate(spec, ens, future, rtol=rtol, method=method)
                 if len(future) else [])
    for i, t in enumerate(targets):
        frame = ens if t <= 1e-15 else next(snaps)
        est[i], sig[i] = estimate_transmission(frame)
    return TransmissionSeries(targets, est, sig, used)


def write_ensemble_csv(path, ensemble: TrajectoryEnsemble, note: str = "") -> None:
    """CSV dump of trajectory endpoints with the provenance comment line."""
    s = ensemble.stream
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# seed={s.seed} stream={s.stream_id} t={ensemble.time:.17g}"
                 + (f" spec={note}" if note else "") + "\n")
        fh.write("idx,q,p\n")
        for i in range(ensemble.n_samples):
            fh.write(f"{i},{ensemble.q[i]:.17g},{ensemble.p[i]:.17g}\n")
