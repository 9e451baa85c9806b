"""Closed-form inverted-oscillator baselines: hyperbolic flow, time-evolved
coherent Wigner function, and the error-function transmission law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhasePoint


@dataclass(frozen=True)
class CoherentIOBenchmark:
    """Initial coherent-state center (q0, p0) = (sqrt(2) Re alpha, sqrt(2) Im alpha)."""

    q0: float
    p0: float


def io_flow(q, p, t: float):
    """Hyperbolic flow (q,p) -> (q cosh t + p sinh t, p cosh t + q sinh t); accepts arrays."""
    ch, sh = math.cosh(t), math.sinh(t)
    return q * ch + p * sh, p * ch + q * sh


def io_flow_point(pt: PhasePoint, t: float) -> PhasePoint:
    q, p = io_flow(pt.q, pt.p, t)
    return PhasePoint(float(q), float(p))


def coherent_wigner_t(bench: CoherentIOBenchmark, q, p, t: float):
    """W(q,p,t) of an initial coherent state: the t=0 Gaussian pulled back
    through the inverse flow (Liouville transport)."""
    qb, pb = io_flow(np.asarray(q, float), np.asarray(p, float), -t)
    w = np.exp(-(qb - bench.q0) ** 2 - (pb - bench.p0) ** 2) / math.pi
    return w if w.ndim else float(w)


def transmission_argument(bench: CoherentIOBenchmark, t: float) -> float:
    """c(t) = (q0 cosh t + p0 sinh t) / sqrt(cosh^2 t + sinh^2 t)."""
    ch, sh = math.cosh(t), math.sinh(t)
    return (bench.q0 * ch + bench.p0 * sh) / math.sqrt(ch * ch + sh * sh)


def coherent_transmission(bench: CoherentIOBenchmark, t: float) -> float:
    """P(q>0, t) = (1 - erf(-c(t)))/2 for an initial coherent state."""
    return 0.5 * math.erfc(-transmission_argument(bench, t))


def coherent_transmission_asymptote(bench: CoherentIOBenchmark) -> float:
    """t -> infinity limit: c(t) -> (q0 + p0)/sqrt(2)."""
    return 0.5 * math.erfc(-(bench.q0 + bench.p0) / math.sqrt(2.0))
