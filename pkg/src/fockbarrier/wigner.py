"""Wigner fields and their diagnostics: dual construction routes, marginals,
region probabilities, negativity, forbidden-region volume, fringe and plateau
detectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .core import (DomainError, PhaseGrid, integrate_region, integrate_subrange,
                   simpson_weights)
from .hamiltonians import (FockState, HamiltonianSpec, position_moments,
                           region_energy_above, region_omega_r, separatrix)
from .evolution import hermite_functions

NEGATIVITY_FLOOR = 1e-8
FRINGE_RELATIVE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class WignerField:
    grid: PhaseGrid
    time: float
    source: str = ""


@dataclass(frozen=True)
class NegativityReport:
    delta: float
    time: float


@dataclass(frozen=True)
class FringeReport:
    n_sign_changes: int
    time: float


def _synthesize(state: FockState, nodes: np.ndarray) -> np.ndarray:
    return state.coeffs @ hermite_functions(state.n_max, nodes)


def wigner_from_state(state: FockState, grid: PhaseGrid, y_step: float = 0.05,
                      time: float = 0.0, source: str = "") -> WignerField:
    """W(q,p) by the autocorrelation route: trapezoid in y of
    psi(q+y) conj(psi(q-y)) e^{-2ipy} / pi on a shared psi lattice.

    The y-step is decoupled from the q spacing (refinement factor m), so coarse-q
    probe grids stay valid; y_step caps the quadrature step and must keep the
    aliasing images pi/y_step outside the state's momentum band.
    """
    q = grid.q_nodes()
    p = grid.p_nodes()
    m = max(1, int(math.ceil(grid.h_q / y_step - 1e-12)))
    h_psi = grid.h_q / m
    y_half = 0.5 * (grid.q_max - grid.q_min)
    big_m = int(math.ceil(y_half / h_psi))
    ext = grid.q_min + h_psi * np.arange(-big_m, (grid.n_q - 1) * m + big_m + 1)
    psi = _synthesize(state, ext)
    edge = max(abs(psi[big_m]), abs(psi[big_m + (grid.n_q - 1) * m]))
    if edge > 1e-8:
        raise DomainError(f"|psi| = {edge:.3e} at the grid q-boundary; widen the domain")
    idx = (np.arange(grid.n_q) * m + big_m)[:, None]
    k = np.arange(big_m + 1)[None, :]
    acf = psi[idx + k] * np.conj(psi[idx - k])
    y = h_psi * np.arange(1, big_m + 1)
    phase = np.exp(-2j * np.outer(y, p))
    w = (h_psi / math.pi) * (acf[:, :1].real + 2.0 * (acf[:, 1:] @ phase).real)
    return WignerField(grid.with_values(w), time, source)


def wigner_kernel_sum(state: FockState, grid: PhaseGrid, time: float = 0.0,
                      source: str = "") -> WignerField:
    """W(q,p) by the closed-form Laguerre-Gaussian cross-kernel expansion.

    Cost grows with n_max^2 times the grid size; intended as the slow
    reference route for cross-checking wigner_from_state.
    """
    c = state.coeffs
    qq, pp = np.meshgrid(grid.q_nodes(), grid.p_nodes(), indexing="ij")
    r2 = qq * qq + pp * pp
    z = math.sqrt(2.0) * (qq - 1j * pp)
    base = np.exp(-r2) / math.pi
    w = np.zeros_like(qq)
    for mi in range(len(c)):
        if abs(c[mi]) < 1e-15:
            continue
        for ni in range(mi + 1):
            if abs(c[ni]) < 1e-15:
                continue
            d = mi - ni
            amp = math.exp(0.5 * (gammaln(ni + 1) - gammaln(mi + 1)))
            ker = ((-1.0) ** ni) * amp * z ** d * eval_genlaguerre(ni, d, 2.0 * r2) * base
            rho = c[mi] * np.conj(c[ni])
            w += (rho * ker).real if d == 0 else 2.0 * (rho * ker).real
    return WignerField(grid.with_values(w), time, source)


def fock_lobe_radius(n: int) -> float:
    """Radius of the outermost negative-lobe boundary of the Wigner function
    of |n>: the largest root r of L_n(2 r^2). W is positive outside it."""
    if n == 0:
        return 0.0
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    roots = np.polynomial.laguerre.lagroots(coeffs)
    return math.sqrt(float(np.max(roots.real)) / 2.0)


def wigner_flow_frame_box(state_t: FockState, t: float, center: tuple[float, float],
                          half: float, hz: float, y_step: float = 0.08,
                          source: str = "") -> WignerField:
    """W_t evaluated along the inverted-oscillator flow: values are
    W(flow_t(z)) for z on a uniform box around `center` (initial-frame
    coordinates). The flow has unit Jacobian, so integrals of the returned
    field over z equal the corresponding phase-space integrals at time t.

    state_t must already be evolved to time t under the inverted oscillator.
    The p spacing is cosh(t)/sinh(t) times hz so every wavefunction argument
    lands on one shared lattice; the y quadrature step stays near y_step
    independently of that lattice.
    """
    ch, sh = math.cosh(t), math.sinh(t)
    nx = 2 * int(round(half / hz)) + 1
    x = center[0] + hz * (np.arange(nx) - nx // 2)
    q_mean, q_var = position_moments(state_t)
    sig = math.sqrt(max(q_var, 0.25))

    if sh == 0.0:
        r = max(1, int(round(y_step / hz)))
        ystep = r * hz
        pz = center[1] + hz * (np.arange(nx) - nx // 2)
        ymax = abs(q_mean - x[0]) + 8.0 * sig + 6.0
        m = int(math.ceil(ymax / ystep))
        mr = m * r
        ext = x[0] + hz * np.arange(-mr, nx + mr)
        psi = _synthesize(state_t, ext)
        k = np.arange(m + 1)
        idx = np.arange(nx)[:, None]
        acf = psi[idx + mr + (k * r)[None, :]] * np.conj(psi[idx + mr - (k * r)[None, :]])
        phase = np.exp(-2j * np.outer(ystep * k[1:], pz))
        w = (ystep / math.pi) * (acf[:, :1].real + 2.0 * (acf[:, 1:] @ phase).real)
        grid = PhaseGrid(x[0], x[-1], pz[0], pz[-1], nx, nx, w)
        return WignerField(grid, t, source)

    hy = ch * hz
    r = max(1, int(round(y_step / hy)))
    ystep = r * hy
    hp = ch * hz / sh
    npz = 2 * int(math.ceil(half / hp)) + 1
    pz = center[1] + hp * (np.arange(npz) - npz // 2)
    base = x[0] * ch + pz[0] * sh
    ymax = abs(q_mean - base) + 8.0 * sig + 6.0
    m = int(math.ceil(ymax / ystep))
    mr = m * r
    n_diag = nx + npz - 1
    ext = base + hy * np.arange(-mr, n_diag + mr)
    psi = _synthesize(state_t, ext)
    k = np.arange(m + 1)
    diag = np.arange(n_diag)[:, None]
    acf = psi[diag + mr + (k * r)[None, :]] * np.conj(psi[diag + mr - (k * r)[None, :]])
    y = ystep * k
    u = np.exp(-2j * np.outer(x * sh, y[1:]))
    v = np.exp(-2j * np.outer(pz * ch, y[1:]))
    w = np.empty((nx, npz))
    for j in range(npz):
        block = acf[j : j + nx, 1:] * u
        w[:, j] = (ystep / math.pi) * (acf[j : j + nx, 0].real + 2.0 * (block @ v[j]).real)
    grid = PhaseGrid(x[0], x[-1], pz[0], pz[-1], nx, npz, w)
    return WignerField(grid, t, source)


def marginal_q(field: WignerField) -> np.ndarray:
    """P(q) = integral of W over p, per q-node."""
    grid = field.grid
    wp = simpson_weights(grid.n_p, grid.h_p)
    return grid.field() @ wp


def transmission_wigner(field: WignerField, q1: float = 0.0,
                        q2: float = math.inf) -> float:
    """Integral of W over the strip q in (q1, q2), full p-range."""
    grid = field.grid
    rows = marginal_q(field)
    return integrate_subrange(rows, grid.q_nodes(), q1, q2)


def positive_energy_fraction(field: WignerField, spec: HamiltonianSpec) -> float:
    """Initial-Wigner mass on {H(q,p) > 0}; a semiclassical reference, not an
    exact quantum probability. Requires a t=0 field."""
    if field.time != 0.0:
        raise ValueError("positive_energy_fraction is defined on the t=0 field")
    return integrate_region(field.grid, region_energy_above(spec))


def negativity(field: WignerField) -> NegativityReport:
    """delta = integral of (|W| - W), counting only values below the grid floor."""
    grid = field.grid
    w = grid.field()
    neg = np.where(w < -NEGATIVITY_FLOOR, -2.0 * w, 0.0)
    wq = simpson_weights(grid.n_q, grid.h_q)
    wp = simpson_weights(grid.n_p, grid.h_p)
    return NegativityReport(float(wq @ neg @ wp), field.time)


def forbidden_volume(field: WignerField, spec: HamiltonianSpec) -> float:
    """Integral of |W| over the forbidden right lobe {H<0, q>0}."""
    if spec.kerr_k <= 0:
        raise ValueError("forbidden_volume requires a Kerr spec with K > 0")
    grid = field.grid
    return integrate_region(grid.with_values(np.abs(grid.field())),
                            region_omega_r(spec))


def fringe_count(field: WignerField, spec: HamiltonianSpec) -> FringeReport:
    """Sign changes of W(q, 0) across the forbidden-lobe q-window, counting
    only values above a scale-free noise threshold."""
    if spec.kerr_k <= 0:
        raise ValueError("fringe_count requires a Kerr spec with K > 0")
    grid = field.grid
    p = grid.p_nodes()
    j0 = int(np.argmin(np.abs(p)))
    if abs(p[j0]) > 1e-9 * max(1.0, abs(grid.p_max)):
        raise ValueError("grid must contain the p = 0 slice")
    sl = grid.field()[:, j0]
    eps = FRINGE_RELATIVE_THRESHOLD * float(np.max(np.abs(sl)))
    q = grid.q_nodes()
    cross = separatrix(spec).outer_crossings[1]
    window = (q > 0.0) & (q < cross)
    vals = sl[window]
    vals = vals[np.abs(vals) > eps]
    if len(vals) < 2:
        return FringeReport(0, field.time)
    flips = int(np.sum(np.sign(vals[:-1]) != np.sign(vals[1:])))
    return FringeReport(flips, field.time)


def detect_plateaus(series, values=None, theta: float = 0.05,
                    min_samples: int = 3) -> list[tuple[float, float]]:
    """Maximal intervals where |dP/dt| <= theta * max|dP/dt|.

    Accepts (times, values) arrays or any object with .times and .estimates.
    Needs at least 5 uniformly spaced samples; runs shorter than min_samples
    are discarded.
    """
    if values is None:
        times = np.asarray(series.times, dtype=float)
        vals = np.asarray(series.estimates, dtype=float)
    else:
        times = np.asarray(series, dtype=float)
        vals = np.asarray(values, dtype=float)
    if len(times) < 5:
        raise ValueError("plateau detection needs at least 5 samples")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-30):
        raise ValueError("plateau detection needs a uniform time grid")
    deriv = np.gradient(vals, float(dt[0]))
    top = float(np.max(np.abs(deriv)))
    flat = np.abs(deriv) <= theta * top
    out: list[tuple[float, float]] = []
    i = 0
    n = len(flat)
    while i < n:
        if not flat[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flat[j + 1]:
            j += 1
        if j - i + 1 >= min_samples:
            out.append((float(times[i]), float(times[j])))
        i = j + 1
    return out


def write_grid_dump(field: WignerField, path) -> None:
    """Text dump: `# wigner t=<t> qmin qmax pmin pmax nq np`, then `q p W` rows."""
    grid = field.grid
    q = grid.q_nodes()
    p = grid.p_nodes()
    w = grid.field()
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# wigner t={field.time:.17g} {grid.q_min:.17g} {grid.q_max:.17g} "
                 f"{grid.p_min:.17g} {grid.p_max:.17g} {grid.n_q} {grid.n_p}\n")
        for i in range(grid.n_q):
            qi = q[i]
            row = w[i]
            for j in range(grid.n_p):
                fh.write(f"{qi:.17g} {p[j]:.17g} {row[j]:.17g}\n")


def read_grid_dump(path) -> WignerField:
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "wigner"] or not header[2].startswith("t="):
            raise ValueError(f"not a wigner grid dump: {path}")
        t = float(header[2][2:])
        qmin, qmax, pmin, pmax = map(float, header[3:7])
        nq, n_p = int(header[7]), int(header[8])
        data = np.loadtxt(fh)
    if data.shape[0] != nq * n_p:
        raise ValueError(f"grid dump row count mismatch in {path}")
    grid = PhaseGrid(qmin, qmax, pmin, pmax, nq, n_p, data[:, 2])
    return WignerField(grid, t)
