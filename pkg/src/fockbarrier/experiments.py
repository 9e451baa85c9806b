"""Batch experiment runner: TOML configs, preset library, scenario
orchestration, CSV/grid-dump serialization, and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
import os
import time as _time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._version import __version__
from .analytic import CoherentIOBenchmark, coherent_transmission
from .core import (ComplexAmplitude, ConfigError, DomainError, NumericError,
                   PhaseGrid, RngStream)
from .evolution import (evolve, hermite_functions, make_propagator, tail_mass,
                        transmission_marginal)
from .hamiltonians import (HamiltonianSpec, INVERTED_OSCILLATOR, KERR_INVERTED,
                           classical_hamiltonian, displaced_fock,
                           displaced_fock_energy, energy_variance,
                           momentum_moments, position_moments)
from .twa import (COHERENT_GAUSSIAN, FOCK_RING, SamplerSpec, calibrate_energy,
                  estimate_transmission, propagate, sample_initial, twa_series,
                  write_ensemble_csv)
from .wigner import (WignerField, detect_plateaus, fock_lobe_radius,
                     forbidden_volume, fringe_count, marginal_q, negativity,
                     positive_energy_fraction, transmission_wigner,
                     wigner_flow_frame_box, wigner_from_state, write_grid_dump)

SCENARIOS = ("coherent-io", "fock-io", "fock-kerr", "energy-sweep",
             "fock-sweep", "forbidden-diagnostics")
OUTDIR_ENV = "FOCKBARRIER_OUT"


@dataclass
class ExperimentConfig:
    scenario: str
    hamiltonian: HamiltonianSpec
    states: list[tuple[int, ComplexAmplitude]]
    t_max: float
    dt: float
    n_samples: int
    seed: int
    grid: PhaseGrid | None = None
    outdir: str | None = None
    strict: bool = False
    extras: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    scenario: str
    config_hash: str
    version: str
    seed: int
    outputs: dict
    wall_clock_s: float
    truncation: dict

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "config_hash": self.config_hash,
                "version": self.version, "seed": self.seed,
                "outputs": self.outputs, "wall_clock_s": self.wall_clock_s,
                "truncation": self.truncation}

    def write(self, outdir) -> None:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        with open(Path(outdir) / "manifest.json", "w", newline="\n") as fh:
            fh.write(text + "\n")


# ---------------------------------------------------------------- config ----

def _need(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}: missing required field")
    return table[key]


def _num(table: dict, key: str, path: str, positive: bool = False) -> float:
    v = _need(table, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v!r}")
    return float(v)


def _int(table: dict, key: str, path: str, minimum: int | None = None) -> int:
    v = _need(table, key, path)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {v}")
    return v


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config file."""
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: invalid TOML: {exc}")
    return parse_config(data)


def parse_config(data: dict) -> ExperimentConfig:
    scenario = _need(data, "scenario", "config")
    if scenario not in SCENARIOS:
        raise ConfigError(f"config.scenario: unknown scenario {scenario!r}; "
                          f"choose one of {', '.join(SCENARIOS)}")

    ham = _need(data, "hamiltonian", "config")
    kind = _need(ham, "kind", "hamiltonian")
    try:
        spec = HamiltonianSpec(kind, _num(ham, "epsilon2", "hamiltonian", True),
                               float(ham.get("kerr_k", 0.0)),
                               _int(ham, "n_max", "hamiltonian", 1))
    except ValueError as exc:
        raise ConfigError(f"hamiltonian: {exc}")
    kerr_scenarios = ("fock-kerr", "energy-sweep", "fock-sweep",
                      "forbidden-diagnostics")
    if scenario in kerr_scenarios and spec.kind != KERR_INVERTED:
        raise ConfigError(f"hamiltonian.kind: scenario {scenario} needs "
                          f"{KERR_INVERTED} with kerr_k > 0")
    if scenario in ("coherent-io", "fock-io") and spec.kind != INVERTED_OSCILLATOR:
        raise ConfigError(f"hamiltonian.kind: scenario {scenario} needs "
                          f"{INVERTED_OSCILLATOR}")

    tgrid = _need(data, "time", "config")
    t_max = _num(tgrid, "t_max", "time", True)
    dt = _num(tgrid, "dt", "time", True)
    if t_max + 1e-12 < dt:
        raise ConfigError("time.t_max: empty time grid (t_max < dt)")
    # these scenarios run plateau detection on the transmission curve, which
    # refuses fewer than 5 samples; reject the config before any work happens
    if scenario in ("coherent-io", "fock-io", "fock-kerr"):
        n_times = int(math.floor(t_max / dt + 1e-9)) + 1
        if n_times < 5:
            raise ConfigError("time.t_max: plateau detection needs at least "
                              "5 time samples (t_max / dt >= 4)")

    twa_tab = _need(data, "twa", "config")
    n_samples = _int(twa_tab, "n_samples", "twa", 100)
    seed = _int(twa_tab, "seed", "twa", 0)

    states: list[tuple[int, ComplexAmplitude]] = []
    if scenario in ("coherent-io", "fock-io", "fock-kerr", "forbidden-diagnostics"):
        raw_states = _need(data, "states", "config")
        if not raw_states:
            raise ConfigError("config.states: at least one state is required")
        for i, st in enumerate(raw_states):
            n = _int(st, "n", f"states[{i}]", 0)
            if n > spec.n_max:
                raise ConfigError(f"states[{i}].n: exceeds hamiltonian.n_max")
            amp = ComplexAmplitude.from_means(_num(st, "q_mean", f"states[{i}]"),
                                              _num(st, "p_mean", f"states[{i}]"))
            states.append((n, amp))
        if scenario == "coherent-io" and (len(states) != 1 or states[0][0] != 0):
            raise ConfigError("config.states: coherent-io takes exactly one n=0 state")

    grid = None
    if "grid" in data:
        g = data["grid"]
        try:
            grid = PhaseGrid(_num(g, "q_min", "grid"), _num(g, "q_max", "grid"),
                             _num(g, "p_min", "grid"), _num(g, "p_max", "grid"),
                             _int(g, "n_q", "grid", 2), _int(g, "n_p", "grid", 2))
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}")
    elif scenario != "energy-sweep":
        raise ConfigError("config.grid: required for this scenario")

    extras = {}
    out_tab = data.get("output", {})
    extras["dump_states"] = list(out_tab.get("dump_states", []))
    extras["dump_times"] = [float(t) for t in out_tab.get("dump_times", [])]
    extras["negativity_times"] = [float(t) for t in out_tab.get("negativity_times", [])]
    extras["consistency_times"] = [float(t) for t in out_tab.get("consistency_times", [])]
    if "dump_grid" in out_tab:
        dg = out_tab["dump_grid"]
        if len(dg) != 6:
            raise ConfigError("output.dump_grid: expected "
                              "[q_min, q_max, p_min, p_max, n_q, n_p]")
        extras["dump_grid"] = PhaseGrid(float(dg[0]), float(dg[1]), float(dg[2]),
                                        float(dg[3]), int(dg[4]), int(dg[5]))
    if scenario == "energy-sweep":
        sw = _need(data, "sweep", "config")
        extras["n"] = _int(sw, "n", "sweep", 0)
        extras["q_mean"] = _num(sw, "q_mean", "sweep")
        extras["targets"] = [float(x) for x in _need(sw, "targets", "sweep")]
        if not extras["targets"]:
            raise ConfigError("sweep.targets: must be non-empty")
    if scenario == "fock-sweep":
        sw = _need(data, "sweep", "config")
        extras["q_mean"] = _num(sw, "q_mean", "sweep")
        extras["target_energy"] = _num(sw, "target_energy", "sweep")
        extras["n_list"] = [int(x) for x in _need(sw, "n_list", "sweep")]
        if not extras["n_list"]:
            raise ConfigError("sweep.n_list: must be non-empty")

    return ExperimentConfig(scenario, spec, states, t_max, dt, n_samples, seed,
                            grid, out_tab.get("dir"), bool(data.get("strict", False)),
                            extras, data)


def apply_overrides(cfg: ExperimentConfig, seed: int | None = None,
                    strict: bool | None = None) -> ExperimentConfig:
    if seed is not None:
        cfg.seed = int(seed)
    if strict:
        cfg.strict = True
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of the resolved config, excluding the output location."""
    data = json.loads(json.dumps(cfg.raw))
    data.setdefault("twa", {})["seed"] = cfg.seed
    data["strict"] = cfg.strict
    data.get("output", {}).pop("dir", None)
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def list_presets() -> list[str]:
    root = resources.files("fockbarrier") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    ref = resources.files("fockbarrier") / "presets" / f"{name}.toml"
    if not ref.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: "
                          + ", ".join(list_presets()))
    return ref.read_text()


def load_preset(name: str) -> ExperimentConfig:
    return parse_config(tomllib.loads(preset_text(name)))


# --------------------------------------------------------------- helpers ----

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _time_grid(cfg: ExperimentConfig) -> np.ndarray:
    n = int(math.floor(cfg.t_max / cfg.dt + 1e-9))
    return cfg.dt * np.arange(n + 1)


def _sampler_for(n: int, amp: ComplexAmplitude, n_samples: int) -> SamplerSpec:
    if n == 0:
        return SamplerSpec(COHERENT_GAUSSIAN, amp, 0, n_samples)
    return SamplerSpec(FOCK_RING, amp, n, n_samples)


def _probe_field(state, t: float, h_q: float):
    """Wigner field on a moment-fitted probe grid: coarse in q, fine in p,
    sized so the state's support and momentum band are covered."""
    q_mean, q_var = position_moments(state)
    p_mean, p_var = momentum_moments(state)
    sq, sp = math.sqrt(q_var), math.sqrt(p_var)
    p_half = 8.0 * sp + 2.0
    last_err = None
    # evanescent tails can outrun the variance-based width; widen on demand
    for margin in (3.0, 6.0, 12.0, 24.0):
        q_half = 9.5 * sq + margin
        n_q = 2 * int(math.ceil(q_half / h_q)) + 1
        n_p = 2 * int(math.ceil(p_half / 0.025)) + 1
        grid = PhaseGrid(q_mean - q_half, q_mean + q_half,
                         p_mean - p_half, p_mean + p_half, n_q, n_p)
        # aliasing images at pi/y_step must clear the grid band plus the
        # state's own momentum band
        y_step = min(0.05, math.pi / (2.0 * (abs(p_mean) + p_half) + 1.0))
        try:
            return wigner_from_state(state, grid, y_step=y_step, time=t)
        except DomainError as exc:
            last_err = exc
    raise last_err


def _dump_field(state, t: float, grid: PhaseGrid) -> WignerField:
    """Exact W on the requested window. The state's support may exceed the
    window in q, so the autocorrelation runs on a q-widened copy of the grid
    and the rows are cropped back to the window afterwards."""
    h = grid.h_q
    q_mean, q_var = position_moments(state)
    p_mean, p_var = momentum_moments(state)
    # scan outward from each window edge for the last point carrying amplitude
    probe = np.arange(0.0, 9.5 * math.sqrt(q_var) + 31.0, 0.5)
    amp_l = np.abs(state.coeffs @ hermite_functions(state.n_max,
                                                    grid.q_min - probe))
    amp_r = np.abs(state.coeffs @ hermite_functions(state.n_max,
                                                    grid.q_max + probe))

    def _needed(amp: np.ndarray) -> float:
        hot = np.nonzero(amp >= 1e-8)[0]
        return 0.0 if len(hot) == 0 else float(probe[hot[-1]]) + 1.0

    # aliasing images at pi/y_step must clear the window band plus the
    # state's own momentum band
    p_band = (max(abs(grid.p_min), abs(grid.p_max)) + abs(p_mean)
              + 8.0 * math.sqrt(p_var) + 1.0)
    y_step = min(0.05, math.pi / p_band)
    ext_l, ext_r = _needed(amp_l), _needed(amp_r)
    last_err = None
    for _ in range(4):
        k_l = int(math.ceil(ext_l / h))
        k_r = int(math.ceil(ext_r / h))
        wide = PhaseGrid(grid.q_min - k_l * h, grid.q_max + k_r * h,
                         grid.p_min, grid.p_max,
                         grid.n_q + k_l + k_r, grid.n_p)
        try:
            fld = wigner_from_state(state, wide, y_step=y_step, time=t)
        except DomainError as exc:
            last_err = exc
            ext_l += 4.0
            ext_r += 4.0
            continue
        w = fld.grid.field()[k_l:k_l + grid.n_q, :]
        return WignerField(grid.with_values(w), t, fld.source)
    raise last_err


def _write_marginal(path, state, grid: PhaseGrid) -> None:
    qn = grid.q_nodes()
    dens = np.abs(state.coeffs @ hermite_functions(state.n_max, qn)) ** 2
    _write_csv(path, ["q", "density"], list(zip(qn, dens)))


def _consistency_row(label, state, t, h_q, with_transmission):
    fieldw = _probe_field(state, t, h_q)
    qn = fieldw.grid.q_nodes()
    # pointwise reference density; support coverage is the probe's concern
    dens = np.abs(state.coeffs @ hermite_functions(state.n_max, qn)) ** 2
    sup = float(np.max(np.abs(marginal_q(fieldw) - dens)))
    p_marg = transmission_marginal(state)
    if with_transmission:
        p_wig = transmission_wigner(fieldw)
        return (label, t, sup, p_marg, p_wig, abs(p_marg - p_wig))
    return (label, t, sup, p_marg, "", "")


def _merge_trunc(trunc: dict, label: str, n_max: int, mass: float) -> None:
    entry = trunc.setdefault(label, {"n_max": n_max, "max_tail_mass": 0.0})
    entry["max_tail_mass"] = max(entry["max_tail_mass"], float(mass))
    entry["adequate"] = entry["max_tail_mass"] <= 1e-6


def _bisect_im_alpha(spec: HamiltonianSpec, n: int, q_mean: float,
                     target: float, context: str) -> float:
    """Im(alpha) in [0,4] solving the closed-form mean energy, by bisection."""
    re = q_mean / math.sqrt(2.0)

    def f(im: float) -> float:
        return displaced_fock_energy(spec, complex(re, im), n) - target

    lo, hi = 0.0, 4.0
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if flo * fhi > 0.0:
        raise NumericError(f"{context}: no Im(alpha) in [0, 4] reaches "
                           f"mean energy {target:g}")
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------------- scenarios ----

def _scn_coherent_io(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    _, amp = cfg.states[0]
    times = _time_grid(cfg)
    bench = CoherentIOBenchmark(amp.q_mean, amp.p_mean)
    series = twa_series(spec, _sampler_for(0, amp, cfg.n_samples),
                        RngStream(cfg.seed, 0), times)
    p_ana = np.array([coherent_transmission(bench, t) for t in times])
    s0 = displaced_fock(amp, 0, spec.n_max)
    p0 = positive_energy_fraction(wigner_from_state(s0, cfg.grid), spec)
    _write_csv(outdir / "transmission.csv",
               ["t", "P_twa", "sigma_twa", "P_analytic", "P0_reference"],
               [(t, series.estimates[i], series.sigmas[i], p_ana[i], p0)
                for i, t in enumerate(times)])
    _write_csv(outdir / "plateaus.csv", ["state", "t_start", "t_end"],
               [(0, a, b) for a, b in detect_plateaus(times, p_ana)])
    trunc: dict = {}
    _merge_trunc(trunc, "n0", spec.n_max, tail_mass(s0))
    return ["transmission.csv", "plateaus.csv"], trunc


def _scn_fock_io(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    prop = make_propagator(spec)
    times = _time_grid(cfg)
    ex = cfg.extras
    files: list[str] = []
    trunc: dict = {}
    neg_rows = []
    plateau_rows = []
    cons_rows = []
    for n, amp in cfg.states:
        label = f"n{n}"
        s0 = displaced_fock(amp, n, spec.n_max)
        _merge_trunc(trunc, label, spec.n_max, tail_mass(s0))
        p0 = positive_energy_fraction(wigner_from_state(s0, cfg.grid), spec)
        p_exact = np.empty(len(times))
        for i, t in enumerate(times):
            st = evolve(prop, s0, float(t), strict=cfg.strict)
            _merge_trunc(trunc, label, spec.n_max, tail_mass(st))
            p_exact[i] = transmission_marginal(st)
        series = twa_series(spec, _sampler_for(n, amp, cfg.n_samples),
                            RngStream(cfg.seed, n), times)
        name = f"transmission_n{n}.csv"
        _write_csv(outdir / name,
                   ["t", "P_exact", "P_twa", "sigma_twa", "P0_reference"],
                   [(t, p_exact[i], series.estimates[i], series.sigmas[i], p0)
                    for i, t in enumerate(times)])
        files.append(name)
        for a, b in detect_plateaus(times, p_exact):
            plateau_rows.append((n, a, b))
        half = fock_lobe_radius(n) + 1.2
        for t in ex["negativity_times"]:
            st = evolve(prop, s0, t, strict=cfg.strict)
            fld = wigner_flow_frame_box(st, t, (amp.q_mean, amp.p_mean),
                                        half, 0.01)
            neg_rows.append((t, n, negativity(fld).delta))
        for t in ex["consistency_times"]:
            st = evolve(prop, s0, t, strict=cfg.strict)
            # the transmission cross-check needs a q-resolution the late-time
            # spread makes disproportionately expensive; keep it to the early
            # snapshots and report the sup-norm check everywhere
            with_p = t <= 0.5 + 1e-9
            cons_rows.append(_consistency_row(label, st, t,
                                              0.04 if with_p else 0.5, with_p))
    neg_rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(outdir / "negativity.csv", ["t", "n", "delta"], neg_rows)
    _write_csv(outdir / "plateaus.csv", ["state", "t_start", "t_end"], plateau_rows)
    _write_csv(outdir / "consistency.csv",
               ["state", "t", "marginal_sup_err", "P_marginal", "P_wigner",
                "abs_diff"], cons_rows)
    files += ["negativity.csv", "plateaus.csv", "consistency.csv"]
    dump_grid = ex.get("dump_grid", cfg.grid)
    for n, amp in cfg.states:
        if n not in ex["dump_states"]:
            continue
        s0 = displaced_fock(amp, n, spec.n_max)
        # same stream as the transmission series, so the dumped points are
        # the ones behind the curves
        ens = sample_initial(_sampler_for(n, amp, cfg.n_samples),
                             RngStream(cfg.seed, n))
        for t in ex["dump_times"]:
            st = evolve(prop, s0, t, strict=cfg.strict) if t else s0
            fld = _dump_field(st, t, dump_grid)
            name = f"wigner_n{n}_t{t:g}.txt"
            write_grid_dump(fld, outdir / name)
            files.append(name)
            name = f"marginal_n{n}_t{t:g}.csv"
            _write_marginal(outdir / name, st, dump_grid)
            files.append(name)
            frame = propagate(spec, ens, t) if t else ens
            name = f"ensemble_n{n}_t{t:g}.csv"
            write_ensemble_csv(outdir / name, frame, config_hash(cfg))
            files.append(name)
    return files, trunc


def _scn_fock_kerr(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    prop = make_propagator(spec)
    times = _time_grid(cfg)
    ex = cfg.extras
    files: list[str] = []
    trunc: dict = {}
    neg_rows = []
    plateau_rows = []
    cons_rows = []
    dump_grid = ex.get("dump_grid", cfg.grid)
    for n, amp in cfg.states:
        label = f"n{n}"
        s0 = displaced_fock(amp, n, spec.n_max)
        _merge_trunc(trunc, label, spec.n_max, tail_mass(s0))
        p0 = positive_energy_fraction(wigner_from_state(s0, cfg.grid), spec)
        p_exact = np.empty(len(times))
        for i, t in enumerate(times):
            st = evolve(prop, s0, float(t), strict=cfg.strict)
            _merge_trunc(trunc, label, spec.n_max, tail_mass(st))
            p_exact[i] = transmission_marginal(st)
        target = displaced_fock_energy(spec, amp, n)
        series = twa_series(spec, _sampler_for(n, amp, cfg.n_samples),
                            RngStream(cfg.seed, n), times, target_energy=target)
        name = f"transmission_n{n}.csv"
        _write_csv(outdir / name,
                   ["t", "P_exact", "P_twa", "sigma_twa", "P0_reference"],
                   [(t, p_exact[i], series.estimates[i], series.sigmas[i], p0)
                    for i, t in enumerate(times)])
        files.append(name)
        for a, b in detect_plateaus(times, p_exact):
            plateau_rows.append((n, a, b))
        for t in ex["negativity_times"]:
            st = evolve(prop, s0, t, strict=cfg.strict)
            fld = wigner_from_state(st, cfg.grid, time=t)
            neg_rows.append((t, n, negativity(fld).delta))
        for t in ex["consistency_times"]:
            st = evolve(prop, s0, t, strict=cfg.strict)
            with_p = t <= 1.6
            cons_rows.append(_consistency_row(label, st, t,
                                              0.04 if with_p else 0.5, with_p))
        if n in ex["dump_states"]:
            for t in ex["dump_times"]:
                st = evolve(prop, s0, t, strict=cfg.strict)
                fld = _dump_field(st, t, dump_grid)
                name = f"wigner_n{n}_t{t:g}.txt"
                write_grid_dump(fld, outdir / name)
                files.append(name)
                name = f"marginal_n{n}_t{t:g}.csv"
                _write_marginal(outdir / name, st, dump_grid)
                files.append(name)
    neg_rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(outdir / "negativity.csv", ["t", "n", "delta"], neg_rows)
    _write_csv(outdir / "plateaus.csv", ["state", "t_start", "t_end"], plateau_rows)
    _write_csv(outdir / "consistency.csv",
               ["state", "t", "marginal_sup_err", "P_marginal", "P_wigner",
                "abs_diff"], cons_rows)
    files += ["negativity.csv", "plateaus.csv", "consistency.csv"]
    return files, trunc


def _scn_energy_sweep(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    prop = make_propagator(spec)
    ex = cfg.extras
    n = ex["n"]
    q_mean = ex["q_mean"]
    t_end = cfg.t_max
    rows = []
    trunc: dict = {}
    for k, target in enumerate(ex["targets"]):
        if target > 0.0:
            rows.append((target, "", "", "", "", "",
                         "skipped: mean energy above the barrier top"))
            continue
        im = _bisect_im_alpha(spec, n, q_mean, target, f"row {k}")
        amp = ComplexAmplitude(q_mean / math.sqrt(2.0), im)
        s0 = displaced_fock(amp, n, spec.n_max)
        st = evolve(prop, s0, t_end, strict=cfg.strict)
        _merge_trunc(trunc, f"row{k}", spec.n_max, tail_mass(st))
        p_exact = transmission_marginal(st)
        ens = sample_initial(_sampler_for(n, amp, cfg.n_samples),
                             RngStream(cfg.seed, k))
        ens, _ = calibrate_energy(spec, ens, target)
        ens = propagate(spec, ens, t_end)
        p_twa, sigma = estimate_transmission(ens)
        rows.append((target, amp.p_mean, p_exact, p_twa, sigma,
                     abs(p_exact - p_twa), ""))
    _write_csv(outdir / "sweep_energy.csv",
               ["target_E", "p_mean", "P_exact", "P_twa", "sigma_twa",
                "discrepancy", "note"], rows)
    return ["sweep_energy.csv"], trunc


def _scn_fock_sweep(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    prop = make_propagator(spec)
    ex = cfg.extras
    q_mean = ex["q_mean"]
    target = ex["target_energy"]
    t_end = cfg.t_max
    rows = []
    trunc: dict = {}
    for n in ex["n_list"]:
        im = _bisect_im_alpha(spec, n, q_mean, target, f"n={n}")
        amp = ComplexAmplitude(q_mean / math.sqrt(2.0), im)
        s0 = displaced_fock(amp, n, spec.n_max)
        sigma_h = energy_variance(spec, s0)
        p0 = positive_energy_fraction(wigner_from_state(s0, cfg.grid), spec)
        st = evolve(prop, s0, t_end, strict=cfg.strict)
        _merge_trunc(trunc, f"n{n}", spec.n_max, tail_mass(st))
        p_exact = transmission_marginal(st)
        ens = sample_initial(_sampler_for(n, amp, cfg.n_samples),
                             RngStream(cfg.seed, n))
        ens, _ = calibrate_energy(spec, ens, target)
        ens = propagate(spec, ens, t_end)
        p_twa, sigma = estimate_transmission(ens)
        rows.append((n, im, p_exact, p_twa, sigma, p0, sigma_h))
    _write_csv(outdir / "sweep_fock.csv",
               ["n", "im_alpha", "P_exact", "P_twa", "sigma_twa", "P0",
                "sigma_H"], rows)
    return ["sweep_fock.csv"], trunc


def _scn_forbidden(cfg: ExperimentConfig, outdir: Path):
    spec = cfg.hamiltonian
    prop = make_propagator(spec)
    times = _time_grid(cfg)
    rows = []
    trunc: dict = {}
    for n, amp in cfg.states:
        label = f"n{n}"
        s0 = displaced_fock(amp, n, spec.n_max)
        target = displaced_fock_energy(spec, amp, n)
        ens = sample_initial(_sampler_for(n, amp, cfg.n_samples),
                             RngStream(cfg.seed, n))
        ens, _ = calibrate_energy(spec, ens, target)
        h0 = classical_hamiltonian(spec, ens.q, ens.p)
        sub = (h0 < 0.0) & (ens.q < 0.0)
        n_sub = int(np.sum(sub))
        frames = [ens] + list(propagate(spec, ens, times[1:]))
        for t, frame in zip(times, frames):
            st = evolve(prop, s0, float(t), strict=cfg.strict)
            _merge_trunc(trunc, label, spec.n_max, tail_mass(st))
            fld = wigner_from_state(st, cfg.grid, time=float(t))
            vol = forbidden_volume(fld, spec)
            fr = fringe_count(fld, spec).n_sign_changes
            ht = classical_hamiltonian(spec, frame.q, frame.p)
            occ = float(np.sum(sub & (frame.q > 0.0) & (ht < 0.0)) / n_sub)
            rows.append((float(t), n, vol, fr, occ))
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(outdir / "forbidden.csv",
               ["t", "n", "volume", "fringes", "occupancy"], rows)
    return ["forbidden.csv"], trunc


_RUNNERS = {
    "coherent-io": _scn_coherent_io,
    "fock-io": _scn_fock_io,
    "fock-kerr": _scn_fock_kerr,
    "energy-sweep": _scn_energy_sweep,
    "fock-sweep": _scn_fock_sweep,
    "forbidden-diagnostics": _scn_forbidden,
}


# ------------------------------------------------------------------- run ----

def resolve_outdir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    if override:
        return Path(override)
    if cfg.outdir:
        return Path(cfg.outdir)
    env = os.environ.get(OUTDIR_ENV)
    if env:
        return Path(env) / cfg.scenario
    return Path("fockbarrier-out") / cfg.scenario


def run(cfg: ExperimentConfig, outdir=None) -> RunManifest:
    """Execute one scenario into a fresh output directory and write its
    manifest (config hash, version, per-file checksums, wall clock,
    truncation adequacy)."""
    out = Path(outdir) if outdir is not None else resolve_outdir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    if any(out.iterdir()):
        raise ConfigError(f"output directory not empty: {out}")
    start = _time.perf_counter()
    try:
        files, trunc = _RUNNERS[cfg.scenario](cfg, out)
    except NumericError as exc:
        raise type(exc)(f"[scenario {cfg.scenario}] {exc}") from exc
    wall = _time.perf_counter() - start
    outputs = {name: _sha256(out / name) for name in sorted(files)}
    manifest = RunManifest(cfg.scenario, config_hash(cfg), __version__,
                           cfg.seed, outputs, wall, trunc)
    manifest.write(out)
    present = {p.name for p in out.iterdir()}
    expected = set(outputs) | {"manifest.json"}
    if present != expected:
        raise NumericError(f"manifest incomplete: orphan files {present - expected}")
    return manifest


def sweep_energy(cfg: ExperimentConfig, outdir=None) -> RunManifest:
    if cfg.scenario != "energy-sweep":
        raise ConfigError("config.scenario: the sweep-energy command needs scenario=energy-sweep")
    return run(cfg, outdir)


def sweep_fock(cfg: ExperimentConfig, outdir=None) -> RunManifest:
    if cfg.scenario != "fock-sweep":
        raise ConfigError("config.scenario: the sweep-fock command needs scenario=fock-sweep")
    return run(cfg, outdir)
