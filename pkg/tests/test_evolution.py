"""Spectral propagation, wavefunction synthesis, and marginal tests."""

import math

import numpy as np
import pytest

from fockbarrier.analytic import CoherentIOBenchmark, coherent_transmission, io_flow
from fockbarrier.core import DomainError, NumericError, RngStream
from fockbarrier.evolution import (TruncationWarning, default_q_nodes, evolve,
                                   hermite_functions, make_propagator,
                                   tail_mass, transmission_marginal,
                                   wavefunction_on_grid)
from fockbarrier.hamiltonians import (FockState, HamiltonianSpec,
                                      displaced_fock, mean_energy,
                                      momentum_moments, position_moments)

IO_WIDE = HamiltonianSpec(n_max=320)
KERR = HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-2, n_max=180)
ALPHA = (-3.0 + 2.5j) / math.sqrt(2.0)


class TestMakePropagator:
    def test_kerr_eigenvalues_real_and_bounded(self):
        prop = make_propagator(KERR)
        assert prop.eigenvalues.dtype.kind == "f"
        assert np.all(np.isfinite(prop.eigenvalues))
        # the operator factors as K (a+^2 - e2/K)(a^2 - e2/K) - e2^2/K: a
        # positive-semidefinite product plus a constant, and the well coherent
        # states are annihilated by the product, so the ground level equals
        # the classical well depth -e2^2/K = -25 exactly, twofold degenerate
        lam = np.sort(prop.eigenvalues)
        assert lam[0] == pytest.approx(-25.0, abs=1e-9)
        assert lam[1] == pytest.approx(-25.0, abs=1e-9)
        assert lam[2] > -25.0 + 1.5
        assert lam[0] > -25.0 - 1e-9

    def test_io_spectrum_symmetric(self):
        lam = np.sort(make_propagator(HamiltonianSpec(n_max=100)).eigenvalues)
        assert np.max(np.abs(lam + lam[::-1])) < 1e-6

    def test_orthogonality_and_reconstruction(self):
        prop = make_propagator(HamiltonianSpec(n_max=120))
        v = prop.eigenvectors
        assert np.max(np.abs(v @ v.T - np.eye(v.shape[0]))) < 1e-10
        h = v @ (prop.eigenvalues[:, None] * v.T)
        band = -0.5 * np.sqrt(np.arange(1, 120) * np.arange(2, 121))
        assert np.max(np.abs(np.diag(h, 2) - band)) < 1e-9 * np.max(np.abs(band))


class TestEvolve:
    def test_zero_time_is_identity(self):
        st = displaced_fock(ALPHA, 1, 320)
        out = evolve(make_propagator(IO_WIDE), st, 0.0)
        assert np.array_equal(out.coeffs, st.coeffs)

    def test_group_property(self):
        prop = make_propagator(IO_WIDE)
        st = displaced_fock(ALPHA, 0, 320)
        one = evolve(prop, evolve(prop, st, 0.7), 0.8)
        direct = evolve(prop, st, 1.5)
        assert np.max(np.abs(one.coeffs - direct.coeffs)) < 1e-10

    def test_norm_preserved(self):
        prop = make_propagator(IO_WIDE)
        st = displaced_fock(ALPHA, 2, 320)
        for t in (0.3, 0.9, 1.5):
            assert abs(evolve(prop, st, t).norm() - 1.0) < 1e-10

    def test_means_follow_hyperbolic_flow(self):
        prop = make_propagator(IO_WIDE)
        st = displaced_fock(ALPHA, 0, 320)
        for t in (0.25, 0.75, 1.5):
            ev = evolve(prop, st, t)
            q_want, p_want = io_flow(-3.0, 2.5, t)
            assert position_moments(ev)[0] == pytest.approx(q_want, abs=1e-6)
            assert momentum_moments(ev)[0] == pytest.approx(p_want, abs=1e-6)

    def test_energy_conserved(self):
        prop = make_propagator(IO_WIDE)
        st = displaced_fock(ALPHA, 1, 320)
        e0 = mean_energy(IO_WIDE, st)
        for t in (0.5, 1.0, 1.5):
            assert mean_energy(IO_WIDE, evolve(prop, st, t)) == pytest.approx(
                e0, abs=1e-8)

    def test_truncation_tail_warns_and_strict_raises(self):
        narrow = HamiltonianSpec(n_max=60)
        prop = make_propagator(narrow)
        st = displaced_fock(ALPHA, 0, 60)
        with pytest.warns(TruncationWarning):
            out = evolve(prop, st, 1.5)
        assert tail_mass(out) > 1e-6
        with pytest.raises(NumericError):
            evolve(prop, st, 1.5, strict=True)

    def test_dimension_mismatch_rejected(self):
        prop = make_propagator(HamiltonianSpec(n_max=50))
        with pytest.raises(ValueError):
            evolve(prop, displaced_fock(0.0, 0, 40), 1.0)


class TestWavefunctionOnGrid:
    def test_ground_state_peak_value(self):
        q = np.linspace(-8.0, 8.0, 321)
        wf = wavefunction_on_grid(displaced_fock(0.0, 0, 30), q)
        i0 = np.argmin(np.abs(q))
        assert abs(wf.psi[i0]) == pytest.approx(math.pi ** -0.25, abs=1e-12)
        assert math.pi ** -0.25 == pytest.approx(0.7511, abs=1e-4)

    def test_first_excited_node_at_origin(self):
        q = np.linspace(-8.0, 8.0, 321)
        wf = wavefunction_on_grid(displaced_fock(0.0, 1, 30), q)
        i0 = np.argmin(np.abs(q))
        assert abs(wf.psi[i0]) < 1e-14

    def test_norm_on_default_domain(self):
        st = displaced_fock(ALPHA, 2, 120)
        assert transmission_marginal(st, -math.inf, math.inf) == pytest.approx(
            1.0, abs=1e-6)

    def test_support_violation_raises(self):
        with pytest.raises(DomainError):
            wavefunction_on_grid(displaced_fock(0.0, 0, 10),
                                 np.linspace(-1.0, 1.0, 11))

    def test_hermite_recurrence_matches_closed_forms(self):
        q = np.linspace(-3.0, 3.0, 61)
        phi = hermite_functions(3, q)
        g = np.exp(-q * q / 2.0) * math.pi ** -0.25
        assert np.max(np.abs(phi[0] - g)) < 1e-13
        assert np.max(np.abs(phi[1] - math.sqrt(2.0) * q * g)) < 1e-13
        assert np.max(np.abs(phi[2] - (2.0 * q * q - 1.0) / math.sqrt(2.0) * g)) < 1e-12


class TestTransmissionMarginal:
    def test_initial_left_packet_barely_transmits(self):
        st = displaced_fock(ALPHA, 0, 100)
        got = transmission_marginal(st)
        bound = 0.5 * (1.0 - math.erf(2.0))
        assert 0.0 <= got <= bound
        assert bound == pytest.approx(0.0023, abs=1e-4)

    def test_exact_track_matches_analytic_curve(self):
        prop = make_propagator(IO_WIDE)
        st = displaced_fock(ALPHA, 0, 320)
        bench = CoherentIOBenchmark(-3.0, 2.5)
        for t in (0.5, 1.0, 1.5):
            got = transmission_marginal(evolve(prop, st, t))
            assert got == pytest.approx(coherent_transmission(bench, t), abs=1e-4)

    def test_explicit_grid_stays_strict(self):
        st = displaced_fock(ALPHA, 0, 100)
        with pytest.raises(DomainError):
            transmission_marginal(st, q_nodes=np.linspace(-4.0, 0.5, 91))

    def test_default_grid_widens_for_barrier_tails(self):
        st = evolve(make_propagator(KERR), displaced_fock(ALPHA, 1, 180), 1.0)
        got = transmission_marginal(st)
        assert 0.0 <= got <= 1.0

    def test_default_nodes_cover_moment_band(self):
        st = displaced_fock(ALPHA, 3, 150)
        q = default_q_nodes(st)
        mean, var = position_moments(st)
        assert q[0] < mean - 9.0 * math.sqrt(var)
        assert q[-1] > mean + 9.0 * math.sqrt(var)
