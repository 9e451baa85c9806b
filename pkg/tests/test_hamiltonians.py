"""Operator construction, displaced states, energies, and separatrix tests."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from fockbarrier.core import ComplexAmplitude, TruncationError
from fockbarrier.hamiltonians import (FockState, HamiltonianSpec,
                                      build_operator, classical_hamiltonian,
                                      classical_rhs, displaced_fock,
                                      displaced_fock_energy, energy_variance,
                                      mean_energy, momentum_moments,
                                      position_moments, separatrix)

IO = HamiltonianSpec()
KERR = HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-2)

# mean momenta pairing with q_mean = -3 to put each displaced |n> at the same
# mean energy on the Kerr barrier
P_MEANS = {0: 2.5, 1: 2.395, 2: 2.285, 3: 2.17}


def alpha_for(n: int) -> ComplexAmplitude:
    return ComplexAmplitude.from_means(-3.0, P_MEANS[n])


class TestBuildOperator:
    def test_io_band_entry(self):
        h = build_operator(HamiltonianSpec(n_max=2)).entries
        assert h[0, 2] == pytest.approx(-math.sqrt(2.0) / 2.0, abs=1e-15)

    def test_io_band_structure_only(self):
        h = build_operator(HamiltonianSpec(n_max=6)).entries
        mask = np.zeros_like(h, dtype=bool)
        idx = np.arange(5)
        mask[idx, idx + 2] = True
        mask[idx + 2, idx] = True
        assert np.all(h[~mask] == 0.0)
        n = np.arange(5)
        assert np.allclose(h[idx, idx + 2], -0.5 * np.sqrt((n + 1.0) * (n + 2.0)))

    def test_kerr_diagonal(self):
        h = build_operator(HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-2,
                                           n_max=4)).entries
        assert h[0, 0] == 0.0
        assert h[1, 1] == 0.0
        assert h[2, 2] == pytest.approx(0.02, abs=1e-15)
        assert h[3, 3] == pytest.approx(0.06, abs=1e-15)

    def test_exact_symmetry(self):
        h = build_operator(HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-2,
                                           n_max=80)).entries
        assert np.array_equal(h, h.T)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            HamiltonianSpec(kind="kerr-inverted", kerr_k=0.0)
        with pytest.raises(ValueError):
            HamiltonianSpec(n_max=0)
        with pytest.raises(ValueError):
            HamiltonianSpec(kind="harmonic")


class TestClassicalHamiltonian:
    def test_origin_is_barrier_top(self):
        assert classical_hamiltonian(KERR, 0.0, 0.0) == 0.0
        assert classical_hamiltonian(IO, 0.0, 0.0) == 0.0

    def test_kerr_well_minimum(self):
        assert classical_hamiltonian(KERR, 10.0, 0.0) == pytest.approx(-25.0,
                                                                       abs=1e-12)

    def test_io_separatrix_line(self):
        assert classical_hamiltonian(IO, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_kerr_reduces_to_io_at_small_k(self):
        weak = HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-8)
        q, p = np.meshgrid(np.linspace(-5, 5, 21), np.linspace(-5, 5, 21))
        assert np.max(np.abs(classical_hamiltonian(weak, q, p)
                             - classical_hamiltonian(IO, q, p))) < 1e-4

    def test_rhs_matches_gradients(self):
        eps = 1e-6
        for q0, p0 in [(0.3, -1.2), (-4.0, 2.0), (11.0, 0.5)]:
            dq, dp = classical_rhs(KERR, q0, p0)
            dh_dp = (classical_hamiltonian(KERR, q0, p0 + eps)
                     - classical_hamiltonian(KERR, q0, p0 - eps)) / (2 * eps)
            dh_dq = (classical_hamiltonian(KERR, q0 + eps, p0)
                     - classical_hamiltonian(KERR, q0 - eps, p0)) / (2 * eps)
            assert dq == pytest.approx(dh_dp, abs=1e-6)
            assert dp == pytest.approx(-dh_dq, abs=1e-6)


class TestDisplacedFock:
    def test_zero_displacement_is_basis_vector(self):
        st = displaced_fock(0.0, 2, 40)
        want = np.zeros(41)
        want[2] = 1.0
        assert np.array_equal(st.coeffs.real, want)
        assert np.all(st.coeffs.imag == 0.0)

    def test_coherent_moments(self):
        st = displaced_fock(complex(alpha_for(0)), 0, 100)
        q_mean, q_var = position_moments(st)
        p_mean, p_var = momentum_moments(st)
        assert q_mean == pytest.approx(-3.0, abs=1e-10)
        assert p_mean == pytest.approx(2.5, abs=1e-10)
        assert q_var == pytest.approx(0.5, abs=1e-10)
        assert p_var == pytest.approx(0.5, abs=1e-10)

    def test_norms(self):
        for n in range(4):
            st = displaced_fock(complex(alpha_for(n)), n, 100)
            assert st.norm() == pytest.approx(1.0, abs=1e-10)

    def test_matches_matrix_exponential(self):
        n_max = 80
        a = complex(alpha_for(1))
        m = np.arange(1, n_max + 1)
        lower = np.diag(np.sqrt(m), 1)  # annihilation operator
        d = expm(a * lower.T - np.conj(a) * lower)
        want = d[:, 1]
        got = displaced_fock(a, 1, n_max).coeffs
        assert np.max(np.abs(got - want)) < 1e-10

    def test_truncation_loss_raises(self):
        with pytest.raises(TruncationError):
            displaced_fock(5.0, 0, 20)

    def test_index_bounds(self):
        with pytest.raises(ValueError):
            displaced_fock(0.0, 5, 4)


class TestMeanEnergy:
    def test_io_energy_independent_of_fock_index(self):
        a = ComplexAmplitude.from_means(-3.0, 2.5)
        for n in range(6):
            st = displaced_fock(complex(a), n, 120)
            assert mean_energy(IO, st) == pytest.approx(-1.375, abs=1e-8)

    def test_io_undisplaced_any_index(self):
        st = displaced_fock(0.0, 5, 40)
        assert mean_energy(IO, st) == pytest.approx(0.0, abs=1e-12)

    def test_kerr_benchmark_value(self):
        st = displaced_fock(complex(alpha_for(1)), 1, 150)
        assert mean_energy(KERR, st) == pytest.approx(-0.79, abs=0.005)

    def test_matrix_route_matches_closed_form(self):
        for n in range(4):
            for a in (complex(alpha_for(n)), 1.0 + 0.5j, -2.0 + 3.0j, 0.3j):
                st = displaced_fock(a, n, 160)
                want = displaced_fock_energy(KERR, a, n)
                assert mean_energy(KERR, st) == pytest.approx(want, abs=1e-6)

    def test_io_closed_form(self):
        a = complex(alpha_for(0))
        assert displaced_fock_energy(IO, a, 0) == pytest.approx(
            -2.0 * 0.5 * (a * a).real, abs=1e-15)


class TestEnergyVariance:
    def test_eigenstate_has_zero_variance(self):
        h = build_operator(HamiltonianSpec(kind="kerr-inverted", kerr_k=1e-2,
                                           n_max=160)).entries
        vals, vecs = np.linalg.eigh(h)
        ground = FockState(vecs[:, 0])
        assert energy_variance(KERR, ground) == pytest.approx(0.0, abs=1e-6)

    def test_kerr_family_monotone_in_fock_index(self):
        sig = [energy_variance(KERR, displaced_fock(complex(alpha_for(n)), n, 150))
               for n in range(4)]
        assert sig[0] < sig[1] < sig[2] < sig[3]

    def test_io_coherent_against_doubled_basis_sum(self):
        st = displaced_fock(complex(alpha_for(0)), 0, 100)
        big = build_operator(HamiltonianSpec(n_max=220)).entries
        c = np.zeros(221, dtype=complex)
        c[:101] = st.coeffs
        hc = big @ c
        e1 = float(np.real(np.conj(c) @ hc))
        e2 = float(np.real(np.conj(hc) @ hc))
        want = math.sqrt(e2 - e1 * e1)
        assert energy_variance(IO, st) == pytest.approx(want, abs=1e-8)

    def test_heavy_tail_rejected(self):
        c = np.ones(60) / math.sqrt(60.0)
        with pytest.raises(TruncationError):
            energy_variance(IO, FockState(c))


class TestSeparatrix:
    def test_landmarks(self):
        s = separatrix(KERR)
        assert s.wells == pytest.approx((-10.0, 10.0), abs=1e-12)
        assert s.outer_crossings == pytest.approx(
            (-math.sqrt(200.0), math.sqrt(200.0)), abs=1e-12)
        assert abs(s.outer_crossings[1] - 14.142) < 1e-3

    def test_origin_on_level_set(self):
        s = separatrix(KERR)
        assert s.level(0.0, 0.0) == 0.0

    def test_edge_curve_sits_on_level_set(self):
        s = separatrix(KERR)
        q = np.linspace(0.5, 14.0, 30)
        h = classical_hamiltonian(KERR, q, s.p_edge(q))
        assert np.max(np.abs(h)) < 1e-10

    def test_io_has_no_curve(self):
        with pytest.raises(ValueError):
            separatrix(IO)
