"""Closed-form flow, Gaussian transport, and error-function transmission tests."""

import math

import numpy as np
import pytest

from fockbarrier.analytic import (CoherentIOBenchmark, coherent_transmission,
                                  coherent_transmission_asymptote,
                                  coherent_wigner_t, io_flow, io_flow_point,
                                  transmission_argument)
from fockbarrier.core import (PhaseGrid, PhasePoint, Region, integrate_2d,
                              integrate_region)

BENCH = CoherentIOBenchmark(-3.0, 2.5)


class TestIoFlow:
    def test_unit_position_seed(self):
        for t in (0.3, 1.0, 2.5):
            q, p = io_flow(1.0, 0.0, t)
            assert q == pytest.approx(math.cosh(t), rel=1e-15)
            assert p == pytest.approx(math.sinh(t), rel=1e-15)

    def test_stable_manifold_contracts(self):
        for t in (0.5, 2.0):
            q, p = io_flow(1.0, -1.0, t)
            assert q == pytest.approx(math.exp(-t), rel=1e-12)
            assert p == pytest.approx(-math.exp(-t), rel=1e-12)

    def test_inversion(self):
        pt = PhasePoint(0.7, -1.9)
        back = io_flow_point(io_flow_point(pt, 1.3), -1.3)
        assert back.q == pytest.approx(pt.q, abs=1e-12)
        assert back.p == pytest.approx(pt.p, abs=1e-12)

    def test_accepts_arrays(self):
        q, p = io_flow(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.8)
        assert q == pytest.approx([math.cosh(0.8), math.sinh(0.8)])
        assert p == pytest.approx([math.sinh(0.8), math.cosh(0.8)])


class TestCoherentWignerT:
    def test_peak_value(self):
        assert coherent_wigner_t(BENCH, -3.0, 2.5, 0.0) == pytest.approx(
            1.0 / math.pi, rel=1e-15)

    def test_peak_travels_with_flow(self):
        qt, pt = io_flow(BENCH.q0, BENCH.p0, 1.2)
        assert coherent_wigner_t(BENCH, qt, pt, 1.2) == pytest.approx(
            1.0 / math.pi, rel=1e-12)

    def test_total_integral_preserved(self):
        for t in (0.0, 0.7, 1.4):
            qt, pt = io_flow(BENCH.q0, BENCH.p0, t)
            half_q = 9.0 * math.sqrt(0.5 * math.cosh(2.0 * t)) + 1.0
            g = PhaseGrid(qt - half_q, qt + half_q, pt - half_q, pt + half_q,
                          401, 401)
            w = coherent_wigner_t(BENCH, g.q_nodes()[:, None],
                                  g.p_nodes()[None, :], t)
            assert integrate_2d(g.with_values(w)) == pytest.approx(1.0, abs=1e-6)

    def test_liouville_identity_pointwise(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-6.0, 6.0, size=(50, 2))
        for t in (0.4, 1.1):
            for q, p in pts:
                qb, pb = io_flow(q, p, -t)
                want = math.exp(-(qb - BENCH.q0) ** 2
                                - (pb - BENCH.p0) ** 2) / math.pi
                assert coherent_wigner_t(BENCH, q, p, t) == pytest.approx(
                    want, rel=1e-12, abs=1e-300)


class TestCoherentTransmission:
    def test_benchmark_value_at_t4(self):
        got = coherent_transmission(BENCH, 4.0)
        assert got == pytest.approx(0.308, abs=1e-3)
        # frozen first-run value of the closed form
        assert got == pytest.approx(0.30788827238028948, rel=1e-12)

    def test_centered_packet_splits_evenly(self):
        assert coherent_transmission(CoherentIOBenchmark(0.0, 1.7), 0.0) == 0.5

    def test_asymptote(self):
        want = 0.5 * (1.0 - math.erf(0.5 / math.sqrt(2.0)))
        got = coherent_transmission_asymptote(BENCH)
        assert got == pytest.approx(want, rel=1e-14)
        assert coherent_transmission(BENCH, 20.0) == pytest.approx(got, abs=1e-12)

    def test_asymptote_matches_positive_energy_fraction_to_3_decimals(self):
        # half-plane fraction above the barrier separatrices |p| > |q| for the
        # initial Gaussian, integrated numerically
        g = PhaseGrid(-11.0, 5.0, -5.5, 10.5, 641, 641)
        w = coherent_wigner_t(BENCH, g.q_nodes()[:, None], g.p_nodes()[None, :],
                              0.0)
        pos = Region("energy-above", lambda q, p: abs(p) > abs(q))
        p0 = integrate_region(g.with_values(w), pos)
        assert coherent_transmission_asymptote(BENCH) == pytest.approx(
            p0, abs=5e-4)

    def test_monotone_on_benchmark(self):
        ts = np.linspace(0.0, 6.0, 121)
        vals = [coherent_transmission(BENCH, float(t)) for t in ts]
        assert np.all(np.diff(vals) > 0.0)

    def test_argument_asymptotics(self):
        assert transmission_argument(BENCH, 25.0) == pytest.approx(
            (BENCH.q0 + BENCH.p0) / math.sqrt(2.0), abs=1e-12)
