"""Unit tests for the continuous 3DVAR filter and the OU machinery."""

import math

import numpy as np
import pytest

from ns3dvar import spectral as sp
from ns3dvar.assimilation import (
    FilterParams,
    NoiseStream,
    TraceConditionError,
    _complex_reality_normals,
    evolve_Z,
    expected_Z_energy,
    filter_step,
    noise_increment,
    ou_substep,
    run_filter,
    stationary_Z_sample,
)
from ns3dvar.dynamics import NseParams


SMALL = NseParams(N=16, nu=0.05, dt=0.01, forcing_amplitude=0.1)


class TestFilterParams:
    def test_derived_quantities(self):
        p = FilterParams(omega=100, sigma0=0.05, zeta=1.5, beta=1.0)
        assert p.alpha == pytest.approx(0.5)
        assert p.epsilon == pytest.approx(5.0)

    def test_trace_gate(self):
        FilterParams(omega=1, sigma0=1, zeta=0.5, beta=0.0).check_trace_class()
        with pytest.raises(TraceConditionError):
            FilterParams(omega=1, sigma0=1, zeta=0.2, beta=0.0).check_trace_class()
        # finite cutoff lifts the requirement
        FilterParams(omega=1, sigma0=1, zeta=0.2, beta=0.0,
                     lam=10.0).check_trace_class()

    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            FilterParams(omega=-1)


class TestNoiseStream:
    def test_counter_reproducibility(self):
        s = NoiseStream(7, "W")
        a = s.normals(12, (4, 4))
        b = NoiseStream(7, "W").normals(12, (4, 4))
        np.testing.assert_array_equal(a, b)

    def test_steps_and_roles_decorrelated(self):
        s = NoiseStream(7, "W")
        assert not np.array_equal(s.normals(0, (8,)), s.normals(1, (8,)))
        assert not np.array_equal(s.normals(0, (8,)),
                                  NoiseStream(7, "V").normals(0, (8,)))
        assert s.child("x").role == "W/x"

    def test_reality_paired_normals(self):
        xi = _complex_reality_normals(NoiseStream(3), 0, 16)
        mirror = np.conj(np.roll(xi[::-1, ::-1], 1, axis=(0, 1)))
        np.testing.assert_allclose(xi, -mirror, atol=1e-15)
        assert np.all(xi[~sp.mode_mask(16)] == 0.0)

    def test_reality_paired_variance(self):
        # E|xi_k|^2 = 1 on stored modes
        s = NoiseStream(4)
        acc = np.zeros((16, 16))
        n = 400
        for step in range(n):
            acc += np.abs(_complex_reality_normals(s, step, 16)) ** 2
        mean = acc[sp.mode_mask(16)] / n
        assert abs(mean.mean() - 1.0) < 0.02


class TestOuSubstep:
    def test_deterministic_contraction_rates(self):
        p = FilterParams(omega=10.0, sigma0=0.0, zeta=0.5, beta=0.0)
        u = sp.zero_field(16)
        m = sp.field_from_modes({(1, 0): 1.0, (3, 3): 1.0}, 16, real=True)
        out = ou_substep(m, u, p, 0.01, exact=True)
        # per-mode decay exp(-omega mu^(-2 alpha) dt), mu = 1 and 18
        assert abs(out.mode(1, 0)) == pytest.approx(math.exp(-0.1), rel=1e-12)
        assert abs(out.mode(3, 3)) == pytest.approx(
            math.exp(-10.0 / 18.0 * 0.01), rel=1e-12)

    def test_euler_matches_exact_to_first_order(self):
        p = FilterParams(omega=10.0, sigma0=0.0, zeta=0.5, beta=0.0)
        u = sp.zero_field(16)
        m = sp.field_from_modes({(1, 0): 1.0}, 16, real=True)
        em = ou_substep(m, u, p, 0.001)
        ex = ou_substep(m, u, p, 0.001, exact=True)
        assert sp.sobolev_norm(0, em - ex) < 1e-4

    def test_cutoff_leaves_high_modes_untouched(self):
        p = FilterParams(omega=10.0, sigma0=0.0, zeta=0.5, beta=0.0, lam=5.0)
        u = sp.zero_field(16)
        m = sp.field_from_modes({(4, 4): 1.0}, 16, real=True)  # mu = 32 > cutoff
        out = ou_substep(m, u, p, 0.01)
        assert out.mode(4, 4) == pytest.approx(1.0)

    def test_noise_increment_scales_like_sqrt_dt(self):
        p = FilterParams(omega=10.0, sigma0=0.1, zeta=0.5, beta=0.0)
        s = NoiseStream(5)
        a = noise_increment(p, 0.01, s, 16)
        b = noise_increment(p, 0.04, s, 16)
        np.testing.assert_allclose(b.coeffs, 2.0 * a.coeffs, atol=1e-15)


class TestRunFilter:
    def test_noise_free_strong_nudging_contracts(self):
        rng = np.random.default_rng(6)
        u0 = sp.random_field(rng, 16, decay=2.0, amplitude=0.3)
        m0 = sp.zero_field(16)
        p = FilterParams(omega=50.0, sigma0=0.0, zeta=0.5, beta=0.0)
        rec = run_filter(m0, u0, p, SMALL, 2.0, None, stride=10)
        assert rec.error_h[-1] < 1e-2 * rec.error_h[0]

    def test_identical_start_stays_identical_without_noise(self):
        rng = np.random.default_rng(7)
        u0 = sp.random_field(rng, 16, decay=2.0, amplitude=0.3)
        p = FilterParams(omega=10.0, sigma0=0.0, zeta=0.5, beta=0.0)
        rec = run_filter(u0, u0, p, SMALL, 0.5, None)
        assert rec.error_h.max() <= 1e-13

    def test_reproducible_with_noise(self):
        rng = np.random.default_rng(8)
        u0 = sp.random_field(rng, 16, decay=2.0, amplitude=0.3)
        m0 = sp.zero_field(16)
        p = FilterParams(omega=10.0, sigma0=0.05, zeta=0.5, beta=0.0)
        r1 = run_filter(m0, u0, p, SMALL, 0.3, NoiseStream(9, "W"))
        r2 = run_filter(m0, u0, p, SMALL, 0.3, NoiseStream(9, "W"))
        np.testing.assert_array_equal(r1.error_h, r2.error_h)

    def test_relative_error_handles_zero_signal(self):
        m0 = sp.field_from_modes({(1, 0): 1.0}, 16, real=True)
        u0 = sp.zero_field(16)
        p = FilterParams(omega=1.0, sigma0=0.0, zeta=0.5, beta=0.0)
        nse = NseParams(N=16, nu=0.05, dt=0.01, forcing_amplitude=0.0)
        rec = run_filter(m0, u0, p, nse, 0.05, None)
        assert np.all(np.isnan(rec.relative_error()))


class TestStationaryOu:
    def test_expected_energy_single_shell(self):
        # only mu = 1 retained: 4 modes, each contributing eps^2/(2(delta+phi))
        p = FilterParams(omega=2.0, sigma0=0.1, zeta=0.5, beta=0.0,
                         lam=1.5, phi=0.3)
        delta = 0.05
        expected = 4 * p.epsilon**2 / (2 * (delta + p.phi))
        assert expected_Z_energy(p, delta, 16) == pytest.approx(expected)

    def test_stationary_sample_statistics(self):
        p = FilterParams(omega=2.0, sigma0=0.1, zeta=0.5, beta=0.0,
                         lam=1.5, phi=0.3)
        delta = 0.05
        s = NoiseStream(11, "Z")
        vals = [sp.sobolev_norm(1, stationary_Z_sample(p, delta, s, 16, step=i).Z) ** 2
                for i in range(3000)]
        assert np.mean(vals) == pytest.approx(
            expected_Z_energy(p, delta, 16), rel=0.05)

    def test_evolve_preserves_stationary_variance(self):
        p = FilterParams(omega=2.0, sigma0=0.1, zeta=0.5, beta=0.0, phi=0.5)
        delta = 0.05
        s = NoiseStream(12, "Z")
        z = stationary_Z_sample(p, delta, s.child("init"), 16)
        energies = []
        for step in range(4000):
            z = evolve_Z(z, p, delta, 0.05, s, step=step)
            energies.append(sp.sobolev_norm(1, z.Z) ** 2)
        drift = np.mean(energies[2000:]) / expected_Z_energy(p, delta, 16)
        assert abs(drift - 1.0) < 0.1

    def test_zero_noise_evolution_is_pure_decay(self):
        p = FilterParams(omega=2.0, sigma0=0.0, zeta=0.5, beta=0.0, phi=0.25)
        delta = 0.05
        z0 = sp.field_from_modes({(1, 0): 1.0}, 16, real=True)
        from ns3dvar.assimilation import OuState

        z = evolve_Z(OuState(z0, 0.25), p, delta, 0.2, NoiseStream(13))
        assert abs(z.Z.mode(1, 0)) == pytest.approx(
            math.exp(-(delta * 1.0 + 0.25) * 0.2), rel=1e-12)

    def test_evolve_reproducible(self):
        p = FilterParams(omega=2.0, sigma0=0.1, zeta=0.5, beta=0.0, phi=0.5)
        s = NoiseStream(14, "Z")
        z0 = stationary_Z_sample(p, 0.05, s.child("init"), 16)
        a = evolve_Z(z0, p, 0.05, 0.1, s, step=0)
        b = evolve_Z(z0, p, 0.05, 0.1, s, step=0)
        np.testing.assert_array_equal(a.Z.coeffs, b.Z.coeffs)
