"""Unit tests for the solenoidal spectral basis and bilinear form."""

import math

import numpy as np
import pytest

from ns3dvar import spectral as sp


def random_reality_field(seed, N=32, decay=1.5, amplitude=1.0):
    rng = np.random.default_rng(seed)
    return sp.random_field(rng, N, decay=decay, amplitude=amplitude)


class TestFieldConstruction:
    def test_mode_roundtrip(self):
        f = sp.field_from_modes({(3, 2): 0.7 + 0.1j}, 16, real=True)
        assert f.mode(3, 2) == pytest.approx(0.7 + 0.1j)
        # reality partner at -k is -conj(c)
        assert f.mode(-3, -2) == pytest.approx(-(0.7 - 0.1j))

    def test_reality_constraint_gives_real_velocity(self):
        f = random_reality_field(0)
        g = sp.to_grid(f)
        assert np.all(np.isreal(g.ux)) and np.all(np.isreal(g.uy))

    def test_zero_mode_always_empty(self):
        f = random_reality_field(1)
        assert f.coeffs[0, 0] == 0.0

    def test_symmetrize_idempotent(self):
        rng = np.random.default_rng(2)
        raw = sp.SpectralField(
            rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16)), 2 * math.pi)
        once = sp.symmetrize(raw)
        twice = sp.symmetrize(once)
        np.testing.assert_allclose(once.coeffs, twice.coeffs, atol=1e-15)

    def test_resolution_mismatch_raises(self):
        f = random_reality_field(3, N=16)
        g = random_reality_field(3, N=32)
        with pytest.raises(sp.ResolutionMismatchError):
            _ = f + g


class TestTransformsAndProjection:
    def test_grid_roundtrip(self):
        f = random_reality_field(4)
        back = sp.to_spectral(sp.to_grid(f))
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-13)

    def test_divergence_free(self):
        # structural: every coefficient multiplies a solenoidal basis vector
        f = random_reality_field(5)
        assert sp.divergence_max(sp.to_grid(f)) <= 1e-12

    def test_leray_idempotent(self):
        f = random_reality_field(6)
        p1 = sp.leray_project(sp.to_grid(f))
        p2 = sp.leray_project(sp.to_grid(p1))
        np.testing.assert_allclose(p1.coeffs, p2.coeffs, atol=1e-13)

    def test_leray_removes_gradient_part(self):
        # a pure gradient field projects to zero
        N, L = 32, 2 * math.pi
        x = np.arange(N) * L / N
        X, Y = np.meshgrid(x, x, indexing="ij")
        phi_x = np.cos(X + 2 * Y)          # grad of sin(x + 2y)
        phi_y = 2 * np.cos(X + 2 * Y)
        g = sp.GridVelocityField(phi_x, phi_y, L)
        proj = sp.leray_project(g)
        assert sp.sobolev_norm(0, proj) <= 1e-13

    def test_parseval_inner_product(self):
        f, g = random_reality_field(7), random_reality_field(8)
        spectral = sp.inner(f, g)
        grid = sp.grid_inner(sp.to_grid(f), sp.to_grid(g))
        assert spectral == pytest.approx(grid, rel=1e-12, abs=1e-13)

    def test_sobolev_norm_single_mode(self):
        # ||psi_k||_s^2 = mu_k^s for a unit coefficient pair
        f = sp.field_from_modes({(2, 1): 1.0}, 16, real=True)
        musq = 5.0
        # the reality partner doubles the squared norm
        assert sp.sobolev_norm(2, f) == pytest.approx(math.sqrt(2 * musq**2))
        assert sp.sobolev_norm(0, f) == pytest.approx(math.sqrt(2.0))


class TestStokesOperator:
    def test_eigenvalues_start_at_one(self):
        musq = sp.stokes_eigenvalues(16)
        mask = sp.mode_mask(16)
        assert musq[mask].min() == 1.0

    def test_apply_power_matches_eigenvalue(self):
        f = sp.field_from_modes({(3, 4): 1.0}, 16, real=True)
        out = sp.apply_stokes_power(1.0, f)
        assert out.mode(3, 4) == pytest.approx(25.0)


class TestBilinearForm:
    def test_symmetric_in_arguments(self):
        u, v = random_reality_field(9), random_reality_field(10)
        buv = sp.bilinear(u, v)
        bvu = sp.bilinear(v, u)
        np.testing.assert_allclose(buv.coeffs, bvu.coeffs, atol=1e-14)

    def test_energy_cancellation(self):
        for seed in range(5):
            v = random_reality_field(seed, N=32)
            b = sp.bilinear(v, v)
            rel = abs(sp.inner(b, v)) / (
                sp.sobolev_norm(0, v) * sp.sobolev_norm(1, v) ** 2)
            assert rel <= 1e-12

    def test_rotational_form_matches_symmetric_form(self):
        u = random_reality_field(11, N=32)
        np.testing.assert_allclose(
            sp.self_advection(u).coeffs, sp.bilinear(u, u).coeffs, atol=1e-13)

    def test_output_dealiased(self):
        u = random_reality_field(12, N=24)
        b = sp.bilinear(u, u)
        assert np.all(b.coeffs[~sp.dealias_mask(24)] == 0.0)

    def test_bilinear_on_single_modes_is_exact_convolution(self):
        # two low modes interact only inside the dealiased band, so the
        # pseudo-spectral product equals the true convolution
        u = sp.field_from_modes({(1, 0): 1.0}, 32, real=True)
        v = sp.field_from_modes({(0, 1): 1.0}, 32, real=True)
        b = sp.bilinear(u, v)
        # B(u,v) lives on the interaction wavevectors (1,1) and (1,-1)
        support = {(1, 1), (1, -1), (-1, -1), (-1, 1)}
        nz = {
            tuple(int(w) for w in np.fft.fftfreq(32, 1 / 32)[list(idx)])
            for idx in zip(*np.nonzero(np.abs(b.coeffs) > 1e-14))
        }
        assert nz <= support
        assert sp.sobolev_norm(0, b) > 0


class TestMasksAndRetention:
    def test_retained_mask_infinite_cutoff_is_mode_mask(self):
        np.testing.assert_array_equal(
            sp.retained_mask(math.inf, 16, 2 * math.pi), sp.mode_mask(16))

    def test_retained_mask_single_shell(self):
        # lam = 1.5 (with L = 2 pi) keeps exactly mu = 1: four wavevectors
        mask = sp.retained_mask(1.5, 16, 2 * math.pi)
        assert mask.sum() == 4

    def test_project_complement_partition(self):
        f = random_reality_field(13, N=16)
        low = sp.project_modes(5.0, f)
        high = sp.complement_modes(5.0, f)
        np.testing.assert_allclose((low + high).coeffs, f.coeffs, atol=1e-15)
