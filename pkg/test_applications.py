"""
应用层测试：径向 Fourier 变换、Fourier-Bessel 展开与 Helmholtz 求解
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from services import applications
from services.applications import (
    FourierBesselField,
    HelmholtzProblem,
    RadialFourierJob,
    apply_helmholtz_operator,
    boundary_residual,
    check_resonance,
    disk_indicator_transform,
    eigen_forcing,
    eigenmode,
    fb_analyze,
    fb_synthesize,
    helmholtz_solve,
    manufactured_forcing,
    radial_fourier,
    radial_fourier_disk,
    root_table,
    summarize_field,
)
from services.errors import ConvergenceError, DomainError, ParameterError, ResonanceError
from services.special import bessel_j, bessel_root, gauss_legendre


def gaussian(r, theta):
    """以 (0.15, 0) 为中心的窄高斯，边界上约为 1e-13"""
    return np.exp(-40.0 * (r ** 2 + 0.0225 - 0.3 * r * np.cos(theta)))


def band_limited_field(rng, jmax=8, lmax=4):
    coeffs = np.zeros((jmax, 2 * lmax + 1), dtype=complex)
    decay = np.exp(-0.3 * np.arange(1, jmax + 1))[:, None] * np.exp(-0.5 * np.abs(np.arange(-lmax, lmax + 1)))[None, :]
    coeffs[:] = (rng.standard_normal(coeffs.shape) + 1j * rng.standard_normal(coeffs.shape)) * decay
    return FourierBesselField(coeffs=coeffs, roots=root_table(jmax, lmax))


class TestRadialFourier:
    def test_origin_limit(self):
        job = RadialFourierJob(f=np.ones_like, freqs=[0.0, 1.0], eps=1e-12)
        assert radial_fourier_disk(job)[0] == pytest.approx(math.pi, abs=1e-12)

    def test_zero_at_first_root(self):
        root = bessel_root(1, 1)
        job = RadialFourierJob(f=np.ones_like, freqs=[root], eps=1e-12)
        assert abs(radial_fourier_disk(job)[0]) <= 1e-12

    def test_disk_indicator_against_closed_form(self):
        freqs = 1024.0 * np.arange(1, 10_001) / 10_000
        job = RadialFourierJob(f=np.ones_like, freqs=freqs, eps=1e-12)
        err = np.abs(radial_fourier_disk(job) - disk_indicator_transform(freqs))
        assert err.max() <= 1e-12

    def test_gaussian_profile(self):
        # f = exp(-r²/2) 截断在单位圆盘上：2π ∫₀¹ e^{-r²/2} r J_0(ωr) dr，与稠密求积对照
        freqs = np.array([0.5, 3.0, 17.0])
        f = lambda r: np.exp(-0.5 * r ** 2)
        reference = [2 * math.pi * quad(lambda r: f(r) * r * j0(w * r), 0.0, 1.0, epsabs=1e-14, limit=200)[0]
                     for w in freqs]
        np.testing.assert_allclose(radial_fourier(f, freqs, 1e-10), reference, rtol=0, atol=1e-9)

    def test_four_dimensional_ball(self):
        freqs = np.array([0.0, 2.0, 9.5])
        values = radial_fourier(np.ones_like, freqs, 1e-12, dim=4)
        assert values[0] == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
        expected = (2 * math.pi) ** 2 * bessel_j(2, freqs[1:]) / freqs[1:] ** 2
        np.testing.assert_allclose(values[1:], expected, rtol=0, atol=1e-11)

    def test_odd_dimension_rejected(self):
        with pytest.raises(ParameterError):
            radial_fourier(np.ones_like, [1.0], 1e-8, dim=3)
        with pytest.raises(ValueError):
            RadialFourierJob(f=np.ones_like, freqs=[1.0], dim=3)

    def test_job_validation(self):
        with pytest.raises(ValueError):
            RadialFourierJob(f=np.ones_like, freqs=[0.0])
        with pytest.raises(ValueError):
            RadialFourierJob(f=np.ones_like, freqs=[1.0], eps=1e-3)

    def test_non_convergence(self, monkeypatch):
        monkeypatch.setattr(applications, 'RADIAL_MAX_NODES', 64)
        with pytest.raises(ConvergenceError):
            radial_fourier(lambda r: np.cos(900.0 * r), np.array([1.0, 50.0]), 1e-12)


class TestFourierBessel:
    def test_single_mode(self):
        field = fb_analyze(eigenmode(2, 3), 1e-10)
        target = field.column(3)
        assert target[1] == pytest.approx(1.0, abs=1e-9)
        others = field.coeffs.copy()
        others[1, 3 + field.lmax] = 0
        assert np.abs(others).max() <= 1e-9

    def test_round_trip_gaussian(self):
        field = fb_analyze(gaussian, 1e-8)
        r = np.linspace(0, 0.95, 20)
        theta = 2 * math.pi * np.arange(33) / 33
        u = fb_synthesize(field, r, theta)
        np.testing.assert_allclose(u, gaussian(r[:, None], theta[None, :]), rtol=0, atol=1e-7)

    def test_synthesis_paths_agree(self, rng):
        field = band_limited_field(rng)
        r = np.linspace(0, 1, 7)
        theta = 2 * math.pi * np.arange(16) / 16
        fast = fb_synthesize(field, r, theta)
        # 单个角度走直接求和分支
        slow = np.hstack([fb_synthesize(field, r, theta[q:q + 1]) for q in range(theta.shape[0])])
        np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-12)
        direct = np.zeros((7, 16), dtype=complex)
        for ell in range(-field.lmax, field.lmax + 1):
            for j in range(field.jmax):
                root = field.roots[j, abs(ell)]
                direct += field.coeffs[j, ell + field.lmax] * np.outer(bessel_j(abs(ell), root * r),
                                                                        np.exp(1j * ell * theta))
        np.testing.assert_allclose(fast, direct, rtol=0, atol=1e-10)

    def test_band_limited_round_trip(self, rng):
        original = band_limited_field(rng)

        def forcing(r, theta):
            return fb_synthesize(original, np.ravel(r), np.ravel(theta))

        field = fb_analyze(forcing, 1e-10)
        recovered = field.coeffs[:original.jmax, field.lmax - original.lmax:field.lmax + original.lmax + 1]
        np.testing.assert_allclose(recovered, original.coeffs, rtol=0, atol=1e-8 * np.abs(original.coeffs).max())

    def test_zero_forcing(self):
        field = fb_analyze(lambda r, t: np.zeros(np.broadcast(r, t).shape), 1e-8)
        assert not np.any(field.coeffs)

    def test_caps(self):
        with pytest.raises(ConvergenceError):
            fb_analyze(gaussian, 1e-8, lmax_cap=16, jmax_cap=16)
        with pytest.raises(ParameterError):
            fb_analyze(gaussian, 1e-8, lmax_cap=200)

    def test_synthesis_radius_range(self, rng):
        with pytest.raises(DomainError):
            fb_synthesize(band_limited_field(rng), np.array([1.5]), np.array([0.0]))

    def test_eigenvalues_and_energy(self):
        field = FourierBesselField.zeros(4, 2)
        np.testing.assert_allclose(field.eigenvalues[:, 2], -root_table(4, 2)[:, 0] ** 2)
        coeffs = field.coeffs.copy()
        coeffs[1, 2] = 1.0
        root = bessel_root(0, 2)
        assert field.with_coeffs(coeffs).energy() == pytest.approx(math.pi * bessel_j(1, root) ** 2, rel=1e-14)
        assert summarize_field(field)['jmax'] == 4

    def test_synthesized_energy_matches_coefficients(self, rng):
        field = band_limited_field(rng)
        rule = gauss_legendre(128, 0.0, 1.0)
        t = 32
        theta = 2 * math.pi * np.arange(t) / t
        u = fb_synthesize(field, rule.nodes, theta)
        energy = (2 * math.pi / t) * np.sum(rule.weights[:, None] * rule.nodes[:, None] * np.abs(u) ** 2)
        assert energy == pytest.approx(field.energy(), rel=1e-6)

    def test_analyzed_energy_matches_quadrature(self):
        field = fb_analyze(gaussian, 1e-8)
        rule = gauss_legendre(200, 0.0, 1.0)
        t = 256
        theta = 2 * math.pi * np.arange(t) / t
        f = gaussian(rule.nodes[:, None], theta[None, :])
        energy = (2 * math.pi / t) * np.sum(rule.weights[:, None] * rule.nodes[:, None] * np.abs(f) ** 2)
        assert field.energy() == pytest.approx(energy, rel=1e-6)


class TestHelmholtz:
    def test_manufactured_solution(self):
        forcing, exact = manufactured_forcing(25.0, 2, 0)
        field = helmholtz_solve(HelmholtzProblem(forcing=forcing, kappa=25.0, eps=1e-8))
        assert field.column(0)[1] == pytest.approx(1.0, abs=1e-7)
        r = np.linspace(0, 1, 41)
        theta = 2 * math.pi * np.arange(64) / 64
        u = fb_synthesize(field, r, theta)
        ref = exact(r[:, None], theta[None, :])
        assert np.abs(u - ref).max() / np.abs(ref).max() <= 1e-6
        assert boundary_residual(field) <= 1e-7 * np.abs(u).max()

    def test_eigen_forcing(self):
        forcing, exact = eigen_forcing(25.0, 3, -2)
        field = helmholtz_solve(HelmholtzProblem(forcing=forcing, kappa=25.0, eps=1e-10))
        root = bessel_root(2, 3)
        assert field.column(-2)[2] == pytest.approx(1.0 / (625.0 - root ** 2), rel=1e-8)

    def test_diagonal_identity(self, rng):
        alpha = band_limited_field(rng, jmax=20, lmax=6)
        prob = HelmholtzProblem(forcing=lambda r, t: 0 * r, kappa=25.0)
        beta = helmholtz_solve(prob, forcing_field=alpha)
        np.testing.assert_allclose(apply_helmholtz_operator(beta, 25.0).coeffs, alpha.coeffs, rtol=1e-14)

    def test_random_forcing_round_trip(self, rng):
        original = band_limited_field(rng)

        def forcing(r, theta):
            return fb_synthesize(original, np.ravel(r), np.ravel(theta))

        prob = HelmholtzProblem(forcing=forcing, kappa=25.0, eps=1e-10)
        beta = helmholtz_solve(prob)
        alpha = apply_helmholtz_operator(beta, 25.0)
        recovered = alpha.coeffs[:original.jmax, alpha.lmax - original.lmax:alpha.lmax + original.lmax + 1]
        np.testing.assert_allclose(recovered, original.coeffs, rtol=0, atol=1e-8 * np.abs(original.coeffs).max())
        assert boundary_residual(beta) <= 1e-7 * max(1.0, np.abs(beta.coeffs).max())

    @pytest.mark.parametrize('j,ell', [(1, 0), (3, 2)])
    def test_resonance(self, j, ell):
        kappa = bessel_root(ell, j)
        prob = HelmholtzProblem(forcing=lambda r, t: 0 * r, kappa=kappa)
        with pytest.raises(ResonanceError) as info:
            helmholtz_solve(prob, forcing_field=FourierBesselField.zeros(10, 4))
        assert (info.value.j, info.value.ell) == (j, ell)

    def test_near_resonance_is_allowed(self):
        roots = root_table(5, 2)
        check_resonance(roots[0, 0] * (1 + 1e-6), roots)

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            HelmholtzProblem(forcing=lambda r, t: r, kappa=0.0)
        with pytest.raises(ParameterError):
            eigenmode(0, 1)
