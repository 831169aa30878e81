import math

import numpy as np
import pytest
from scipy.integrate import quad

from fpalign.diagnostics import (EntropyReport, alignment_functional, energies,
                                 fisher_cross, fisher_vv, fit_decay_rate,
                                 hydro_report, ismall_check, maxwellian_grid,
                                 moments, relative_entropy, report)
from fpalign.errors import ConfigError
from fpalign.grids import integrate, make_grids
from fpalign.kernels import KernelSpec, build_kernel
from fpalign.kinetic import discrete_equilibrium, local_maxwellian

L = 2 * np.pi
FLOOR = 1e-12


def separable_state(grid, rho, sigma=1.0, ubar=0.0):
    q = discrete_equilibrium(grid.v, sigma, ubar, 1.0)
    return rho[:, None] * q[None, :]


class TestMaxwellianGrid:
    def test_mass_momentum_energy(self):
        g = make_grids(L, 8, 8.5, 256)
        sigma, ubar, M = 0.7, 0.4, L
        mu = maxwellian_grid(g, sigma, ubar, M)
        rho, m, E, _ = moments(mu, g)
        assert mu.sum() * g.cell_weight == pytest.approx(M, abs=1e-14 * M)
        assert integrate(m, g.x, "x") == pytest.approx(M * ubar, abs=1e-12 * M)
        assert E == pytest.approx(M * (sigma + ubar**2), rel=1e-10)

    def test_truncation_guard(self):
        g = make_grids(L, 8, 5.0, 64)
        with pytest.raises(ConfigError):
            maxwellian_grid(g, 1.0, 0.0, 1.0)


class TestMoments:
    def test_maxwellian_moments(self):
        g = make_grids(L, 16, 8.0, 64)
        mu = maxwellian_grid(g, 1.0, 0.0, L)
        rho, m, E, ecal = moments(mu, g)
        assert np.allclose(rho, 1.0, rtol=1e-13)
        assert np.abs(m).max() < 1e-14
        assert ecal < 1e-25

    def test_separable_zero_mean(self):
        g = make_grids(L, 32, 8.0, 64)
        rho0 = 1.0 + 0.4 * np.cos(g.x.centers)
        f = separable_state(g, rho0)
        rho, m, E, ecal = moments(f, g)
        assert np.allclose(rho, rho0, rtol=1e-12)
        assert ecal < 1e-25

    def test_separable_mean_c(self):
        g = make_grids(L, 32, 9.0, 64)
        rho0 = 1.0 + 0.4 * np.cos(g.x.centers)
        c = 0.8
        f = separable_state(g, rho0, ubar=c)
        rho, m, E, ecal = moments(f, g)
        assert np.allclose(m, c * rho0, rtol=1e-11)
        assert ecal == pytest.approx(c**2 * integrate(rho0, g.x, "x"), rel=1e-11)


class TestRelativeEntropy:
    def test_zero_at_equilibrium(self):
        g = make_grids(L, 8, 8.0, 128)
        mu = maxwellian_grid(g, 1.0, 0.0, L)
        assert relative_entropy(mu, mu, g, 1.0) == 0.0

    def test_gaussian_kl_closed_form(self):
        g = make_grids(L, 8, 8.5, 256)
        sigma, u0 = 1.0, 0.5
        mu = maxwellian_grid(g, sigma, 0.0, L)
        f = maxwellian_grid(g, sigma, u0, L)
        assert relative_entropy(f, mu, g, sigma) == pytest.approx(
            L * u0**2 / 2.0, rel=1e-8)

    def test_separable_density_entropy(self):
        g = make_grids(L, 64, 8.0, 128)
        sigma = 0.6
        rho0 = 1.0 + 0.3 * np.cos(g.x.centers)
        f = separable_state(g, rho0, sigma=sigma)
        mu = maxwellian_grid(g, sigma, 0.0, L)
        oracle = quad(lambda x: (1 + 0.3 * np.cos(x)) * np.log(1 + 0.3 * np.cos(x)),
                      0.0, L, epsabs=1e-13)[0]
        assert relative_entropy(f, mu, g, sigma) == pytest.approx(
            sigma * oracle, rel=1e-8)


class TestFisherVV:
    def test_equilibrium_residual(self):
        sigma, M = 1.0, 1.0
        g = make_grids(1.0, 4, 8.0, 2048)
        mu = maxwellian_grid(g, sigma, 0.0, M)
        assert fisher_vv(mu, 0.0, g, sigma) <= 1e-8 * M * sigma

    def test_shifted_centered_at_own_mean(self):
        sigma, M = 1.0, 1.0
        g = make_grids(1.0, 4, 8.5, 2048)
        f = maxwellian_grid(g, sigma, 0.5, M)
        assert fisher_vv(f, 0.5, g, sigma) <= 1e-8 * M * sigma

    def test_shifted_centered_at_zero(self):
        sigma, M, u0 = 1.0, 1.0, 0.1
        g = make_grids(1.0, 4, 8.2, 2048)
        f = maxwellian_grid(g, sigma, u0, M)
        assert fisher_vv(f, 0.0, g, sigma) == pytest.approx(M * u0**2, rel=1e-6)


class TestFisherCross:
    def test_equilibrium_zero(self):
        g = make_grids(L, 16, 8.0, 128)
        mu = maxwellian_grid(g, 1.0, 0.0, L)
        i_xv, i_xx = fisher_cross(mu, g, 1.0)
        assert abs(i_xv) <= 1e-10 and abs(i_xx) <= 1e-10

    def test_separable_closed_form(self):
        # I_xx = 4 sigma * integral |d sqrt(rho0)|^2;  I_xv vanishes (odd in v)
        sigma, a = 0.8, 0.3
        g = make_grids(L, 8192, 8.0 * math.sqrt(sigma), 64)
        rho0 = 1.0 + a * np.cos(g.x.centers)
        f = separable_state(g, rho0, sigma=sigma)
        i_xv, i_xx = fisher_cross(f, g, sigma)
        oracle = 4.0 * sigma * quad(
            lambda x: (a * np.sin(x)) ** 2 / (4.0 * (1 + a * np.cos(x))),
            0.0, L, epsabs=1e-13)[0]
        assert i_xx == pytest.approx(oracle, rel=1e-6)
        assert abs(i_xv) <= 1e-8

    def test_weighted_cauchy_schwarz_on_corpus(self, corpus_grid, state_corpus):
        for f in state_corpus:
            i_xv, i_xx = fisher_cross(f, corpus_grid, 1.0)
            i_vv = fisher_vv(f, 0.0, corpus_grid, 1.0)
            assert abs(i_xv) <= 0.5 * (i_vv + i_xx) + 1e-12 * (i_vv + i_xx)

    def test_nonnegativity_of_square_terms(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("global_uniform"), corpus_grid.x)
        for f in state_corpus[:25]:
            rep = report(f, 1.0, 0.0, float(f.sum() * corpus_grid.cell_weight),
                         kern, 0.5, corpus_grid, FLOOR)
            assert rep.Ivv0 >= 0.0
            assert rep.Ivv_filt >= 0.0
            assert rep.Ixx >= 0.0
            assert rep.H >= -1e-12
            assert rep.A_direct >= -1e-12


class TestEnergies:
    def setup_method(self):
        self.g = make_grids(L, 32, 9.0, 64)
        self.kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.5), self.g.x)

    def test_maxwellian(self):
        sigma = 1.0
        mu = maxwellian_grid(self.g, sigma, 0.0, L)
        E, ecal, ephi, ephiphi = energies(mu, self.kern, self.g, FLOOR)
        assert E == pytest.approx(L * sigma, rel=1e-10)
        assert max(ecal, ephi, ephiphi) < 1e-24

    def test_shifted_all_equal(self):
        u0 = 0.7
        f = maxwellian_grid(self.g, 1.0, u0, L)
        E, ecal, ephi, ephiphi = energies(f, self.kern, self.g, FLOOR)
        for val in (ecal, ephi, ephiphi):
            assert val == pytest.approx(L * u0**2, rel=1e-10)
        assert E == pytest.approx(L * (1.0 + u0**2), rel=1e-10)

    def test_random_states_match_direct_oracle(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("bump", r0=0.8), corpus_grid.x)
        g = corpus_grid
        dx, dv = g.x.dx, g.v.dv
        v = g.v.centers
        n = g.x.nx
        circ = kern.samples[(np.arange(n)[:, None] - np.arange(n)[None, :]) % n]
        for f in state_corpus[:10]:
            rho = f.sum(axis=1) * dv
            m = f.dot(v) * dv
            rho_phi = circ.dot(rho) * dx
            m_phi = circ.dot(m) * dx
            u_filt = circ.dot(m_phi / rho_phi) * dx
            e_oracle = float((f.dot(v**2)).sum() * g.cell_weight)
            ecal_oracle = float((m**2 / rho).sum() * dx)
            ephi_oracle = float((m_phi**2 / rho_phi).sum() * dx)
            ephiphi_oracle = float((rho * u_filt**2).sum() * dx)
            E, ecal, ephi, ephiphi = energies(f, kern, g, FLOOR)
            assert E == pytest.approx(e_oracle, rel=1e-12)
            assert ecal == pytest.approx(ecal_oracle, rel=1e-12)
            assert ephi == pytest.approx(ephi_oracle, rel=1e-12)
            assert ephiphi == pytest.approx(ephiphi_oracle, rel=1e-12)
            assert E >= ecal >= ephi >= ephiphi >= -1e-12

    def test_hierarchy_on_corpus(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.4), corpus_grid.x)
        for f in state_corpus:
            E, ecal, ephi, ephiphi = energies(f, kern, corpus_grid, FLOOR)
            assert E - ecal >= -1e-12
            assert ecal - ephi >= -1e-12
            assert ephi - ephiphi >= -1e-12
            assert ephiphi >= -1e-12


class TestAlignmentFunctional:
    def test_constant_velocity_vanishes(self):
        g = make_grids(L, 32, 9.0, 64)
        kern = build_kernel(KernelSpec("bump", r0=0.7), g.x)
        f = maxwellian_grid(g, 1.0, 0.6, L)
        a_d, a_dd = alignment_functional(f, kern, g, FLOOR)
        assert abs(a_d) <= 1e-13 * L and abs(a_dd) <= 1e-13 * L

    def test_identity_on_corpus(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.4), corpus_grid.x)
        for f in state_corpus:
            a_d, a_dd = alignment_functional(f, kern, corpus_grid, FLOOR)
            assert abs(a_d - a_dd) <= 1e-10 * max(a_d, 1e-30)

    def test_fine_grid_refinement_oracle(self):
        # rho = 1, u = sin: the coarse value agrees with a 16x finer evaluation
        vals = {}
        for nx in (48, 768):
            g = make_grids(L, nx, 6.0, 16)
            kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.5), g.x)
            rho = np.ones(nx)
            m = np.sin(g.x.centers)
            vals[nx], _ = alignment_functional((rho, m), kern, g.x, FLOOR)
        assert vals[48] == pytest.approx(vals[768], rel=1e-8)


class TestReport:
    def test_equilibrium_report(self):
        g = make_grids(1.0, 4, 8.0, 1024)
        kern = build_kernel(KernelSpec("global_uniform"), g.x)
        mu = maxwellian_grid(g, 1.0, 0.0, 1.0)
        rep = report(mu, 1.0, 0.0, 1.0, kern, 0.25, g, FLOOR)
        for name in ("H", "Ivv0", "Ivv_filt", "Ixv", "Ixx", "A_direct",
                     "A_double", "L1_to_maxwellian"):
            assert abs(getattr(rep, name)) <= 1e-8, name
        assert math.isnan(rep.logsob_ratio)

    def test_fisher_identity_on_corpus(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.4), corpus_grid.x)
        for f in state_corpus:
            rep = report(f, 1.0, 0.0, float(f.sum() * corpus_grid.cell_weight),
                         kern, 0.5, corpus_grid, FLOOR)
            assert abs(rep.fisher_identity_residual) <= \
                1e-8 * (rep.Ivv0 + rep.Ephi + 1.0)

    def test_pinsker_and_logsob_on_corpus(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("global_uniform"), corpus_grid.x)
        ratios = []
        for f in state_corpus:
            rep = report(f, 1.0, 0.0, float(f.sum() * corpus_grid.cell_weight),
                         kern, 0.5, corpus_grid, FLOOR)
            assert rep.pinsker_slack >= -1e-10
            if rep.H > 1e-10:
                ratios.append(rep.logsob_ratio)
        assert min(ratios) > 0.0

    def test_itilde_and_ifull_composition(self, corpus_grid, state_corpus):
        kern = build_kernel(KernelSpec("global_uniform"), corpus_grid.x)
        f = state_corpus[0]
        rep = report(f, 1.0, 0.0, float(f.sum() * corpus_grid.cell_weight),
                     kern, 0.5, corpus_grid, FLOOR)
        assert rep.I_full == pytest.approx(rep.Ivv0 + rep.Ixx, rel=1e-15)
        assert rep.Itilde == pytest.approx(rep.Ivv0 + rep.Ixv + rep.Ixx, rel=1e-14)

    def test_reflection_invariance(self, corpus_grid, state_corpus):
        g = corpus_grid
        kern = build_kernel(KernelSpec("wrapped_gaussian", r0=0.4), g.x)
        f = state_corpus[1]
        mass = float(f.sum() * g.cell_weight)
        nx = g.x.nx
        f_ref = f[(nx - np.arange(nx)) % nx, :][:, ::-1]
        a = report(f, 1.0, 0.0, mass, kern, 0.5, g, FLOOR)
        b = report(f_ref, 1.0, 0.0, mass, kern, 0.5, g, FLOOR)
        assert b.momentum == pytest.approx(-a.momentum, abs=1e-12 * mass)
        for name in ("mass", "E", "Ecal", "Ephi", "Ephiphi", "A_direct",
                     "A_double", "H", "Ivv0", "Ivv_filt", "Ixv", "Ixx",
                     "pinsker_slack", "L1_to_maxwellian", "min_rho_phi",
                     "density_margin"):
            va, vb = getattr(a, name), getattr(b, name)
            assert vb == pytest.approx(va, rel=1e-12, abs=1e-12), name

    def test_csv_column_order(self):
        assert EntropyReport.CSV_COLUMNS == (
            "t", "mass", "momentum", "E", "Ecal", "Ephi", "Ephiphi", "A_direct",
            "A_double", "H", "Ivv0", "Ivv_filt", "Ixv", "Ixx", "Itilde",
            "fisher_identity_residual", "pinsker_slack", "logsob_ratio",
            "L1_to_maxwellian", "min_rho_phi", "density_margin")


class TestIsmall:
    def test_equilibrium(self):
        g = make_grids(L, 8, 8.0, 128)
        mu = maxwellian_grid(g, 1.0, 0.0, L)
        total, ratio = ismall_check(mu, 1.0, L, g)
        assert total <= 1e-8

    def test_shifted_equilibrium_centered_at_own_mean(self):
        g = make_grids(L, 8, 8.4, 128)
        f = maxwellian_grid(g, 1.0, 0.4, L)
        total, _ = ismall_check(f, 1.0, L, g)
        assert total <= 1e-8

    def test_flocking_state_closed_form(self):
        a = 0.2
        oracle_base = quad(lambda x: (a * np.sin(x)) ** 2 / (1 + a * np.cos(x)),
                           0.0, L, epsabs=1e-14)[0]
        vals = {}
        for sigma in (0.25, 1.0):
            g = make_grids(L, 8192, 8.0 * math.sqrt(sigma), 128)
            rho0 = 1.0 + a * np.cos(g.x.centers)
            f = separable_state(g, rho0, sigma=sigma)
            total, ratio = ismall_check(f, sigma, L, g)
            assert total == pytest.approx(sigma * oracle_base, rel=1e-6)
            vals[sigma] = ratio
        assert vals[0.25] == pytest.approx(vals[1.0], rel=1e-6)


class TestFitDecayRate:
    def test_exact_exponential(self):
        t = np.linspace(0, 3, 40)
        c1, c2, r2 = fit_decay_rate(t, 3.0 * np.exp(-2.0 * t), (0.0, 3.0))
        assert c1 == pytest.approx(3.0, abs=1e-12)
        assert c2 == pytest.approx(2.0, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant_degenerate(self):
        t = np.linspace(0, 3, 20)
        c1, c2, r2 = fit_decay_rate(t, np.full(20, 1.7), (0.0, 3.0))
        assert c2 == pytest.approx(0.0, abs=1e-14)
        assert math.isnan(r2)

    def test_perturbed(self):
        rng = np.random.default_rng(21)
        t = np.linspace(0, 4, 200)
        y = 3.0 * np.exp(-2.0 * t) * (1.0 + 1e-3 * rng.uniform(-1, 1, 200))
        _, c2, _ = fit_decay_rate(t, y, (0.0, 4.0))
        assert 1.99 <= c2 <= 2.01

    def test_errors(self):
        t = np.linspace(0, 1, 20)
        with pytest.raises(ConfigError):
            fit_decay_rate(t, np.ones(20), (0.0, 0.1))  # too few samples
        y = np.ones(20)
        y[5] = -1.0
        with pytest.raises(ConfigError):
            fit_decay_rate(t, y, (0.0, 1.0))


class TestHydroReport:
    def test_exact_closure(self):
        g = make_grids(L, 32, 9.0, 128)
        rho = 1.0 + 0.2 * np.cos(g.x.centers)
        u = 0.1 * np.sin(g.x.centers)
        f = local_maxwellian(g, rho, u, 1.0)
        rep = hydro_report(f, rho, rho * u, g, 0.1)
        assert abs(rep.H_rel) <= 1e-8
        assert rep.reynolds_L1 <= 1e-8
        assert abs(rep.decomp_residual) <= 1e-10

    def test_decomposition_identity_random(self, corpus_grid, state_corpus):
        g = corpus_grid
        rho_m = 1.0 + 0.2 * np.cos(g.x.centers)
        u_m = 0.1 * np.sin(g.x.centers)
        for f in state_corpus[:20]:
            rep = hydro_report(f, rho_m, rho_m * u_m, g, 0.1)
            assert abs(rep.decomp_residual) <= 1e-10 * (1.0 + abs(rep.H_rel))
            assert rep.H_macro >= -1e-10

    def test_heps_plus_geps_is_hrel(self, corpus_grid, state_corpus):
        g = corpus_grid
        rho_m = 1.0 + 0.1 * np.cos(g.x.centers)
        u_m = 0.05 * np.sin(g.x.centers)
        f = state_corpus[2]
        rep = hydro_report(f, rho_m, rho_m * u_m, g, 0.2)
        assert rep.H_eps + rep.G_eps == pytest.approx(rep.H_rel, abs=1e-10)
