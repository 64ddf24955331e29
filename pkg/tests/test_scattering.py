import numpy as np
import pytest
from scipy.linalg import expm

from covhopfield.errors import (
    AssemblyInconsistent,
    ChannelDegeneracy,
    EvanescentOverflow,
    UnsupportedMedium,
)
from covhopfield.medium import (
    MediumSpec,
    OscillatorSpec,
    PerturbationProfile,
    rest_medium,
)
from covhopfield.scattering import (
    assemble_C,
    assemble_K,
    assemble_R,
    assembly_residual,
    boosted_channel_residual,
    classify_channels,
    comoving_medium,
    current_kernel,
    default_endpoints,
    extract_bogoliubov,
    flux_conservation_check,
    integrate_transfer,
    propagate_state,
    pseudo_unitarity_residual,
    separate_variables,
    separated_pde_residual,
    solve_scattering,
    transfer_in_channel_basis,
)


def medium(dchi=0.05, center=0.0, width=1.0, vel=0.5):
    rest = rest_medium(chi0=0.5, omega0=1.0, g=1.0,
                       perturbation=PerturbationProfile(
                           "gaussian", amplitude=dchi, width=width,
                           center=center))
    return comoving_medium(rest, vel)


M_BUMP = medium(0.05)
M_FLAT = medium(0.0)
OM_EVAN = 0.5   # two propagating + evanescent pair in each transverse sector
OM_PROP = 3.0   # all four transverse channels propagating


class TestAssembly:
    def test_C_independent_of_x(self):
        K1 = assemble_K(M_FLAT, OM_EVAN, 0, 0, -3.0)
        K2 = assemble_K(M_FLAT, OM_EVAN, 0, 0, 2.0)
        assert np.max(np.abs(K1 - K2)) == 0

    @pytest.mark.parametrize("omega", [0.3, OM_EVAN, 1.2, OM_PROP])
    def test_substitution_oracle(self, omega):
        C = assemble_C(M_BUMP, omega)
        assert assembly_residual(M_BUMP, omega, 0.0, 0.0, C) < 1e-9

    @pytest.mark.parametrize("omega", [OM_EVAN, OM_PROP])
    def test_flux_conservation_identity(self, omega):
        # K^dag F + F K + F' = 0 certifies every sign in both objects
        C = assemble_C(M_BUMP, omega)
        F = current_kernel(M_BUMP, omega, component=1)
        assert np.max(np.abs(C.conj().T @ F + F @ C)) < 1e-12
        x, h = 0.4, 1e-6
        K = assemble_K(M_BUMP, omega, 0, 0, x)
        Fx = current_kernel(M_BUMP, omega, component=1, x=x)
        Fp = (current_kernel(M_BUMP, omega, component=1, x=x + h)
              - current_kernel(M_BUMP, omega, component=1, x=x - h)) / (2 * h)
        assert np.max(np.abs(K.conj().T @ Fx + Fx @ K + Fp)) < 1e-9

    def test_R_block_structure(self):
        x = 0.6
        R = assemble_R(M_BUMP, OM_EVAN, x)
        # only the p'' block row is nonzero
        assert np.max(np.abs(R[0:12, :])) == 0
        assert np.max(np.abs(R[12:16, :])) > 0
        # dp'/dpi block is (chi'/chi) I exactly
        from covhopfield.medium import chi_at, chi_prime_at
        ratio = chi_prime_at(M_BUMP, x) / chi_at(M_BUMP, x)
        assert np.allclose(R[12:16, 12:16], ratio * np.eye(4), atol=1e-14)

    def test_R_transverse_blocks_scale_with_delta_chi(self):
        from covhopfield.medium import chi_at
        x = 0.6
        R = assemble_R(M_BUMP, OM_EVAN, x)
        osc = M_BUMP.oscillators[0]
        v = M_BUMP.v.components.real
        dchi = chi_at(M_BUMP, x) - osc.chi0
        # coefficient of a^mu in the p''^mu row, transverse components
        expect_a = -1j * osc.g * dchi * osc.omega0**2 * v[0] * OM_EVAN \
            / (M_BUMP.c**2 * v[1] ** 2)
        assert R[14, 2] == pytest.approx(expect_a, rel=1e-12)
        assert R[15, 3] == pytest.approx(expect_a, rel=1e-12)
        expect_alpha = osc.g * dchi * osc.omega0**2 / (M_BUMP.c * v[1])
        assert R[14, 6] == pytest.approx(expect_alpha, rel=1e-12)

    def test_R_vanishes_for_uniform(self):
        R = assemble_R(M_FLAT, OM_EVAN, 0.3)
        assert np.max(np.abs(R)) == 0

    def test_requires_moving_medium(self):
        with pytest.raises(UnsupportedMedium):
            assemble_K(rest_medium(0.5, 1.0), OM_EVAN, 0, 0, 0.0)

    def test_requires_single_oscillator(self):
        m = MediumSpec(oscillators=(OscillatorSpec(0.3, 1.0, 0.5),
                                    OscillatorSpec(0.2, 2.0, 0.4)))
        with pytest.raises(UnsupportedMedium):
            assemble_K(comoving_medium(m, 0.5), OM_EVAN, 0, 0, 0.0)


class TestChannels:
    def test_spectrum_closed_under_conjugation(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        ks = np.array([ch.kx for ch in basis.channels])
        for k in ks:
            assert np.min(np.abs(ks - np.conj(k))) < 1e-8

    def test_transverse_sectors_mirror(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        ky_ = sorted(ch.kx.real for ch in basis.select("transverse-y"))
        kz_ = sorted(ch.kx.real for ch in basis.select("transverse-z"))
        assert np.allclose(ky_, kz_, atol=1e-10)

    def test_boosted_dispersion_oracle(self):
        for omega in (0.2, OM_EVAN, 1.4, OM_PROP):
            basis = classify_channels(M_BUMP, omega)
            assert boosted_channel_residual(M_BUMP, basis) < 1e-8

    def test_negative_norm_partner_exists(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        signs = {ch.norm_sign for ch in basis.select("transverse-y")
                 if ch.propagating and ch.flux != 0}
        assert signs == {1, -1}

    def test_flux_normalization(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        for ch in basis.channels:
            if ch.propagating and ch.flux != 0:
                assert abs(ch.flux) == 1.0


class TestTransferMatrix:
    def test_uniform_matches_exponential(self):
        T = integrate_transfer(M_FLAT, OM_EVAN, x_left=-2.0, x_right=1.5,
                               tol=1e-12)
        ref = expm(T.basis.C * T.length)
        rel = np.max(np.abs(T.matrix - ref)) / np.max(np.abs(ref))
        assert rel < 10 * 1e-12

    def test_small_perturbation_linear_departure(self):
        norms = []
        for dchi in (1e-3, 1e-4):
            m = medium(dchi)
            T = integrate_transfer(m, OM_EVAN, x_left=-4.0, x_right=4.0,
                                   tol=1e-12)
            ref = expm(T.basis.C * T.length)
            norms.append(np.max(np.abs(T.matrix - ref))
                         / np.max(np.abs(ref)))
        ratio = norms[0] / norms[1]
        assert 5 < ratio < 20  # O(delta chi)

    def test_round_trip(self):
        tol = 1e-11
        Tf = integrate_transfer(M_BUMP, OM_PROP, x_left=-8.0, x_right=8.0,
                                tol=tol)
        Tb = integrate_transfer(M_BUMP, OM_PROP, x_left=8.0, x_right=-8.0,
                                tol=tol)
        err = np.max(np.abs(Tb.matrix @ Tf.matrix - np.eye(16)))
        # local tolerance accumulates over the interval; 1e3 covers the
        # local-to-global growth for this length
        assert err < 1e3 * tol

    def test_translation_conjugates_by_free_propagation(self):
        d = 0.7
        T0 = integrate_transfer(M_BUMP, OM_PROP, x_left=-8.0, x_right=8.0,
                                tol=1e-11)
        Tsh = integrate_transfer(medium(0.05, center=d), OM_PROP,
                                 x_left=-8.0, x_right=8.0, tol=1e-11)
        C = classify_channels(M_FLAT, OM_PROP).C
        pred = expm(-C * d) @ T0.matrix @ expm(C * d)
        rel = np.max(np.abs(Tsh.matrix - pred)) / np.max(np.abs(pred))
        assert rel < 1e-8

    def test_evanescent_overflow_guard(self):
        with pytest.raises(EvanescentOverflow):
            integrate_transfer(M_BUMP, OM_EVAN, x_left=-40.0, x_right=40.0,
                               tol=1e-8)

    def test_endpoint_rule(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        xl, xr = default_endpoints(M_BUMP, basis)
        kmin = min(abs(ch.kx.real) for ch in basis.channels
                   if ch.propagating and abs(ch.kx.real) > 1e-12)
        assert xr == pytest.approx(max(40.0 * 1.0, 10.0 / kmin))
        xl2, xr2 = default_endpoints(M_BUMP, basis, growth_cap=1e8)
        assert xr2 <= xr
        im = max(abs(ch.kx.imag) for ch in basis.channels
                 if not ch.propagating)
        assert xr2 == pytest.approx(np.log(1e8) / im)


class TestScattering:
    def test_trivial_limit(self):
        sol = solve_scattering(medium(0.0), OM_EVAN, sector="transverse-y",
                               x_left=-8.0, x_right=8.0, tol=1e-12)
        assert sol.max_alpha_deviation() < 1e-8
        assert sol.max_beta() < 1e-8

    def test_pair_creation_present(self):
        sol = solve_scattering(M_BUMP, OM_EVAN, sector="transverse-y",
                               tol=1e-10)
        assert sol.max_beta() > 1e-3

    def test_born_scaling(self):
        b1 = solve_scattering(medium(0.05), OM_EVAN, sector="transverse-y",
                              tol=1e-10).max_beta()
        b2 = solve_scattering(medium(0.025), OM_EVAN, sector="transverse-y",
                              tol=1e-10).max_beta()
        assert b2 / b1 == pytest.approx(0.5, abs=0.05)

    def test_pseudo_unitarity_column_balance(self):
        sol = solve_scattering(M_BUMP, OM_EVAN, sector="transverse-y",
                               tol=1e-10)
        assert sol.pseudo_unitarity_residual < 1e-8

    def test_pseudo_unitarity_transfer_form(self):
        T = integrate_transfer(M_BUMP, OM_PROP, x_left=-8.0, x_right=8.0,
                               tol=1e-11)
        assert pseudo_unitarity_residual(T, "transverse-y") < 1e-8
        Ttilde, signs = transfer_in_channel_basis(T, "transverse-y")
        assert Ttilde.shape == (4, 4)
        assert set(signs) == {1.0, -1.0}

    def test_extract_from_transfer_matrix(self):
        T = integrate_transfer(M_BUMP, OM_PROP, x_left=-8.0, x_right=8.0,
                               tol=1e-11)
        sol = extract_bogoliubov(T, "transverse-y")
        assert sol.pseudo_unitarity_residual < 1e-10
        assert sol.transfer_pseudo_unitarity < 1e-6
        assert sol.max_beta() > 1e-4

    def test_transverse_sectors_agree(self):
        soly = solve_scattering(M_BUMP, OM_EVAN, sector="transverse-y",
                                tol=1e-10)
        solz = solve_scattering(M_BUMP, OM_EVAN, sector="transverse-z",
                                tol=1e-10)
        assert soly.max_beta() == pytest.approx(solz.max_beta(), rel=1e-6)

    def test_beta_even_in_ky(self):
        # no transverse profile dependence: flipping k_y leaves the total
        # pair-creation power invariant (individual amplitudes are only
        # defined up to rotations inside degenerate polarization clusters)
        ky = 0.15
        bp = solve_scattering(M_BUMP, OM_PROP, ky=ky, sector="full",
                              x_left=-8.0, x_right=8.0, tol=1e-10)
        bm = solve_scattering(M_BUMP, OM_PROP, ky=-ky, sector="full",
                              x_left=-8.0, x_right=8.0, tol=1e-10)
        assert bp.beta_power() == pytest.approx(bm.beta_power(), rel=1e-5)
        assert bp.beta_power() > 0

    def test_degeneracy_guard(self):
        # at ky = kz = 0 the y and z transverse channels coincide in k_x
        # but belong to different sector blocks, so a full-basis extraction
        # is ambiguous and must be refused
        T = integrate_transfer(M_BUMP, OM_PROP, x_left=-2.0, x_right=2.0,
                               tol=1e-10)
        with pytest.raises(ChannelDegeneracy):
            extract_bogoliubov(T, "full")


class TestFluxConservation:
    def scattered_boundary_state(self, m, omega, tol=1e-10):
        sol = solve_scattering(m, omega, sector="transverse-y", tol=tol)
        ch = sol.channels
        jin = sorted(sol.raw_coefficients)[0]
        W = ch[jin].vector.copy()
        side = sol.incident_sides[jin]
        for i, c in sol.raw_coefficients[jin].items():
            decaying_right = not ch[i].propagating and ch[i].kx.imag > 0
            decaying_left = not ch[i].propagating and ch[i].kx.imag < 0
            if side == "right" and (decaying_right
                                    or (ch[i].propagating
                                        and ch[i].direction > 0)):
                W += c * ch[i].vector
            if side == "left" and (decaying_left
                                   or (ch[i].propagating
                                       and ch[i].direction < 0)):
                W += c * ch[i].vector
        return W, side

    def test_plane_wave_exact(self):
        basis = classify_channels(M_FLAT, OM_EVAN)
        ch = [c for c in basis.select("transverse-y") if c.propagating][0]
        xs = np.linspace(-3, 3, 9)
        states = np.array([ch.vector * np.exp(1j * ch.kx * x)
                           for x in xs]).T
        drift = flux_conservation_check(M_FLAT, OM_EVAN, 0, 0, xs, states)
        assert drift < 1e-12

    def test_bump_drift_small(self):
        W, side = self.scattered_boundary_state(M_BUMP, OM_EVAN)
        basis = classify_channels(M_BUMP, OM_EVAN)
        xl, xr = default_endpoints(M_BUMP, basis, growth_cap=1e8)
        x0, x1 = (xr, xl) if side == "right" else (xl, xr)
        xs, states = propagate_state(M_BUMP, OM_EVAN, 0, 0, W, x0, x1,
                                     samples=33, tol=1e-10)
        assert flux_conservation_check(M_BUMP, OM_EVAN, 0, 0, xs, states) < 1e-8

    def test_drift_scales_with_tolerance(self):
        W, side = self.scattered_boundary_state(M_BUMP, OM_EVAN, tol=1e-11)
        basis = classify_channels(M_BUMP, OM_EVAN)
        xl, xr = default_endpoints(M_BUMP, basis, growth_cap=1e8)
        x0, x1 = (xr, xl) if side == "right" else (xl, xr)
        drifts = {}
        for tol in (1e-8, 1e-10, 1e-12):
            xs, states = propagate_state(M_BUMP, OM_EVAN, 0, 0, W, x0, x1,
                                         samples=9, tol=tol)
            drifts[tol] = flux_conservation_check(M_BUMP, OM_EVAN, 0, 0, xs,
                                                  states)
        assert drifts[1e-8] > drifts[1e-12]
        # roughly linear in the local tolerance (within 1.5 decades)
        assert abs(np.log10(drifts[1e-8] / drifts[1e-10]) - 2.0) < 1.5


class TestSeparatedSolutionOracle:
    def test_pde_residual(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        xl, xr = default_endpoints(M_BUMP, basis, growth_cap=1e8)
        ch = [c for c in basis.select("transverse-y")
              if c.propagating and c.flux != 0][0]
        sep = separate_variables(M_BUMP, OM_EVAN, 0.0, 0.0, ch.vector,
                                 xr, xl, tol=1e-12)
        res = separated_pde_residual(sep, np.linspace(xl + 1, xr - 1, 5))
        assert res["em"] < 1e-8
        assert res["pol"] < 1e-8
        assert res["gauge"] < 1e-10
        assert res["multiplier"] < 1e-8

    def test_multiplier_profile_identically_zero(self):
        basis = classify_channels(M_BUMP, OM_EVAN)
        ch = basis.select("transverse-y")[0]
        sep = separate_variables(M_BUMP, OM_EVAN, 0.0, 0.0, ch.vector,
                                 -2.0, 2.0, tol=1e-11)
        assert sep.multiplier(0.3) == 0.0

    def test_constant_coefficient_system_when_uniform(self):
        K1 = assemble_K(M_FLAT, OM_EVAN, 0.1, -0.2, -1.0)
        K2 = assemble_K(M_FLAT, OM_EVAN, 0.1, -0.2, 2.5)
        assert np.max(np.abs(K1 - K2)) == 0
