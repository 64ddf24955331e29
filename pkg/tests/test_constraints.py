import time

import numpy as np
import pytest

from covhopfield.constraints import (
    LatticePhaseSpace,
    LatticeSystem,
    Observable,
    build_and_invert_C,
    build_hamiltonian,
    constraint_chain,
    dirac_bracket,
    dirac_structure,
    dirac_table,
    operator_constraint_check,
    poisson_bracket,
)
from covhopfield.errors import SingularC, UnsupportedMedium
from covhopfield.kinematics import FourVector
from covhopfield.medium import FOUR_PI, MediumSpec, OscillatorSpec, rest_medium

REST = rest_medium(chi0=0.5, omega0=1.0, g=1.0)


def system(n=8, a=1.0, m=REST, xi=FOUR_PI):
    return LatticeSystem(LatticePhaseSpace(n_sites=n, spacing=a), m, xi=xi)


def moving_medium(vel=0.4, c=1.0):
    gamma = 1.0 / np.sqrt(1 - (vel / c) ** 2)
    v = FourVector.of(gamma * c, gamma * vel, 0, 0)
    return MediumSpec(oscillators=(OscillatorSpec(0.5, 1.0, 1.0),), v=v, c=c)


class TestPoissonBrackets:
    def test_canonical_pair(self):
        sys = system()
        val = poisson_bracket(sys.A_lower(1, 3), sys.Pi_A(1, 3), sys)
        assert val == pytest.approx(1.0 / sys.lattice.cell)

    def test_upper_index_bracket_carries_metric(self):
        sys = system()
        val = poisson_bracket(sys.A_upper(1, 3), sys.Pi_A(1, 3), sys)
        assert val == pytest.approx(-1.0 / sys.lattice.cell)
        val00 = poisson_bracket(sys.A_upper(0, 3), sys.Pi_A(0, 3), sys)
        assert val00 == pytest.approx(1.0 / sys.lattice.cell)

    def test_cross_component_vanishes(self):
        sys = system()
        assert poisson_bracket(sys.A_lower(1, 2), sys.Pi_A(2, 2), sys) == 0
        assert poisson_bracket(sys.A_lower(1, 2), sys.Pi_A(1, 3), sys) == 0

    def test_gamma1_gamma2(self):
        sys = system()
        for x, y in [(0, 0), (2, 2), (2, 3)]:
            val = poisson_bracket(sys.constraint(1, x), sys.constraint(2, y), sys)
            want = (1.0 / (sys.medium.c * sys.lattice.cell)) if x == y else 0.0
            assert val == pytest.approx(want)

    def test_antisymmetry(self):
        sys = system()
        rng = np.random.default_rng(3)
        for _ in range(5):
            f = Observable(rng.normal(size=sys.lattice.n_phase))
            g = Observable(rng.normal(size=sys.lattice.n_phase))
            assert poisson_bracket(f, g, sys) == pytest.approx(
                -poisson_bracket(g, f, sys), abs=1e-14
            )

    def test_jacobi_trivial_for_linear(self):
        # {f, g} of linear observables is a number, so each nested term
        # vanishes identically
        sys = system()
        rng = np.random.default_rng(4)
        f = Observable(rng.normal(size=sys.lattice.n_phase))
        g = Observable(rng.normal(size=sys.lattice.n_phase))
        inner = poisson_bracket(f, g, sys)
        const_obs = Observable(np.zeros(sys.lattice.n_phase), inner)
        h = Observable(rng.normal(size=sys.lattice.n_phase))
        assert abs(poisson_bracket(const_obs, h, sys)) <= 1e-14


class TestConstraintChain:
    def test_rest_frame_chain(self):
        report = constraint_chain(system(n=8))
        assert report.max_residual < 1e-10
        assert report.multiplier_formulas["z"] == "-c (d_i A^i + xi B)"
        assert report.multiplier_formulas["lambda"] == "0"
        assert report.multiplier_formulas["u"] == "0"

    def test_gamma3_bracket_form(self):
        # {Gamma_3, H} off the constraint surface carries exactly the
        # momentum and gradient terms with the displayed coefficients
        sys = system(n=8, m=moving_medium(0.3))
        H = build_hamiltonian(sys)
        m = sys.medium
        osc = m.oscillators[0]
        v = m.v.components.real
        s = 2
        computed = H.bracket_with(sys.constraint(3, s))
        expected = (
            -(osc.chi0 * osc.omega0**2 * m.c**2 / v[0] ** 2) * sys.v_dot_Pi_P(s)
            - (m.c * v[1] / v[0]) * sys.derivative(sys.v_dot_P, s)
        )
        assert computed.residual_against(expected) < 1e-10

    def test_chain_is_g_independent(self):
        sys_g = system(n=6, m=rest_medium(0.5, 1.0, g=0.7))
        sys_0 = system(n=6, m=rest_medium(0.5, 1.0, g=0.0))
        for fam in (3, 4):
            b_g = build_hamiltonian(sys_g).bracket_with(sys_g.constraint(fam, 1))
            b_0 = build_hamiltonian(sys_0).bracket_with(sys_0.constraint(fam, 1))
            assert b_g.residual_against(b_0) < 1e-12

    @pytest.mark.parametrize("xi", [1.0, FOUR_PI])
    def test_chain_any_xi(self, xi):
        report = constraint_chain(system(n=6, xi=xi))
        assert report.max_residual < 1e-10

    def test_boosted_frame_chain(self):
        report = constraint_chain(system(n=6, m=moving_medium(0.45)))
        assert report.max_residual < 1e-10

    def test_chain_with_general_c(self):
        m = rest_medium(0.5, 1.0, 1.0, c=2.5)
        report = constraint_chain(system(n=6, m=m))
        assert report.max_residual < 1e-10


class TestCMatrix:
    def test_rest_frame_blocks(self):
        sys = system(n=6)
        C, C_inv = build_and_invert_C(sys)
        cell = sys.lattice.cell
        base = 0  # site 0
        assert C[base + 0, base + 1] == pytest.approx(1.0 / cell)  # c = 1
        assert C[base + 2, base + 3] == pytest.approx(1.0 / cell)  # v.v = 1
        assert C[base + 4, base + 5] == pytest.approx(1.0 / cell)
        assert np.allclose(C, -C.T)

    def test_inverse(self):
        sys = system(n=6)
        C, C_inv = build_and_invert_C(sys)
        assert np.max(np.abs(C @ C_inv - np.eye(C.shape[0]))) < 1e-14

    def test_block_diagonal_across_sites(self):
        sys = system(n=6)
        C, _ = build_and_invert_C(sys)
        n = sys.lattice.n_sites
        for s1 in range(n):
            for s2 in range(n):
                if s1 != s2:
                    block = C[6 * s1:6 * s1 + 6, 6 * s2:6 * s2 + 6]
                    assert np.max(np.abs(block)) == 0

    def test_boosted_34_block_scaling(self):
        c = 2.0
        mv = moving_medium(0.8, c=c)
        sys = system(n=6, m=mv)
        C, _ = build_and_invert_C(sys)
        assert C[2, 3] == pytest.approx(c**2 / sys.lattice.cell)

    def test_singular_for_null_velocity(self):
        osc = (OscillatorSpec(0.5, 1.0, 1.0),)
        m = MediumSpec.__new__(MediumSpec)
        object.__setattr__(m, "oscillators", osc)
        object.__setattr__(m, "v", FourVector.of(1, 1, 0, 0))  # null
        object.__setattr__(m, "perturbation",
                           rest_medium(0.5, 1.0).perturbation)
        object.__setattr__(m, "c", 1.0)
        with pytest.raises(SingularC):
            build_and_invert_C(system(n=4, m=m))


class TestDiracBrackets:
    def test_electromagnetic_table(self):
        sys = system(n=8)
        cell = sys.lattice.cell
        eta = np.diag([1.0, -1.0, -1.0, -1.0])
        for mu in range(4):
            for nu in range(4):
                got = dirac_bracket(sys.A_upper(mu, 2), sys.Pi_A(nu, 2), sys)
                assert got * cell == pytest.approx(eta[mu, nu], abs=1e-12)

    def test_polarization_table_rest(self):
        sys = system(n=8)
        cell = sys.lattice.cell
        want = np.diag([0.0, -1.0, -1.0, -1.0])  # eta - v v / (v.v) at rest
        for mu in range(4):
            for nu in range(4):
                got = dirac_bracket(sys.P_upper(mu, 2), sys.Pi_P(nu, 2), sys)
                assert got * cell == pytest.approx(want[mu, nu], abs=1e-12)

    def test_polarization_table_boosted(self):
        m = moving_medium(0.6)
        sys = system(n=8, m=m)
        cell = sys.lattice.cell
        v = m.v.components.real
        eta = np.diag([1.0, -1.0, -1.0, -1.0])
        want = eta - np.outer(v, v) / 1.0  # v.v = c^2 = 1
        for mu in range(4):
            for nu in range(4):
                got = dirac_bracket(sys.P_upper(mu, 3), sys.Pi_P(nu, 3), sys)
                assert got * cell == pytest.approx(want[mu, nu], abs=1e-12)

    def test_b_and_lambda_sectors_frozen(self):
        sys = system(n=8)
        assert abs(dirac_bracket(sys.B(1), sys.pi_B(1), sys)) < 1e-14
        assert abs(dirac_bracket(sys.lam(1), sys.pi_lam(1), sys)) < 1e-14

    def test_off_site_vanishes(self):
        sys = system(n=8)
        got = dirac_bracket(sys.A_upper(1, 2), sys.Pi_A(1, 5), sys)
        assert abs(got) < 1e-14

    def test_spacing_independence(self):
        tables = []
        for a in (0.5, 1.0, 2.0):
            sys = system(n=8, a=a)
            t = dirac_table(sys)
            tables.append([e["computed"] for e in t["entries"]])
        assert np.allclose(tables[0], tables[1], atol=1e-12)
        assert np.allclose(tables[1], tables[2], atol=1e-12)

    def test_full_table_report(self):
        t = dirac_table(system(n=16))
        assert t["max_residual"] < 1e-12

    def test_operator_constraint_check(self):
        report = operator_constraint_check(system(n=8))
        assert report["max_constraint_bracket"] < 1e-12
        by_name = {e["bracket"]: e["computed"] for e in report["entries"]}
        assert abs(by_name["{P^0, Pi_P^0}_D (rest frame)"]) < 1e-12
        assert by_name["{P_1, Pi_P^1}_D canonical pair"] == pytest.approx(1.0)

    def test_acceptance_lattice_runtime(self):
        start = time.time()
        sys = system(n=16)
        t = dirac_table(sys)
        assert t["max_residual"] < 1e-12
        assert time.time() - start < 10.0


class TestGuards:
    def test_single_oscillator_only(self):
        m = MediumSpec(oscillators=(OscillatorSpec(0.3, 1.0, 0.5),
                                    OscillatorSpec(0.2, 2.0, 0.4)))
        with pytest.raises(UnsupportedMedium):
            system(m=m)

    def test_minimum_sites(self):
        with pytest.raises(ValueError):
            LatticePhaseSpace(n_sites=2, spacing=1.0)
