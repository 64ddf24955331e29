import numpy as np
import pytest

from covhopfield.errors import (
    DegenerateWavevector,
    NonNullWavevector,
    NullVelocity,
    NullWavevector,
    SuperluminalBoost,
)
from covhopfield.kinematics import (
    METRIC,
    Boost,
    FourVector,
    apply_projector,
    basis_completeness_residual,
    boost_vector,
    build_gitman_tyutin_basis,
    build_polarization_basis_P,
    compose_projectors,
    hermitian_dot,
    minkowski_dot,
    projector_commutator,
    projector_p,
    projector_v,
    transverse_pair,
)

RNG = np.random.default_rng(20260809)


def random_four_vector(complex_=True):
    re = RNG.normal(size=4)
    im = RNG.normal(size=4) if complex_ else 0.0
    return FourVector(re + 1j * im)


class TestMinkowskiDot:
    def test_timelike_unit(self):
        u = FourVector.of(1, 0, 0, 0)
        assert minkowski_dot(u, u) == 1

    def test_null_vector(self):
        u = FourVector.of(1, 0, 0, 1)
        assert minkowski_dot(u, u) == 0

    def test_gitman_tyutin_cross_norm(self):
        basis = build_gitman_tyutin_basis(FourVector.of(1, 0, 0, 1))
        assert minkowski_dot(basis[0], basis[3]) == pytest.approx(-1, abs=1e-14)

    def test_no_conjugation(self):
        u = FourVector.of(1j, 0, 0, 0)
        assert minkowski_dot(u, u) == pytest.approx(-1)
        assert hermitian_dot(u, u) == pytest.approx(1)

    def test_accepts_plain_sequences(self):
        assert minkowski_dot([1, 2, 0, 0], (1, 1, 0, 0)) == pytest.approx(-1)


class TestBoost:
    def test_identity_boost(self):
        u = random_four_vector()
        out = boost_vector(Boost(axis=1, velocity=0.0), u)
        assert np.allclose(out.components, u.components)

    def test_rest_velocity_maps_to_moving(self):
        c, v = 1.0, 0.6
        gamma = 1.0 / np.sqrt(1 - v * v)
        out = boost_vector(Boost(axis=1, velocity=-v, c=c), FourVector.of(c, 0, 0, 0))
        assert np.allclose(out.components, [gamma * c, gamma * v, 0, 0], atol=1e-14)

    @pytest.mark.parametrize("axis", [1, 2, 3])
    @pytest.mark.parametrize("velocity", [-0.9, -0.3, 0.2, 0.75])
    def test_dot_invariance(self, axis, velocity):
        b = Boost(axis=axis, velocity=velocity)
        for _ in range(5):
            u, w = random_four_vector(), random_four_vector()
            before = minkowski_dot(u, w)
            after = minkowski_dot(boost_vector(b, u), boost_vector(b, w))
            assert abs(after - before) <= 1e-12 * max(1.0, abs(before))

    def test_unit_determinant(self):
        assert np.linalg.det(Boost(axis=2, velocity=0.8).matrix()) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_superluminal_rejected(self):
        with pytest.raises(SuperluminalBoost):
            Boost(axis=1, velocity=1.0)
        with pytest.raises(SuperluminalBoost):
            Boost(axis=1, velocity=-2.0, c=1.5)

    def test_round_trip(self):
        b = Boost(axis=3, velocity=0.4)
        u = random_four_vector()
        back = boost_vector(b.inverse(), boost_vector(b, u))
        assert np.allclose(back.components, u.components, atol=1e-14)


class TestPolarizationBasisP:
    def test_rest_frame_example(self):
        omega, k = 1.3, 0.7
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(omega, 0, 0, k)
        basis = build_polarization_basis_P(v, p)
        assert np.allclose(basis[1].components, [0, 1, 0, 0])
        assert np.allclose(basis[2].components, [0, 0, 1, 0])
        assert np.allclose(basis[3].components, [0, 0, 0, -k / omega])

    @pytest.mark.parametrize("vel", [0.0, 0.35, -0.6])
    def test_transversality(self, vel):
        c = 1.0
        gamma = 1.0 / np.sqrt(1 - vel * vel)
        v = FourVector.of(gamma * c, gamma * vel, 0, 0)
        p = FourVector.of(0.9, 0.5, 0, 0)
        basis = build_polarization_basis_P(v, p, c=c)
        for lam in (1, 2):
            assert abs(minkowski_dot(v, basis[lam])) < 1e-12
            assert abs(minkowski_dot(p, basis[lam])) < 1e-12
        # third vector is v-transverse only
        assert abs(minkowski_dot(v, basis[3])) < 1e-12

    def test_orthonormality(self):
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(1.1, 0.2, 0.3, 0.9)
        basis = build_polarization_basis_P(v, p)
        for lam in (1, 2):
            for lamp in (1, 2):
                expected = -1.0 if lam == lamp else 0.0
                assert hermitian_dot(basis[lam], basis[lamp]) == pytest.approx(
                    expected, abs=1e-12
                )

    def test_completeness_decomposition(self):
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(1.7, 0.0, 0.0, 1.1)
        basis = build_polarization_basis_P(v, p)
        assert basis_completeness_residual(v, basis) < 1e-10

    def test_degenerate_wavevector(self):
        v = FourVector.of(1, 0, 0, 0)
        with pytest.raises(DegenerateWavevector):
            build_polarization_basis_P(v, FourVector.of(2.0, 0, 0, 0))

    def test_axis_selection_tie_break(self):
        # p along x: candidate axes y, z, lower index first
        v = FourVector.of(1, 0, 0, 0)
        basis = build_polarization_basis_P(v, FourVector.of(1.0, 0.5, 0, 0))
        assert np.allclose(basis[1].components, [0, 0, 1, 0])
        assert np.allclose(basis[2].components, [0, 0, 0, 1])


class TestGitmanTyutinBasis:
    def test_explicit_vectors(self):
        basis = build_gitman_tyutin_basis(FourVector.of(1, 0, 0, 1))
        assert np.allclose(basis[3].components, -1j * np.array([1, 0, 0, 1]))
        assert np.allclose(basis[0].components, -0.5j * np.array([1, 0, 0, -1]))

    def test_null_norms(self):
        p = FourVector.of(np.sqrt(5.0), 2.0, 0.0, 1.0)
        basis = build_gitman_tyutin_basis(p)
        assert abs(minkowski_dot(basis[0], basis[0])) < 1e-14
        assert abs(minkowski_dot(basis[3], basis[3])) < 1e-14
        assert minkowski_dot(basis[0], basis[3]) == pytest.approx(-1, abs=1e-14)

    def test_transverse_sector(self):
        p = FourVector.of(3.0, 0, 0, 3.0)
        basis = build_gitman_tyutin_basis(p)
        for lam in (1, 2):
            assert abs(minkowski_dot(p, basis[lam])) < 1e-14
            assert minkowski_dot(basis[lam], basis[lam]) == pytest.approx(-1)

    def test_non_null_rejected(self):
        with pytest.raises(NonNullWavevector):
            build_gitman_tyutin_basis(FourVector.of(1.0, 0, 0, 0.5))


class TestProjectors:
    def test_rest_frame_projector_v(self):
        P = projector_v(FourVector.of(1, 0, 0, 0))
        assert np.allclose(P, np.diag([0, -1, -1, -1]))

    def test_spacelike_projector_p(self):
        P = projector_p(FourVector.of(0, 0, 0, 1))
        assert np.allclose(P, np.diag([1, -1, -1, 0]))

    @pytest.mark.parametrize("vec,builder", [((1.0, 0.1, 0.2, 0.3), projector_v),
                                             ((0.4, 0.1, 1.2, 0.3), projector_p)])
    def test_annihilation_and_idempotence(self, vec, builder):
        u = FourVector.of(*vec)
        P = builder(u)
        lowered = u.lower()
        assert np.max(np.abs(lowered @ P)) < 1e-12
        assert np.max(np.abs(compose_projectors(P, P) - P)) < 1e-12

    def test_null_inputs_rejected(self):
        with pytest.raises(NullVelocity):
            projector_v(FourVector.of(1, 0, 0, 1))
        with pytest.raises(NullWavevector):
            projector_p(FourVector.of(1, 1, 0, 0))

    def test_commutator_vanishes_for_orthogonal_pair(self):
        # omega = 0 satisfies omega^2 != k^2 and makes dot(v, p) = 0
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(0.0, 0, 0, 1.4)
        assert np.max(np.abs(projector_commutator(v, p))) < 1e-12

    def test_commutator_annihilates_doubly_transverse_vectors(self):
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(1.2, 0, 0, 0.8)
        comm = projector_commutator(v, p)
        for e in transverse_pair(v, p):
            assert np.max(np.abs((comm @ METRIC) @ e.components)) < 1e-12

    def test_commutator_residual_is_reported_not_hidden(self):
        # for dot(v, p) != 0 the full kernels do not commute; the residual
        # is exposed so callers can see exactly how large it is
        v = FourVector.of(1, 0, 0, 0)
        p = FourVector.of(1.2, 0, 0, 0.8)
        res = projector_commutator(v, p)
        expect = minkowski_dot(v, p) / (
            minkowski_dot(v, v) * minkowski_dot(p, p)
        )
        manual = expect * (
            np.outer(v.components, p.components)
            - np.outer(p.components, v.components)
        )
        assert np.allclose(res, manual, atol=1e-12)

    def test_projection_keeps_transverse_content(self):
        v = FourVector.of(1, 0, 0, 0)
        P = projector_v(v)
        u = random_four_vector()
        proj = apply_projector(P, u)
        assert abs(minkowski_dot(v, proj)) < 1e-12
