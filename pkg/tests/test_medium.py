import numpy as np
import pytest

from covhopfield.errors import NonPositiveChi
from covhopfield.kinematics import Boost, FourVector
from covhopfield.medium import (
    FOUR_PI,
    MediumSpec,
    OscillatorSpec,
    PerturbationProfile,
    chi_at,
    chi_prime_at,
    integrability_check,
    renormalized_frequency,
    rest_medium,
)


def bump_medium(kind="gaussian", amplitude=0.1, width=1.0, center=0.0, **kw):
    prof = PerturbationProfile(kind=kind, amplitude=amplitude, width=width,
                               center=center)
    gamma = 1.0 / np.sqrt(1 - 0.25)
    v = FourVector.of(gamma, -0.5 * gamma, 0, 0)
    return MediumSpec(oscillators=(OscillatorSpec(0.5, 1.0, 1.0),), v=v,
                      perturbation=prof, **kw)


class TestChiAt:
    def test_no_perturbation(self):
        m = rest_medium(chi0=0.5, omega0=1.0)
        assert chi_at(m, 12.3) == 0.5

    def test_gaussian_peak(self):
        m = rest_medium(0.5, 1.0, perturbation=PerturbationProfile(
            "gaussian", amplitude=0.1, width=2.0, center=1.5))
        assert chi_at(m, 1.5) == pytest.approx(0.6, abs=1e-15)

    def test_sech2_far_value(self):
        m = rest_medium(0.5, 1.0, perturbation=PerturbationProfile(
            "sech2", amplitude=0.1, width=0.7, center=0.0))
        expected = 0.5 + 0.1 / np.cosh(10.0) ** 2
        assert chi_at(m, 7.0) == pytest.approx(expected, rel=1e-12)
        assert 1.0 / np.cosh(10.0) ** 2 == pytest.approx(8.2446e-9, rel=1e-4)

    @pytest.mark.parametrize("kind", ["gaussian", "sech2", "tanh-step-pair"])
    def test_asymptotically_constant(self, kind):
        m = rest_medium(0.5, 1.0, perturbation=PerturbationProfile(
            kind, amplitude=0.3, width=0.5, center=2.0))
        X = 2.0 + 41.0 * 0.5
        assert abs(chi_at(m, X) - 0.5) < 1e-12
        assert abs(chi_at(m, -X) - 0.5) < 1e-12

    def test_negative_amplitude_guard(self):
        with pytest.raises(NonPositiveChi):
            rest_medium(0.1, 1.0, perturbation=PerturbationProfile(
                "gaussian", amplitude=-0.1, width=1.0))


class TestChiPrime:
    @pytest.mark.parametrize("kind", ["gaussian", "sech2", "tanh-step-pair"])
    @pytest.mark.parametrize("x", [-1.3, 0.0, 0.4, 2.2])
    def test_matches_finite_difference(self, kind, x):
        m = rest_medium(0.5, 1.0, perturbation=PerturbationProfile(
            kind, amplitude=0.2, width=0.8, center=0.3))
        exact = chi_prime_at(m, x)
        results = {}
        for h in (1e-3, 1e-4):
            fd = (chi_at(m, x + h) - chi_at(m, x - h)) / (2 * h)
            results[h] = fd
            assert fd == pytest.approx(exact, abs=5 * h * h + 1e-12)
        # Richardson consistency: error shrinks ~ h^2
        e3 = abs(results[1e-3] - exact)
        e4 = abs(results[1e-4] - exact)
        if e3 > 1e-12:
            assert e4 < e3

    def test_zero_for_uniform(self):
        m = rest_medium(0.5, 1.0)
        assert chi_prime_at(m, 3.0) == 0.0


class TestRenormalizedFrequency:
    def test_decoupled(self):
        assert renormalized_frequency(OscillatorSpec(0.3, 2.0, 0.0), 0.3) == 2.0

    def test_direct_substitution(self):
        osc = OscillatorSpec(1.0 / FOUR_PI, 1.0, 1.0)
        assert renormalized_frequency(osc, 1.0 / FOUR_PI) == pytest.approx(
            np.sqrt(2.0), rel=1e-15
        )

    def test_monotone_in_g(self):
        lo = renormalized_frequency(OscillatorSpec(0.4, 1.0, 0.2), 0.4)
        hi = renormalized_frequency(OscillatorSpec(0.4, 1.0, 0.4), 0.4)
        assert lo < hi

    def test_lower_bound(self):
        osc = OscillatorSpec(0.4, 1.7, 0.3)
        assert renormalized_frequency(osc, 0.4) >= osc.omega0


class TestMediumSpec:
    def test_velocity_normalization_enforced(self):
        with pytest.raises(ValueError):
            MediumSpec(oscillators=(OscillatorSpec(0.5, 1.0),),
                       v=FourVector.of(1.2, 0, 0, 0))

    def test_boost_keeps_normalization(self):
        m = rest_medium(0.5, 1.0)
        mb = m.boosted(Boost(axis=1, velocity=0.6))
        assert mb.v[0] != m.v[0]
        # constructor revalidates dot(v, v) = c^2

    def test_needs_oscillator(self):
        with pytest.raises(ValueError):
            MediumSpec(oscillators=())


class TestIntegrabilityCheck:
    def test_uniform_is_zero(self):
        m = bump_medium(kind="gaussian", amplitude=0.0)
        m = MediumSpec(oscillators=m.oscillators, v=m.v)
        out = integrability_check(m, omega=1.0)
        assert out == {"value": 0.0, "finite": True, "tail_bound": 0.0}

    @pytest.mark.parametrize("kind", ["gaussian", "sech2", "tanh-step-pair"])
    def test_localized_profiles_finite(self, kind):
        m = bump_medium(kind=kind, amplitude=0.05, width=1.0)
        out = integrability_check(m, omega=0.8)
        assert out["finite"]
        assert 0 < out["value"] < np.inf
        assert out["tail_bound"] < 1e-8 * out["value"] + 1e-30

    def test_scales_with_amplitude(self):
        # approximately linear in the amplitude (chi'/chi carries a weak
        # nonlinearity through the chi denominator)
        lo = integrability_check(bump_medium(amplitude=0.01), omega=0.8)
        hi = integrability_check(bump_medium(amplitude=0.02), omega=0.8)
        assert hi["value"] == pytest.approx(2 * lo["value"], rel=5e-2)
