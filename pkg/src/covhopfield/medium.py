"""Dielectric medium description.

Oscillator parameters (chi, omega0, g), localized susceptibility
perturbation profiles with analytic derivatives, the coupling-renormalized
oscillator frequency, and the integrability bound used by the scattering
module to certify that asymptotic scattering states exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .errors import DivergentTail, NonPositiveChi
from .kinematics import Boost, FourVector, boost_vector, minkowski_dot

FOUR_PI = 4.0 * np.pi

_PROFILE_KINDS = ("none", "gaussian", "sech2", "tanh-step-pair")


@dataclass(frozen=True)
class OscillatorSpec:
    """One matter oscillator: susceptibility, resonance frequency, coupling."""

    chi0: float
    omega0: float
    g: float = 1.0

    def __post_init__(self):
        if self.chi0 <= 0:
            raise NonPositiveChi(f"chi0 = {self.chi0} must be > 0")
        if self.omega0 <= 0:
            raise ValueError(f"omega0 = {self.omega0} must be > 0")
        if self.g < 0:
            raise ValueError(f"g = {self.g} must be >= 0")


@dataclass(frozen=True)
class PerturbationProfile:
    """Localized shape added to chi: chi(x) = chi0 + amplitude * shape(x).

    shape peaks at 1 on the center and decays to 0 as |x| -> infinity, so
    the asymptotic medium is homogeneous and IN/OUT states exist.
    kind "tanh-step-pair" is a plateau of length `plateau` with tanh walls,
    never a one-sided step.
    """

    kind: str = "none"
    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0
    plateau: float | None = None

    def __post_init__(self):
        if self.kind not in _PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind != "none" and self.width <= 0:
            raise ValueError("width must be > 0")
        if self.plateau is None and self.kind == "tanh-step-pair":
            object.__setattr__(self, "plateau", 5.0 * self.width)

    def shape(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.width
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "gaussian":
            return np.exp(-0.5 * u * u)
        if self.kind == "sech2":
            return 1.0 / np.cosh(u) ** 2
        h = 0.5 * self.plateau / self.width
        norm = 2.0 * np.tanh(h)
        return (np.tanh(u + h) - np.tanh(u - h)) / norm

    def shape_prime(self, x):
        """d shape / dx, analytic."""
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.width
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "gaussian":
            return -u * np.exp(-0.5 * u * u) / self.width
        if self.kind == "sech2":
            t = np.tanh(u)
            return -2.0 * t / np.cosh(u) ** 2 / self.width
        h = 0.5 * self.plateau / self.width
        norm = 2.0 * np.tanh(h)
        return (np.cosh(u + h) ** -2 - np.cosh(u - h) ** -2) / (norm * self.width)


@dataclass(frozen=True)
class MediumSpec:
    """Bulk dielectric: oscillators, 4-velocity, optional chi perturbation.

    The perturbation applies to the first oscillator's susceptibility only;
    dot(v, v) must equal c^2.
    """

    oscillators: tuple
    v: FourVector = None
    perturbation: PerturbationProfile = field(default_factory=PerturbationProfile)
    c: float = 1.0

    def __post_init__(self):
        oscs = tuple(self.oscillators)
        if not oscs:
            raise ValueError("need at least one oscillator")
        object.__setattr__(self, "oscillators", oscs)
        if self.v is None:
            object.__setattr__(self, "v", FourVector.of(self.c, 0, 0, 0))
        vv = minkowski_dot(self.v, self.v)
        if abs(vv - self.c**2) > 1e-12 * self.c**2:
            raise ValueError(f"dot(v, v) = {vv} differs from c^2 = {self.c ** 2}")
        # reject perturbations that could drive chi non-positive anywhere
        osc0 = oscs[0]
        if self.perturbation.kind != "none":
            if osc0.chi0 + min(0.0, self.perturbation.amplitude) <= 0:
                raise NonPositiveChi(
                    "chi0 + amplitude must stay positive across the profile"
                )

    @property
    def n_oscillators(self) -> int:
        return len(self.oscillators)

    @property
    def is_rest_frame(self) -> bool:
        return bool(np.allclose(self.v.components, [self.c, 0, 0, 0], atol=1e-14))

    @property
    def is_homogeneous(self) -> bool:
        return self.perturbation.kind == "none"

    def boosted(self, b: Boost) -> "MediumSpec":
        return replace(self, v=boost_vector(b, self.v))


def rest_medium(chi0: float, omega0: float, g: float = 1.0, c: float = 1.0,
                perturbation: PerturbationProfile | None = None) -> MediumSpec:
    """Single-oscillator medium at rest; the common test configuration."""
    return MediumSpec(
        oscillators=(OscillatorSpec(chi0, omega0, g),),
        v=FourVector.of(c, 0, 0, 0),
        perturbation=perturbation or PerturbationProfile(),
        c=c,
    )


def chi_at(m: MediumSpec, x) -> np.ndarray | float:
    """chi of the first oscillator at comoving position x."""
    osc = m.oscillators[0]
    val = osc.chi0 + m.perturbation.amplitude * m.perturbation.shape(x)
    if np.any(np.asarray(val) <= 0):
        raise NonPositiveChi(f"chi(x) <= 0 at x = {x}")
    return val if np.ndim(x) else float(val)


def chi_prime_at(m: MediumSpec, x) -> np.ndarray | float:
    """d chi / dx, analytic (exact derivative of the profile)."""
    val = m.perturbation.amplitude * m.perturbation.shape_prime(x)
    return val if np.ndim(x) else float(val)


def renormalized_frequency(o: OscillatorSpec, chi: float) -> float:
    """Coupling-shifted oscillator frequency omega0 sqrt(1 + 4 pi g^2 chi)."""
    if chi <= 0:
        raise NonPositiveChi(f"chi = {chi} must be > 0")
    return o.omega0 * np.sqrt(1.0 + FOUR_PI * o.g**2 * chi)


def _r_entry_bound(m: MediumSpec, omega: float, x: float) -> float:
    """Largest |entry| of the x-dependent part of the first-order system.

    Mirrors the coefficient structure of the scattering assembly for a
    chi-only perturbation: entries scale with delta_chi(x) (through the
    polarization-electromagnetic coupling) and with chi'(x)/chi(x).
    """
    osc = m.oscillators[0]
    v0 = abs(m.v[0])
    v1 = abs(m.v[1])
    if v1 < 1e-300:
        v1 = 1e-300
    chi = chi_at(m, x)
    dchi = abs(chi - osc.chi0)
    rel = abs(chi_prime_at(m, x)) / chi
    w02 = osc.omega0**2
    c = m.c
    entries = (
        osc.g * v0 * abs(omega) * w02 * dchi / (c**2 * v1**2),
        osc.g * w02 * dchi / (c * v1),
        v0 * abs(omega) * rel / (c * v1),
        rel,
    )
    return max(entries)


def integrability_check(m: MediumSpec, omega: float, kT=(0.0, 0.0),
                        a: float = None) -> dict:
    """Bound int_a^inf |R(x)| dx for the scattering system.

    |R| is bounded by 16 times the largest entry magnitude (induced 1-norm
    bound).  Returns {"value": float, "finite": bool, "tail_bound": float}.
    Profiles accepted by the data model all decay at least exponentially,
    so the tail is bounded by width * bound(X_max).
    """
    prof = m.perturbation
    if prof.kind == "none":
        return {"value": 0.0, "finite": True, "tail_bound": 0.0}
    if a is None:
        a = prof.center - 60.0 * prof.width
    x_max = prof.center + 60.0 * prof.width
    if x_max <= a:
        x_max = a + 120.0 * prof.width

    def integrand(x):
        return 16.0 * _r_entry_bound(m, omega, x)

    value, _ = quad(integrand, a, x_max, limit=400)
    tail = 16.0 * _r_entry_bound(m, omega, x_max) * prof.width
    if not np.isfinite(value) or not np.isfinite(tail):
        raise DivergentTail("integrability bound did not converge")
    return {"value": float(value + tail), "finite": True, "tail_bound": float(tail)}
