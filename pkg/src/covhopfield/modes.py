"""Homogeneous-medium plane-wave solutions and the polariton dispersion.

The dispersion relation is never hard-coded: branch frequencies are the
roots of the determinant of the Fourier-transformed transverse field
equations, found by bracketed bisection between the oscillator resonances.
Constructed modes are validated by direct substitution into the field
equations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence, OffShell, ResonanceSingularity
from .kinematics import Boost, FourVector, boost_vector, build_polarization_basis_P, minkowski_dot
from .medium import FOUR_PI, MediumSpec, renormalized_frequency

_RESONANCE_GUARD = 1e-9


@dataclass(frozen=True)
class BranchSample:
    branch: str
    k: float
    omega: float
    residual: float


@dataclass(frozen=True)
class DispersionBranch:
    """One dispersion branch sampled on a k-grid."""

    branch: str
    k: np.ndarray
    omega: np.ndarray
    residual: float  # max secular-equation residual over the samples


@dataclass(frozen=True)
class PlaneWaveMode:
    """On-shell plane wave (A, P) ~ exp(-i omega t + i k.x).

    P_amps carries one polarization amplitude per oscillator.
    """

    omega: float
    k: np.ndarray
    polarization: int
    branch: str
    A_amp: FourVector
    P_amps: tuple
    medium: MediumSpec

    @property
    def P_amp(self) -> FourVector:
        return self.P_amps[0]

    @property
    def wavevector(self) -> FourVector:
        c = self.medium.c
        return FourVector.of(self.omega / c, *self.k)


def _coupled_oscillators(m: MediumSpec):
    return [o for o in m.oscillators if o.g > 0]


def _decoupled_oscillators(m: MediumSpec):
    return [o for o in m.oscillators if o.g == 0]


def secular_matrix(m: MediumSpec, omega: float, k: float) -> np.ndarray:
    """Transverse-sector matrix of the Fourier-transformed field equations.

    Row 0 is the electromagnetic equation, row j >= 1 the j-th coupled
    oscillator equation; a mode exists where the determinant vanishes.
    """
    osc = _coupled_oscillators(m)
    c = m.c
    n = len(osc)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = -(k * k - (omega / c) ** 2) / FOUR_PI
    for j, o in enumerate(osc, start=1):
        M[0, j] = 1j * omega * o.g / c
        M[j, 0] = -1j * omega * o.g / c
        M[j, j] = (omega * omega - o.omega0**2) / (o.chi0 * o.omega0**2)
    return M


def _secular_det(m: MediumSpec, omega: float, k: float) -> float:
    return np.linalg.det(secular_matrix(m, omega, k)).real


def _det_scale(m: MediumSpec, omega: float, k: float) -> float:
    """Magnitude scale of the determinant for relative residuals."""
    osc = _coupled_oscillators(m)
    c = m.c
    d = [abs((omega**2 - o.omega0**2) / (o.chi0 * o.omega0**2)) for o in osc]
    em = abs(k * k - (omega / c) ** 2) / FOUR_PI
    prod_all = np.prod(d) if d else 1.0
    scale = em * prod_all
    for j, o in enumerate(osc):
        rest = np.prod([dj for i, dj in enumerate(d) if i != j]) if len(d) > 1 else 1.0
        scale += (omega * o.g / c) ** 2 * rest
    return max(scale, 1e-300)


def dispersion_residual(m: MediumSpec, omega: float, k: float) -> float:
    return abs(_secular_det(m, omega, k)) / _det_scale(m, omega, k)


def _require_rest_homogeneous(m: MediumSpec):
    if not m.is_homogeneous:
        raise ValueError("dispersion requires a homogeneous medium")
    if not m.is_rest_frame:
        raise ValueError("dispersion requires the rest frame v = (c, 0, 0, 0)")


def dispersion_solve(m: MediumSpec, k: float) -> list[BranchSample]:
    """Positive branch frequencies at wavenumber |k|.

    For N coupled oscillators there are N + 1 branches; uncoupled (g = 0)
    oscillators contribute exact flat branches omega = omega0 and, if no
    oscillator couples, the electromagnetic branch omega = c |k| is exact.
    """
    _require_rest_homogeneous(m)
    k = abs(float(k))
    samples: list[BranchSample] = []
    coupled = _coupled_oscillators(m)

    if not coupled:
        samples.append(BranchSample("em-only", k, m.c * k, 0.0))
        for o in _decoupled_oscillators(m):
            samples.append(BranchSample("pol-only", k, o.omega0, 0.0))
        return samples

    resonances = sorted(o.omega0 for o in coupled)
    omega_hi = np.sqrt(
        sum(renormalized_frequency(o, o.chi0) ** 2 for o in coupled)
        + (m.c * k) ** 2
    ) + max(resonances) + m.c * k + 1.0

    edges = [max(k * m.c * 1e-14, 1e-14)]
    for w0 in resonances:
        edges.append(w0 * (1.0 - _RESONANCE_GUARD))
        edges.append(w0 * (1.0 + _RESONANCE_GUARD))
    edges.append(omega_hi)

    intervals = [(edges[2 * i], edges[2 * i + 1]) for i in range(len(resonances) + 1)]
    f = lambda w: _secular_det(m, w, k)

    roots = []
    for lo, hi in intervals:
        if hi <= lo:
            raise NoConvergence(f"empty bracket ({lo}, {hi})")
        grid = np.linspace(lo, hi, 65)
        vals = [f(w) for w in grid]
        found = None
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                found = grid[i]
                break
            if np.sign(vals[i]) != np.sign(vals[i + 1]):
                found = brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16)
                break
        if found is None:
            raise NoConvergence(
                f"no sign change of the secular determinant in ({lo}, {hi})"
            )
        roots.append(float(found))

    n_branch = len(roots)
    for i, w in enumerate(roots):
        if n_branch == 2:
            label = "lower" if i == 0 else "upper"
        else:
            label = "lower" if i == 0 else ("upper" if i == n_branch - 1 else f"mid_{i}")
        samples.append(BranchSample(label, k, w, dispersion_residual(m, w, k)))
    for o in _decoupled_oscillators(m):
        samples.append(BranchSample("pol-only", k, o.omega0, 0.0))
    return samples


def dispersion_scan(m: MediumSpec, ks) -> list[DispersionBranch]:
    """Sample every branch over a k-grid."""
    ks = np.asarray(ks, dtype=float)
    per_branch: dict[str, list] = {}
    for k in ks:
        for s in dispersion_solve(m, k):
            per_branch.setdefault(s.branch, []).append(s)
    out = []
    for label, ss in per_branch.items():
        out.append(
            DispersionBranch(
                branch=label,
                k=np.array([s.k for s in ss]),
                omega=np.array([s.omega for s in ss]),
                residual=max(s.residual for s in ss),
            )
        )
    return out


def plane_wave_ratio(m: MediumSpec, omega: float, oscillator: int = 0) -> complex:
    """Amplitude ratio P_amp / A_amp for a transverse on-shell wave.

    Derived from the polarization field equation:
        ratio = -i g chi omega0^2 omega / (c (omega0^2 - omega^2)).
    For omega0 = 1 and g = 1 this reduces to the frequently quoted
    -i chi omega / (c (omega0^2 - omega^2)); for other parameters the two
    conventions differ by the factor g * omega0^2, which is exposed via
    :func:`ratio_convention_factor` rather than silently absorbed.
    """
    o = m.oscillators[oscillator]
    denom = o.omega0**2 - omega**2
    if abs(denom) < 1e-12 * o.omega0**2:
        raise ResonanceSingularity(f"omega = {omega} too close to {o.omega0}")
    return -1j * o.g * o.chi0 * o.omega0**2 * omega / (m.c * denom)


def ratio_convention_factor(m: MediumSpec, oscillator: int = 0) -> float:
    """Factor between the dynamical amplitude ratio and the bare
    chi/(omega0^2 - omega^2) normalization; equals 1 iff g = omega0 = 1."""
    o = m.oscillators[oscillator]
    return o.g * o.omega0**2


def mode_equation_residual(m: MediumSpec, omega: float, kvec, A_amp, P_amps,
                           B_amp: complex = 0.0, xi: float = FOUR_PI) -> float:
    """Relative residual of the field equations for a plane-wave ansatz.

    Valid for any medium 4-velocity, so boosted modes can be checked in the
    boosted frame.  P_amps is one amplitude four-vector per oscillator.
    """
    c = m.c
    kvec = np.asarray(kvec, dtype=complex)  # complex k_x for evanescent waves
    kmu = np.array([omega / c, *kvec], dtype=complex)
    A = np.asarray(A_amp.components if isinstance(A_amp, FourVector) else A_amp,
                   dtype=complex)
    if isinstance(P_amps, FourVector):
        P_amps = (P_amps,)
    Ps = [np.asarray(p.components if isinstance(p, FourVector) else p, dtype=complex)
          for p in P_amps]
    v = m.v.components

    kk = minkowski_dot(kmu, kmu)
    kA = minkowski_dot(kmu, A)
    vk = minkowski_dot(v, kmu)
    vA = minkowski_dot(v, A)

    r_em = (kk * A - kmu * kA) / FOUR_PI - 1j * kmu * B_amp
    scale = max(np.max(np.abs(kk * A / FOUR_PI)), np.max(np.abs(kmu * kA / FOUR_PI)),
                abs(B_amp) * np.max(np.abs(kmu)), 1e-300)
    res = 0.0
    for o, P in zip(m.oscillators, Ps):
        kP = minkowski_dot(kmu, P)
        r_em = r_em + 1j * (o.g / c) * (vk * P - v * kP)
        scale = max(scale, (o.g / c) * abs(vk) * np.max(np.abs(P)))
        r_p = (vk**2 / (o.chi0 * o.omega0**2) - 1.0 / o.chi0) * P \
            - 1j * (o.g / c) * (vk * A - kmu * vA)
        p_scale = max(abs(vk**2 / (o.chi0 * o.omega0**2)) * np.max(np.abs(P)),
                      np.max(np.abs(P)) / o.chi0,
                      (o.g / c) * abs(vk) * np.max(np.abs(A)), 1e-300)
        res = max(res, float(np.max(np.abs(r_p))) / p_scale)
    r_b = -1j * kA + xi * B_amp
    field_scale = max(np.max(np.abs(A)),
                      max(np.max(np.abs(P)) for P in Ps), 1e-300)
    b_scale = max(np.max(np.abs(kmu)) * field_scale, xi * abs(B_amp), 1e-300)
    res = max(res, float(np.max(np.abs(r_em))) / scale, abs(r_b) / b_scale)
    return res


def make_plane_wave(m: MediumSpec, kvec, polarization: int, branch: str,
                    amplitude: complex = 1.0) -> PlaneWaveMode:
    """Construct an on-shell transverse plane wave on the requested branch.

    The A amplitude lies along the transverse basis vector e_lambda and the
    polarization amplitudes follow from the field equations; the result is
    validated by direct substitution (residual < 1e-9).
    """
    _require_rest_homogeneous(m)
    if polarization not in (1, 2):
        raise ValueError("only transverse polarizations 1 and 2 are supported")
    kvec = np.asarray(kvec, dtype=float)
    kmag = float(np.linalg.norm(kvec))
    samples = {s.branch: s for s in dispersion_solve(m, kmag)}
    if branch not in samples:
        raise ValueError(f"branch {branch!r} not available; have {sorted(samples)}")
    omega = samples[branch].omega

    kmu = FourVector.of(omega / m.c, *kvec)
    basis = build_polarization_basis_P(m.v, kmu, c=m.c)
    e = basis[polarization]

    if branch == "em-only":
        A = e * amplitude
        P_amps = tuple(FourVector.of(0, 0, 0, 0) for _ in m.oscillators)
    elif branch == "pol-only":
        A = FourVector.of(0, 0, 0, 0)
        P_amps = tuple(
            e * amplitude if o.g == 0 and o.omega0 == omega
            else FourVector.of(0, 0, 0, 0)
            for o in m.oscillators
        )
    else:
        A = e * amplitude
        P_amps = tuple(
            e * (plane_wave_ratio_for(m, o, omega) * amplitude)
            for o in m.oscillators
        )

    mode = PlaneWaveMode(omega=omega, k=kvec, polarization=polarization,
                         branch=branch, A_amp=A, P_amps=P_amps, medium=m)
    res = mode_equation_residual(m, omega, kvec, A, P_amps)
    if res > 1e-9:
        raise OffShell(f"field-equation residual {res:.3e} exceeds 1e-9")
    return mode


def plane_wave_ratio_for(m: MediumSpec, o, omega: float) -> complex:
    denom = o.omega0**2 - omega**2
    if abs(denom) < 1e-12 * o.omega0**2:
        raise ResonanceSingularity(f"omega = {omega} too close to {o.omega0}")
    return -1j * o.g * o.chi0 * o.omega0**2 * omega / (m.c * denom)


def conjugate_mode(mode: PlaneWaveMode) -> PlaneWaveMode:
    """Negative-frequency partner: complex-conjugate amplitudes, k -> -k.

    The conjugated field exp(+i omega t - i k.x) solves the same equations;
    its conserved-product norm flips sign.
    """
    return replace(
        mode,
        k=-mode.k,
        A_amp=mode.A_amp.conjugate(),
        P_amps=tuple(p.conjugate() for p in mode.P_amps),
        omega=-mode.omega,
    )


def boost_mode(mode: PlaneWaveMode, b: Boost) -> PlaneWaveMode:
    """Boost a mode and its medium to another inertial frame."""
    kmu = boost_vector(b, mode.wavevector)
    new_medium = mode.medium.boosted(b)
    omega = kmu[0].real * mode.medium.c
    return replace(
        mode,
        omega=omega,
        k=kmu.components[1:].real.copy(),
        A_amp=boost_vector(b, mode.A_amp),
        P_amps=tuple(boost_vector(b, p) for p in mode.P_amps),
        medium=new_medium,
    )
