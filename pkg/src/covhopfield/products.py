"""The conserved scalar product in its three equivalent forms.

Field form: the Noether charge of the global phase symmetry of the
complexified theory, integrated on a constant-time slice.  Constrained
form: the same plus the gauge-field term -(B* A~^0 - B~ A^0*).  Symplectic
form: i <(X, Pi)* , Omega (X~, Pi~)> over phase space with momenta computed
from their definitions; normalized by c/2 so all three agree exactly.

Fields live on a periodic uniform grid (1D or 3D); the trapezoid rule is
then exact for band-limited integrands up to roundoff.  Box normalization
replaces the continuum delta: a two-sided plane-wave overlap evaluates to
(coefficient) * |amplitude|^2 * V on coincident wavevectors and to 0 on
distinct grid-commensurate wavevectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, GridMismatch, UnsupportedMedium
from .medium import FOUR_PI, MediumSpec
from .modes import PlaneWaveMode

_METRIC_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class Grid:
    """Periodic uniform grid; `axes` names the spatial axes (1=x, 2=y, 3=z)
    along which fields vary.  Suppressed axes carry no variation and a unit
    box length, so a 1D grid integrates per unit transverse area."""

    shape: tuple
    spacing: float
    axes: tuple = (1,)

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("grid spacing must be > 0")
        if len(self.shape) != len(self.axes):
            raise ValueError("one axis label per grid dimension")
        if any(a not in (1, 2, 3) for a in self.axes):
            raise ValueError("axes must be spatial (1, 2 or 3)")

    @property
    def cell_volume(self) -> float:
        return self.spacing ** len(self.shape)

    @property
    def volume(self) -> float:
        return float(np.prod([n * self.spacing for n in self.shape]))

    def coordinates(self, axis: int) -> np.ndarray:
        """Coordinate array along spatial axis, broadcast to `shape`."""
        if axis not in self.axes:
            return np.zeros(self.shape)
        dim = self.axes.index(axis)
        xs = self.spacing * np.arange(self.shape[dim])
        reshape = [1] * len(self.shape)
        reshape[dim] = self.shape[dim]
        return np.broadcast_to(xs.reshape(reshape), self.shape).copy()

    def wavenumbers(self, axis: int) -> np.ndarray:
        dim = self.axes.index(axis)
        return 2.0 * np.pi * np.fft.fftfreq(self.shape[dim], d=self.spacing)


def spectral_derivative(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """d/dx_axis of a periodic grid function; exact for band-limited data."""
    if axis not in grid.axes:
        return np.zeros_like(values, dtype=complex)
    dim = values.ndim - len(grid.shape) + grid.axes.index(axis)
    k = grid.wavenumbers(axis)
    shape = [1] * values.ndim
    shape[dim] = len(k)
    fhat = np.fft.fft(values, axis=dim)
    return np.fft.ifft(1j * k.reshape(shape) * fhat, axis=dim)


@dataclass
class FieldConfiguration:
    """Snapshot of (A, P, B, lambda) and their time derivatives on a grid.

    Optional analytic gradients make single non-commensurate plane waves
    exactly representable; when absent, spatial derivatives fall back to
    spectral differentiation (exact for grid-commensurate superpositions).
    """

    grid: Grid
    A: np.ndarray
    dA_dt: np.ndarray
    P: np.ndarray
    dP_dt: np.ndarray
    B: np.ndarray
    dB_dt: np.ndarray
    lam: np.ndarray
    dlam_dt: np.ndarray
    grad_A0: np.ndarray | None = None  # (3, *shape)
    grad_P: np.ndarray | None = None   # (4, 3, *shape)

    @classmethod
    def zero(cls, grid: Grid) -> "FieldConfiguration":
        v4 = np.zeros((4, *grid.shape), dtype=complex)
        s = np.zeros(grid.shape, dtype=complex)
        return cls(grid, v4.copy(), v4.copy(), v4.copy(), v4.copy(),
                   s.copy(), s.copy(), s.copy(), s.copy(),
                   np.zeros((3, *grid.shape), dtype=complex),
                   np.zeros((4, 3, *grid.shape), dtype=complex))

    def a0_gradient(self, axis: int) -> np.ndarray:
        if self.grad_A0 is not None:
            return self.grad_A0[axis - 1]
        return spectral_derivative(self.A[0], self.grid, axis)

    def p_gradient(self, mu: int, axis: int) -> np.ndarray:
        if self.grad_P is not None:
            return self.grad_P[mu, axis - 1]
        return spectral_derivative(self.P[mu], self.grid, axis)


def mode_entry(mode: PlaneWaveMode, coeff: complex = 1.0):
    """Superposition entry (coeff, omega, k, A_amp, P_amp, B_amp) from an
    on-shell plane wave."""
    if len(mode.P_amps) != 1:
        raise UnsupportedMedium("field configurations carry one P field")
    return (coeff, mode.omega, mode.k, mode.A_amp.components,
            mode.P_amps[0].components, 0.0)


def from_plane_waves(grid: Grid, entries, t: float = 0.0) -> FieldConfiguration:
    """Assemble a configuration from plane-wave entries at time t.

    Each entry is (coeff, omega, kvec, A_amp, P_amp, B_amp); amplitudes may
    be FourVector or length-4 arrays.  Wavevector components along
    suppressed grid axes must vanish.
    """
    cfg = FieldConfiguration.zero(grid)
    for entry in entries:
        if isinstance(entry, PlaneWaveMode):
            entry = mode_entry(entry)
        coeff, omega, kvec, A_amp, P_amp, B_amp = entry
        A_amp = np.asarray(getattr(A_amp, "components", A_amp), dtype=complex)
        P_amp = np.asarray(getattr(P_amp, "components", P_amp), dtype=complex)
        kvec = np.asarray(kvec, dtype=float)
        for axis in (1, 2, 3):
            if axis not in grid.axes and abs(kvec[axis - 1]) > 0:
                raise ValueError(
                    f"wavevector component along suppressed axis {axis}"
                )
        phase = np.zeros(grid.shape, dtype=complex)
        phase += -1j * omega * t
        for axis in grid.axes:
            phase = phase + 1j * kvec[axis - 1] * grid.coordinates(axis)
        wave = coeff * np.exp(phase)
        cfg.A += np.multiply.outer(A_amp, wave)
        cfg.dA_dt += np.multiply.outer(-1j * omega * A_amp, wave)
        cfg.P += np.multiply.outer(P_amp, wave)
        cfg.dP_dt += np.multiply.outer(-1j * omega * P_amp, wave)
        cfg.B += B_amp * wave
        cfg.dB_dt += -1j * omega * B_amp * wave
        for j, axis in enumerate((1, 2, 3)):
            cfg.grad_A0[j] += 1j * kvec[j] * A_amp[0] * wave
            for mu in range(4):
                cfg.grad_P[mu, j] += 1j * kvec[j] * P_amp[mu] * wave
    return cfg


def _check_grids(u: FieldConfiguration, w: FieldConfiguration):
    if u.grid != w.grid:
        raise GridMismatch("configurations live on different grids")


def _single_oscillator(m: MediumSpec):
    if m.n_oscillators != 1:
        raise UnsupportedMedium(
            "field-level products support a single oscillator"
        )
    return m.oscillators[0]


def _f0(cfg: FieldConfiguration, c: float) -> np.ndarray:
    """F^{0 nu} on the grid: F^{00} = 0, F^{0j} = (1/c) dA^j/dt + d_j A^0."""
    out = np.zeros_like(cfg.A)
    for j, axis in enumerate((1, 2, 3), start=1):
        out[j] = cfg.dA_dt[j] / c + cfg.a0_gradient(axis)
    return out


def _v_dot_grad_P(cfg: FieldConfiguration, m: MediumSpec) -> np.ndarray:
    """(v^rho d_rho P)^mu = (v^0/c) dP/dt + v^k d_k P."""
    v = m.v.components
    out = (v[0] / m.c) * cfg.dP_dt.astype(complex)
    for j, axis in enumerate((1, 2, 3)):
        if v[j + 1] != 0:
            for mu in range(4):
                out[mu] += v[j + 1] * cfg.p_gradient(mu, axis)
    return out


def _minkowski_contract(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum_mu a^mu eta_{mu nu} b^nu pointwise on the grid."""
    signs = _METRIC_SIGNS.reshape((4,) + (1,) * (a.ndim - 1))
    return np.sum(signs * a * b, axis=0)


def _one_sided_density(u: FieldConfiguration, w: FieldConfiguration,
                       m: MediumSpec) -> np.ndarray:
    """(1/4pi) F_u^{*0 nu} w_nu + (v^0/(chi w0^2)) (v.grad P_u^*)^s w_{P s}
    - (g/c)(P_u^{*0} v.w_A - v^0 P_u^* . w_A)."""
    osc = _single_oscillator(m)
    v = m.v.components
    f0u = _f0(u, m.c).conj()
    vdpu = _v_dot_grad_P(u, m).conj()
    em = _minkowski_contract(f0u, w.A) / FOUR_PI
    pol = (v[0] / (osc.chi0 * osc.omega0**2)) * _minkowski_contract(vdpu, w.P)
    v_dot_wA = _minkowski_contract(
        np.multiply.outer(v, np.ones(u.grid.shape, dtype=complex)), w.A
    )
    g_term = -(osc.g / m.c) * (
        u.P[0].conj() * v_dot_wA - v[0] * _minkowski_contract(u.P.conj(), w.A)
    )
    return em + pol + g_term


def scalar_product_fields(u: FieldConfiguration, w: FieldConfiguration,
                          m: MediumSpec) -> complex:
    """Conserved scalar product of the unconstrained theory.

    Hermitian: product(u, w) = conj(product(w, u)).
    """
    _check_grids(u, w)
    density = _one_sided_density(u, w, m) - np.conj(_one_sided_density(w, u, m))
    return complex(0.5j * np.sum(density) * u.grid.cell_volume)


def scalar_product_constrained(u: FieldConfiguration, w: FieldConfiguration,
                               m: MediumSpec) -> complex:
    """Scalar product of the gauge-fixed theory: adds the B-field term
    -(B_u^* w_A^0 - B_w u_A^{0*}); coincides with the field form whenever
    B = 0 and A^0 = 0."""
    _check_grids(u, w)
    base = scalar_product_fields(u, w, m)
    b_term = -(u.B.conj() * w.A[0] - w.B * u.A[0].conj())
    return base + complex(0.5j * np.sum(b_term) * u.grid.cell_volume)


# ---------------------------------------------------------------------------
# symplectic (phase-space) form
# ---------------------------------------------------------------------------

@dataclass
class PhaseSpaceVector:
    """Direct-sum phase-space vector ({X^l}, {Pi_l}) on a grid.

    X stacks (A^mu, P^mu, B[, lambda]) and Pi the conjugate momenta with
    upper indices; the pairing lowers four-vector blocks with the metric.
    reduced=True drops the trivialized (lambda, pi_lambda) pair, leaving
    9 + 9 field dimensions per point (18; 20 when retained).
    """

    grid: Grid
    X: np.ndarray
    Pi: np.ndarray
    c: float
    reduced: bool = True

    @property
    def dimension(self) -> int:
        return 2 * self.X.shape[0]

    @property
    def pairing_signs(self) -> np.ndarray:
        signs = np.concatenate([_METRIC_SIGNS, _METRIC_SIGNS, [1.0]])
        if not self.reduced:
            signs = np.concatenate([signs, [1.0]])
        return signs


def phase_space_from_fields(cfg: FieldConfiguration, m: MediumSpec,
                            reduced: bool = True) -> PhaseSpaceVector:
    """Compute conjugate momenta from their definitions:

    Pi_A^0 = B/c, Pi_A^i = -(1/4 pi c) F^{0i} - (g/c^2)(v^0 P^i - v^i P^0),
    Pi_P^mu = -(v^0/(chi w0^2 c)) (v.grad P)^mu, pi_B = pi_lambda = 0.
    """
    osc = _single_oscillator(m)
    v = m.v.components
    n_fields = 9 if reduced else 10
    X = np.zeros((n_fields, *cfg.grid.shape), dtype=complex)
    Pi = np.zeros_like(X)
    X[0:4] = cfg.A
    X[4:8] = cfg.P
    X[8] = cfg.B
    if not reduced:
        X[9] = cfg.lam
    f0 = _f0(cfg, m.c)
    Pi[0] = cfg.B / m.c
    for j in range(1, 4):
        Pi[j] = -f0[j] / (FOUR_PI * m.c) \
            - (osc.g / m.c**2) * (v[0] * cfg.P[j] - v[j] * cfg.P[0])
    Pi[4:8] = -(v[0] / (osc.chi0 * osc.omega0**2 * m.c)) * _v_dot_grad_P(cfg, m)
    # pi_B = pi_lambda = 0 identically (primary constraints)
    return PhaseSpaceVector(grid=cfg.grid, X=X, Pi=Pi, c=m.c, reduced=reduced)


def symplectic_form_matrix(n_pairs: int) -> np.ndarray:
    """Omega = i [[0, I], [-I, 0]]; hermitian and squaring to the identity."""
    eye = np.eye(n_pairs)
    zero = np.zeros((n_pairs, n_pairs))
    return 1j * np.block([[zero, eye], [-eye, zero]])


def scalar_product_symplectic(u: PhaseSpaceVector, w: PhaseSpaceVector) -> complex:
    """(c/2) i integral of [X_u^* . Pi_w - Pi_u^* . X_w] with metric pairing.

    Equals the constrained scalar product evaluated on the fields the
    momenta were computed from; the c/2 normalization fixes the relative
    factor between the phase-space pairing and the Noether-charge form.
    """
    if u.grid != w.grid or u.reduced != w.reduced or u.X.shape != w.X.shape:
        raise DimensionMismatch("phase-space vectors are incompatible")
    signs = u.pairing_signs.reshape((-1,) + (1,) * len(u.grid.shape))
    density = np.sum(signs * (u.X.conj() * w.Pi - u.Pi.conj() * w.X), axis=0)
    return complex(0.5j * u.c * np.sum(density) * u.grid.cell_volume)


# ---------------------------------------------------------------------------
# norm classification
# ---------------------------------------------------------------------------

def plane_wave_norm_coefficient(m: MediumSpec, omega: float) -> float:
    """Norm density N(omega) of a unit-amplitude transverse plane wave:

        N = (omega/c) [1/(4 pi) + g^2 chi omega0^4 / (omega0^2 - omega^2)^2].

    product(u, u) = N |A|^2 V in box normalization.  For g = omega0 = 1
    the bracket reduces to [1/(4 pi) + chi / (1 - omega^2)^2].
    """
    osc = _single_oscillator(m)
    return (omega / m.c) * (
        1.0 / FOUR_PI
        + osc.g**2 * osc.chi0 * osc.omega0**4 / (osc.omega0**2 - omega**2) ** 2
    )


def classify_norm(u: FieldConfiguration, m: MediumSpec,
                  zero_tol: float = 1e-10) -> str:
    """Map the sign of product(u, u) to particle / antiparticle / zero-norm.

    The tolerance band is absolute, appropriate for unit-normalized modes;
    rescale it for configurations with very different magnitudes.
    """
    norm = scalar_product_constrained(u, u, m)
    if abs(norm.imag) > max(zero_tol, 1e-12 * abs(norm.real)):
        raise ValueError(f"norm has a nonreal value {norm}")
    if norm.real > zero_tol:
        return "particle"
    if norm.real < -zero_tol:
        return "antiparticle"
    return "zero-norm"
