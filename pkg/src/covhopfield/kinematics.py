"""Minkowski four-vector algebra, boosts, polarization bases and projectors.

Conventions: metric diag(+1, -1, -1, -1); contravariant components are stored;
plane waves carry exp(-i omega t + i k.x) with omega > 0.  All types are
immutable value objects and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateWavevector,
    NonNullWavevector,
    NullVelocity,
    NullWavevector,
    SuperluminalBoost,
)

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

ArrayLike = "np.ndarray | FourVector | list | tuple"


def _components(u) -> np.ndarray:
    if isinstance(u, FourVector):
        return u.components
    a = np.asarray(u, dtype=complex)
    if a.shape != (4,):
        raise ValueError(f"expected 4 components, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class FourVector:
    """Complex contravariant four-vector in signature (+,-,-,-)."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=complex)
        if arr.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "components", arr)

    @classmethod
    def of(cls, t, x, y, z) -> "FourVector":
        return cls(np.array([t, x, y, z], dtype=complex))

    def __getitem__(self, mu: int) -> complex:
        return self.components[mu]

    def __add__(self, other) -> "FourVector":
        return FourVector(self.components + _components(other))

    def __sub__(self, other) -> "FourVector":
        return FourVector(self.components - _components(other))

    def __mul__(self, scalar) -> "FourVector":
        return FourVector(self.components * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "FourVector":
        return FourVector(self.components / scalar)

    def __neg__(self) -> "FourVector":
        return FourVector(-self.components)

    def conjugate(self) -> "FourVector":
        return FourVector(self.components.conj())

    @property
    def time(self) -> complex:
        return self.components[0]

    @property
    def spatial(self) -> np.ndarray:
        return self.components[1:]

    def lower(self) -> np.ndarray:
        """Covariant components eta_{mu nu} u^nu."""
        return METRIC @ self.components

    def dot(self, other) -> complex:
        return minkowski_dot(self, other)


def minkowski_dot(u, v) -> complex:
    """u^0 v^0 - u.v without conjugation."""
    a, b = _components(u), _components(v)
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]


def hermitian_dot(u, v) -> complex:
    """Minkowski dot with the first argument conjugated."""
    return minkowski_dot(_components(u).conj(), v)


@dataclass(frozen=True)
class Boost:
    """Lorentz boost by `velocity` along coordinate axis 1, 2 or 3."""

    axis: int
    velocity: float
    c: float = 1.0

    def __post_init__(self):
        if self.axis not in (1, 2, 3):
            raise ValueError("boost axis must be 1, 2 or 3")
        if abs(self.velocity) >= self.c:
            raise SuperluminalBoost(
                f"|velocity| = {abs(self.velocity)} >= c = {self.c}"
            )

    @property
    def gamma(self) -> float:
        beta = self.velocity / self.c
        return 1.0 / np.sqrt(1.0 - beta * beta)

    def matrix(self) -> np.ndarray:
        beta = self.velocity / self.c
        g = self.gamma
        L = np.eye(4)
        a = self.axis
        L[0, 0] = g
        L[a, a] = g
        L[0, a] = -g * beta
        L[a, 0] = -g * beta
        return L

    def inverse(self) -> "Boost":
        return Boost(self.axis, -self.velocity, self.c)


def boost_vector(b: Boost, u) -> FourVector:
    """Apply a boost; preserves minkowski_dot to machine precision."""
    return FourVector(b.matrix() @ _components(u))


@dataclass(frozen=True)
class PolarizationBasis:
    """Labeled set of polarization four-vectors.

    kind "rest-frame-P": three vectors for the velocity-transverse
    polarization field, lambda = 1..3.
    kind "gitman-tyutin-A": four null-normalized vectors for the covariant
    gauge field, lambda = 0..3.
    """

    vectors: tuple
    kind: str
    labels: tuple = field(default=())

    def __post_init__(self):
        if not self.labels:
            start = 0 if self.kind == "gitman-tyutin-A" else 1
            object.__setattr__(
                self, "labels", tuple(range(start, start + len(self.vectors)))
            )

    def __getitem__(self, lam: int) -> FourVector:
        return self.vectors[self.labels.index(lam)]


_SPATIAL_AXES = (
    FourVector.of(0, 1, 0, 0),
    FourVector.of(0, 0, 1, 0),
    FourVector.of(0, 0, 0, 1),
)


def transverse_pair(v, p) -> tuple[FourVector, FourVector]:
    """Two unit spacelike vectors orthogonal (Minkowski) to both v and p.

    Candidates are the coordinate axes least aligned with the spatial part
    of p (ties broken by lower axis index), orthogonalized by Gram-Schmidt.
    When v and p are spatially collinear the result has the plain (0, e)
    form with e.e' = delta.
    """
    v = FourVector(_components(v))
    p = FourVector(_components(p))
    vv = minkowski_dot(v, v)
    if abs(vv) < 1e-300:
        raise NullVelocity("dot(v, v) = 0")
    # part of p orthogonal to v; vanishes iff p is proportional to v
    q = p - v * (minkowski_dot(v, p) / vv)
    qq = hermitian_dot(q, q)
    scale = max(abs(hermitian_dot(p, p)), abs(vv), 1.0)
    if abs(qq) < 1e-24 * scale:
        raise DegenerateWavevector("spatial wavevector vanishes in the v-frame")

    psp = np.abs(np.asarray(p.spatial, dtype=complex))
    pn = np.linalg.norm(psp)
    align = psp / pn if pn > 0 else np.zeros(3)
    order = sorted(range(3), key=lambda i: (align[i], i))

    basis: list[FourVector] = []
    for idx in order:
        w = _SPATIAL_AXES[idx]
        # Minkowski Gram-Schmidt against v, q and previously accepted vectors
        w = w - v * (hermitian_dot(v, w) / hermitian_dot(v, v))
        w = w - q * (hermitian_dot(q, w) / qq)
        for e in basis:
            w = w - e * (hermitian_dot(e, w) / hermitian_dot(e, e))
        norm2 = -hermitian_dot(w, w)  # spacelike: positive
        if norm2.real < 1e-20:
            continue
        basis.append(w / np.sqrt(norm2.real))
        if len(basis) == 2:
            return basis[0], basis[1]
    raise DegenerateWavevector("could not construct a transverse pair")


def build_polarization_basis_P(v, p, omega=None, c: float = 1.0) -> PolarizationBasis:
    """Basis {e1, e2, v/c - p c/omega} for the polarization field.

    omega defaults to dot(v, p); e1 and e2 are unit spacelike vectors
    transverse to both v and p, the third is transverse to v only.
    """
    v = FourVector(_components(v))
    p = FourVector(_components(p))
    w = minkowski_dot(v, p)
    if omega is None:
        omega = w
    elif abs(omega - w) > 1e-9 * max(abs(w), 1.0):
        raise ValueError(f"omega = {omega} does not match dot(v, p) = {w}")
    if abs(omega) < 1e-300:
        raise DegenerateWavevector("dot(v, p) = 0; third basis vector undefined")
    e1, e2 = transverse_pair(v, p)
    e3 = v / c - p * (c / omega)
    return PolarizationBasis(vectors=(e1, e2, e3), kind="rest-frame-P")


def build_gitman_tyutin_basis(p, tol: float = 1e-10) -> PolarizationBasis:
    """Null tetrad {e0, e1, e2, e3} with e0.e0 = e3.e3 = 0 and e0.e3 = -1.

    Requires p null with p^0 = |p| > 0.
    """
    pc = _components(p)
    pp = minkowski_dot(pc, pc)
    pmag = np.linalg.norm(pc[1:])
    scale = max(abs(pc[0]) ** 2, pmag**2, 1.0)
    if abs(pp) > tol * scale:
        raise NonNullWavevector(f"dot(p, p) = {pp} not null within tolerance")
    if pmag <= 0 or pc[0].real <= 0:
        raise NonNullWavevector("need p^0 = |p| > 0")
    e0 = FourVector(
        -1j / (2.0 * pmag) * np.concatenate(([pmag], -pc[1:]))
    )
    e3 = FourVector(-1j * pc / pmag)
    # spatial transverse unit pair; v plays no role for a null tetrad
    rest_v = FourVector.of(1, 0, 0, 0)
    e1, e2 = transverse_pair(rest_v, p)
    return PolarizationBasis(vectors=(e0, e1, e2, e3), kind="gitman-tyutin-A")


def projector_v(v) -> np.ndarray:
    """P^{mu nu} = eta^{mu nu} - v^mu v^nu / (v.v); annihilates v, idempotent."""
    vc = _components(v)
    vv = minkowski_dot(vc, vc)
    if abs(vv) < 1e-300:
        raise NullVelocity("dot(v, v) = 0")
    return METRIC.astype(complex) - np.outer(vc, vc) / vv


def projector_p(p) -> np.ndarray:
    """Same construction for the wavevector: eta^{mu nu} - p^mu p^nu / (p.p)."""
    pc = _components(p)
    pp = minkowski_dot(pc, pc)
    if abs(pp) < 1e-300:
        raise NullWavevector("dot(p, p) = 0")
    return METRIC.astype(complex) - np.outer(pc, pc) / pp


def apply_projector(P: np.ndarray, u) -> FourVector:
    """(P u)^mu = P^{mu nu} eta_{nu rho} u^rho."""
    return FourVector(P @ METRIC @ _components(u))


def compose_projectors(P1: np.ndarray, P2: np.ndarray) -> np.ndarray:
    """Operator composition of two upper-index kernels: P1^{mu nu} eta P2."""
    return P1 @ METRIC @ P2


def projector_commutator(v, p) -> np.ndarray:
    """Residual kernel of P_v P_p - P_p P_v under operator composition.

    Vanishes identically iff dot(v, p) = 0; on vectors transverse to both
    v and p the commutator annihilates for any v, p.
    """
    Pv, Pp = projector_v(v), projector_p(p)
    return compose_projectors(Pv, Pp) - compose_projectors(Pp, Pv)


def basis_completeness_residual(v, basis: PolarizationBasis) -> float:
    """Max-abs residual of the metric decomposition

    eta^{mu nu} = v^mu v*^nu / (v.v*) + sum_l e_l^mu e_l*^nu / (e_l.e_l*).

    This is the basis-independent (sign-corrected) form of the completeness
    relation for a velocity-orthogonal polarization triple.
    """
    vc = _components(v)
    total = np.outer(vc, vc.conj()) / hermitian_dot(v, v)
    for e in basis.vectors:
        ec = _components(e)
        total = total + np.outer(ec, ec.conj()) / hermitian_dot(e, e)
    return float(np.max(np.abs(total - METRIC)))
