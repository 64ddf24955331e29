"""Mode-space quadratic Hamiltonian, Fano diagonalization and the
indefinite-metric sector.

Operators are represented by their algebra: a commutation metric G with
[xi_m, xi_n^dag] = G_mn, plus quadratic-form coefficients.  An explicit
(indefinite-metric) Fock basis is materialized only for the small
matrix-element checks of the unphysical sector.

Rest frame throughout (the interaction-representation split is taken at
v = (c, 0, 0, 0)); the gauge parameter is fixed to xi = 4 pi so the gauge
field propagates without dipole-ghost growth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DynamicalInstability, SectorLeak
from .kinematics import FourVector, build_gitman_tyutin_basis
from .medium import FOUR_PI, MediumSpec, renormalized_frequency

FEYNMAN_XI = FOUR_PI


# ---------------------------------------------------------------------------
# quadratic blocks and Fano diagonalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticHamiltonianBlock:
    """Coupled photon/matter block at fixed wavenumber and transverse
    polarization.

    `labels` orders the operator vector xi = (a, b_1..b_N, a~^dag,
    b~_1^dag..b~_N^dag), where the tilde marks the opposite-momentum
    partner entering the pairing terms.  `adjoint` holds M with
    [xi_i, H] = sum_j M_ij xi_j and `metric` the diagonal commutation
    metric G.  The hermitian coefficient matrix is G M.
    """

    k: float
    photon_frequency: float
    oscillator_frequencies: tuple
    couplings: tuple
    labels: tuple
    adjoint: np.ndarray
    metric: np.ndarray

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return self.metric @ self.adjoint

    @property
    def coupling(self) -> float:
        return self.couplings[0]


def fano_coupling(osc, p0: float, c: float) -> float:
    """Interaction strength (g/c) sqrt(pi chi omega0^2 / (p0 Omega)) c p0."""
    Omega = renormalized_frequency(osc, osc.chi0)
    return (osc.g / c) * np.sqrt(
        np.pi * osc.chi0 * osc.omega0**2 / (p0 * Omega)
    ) * c * p0


def build_mode_hamiltonian(m: MediumSpec, k: float) -> QuadraticHamiltonianBlock:
    """Physical-sector block: photon at c|k| and matter oscillators at
    their renormalized frequencies, with rotating and counter-rotating
    couplings of equal strength.

    For several oscillators the squared polarization term that
    renormalizes each frequency also produces direct cross couplings
    proportional to g_k g_l between different oscillators; these are
    required for the block spectrum to match the field-equation
    dispersion.
    """
    if not m.is_rest_frame:
        raise ValueError("mode Hamiltonian is built in the rest frame")
    c = m.c
    p0 = c * abs(k)
    if p0 <= 0:
        raise ValueError("need |k| > 0")
    n = m.n_oscillators
    omegas = tuple(renormalized_frequency(o, o.chi0) for o in m.oscillators)
    lams = tuple(fano_coupling(o, p0, c) for o in m.oscillators)
    # field amplitude per quantum of each oscillator
    fs = [np.sqrt(o.chi0 * o.omega0**2 / (2.0 * Om))
          for o, Om in zip(m.oscillators, omegas)]

    dim = 2 * (n + 1)
    M = np.zeros((dim, dim), dtype=complex)
    A, ABAR = 0, n + 1  # positions of a and a~^dag

    M[A, A] = p0
    M[ABAR, ABAR] = -p0
    for j in range(n):
        b, bbar = 1 + j, n + 2 + j
        lam, Om = lams[j], omegas[j]
        M[b, b] = Om
        M[bbar, bbar] = -Om
        # [a, H] and [a~^dag, H] couple to b and b~^dag alike
        M[A, b] = -1j * lam
        M[A, bbar] = -1j * lam
        M[ABAR, b] = -1j * lam
        M[ABAR, bbar] = -1j * lam
        # [b, H] and [b~^dag, H] couple to a and a~^dag with opposite signs
        M[b, A] = 1j * lam
        M[b, ABAR] = -1j * lam
        M[bbar, A] = -1j * lam
        M[bbar, ABAR] = 1j * lam
    for j in range(n):
        for l in range(n):
            if l == j:
                continue
            K = FOUR_PI * m.oscillators[j].g * m.oscillators[l].g * fs[j] * fs[l]
            bj, bjbar = 1 + j, n + 2 + j
            bl, blbar = 1 + l, n + 2 + l
            M[bj, bl] += K
            M[bj, blbar] += K
            M[bjbar, bl] -= K
            M[bjbar, blbar] -= K

    labels = ("a",) + tuple(f"b{j + 1}" for j in range(n)) \
        + ("a~dag",) + tuple(f"b{j + 1}~dag" for j in range(n))
    metric = np.diag([1.0] * (n + 1) + [-1.0] * (n + 1))
    return QuadraticHamiltonianBlock(
        k=float(k), photon_frequency=p0, oscillator_frequencies=omegas,
        couplings=lams, labels=labels, adjoint=M, metric=metric,
    )


@dataclass(frozen=True)
class FanoTransform:
    """Canonical (Bogoliubov) transformation diagonalizing a block.

    Rows of `matrix` give the quasi-particle operators alpha_i (positive
    branches, ascending frequency) followed by their opposite-momentum
    conjugates; the commutation metric is preserved: T G T^dag = G.
    """

    frequencies: np.ndarray  # positive branch frequencies, ascending
    matrix: np.ndarray
    block: QuadraticHamiltonianBlock

    @property
    def omega_lower(self) -> float:
        return float(self.frequencies[0])

    @property
    def omega_upper(self) -> float:
        return float(self.frequencies[-1])

    def symplectic_residual(self) -> float:
        G = self.block.metric
        return float(np.max(np.abs(self.matrix @ G @ self.matrix.conj().T - G)))

    def eigen_residual(self) -> float:
        """max over rows of ||row.M - omega row|| / omega."""
        M = self.block.adjoint
        n = len(self.frequencies)
        freqs = np.concatenate([self.frequencies, -self.frequencies])
        res = 0.0
        for row, w in zip(self.matrix, freqs):
            r = np.max(np.abs(row @ M - w * row))
            res = max(res, r / max(abs(w), 1e-300))
        return float(res)

    def inverse(self) -> np.ndarray:
        G = self.block.metric
        return G @ self.matrix.conj().T @ G


def fano_diagonalize(block: QuadraticHamiltonianBlock,
                     imag_tol: float = 1e-10) -> FanoTransform:
    """Diagonalize by left-eigendecomposition of the adjoint matrix.

    Positive-frequency rows are normalized to [alpha, alpha^dag] = +1; the
    negative-frequency rows follow from the opposite-momentum conjugation
    symmetry, which keeps the transform exactly canonical.
    """
    M = block.adjoint
    G = block.metric
    n_pos = M.shape[0] // 2
    evals, evecs = np.linalg.eig(M.T)  # columns: w with w^T M = mu w^T
    scale = max(np.max(np.abs(evals)), 1e-300)
    if np.max(np.abs(evals.imag)) > imag_tol * scale:
        raise DynamicalInstability(
            f"complex symplectic eigenvalues: max |Im| = "
            f"{np.max(np.abs(evals.imag)):.3e}"
        )
    order = np.argsort(evals.real)
    pos = [i for i in order if evals.real[i] > 0]
    if len(pos) != n_pos:
        raise DynamicalInstability(
            f"expected {n_pos} positive branch frequencies, got {len(pos)}"
        )
    rows = []
    freqs = []
    for i in pos:
        w = evecs[:, i]
        nu = np.real(w @ G @ w.conj())
        if nu <= 0:
            raise DynamicalInstability(
                "positive-frequency eigenvector with non-positive symplectic norm"
            )
        rows.append(w / np.sqrt(nu))
        freqs.append(evals.real[i])
    swap = np.zeros_like(M.real)
    swap[:n_pos, n_pos:] = np.eye(n_pos)
    swap[n_pos:, :n_pos] = np.eye(n_pos)
    conj_rows = [swap @ np.conj(r) for r in rows]
    T = np.vstack(rows + conj_rows)
    return FanoTransform(frequencies=np.array(freqs), matrix=T, block=block)


# ---------------------------------------------------------------------------
# indefinite-metric ladder algebra and Fock machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeLadder:
    """Set of ladder-operator labels with commutation metric
    G[i, j] = [xi_i, xi_j^dag]."""

    labels: tuple
    metric: np.ndarray

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def commutator(self, lhs: str, rhs_dag: str) -> float:
        return float(self.metric[self.index(lhs), self.index(rhs_dag)])


def covariant_gauge_ladder(n_oscillators: int = 1, sectors=("",)) -> ModeLadder:
    """Ladder algebra of the covariant-gauge model at one wavenumber.

    Labels per sector: beta, a1, a2, a3, b1..b3 (b3 is the longitudinal
    matter mode).  Non-canonical entries: [a3, a3^dag] = 0,
    [beta, beta^dag] = 0, [a3, beta^dag] = [beta, a3^dag] = -1.
    `sectors` distinguishes opposite-momentum copies (e.g. ("", "~")).
    """
    base = ["beta", "a1", "a2", "a3", "b1", "b2", "b3"]
    labels = tuple(f"{name}{s}" for s in sectors for name in base)
    dim = len(labels)
    G = np.zeros((dim, dim))
    for si, s in enumerate(sectors):
        off = si * len(base)
        idx = {name: off + i for i, name in enumerate(base)}
        G[idx["a1"], idx["a1"]] = 1
        G[idx["a2"], idx["a2"]] = 1
        G[idx["b1"], idx["b1"]] = 1
        G[idx["b2"], idx["b2"]] = 1
        G[idx["b3"], idx["b3"]] = 1
        G[idx["a3"], idx["beta"]] = -1
        G[idx["beta"], idx["a3"]] = -1
    return ModeLadder(labels=labels, metric=G)


class FockVector:
    """Sparse vector over creation monomials applied to the vacuum.

    Keys are sorted tuples of creation labels; the inner product follows
    from Wick contraction with the ladder metric, so zero- and
    negative-norm states are represented faithfully.
    """

    def __init__(self, ladder: ModeLadder, terms=None):
        self.ladder = ladder
        self.terms: dict[tuple, complex] = dict(terms or {})

    @classmethod
    def vacuum(cls, ladder: ModeLadder) -> "FockVector":
        return cls(ladder, {(): 1.0 + 0j})

    @classmethod
    def basis_state(cls, ladder: ModeLadder, labels) -> "FockVector":
        return cls(ladder, {tuple(sorted(labels)): 1.0 + 0j})

    def _add(self, key: tuple, coeff: complex):
        if coeff == 0:
            return
        self.terms[key] = self.terms.get(key, 0.0 + 0j) + coeff
        if self.terms[key] == 0:
            del self.terms[key]

    def scaled(self, factor: complex) -> "FockVector":
        return FockVector(self.ladder,
                          {k: factor * v for k, v in self.terms.items()})

    def plus(self, other: "FockVector") -> "FockVector":
        out = FockVector(self.ladder, dict(self.terms))
        for k, v in other.terms.items():
            out._add(k, v)
        return out

    def create(self, label: str) -> "FockVector":
        out = FockVector(self.ladder)
        for key, coeff in self.terms.items():
            out._add(tuple(sorted(key + (label,))), coeff)
        return out

    def annihilate(self, label: str) -> "FockVector":
        i = self.ladder.index(label)
        G = self.ladder.metric
        out = FockVector(self.ladder)
        for key, coeff in self.terms.items():
            for pos, other in enumerate(key):
                g = G[i, self.ladder.index(other)]
                if g != 0:
                    out._add(key[:pos] + key[pos + 1:], coeff * g)
        return out

    def vacuum_amplitude(self) -> complex:
        return self.terms.get((), 0.0 + 0j)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.terms.values())

    def inner(self, other: "FockVector") -> complex:
        """<self|other> with the indefinite metric."""
        total = 0.0 + 0j
        for key, coeff in self.terms.items():
            reduced = other
            for label in key:
                reduced = reduced.annihilate(label)
            total += np.conj(coeff) * reduced.vacuum_amplitude()
        return total


class OperatorSum:
    """Quadratic operator as a list of (coeff, [(action, label), ...]) terms;
    actions apply right to left."""

    def __init__(self, ladder: ModeLadder):
        self.ladder = ladder
        self.terms: list[tuple[complex, tuple]] = []

    def add(self, coeff: complex, ops):
        if coeff != 0:
            self.terms.append((complex(coeff), tuple(ops)))
        return self

    def apply(self, state: FockVector) -> FockVector:
        out = FockVector(self.ladder)
        for coeff, ops in self.terms:
            cur = state
            for action, label in reversed(ops):
                cur = cur.create(label) if action == "c" else cur.annihilate(label)
            out = out.plus(cur.scaled(coeff))
        return out

    def matrix_element(self, bra: FockVector, ket: FockVector) -> complex:
        return bra.inner(self.apply(ket))


# ---------------------------------------------------------------------------
# physical / unphysical Hamiltonian pieces over the ladder algebra
# ---------------------------------------------------------------------------

def _sector_pair(label: str) -> str:
    return label[:-1] if label.endswith("~") else label + "~"


def physical_hamiltonian(ladder: ModeLadder, m: MediumSpec, k: float) -> OperatorSum:
    """H_ph: transverse photon and matter modes plus their coupling."""
    osc = m.oscillators[0]
    p0 = m.c * abs(k)
    Om = renormalized_frequency(osc, osc.chi0)
    lam = fano_coupling(osc, p0, m.c)
    H = OperatorSum(ladder)
    sectors = sorted({"~" if lab.endswith("~") else "" for lab in ladder.labels})
    for s in sectors:
        for lamlab in ("1", "2"):
            a, b = f"a{lamlab}{s}", f"b{lamlab}{s}"
            bbar = _sector_pair(b)
            H.add(p0, [("c", a), ("a", a)])
            H.add(Om, [("c", b), ("a", b)])
            # i lam [(a b~ - a^dag b~^dag) + (a b^dag - a^dag b)]
            H.add(1j * lam, [("a", a), ("a", bbar)])
            H.add(-1j * lam, [("c", a), ("c", bbar)])
            H.add(1j * lam, [("a", a), ("c", b)])
            H.add(-1j * lam, [("c", a), ("a", b)])
    return H


def unphysical_hamiltonian(ladder: ModeLadder, m: MediumSpec, k: float) -> OperatorSum:
    """H': gauge-sector piece -p0/4 beta^dag beta, the longitudinal matter
    oscillator, and their coupling; decoupled from the physical spectrum."""
    osc = m.oscillators[0]
    p0 = m.c * abs(k)
    Om = renormalized_frequency(osc, osc.chi0)
    lam = fano_coupling(osc, p0, m.c)
    H = OperatorSum(ladder)
    sectors = sorted({"~" if lab.endswith("~") else "" for lab in ladder.labels})
    for s in sectors:
        beta, b3 = f"beta{s}", f"b3{s}"
        b3bar = _sector_pair(b3)
        H.add(-p0 / 4.0, [("c", beta), ("a", beta)])
        H.add(Om, [("c", b3), ("a", b3)])
        H.add(lam / 2.0, [("a", beta), ("a", b3bar)])
        H.add(lam / 2.0, [("c", beta), ("c", b3bar)])
        H.add(lam / 2.0, [("a", beta), ("c", b3)])
        H.add(lam / 2.0, [("c", beta), ("a", b3)])
    return H


def physical_state_basis(ladder: ModeLadder, max_quanta: int = 2) -> list:
    """All monomials of degree <= max_quanta in the physical creation
    labels {beta, a1, a2, b1, b2} (both momentum sectors)."""
    phys = [lab for lab in ladder.labels
            if lab.split("~")[0] in ("beta", "a1", "a2", "b1", "b2")]
    states = [FockVector.vacuum(ladder)]
    for deg in range(1, max_quanta + 1):
        for combo in itertools.combinations_with_replacement(phys, deg):
            states.append(FockVector.basis_state(ladder, combo))
    return states


def unphysical_sector_report(m: MediumSpec, k: float,
                             tol: float = 1e-12, check: bool = True) -> dict:
    """Verify the indefinite-metric bookkeeping at one wavenumber.

    Checks: (i) the non-canonical commutators including the negative-norm
    combination d0 = (a3 + beta)/sqrt(2); (ii) every matrix element of H'
    between <= 2-quanta physical states vanishes; (iii) the physical-state
    condition beta|Psi> = 0 is preserved by the full Hamiltonian.
    """
    ladder = covariant_gauge_ladder(sectors=("", "~"))
    G = ladder.metric

    def comm(x, y):
        return G[ladder.index(x), ladder.index(y)]

    d0 = 0.5 * (comm("a3", "a3") + comm("a3", "beta")
                + comm("beta", "a3") + comm("beta", "beta"))
    d3 = 0.5 * (comm("a3", "a3") - comm("a3", "beta")
                - comm("beta", "a3") + comm("beta", "beta"))
    vac = FockVector.vacuum(ladder)
    d0_state = vac.create("a3").plus(vac.create("beta")).scaled(1 / np.sqrt(2))
    d0_norm = d0_state.inner(d0_state)

    report = {
        "k": float(k),
        "commutators": {
            "[beta, beta^dag]": comm("beta", "beta"),
            "[a3, beta^dag]": comm("a3", "beta"),
            "[a3, a3^dag]": comm("a3", "a3"),
            "[d0, d0^dag]": d0,
            "[d3, d3^dag]": d3,
        },
        "d0_state_norm": complex(d0_norm),
    }

    expected = {"[beta, beta^dag]": 0.0, "[a3, beta^dag]": -1.0,
                "[a3, a3^dag]": 0.0, "[d0, d0^dag]": -1.0, "[d3, d3^dag]": 1.0}
    for name, want in expected.items():
        got = report["commutators"][name]
        if check and abs(got - want) > tol:
            raise SectorLeak(f"{name} = {got}, expected {want}")

    Hprime = unphysical_hamiltonian(ladder, m, k)
    basis = physical_state_basis(ladder)
    worst = 0.0
    worst_pair = None
    for j, ket in enumerate(basis):
        hket = Hprime.apply(ket)
        for i, bra in enumerate(basis):
            val = abs(bra.inner(hket))
            if val > worst:
                worst, worst_pair = val, (i, j)
    report["max_hprime_matrix_element"] = worst
    report["worst_pair"] = worst_pair
    if check and worst > tol:
        raise SectorLeak(
            f"H' matrix element {worst:.3e} between physical states "
            f"{worst_pair}"
        )

    Hfull = physical_hamiltonian(ladder, m, k)
    for coeff, ops in Hprime.terms:
        Hfull.add(coeff, ops)
    max_violation = 0.0
    for ket in basis:
        hket = Hfull.apply(ket)
        for beta_label in ("beta", "beta~"):
            residual = hket.annihilate(beta_label)
            amp = max((abs(v) for v in residual.terms.values()), default=0.0)
            max_violation = max(max_violation, amp)
    report["max_gauge_condition_violation"] = max_violation
    if check and max_violation > tol:
        raise SectorLeak(
            f"beta|Psi> = 0 not preserved: residual {max_violation:.3e}"
        )
    return report


# ---------------------------------------------------------------------------
# field-operator coefficient tables
# ---------------------------------------------------------------------------

def em_mode_norm_density(omega: float, c: float) -> float:
    """Conserved-product norm density of a unit-amplitude transverse
    electromagnetic plane wave: omega / (4 pi c)."""
    return omega / (FOUR_PI * c)


def pol_mode_norm_density(Omega: float, chi: float, omega0: float, c: float) -> float:
    """Norm density of a unit-amplitude free polarization wave at the
    renormalized frequency: c Omega / (chi omega0^2)."""
    return c * Omega / (chi * omega0**2)


def build_field_operators(m: MediumSpec, k_grid) -> list[dict]:
    """Per-wavenumber expansion coefficients for the free quantum fields.

    "ccr" coefficients reproduce the canonical equal-time commutators
    (these match the sqrt(2 pi / p0), sqrt(chi omega0^2 / (2 Omega)) and
    (p0 / 4 pi) sqrt(2 pi / p0) normalizations); "unit_norm" coefficients
    rescale them so a single-quantum mode has conserved-product norm +1
    in a unit box.  The two conventions differ by sqrt(2) factors because
    the conserved product carries 1/2 of the standard phase-space pairing.
    """
    osc = m.oscillators[0]
    out = []
    for k in np.atleast_1d(np.asarray(k_grid, dtype=float)):
        p0 = abs(k)
        if p0 <= 0:
            raise ValueError("k grid must avoid 0")
        Om = renormalized_frequency(osc, osc.chi0)
        a_ccr = np.sqrt(2.0 * np.pi / p0)
        b_ccr = np.sqrt(osc.chi0 * osc.omega0**2 / (2.0 * Om))
        B_ccr = (p0 / FOUR_PI) * a_ccr
        omega_em = m.c * p0
        a_unit = 1.0 / np.sqrt(em_mode_norm_density(omega_em, m.c))
        b_unit = 1.0 / np.sqrt(pol_mode_norm_density(Om, osc.chi0, osc.omega0, m.c))
        out.append({
            "k": float(k),
            "photon_frequency": omega_em,
            "oscillator_frequency": Om,
            "a_coefficient_ccr": float(a_ccr),
            "b_coefficient_ccr": float(b_ccr),
            "B_coefficient_ccr": float(B_ccr),
            "a_coefficient_unit_norm": float(a_unit),
            "b_coefficient_unit_norm": float(b_unit),
        })
    return out


def gauge_mode_amplitudes(m: MediumSpec, kvec, which: str,
                          convention: str = "ccr"):
    """Free-field mode amplitudes (A_amp, B_amp, omega) for one gauge-sector
    quantum at null wavevector (|k|, kvec).

    which: "transverse1", "transverse2" (particle modes), "scalar" (the
    beta mode, nonzero B) or "longitudinal" (the a3 mode, A along the
    wavevector).  scalar and longitudinal carry zero conserved norm.
    """
    kvec = np.asarray(kvec, dtype=float)
    p0 = float(np.linalg.norm(kvec))
    if p0 <= 0:
        raise ValueError("need |k| > 0")
    pnull = FourVector.of(p0, *kvec)
    gt = build_gitman_tyutin_basis(pnull)
    coeff = np.sqrt(2.0 * np.pi / p0)
    if convention == "unit_norm":
        coeff *= np.sqrt(2.0)
    elif convention != "ccr":
        raise ValueError("convention must be 'ccr' or 'unit_norm'")
    omega = m.c * p0
    if which == "scalar":
        A = gt[0] * coeff
        B = coeff * p0 / FOUR_PI
    elif which == "longitudinal":
        A = gt[3] * coeff
        B = 0.0
    elif which in ("transverse1", "transverse2"):
        A = gt[1 if which == "transverse1" else 2] * coeff
        B = 0.0
    else:
        raise ValueError(f"unknown mode kind {which!r}")
    return A, complex(B), omega
