"""Lattice realization of the constrained-Hamiltonian analysis.

Phase space: a periodic 1D lattice of N sites carrying, per site, the
canonical coordinates (A_mu, P_mu, B, lambda) (lower indices) and momenta
(Pi_A^mu, Pi_P^mu, pi_B, pi_lambda) (upper indices), 20 N dimensions in
total.  The canonical structure is {A_mu(x), Pi_A^nu(y)} = delta_mu^nu
delta_xy / a^d, equivalently {A^mu(x), Pi_A^nu(y)} = eta^{mu nu}
delta_xy / a^d.

Linear observables are exact coefficient vectors, so every bracket is a
finite-dimensional bilinear form with no quadrature error.  Spatial
derivatives use the periodic central difference, whose antisymmetry makes
lattice integration by parts exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChainMismatch, InconsistentConstraint, SingularC, UnsupportedMedium
from .medium import FOUR_PI, MediumSpec, chi_at
from .kinematics import minkowski_dot

_METRIC_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class LatticePhaseSpace:
    """Geometry of the discretized phase space (1D periodic chain)."""

    n_sites: int
    spacing: float
    dim: int = 1

    def __post_init__(self):
        if self.dim != 1:
            raise ValueError("only 1D lattices are supported")
        if self.n_sites < 4:
            raise ValueError("need at least 4 sites for central differences")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")

    @property
    def cell(self) -> float:
        return self.spacing**self.dim

    @property
    def n_phase(self) -> int:
        return 20 * self.n_sites

    def site_x(self, site: int) -> float:
        return self.spacing * (site % self.n_sites)


@dataclass
class Observable:
    """Affine observable w . z + const over the lattice phase space."""

    w: np.ndarray
    const: float = 0.0
    name: str = ""

    def __add__(self, other):
        if isinstance(other, Observable):
            return Observable(self.w + other.w, self.const + other.const)
        return Observable(self.w.copy(), self.const + other)

    def __sub__(self, other):
        if isinstance(other, Observable):
            return Observable(self.w - other.w, self.const - other.const)
        return Observable(self.w.copy(), self.const - other)

    def __mul__(self, scalar):
        return Observable(self.w * scalar, self.const * scalar, self.name)

    __rmul__ = __mul__

    def residual_against(self, other: "Observable") -> float:
        return float(
            np.max(np.abs(self.w - other.w)) + abs(self.const - other.const)
        )

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.w)) + abs(self.const))


class LatticeSystem:
    """Lattice phase space bound to a medium and a gauge parameter xi."""

    def __init__(self, lattice: LatticePhaseSpace, m: MediumSpec,
                 xi: float = FOUR_PI):
        if m.n_oscillators != 1:
            raise UnsupportedMedium("lattice analysis supports one oscillator")
        self.lattice = lattice
        self.medium = m
        self.xi = float(xi)
        n = lattice.n_sites
        self._pi_base = 10 * n
        J = np.zeros((20 * n, 20 * n))
        inv_cell = 1.0 / lattice.cell
        for i in range(10 * n):
            J[i, self._pi_base + i] = inv_cell
            J[self._pi_base + i, i] = -inv_cell
        self.J = J
        self._dirac_J: np.ndarray | None = None

    # --- index bookkeeping --------------------------------------------------
    def _x_index(self, offset: int, site: int) -> int:
        return 10 * (site % self.lattice.n_sites) + offset

    def _pi_index(self, offset: int, site: int) -> int:
        return self._pi_base + 10 * (site % self.lattice.n_sites) + offset

    def _unit(self, idx: int, name: str) -> Observable:
        w = np.zeros(self.lattice.n_phase)
        w[idx] = 1.0
        return Observable(w, 0.0, name)

    # --- elementary observables ----------------------------------------------
    def A_lower(self, mu: int, site: int) -> Observable:
        return self._unit(self._x_index(mu, site), f"A_{mu}({site})")

    def A_upper(self, mu: int, site: int) -> Observable:
        return _METRIC_SIGNS[mu] * self.A_lower(mu, site)

    def P_lower(self, mu: int, site: int) -> Observable:
        return self._unit(self._x_index(4 + mu, site), f"P_{mu}({site})")

    def P_upper(self, mu: int, site: int) -> Observable:
        return _METRIC_SIGNS[mu] * self.P_lower(mu, site)

    def B(self, site: int) -> Observable:
        return self._unit(self._x_index(8, site), f"B({site})")

    def lam(self, site: int) -> Observable:
        return self._unit(self._x_index(9, site), f"lambda({site})")

    def Pi_A(self, mu: int, site: int) -> Observable:
        return self._unit(self._pi_index(mu, site), f"Pi_A^{mu}({site})")

    def Pi_A_lower(self, mu: int, site: int) -> Observable:
        return _METRIC_SIGNS[mu] * self.Pi_A(mu, site)

    def Pi_P(self, mu: int, site: int) -> Observable:
        return self._unit(self._pi_index(4 + mu, site), f"Pi_P^{mu}({site})")

    def pi_B(self, site: int) -> Observable:
        return self._unit(self._pi_index(8, site), f"pi_B({site})")

    def pi_lam(self, site: int) -> Observable:
        return self._unit(self._pi_index(9, site), f"pi_lambda({site})")

    def derivative(self, make_obs, site: int) -> Observable:
        """Periodic central difference of a site-indexed observable."""
        a = self.lattice.spacing
        return (make_obs(site + 1) - make_obs(site - 1)) * (1.0 / (2.0 * a))

    # --- composite observables -----------------------------------------------
    def div_A_upper(self, site: int) -> Observable:
        """d_i A^i; only the chain axis contributes in 1D."""
        return self.derivative(lambda s: self.A_upper(1, s), site)

    def div_Pi_A_lower(self, site: int) -> Observable:
        """d_i Pi_{A i} with the lowered spatial momentum."""
        return self.derivative(lambda s: self.Pi_A_lower(1, s), site)

    def v_dot_P(self, site: int) -> Observable:
        """v_mu P^mu = sum_mu v^mu P_mu (plain sum against lower P)."""
        v = self.medium.v.components.real
        out = v[0] * self.P_lower(0, site)
        for mu in range(1, 4):
            if v[mu] != 0:
                out = out + v[mu] * self.P_lower(mu, site)
        out.name = f"v.P({site})"
        return out

    def v_dot_Pi_P(self, site: int) -> Observable:
        """v_mu Pi_P^mu (metric-lowered v against the upper momentum)."""
        v = self.medium.v.components.real
        out = v[0] * self.Pi_P(0, site)
        for mu in range(1, 4):
            if v[mu] != 0:
                out = out - v[mu] * self.Pi_P(mu, site)
        out.name = f"v.Pi_P({site})"
        return out

    def constraint(self, family: int, site: int) -> Observable:
        """Gamma_1 = pi_B, Gamma_2 = Pi_A^0 - B/c, Gamma_3 = v.P,
        Gamma_4 = v.Pi_P, Gamma_5 = lambda, Gamma_6 = pi_lambda."""
        c = self.medium.c
        if family == 1:
            return self.pi_B(site)
        if family == 2:
            return self.Pi_A(0, site) - (1.0 / c) * self.B(site)
        if family == 3:
            return self.v_dot_P(site)
        if family == 4:
            return self.v_dot_Pi_P(site)
        if family == 5:
            return self.lam(site)
        if family == 6:
            return self.pi_lam(site)
        raise ValueError("constraint family must be 1..6")

    def constraint_matrix(self) -> np.ndarray:
        """(20N, 6N) stack of constraint coefficients, site-major."""
        cols = [
            self.constraint(fam, site).w
            for site in range(self.lattice.n_sites)
            for fam in range(1, 7)
        ]
        return np.array(cols).T


def poisson_bracket(f: Observable, g: Observable, system: LatticeSystem) -> float:
    """Canonical bracket of two affine observables (exact)."""
    return float(f.w @ system.J @ g.w)


# ---------------------------------------------------------------------------
# Hamiltonian assembly
# ---------------------------------------------------------------------------

@dataclass
class QuadraticHamiltonian:
    """H(z) = 1/2 z^T M z + b . z + const with recorded multiplier fields."""

    system: LatticeSystem
    M: np.ndarray
    b: np.ndarray
    multipliers: dict = field(default_factory=dict)

    def bracket_with(self, f: Observable) -> Observable:
        """{f, H} as an affine observable (exact for quadratic H)."""
        J = self.system.J
        w = -(self.M @ (J @ f.w))
        const = float(f.w @ J @ self.b)
        return Observable(w, const, f"{{{f.name}, H}}")


def build_hamiltonian(system: LatticeSystem, z_mult=None, y_mult=None,
                      u_mult=None) -> QuadraticHamiltonian:
    """Assemble the constrained Hamiltonian on the lattice.

    Multiplier fields may be per-site numbers (linear term) or Observables
    (substituted, keeping H quadratic); omitted multipliers are zero.
    """
    lat, m, xi = system.lattice, system.medium, system.xi
    cell = lat.cell
    c = m.c
    osc = m.oscillators[0]
    v = m.v.components.real
    w0sq = osc.omega0**2
    g = osc.g

    M = np.zeros((lat.n_phase, lat.n_phase))
    b = np.zeros(lat.n_phase)

    def add_product(o1: Observable, o2: Observable, coeff: float):
        outer = np.outer(o1.w, o2.w)
        M[...] += coeff * cell * (outer + outer.T)
        b[...] += coeff * cell * (o1.const * o2.w + o2.const * o1.w)

    def as_observable(mult, site):
        if mult is None:
            return None
        entry = mult[site]
        if isinstance(entry, Observable):
            return entry
        if entry == 0:
            return None
        return Observable(np.zeros(lat.n_phase), float(entry))

    for s in range(lat.n_sites):
        chi = chi_at(m, lat.site_x(s))
        # 2 pi c^2 sum_i (Pi_A^i)^2
        for i in range(1, 4):
            add_product(system.Pi_A(i, s), system.Pi_A(i, s), 2.0 * np.pi * c**2)
        # (1/16 pi) F_ij F^ij = (1/8 pi) [(d1 A_2)^2 + (d1 A_3)^2] in 1D
        for j in (2, 3):
            dAj = system.derivative(lambda t, j=j: system.A_lower(j, t), s)
            add_product(dAj, dAj, 1.0 / (8.0 * np.pi))
        # c A_0 d_i Pi_{A i}
        add_product(system.A_lower(0, s), system.div_Pi_A_lower(s), c)
        # 4 pi g M_{0i} Pi_{A i}; M_{0i} = v^0 P_i + v^i P_0 (lower comps)
        for i in range(1, 4):
            m0i = v[0] * system.P_lower(i, s) + v[i] * system.P_lower(0, s)
            add_product(m0i, system.Pi_A(i, s), -FOUR_PI * g)
        # -c (v^k/v^0) (d_k P_nu) Pi_P^nu (plain sum over nu)
        if v[1] != 0:
            for nu in range(4):
                dP = system.derivative(lambda t, nu=nu: system.P_lower(nu, t), s)
                add_product(dP, system.Pi_P(nu, s), -c * v[1] / v[0])
        # -(chi w0^2 c^2 / (2 (v^0)^2)) Pi_P . Pi_P (Minkowski square)
        for mu in range(4):
            add_product(system.Pi_P(mu, s), system.Pi_P(mu, s),
                        -_METRIC_SIGNS[mu] * chi * w0sq * c**2 / (2.0 * v[0] ** 2))
        # -(1/(2 chi)) P . P
        for mu in range(4):
            add_product(system.P_lower(mu, s), system.P_lower(mu, s),
                        -_METRIC_SIGNS[mu] / (2.0 * chi))
        # (2 pi g^2 / c^2) sum_i M_{0i}^2
        for i in range(1, 4):
            m0i = v[0] * system.P_lower(i, s) + v[i] * system.P_lower(0, s)
            add_product(m0i, m0i, 2.0 * np.pi * g**2 / c**2)
        # (g/2c) M_ij F^ij; in 1D only F_{1j} = d1 A_j survives
        if v[1] != 0:
            for j in (2, 3):
                m1j = -v[1] * system.P_lower(j, s) + v[j] * system.P_lower(1, s)
                f1j = system.derivative(lambda t, j=j: system.A_lower(j, t), s)
                add_product(m1j, f1j, g / c)
        # -B d_i A^i - (xi/2) B^2
        add_product(system.B(s), system.div_A_upper(s), -1.0)
        add_product(system.B(s), system.B(s), -xi / 2.0)
        # -lambda v.P
        add_product(system.lam(s), system.v_dot_P(s), -1.0)
        # u pi_lambda + y pi_B + z (Pi_A^0 - B/c)
        for mult, target in ((u_mult, system.pi_lam(s)),
                             (y_mult, system.pi_B(s)),
                             (z_mult, system.constraint(2, s))):
            obs = as_observable(mult, s)
            if obs is not None:
                add_product(obs, target, 1.0)

    return QuadraticHamiltonian(system=system, M=M, b=b,
                                multipliers={"z": z_mult, "y": y_mult,
                                             "u": u_mult})


# ---------------------------------------------------------------------------
# constraint chain
# ---------------------------------------------------------------------------

@dataclass
class ChainReport:
    steps: list
    multiplier_formulas: dict
    max_residual: float
    gamma3_sign: int

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "multiplier_formulas": self.multiplier_formulas,
            "max_residual": self.max_residual,
            "gamma3_bracket_sign": self.gamma3_sign,
        }


def constraint_chain(system: LatticeSystem, tol: float = 1e-10) -> ChainReport:
    """Reproduce the second-class constraint chain on the lattice.

    Sequence: {Gamma_1, H} fixes the multiplier z = -c(d_i A^i + xi B);
    {Gamma_2, H} fixes y; {pi_lambda, H} produces Gamma_3 = v.P; {Gamma_3, H}
    produces Gamma_4 = v.Pi_P; {Gamma_4, H} forces lambda = 0; {lambda, H}
    forces u = 0.  Every bracket is matched coefficient-by-coefficient
    against its closed form; residuals above `tol` raise ChainMismatch.
    """
    lat, m, xi = system.lattice, system.medium, system.xi
    c = m.c
    v = m.v.components.real
    vv = float(minkowski_dot(m.v, m.v).real)
    n = lat.n_sites
    steps = []

    def record(name, computed: Observable, expected: Observable, note=""):
        res = computed.residual_against(expected)
        scale = max(expected.max_abs(), 1.0)
        steps.append({"name": name, "residual": res / scale, "note": note})
        if res / scale > tol:
            raise ChainMismatch(f"{name}: residual {res / scale:.3e}")

    H0 = build_hamiltonian(system)

    # step 1: {pi_B, H} = d_i A^i + xi B (+ z/c); fix z
    for s in range(n):
        computed = H0.bracket_with(system.constraint(1, s))
        expected = system.div_A_upper(s) + xi * system.B(s)
        record(f"{{Gamma_1({s}), H}} = d_i A^i + xi B", computed, expected)
    rng_z = np.linspace(0.3, 1.7, n)  # arbitrary external z-field probe
    Hz_ext = build_hamiltonian(system, z_mult=rng_z)
    probe = Hz_ext.bracket_with(system.constraint(1, 0))
    expected = system.div_A_upper(0) + xi * system.B(0) + rng_z[0] / c
    record("{Gamma_1, H[z]} carries + z/c", probe, expected)
    z_fix = [(-c) * (system.div_A_upper(s) + xi * system.B(s)) for s in range(n)]

    Hz = build_hamiltonian(system, z_mult=z_fix)
    for s in range(n):
        computed = Hz.bracket_with(system.constraint(1, s))
        expected = (c * xi) * system.constraint(2, s)
        record(f"{{Gamma_1({s}), H}}|z fixed vanishes on Gamma_2 = 0",
               computed, expected,
               note="residual proportional to Gamma_2 itself")

    # step 2: {Gamma_2, H} = -c d_i Pi_{A i} - y/c; fix y
    for s in range(n):
        computed = Hz.bracket_with(system.constraint(2, s))
        expected = (-c) * system.div_Pi_A_lower(s)
        record(f"{{Gamma_2({s}), H}} = -c d_i Pi_A_i", computed, expected)
    y_fix = [(-c * c) * system.div_Pi_A_lower(s) for s in range(n)]
    Hzy = build_hamiltonian(system, z_mult=z_fix, y_mult=y_fix)
    for s in range(n):
        computed = Hzy.bracket_with(system.constraint(2, s))
        record(f"{{Gamma_2({s}), H}}|y fixed = 0", computed,
               Observable(np.zeros(lat.n_phase)))

    # step 3: {pi_lambda, H} reproduces Gamma_3 (sign from this Hamiltonian
    # is +v.P; the chain only uses that the bracket vanishes iff v.P = 0)
    gamma3_sign = 1
    for s in range(n):
        computed = Hzy.bracket_with(system.constraint(6, s))
        expected = gamma3_sign * system.v_dot_P(s)
        record(f"{{pi_lambda({s}), H}} = v.P", computed, expected,
               note="bracket carries +v.P for H built from -lambda (v.P)")

    # step 4: {Gamma_3, H} = -(chi w0^2 c^2/(v^0)^2) v.Pi_P
    #                        - c (v^1/v^0) d_1(v.P)
    osc = m.oscillators[0]
    for s in range(n):
        chi = chi_at(m, lat.site_x(s))
        computed = Hzy.bracket_with(system.constraint(3, s))
        expected = (-(chi * osc.omega0**2 * c**2 / v[0] ** 2)
                    * system.v_dot_Pi_P(s))
        if v[1] != 0:
            expected = expected - (c * v[1] / v[0]) * system.derivative(
                system.v_dot_P, s)
        record(f"{{Gamma_3({s}), H}} yields Gamma_4", computed, expected)

    # step 5: {Gamma_4, H} = (1/chi) v.P - c (v^1/v^0) d_1(v.Pi_P) + (v.v) lambda
    for s in range(n):
        chi = chi_at(m, lat.site_x(s))
        computed = Hzy.bracket_with(system.constraint(4, s))
        expected = (1.0 / chi) * system.v_dot_P(s) + vv * system.lam(s)
        if v[1] != 0:
            expected = expected - (c * v[1] / v[0]) * system.derivative(
                system.v_dot_Pi_P, s)
        record(f"{{Gamma_4({s}), H}} forces lambda = 0", computed, expected,
               note="on Gamma_3 = Gamma_4 = 0 this reduces to (v.v) lambda")

    # step 6: {lambda, H} = u
    u_probe = np.linspace(-0.4, 0.9, n)
    Hu = build_hamiltonian(system, z_mult=z_fix, y_mult=y_fix, u_mult=u_probe)
    for s in range(n):
        computed = Hu.bracket_with(system.constraint(5, s))
        expected = Observable(np.zeros(lat.n_phase), u_probe[s])
        record(f"{{lambda({s}), H}} = u, so u = 0", computed, expected)

    max_res = max(step["residual"] for step in steps)
    formulas = {
        "z": "-c (d_i A^i + xi B)",
        "y": "-c^2 d_i Pi_A_lower_i  (equals -c d_i Pi_A_i at c = 1)",
        "lambda": "0",
        "u": "0",
    }
    return ChainReport(steps=steps, multiplier_formulas=formulas,
                       max_residual=max_res, gamma3_sign=gamma3_sign)


# ---------------------------------------------------------------------------
# C matrix and Dirac brackets
# ---------------------------------------------------------------------------

def build_and_invert_C(system: LatticeSystem):
    """C_ij(x, y) = {Gamma_i(x), Gamma_j(y)} and its blockwise inverse.

    Nonzero 2x2 antisymmetric blocks per site: (1,2) with delta/(c a^d),
    (3,4) with (v.v) delta/a^d, (5,6) with delta/a^d.
    """
    lat = system.lattice
    n = lat.n_sites
    Gamma = system.constraint_matrix()
    C = Gamma.T @ system.J @ Gamma
    C_inv = np.zeros_like(C)
    for site in range(n):
        base = 6 * site
        for off in (0, 2, 4):
            i, j = base + off, base + off + 1
            beta = C[i, j]
            if abs(beta) < 1e-300:
                raise SingularC(
                    f"constraint pair ({off + 1}, {off + 2}) singular at "
                    f"site {site}; dot(v, v) = 0?"
                )
            C_inv[i, j] = -1.0 / beta
            C_inv[j, i] = 1.0 / beta
    return C, C_inv


def dirac_structure(system: LatticeSystem) -> np.ndarray:
    """Bracket matrix of the Dirac bracket: J_D = J - J Gamma C^-1 Gamma^T J."""
    if system._dirac_J is None:
        Gamma = system.constraint_matrix()
        _, C_inv = build_and_invert_C(system)
        J = system.J
        system._dirac_J = J - J @ Gamma @ C_inv @ Gamma.T @ J
    return system._dirac_J


def dirac_bracket(f: Observable, g: Observable, system: LatticeSystem) -> float:
    return float(f.w @ dirac_structure(system) @ g.w)


def dirac_table(system: LatticeSystem, site: int = 0) -> dict:
    """Computed vs expected equal-site Dirac brackets (delta normalized out).

    {A^mu, Pi_A^nu}_D = eta^{mu nu}, {P^mu, Pi_P^nu}_D = eta^{mu nu}
    - v^mu v^nu / (v.v), {B, pi_B}_D = 0, {lambda, pi_lambda}_D = 0.
    """
    m = system.medium
    cell = system.lattice.cell
    v = m.v.components.real
    vv = float(minkowski_dot(m.v, m.v).real)
    eta = np.diag(_METRIC_SIGNS)
    entries = []
    for mu in range(4):
        for nu in range(4):
            got = dirac_bracket(system.A_upper(mu, site),
                                system.Pi_A(nu, site), system) * cell
            entries.append((f"{{A^{mu}, Pi_A^{nu}}}_D", got, eta[mu, nu]))
    proj = eta - np.outer(v, v) / vv
    for mu in range(4):
        for nu in range(4):
            got = dirac_bracket(system.P_upper(mu, site),
                                system.Pi_P(nu, site), system) * cell
            entries.append((f"{{P^{mu}, Pi_P^{nu}}}_D", got, proj[mu, nu]))
    entries.append(("{B, pi_B}_D",
                    dirac_bracket(system.B(site), system.pi_B(site), system)
                    * cell, 0.0))
    entries.append(("{lambda, pi_lambda}_D",
                    dirac_bracket(system.lam(site), system.pi_lam(site), system)
                    * cell, 0.0))
    residual = max(abs(got - want) for _, got, want in entries)
    return {
        "delta_convention": "delta3(x - y) -> kron(x, y)/a^d",
        "entries": [
            {"bracket": name, "computed": got, "expected": want}
            for name, got, want in entries
        ],
        "max_residual": residual,
    }


def operator_constraint_check(system: LatticeSystem, tol: float = 1e-12) -> dict:
    """Verify each constraint has vanishing Dirac bracket with every
    canonical variable, so the constraints consistently become operator
    identities; includes the rest-frame P^0 sector identities."""
    Gamma = system.constraint_matrix()
    JD = dirac_structure(system)
    cell = system.lattice.cell
    worst = float(np.max(np.abs(Gamma.T @ JD))) * cell
    report = {"max_constraint_bracket": worst, "entries": []}
    if worst > tol:
        flat = np.abs(Gamma.T @ JD)
        i, j = np.unravel_index(np.argmax(flat), flat.shape)
        raise InconsistentConstraint(
            f"constraint column {i} has Dirac bracket {flat[i, j] * cell:.3e} "
            f"with phase-space variable {j}"
        )
    if system.medium.is_rest_frame:
        p0 = dirac_bracket(system.P_upper(0, 0), system.Pi_P(0, 0), system) \
            * cell
        p1_pair = dirac_bracket(system.P_lower(1, 0), system.Pi_P(1, 0),
                                system) * cell
        report["entries"].append(
            {"bracket": "{P^0, Pi_P^0}_D (rest frame)", "computed": p0,
             "expected": 0.0})
        report["entries"].append(
            {"bracket": "{P_1, Pi_P^1}_D canonical pair", "computed": p1_pair,
             "expected": 1.0})
        if abs(p0) > tol or abs(p1_pair - 1.0) > tol:
            raise InconsistentConstraint("rest-frame P sector check failed")
    return report
