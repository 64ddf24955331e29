"""Exception hierarchy for the toolkit.

Every numerical failure mode has a dedicated type so callers (and the CLI)
can map failures to exit codes without string matching.
"""


class CovHopfieldError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CovHopfieldError):
    """Invalid or unparseable run configuration (CLI exit code 2)."""


class NumericalFailure(CovHopfieldError):
    """Base class for runtime numerical failures (CLI exit code 3)."""


# kinematics
class SuperluminalBoost(NumericalFailure):
    """Boost velocity with |v| >= c."""


class DegenerateWavevector(NumericalFailure):
    """Spatial wavevector vanishes; transverse pair undefined."""


class NonNullWavevector(NumericalFailure):
    """Wavevector is not null within tolerance."""


class NullVelocity(NumericalFailure):
    """dot(v, v) = 0 where a non-null velocity is required."""


class NullWavevector(NumericalFailure):
    """dot(p, p) = 0 where a non-null wavevector is required."""


# medium
class NonPositiveChi(NumericalFailure):
    """Susceptibility profile is not strictly positive."""


class DivergentTail(NumericalFailure):
    """Perturbation profile does not decay; integrability bound diverges."""


# modes
class NoConvergence(NumericalFailure):
    """Root bracketing / iteration failed to converge."""


class OffShell(NumericalFailure):
    """Requested (omega, k) does not satisfy the dispersion relation."""


class ResonanceSingularity(NumericalFailure):
    """Frequency too close to the oscillator resonance."""


# products
class GridMismatch(NumericalFailure):
    """Field configurations live on different grids or time slices."""


class DimensionMismatch(NumericalFailure):
    """Phase-space vectors of incompatible dimension."""


class UnsupportedMedium(NumericalFailure):
    """Operation restricted to a simpler medium (e.g. single oscillator)."""


# constraints
class ChainMismatch(NumericalFailure):
    """A constraint-chain bracket differs from its expected form."""


class SingularC(NumericalFailure):
    """Constraint matrix C is singular (dot(v, v) = 0)."""


class InconsistentConstraint(NumericalFailure):
    """A constraint has a nonvanishing Dirac bracket with an observable."""


# quanta
class DynamicalInstability(NumericalFailure):
    """Symplectic eigenvalues acquired imaginary parts."""


class SectorLeak(NumericalFailure):
    """Unphysical-sector operator has a nonvanishing physical matrix element."""


# scattering
class UnsupportedVariation(NumericalFailure):
    """Only the susceptibility may vary in space in this version."""


class AssemblyInconsistent(NumericalFailure):
    """Assembled first-order system fails the plane-wave substitution check."""


class StiffnessFailure(NumericalFailure):
    """ODE integrator step size underflowed."""


class EvanescentOverflow(NumericalFailure):
    """Transfer-matrix growth exceeded the overflow guard."""


class ChannelDegeneracy(NumericalFailure):
    """Two scattering channels share the same longitudinal wavenumber."""
