"""Exceptions raised by the numerical modules.

Every error derives from QHMetricError so the service layer can catch the
whole family in one place and turn it into a report entry or an exit status.
"""


class QHMetricError(Exception):
    """Base class for all metric-toolkit failures."""


class InvalidMatrix(QHMetricError, ValueError):
    """Input is not a finite square matrix (or dimensions disagree)."""


class NonConvergence(QHMetricError):
    """The eigenvalue iteration did not converge."""


class NotHermitian(QHMetricError):
    def __init__(self, asymmetry, tol):
        super().__init__(f"matrix is not Hermitian: relative asymmetry {asymmetry:.3e} > {tol:.1e}")
        self.asymmetry = asymmetry
        self.tol = tol


class IndefiniteInput(QHMetricError):
    def __init__(self, eigenvalue, bound):
        super().__init__(f"matrix is indefinite: eigenvalue {eigenvalue:.6e} < -{bound:.3e}")
        self.eigenvalue = eigenvalue


class IndefiniteMetric(QHMetricError):
    """Metric candidate is not positive definite."""


class DegenerateSpectrum(QHMetricError):
    def __init__(self, gap, threshold, witness=()):
        super().__init__(f"spectrum is degenerate: eigenvalue gap {gap:.3e} <= {threshold:.3e}")
        self.gap = gap
        self.threshold = threshold
        self.witness = tuple(witness)


class NonRealSpectrum(QHMetricError):
    def __init__(self, witness):
        super().__init__(f"energies are not real: {list(witness)}")
        self.witness = tuple(witness)


class NonPositiveWeight(QHMetricError, ValueError):
    """A kappa weight is zero, negative or not finite."""


class QuasiHermiticityViolated(QHMetricError):
    def __init__(self, residual, tol):
        super().__init__(f"H^dagger Theta != Theta H: residual {residual:.3e} > {tol:.1e}")
        self.residual = residual
        self.tol = tol


class CalibrationError(QHMetricError):
    """Diagonal-matched kappa does not reproduce the target metric."""


class UnsupportedRho(QHMetricError, ValueError):
    """No closed form exists for the requested metric exponent."""


class UnknownModel(QHMetricError, KeyError):
    def __str__(self):
        return f"unknown model {self.args[0]!r}"


class SingularOmega(QHMetricError):
    def __init__(self, t):
        super().__init__(f"Dyson map is singular near t={t!r}")
        self.t = t


class RegimeViolation(QHMetricError):
    def __init__(self, t, kind):
        super().__init__(f"metric leaves the unitary regime at t={t!r} ({kind})")
        self.t = t
        self.kind = kind
