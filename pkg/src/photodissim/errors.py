"""Exception and warning types.

Errors fall in three families that the command line maps to exit codes:
configuration (2), physics regime (3) and numerical failure (4).
"""


class PhotodissimError(Exception):
    exit_code = 1


# -- configuration -----------------------------------------------------------

class ConfigError(PhotodissimError):
    exit_code = 2


class MissingKey(ConfigError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"missing required key {key!r}")


class BadValue(ConfigError):
    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"bad value for {key!r}: {reason}")


class NonCPDissipation(ConfigError):
    def __init__(self, details):
        self.details = details
        super().__init__(f"dissipation parameters violate complete positivity: {details}")


class BadAxis(ConfigError):
    def __init__(self, axis, reason="not a numeric configuration key"):
        self.axis = axis
        super().__init__(f"bad sweep axis {axis!r}: {reason}")


# -- physics regime ----------------------------------------------------------

class RegimeError(PhotodissimError):
    exit_code = 3


class DegenerateHamiltonian(RegimeError):
    def __init__(self, msg="level splitting omega = sqrt(mu^2 + nu^2) is zero"):
        super().__init__(msg)


class SingularGauge(RegimeError):
    def __init__(self, msg="instantaneous basis is singular at mu = -omega"):
        super().__init__(msg)


class UnsupportedRegime(RegimeError):
    pass


class DissipationNotZero(RegimeError):
    def __init__(self, msg="adiabatic unitary evolution requires zero dissipation"):
        super().__init__(msg)


class ResonantDenominator(RegimeError):
    pass


# -- numerical failure -------------------------------------------------------

class NumericalError(PhotodissimError):
    exit_code = 4


class NonPhysicalState(NumericalError):
    pass


class NonRealExpectation(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class ProbabilityOutOfRange(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NonUniformGrid(NumericalError):
    pass


class TooFewSamples(NumericalError):
    pass


class InsufficientPeaks(NumericalError):
    pass


class TooFewExtrema(NumericalError):
    pass


# -- warnings ----------------------------------------------------------------

class PhotodissimWarning(UserWarning):
    pass


class AdiabaticityWarning(PhotodissimWarning):
    """Modulation frequency not small compared to the level splitting."""


class CPViolationWarning(PhotodissimWarning):
    """Dissipation parameters violate complete positivity."""


class RegimeWarning(PhotodissimWarning):
    """Parameters outside the validity region of an approximation."""
