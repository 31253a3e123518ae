"""Exception hierarchy shared across the package."""


class BayesbwError(Exception):
    """Base class for all library errors."""


class ValidationError(BayesbwError):
    """Malformed user input: CSV rows, config fields, argument domains."""


class InvalidBandwidthError(BayesbwError):
    """A bandwidth is nonpositive or non-finite."""


class DegenerateWindowError(BayesbwError):
    """Local kernel weights sum below the underflow floor at some point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RankDeficiencyError(BayesbwError):
    """A local design matrix stayed singular even after ridge regularization."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateResidualsError(BayesbwError):
    """Residuals carry no usable spread (total ties, empty exclusion set)."""


class DegenerateRegressorError(BayesbwError):
    """A regressor column has no spread, so no scale rule applies."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class SelectorFailureError(BayesbwError):
    """A bandwidth selector could not produce a finite optimum."""


class SamplerInitError(BayesbwError):
    """No initial point with finite log posterior could be found."""


class EvidenceUndefinedError(BayesbwError):
    """A marginal-likelihood estimate is numerically undefined or unstable."""
