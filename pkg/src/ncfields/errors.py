"""
Exception hierarchy for the toolkit.

Library code raises these; the command-line front end maps them to exit codes.
"""


class NcFieldsError(Exception):
    """Base class for all toolkit errors"""
    pass


class InvalidArgumentError(NcFieldsError, ValueError):
    """Raised when an operation receives an argument outside its domain"""
    pass


class InvalidModelError(NcFieldsError):
    """Raised when a chiral model matrix is not symmetric or not invertible"""
    pass


class StepFailureError(NcFieldsError):
    """Raised when an integrator step cannot be taken"""
    pass


class ConfigurationError(NcFieldsError):
    """Raised when there's an error in configuration"""
    pass
