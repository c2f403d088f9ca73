"""
Error types for SDWTRACK
Each error carries the process exit code the CLI reports for it
"""


class SdwTrackError(Exception):
    """Base class for every solver error"""
    exit_code: int = 1


class ConfigError(SdwTrackError):
    """Run configuration could not be parsed or validated"""
    exit_code = 2


class InvariantError(SdwTrackError, RuntimeError):
    """An internal invariant of the front tracker was breached"""
    exit_code = 3


class PreconditionError(SdwTrackError, ValueError):
    """An operation was called outside its domain"""
    exit_code = 4
