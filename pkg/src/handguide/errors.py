"""Exception hierarchy. The CLI maps HandguideError to a nonzero exit code."""


class HandguideError(Exception):
    """Base class for all errors raised by this package."""


class ChainFormatError(HandguideError):
    """Chain document is malformed (bad JSON, missing field, bad mesh file)."""


class ChainValidationError(HandguideError):
    """Chain document parsed but violates a structural invariant."""


class DegenerateRadiusError(HandguideError):
    """Projected hand point coincides with the joint axis; angle undefined."""


class StaleSampleError(HandguideError):
    """Hand sample timestamp is not strictly increasing."""


class EmptySceneError(HandguideError):
    """Point-cloud operation received or produced an empty cloud."""


class TargetLimitError(HandguideError):
    """Controller target outside joint limits."""


class TrajectoryError(HandguideError):
    """Trajectory recording/replay misuse (non-monotone time, empty input)."""


class ProtocolError(HandguideError):
    """Wire message failed schema or session-mode validation."""
