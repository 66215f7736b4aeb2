"""Exception types shared across the package."""


class PortraitGSError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(PortraitGSError, ValueError):
    """Caller passed inconsistent shapes, dtypes, or out-of-contract values."""


class InvariantViolationError(PortraitGSError, RuntimeError):
    """An internal data invariant was broken (corrupt state, not caller error)."""


class OverlappingUVError(InvalidArgumentError):
    """UV atlas triangles overlap; carries the offending face pairs."""

    def __init__(self, face_pairs):
        self.face_pairs = list(face_pairs)
        shown = ", ".join(f"({a}, {b})" for a, b in self.face_pairs[:8])
        more = "" if len(self.face_pairs) <= 8 else f" (+{len(self.face_pairs) - 8} more)"
        super().__init__(f"overlapping UV triangles: {shown}{more}")


class TopologyMismatchError(PortraitGSError, RuntimeError):
    """Checkpoint topology hash does not match the asset it is applied to."""

    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"topology hash mismatch: asset={expected} checkpoint={found}")


class NonFiniteLossError(PortraitGSError, RuntimeError):
    """Training loss became non-finite; carries the offending frame index."""

    def __init__(self, frame_index, report):
        self.frame_index = frame_index
        self.report = report
        super().__init__(f"non-finite loss at frame {frame_index}; {report}")
