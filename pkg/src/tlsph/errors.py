"""Exception types shared across the package."""


class TlsphError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(TlsphError):
    """Invalid user configuration: unknown case, parameter out of range, bad file."""


class NumericalError(TlsphError):
    """The time integration produced an unusable state."""

    def __init__(self, message, time=None, step=None):
        if time is not None:
            message = f"{message} (t = {time:.9e} s, step {step})"
        super().__init__(message)
        self.time = time
        self.step = step


class ElementInversionError(NumericalError):
    """det F dropped to zero or below for at least one particle.

    Inversion is fatal by design; clamping it would hide exactly the
    instability the damper is supposed to prevent.
    """

    def __init__(self, particle, det_f, time=None, step=None):
        super().__init__(
            f"deformation gradient inverted at particle {particle} "
            f"(det F = {det_f:.6e})",
            time=time,
            step=step,
        )
        self.particle = int(particle)
        self.det_f = float(det_f)


class InstabilityError(NumericalError):
    """Non-finite velocities or positions: the run has blown up."""


class CorrectionMatrixError(TlsphError):
    """Singular or ill-conditioned gradient-correction moment matrix."""


class DuplicateParticlesError(TlsphError):
    """Two particles share a reference position."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        shown = ", ".join(f"({i}, {j})" for i, j in self.pairs[:5])
        more = "" if len(self.pairs) <= 5 else f" and {len(self.pairs) - 5} more"
        super().__init__(f"coincident reference positions at index pairs {shown}{more}")


class StlParseError(TlsphError):
    """Malformed STL payload."""

    def __init__(self, message, byte_offset=None, line=None):
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        if line is not None:
            message = f"{message} (at line {line})"
        super().__init__(message)
        self.byte_offset = byte_offset
        self.line = line


class WatertightnessError(TlsphError):
    """Ray-parity test found an inconsistent (leaky) surface mesh."""
