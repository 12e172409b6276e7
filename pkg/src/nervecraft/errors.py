"""Exception hierarchy.

Each family maps to one CLI exit code (see ``nervecraft.cli``).
"""


class NervecraftError(Exception):
    exit_code = 2


class InputError(NervecraftError, ValueError):
    """Malformed file, bad parameter or violated precondition."""

    exit_code = 3


class MeshParseError(InputError):
    pass


class ResolutionExhausted(NervecraftError):
    """The radius ladder fell below what the mesh can resolve."""

    exit_code = 2

    def __init__(self, vertex, radius, h):
        self.vertex = vertex
        self.radius = radius
        self.h = h
        super().__init__(
            f"ladder at vertex {vertex} reached radius {radius:g} below the "
            f"resolution guard (mesh spacing h={h:g}); refine or rescale"
        )


class InvariantViolation(NervecraftError):
    """An internal postcondition failed; indicates inconsistent input or a bug."""

    exit_code = 2

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class ScheduleError(InputError):
    pass


class BudgetExceeded(NervecraftError):
    """Face enumeration would exceed the configured budget."""

    exit_code = 2
