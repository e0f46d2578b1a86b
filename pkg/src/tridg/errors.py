"""Exception hierarchy for the solver."""


class TriDGError(Exception):
    """Base class for all solver errors."""


class MeshFormatError(TriDGError):
    """Malformed mesh file. Carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(TriDGError):
    """Non-conforming connectivity (edge shared by >2 cells, duplicate cell, ...)."""


class GeometryError(TriDGError):
    """Degenerate, zero-area, or wrongly oriented cell."""


class ConfigError(TriDGError):
    """Invalid run configuration. Message names the offending field."""


class AdmissibilityError(TriDGError):
    """A state left the admissible set (e.g. non-positive density/pressure)."""

    def __init__(self, message, cell=None, edge=None):
        self.cell = cell
        self.edge = edge
        where = []
        if cell is not None:
            where.append(f"cell {cell}")
        if edge is not None:
            where.append(f"edge {edge}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)


class NumericsError(TriDGError):
    """NaN/Inf detected during time integration. Carries the last good state."""

    def __init__(self, message, last_state=None, step=None):
        self.last_state = last_state
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class UnsupportedOperationError(TriDGError):
    """Operation not defined for this model (e.g. rotation of a scalar law)."""
