"""Exception hierarchy for the engine.

Input problems (bad files, bad configs, bad graphs) raise subclasses of
:class:`InputError`; conditions the model itself cannot satisfy (a layer
that fits no tile, a workload that overflows DRAM) raise subclasses of
:class:`ModelError`. The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""

from __future__ import annotations


class MemdseError(Exception):
    """Base class for all engine errors."""


class InputError(MemdseError):
    """Invalid user input: files, configs, workload definitions."""


class IrSyntaxError(InputError):
    """Workload file is not syntactically valid."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class GraphValidationError(InputError):
    """Workload violates a structural invariant (dangling reference, cycle, ...)."""


class GeometryError(InputError):
    """Operator attributes produce a non-positive output extent."""


class ConfigError(InputError):
    """Engine or technology configuration is missing, malformed, or inconsistent."""


class ModelError(MemdseError):
    """The model cannot evaluate the requested point."""


class NoFeasibleTilingError(ModelError):
    """Even the minimal tile of a layer exceeds the effective L1 budget."""

    def __init__(self, node_id: str, l1_eff: int, min_bytes: int):
        self.node_id = node_id
        self.l1_eff = l1_eff
        self.min_bytes = min_bytes
        super().__init__(
            f"no feasible tiling for layer '{node_id}': minimal tile needs "
            f"{min_bytes} B but effective L1 is {l1_eff} B"
        )


class DramCapacityError(ModelError):
    """Total workload footprint exceeds the configured DRAM capacity."""

    def __init__(self, footprint_bytes: int, capacity_bytes: int):
        self.footprint_bytes = footprint_bytes
        self.capacity_bytes = capacity_bytes
        super().__init__(
            f"workload footprint {footprint_bytes} B exceeds DRAM capacity "
            f"{capacity_bytes} B"
        )
