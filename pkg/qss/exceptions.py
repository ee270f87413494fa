"""
QSS Collusion Lab - Exceptions
Error taxonomy shared by the simulator, the protocol engine and the CLI
"""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidArgumentError(SimulationError, ValueError):
    """Bad operands: unknown or duplicate qubits, non-unitary ops, wrong lengths."""


class InternalInvariantError(SimulationError, RuntimeError):
    """A simulator bug, never a legal protocol outcome."""


class ProtocolStateError(SimulationError):
    """Operation requested in the wrong protocol phase."""


class ProtocolAbortError(SimulationError):
    """A party refused a protocol request."""
