"""Superoscillating quantum control by sequential pre- and post-selection.

Modules: ``qcore`` (linear algebra and Fock space), ``wavepacket`` (grid
wave packets), ``selection`` (weak values and readout), ``transport``,
``search``, ``openquantum`` (Lindblad runs) and ``cli``.
"""
from .qcore import BoundaryError, ConvergenceError, NumericalError, TrapSpec

__version__ = "0.1.0"

__all__ = ["BoundaryError", "ConvergenceError", "NumericalError", "TrapSpec", "__version__"]
