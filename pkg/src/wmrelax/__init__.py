"""Numerical construction of an infinite-time soliton relaxation ansatz for
1-equivariant wave maps, and verification of its kernel identities,
oscillatory asymptotics, modulation equation and residual bounds."""

from .backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
