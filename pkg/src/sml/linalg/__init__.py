"""Ordered Schur factorization, Sylvester solves and kernel backend selection."""

from ._backend import active as active_backend, available as available_backends, set_backend
from .schur import (
    MAX_SIZE,
    BlockDiagonalization,
    SchurFactorization,
    block_eigenvalues,
    schur_ordered,
    slow_complement_rows,
    sylvester_solve,
)

__all__ = [
    "MAX_SIZE",
    "BlockDiagonalization",
    "SchurFactorization",
    "active_backend",
    "available_backends",
    "block_eigenvalues",
    "schur_ordered",
    "set_backend",
    "slow_complement_rows",
    "sylvester_solve",
]
