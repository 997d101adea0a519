"""Ordered real Schur factorization and Sylvester block diagonalization.

``schur_ordered`` computes ``J = Q T Q'`` with ``T`` quasi-upper-triangular
and the fast (most negative real part) eigenvalues in the leading block::

    T = [[Lf, Lam],
         [0,  Ls ]]

``slow_complement_rows`` then solves ``Lf X - X Ls = -Lam`` and returns the
rows of ``(QY)^{-1}`` with ``Y = [[I, X], [0, I]]``, which block-diagonalize
``J`` and project onto the fast subspace along the slow one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..errors import ConfigurationError, GapTooSmallError, NumericalError
from . import _backend

__all__ = [
    "MAX_SIZE",
    "SchurFactorization",
    "BlockDiagonalization",
    "schur_ordered",
    "sylvester_solve",
    "slow_complement_rows",
    "block_eigenvalues",
]

MAX_SIZE = 64
DEFAULT_GAP = 10.0
# relative slack on the gap ratio so that a ratio equal to the threshold passes
_GAP_SLACK = 1e-8


@dataclass(frozen=True)
class SchurFactorization:
    Q: np.ndarray
    T: np.ndarray
    ordering: str
    n_fast: int
    m_slow: int
    eigenvalues: np.ndarray
    gap_ratio: float

    @property
    def lead(self):
        return self.n_fast if self.ordering == "fast-first" else self.m_slow

    # blocks for the fast-first partition; rows of Q split (m | n), columns (n | m)
    @property
    def Lf(self):
        return self.T[: self.n_fast, : self.n_fast]

    @property
    def Ls(self):
        return self.T[self.n_fast :, self.n_fast :]

    @property
    def Lam(self):
        return self.T[: self.n_fast, self.n_fast :]

    @property
    def Q11(self):
        return self.Q[: self.m_slow, : self.n_fast]

    @property
    def Q12(self):
        return self.Q[: self.m_slow, self.n_fast :]

    @property
    def Q21(self):
        return self.Q[self.m_slow :, : self.n_fast]

    @property
    def Q22(self):
        return self.Q[self.m_slow :, self.n_fast :]


@dataclass(frozen=True)
class BlockDiagonalization:
    """Sylvester solution and the row/column blocks of ``QY`` and its inverse.

    ``fast_rows`` is the ``n x (m+n)`` matrix ``[Q'11 - X Q'12 | Q'21 - X Q'22]``;
    ``fast_rows @ F`` vanishes exactly when ``F`` lies in the slow subspace.
    """

    X: np.ndarray
    fast_rows: np.ndarray
    slow_rows: np.ndarray
    fast_basis: np.ndarray
    slow_basis: np.ndarray
    m: int
    n: int

    @property
    def row_f(self):
        """``Q'11 - X Q'12`` (n x m), multiplies the slow field ``f``."""
        return self.fast_rows[:, : self.m]

    @property
    def row_g(self):
        """``Q'21 - X Q'22`` (n x n), multiplies ``g / eps``."""
        return self.fast_rows[:, self.m :]

    @property
    def inverse(self):
        return np.vstack([self.fast_rows, self.slow_rows])

    @property
    def basis(self):
        return np.hstack([self.fast_basis, self.slow_basis])


def block_eigenvalues(T, starts=None):
    """Eigenvalues of each diagonal block of quasi-triangular ``T`` (one per block)."""
    kern = _backend.get()
    if starts is None:
        starts = kern.block_starts(T)
    out = []
    for s, e in zip(starts, list(starts[1:]) + [T.shape[0]]):
        if e - s == 1:
            out.append(complex(T[s, s]))
        else:
            ev = np.linalg.eigvals(T[s:e, s:e])
            out.append(complex(ev.real.mean(), abs(ev.imag).max()))
    return out


def _swap_general(T, Q, k, p, q, kern):
    """Swap adjacent diagonal blocks of sizes p, q starting at k (in place)."""
    A11 = T[k : k + p, k : k + p]
    A12 = T[k : k + p, k + p : k + p + q]
    A22 = T[k + p : k + p + q, k + p : k + p + q]
    X = kern.trsyl(A11, A22, A12, 0.0)
    # columns of [-X; I] span the invariant subspace belonging to A22
    Z, _ = np.linalg.qr(np.vstack([-X, np.eye(q)]), mode="complete")
    sl = slice(k, k + p + q)
    T[sl, :] = Z.T @ T[sl, :]
    T[:, sl] = T[:, sl] @ Z
    Q[:, sl] = Q[:, sl] @ Z
    T[k + q : k + p + q, k : k + q] = 0.0


def _sort_key(lam, ordering):
    if ordering == "fast-first":
        return (lam.real, abs(lam.imag))
    return (-lam.real, abs(lam.imag))


def _reorder(T, Q, ordering, kern, tol):
    starts = kern.block_starts(T)
    sizes = [e - s for s, e in zip(starts, starts[1:] + [T.shape[0]])]
    eigs = block_eigenvalues(T, starts)
    nblk = len(sizes)
    for sweep in range(nblk):
        swapped = False
        for b in range(nblk - 1 - sweep):
            ka, kb = _sort_key(eigs[b], ordering), _sort_key(eigs[b + 1], ordering)
            if ka[0] > kb[0] + tol or (abs(ka[0] - kb[0]) <= tol and ka[1] > kb[1] + tol):
                k = sum(sizes[:b])
                if sizes[b] == 1 and sizes[b + 1] == 1:
                    kern.swap11(T, Q, k)
                else:
                    _swap_general(T, Q, k, sizes[b], sizes[b + 1], kern)
                sizes[b], sizes[b + 1] = sizes[b + 1], sizes[b]
                eigs[b], eigs[b + 1] = eigs[b + 1], eigs[b]
                swapped = True
        if not swapped:
            break
    return sizes


def schur_ordered(J, n_fast: int, gap_threshold: float = DEFAULT_GAP, ordering: str = "fast-first",
                  backend: Optional[str] = None) -> SchurFactorization:
    """Real Schur factorization with fast eigenvalues leading.

    The initial factorization comes from LAPACK (via scipy); blocks are then
    sorted by ascending real part (ties: ascending ``|imag|``) using
    orthogonal adjacent swaps. ``ordering="slow-first"`` reverses the sort.

    Raises
    ------
    GapTooSmallError
        If ``min |Re fast| / max |Re slow| < gap_threshold`` or a complex pair
        straddles the fast/slow partition.
    NumericalError
        If the QR iteration does not converge.
    """
    J = np.array(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ConfigurationError("J must be square")
    size = J.shape[0]
    if size > MAX_SIZE:
        raise ConfigurationError(f"matrix size {size} exceeds limit {MAX_SIZE}")
    if not 1 <= n_fast < size:
        raise ConfigurationError("n_fast must satisfy 1 <= n_fast < size")
    if ordering not in ("fast-first", "slow-first"):
        raise ConfigurationError(f"unknown ordering {ordering!r}")
    if not np.all(np.isfinite(J)):
        raise NumericalError("Jacobian contains non-finite entries")
    kern = _backend.get(backend)
    try:
        T, Q = scipy.linalg.schur(J, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Schur QR iteration failed: {exc}") from exc
    T = np.ascontiguousarray(T)
    Q = np.ascontiguousarray(Q)
    scale = max(1.0, float(np.max(np.abs(J))))
    sizes = _reorder(T, Q, ordering, kern, tol=1e-13 * scale)

    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int).tolist()
    eig_list = []
    for s, sz in zip(starts, sizes):
        if sz == 1:
            eig_list.append(complex(T[s, s]))
        else:
            eig_list.extend(np.linalg.eigvals(T[s : s + sz, s : s + sz]).tolist())
    eigs = np.array(eig_list, dtype=complex)

    lead = n_fast if ordering == "fast-first" else size - n_fast
    if lead not in np.cumsum(sizes):
        raise GapTooSmallError("a complex-conjugate pair straddles the fast/slow partition", ratio=0.0)
    fast = eigs[:lead] if ordering == "fast-first" else eigs[lead:]
    slow = eigs[lead:] if ordering == "fast-first" else eigs[:lead]
    slow_max = float(np.max(np.abs(slow.real)))
    fast_min = float(np.min(np.abs(fast.real)))
    ratio = np.inf if slow_max == 0.0 else fast_min / slow_max
    if ratio < gap_threshold * (1.0 - _GAP_SLACK):
        raise GapTooSmallError(
            f"spectral gap ratio {ratio:.4g} below threshold {gap_threshold:g}", ratio=ratio
        )
    return SchurFactorization(Q, T, ordering, n_fast, size - n_fast, eigs, float(ratio))


def sylvester_solve(Lf, Ls, Lam, pivot_tol: float = 1e-12, backend: Optional[str] = None) -> np.ndarray:
    """Solve ``Lf X - X Ls = -Lam`` for quasi-triangular ``Lf`` and ``Ls``.

    Raises :class:`~sml.errors.SingularSylvesterError` when an eigenvalue of
    ``Lf`` comes within ``pivot_tol`` of one of ``Ls``.
    """
    Lam = np.asarray(Lam, dtype=float)
    return _backend.get(backend).trsyl(np.asarray(Lf, dtype=float), np.asarray(Ls, dtype=float), -Lam, pivot_tol)


def slow_complement_rows(sf: SchurFactorization, backend: Optional[str] = None) -> BlockDiagonalization:
    """Block diagonalization ``J = (QY) T_d (QY)^{-1}`` from a fast-first factorization."""
    if sf.ordering != "fast-first":
        raise ConfigurationError("slow_complement_rows needs a fast-first factorization")
    n, m = sf.n_fast, sf.m_slow
    X = sylvester_solve(sf.Lf, sf.Ls, sf.Lam, backend=backend)
    Qt = sf.Q.T
    # Q' = [[Q'11, Q'21], [Q'12, Q'22]]: rows split (n | m), columns (m | n)
    top = Qt[:n, :]
    bottom = Qt[n:, :]
    fast_rows = top - X @ bottom
    slow_rows = bottom.copy()
    fast_basis = sf.Q[:, :n].copy()
    slow_basis = sf.Q[:, :n] @ X + sf.Q[:, n:]
    return BlockDiagonalization(X, fast_rows, slow_rows, fast_basis, slow_basis, m, n)
