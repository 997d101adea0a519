"""Pure-Python kernels; reference behaviour for the compiled ``_ckernels``."""

import math

import numpy as np

from ..errors import SingularSylvesterError

BACKEND = "python"


def block_starts(T):
    """Top-left indices of the 1x1/2x2 diagonal blocks of quasi-triangular ``T``."""
    k = T.shape[0]
    starts = []
    i = 0
    while i < k:
        starts.append(i)
        if i + 1 < k and T[i + 1, i] != 0.0:
            i += 2
        else:
            i += 1
    return starts


def _block_eigs(M):
    if M.shape[0] == 1:
        return [complex(M[0, 0])]
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    half_tr = 0.5 * (a + d)
    disc = (0.5 * (a - d)) ** 2 + b * c
    if disc >= 0:
        r = math.sqrt(disc)
        return [complex(half_tr + r), complex(half_tr - r)]
    r = math.sqrt(-disc)
    return [complex(half_tr, r), complex(half_tr, -r)]


def trsyl(A, B, C, pivot_tol=1e-12):
    """Solve ``A X - X B = C`` with ``A``, ``B`` upper quasi-triangular.

    Bartels-Stewart back-substitution: block rows of ``A`` bottom-up, block
    columns of ``B`` left to right; each step is a Kronecker system of size
    at most 4.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.array(C, dtype=float)
    p, q = A.shape[0], B.shape[0]
    X = np.zeros((p, q))
    ra = block_starts(A) + [p]
    rb = block_starts(B) + [q]
    for bi in range(len(ra) - 2, -1, -1):
        i0, i1 = ra[bi], ra[bi + 1]
        Akk = A[i0:i1, i0:i1]
        ea = _block_eigs(Akk)
        for bj in range(len(rb) - 1):
            j0, j1 = rb[bj], rb[bj + 1]
            Bll = B[j0:j1, j0:j1]
            sep = min(abs(x - y) for x in ea for y in _block_eigs(Bll))
            if sep < pivot_tol:
                raise SingularSylvesterError(
                    f"Sylvester pivot {sep:.3e} below {pivot_tol:.1e} at block ({i0}, {j0})"
                )
            rhs = C[i0:i1, j0:j1] - A[i0:i1, i1:] @ X[i1:, j0:j1] + X[i0:i1, :j0] @ B[:j0, j0:j1]
            pk, ql = i1 - i0, j1 - j0
            if pk == 1 and ql == 1:
                X[i0, j0] = rhs[0, 0] / (Akk[0, 0] - Bll[0, 0])
                continue
            K = np.kron(np.eye(ql), Akk) - np.kron(Bll.T, np.eye(pk))
            sol = np.linalg.solve(K, rhs.reshape(-1, order="F"))
            X[i0:i1, j0:j1] = sol.reshape((pk, ql), order="F")
    return X


def swap11(T, Q, k):
    """Swap the adjacent 1x1 diagonal blocks ``k`` and ``k+1`` in place."""
    a = T[k, k]
    b = T[k, k + 1]
    c = T[k + 1, k + 1]
    x0, x1 = b, c - a
    r = math.hypot(x0, x1)
    if r == 0.0:
        return
    cs, sn = x0 / r, x1 / r
    # rows k, k+1 of T  <- G^T T
    for j in range(k, T.shape[1]):
        t0, t1 = T[k, j], T[k + 1, j]
        T[k, j] = cs * t0 + sn * t1
        T[k + 1, j] = -sn * t0 + cs * t1
    # columns k, k+1 of T and Q  <- . G
    for i in range(0, k + 2):
        t0, t1 = T[i, k], T[i, k + 1]
        T[i, k] = cs * t0 + sn * t1
        T[i, k + 1] = -sn * t0 + cs * t1
    for i in range(Q.shape[0]):
        q0, q1 = Q[i, k], Q[i, k + 1]
        Q[i, k] = cs * q0 + sn * q1
        Q[i, k + 1] = -sn * q0 + cs * q1
    T[k, k] = c
    T[k + 1, k + 1] = a
    T[k + 1, k] = 0.0
