"""Intrinsic low-dimensional manifolds.

In slow time the Jacobian and the vector field of ``y' = eps f``,
``z' = g`` are::

    J = [[Dyf,       Dzf      ],      F = (f, g / eps)
         [Dyg / eps, Dzg / eps]]

A point ``(y, z)`` lies on the ILDM when ``F`` sits in the slow invariant
subspace of ``J``.  Two residuals are provided: a closed-form planar one
(``m = n = 1``) and the general Schur/Sylvester one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import pmap
from .asymptotics import solve_h0
from .core import FastSlowSystem, GridManifold
from .errors import (
    ComplexSpectrumError,
    ConfigurationError,
    DomainError,
    NonConvergenceError,
    PartialResultError,
    SmlError,
    SingularSystemError,
)
from .linalg import schur_ordered, slow_complement_rows
from .linalg.schur import DEFAULT_GAP

__all__ = [
    "PlanarSpectralData",
    "slow_time_jacobian",
    "planar_spectral_data",
    "planar_ildm_residual",
    "general_ildm_residual",
    "ildm_point",
    "planar_ildm_point",
    "ildm_sweep",
]

NEWTON_FD_STEP = 1e-6


def slow_time_jacobian(sys: FastSlowSystem, y, z, eps: float):
    """Jacobian ``J`` and vector field ``F`` in slow time at ``(y, z, eps)``."""
    if eps <= 0:
        raise ConfigurationError("the ILDM needs eps > 0")
    y, z = sys.check_point(y, z, eps)
    top = np.hstack([sys.block("Dyf", y, z, eps), sys.block("Dzf", y, z, eps)])
    bot = np.hstack([sys.block("Dyg", y, z, eps), sys.block("Dzg", y, z, eps)]) / eps
    F = np.concatenate([sys.eval_f(y, z, eps), sys.eval_g(y, z, eps) / eps])
    return np.vstack([top, bot]), F


@dataclass(frozen=True)
class PlanarSpectralData:
    lam_s: float
    lam_f: float
    v_s: np.ndarray
    v_perp: np.ndarray
    y: float
    z: float
    eps: float


def planar_spectral_data(sys: FastSlowSystem, y, z, eps: float) -> PlanarSpectralData:
    """Closed-form eigen-data of the 2x2 slow-time Jacobian.

    Raises :class:`ComplexSpectrumError` for a negative discriminant.
    """
    if sys.m != 1 or sys.n != 1:
        raise ConfigurationError("planar path needs m = n = 1")
    J, _ = slow_time_jacobian(sys, np.atleast_1d(y), np.atleast_1d(z), eps)
    fy, fz = J[0]
    gy, gz = J[1]  # already divided by eps
    half_tr = 0.5 * (fy + gz)
    det = fy * gz - fz * gy
    disc = half_tr * half_tr - det
    if disc < 0:
        raise ComplexSpectrumError(f"complex eigenvalues at y={y}, z={z}, eps={eps}; use the general path")
    root = math.sqrt(disc)
    # the fast root has no cancellation; recover the slow one from the determinant
    if half_tr <= 0:
        lam_f = half_tr - root
        lam_s = det / lam_f if lam_f != 0 else half_tr + root
    else:
        lam_s = half_tr + root
        lam_f = det / lam_s if lam_s != 0 else half_tr - root
    r1 = np.array([fy - lam_s, fz])
    r2 = np.array([gy, gz - lam_s])
    row = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    nrm = np.linalg.norm(row)
    if nrm == 0:
        v_s, v_perp = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        v_perp = row / nrm
        v_s = np.array([-v_perp[1], v_perp[0]])
    return PlanarSpectralData(float(lam_s), float(lam_f), v_s, v_perp,
                              float(np.ravel(y)[0]), float(np.ravel(z)[0]), float(eps))


def planar_ildm_residual(sys: FastSlowSystem, y, z, eps: float) -> float:
    """``f g_y + g (g_z / eps - lam_s)`` with ``lam_s`` from the closed form."""
    sd = planar_spectral_data(sys, y, z, eps)
    yy, zz = np.atleast_1d(np.asarray(y, dtype=float)), np.atleast_1d(np.asarray(z, dtype=float))
    f = sys.eval_f(yy, zz, eps)[0]
    g = sys.eval_g(yy, zz, eps)[0]
    gy = sys.block("Dyg", yy, zz, eps)[0, 0]
    gz = sys.block("Dzg", yy, zz, eps)[0, 0]
    return float(f * gy + g * (gz / eps - sd.lam_s))


def _fast_rows(sys, y, z, eps, gap_threshold):
    J, _ = slow_time_jacobian(sys, y, z, eps)
    sf = schur_ordered(J, sys.n, gap_threshold=gap_threshold)
    return slow_complement_rows(sf)


def general_ildm_residual(sys: FastSlowSystem, y, z, eps: float,
                          gap_threshold: float = DEFAULT_GAP) -> np.ndarray:
    """``eps (Q'11 - X Q'12) f + (Q'21 - X Q'22) g``, an ``n``-vector.

    This is the displayed ILDM combination multiplied by ``eps``.  The
    signs of the fast Schur vectors are fixed so that the largest entry of
    each is positive, which makes the residual a continuous function of
    ``z`` for ``n = 1``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    bd = _fast_rows(sys, y, z, eps, gap_threshold)
    f = sys.eval_f(y, z, eps)
    g = sys.eval_g(y, z, eps)
    r = eps * (bd.row_f @ f) + bd.row_g @ g
    # the rows of fast_rows are Q_f' - X Q_s'; flipping a Schur vector flips its row
    sign = np.sign(bd.fast_basis[np.argmax(np.abs(bd.fast_basis), axis=0), np.arange(sys.n)])
    sign[sign == 0] = 1.0
    return sign * r


def _newton_residual(sys, y, z, eps, gap_threshold):
    # B^{-1}(eps A f) + g: same zero set, independent of the Schur frame
    bd = _fast_rows(sys, y, z, eps, gap_threshold)
    B = bd.row_g
    try:
        cond = np.linalg.cond(B)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularSystemError(f"fast rows do not determine z at y={y.tolist()} (cond {cond:.3g})")
    f = sys.eval_f(y, z, eps)
    g = sys.eval_g(y, z, eps)
    return np.linalg.solve(B, eps * (bd.row_f @ f)) + g


def ildm_point(sys: FastSlowSystem, y, eps: float, z_guess, tol: float = 1e-10, max_iter: int = 50,
               gap_threshold: float = DEFAULT_GAP, fd_step: float = NEWTON_FD_STEP) -> np.ndarray:
    """Newton root ``z`` of the ILDM residual at fixed ``y`` and ``eps``.

    The Newton Jacobian is a forward finite difference of the whole
    Schur/Sylvester pipeline with step ``fd_step * max(1, |z_j|)``.

    Raises
    ------
    GapTooSmallError
        The Jacobian at the starting point has no usable spectral gap.
    NonConvergenceError
        Residual above ``tol`` after ``max_iter`` steps; ``err.trace`` holds
        the residual history.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z_guess, dtype=float)).copy()
    if z.shape != (sys.n,):
        raise ConfigurationError(f"z_guess must have length {sys.n}")
    trace = []
    r = _newton_residual(sys, y, z, eps, gap_threshold)
    for _ in range(max_iter):
        res = float(np.max(np.abs(r)))
        trace.append(res)
        if res <= tol:
            return z
        Jr = np.empty((sys.n, sys.n))
        for j in range(sys.n):
            h = fd_step * max(1.0, abs(z[j]))
            zp = z.copy()
            zp[j] += h
            try:
                Jr[:, j] = (_newton_residual(sys, y, zp, eps, gap_threshold) - r) / h
            except DomainError as exc:
                raise NonConvergenceError(str(exc), node=y.tolist(), trace=trace) from exc
        try:
            step = np.linalg.solve(Jr, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(f"singular Newton matrix at y={y.tolist()}", node=y.tolist(),
                                      trace=trace) from exc
        # backtrack on the residual norm
        t = 1.0
        while True:
            try:
                r_new = _newton_residual(sys, y, z + t * step, eps, gap_threshold)
                if np.max(np.abs(r_new)) < res or t < 1e-3:
                    break
            except (DomainError, SingularSystemError):
                if t < 1e-3:
                    raise NonConvergenceError(f"Newton left the evaluation box at y={y.tolist()}",
                                              node=y.tolist(), trace=trace) from None
            t *= 0.5
        z = z + t * step
        r = r_new
    res = float(np.max(np.abs(r)))
    trace.append(res)
    if res <= tol:
        return z
    raise NonConvergenceError(f"ILDM Newton did not converge at y={y.tolist()} (residual {res:.3e})",
                              node=y.tolist(), trace=trace)


def planar_ildm_point(sys: FastSlowSystem, y, eps: float, z_guess, tol: float = 1e-13,
                      max_iter: int = 50) -> float:
    """Root of the planar residual by secant iteration (cross-check for ``ildm_point``)."""
    z0 = float(np.ravel(z_guess)[0])
    z1 = z0 + 1e-4 * max(1.0, abs(z0))
    r0 = planar_ildm_residual(sys, y, z0, eps)
    r1 = planar_ildm_residual(sys, y, z1, eps)
    trace = [abs(r0), abs(r1)]
    scale = max(1.0, abs(r0))
    for _ in range(max_iter):
        if r1 == r0:
            break
        z0, z1 = z1, z1 - r1 * (z1 - z0) / (r1 - r0)
        r0, r1 = r1, planar_ildm_residual(sys, y, z1, eps)
        trace.append(abs(r1))
        if abs(r1) <= tol * scale or abs(z1 - z0) <= 1e-15 * max(1.0, abs(z1)):
            return z1
    if abs(r1) <= 1e3 * tol * scale:
        return z1
    raise NonConvergenceError(f"planar ILDM iteration did not converge at y={y}", node=[float(np.ravel(y)[0])],
                              trace=trace)


def ildm_sweep(sys: FastSlowSystem, axes, eps: float, h0man: Optional[GridManifold] = None,
               tol: float = 1e-10, gap_threshold: float = DEFAULT_GAP) -> GridManifold:
    """ILDM tabulated on ``axes`` by continuation from the critical manifold.

    Grid lines run along the last axis.  The first node of every line is
    solved in sequence (the very first from ``h0``), then each line is
    continued node by node; lines run in parallel when ``SML_THREADS > 1``.

    Raises
    ------
    PartialResultError
        Some nodes failed; ``err.failed`` lists ``(y, message)`` and
        ``err.partial`` is the manifold with NaN at the failed nodes.
    """
    if isinstance(axes, GridManifold):
        axes = axes.axes
    axes = tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in axes)
    if h0man is None:
        h0man = solve_h0(sys, axes)
    counts = tuple(a.size for a in axes)
    nodes = h0man.nodes().reshape(counts + (sys.m,))
    h0 = h0man.values
    out = np.full(counts + (sys.n,), np.nan)
    failed = []

    def solve(idx, guess):
        try:
            return ildm_point(sys, nodes[idx], eps, guess, tol=tol, gap_threshold=gap_threshold), None
        except SmlError as exc:
            return None, (nodes[idx].tolist(), f"{type(exc).__name__}: {exc}")

    line_heads = list(np.ndindex(*counts[:-1])) if len(counts) > 1 else [()]
    prev = None
    heads = {}
    for head in line_heads:
        idx = head + (0,)
        z, err = solve(idx, h0[idx] if prev is None else prev)
        if err is not None:
            failed.append(err)
        heads[head] = z
        prev = z if z is not None else None

    def run_line(head):
        vals, errs = [], []
        z = heads[head]
        vals.append(z)
        for k in range(1, counts[-1]):
            idx = head + (k,)
            z, err = solve(idx, h0[idx] if z is None else z)
            vals.append(z)
            if err is not None:
                errs.append(err)
        return vals, errs

    for head, (vals, errs) in zip(line_heads, pmap(run_line, line_heads)):
        for k, z in enumerate(vals):
            if z is not None:
                out[head + (k,)] = z
        failed.extend(errs)

    man = GridManifold(axes, out, eps=eps, method="ILDM", order=None)
    if failed:
        raise PartialResultError(f"ILDM failed at {len(failed)} node(s)", failed=failed, partial=man)
    return man
