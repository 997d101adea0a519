"""Functional iteration on the invariance equation.

A graph ``z = phi(y)`` is invariant when ``eps Dphi(y) f(y, phi, eps) = g(y, phi, eps)``.
Starting from the critical manifold, each step freezes ``Dphi`` at the
previous iterate and solves for the new one::

    eps Dphi_prev(y) f(y, z, eps) = g(y, z, eps)

For planar systems linear in ``z`` (``f = f1 z + f2``, ``g = g1 z + g2``) the
update is explicit.  The iterates are never driven to a fixed point; a run
performs exactly ``ell_max`` steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._parallel import pmap
from .asymptotics import DIFF_ORDER, solve_h0
from .core import FastSlowSystem, GridManifold, grid_derivative, grid_jacobian
from .errors import ConfigurationError, NonConvergenceError, PartialResultError, PoleError

__all__ = [
    "POLE_TOL",
    "IterationState",
    "invariance_defect",
    "fr_step_planar",
    "fr_step_general",
    "fr_run",
    "grid_spacing_for",
]

POLE_TOL = 1e-8


@dataclass
class IterationState:
    """Result of ``fr_run``.

    ``history[k]`` is the sup-norm change made by step ``k + 1`` and
    ``iterates[k]`` is ``phi^(k)`` (``iterates[0]`` is the start).
    """

    ell: int
    phi: GridManifold
    defect: np.ndarray
    history: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    eps: float = 0.0
    path: str = ""


def invariance_defect(sys: FastSlowSystem, man: GridManifold, eps: float,
                      diff_order: int = DIFF_ORDER) -> np.ndarray:
    """``eps Dh f - g`` at every node, shape ``(*counts, n)``."""
    D = grid_jacobian(man, order=diff_order).reshape(-1, sys.n, sys.m)
    nodes = man.nodes()
    vals = man.flat_values
    out = np.empty_like(vals)
    for i, (y, z) in enumerate(zip(nodes, vals)):
        out[i] = eps * (D[i] @ sys.eval_f(y, z, eps)) - sys.eval_g(y, z, eps)
    return out.reshape(man.shape + (sys.n,))


def _check_grid(sys, man):
    if man.m != sys.m or man.n != sys.n:
        raise ConfigurationError("manifold dimensions do not match the system")
    lo, hi = sys.domain
    for k, a in enumerate(man.axes):
        if a[0] < lo[k] - 1e-12 or a[-1] > hi[k] + 1e-12:
            raise ConfigurationError(f"grid axis {k} leaves the slow box")


def fr_step_planar(sys: FastSlowSystem, phi_prev: GridManifold, eps: float,
                   diff_order: int = DIFF_ORDER) -> GridManifold:
    """Explicit update ``(-g2 + eps f2 phi_y) / (g1 - eps f1 phi_y)``.

    Raises :class:`PoleError` listing the nodes where the denominator drops
    below ``POLE_TOL`` in magnitude.
    """
    lin = sys.linear_in_z
    if lin is None or sys.m != 1 or sys.n != 1:
        raise ConfigurationError("explicit iteration needs a planar system declared linear in z")
    _check_grid(sys, phi_prev)
    y = phi_prev.axes[0]
    dphi = grid_derivative(y, phi_prev.values[:, 0], 0, order=diff_order)
    den = lin.g1(y, eps) - eps * lin.f1(y, eps) * dphi
    num = -lin.g2(y, eps) + eps * lin.f2(y, eps) * dphi
    bad = np.flatnonzero(np.abs(den) < POLE_TOL)
    if bad.size:
        raise PoleError(f"denominator vanishes at {bad.size} node(s)", nodes=y[bad].tolist())
    return phi_prev.replace_values(num / den, eps=eps, method="fraser-roussel",
                                   order=(phi_prev.order or 0) + 1)


def _newton_node(sys, y, z0, Dphi, eps, tol, max_iter):
    z = np.array(z0, dtype=float)
    trace = []
    for _ in range(max_iter):
        G = eps * (Dphi @ sys.eval_f(y, z, eps)) - sys.eval_g(y, z, eps)
        res = float(np.max(np.abs(G)))
        trace.append(res)
        if res <= tol:
            return z
        A = eps * (Dphi @ sys.block("Dzf", y, z, eps)) - sys.block("Dzg", y, z, eps)
        try:
            z = z - np.linalg.solve(A, G)
        except np.linalg.LinAlgError:
            break
    G = eps * (Dphi @ sys.eval_f(y, z, eps)) - sys.eval_g(y, z, eps)
    res = float(np.max(np.abs(G)))
    trace.append(res)
    if res <= tol:
        return z
    raise NonConvergenceError(f"iteration Newton failed at y={y.tolist()} (residual {res:.3e})",
                              node=y.tolist(), trace=trace)


def fr_step_general(sys: FastSlowSystem, phi_prev: GridManifold, eps: float, tol: float = 1e-12,
                    max_iter: int = 50, diff_order: int = DIFF_ORDER) -> GridManifold:
    """Implicit update: per node, Newton on ``eps Dphi_prev f(y, z) - g(y, z) = 0``.

    Each node starts from ``phi_prev(y)``.  Failed nodes are collected into a
    :class:`PartialResultError` whose ``partial`` manifold has NaN there.
    """
    _check_grid(sys, phi_prev)
    D = grid_jacobian(phi_prev, order=diff_order).reshape(-1, sys.n, sys.m)
    nodes = phi_prev.nodes()
    start = phi_prev.flat_values

    def one(i):
        try:
            return _newton_node(sys, nodes[i], start[i], D[i], eps, tol, max_iter), None
        except (NonConvergenceError, ArithmeticError, ValueError) as exc:
            return None, (nodes[i].tolist(), f"{type(exc).__name__}: {exc}")

    results = pmap(one, range(len(nodes)))
    out = np.full_like(start, np.nan)
    failed = []
    for i, (z, err) in enumerate(results):
        if err is None:
            out[i] = z
        else:
            failed.append(err)
    man = phi_prev.replace_values(out, eps=eps, method="fraser-roussel", order=(phi_prev.order or 0) + 1)
    if failed:
        raise PartialResultError(f"iteration failed at {len(failed)} node(s)", failed=failed, partial=man)
    return man


def fr_run(sys: FastSlowSystem, phi0: Optional[GridManifold], ell_max: int, eps: float, axes=None,
           path: str = "auto", diff_order: int = DIFF_ORDER, tol: float = 1e-12) -> IterationState:
    """Run exactly ``ell_max`` iteration steps.

    ``phi0=None`` starts from the critical manifold on ``axes``.  ``path`` is
    ``"planar"``, ``"general"`` or ``"auto"`` (explicit whenever the system
    declares a planar linear-in-z split).
    """
    if ell_max < 0:
        raise ConfigurationError("ell_max must be >= 0")
    if phi0 is None:
        if axes is None:
            raise ConfigurationError("need phi0 or grid axes")
        phi0 = solve_h0(sys, axes)
    planar_ok = sys.linear_in_z is not None and sys.m == 1 and sys.n == 1
    if path == "auto":
        path = "planar" if planar_ok else "general"
    if path not in ("planar", "general"):
        raise ConfigurationError(f"unknown iteration path {path!r}")
    if path == "planar" and not planar_ok:
        raise ConfigurationError("planar path needs a planar linear-in-z system")
    phi = phi0.replace_values(phi0.values, order=0) if phi0.order is None else phi0
    iterates = [phi]
    history = []
    for _ in range(ell_max):
        if path == "planar":
            nxt = fr_step_planar(sys, phi, eps, diff_order)
        else:
            nxt = fr_step_general(sys, phi, eps, tol=tol, diff_order=diff_order)
        history.append(float(np.max(np.abs(nxt.values - phi.values))))
        phi = nxt
        iterates.append(phi)
    defect = invariance_defect(sys, phi, eps, diff_order)
    return IterationState(ell_max, phi, defect, history, iterates, eps, path)


def grid_spacing_for(eps: float, ell_max: int, diff_order: int = DIFF_ORDER, factor: float = 0.01) -> float:
    """Largest ``dy`` with ``dy**diff_order <= factor * eps**(ell_max + 1)``."""
    return (factor * eps ** (ell_max + 1)) ** (1.0 / diff_order)
