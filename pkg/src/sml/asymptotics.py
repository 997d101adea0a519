"""Expansion coefficients of the slow manifold and of the ILDM.

The slow manifold ``z = h(y, eps)`` of an attracting fast-slow system has an
expansion ``h0 + eps h1 + eps^2 h2 + ...`` whose coefficients solve linear
systems with matrix ``Dzg`` at ``(y, h0(y), 0)``::

    Dzg h1 = Dh0 f - g_eps
    Dzg h2 = Dh1 f + Dh0 (Dzf h1 + f_eps) - 1/2 Dzzg(h1, h1)
             - Dzg_eps h1 - 1/2 g_epseps

The ILDM agrees with it through ``h1``; its second coefficient is
``psi2 = h2 - Dzg^{-2} D2h0(f, f)``.

Grid derivatives of tabulated coefficients default to fourth-order stencils
(``DIFF_ORDER``); pass ``diff_order=2`` for the plain central scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import pmap
from .core import FastSlowSystem, GridManifold, grid_derivative, grid_jacobian
from .errors import (
    ConfigurationError,
    NonConvergenceError,
    NotAttractingError,
    SingularSystemError,
)

__all__ = [
    "DIFF_ORDER",
    "ExpansionCoefficients",
    "solve_h0",
    "solve_h1",
    "solve_h2",
    "psi_coefficients",
    "planar_psi_coefficients",
    "expansion",
    "second_derivative",
    "fast_box_from",
    "ensure_fast_box",
]

DIFF_ORDER = 4
_COND_MAX = 1e13


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Tabulated coefficients ``c0, c1, c2`` (kind ``"h"`` or ``"psi"``).

    ``discrepancy`` is ``psi2 - h2`` for ``kind="psi"`` and ``None`` otherwise.
    """

    kind: str
    coeffs: tuple
    eps0: float = 0.0
    discrepancy: Optional[GridManifold] = None

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def axes(self):
        return self.coeffs[0].axes

    def __getitem__(self, i):
        return self.coeffs[i]

    def truncation(self, eps: float, order: Optional[int] = None) -> GridManifold:
        """``sum_{i <= order} eps^i c_i`` as a grid manifold."""
        order = self.order if order is None else order
        if order > self.order:
            raise ConfigurationError(f"only coefficients through order {self.order} available")
        vals = sum(eps**i * self.coeffs[i].values for i in range(order + 1))
        return self.coeffs[0].replace_values(vals, eps=eps, method=f"{self.kind}-truncation", order=order)


def _guess(sys: FastSlowSystem, y):
    zg = sys.z_guess
    if zg is None:
        return np.zeros(sys.n)
    if callable(zg):
        return np.atleast_1d(np.asarray(zg(y if sys.m > 1 else y[0]), dtype=float)).reshape(sys.n)
    return np.asarray(zg, dtype=float).reshape(sys.n)


def _solve(A, rhs, node):
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > _COND_MAX:
        raise SingularSystemError(f"Dzg is singular (cond={cond:.3g}) at y={np.asarray(node).tolist()}")
    return np.linalg.solve(A, rhs)


def _newton_h0(sys, y, z0, tol, max_iter):
    z = np.array(z0, dtype=float)
    trace = []
    for _ in range(max_iter):
        gv = sys.eval_g(y, z, 0.0)
        res = float(np.max(np.abs(gv)))
        trace.append(res)
        if res <= tol:
            return z, trace
        A = sys.block("Dzg", y, z, 0.0)
        z = z - _solve(A, gv, y)
    gv = sys.eval_g(y, z, 0.0)
    res = float(np.max(np.abs(gv)))
    trace.append(res)
    if res <= tol:
        return z, trace
    raise NonConvergenceError(
        f"critical-manifold Newton stalled at y={y.tolist()} (residual {res:.3e})", node=y.tolist(), trace=trace
    )


def solve_h0(sys: FastSlowSystem, axes, tol: float = 1e-12, max_iter: int = 50,
             check_stability: bool = True) -> GridManifold:
    """Critical manifold ``g(y, h0(y), 0) = 0`` tabulated on ``axes``.

    Nodes are visited in lexicographic order; each Newton solve is warm
    started from the previous node (the first from ``sys.z_guess``).

    Raises
    ------
    NonConvergenceError
        Newton did not reach ``tol`` at some node (``err.node``).
    NotAttractingError
        ``Dzg`` has an eigenvalue with nonnegative real part at a solution.
    """
    if isinstance(axes, GridManifold):
        axes = axes.axes
    axes = tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in axes)
    if len(axes) != sys.m:
        raise ConfigurationError(f"need {sys.m} grid axes, got {len(axes)}")
    lo, hi = sys.domain
    for k, a in enumerate(axes):
        if a[0] < lo[k] - 1e-12 or a[-1] > hi[k] + 1e-12:
            raise ConfigurationError(f"grid axis {k} leaves the slow box [{lo[k]}, {hi[k]}]")
    nodes = GridManifold(axes, np.zeros(tuple(a.size for a in axes) + (sys.n,))).nodes()
    out = np.empty((len(nodes), sys.n))
    z = None
    for i, y in enumerate(nodes):
        start = _guess(sys, y) if z is None else z
        z, _ = _newton_h0(sys, y, start, tol, max_iter)
        if check_stability:
            ev = np.linalg.eigvals(sys.block("Dzg", y, z, 0.0))
            if np.any(ev.real >= 0):
                raise NotAttractingError(
                    f"critical manifold not attracting at y={y.tolist()}: eig(Dzg)={ev.tolist()}"
                )
        out[i] = z
    return GridManifold.from_flat(axes, out, eps=0.0, method="h0", order=0)


def fast_box_from(h0man: GridManifold):
    """Fast-variable box ``[min - 1, max + 1]`` of the tabulated critical manifold."""
    vals = h0man.flat_values
    return tuple(vals.min(axis=0) - 1.0), tuple(vals.max(axis=0) + 1.0)


def ensure_fast_box(sys: FastSlowSystem, h0man: GridManifold) -> FastSlowSystem:
    if sys.fast_box is not None:
        return sys
    return sys.with_fast_box(*fast_box_from(h0man))


def second_derivative(man: GridManifold, diff_order: int = DIFF_ORDER) -> np.ndarray:
    """Nested grid second derivative, shape ``(*counts, n, m, m)``."""
    D = grid_jacobian(man, order=diff_order)
    parts = [grid_derivative(a, D, axis=k, order=diff_order) for k, a in enumerate(man.axes)]
    D2 = np.stack(parts, axis=-1)
    # symmetrize mixed partials
    return 0.5 * (D2 + np.swapaxes(D2, -1, -2))


def _node_data(sys, h0man, which):
    nodes = h0man.nodes()
    vals = h0man.flat_values

    def one(i):
        y, z = nodes[i], vals[i]
        blocks = {w: sys.block(w, y, z, 0.0) for w in which}
        return sys.eval_f(y, z, 0.0), blocks

    return nodes, pmap(one, range(len(nodes)))


def solve_h1(sys: FastSlowSystem, h0man: GridManifold, diff_order: int = DIFF_ORDER) -> GridManifold:
    """First-order coefficient from ``Dzg h1 = Dh0 f - g_eps`` at every node."""
    Dh0 = grid_jacobian(h0man, order=diff_order).reshape(-1, sys.n, sys.m)
    nodes, data = _node_data(sys, h0man, ("Dzg", "geps"))
    out = np.empty((len(nodes), sys.n))
    for i, (f, blk) in enumerate(data):
        out[i] = _solve(blk["Dzg"], Dh0[i] @ f - blk["geps"], nodes[i])
    return h0man.replace_values(out, method="h1", order=1)


def solve_h2(sys: FastSlowSystem, h0man: GridManifold, h1man: GridManifold,
             diff_order: int = DIFF_ORDER) -> GridManifold:
    """Second-order coefficient of the slow-manifold expansion."""
    which = ("Dzg", "Dzf", "feps", "Dzzg", "Dzgeps", "gepseps")
    Dh0 = grid_jacobian(h0man, order=diff_order).reshape(-1, sys.n, sys.m)
    Dh1 = grid_jacobian(h1man, order=diff_order).reshape(-1, sys.n, sys.m)
    h1 = h1man.flat_values
    nodes, data = _node_data(sys, h0man, which)
    out = np.empty((len(nodes), sys.n))
    for i, (f, blk) in enumerate(data):
        u = h1[i]
        rhs = (
            Dh1[i] @ f
            + Dh0[i] @ (blk["Dzf"] @ u + blk["feps"])
            - 0.5 * np.einsum("ijk,j,k->i", blk["Dzzg"], u, u)
            - blk["Dzgeps"] @ u
            - 0.5 * blk["gepseps"]
        )
        out[i] = _solve(blk["Dzg"], rhs, nodes[i])
    return h0man.replace_values(out, method="h2", order=2)


def psi_coefficients(sys: FastSlowSystem, h0man: GridManifold, h1man: GridManifold,
                     h2man: GridManifold, diff_order: int = DIFF_ORDER) -> ExpansionCoefficients:
    """ILDM coefficients ``psi0 = h0``, ``psi1 = h1``, ``psi2 = h2 - Dzg^{-2} D2h0(f, f)``.

    The returned ``discrepancy`` is ``psi2 - h2`` per node.
    """
    if min(h0man.shape) < 5:
        raise ConfigurationError("second derivatives of h0 need at least 5 nodes per axis")
    D2 = second_derivative(h0man, diff_order).reshape(-1, sys.n, sys.m, sys.m)
    nodes, data = _node_data(sys, h0man, ("Dzg",))
    disc = np.empty((len(nodes), sys.n))
    for i, (f, blk) in enumerate(data):
        curv = np.einsum("ijk,j,k->i", D2[i], f, f)
        A = blk["Dzg"]
        disc[i] = -_solve(A, _solve(A, curv, nodes[i]), nodes[i])
    psi2 = h2man.replace_values(h2man.flat_values + disc, method="psi2", order=2)
    dman = h2man.replace_values(disc, method="psi2-h2", order=2)
    return ExpansionCoefficients("psi", (h0man, h1man, psi2), 0.0, dman)


def planar_psi_coefficients(sys: FastSlowSystem, h0man: GridManifold,
                            diff_order: int = DIFF_ORDER) -> ExpansionCoefficients:
    """Scalar ILDM coefficients for ``m = n = 1``, written out term by term.

    ``g_z psi1 = f h0' - g_eps`` and
    ``g_z psi2 = f psi1' - f^2 h0''/g_z + (f_z psi1 + f_eps) h0' - 1/2 g_zz psi1^2 - g_zeps psi1 - 1/2 g_epseps``.
    """
    if sys.m != 1 or sys.n != 1:
        raise ConfigurationError("planar formulas need m = n = 1")
    y = h0man.axes[0]
    h0 = h0man.values[:, 0]
    d1 = grid_derivative(y, h0, 0, order=diff_order)
    d2 = grid_derivative(y, d1, 0, order=diff_order)
    cols = {w: np.empty(y.size) for w in ("f", "gz", "fz", "fe", "ge", "gzz", "gze", "gee")}
    for i in range(y.size):
        yy, zz = np.array([y[i]]), np.array([h0[i]])
        cols["f"][i] = sys.eval_f(yy, zz, 0.0)[0]
        cols["gz"][i] = sys.block("Dzg", yy, zz, 0.0)[0, 0]
        cols["fz"][i] = sys.block("Dzf", yy, zz, 0.0)[0, 0]
        cols["fe"][i] = sys.block("feps", yy, zz, 0.0)[0]
        cols["ge"][i] = sys.block("geps", yy, zz, 0.0)[0]
        cols["gzz"][i] = sys.block("Dzzg", yy, zz, 0.0)[0, 0, 0]
        cols["gze"][i] = sys.block("Dzgeps", yy, zz, 0.0)[0, 0]
        cols["gee"][i] = sys.block("gepseps", yy, zz, 0.0)[0]
    c = cols
    if np.any(np.abs(c["gz"]) < 1.0 / _COND_MAX):
        raise SingularSystemError("g_z vanishes on the critical manifold")
    psi1 = (c["f"] * d1 - c["ge"]) / c["gz"]
    p1 = grid_derivative(y, psi1, 0, order=diff_order)
    psi2 = (
        c["f"] * p1
        - c["f"] ** 2 * d2 / c["gz"]
        + (c["fz"] * psi1 + c["fe"]) * d1
        - 0.5 * c["gzz"] * psi1**2
        - c["gze"] * psi1
        - 0.5 * c["gee"]
    ) / c["gz"]
    disc = -(c["f"] ** 2) * d2 / c["gz"] ** 2
    m1 = h0man.replace_values(psi1, method="psi1", order=1)
    m2 = h0man.replace_values(psi2, method="psi2", order=2)
    return ExpansionCoefficients("psi", (h0man, m1, m2), 0.0, h0man.replace_values(disc, method="psi2-h2", order=2))


def expansion(sys: FastSlowSystem, axes, kind: str = "h", diff_order: int = DIFF_ORDER,
              h0man: Optional[GridManifold] = None) -> ExpansionCoefficients:
    """All coefficients through order two for ``kind`` ``"h"`` or ``"psi"``."""
    if kind not in ("h", "psi"):
        raise ConfigurationError(f"kind must be 'h' or 'psi', got {kind!r}")
    h0 = solve_h0(sys, axes) if h0man is None else h0man
    h1 = solve_h1(sys, h0, diff_order)
    h2 = solve_h2(sys, h0, h1, diff_order)
    if kind == "h":
        return ExpansionCoefficients("h", (h0, h1, h2))
    return psi_coefficients(sys, h0, h1, h2, diff_order)
