"""Fast-slow systems, evaluation bundles and tabulated graph manifolds.

A fast-slow system in fast time ``t`` reads::

    y' = eps * f(y, z, eps)      (m slow variables)
    z' = g(y, z, eps)            (n fast variables)

Everything downstream works with :class:`FastSlowSystem` for the vector
fields and with :class:`GridManifold` for graphs ``z = h(y)`` tabulated on
tensor-product grids over the slow box ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, EvaluatorError

__all__ = [
    "BLOCK_IDS",
    "FD_STEP",
    "FD2_STEP",
    "LinearInZ",
    "FastSlowSystem",
    "GridManifold",
    "EvalBundle",
    "eval_derivative_block",
    "make_bundle",
    "interpolate",
    "grid_gradient",
    "grid_jacobian",
    "grid_derivative",
    "uniform_axes",
    "check_derivatives",
]

FD_STEP = 1e-5
FD2_STEP = 1e-3
_BOX_TOL = 1e-12

# block id -> (shape spec, parent first-derivative block for nested FD)
BLOCK_IDS = {
    "Dyf": ("mm", None),
    "Dzf": ("mn", None),
    "Dyg": ("nm", None),
    "Dzg": ("nn", None),
    "feps": ("m", None),
    "geps": ("n", None),
    "Dzzg": ("nnn", "Dzg"),
    "Dzgeps": ("nn", "Dzg"),
    "gepseps": ("n", "geps"),
    "Dzfeps": ("mn", "Dzf"),
    "fepseps": ("m", "feps"),
}


@dataclass(frozen=True)
class LinearInZ:
    """Decomposition ``f = f1 z + f2``, ``g = g1 z + g2`` for planar systems.

    Each callable takes ``(y, eps)`` and must broadcast over an array of
    scalar ``y`` values.
    """

    f1: Callable
    f2: Callable
    g1: Callable
    g2: Callable


@dataclass(frozen=True)
class FastSlowSystem:
    """Vector fields ``f`` (slow) and ``g`` (fast) plus optional derivatives.

    Parameters
    ----------
    m, n
        Number of slow and fast variables.
    f, g
        Callables ``(y, z, eps) -> ndarray`` of length ``m`` and ``n``.
    lo, hi
        Corners of the slow box ``K``.
    derivatives
        Optional analytic evaluators keyed by block id (see ``BLOCK_IDS``).
        Anything missing is replaced by central finite differences.
    fast_box
        Optional ``(lo, hi)`` bounds for ``z``; ``None`` disables the check.
    eps_max
        Largest admissible ``eps``.
    linear_in_z
        Declared linear-in-z decomposition (enables the explicit planar
        iteration).
    z_guess
        Initial guess for the critical-manifold solve: array or callable of y.
    """

    m: int
    n: int
    f: Callable
    g: Callable
    lo: tuple
    hi: tuple
    derivatives: Mapping[str, Callable] = field(default_factory=dict)
    fast_box: Optional[tuple] = None
    eps_max: float = np.inf
    linear_in_z: Optional[LinearInZ] = None
    z_guess: object = None
    name: str = "custom"
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigurationError("m and n must be >= 1")
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != self.m or len(hi) != self.m:
            raise ConfigurationError("domain corners must have length m")
        if any(a > b for a, b in zip(lo, hi)):
            raise ConfigurationError("domain lower corner exceeds upper corner")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        unknown = set(self.derivatives) - set(BLOCK_IDS)
        if unknown:
            raise ConfigurationError(f"unknown derivative blocks: {sorted(unknown)}")
        if self.fast_box is not None:
            zlo, zhi = (tuple(float(v) for v in np.atleast_1d(b)) for b in self.fast_box)
            if len(zlo) != self.n or len(zhi) != self.n:
                raise ConfigurationError("fast box corners must have length n")
            object.__setattr__(self, "fast_box", (zlo, zhi))

    @property
    def domain(self):
        return np.array(self.lo), np.array(self.hi)

    def with_fast_box(self, lo, hi) -> "FastSlowSystem":
        return replace(self, fast_box=(lo, hi))

    def check_point(self, y, z, eps):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if y.shape != (self.m,) or z.shape != (self.n,):
            raise DomainError(f"expected y of shape ({self.m},) and z of shape ({self.n},)")
        lo, hi = self.domain
        scale = _BOX_TOL * np.maximum(1.0, np.abs(hi - lo))
        if np.any(y < lo - scale) or np.any(y > hi + scale):
            raise DomainError(f"y={y.tolist()} outside slow box [{self.lo}, {self.hi}]")
        if self.fast_box is not None:
            zlo, zhi = (np.array(b) for b in self.fast_box)
            if np.any(z < zlo) or np.any(z > zhi):
                raise DomainError(f"z={z.tolist()} outside fast box {self.fast_box}")
        if not (0.0 <= eps <= self.eps_max):
            raise DomainError(f"eps={eps} outside [0, {self.eps_max}]")
        return y, z

    def eval_f(self, y, z, eps):
        return _checked(self.f(y, z, eps), (self.m,), "f", (y, z, eps))

    def eval_g(self, y, z, eps):
        return _checked(self.g(y, z, eps), (self.n,), "g", (y, z, eps))

    def block(self, which, y, z, eps):
        """Derivative block without the domain check (used internally)."""
        if which not in BLOCK_IDS:
            raise ConfigurationError(f"unknown block id {which!r}")
        shape = _block_shape(self, which)
        if which in self.derivatives:
            return _checked(self.derivatives[which](y, z, eps), shape, which, (y, z, eps))
        return _checked(_fd_block(self, which, y, z, eps), shape, which, (y, z, eps))

    def fd_block(self, which, y, z, eps, step=FD_STEP, step2=FD2_STEP):
        """Finite-difference block, ignoring any analytic evaluator for ``which``."""
        shape = _block_shape(self, which)
        return _checked(_fd_block(self, which, y, z, eps, step, step2), shape, which, (y, z, eps))


def _block_shape(sys, which):
    dims = {"m": sys.m, "n": sys.n}
    return tuple(dims[c] for c in BLOCK_IDS[which][0])


def _checked(value, shape, label, point):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        y, z, eps = point
        raise EvaluatorError(
            f"{label} returned non-finite values at y={np.asarray(y).tolist()}, "
            f"z={np.asarray(z).tolist()}, eps={eps}",
            point=point,
        )
    return arr


def _step(x, base):
    return base * max(1.0, abs(float(x)))


def _fd_block(sys, which, y, z, eps, h1=FD_STEP, h2=FD2_STEP):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    f = lambda yy, zz, ee: np.asarray(sys.f(yy, zz, ee), dtype=float)  # noqa: E731
    g = lambda yy, zz, ee: np.asarray(sys.g(yy, zz, ee), dtype=float)  # noqa: E731
    parent = BLOCK_IDS[which][1]

    if which in ("Dyf", "Dyg", "Dzf", "Dzg"):
        fun = f if which.endswith("f") else g
        wrt_y = which[1] == "y"
        x0 = y if wrt_y else z
        cols = []
        for j in range(x0.size):
            h = _step(x0[j], h1)
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            if wrt_y:
                cols.append((fun(xp, z, eps) - fun(xm, z, eps)) / (2 * h))
            else:
                cols.append((fun(y, xp, eps) - fun(y, xm, eps)) / (2 * h))
        return np.column_stack(cols)

    if which in ("feps", "geps"):
        fun = f if which == "feps" else g
        h = _step(eps, h1)
        return (fun(y, z, eps + h) - fun(y, z, eps - h)) / (2 * h)

    # second-order blocks: difference the parent block if it is analytic,
    # otherwise use the nested central stencil on f/g
    if parent in sys.derivatives and which not in sys.derivatives:
        dparent = lambda yy, zz, ee: np.asarray(sys.derivatives[parent](yy, zz, ee), dtype=float)  # noqa: E731
        if which == "Dzzg":
            out = np.empty((sys.n, sys.n, sys.n))
            for k in range(sys.n):
                h = _step(z[k], h1)
                zp, zm = z.copy(), z.copy()
                zp[k] += h
                zm[k] -= h
                out[:, :, k] = (dparent(y, zp, eps) - dparent(y, zm, eps)) / (2 * h)
            return out
        h = _step(eps, h1)
        return (dparent(y, z, eps + h) - dparent(y, z, eps - h)) / (2 * h)

    fun = f if which in ("Dzfeps", "fepseps") else g
    if which == "Dzzg":
        out = np.empty((sys.n, sys.n, sys.n))
        for j in range(sys.n):
            for k in range(j, sys.n):
                hj = _step(z[j], h2)
                hk = _step(z[k], h2)
                acc = 0.0
                for sj, sk, w in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                    zz = z.copy()
                    zz[j] += sj * hj
                    zz[k] += sk * hk
                    acc = acc + w * g(y, zz, eps)
                out[:, j, k] = out[:, k, j] = acc / (4 * hj * hk)
        return out
    if which in ("Dzgeps", "Dzfeps"):
        he = _step(eps, h2)
        cols = []
        for j in range(z.size):
            hj = _step(z[j], h2)
            acc = 0.0
            for sj, se, w in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                zz = z.copy()
                zz[j] += sj * hj
                acc = acc + w * fun(y, zz, eps + se * he)
            cols.append(acc / (4 * hj * he))
        return np.column_stack(cols)
    # gepseps / fepseps
    he = _step(eps, h2)
    return (fun(y, z, eps + 2 * he) - 2 * fun(y, z, eps) + fun(y, z, eps - 2 * he)) / (4 * he * he)


def eval_derivative_block(sys: FastSlowSystem, which: str, y, z, eps: float) -> np.ndarray:
    """Evaluate one derivative block at ``(y, z, eps)``.

    Returns the analytic block when the system supplies one, otherwise a
    central finite-difference approximation. Raises :class:`DomainError` if
    the point is outside the declared box and :class:`EvaluatorError` if an
    evaluator produces NaN/Inf.
    """
    y, z = sys.check_point(y, z, eps)
    return sys.block(which, y, z, eps)


@dataclass
class EvalBundle:
    """f, g and requested derivative blocks cached at one point."""

    y: np.ndarray
    z: np.ndarray
    eps: float
    f: np.ndarray
    g: np.ndarray
    blocks: dict

    def __getitem__(self, which):
        return self.blocks[which]


def make_bundle(sys: FastSlowSystem, y, z, eps, which: Sequence[str] = (), check: bool = True) -> EvalBundle:
    if check:
        y, z = sys.check_point(y, z, eps)
    else:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
    blocks = {w: sys.block(w, y, z, eps) for w in which}
    return EvalBundle(y, z, float(eps), sys.eval_f(y, z, eps), sys.eval_g(y, z, eps), blocks)


def check_derivatives(sys: FastSlowSystem, samples: int = 100, step: float = 1e-4, z_box=None,
                      eps_range=(0.0, 0.5), seed: int = 0) -> dict:
    """Max relative deviation of each analytic first-derivative block from FD.

    The reference is a central difference with the given ``step`` (relative to
    ``max(1, |coordinate|)``); the deviation is normalised by
    ``max(1, max|analytic|)``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = sys.domain
    if z_box is None:
        z_box = sys.fast_box if sys.fast_box is not None else (np.zeros(sys.n), np.ones(sys.n))
    zlo, zhi = (np.asarray(b, dtype=float) for b in z_box)
    worst = {}
    for _ in range(samples):
        y = lo + (hi - lo) * rng.random(sys.m)
        z = zlo + (zhi - zlo) * rng.random(sys.n)
        eps = eps_range[0] + (eps_range[1] - eps_range[0]) * rng.random()
        for which, fun in sys.derivatives.items():
            analytic = np.asarray(fun(y, z, eps), dtype=float).reshape(_block_shape(sys, which))
            fd = sys.fd_block(which, y, z, eps, step=step, step2=step)
            dev = np.max(np.abs(analytic - fd)) / max(1.0, np.max(np.abs(analytic)))
            worst[which] = max(worst.get(which, 0.0), float(dev))
    return worst


# ---------------------------------------------------------------------------
# tabulated manifolds


def uniform_axes(lo, hi, counts) -> tuple:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    counts = np.broadcast_to(np.atleast_1d(counts), lo.shape)
    return tuple(np.linspace(a, b, int(c)) for a, b, c in zip(lo, hi, counts))


@dataclass(frozen=True, eq=False)
class GridManifold:
    """Graph ``z = h(y)`` tabulated on a tensor-product grid.

    ``values`` has shape ``(*counts, n)``; nodes are ordered lexicographically
    (C order) when flattened. Instances are immutable.
    """

    axes: tuple
    values: np.ndarray
    eps: Optional[float] = None
    method: str = ""
    order: Optional[int] = None

    def __post_init__(self):
        axes = tuple(np.array(a, dtype=float).reshape(-1) for a in self.axes)
        for a in axes:
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise ConfigurationError("grid axes must be strictly increasing")
            a.setflags(write=False)
        counts = tuple(a.size for a in axes)
        vals = np.array(self.values, dtype=float)
        if vals.shape[: len(counts)] != counts:
            vals = vals.reshape(counts + (-1,))
        if vals.ndim != len(counts) + 1:
            raise ConfigurationError("values must have shape (*counts, n)")
        vals.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_flat(cls, axes, flat, **meta) -> "GridManifold":
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        counts = tuple(a.size for a in axes)
        flat = np.asarray(flat, dtype=float)
        return cls(axes, flat.reshape(counts + (-1,)), **meta)

    @classmethod
    def tabulate(cls, axes, func, **meta) -> "GridManifold":
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        nodes = _nodes(axes)
        flat = np.array([np.atleast_1d(func(y)) for y in nodes], dtype=float)
        return cls.from_flat(axes, flat, **meta)

    @property
    def m(self):
        return len(self.axes)

    @property
    def n(self):
        return self.values.shape[-1]

    @property
    def shape(self):
        return tuple(a.size for a in self.axes)

    def nodes(self) -> np.ndarray:
        return _nodes(self.axes)

    @property
    def flat_values(self) -> np.ndarray:
        return self.values.reshape(-1, self.n)

    def replace_values(self, values, **meta) -> "GridManifold":
        kw = dict(eps=self.eps, method=self.method, order=self.order)
        kw.update(meta)
        return GridManifold(self.axes, np.asarray(values).reshape(self.shape + (-1,)), **kw)

    def node_index(self, y) -> tuple:
        """Multi-index of the node at ``y``; raises if ``y`` is not a node."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        idx = []
        for a, v in zip(self.axes, y):
            scale = max(1.0, float(np.max(np.abs(a))))
            hits = np.flatnonzero(np.abs(a - v) <= 1e-12 * scale)
            if hits.size == 0:
                raise DomainError(f"y={y.tolist()} is not a grid node")
            idx.append(int(hits[0]))
        return tuple(idx)


def _nodes(axes) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=-1)


def interpolate(man: GridManifold, y) -> np.ndarray:
    """Multilinear interpolation of ``man`` at ``y``; exact at nodes."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (man.m,):
        raise DomainError(f"expected y of shape ({man.m},)")
    lower = []
    weights = []
    for a, v in zip(man.axes, y):
        if v < a[0] or v > a[-1]:
            raise DomainError(f"y={y.tolist()} outside tabulated box")
        if a.size == 1:
            lower.append(0)
            weights.append(None)
            continue
        i = int(np.searchsorted(a, v, side="right")) - 1
        i = min(max(i, 0), a.size - 2)
        t = (v - a[i]) / (a[i + 1] - a[i])
        lower.append(i)
        weights.append(t)
    out = np.zeros(man.n)
    corners = [(0,) if w is None else (0, 1) for w in weights]
    for corner in np.ndindex(*[len(c) for c in corners]):
        w = 1.0
        idx = []
        for k, c in enumerate(corner):
            t = weights[k]
            if t is not None:
                w *= t if c else 1.0 - t
            idx.append(lower[k] + c)
        if w != 0.0:
            out = out + w * man.values[tuple(idx)]
    return out


def _fornberg(x0, xs, k):
    """Finite-difference weights for the k-th derivative at ``x0`` on nodes ``xs``."""
    n = len(xs)
    c = np.zeros((n, k + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, k)
        c2, c5 = 1.0, c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, k]


def grid_derivative(axis_nodes, values, axis: int, order: int = 2) -> np.ndarray:
    """First derivative of tabulated ``values`` along ``axis``.

    ``order=2`` is central in the interior and one-sided second order at the
    ends (``numpy.gradient`` with ``edge_order=2``). ``order=4`` uses
    five-point stencils, shifted inwards near the boundary.
    """
    x = np.asarray(axis_nodes, dtype=float)
    need = 3 if order == 2 else order + 1
    if x.size < need:
        raise ConfigurationError(f"grid too coarse: {x.size} nodes on an axis, need >= {need}")
    if order == 2:
        return np.gradient(values, x, axis=axis, edge_order=2)
    if order % 2 or order < 2:
        raise ConfigurationError("differentiation order must be an even integer")
    width = order + 1
    starts = np.clip(np.arange(x.size) - order // 2, 0, x.size - width)
    idx = starts[:, None] + np.arange(width)[None, :]
    w = np.array([_fornberg(x[i], x[idx[i]], 1) for i in range(x.size)])
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    taken = v[idx]  # (count, width, ...)
    wshape = w.shape + (1,) * (v.ndim - 1)
    out = np.sum(taken * w.reshape(wshape), axis=1)
    return np.moveaxis(out, 0, axis)


def grid_jacobian(man: GridManifold, order: int = 2) -> np.ndarray:
    """Jacobian of the tabulated map at every node, shape ``(*counts, n, m)``."""
    parts = [grid_derivative(a, man.values, axis=k, order=order) for k, a in enumerate(man.axes)]
    return np.stack(parts, axis=-1)


def grid_gradient(man: GridManifold, y, order: int = 2) -> np.ndarray:
    """``n x m`` Jacobian of the tabulated map at the grid node ``y``."""
    idx = man.node_index(y)
    out = np.empty((man.n, man.m))
    for k, a in enumerate(man.axes):
        out[:, k] = grid_derivative(a, man.values, axis=k, order=order)[idx]
    return out
