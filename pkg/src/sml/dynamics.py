"""Trajectories, attraction to manifolds, and empirical convergence orders.

Integration is classical RK4 in fast time ``t`` (``y' = eps f``, ``z' = g``);
slow time is ``tau = eps t``.  The default step ``dt = 0.1`` in fast time is
``eps / 10`` in slow time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from ._parallel import pmap
from .core import FastSlowSystem, GridManifold, interpolate
from .errors import ConfigurationError, DomainError, DomainExitError, FitError, TooFastToFitError

__all__ = [
    "STABILITY_LIMIT",
    "Trajectory",
    "ConvergenceReport",
    "AttractionResult",
    "integrate",
    "self_convergence",
    "attraction_rate",
    "fit_order",
    "integrate_reduced",
]

DEFAULT_DT = 0.1
# RK4 stays stable on the negative real axis up to |lambda| dt ~ 2.78
STABILITY_LIMIT = 2.5


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    dt: float
    eps: float
    m: int
    integrator: str = "rk4"

    @property
    def tau(self):
        return self.eps * self.t

    @property
    def y(self):
        return self.states[:, : self.m]

    @property
    def z(self):
        return self.states[:, self.m :]

    @property
    def final(self):
        return self.states[-1]


def _rhs(sys, eps):
    m = sys.m

    def F(x):
        y, z = x[:m], x[m:]
        return np.concatenate([eps * sys.eval_f(y, z, eps), sys.eval_g(y, z, eps)])

    return F


def _fast_spectral_radius(sys, y, z, eps):
    J = np.block([
        [eps * sys.block("Dyf", y, z, eps), eps * sys.block("Dzf", y, z, eps)],
        [sys.block("Dyg", y, z, eps), sys.block("Dzg", y, z, eps)],
    ])
    return float(np.max(np.abs(np.linalg.eigvals(J))))


def integrate(sys: FastSlowSystem, y0, z0, eps: float, t_end: float, dt: float = DEFAULT_DT,
              check_stability: bool = True) -> Trajectory:
    """RK4 on the fast-time system from ``(y0, z0)`` to ``t_end``.

    The step is shrunk to ``t_end / ceil(t_end / dt)`` so the last sample
    lands on ``t_end``.  With ``check_stability`` the step must satisfy
    ``dt * rho(J) <= STABILITY_LIMIT`` at the initial point.

    Raises
    ------
    DomainExitError
        The state left the slow or fast box; ``err.time`` is the exit time
        and ``err.trajectory`` the samples up to it.
    """
    if eps < 0 or t_end <= 0 or dt <= 0:
        raise ConfigurationError("need eps >= 0, t_end > 0 and dt > 0")
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    sys.check_point(y0, z0, eps)
    steps = int(math.ceil(t_end / dt - 1e-12))
    h = t_end / steps
    if check_stability:
        rho = _fast_spectral_radius(sys, y0, z0, eps)
        if h * rho > STABILITY_LIMIT:
            raise ConfigurationError(
                f"dt={h:.3g} violates the explicit stability bound dt*rho={h * rho:.3g} > {STABILITY_LIMIT}"
            )
    F = _rhs(sys, eps)
    m = sys.m
    x = np.concatenate([y0, z0])
    out = np.empty((steps + 1, x.size))
    out[0] = x
    t = np.linspace(0.0, t_end, steps + 1)
    for k in range(steps):
        k1 = F(x)
        k2 = F(x + 0.5 * h * k1)
        k3 = F(x + 0.5 * h * k2)
        k4 = F(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        try:
            sys.check_point(x[:m], x[m:], eps)
        except DomainError as exc:
            part = Trajectory(t[: k + 1].copy(), out[: k + 1].copy(), h, eps, m)
            raise DomainExitError(f"trajectory left the evaluation box at t={t[k + 1]:.6g}: {exc}",
                                  time=float(t[k + 1]), trajectory=part) from exc
        out[k + 1] = x
    return Trajectory(t, out, h, eps, m)


def self_convergence(sys: FastSlowSystem, y0, z0, eps: float, t_end: float, dt: float = DEFAULT_DT):
    """Step-halving ratio ``|x_h - x_{h/2}| / |x_{h/2} - x_{h/4}|`` and its log2."""
    finals = [integrate(sys, y0, z0, eps, t_end, dt / 2**k).final for k in range(3)]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    ratio = e1 / e2
    return float(ratio), float(math.log2(ratio))


# ---------------------------------------------------------------------------
# attraction


class AttractionResult(NamedTuple):
    rate: float
    on_manifold: bool
    rates: tuple
    max_distance: float


def _graph(man) -> Callable:
    if isinstance(man, GridManifold):
        return lambda y: interpolate(man, y)
    return lambda y: np.atleast_1d(np.asarray(man(y), dtype=float))


def _one_rate(sys, h, y0, offset, eps, dt, window, on_tol):
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    z0 = h(y0) + offset
    d0 = float(np.max(np.abs(z0 - h(y0))))
    J = sys.block("Dzg", y0, z0, eps)
    slowest = float(np.min(np.abs(np.linalg.eigvals(J).real)))
    if slowest == 0:
        raise ConfigurationError("Dzg has a zero eigenvalue; no attraction to measure")
    if d0 <= on_tol:
        # nothing to fit; follow the manifold over one slow time unit
        t_end = 1.0 / eps if eps > 0 else 10.0 / slowest
        tr = integrate(sys, y0, z0, eps, t_end, dt)
        dist = max(float(np.max(np.abs(z - h(y)))) for y, z in zip(tr.y, tr.z))
        return 0.0, True, dist
    t_end = (math.log(1.0 / window) + 2.0) / slowest
    tr = integrate(sys, y0, z0, eps, t_end, min(dt, t_end / 10))
    dist = np.array([float(np.max(np.abs(z - h(y)))) for y, z in zip(tr.y, tr.z)])
    keep = dist > max(1e-12, window * d0)
    # stop at the first sample below the window
    stop = int(np.argmin(keep)) if not keep.all() else keep.size
    if stop < 5:
        raise TooFastToFitError(f"distance fell below the fit window after {stop} samples")
    slope = np.polyfit(tr.t[:stop], np.log(dist[:stop]), 1)[0]
    rate = -slope / eps if eps > 0 else -slope
    return float(rate), False, float(dist.max())


def attraction_rate(sys: FastSlowSystem, man: Union[GridManifold, Callable], eps: float,
                    initials: Optional[Sequence] = None, offset: float = 0.1, dt: float = DEFAULT_DT,
                    window: float = 1e-3, on_tol: float = 1e-8) -> AttractionResult:
    """Exponential relaxation rate towards ``man``, in slow time.

    Each initial point is ``(y0, h(y0) + offset)``.  The graph distance
    ``|z - h(y)|`` is fitted by a line in ``log`` over the transient, until it
    first drops below ``window`` times its start.  The fast-time decay rate is
    divided by ``eps``, so an attracting direction with ``Dzg = -k`` gives
    about ``k / eps``.  With ``offset = 0`` the result is ``rate = 0`` and
    ``on_manifold = True``; ``max_distance`` then reports the drift.
    """
    if initials is None:
        lo, hi = sys.domain
        initials = [0.5 * (lo + hi)]
    h = _graph(man)
    off = np.broadcast_to(np.asarray(offset, dtype=float), (sys.n,))
    res = pmap(lambda y0: _one_rate(sys, h, y0, off, eps, dt, window, on_tol), list(initials))
    rates = tuple(r[0] for r in res)
    on = all(r[1] for r in res)
    return AttractionResult(float(np.mean(rates)), on, rates, max(r[2] for r in res))


# ---------------------------------------------------------------------------
# order fits


@dataclass(frozen=True)
class ConvergenceReport:
    eps: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    residual: float
    floored: tuple = field(default_factory=tuple)

    @property
    def prefactor(self):
        return math.exp(self.intercept)

    def as_dict(self):
        return {
            "eps": [float(e) for e in self.eps],
            "errors": [float(e) for e in self.errors],
            "slope": self.slope,
            "intercept": self.intercept,
            "prefactor": self.prefactor,
            "residual": self.residual,
            "floored": list(self.floored),
        }


def fit_order(eps, errors=None) -> ConvergenceReport:
    """Least-squares slope of ``log e`` against ``log eps``.

    Accepts ``fit_order(pairs)`` or ``fit_order(eps, errors)``.  Nonpositive
    errors are replaced by machine epsilon and their indices listed in
    ``floored``; ``residual`` is the RMS misfit in ``log e``.
    """
    if errors is None:
        pairs = np.asarray(eps, dtype=float)
        eps, errors = pairs[:, 0], pairs[:, 1]
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if eps.shape != errors.shape:
        raise FitError("eps and errors must have the same length")
    ok = np.isfinite(eps) & np.isfinite(errors) & (eps > 0)
    eps, errors = eps[ok], errors[ok]
    if eps.size < 4:
        raise FitError(f"need at least 4 valid points for an order fit, got {eps.size}")
    floor = np.finfo(float).eps
    floored = tuple(int(i) for i in np.flatnonzero(errors <= 0))
    e = np.where(errors > 0, errors, floor)
    x, v = np.log(eps), np.log(e)
    slope, intercept = np.polyfit(x, v, 1)
    resid = float(np.sqrt(np.mean((v - (slope * x + intercept)) ** 2)))
    return ConvergenceReport(eps, errors, float(slope), float(intercept), resid, floored)


# ---------------------------------------------------------------------------
# reduced dynamics


def integrate_reduced(sys: FastSlowSystem, man: Union[GridManifold, Callable], y0, eps: float,
                      tau_end: float, dtau: float = 1e-2) -> Trajectory:
    """RK4 on ``dy/dtau = f(y, h(y), eps)`` in slow time, lifted by ``z = h(y)``.

    The returned trajectory stores fast time ``t = tau / eps``.
    """
    if eps <= 0:
        raise ConfigurationError("reduced integration needs eps > 0 to report fast time")
    h = _graph(man)
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    steps = int(math.ceil(tau_end / dtau - 1e-12))
    k = tau_end / steps

    def F(yy):
        return sys.eval_f(yy, h(yy), eps)

    out = np.empty((steps + 1, sys.m + sys.n))
    out[0] = np.concatenate([y, h(y)])
    for i in range(steps):
        k1 = F(y)
        k2 = F(y + 0.5 * k * k1)
        k3 = F(y + 0.5 * k * k2)
        k4 = F(y + k * k3)
        y = y + (k / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = np.concatenate([y, h(y)])
    tau = np.linspace(0.0, tau_end, steps + 1)
    return Trajectory(tau / eps, out, k / eps, eps, sys.m, integrator="rk4-reduced")
