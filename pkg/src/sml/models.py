"""Benchmark fast-slow systems with analytic derivatives and closed-form oracles.

Three models are shipped:

``mmh``
    Michaelis-Menten-Henri kinetics, ``y' = eps(-y + (y+a-b) z)``,
    ``z' = y - (y+a) z`` with ``a > b > 0``.
``davis-skodje``
    ``y' = -eps y``, ``z' = -z + y/(1+y) - eps y/(1+y)^2``; the graph
    ``z = y/(1+y)`` is exactly invariant for every ``eps``.
``linear``
    ``y' = -eps y``, ``z' = -z + C y``; the critical manifold is flat, so the
    ILDM and the slow manifold coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .core import FastSlowSystem, LinearInZ
from .errors import ValidationError

__all__ = [
    "MmhParams",
    "DsParams",
    "mmh_system",
    "mmh_oracle",
    "ds_system",
    "ds_oracle",
    "linear_system",
    "linear_oracle",
    "MODELS",
    "ModelEntry",
    "build_model",
    "list_models",
]


# ---------------------------------------------------------------------------
# Michaelis-Menten-Henri


@dataclass(frozen=True)
class MmhParams:
    a: float = 1.0
    b: float = 0.5

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)) or not a > b > 0:
            raise ValidationError(f"MMH parameters need a > b > 0, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def mmh_system(p: MmhParams = MmhParams(), lo=0.0, hi=5.0) -> FastSlowSystem:
    """MMH system with analytic first derivatives and its linear-in-z split."""
    if not isinstance(p, MmhParams):
        p = MmhParams(*p)
    a, b = p.a, p.b

    def f(y, z, eps):
        return np.array([-y[0] + (y[0] + a - b) * z[0]])

    def g(y, z, eps):
        return np.array([y[0] - (y[0] + a) * z[0]])

    zero11 = lambda y, z, eps: np.zeros((1, 1))  # noqa: E731
    zero1 = lambda y, z, eps: np.zeros(1)  # noqa: E731
    derivs = {
        "Dyf": lambda y, z, eps: np.array([[z[0] - 1.0]]),
        "Dzf": lambda y, z, eps: np.array([[y[0] + a - b]]),
        "Dyg": lambda y, z, eps: np.array([[1.0 - z[0]]]),
        "Dzg": lambda y, z, eps: np.array([[-(y[0] + a)]]),
        "feps": zero1,
        "geps": zero1,
        "Dzzg": lambda y, z, eps: np.zeros((1, 1, 1)),
        "Dzgeps": zero11,
        "gepseps": zero1,
        "Dzfeps": zero11,
        "fepseps": zero1,
    }
    lin = LinearInZ(
        f1=lambda y, eps: y + a - b,
        f2=lambda y, eps: -y,
        g1=lambda y, eps: -(y + a),
        g2=lambda y, eps: y,
    )
    return FastSlowSystem(
        1, 1, f, g, (lo,), (hi,), derivatives=derivs, linear_in_z=lin,
        z_guess=lambda y: y / (y + a), name="mmh", params={"a": a, "b": b},
    )


def mmh_oracle(p: MmhParams, y, which: str):
    """Closed-form expansion coefficients of the MMH slow manifold and ILDM.

    ``which`` is one of ``h0``, ``h1``, ``h2``, ``psi2``, ``discrepancy``
    (``psi2 - h2``) or ``phi1_eps2`` (the eps^2 coefficient of the first
    iterate started from ``h0``).
    """
    a, b = p.a, p.b
    y = np.asarray(y, dtype=float)
    s = y + a
    if which == "h0":
        return y / s
    if which == "h1":
        return a * b * y / s**4
    if which == "h2":
        return a * b * y * (2 * a * b - 3 * b * y - a * y - a * a) / s**7
    if which == "psi2":
        return a * b * y * (2 * a * b - b * y - a * y - a * a) / s**7
    if which == "discrepancy":
        return 2 * a * b * b * y * y / s**7
    if which == "phi1_eps2":
        return -a * a * b * y * (y + a - b) / s**7
    raise ValidationError(f"unknown MMH oracle {which!r}")


# ---------------------------------------------------------------------------
# Davis-Skodje


@dataclass(frozen=True)
class DsParams:
    """No model parameters; ``gamma`` is the conventional alias for ``1/eps``."""

    @staticmethod
    def gamma(eps: float) -> float:
        return 1.0 / eps


def ds_system(lo=0.0, hi=3.0) -> FastSlowSystem:
    if lo < 0:
        raise ValidationError("Davis-Skodje domain needs y >= 0")

    def f(y, z, eps):
        return np.array([-y[0]])

    def g(y, z, eps):
        u = 1.0 + y[0]
        return np.array([-z[0] + y[0] / u - eps * y[0] / u**2])

    def dyg(y, z, eps):
        u = 1.0 + y[0]
        return np.array([[(u + eps * (y[0] - 1.0)) / u**3]])

    zero11 = lambda y, z, eps: np.zeros((1, 1))  # noqa: E731
    zero1 = lambda y, z, eps: np.zeros(1)  # noqa: E731
    derivs = {
        "Dyf": lambda y, z, eps: np.array([[-1.0]]),
        "Dzf": zero11,
        "Dyg": dyg,
        "Dzg": lambda y, z, eps: np.array([[-1.0]]),
        "feps": zero1,
        "geps": lambda y, z, eps: np.array([-y[0] / (1.0 + y[0]) ** 2]),
        "Dzzg": lambda y, z, eps: np.zeros((1, 1, 1)),
        "Dzgeps": zero11,
        "gepseps": zero1,
        "Dzfeps": zero11,
        "fepseps": zero1,
    }
    lin = LinearInZ(
        f1=lambda y, eps: np.zeros_like(np.asarray(y, dtype=float)),
        f2=lambda y, eps: -y,
        g1=lambda y, eps: -np.ones_like(np.asarray(y, dtype=float)),
        g2=lambda y, eps: y / (1 + y) - eps * y / (1 + y) ** 2,
    )
    return FastSlowSystem(
        1, 1, f, g, (lo,), (hi,), derivatives=derivs, linear_in_z=lin,
        z_guess=lambda y: y / (1 + y), name="davis-skodje", params={},
    )


def ds_oracle(y, eps: float, which: str):
    """Exact slow manifold, closed-form ILDM and its eps^2 coefficient."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("Davis-Skodje oracle needs y >= 0")
    u = 1.0 + y
    if which == "h_exact":
        return y / u
    if which == "ildm_eps2coeff":
        return 2 * y * y / u**3
    if which == "ildm":
        if not 0 <= eps < 1:
            raise ValidationError(f"closed-form ILDM has a pole at eps=1; got eps={eps}")
        return y / u + 2 * eps**2 * y * y / ((1 - eps) * u**3)
    raise ValidationError(f"unknown Davis-Skodje oracle {which!r}")


# ---------------------------------------------------------------------------
# linear, zero curvature


def linear_system(c=1.0, m: int = 1, n: int = 1, lo=0.0, hi=3.0) -> FastSlowSystem:
    """``y' = -eps y``, ``z' = -z + C y`` with ``C`` an ``n x m`` matrix.

    A scalar ``c`` gives ``C = c`` times the ``n x m`` matrix of ones.
    """
    C = np.asarray(c, dtype=float)
    if C.ndim == 0:
        C = float(C) * np.ones((n, m))
    if C.shape != (n, m):
        raise ValidationError(f"C must have shape ({n}, {m})")
    C = C.copy()
    C.setflags(write=False)

    def f(y, z, eps):
        return -np.asarray(y, dtype=float)

    def g(y, z, eps):
        return -np.asarray(z, dtype=float) + C @ np.asarray(y, dtype=float)

    derivs = {
        "Dyf": lambda y, z, eps: -np.eye(m),
        "Dzf": lambda y, z, eps: np.zeros((m, n)),
        "Dyg": lambda y, z, eps: C.copy(),
        "Dzg": lambda y, z, eps: -np.eye(n),
        "feps": lambda y, z, eps: np.zeros(m),
        "geps": lambda y, z, eps: np.zeros(n),
        "Dzzg": lambda y, z, eps: np.zeros((n, n, n)),
        "Dzgeps": lambda y, z, eps: np.zeros((n, n)),
        "gepseps": lambda y, z, eps: np.zeros(n),
        "Dzfeps": lambda y, z, eps: np.zeros((m, n)),
        "fepseps": lambda y, z, eps: np.zeros(m),
    }
    lin = None
    if m == 1 and n == 1:
        c0 = float(C[0, 0])
        lin = LinearInZ(
            f1=lambda y, eps: np.zeros_like(np.asarray(y, dtype=float)),
            f2=lambda y, eps: -y,
            g1=lambda y, eps: -np.ones_like(np.asarray(y, dtype=float)),
            g2=lambda y, eps: c0 * y,
        )
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (m,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (m,))
    return FastSlowSystem(
        m, n, f, g, tuple(lo), tuple(hi), derivatives=derivs, linear_in_z=lin,
        z_guess=lambda y: C @ np.atleast_1d(y), name="linear",
        params={"c": C.tolist() if C.size > 1 else float(C[0, 0])},
    )


def linear_oracle(C, y, eps: float, which: str):
    """Coefficients of the linear model.

    Slow eigenvector graph of the constant Jacobian gives the exact invariant
    manifold ``z = C y / (1 - eps)``; the ILDM coincides with it, and every
    expansion coefficient ``h_i`` equals ``C y``.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if which in ("h0", "h1", "h2", "psi2"):
        return C @ y
    if which == "discrepancy":
        return np.zeros(C.shape[0])
    if which in ("h_exact", "ildm"):
        if not 0 <= eps < 1:
            raise ValidationError("linear model manifold has a pole at eps=1")
        return C @ y / (1.0 - eps)
    raise ValidationError(f"unknown linear-model oracle {which!r}")


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class ModelEntry:
    name: str
    factory: Callable
    schema: Mapping[str, tuple]  # param -> (type, default)
    domain: tuple
    description: str

    def build(self, params: Mapping | None = None, lo=None, hi=None) -> FastSlowSystem:
        params = dict(params or {})
        unknown = set(params) - set(self.schema)
        if unknown:
            raise ValidationError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        kw = {}
        for key, (typ, default) in self.schema.items():
            raw = params.get(key, default)
            try:
                kw[key] = typ(raw)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"parameter {key}={raw!r} is not a valid {typ.__name__}") from exc
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        return self.factory(lo=lo, hi=hi, **kw)


def _mmh_factory(a, b, lo, hi):
    return mmh_system(MmhParams(a, b), lo=lo, hi=hi)


def _ds_factory(lo, hi):
    return ds_system(lo=lo, hi=hi)


def _linear_factory(c, lo, hi):
    return linear_system(c, lo=lo, hi=hi)


MODELS = {
    "mmh": ModelEntry("mmh", _mmh_factory, {"a": (float, 1.0), "b": (float, 0.5)}, (0.0, 3.0),
                      "Michaelis-Menten-Henri kinetics (a > b > 0)"),
    "davis-skodje": ModelEntry("davis-skodje", _ds_factory, {}, (0.0, 3.0),
                               "Davis-Skodje model with exact slow manifold y/(1+y)"),
    "linear": ModelEntry("linear", _linear_factory, {"c": (float, 1.0)}, (0.0, 3.0),
                         "linear model with flat critical manifold z = c y"),
}


def list_models():
    return sorted(MODELS)


def build_model(name: str, params: Mapping | None = None, lo=None, hi=None) -> FastSlowSystem:
    try:
        entry = MODELS[name]
    except KeyError:
        raise ValidationError(f"unknown model {name!r}; known: {list_models()}") from None
    return entry.build(params, lo, hi)
