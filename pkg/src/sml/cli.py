"""Command-line front end.

Verbs::

    sml run --model NAME --method METHOD [options] --out DIR
    sml compare A.csv B.csv [--out report.json]
    sml models

``run`` writes ``manifold.csv`` (header ``y_1..y_m,z_1..z_n,method,epsilon``)
and ``report.json`` into the output directory.  Exit status: 0 success,
1 configuration error, 2 numerical failure (partial artifacts are still
written).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import expansion, solve_h0
from .core import GridManifold, interpolate
from .dynamics import attraction_rate, fit_order, integrate
from .errors import ConfigurationError, PartialResultError, SmlError, ValidationError
from .ildm import ildm_sweep
from .iterative import fr_run, grid_spacing_for
from .models import MODELS, MmhParams, build_model, ds_oracle, linear_oracle, list_models, mmh_oracle

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
METHODS = ("ildm", "fraser-roussel", "expansion", "simulate", "compare", "order-study")
DEFAULT_EPS_LIST = tuple(0.1 * 2.0**-k for k in range(7))
MAX_NODES = 200_001


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; configuration problems are exit 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    model: str
    method: str
    params: dict = field(default_factory=dict)
    eps: Optional[float] = None
    eps_list: Optional[list] = None
    grid: Optional[list] = None  # [(lo, hi, count)] per slow axis
    l_max: int = 2
    method_of_interest: str = "ildm"
    reference_order: Optional[int] = None
    diff_order: int = 4
    dt: float = 0.1
    t_end: Optional[float] = None
    y0: Optional[list] = None
    z0: Optional[list] = None
    out: str = "."

    def as_dict(self):
        return {
            "model": self.model,
            "method": self.method,
            "params": dict(sorted(self.params.items())),
            "eps": self.eps,
            "eps_list": self.eps_list,
            "grid": [list(g) for g in self.grid] if self.grid else None,
            "l_max": self.l_max,
            "method_of_interest": self.method_of_interest,
            "reference_order": self.reference_order,
            "diff_order": self.diff_order,
            "dt": self.dt,
            "t_end": self.t_end,
            "y0": self.y0,
            "z0": self.z0,
        }


def parse_grid_spec(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigurationError(f"grid spec {text!r} must look like y:lo:hi:count")
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ConfigurationError(f"bad numbers in grid spec {text!r}") from exc
    return _check_axis(lo, hi, count)


def _check_axis(lo, hi, count):
    if count < 1 or count > MAX_NODES:
        raise ConfigurationError(f"grid count must be in [1, {MAX_NODES}], got {count}")
    if count > 1 and not hi > lo:
        raise ConfigurationError("grid needs hi > lo")
    return (float(lo), float(hi), int(count))


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse number list {text!r}") from exc


def _parse_param(text):
    if "=" not in text:
        raise ConfigurationError(f"--param expects key=value, got {text!r}")
    key, val = text.split("=", 1)
    try:
        return key.strip(), float(val)
    except ValueError as exc:
        raise ConfigurationError(f"parameter {key} must be numeric") from exc


def build_config(ns) -> RunConfig:
    base = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigurationError("config file must hold a JSON object")
        known = set(RunConfig.__dataclass_fields__)
        extra = set(base) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")

    def pick(name, flag):
        return flag if flag is not None else base.get(name)

    model = pick("model", ns.model)
    method = pick("method", ns.method)
    if not model:
        raise ConfigurationError("a model name is required (--model)")
    if model not in MODELS:
        raise ConfigurationError(f"unknown model {model!r}; known: {list_models()}")
    if not method:
        raise ConfigurationError("a method is required (--method)")
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {list(METHODS)}")

    params = dict(base.get("params") or {})
    for text in ns.param or []:
        k, v = _parse_param(text)
        params[k] = v
    if ns.a is not None:
        params["a"] = ns.a
    if ns.b is not None:
        params["b"] = ns.b

    grid = None
    if ns.grid:
        grid = [parse_grid_spec(g) for g in ns.grid]
    elif base.get("grid"):
        grid = []
        for g in base["grid"]:
            grid.append(parse_grid_spec(g) if isinstance(g, str) else _check_axis(*g))

    eps_list = pick("eps_list", ns.eps_list)
    cfg = RunConfig(
        model=model,
        method=method,
        params=params,
        eps=pick("eps", ns.eps),
        eps_list=_parse_floats(eps_list) if eps_list is not None else None,
        grid=grid,
        l_max=int(pick("l_max", ns.l_max) if pick("l_max", ns.l_max) is not None else 2),
        method_of_interest=pick("method_of_interest", ns.method_of_interest) or "ildm",
        reference_order=pick("reference_order", ns.reference_order),
        diff_order=int(pick("diff_order", ns.diff_order) or 4),
        dt=float(pick("dt", ns.dt) or 0.1),
        t_end=pick("t_end", ns.t_end),
        y0=_parse_floats(pick("y0", ns.y0)) if pick("y0", ns.y0) is not None else None,
        z0=_parse_floats(pick("z0", ns.z0)) if pick("z0", ns.z0) is not None else None,
        out=pick("out", ns.out) or ".",
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.eps is not None:
        cfg.eps = float(cfg.eps)
        if not cfg.eps > 0:
            raise ConfigurationError("eps must be > 0")
    if cfg.eps_list is not None:
        if not cfg.eps_list or any(not e > 0 for e in cfg.eps_list):
            raise ConfigurationError("eps list entries must be > 0")
    if cfg.method in ("ildm", "fraser-roussel", "simulate", "compare") and cfg.eps is None:
        raise ConfigurationError(f"method {cfg.method} needs --eps")
    if cfg.l_max < 0:
        raise ConfigurationError("l_max must be >= 0")
    if cfg.method_of_interest not in ("ildm", "fraser-roussel"):
        raise ConfigurationError("method-of-interest must be ildm or fraser-roussel")
    if cfg.diff_order not in (2, 4, 6, 8):
        raise ConfigurationError("diff-order must be 2, 4, 6 or 8")
    if cfg.dt <= 0:
        raise ConfigurationError("dt must be > 0")
    needs_diff = cfg.method in ("fraser-roussel", "expansion", "compare", "order-study")
    if cfg.grid and needs_diff and any(c < 3 for _, _, c in cfg.grid):
        raise ConfigurationError("grid counts must be >= 3 for methods that differentiate")


# ---------------------------------------------------------------------------
# helpers


def _axes(cfg, system, default_count=61):
    if cfg.grid is None:
        lo, hi = system.domain
        return tuple(np.linspace(a, b, default_count) for a, b in zip(lo, hi))
    if len(cfg.grid) != system.m:
        raise ConfigurationError(f"model {cfg.model} has {system.m} slow variable(s); got {len(cfg.grid)} grid axes")
    return tuple(np.linspace(lo, hi, c) for lo, hi, c in cfg.grid)


def _system(cfg):
    lo = hi = None
    if cfg.grid is not None:
        # the slow box is the requested grid box
        lo = cfg.grid[0][0] if len(cfg.grid) == 1 else [g[0] for g in cfg.grid]
        hi = cfg.grid[0][1] if len(cfg.grid) == 1 else [g[1] for g in cfg.grid]
    try:
        return build_model(cfg.model, cfg.params, lo=lo, hi=hi)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc


def oracle(cfg, kind, nodes, eps):
    """Closed-form z-values for ``kind`` in {ildm, exact, trunc1, trunc2}; ``None`` if unknown."""
    y = nodes[:, 0]
    if cfg.model == "davis-skodje":
        if kind == "ildm":
            return ds_oracle(y, eps, "ildm")[:, None]
        if kind in ("exact", "trunc1", "trunc2"):
            return ds_oracle(y, eps, "h_exact")[:, None]
    if cfg.model == "mmh":
        p = MmhParams(**{k: cfg.params[k] for k in ("a", "b") if k in cfg.params})
        h = [mmh_oracle(p, y, w) for w in ("h0", "h1", "h2")]
        if kind == "trunc1":
            return (h[0] + eps * h[1])[:, None]
        if kind == "trunc2":
            return (h[0] + eps * h[1] + eps**2 * h[2])[:, None]
    if cfg.model == "linear":
        c = float(cfg.params.get("c", 1.0))
        if kind in ("ildm", "exact"):
            return np.array([linear_oracle([[c]], [v], eps, "ildm") for v in y])
    return None


def _rows(man: GridManifold, method: str, eps):
    nodes = man.nodes()
    vals = man.flat_values
    return [(nodes[i], vals[i], method, eps) for i in range(len(nodes))]


def _fmt(x):
    return "%.17g" % x


def write_csv(path, rows, m, n):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y_{i + 1}" for i in range(m)] + [f"z_{j + 1}" for j in range(n)] + ["method", "epsilon"])
        for y, z, method, eps in rows:
            w.writerow([_fmt(v) for v in y] + [_fmt(v) for v in z] + [method, _fmt(eps)])


def read_csv(path):
    """Return ``(m, n, rows)`` with rows ``(y, z, method, eps)``."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except (OSError, StopIteration) as exc:
        raise ConfigurationError(f"cannot read manifold CSV {path}: {exc}") from exc
    m = sum(1 for h in header if h.startswith("y_"))
    n = sum(1 for h in header if h.startswith("z_"))
    if m < 1 or n < 1 or header[-2:] != ["method", "epsilon"] or len(header) != m + n + 2:
        raise ConfigurationError(f"{path}: header must be y_1..y_m,z_1..z_n,method,epsilon")
    out = []
    for r in rows:
        if len(r) != m + n + 2:
            raise ConfigurationError(f"{path}: malformed row {r}")
        try:
            y = np.array([float(v) for v in r[:m]])
            z = np.array([float(v) for v in r[m : m + n]])
            eps = float(r[-1])
        except ValueError as exc:
            raise ConfigurationError(f"{path}: non-numeric entry in row {r}") from exc
        out.append((y, z, r[-2], eps))
    return m, n, out


def _sup(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _clean(obj):
    """Make floats JSON-safe (NaN/inf become strings) and arrays lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# methods


def _do_ildm(cfg, system, axes, results):
    man = ildm_sweep(system, axes, cfg.eps)
    ref = oracle(cfg, "ildm", man.nodes(), cfg.eps)
    if ref is not None:
        results["max_abs_error_vs_oracle"] = _sup(man.flat_values, ref)
    return _rows(man, "ILDM", cfg.eps)


def _do_fr(cfg, system, axes, results):
    st = fr_run(system, None, cfg.l_max, cfg.eps, axes=axes, diff_order=cfg.diff_order)
    results.update(
        l_max=cfg.l_max,
        path=st.path,
        sup_deltas=st.history,
        max_abs_defect=float(np.max(np.abs(st.defect))),
    )
    ref = oracle(cfg, "exact", st.phi.nodes(), cfg.eps)
    if ref is None and cfg.l_max in (1, 2):
        ref = oracle(cfg, f"trunc{cfg.l_max}", st.phi.nodes(), cfg.eps)
    if ref is not None:
        results["max_abs_error_vs_oracle"] = _sup(st.phi.flat_values, ref)
    return _rows(st.phi, f"fraser-roussel-{cfg.l_max}", cfg.eps)


def _do_expansion(cfg, system, axes, results):
    ex = expansion(system, axes, kind="psi", diff_order=cfg.diff_order)
    h = (ex[0], ex[1], ex[2].replace_values(ex[2].values - ex.discrepancy.values))
    results.update(
        max_abs_h1=float(np.max(np.abs(h[1].values))),
        max_abs_h2=float(np.max(np.abs(h[2].values))),
        max_abs_psi2=float(np.max(np.abs(ex[2].values))),
        max_abs_discrepancy=float(np.max(np.abs(ex.discrepancy.values))),
    )
    eps = cfg.eps if cfg.eps is not None else 0.0
    rows = []
    for i, c in enumerate(h):
        rows += _rows(c, f"h{i}", eps)
    rows += _rows(ex[2], "psi2", eps)
    rows += _rows(ex.discrepancy, "psi2-h2", eps)
    if cfg.eps is not None:
        trunc = sum(cfg.eps**i * h[i].values for i in range(3))
        rows += _rows(h[0].replace_values(trunc), "h-truncation-2", eps)
        ref = oracle(cfg, "trunc2", h[0].nodes(), cfg.eps)
        if ref is not None:
            results["max_abs_error_vs_oracle"] = _sup(trunc.reshape(-1, system.n), ref)
    return rows


def _do_compare(cfg, system, axes, results):
    h0 = solve_h0(system, axes)
    ex = expansion(system, axes, kind="h", diff_order=cfg.diff_order, h0man=h0)
    ild = ildm_sweep(system, axes, cfg.eps, h0man=h0)
    st = fr_run(system, h0, cfg.l_max, cfg.eps, diff_order=cfg.diff_order)
    trunc = ex.truncation(cfg.eps, 2)
    results.update(
        sup_ildm_vs_truncation=_sup(ild.values, trunc.values),
        sup_fr_vs_truncation=_sup(st.phi.values, trunc.values),
        sup_ildm_vs_fr=_sup(ild.values, st.phi.values),
        l_max=cfg.l_max,
    )
    return (_rows(ild, "ILDM", cfg.eps) + _rows(st.phi, f"fraser-roussel-{cfg.l_max}", cfg.eps)
            + _rows(trunc, "h-truncation-2", cfg.eps))


def _do_order_study(cfg, system, axes, results):
    eps_list = sorted(cfg.eps_list or DEFAULT_EPS_LIST, reverse=True)
    moi = cfg.method_of_interest
    ref_order = cfg.reference_order
    if ref_order is None:
        ref_order = 2 if moi == "ildm" else min(cfg.l_max, 2)
    if ref_order not in (0, 1, 2):
        raise ConfigurationError("reference order must be 0, 1 or 2")
    h0 = solve_h0(system, axes)
    ex = expansion(system, axes, kind="h", diff_order=cfg.diff_order, h0man=h0)
    errs = {k: [] for k in range(3)}
    rows = []
    for eps in eps_list:
        if moi == "ildm":
            man = ildm_sweep(system, axes, eps, h0man=h0)
            tag = "ILDM"
        else:
            man = fr_run(system, h0, cfg.l_max, eps, diff_order=cfg.diff_order).phi
            tag = f"fraser-roussel-{cfg.l_max}"
        for k in range(3):
            errs[k].append(_sup(man.values, ex.truncation(eps, k).values))
        rows += _rows(man, tag, eps)
    fits = {}
    for k in range(3):
        try:
            fits[f"order{k}"] = fit_order(eps_list, errs[k]).as_dict()
        except SmlError as exc:
            fits[f"order{k}"] = {"error": str(exc)}
    results.update(
        method_of_interest=moi,
        reference_order=ref_order,
        fits=fits,
        slope=fits[f"order{ref_order}"].get("slope"),
    )
    return rows


def _do_simulate(cfg, system, axes, results):
    h0 = solve_h0(system, axes)
    lo, hi = system.domain
    y0 = np.array(cfg.y0) if cfg.y0 is not None else 0.5 * (lo + hi)
    z0 = np.array(cfg.z0) if cfg.z0 is not None else interpolate(h0, y0) + 0.1
    t_end = cfg.t_end if cfg.t_end is not None else 1.0 / cfg.eps
    tr = integrate(system, y0, z0, cfg.eps, t_end, cfg.dt)
    results.update(t_end=t_end, steps=len(tr.t) - 1, dt=tr.dt, final_state=tr.final.tolist())
    try:
        rate = attraction_rate(system, h0, cfg.eps, initials=[y0])
        results["attraction_rate_to_h0"] = rate.rate
    except SmlError as exc:
        results["attraction_rate_to_h0"] = f"unavailable: {exc}"
    path = os.path.join(cfg.out, "trajectory.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"y_{i + 1}" for i in range(system.m)] + [f"z_{j + 1}" for j in range(system.n)])
        for t, x in zip(tr.t, tr.states):
            w.writerow([_fmt(t)] + [_fmt(v) for v in x])
    return _rows(h0, "h0", 0.0)


_DISPATCH = {
    "ildm": _do_ildm,
    "fraser-roussel": _do_fr,
    "expansion": _do_expansion,
    "compare": _do_compare,
    "order-study": _do_order_study,
    "simulate": _do_simulate,
}


def _default_count(cfg, system):
    if cfg.method == "order-study" and cfg.method_of_interest == "fraser-roussel":
        eps_min = min(cfg.eps_list or DEFAULT_EPS_LIST)
        lo, hi = system.domain
        dy = grid_spacing_for(eps_min, cfg.l_max, cfg.diff_order)
        return int(min(MAX_NODES, np.ceil(float(np.max(hi - lo)) / dy) + 1))
    if cfg.method in ("order-study", "expansion", "compare"):
        return 301
    return 61


def cmd_run(cfg: RunConfig) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    system = _system(cfg)
    axes = _axes(cfg, system, _default_count(cfg, system))
    report = {"config": cfg.as_dict(), "version": __version__, "model": cfg.model, "method": cfg.method}
    results = {}
    status = EXIT_OK
    rows = []
    try:
        rows = _DISPATCH[cfg.method](cfg, system, axes, results)
        report["failures"] = []
    except PartialResultError as exc:
        status = EXIT_NUMERIC
        report["failures"] = [{"y": y, "error": msg} for y, msg in exc.failed]
        report["error"] = str(exc)
        if exc.partial is not None:
            rows = _rows(exc.partial, f"{cfg.method}-partial", cfg.eps if cfg.eps is not None else 0.0)
    except (ConfigurationError, ValidationError):
        raise  # exit 1, handled in main
    except SmlError as exc:
        status = EXIT_NUMERIC
        report["failures"] = [{"y": getattr(exc, "node", None), "error": f"{type(exc).__name__}: {exc}"}]
        report["error"] = str(exc)
    report["results"] = results
    report["status"] = "ok" if status == EXIT_OK else "numerical-failure"
    if rows:
        write_csv(os.path.join(cfg.out, "manifold.csv"), rows, system.m, system.n)
    write_json(os.path.join(cfg.out, "report.json"), report)
    return status


def cmd_compare(path_a, path_b, out=None, method_a=None, method_b=None, stream=None) -> int:
    ma, na, ra = read_csv(path_a)
    mb, nb, rb = read_csv(path_b)
    if (ma, na) != (mb, nb):
        raise ConfigurationError("manifolds have different dimensions")
    if method_a:
        ra = [r for r in ra if r[2] == method_a]
    if method_b:
        rb = [r for r in rb if r[2] == method_b]

    def group(rows, label):
        out = {}
        for y, z, meth, eps in rows:
            out.setdefault(eps, []).append((y, z, meth))
        for eps, items in out.items():
            if len({m for _, _, m in items}) > 1:
                raise ConfigurationError(f"{label} holds several methods at eps={eps}; pick one with --method-a/-b")
        return out

    ga, gb = group(ra, path_a), group(rb, path_b)
    common = sorted(set(ga) & set(gb))
    if not common:
        raise ConfigurationError("no common epsilon values between the two files")
    per_eps = []
    for eps in common:
        A, B = ga[eps], gb[eps]
        if len(A) != len(B):
            raise ConfigurationError(f"grids differ in size at eps={eps}")
        ya = np.array([a[0] for a in A])
        yb = np.array([b[0] for b in B])
        if np.max(np.abs(ya - yb)) > 1e-12 * max(1.0, float(np.max(np.abs(ya)))):
            raise ConfigurationError(f"grid nodes differ at eps={eps}")
        d = np.array([a[1] for a in A]) - np.array([b[1] for b in B])
        per_eps.append({
            "epsilon": eps,
            "sup": float(np.max(np.abs(d))),
            "l2": float(np.sqrt(np.mean(d**2))),
            "argmax_y": ya[int(np.argmax(np.max(np.abs(d), axis=1)))].tolist(),
            "per_node": d.tolist(),
            "sup_over_eps2": float(np.max(np.abs(d))) / eps**2 if eps > 0 else None,
        })
    report = {"file_a": os.path.basename(path_a), "file_b": os.path.basename(path_b), "comparisons": per_eps}
    if len(common) >= 4 and all(e > 0 for e in common):
        fit = fit_order(common, [p["sup"] for p in per_eps])
        report["fit"] = fit.as_dict()
        report["eps2_coefficient"] = per_eps[0]["sup_over_eps2"]
    if len(per_eps) == 1:
        report.update({k: per_eps[0][k] for k in ("sup", "l2")})
    if out:
        write_json(out, report)
    stream = stream or sys.stdout
    json.dump(_clean({k: v for k, v in report.items() if k != "comparisons"} |
                     {"comparisons": [{k: v for k, v in p.items() if k != "per_node"} for p in per_eps]}),
              stream, indent=2, sort_keys=True)
    stream.write("\n")
    return EXIT_OK


def cmd_models(stream=None) -> int:
    stream = stream or sys.stdout
    for name in list_models():
        e = MODELS[name]
        schema = ", ".join(f"{k}={d}" for k, (_, d) in e.schema.items()) or "-"
        stream.write(f"{name:14s} params: {schema:16s} domain: [{e.domain[0]}, {e.domain[1]}]  {e.description}\n")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sml", description="slow manifolds of fast-slow systems")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", parser_class=_Parser)

    r = sub.add_parser("run", help="compute a manifold or study")
    r.add_argument("--model")
    r.add_argument("--method")
    r.add_argument("--config", help="JSON config; flags override it")
    r.add_argument("--a", type=float)
    r.add_argument("--b", type=float)
    r.add_argument("--param", action="append", help="model parameter key=value")
    r.add_argument("--eps", type=float)
    r.add_argument("--eps-list")
    r.add_argument("--grid", action="append", help="axis spec y:lo:hi:count (repeat per slow axis)")
    r.add_argument("--l-max", type=int)
    r.add_argument("--method-of-interest")
    r.add_argument("--reference-order", type=int)
    r.add_argument("--diff-order", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--y0")
    r.add_argument("--z0")
    r.add_argument("--out")

    c = sub.add_parser("compare", help="compare two manifold CSV files")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--out")
    c.add_argument("--method-a")
    c.add_argument("--method-b")

    sub.add_parser("models", help="list available models")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.verb is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a verb is required: run, compare or models")
        if ns.verb == "models":
            return cmd_models()
        if ns.verb == "compare":
            return cmd_compare(ns.a, ns.b, ns.out, ns.method_a, ns.method_b)
        return cmd_run(build_config(ns))
    except UsageError as exc:
        sys.stderr.write(f"sml: error: {exc}\n")
        return EXIT_CONFIG
    except (ConfigurationError, ValidationError) as exc:
        sys.stderr.write(f"sml: configuration error: {exc}\n")
        return EXIT_CONFIG
    except SmlError as exc:
        sys.stderr.write(f"sml: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
