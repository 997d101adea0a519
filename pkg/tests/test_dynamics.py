import numpy as np
import pytest

from sml.core import FastSlowSystem
from sml.dynamics import (
    attraction_rate,
    fit_order,
    integrate,
    integrate_reduced,
    self_convergence,
)
from sml.errors import ConfigurationError, DomainExitError, FitError, TooFastToFitError
from sml.models import MmhParams, ds_oracle, ds_system, mmh_oracle, mmh_system

P = MmhParams(1.0, 0.5)


def _ds_exact(y):
    return np.asarray(y) / (1 + np.asarray(y))


def test_rk4_order_by_step_halving(mmh):
    ratio, order = self_convergence(mmh, [1.0], [0.3], 0.1, 10.0, dt=0.1)
    assert 12 <= ratio <= 20
    assert order == pytest.approx(4.0, abs=0.2)


def test_ds_slow_solution_tracks_closed_form():
    sys_ = ds_system()
    eps = 0.1
    tr = integrate(sys_, [2.0], _ds_exact([2.0]), eps, 1.0 / eps)
    # y(t) = y0 exp(-eps t) and z stays on y/(1+y)
    assert abs(tr.final[0] - 2.0 * np.exp(-1.0)) <= 1e-6
    assert abs(tr.final[1] - _ds_exact(tr.final[0])) <= 1e-6
    assert tr.tau[-1] == pytest.approx(1.0)


def test_on_manifold_attraction_flags_drift(ds):
    for eps in (0.1, 0.01):
        res = attraction_rate(ds, _ds_exact, eps, initials=[[1.5]], offset=0.0)
        assert res.on_manifold and res.rate == 0.0
        assert res.max_distance <= 1e-8


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_ds_attraction_rate(ds, eps):
    res = attraction_rate(ds, _ds_exact, eps, initials=[[0.5], [1.5], [2.5]])
    assert abs(res.rate * eps - 1.0) <= 0.2
    assert not res.on_manifold and len(res.rates) == 3


def test_mmh_attraction_rate(mmh):
    # Dzg = -(y + a) = -2 at y = 1; measure against the eps^2 truncation, since
    # h0 itself sits O(eps) off the invariant manifold
    eps = 0.01
    h = lambda y: sum(eps**i * mmh_oracle(P, y, w) for i, w in enumerate(("h0", "h1", "h2")))  # noqa: E731
    res = attraction_rate(mmh, h, eps, initials=[[1.0]], offset=0.05)
    assert res.rate == pytest.approx(200.0, rel=0.2)


def test_too_fast_to_fit(ds):
    with pytest.raises(TooFastToFitError):
        attraction_rate(ds, _ds_exact, 0.1, initials=[[1.0]], dt=0.3, window=0.5)


def test_domain_exit():
    grow = FastSlowSystem(1, 1, lambda y, z, e: y, lambda y, z, e: -z, (0.0,), (3.0,))
    eps = 0.1
    with pytest.raises(DomainExitError) as info:
        integrate(grow, [2.5], [0.0], eps, 100.0)
    err = info.value
    assert err.time == pytest.approx(np.log(3.0 / 2.5) / eps, abs=0.2)
    assert np.all(err.trajectory.y <= 3.0)


def test_stability_and_argument_checks(mmh):
    with pytest.raises(ConfigurationError):
        integrate(mmh, [1.0], [0.5], 0.01, 10.0, dt=5.0)
    with pytest.raises(ConfigurationError):
        integrate(mmh, [1.0], [0.5], 0.01, -1.0)


def test_reduced_dynamics_error_is_eps_cubed(mmh):
    errs = []
    for eps in (0.04, 0.02, 0.01):
        h = lambda y, e=eps: sum(e**i * mmh_oracle(P, y, w) for i, w in enumerate(("h0", "h1", "h2")))  # noqa: E731
        y0 = np.array([1.0])
        full = integrate(mmh, y0, h(y0), eps, 1.0 / eps, dt=0.05)
        red = integrate_reduced(mmh, h, y0, eps, 1.0, dtau=1e-3)
        assert red.t[-1] == pytest.approx(1.0 / eps)
        errs.append(np.max(np.abs(full.final - red.final)))
    for k in range(2):
        assert np.log2(errs[k] / errs[k + 1]) == pytest.approx(3.0, abs=0.15)


def test_fit_order_synthetic():
    eps = 0.1 * 2.0 ** -np.arange(6)
    rep = fit_order(eps, 3.0 * eps**2)
    assert rep.slope == pytest.approx(2.0, abs=1e-12)
    assert rep.prefactor == pytest.approx(3.0)
    assert rep.residual <= 1e-12
    assert fit_order(np.column_stack([eps, eps**3])).slope == pytest.approx(3.0)


def test_fit_order_floor_and_errors():
    eps = 0.1 * 2.0 ** -np.arange(5)
    errors = eps**2
    errors[-1] = 0.0
    rep = fit_order(eps, errors)
    assert rep.floored == (4,)
    assert rep.as_dict()["floored"] == [4]
    with pytest.raises(FitError):
        fit_order(eps[:3], eps[:3] ** 2)
    with pytest.raises(FitError):
        fit_order(eps, eps[:4])


def test_ds_exact_vs_ildm_distance():
    # trajectories follow the invariant manifold, not the ILDM: distance to the ILDM is eps^2 scale
    sys_ = ds_system()
    eps = 0.1
    tr = integrate(sys_, [2.0], _ds_exact([2.0]), eps, 1.0 / eps)
    gap = np.abs(tr.z[:, 0] - ds_oracle(tr.y[:, 0], eps, "ildm"))
    assert gap.max() == pytest.approx(np.max(2 * eps**2 * tr.y[:, 0] ** 2 / ((1 - eps) * (1 + tr.y[:, 0]) ** 3)),
                                      rel=1e-6)
