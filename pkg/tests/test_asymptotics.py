import numpy as np
import pytest

from sml.asymptotics import (
    DIFF_ORDER,
    _newton_h0,
    expansion,
    planar_psi_coefficients,
    psi_coefficients,
    second_derivative,
    solve_h0,
    solve_h1,
    solve_h2,
)
from sml.core import FastSlowSystem, GridManifold, grid_jacobian, uniform_axes
from sml.errors import ConfigurationError, NonConvergenceError, NotAttractingError, SingularSystemError
from sml.models import MmhParams, ds_system, linear_oracle, linear_system, mmh_oracle, mmh_system

P = MmhParams(1.0, 0.5)


@pytest.fixture(scope="module")
def mmh_fine():
    sys_ = mmh_system(P, lo=0.0, hi=3.0)
    return sys_, expansion(sys_, uniform_axes(0.0, 3.0, 301), kind="psi")


def _node(man, y):
    return man.values[np.argmin(np.abs(man.axes[0] - y)), 0]


def test_h0_closed_forms(mmh, ds):
    axes = uniform_axes(0.0, 3.0, 31)
    y = axes[0]
    assert np.allclose(solve_h0(mmh, axes).values[:, 0], y / (1 + y), atol=1e-12)
    assert np.allclose(solve_h0(ds, axes).values[:, 0], y / (1 + y), atol=1e-12)
    assert _node(solve_h0(mmh, (np.array([0.0, 1.0]),)), 0.0) == 0.0


def test_h0_linear_newton_converges_in_one_step(lin):
    z, trace = _newton_h0(lin, np.array([2.0]), np.array([0.0]), 1e-12, 50)
    assert z[0] == pytest.approx(2.0)
    assert len(trace) == 2 and trace[-1] == 0.0


def test_h0_not_attracting():
    sys_ = FastSlowSystem(1, 1, lambda y, z, e: -y, lambda y, z, e: z - y, (0.0,), (1.0,))
    with pytest.raises(NotAttractingError):
        solve_h0(sys_, uniform_axes(0.0, 1.0, 5))
    assert solve_h0(sys_, uniform_axes(0.0, 1.0, 5), check_stability=False).values[2, 0] == pytest.approx(0.5)


def test_h0_nonconvergence_reports_trace():
    sys_ = FastSlowSystem(1, 1, lambda y, z, e: -y, lambda y, z, e: np.arctan(z) - 2.0 - y, (0.0,), (1.0,))
    with pytest.raises(NonConvergenceError) as info:
        solve_h0(sys_, uniform_axes(0.0, 1.0, 3), max_iter=5)
    assert info.value.trace and info.value.node == [0.0]


def test_mmh_coefficients_at_y1(mmh_fine):
    _, coeffs = mmh_fine
    assert _node(coeffs[1], 1.0) == pytest.approx(0.03125, abs=1e-6)
    assert _node(coeffs.discrepancy, 1.0) == pytest.approx(0.00390625, abs=1e-5)
    assert _node(coeffs[2], 1.0) == pytest.approx(-0.005859375, abs=1e-5)


def test_mmh_h2_at_y1(mmh_fine):
    sys_, coeffs = mmh_fine
    h2 = solve_h2(sys_, coeffs[0], coeffs[1])
    assert _node(h2, 1.0) == pytest.approx(-0.009765625, abs=1e-5)


def test_mmh_relative_errors_over_interior(mmh_fine):
    _, coeffs = mmh_fine
    y = coeffs.axes[0]
    mask = y >= 0.1
    pairs = [(coeffs[1], "h1"), (coeffs[2], "psi2"), (coeffs.discrepancy, "discrepancy")]
    for man, which in pairs:
        ref = mmh_oracle(P, y[mask], which)
        assert np.max(np.abs(man.values[mask, 0] - ref) / np.abs(ref)) <= 1e-4


def test_h1_residual_property(mmh_fine):
    sys_, coeffs = mmh_fine
    h0, h1 = coeffs[0], coeffs[1]
    D = grid_jacobian(h0, order=DIFF_ORDER).reshape(-1, 1, 1)
    for i, (y, z) in enumerate(zip(h0.nodes(), h0.flat_values)):
        lhs = sys_.block("Dzg", y, z, 0.0) @ h1.flat_values[i]
        rhs = D[i] @ sys_.eval_f(y, z, 0.0) - sys_.block("geps", y, z, 0.0)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_planar_and_general_psi_agree(mmh_fine):
    sys_, coeffs = mmh_fine
    planar = planar_psi_coefficients(sys_, coeffs[0])
    for k in (1, 2):
        assert np.max(np.abs(planar[k].values - coeffs[k].values)) <= 1e-6
    assert np.max(np.abs(planar.discrepancy.values - coeffs.discrepancy.values)) <= 1e-6


def test_psi_low_orders_are_h(mmh_fine):
    sys_, coeffs = mmh_fine
    h = expansion(sys_, coeffs.axes, kind="h", h0man=coeffs[0])
    assert coeffs[0] is h[0]
    assert np.array_equal(coeffs[1].values, h[1].values)
    assert np.allclose(coeffs[2].values - h[2].values, coeffs.discrepancy.values, atol=1e-15)
    assert h.discrepancy is None


def test_ds_coefficients():
    sys_ = ds_system()
    coeffs = expansion(sys_, uniform_axes(0.0, 3.0, 301), kind="psi")
    y = coeffs.axes[0]
    # exact manifold has no eps dependence: h1 = h2 = 0; ILDM picks up 2 y^2 / (1+y)^3
    assert np.max(np.abs(coeffs[1].values)) <= 1e-8
    h2 = solve_h2(sys_, coeffs[0], coeffs[1])
    assert np.max(np.abs(h2.values)) <= 1e-6
    ref = 2 * y**2 / (1 + y) ** 3
    assert np.max(np.abs(coeffs.discrepancy.values[:, 0] - ref)) <= 1e-6
    assert _node(coeffs.discrepancy, 1.0) == pytest.approx(0.25, abs=1e-6)


def test_zero_rhs_gives_zero_h1():
    # f = 0 on the critical manifold and no eps dependence
    sys_ = FastSlowSystem(1, 1, lambda y, z, e: 0 * y, lambda y, z, e: -z + y**2, (0.0,), (1.0,))
    h0 = solve_h0(sys_, uniform_axes(0.0, 1.0, 11))
    assert np.all(solve_h1(sys_, h0).values == 0.0)


def test_linear_model_multidimensional():
    C = np.array([[1.0, -0.5], [0.25, 2.0]])
    sys_ = linear_system(C, m=2, n=2, lo=0.0, hi=1.0)
    axes = uniform_axes((0.0, 0.0), (1.0, 1.0), (6, 7))
    coeffs = expansion(sys_, axes, kind="psi")
    for node, i in ((np.array([0.4, 0.5]), (2, 3)), (np.array([1.0, 0.0]), (5, 0))):
        for k in (0, 1, 2):
            assert np.allclose(coeffs[k].values[i], linear_oracle(C, node, 0.0, "h1"), atol=1e-10)
        assert np.allclose(coeffs.discrepancy.values[i], 0.0, atol=1e-10)


def test_truncation_order():
    sys_ = mmh_system(P, 0.0, 3.0)
    coeffs = expansion(sys_, uniform_axes(0.0, 3.0, 31))
    t1 = coeffs.truncation(0.1, 1)
    assert np.allclose(t1.values, coeffs[0].values + 0.1 * coeffs[1].values)
    assert t1.order == 1 and t1.eps == 0.1
    with pytest.raises(ConfigurationError):
        coeffs.truncation(0.1, 3)
    with pytest.raises(ConfigurationError):
        expansion(sys_, uniform_axes(0.0, 3.0, 31), kind="phi")


def test_second_derivative_of_quadratic():
    axes = uniform_axes((0.0, 0.0), (1.0, 2.0), (7, 9))
    man = GridManifold.tabulate(axes, lambda y: y[0] ** 2 + 3 * y[0] * y[1] - y[1] ** 2)
    D2 = second_derivative(man)
    assert np.allclose(D2[3, 4, 0], [[2.0, 3.0], [3.0, -2.0]], atol=1e-9)


def test_singular_dzg():
    sys_ = FastSlowSystem(1, 1, lambda y, z, e: -y, lambda y, z, e: -(z - y) ** 3, (0.0,), (1.0,),
                          derivatives={"Dzg": lambda y, z, e: -3 * (z - y) ** 2}, z_guess=lambda y: y)
    h0 = GridManifold.tabulate(uniform_axes(0.0, 1.0, 5), lambda y: y[0])
    with pytest.raises(SingularSystemError):
        solve_h1(sys_, h0)
    with pytest.raises(ConfigurationError):
        psi_coefficients(sys_, *(GridManifold.tabulate(uniform_axes(0.0, 1.0, 3), lambda y: y[0]),) * 3)
