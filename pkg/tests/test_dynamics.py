import warnings

import numpy as np
import pytest

from coherent_rbf import domain as dm
from coherent_rbf import dynamics as dy
from coherent_rbf.errors import CoherentRBFError, IntegrationError

T = dm.torus()
C = dm.cylinder()


def _cyl_points(rng, n):
    return np.column_stack([rng.uniform(0, 2 * np.pi, n), rng.uniform(0, np.pi, n)])


def fd_forward_jacobian(flow, pts, h=1e-6):
    """Central differences of the forward map; one-sided inward on walls."""
    dom = flow.domain
    J = np.empty(pts.shape + (2,))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        if dom.periodic[k]:
            J[:, :, k] = dom.displacement(flow.forward(dom.wrap(pts + e)),
                                          flow.forward(dom.wrap(pts - e))) / (2 * h)
            continue
        lo = pts[:, k] - h < dom.lower[k]
        hi = pts[:, k] + h > dom.upper[k]
        plus = np.where(hi[:, None], pts, pts + e)
        minus = np.where(lo[:, None], pts, pts - e)
        width = np.where(lo | hi, h, 2 * h)
        J[:, :, k] = dom.displacement(flow.forward(dom.wrap(plus)),
                                      flow.forward(dom.wrap(minus))) / width[:, None]
    return J


# ---------------------------------------------------------------------------
# standard map

def test_std_map_fixed_points():
    np.testing.assert_array_equal(dy.std_map_forward(dy.STD_MAP_A, [0.0, 0.0]), [0.0, 0.0])
    for a in (0.3, 0.971635, 2.0):
        np.testing.assert_allclose(dy.std_map_forward(a, [np.pi, 0.0]), [np.pi, 0.0], atol=1e-15)


def test_std_map_round_trip(rng):
    p = rng.uniform(0, 2 * np.pi, (1000, 2))
    q = dy.std_map_backward(dy.STD_MAP_A, dy.std_map_forward(dy.STD_MAP_A, p))
    assert np.max(np.abs(T.displacement(q, p))) <= 1e-12
    sm = dy.StandardMap()
    assert np.max(np.abs(T.displacement(sm.backward(sm.forward(p)), p))) <= 1e-9


def test_std_map_iterates_compose(rng):
    p = rng.uniform(0, 2 * np.pi, (100, 2))
    sm = dy.StandardMap(iterates=3)
    step = p
    for _ in range(3):
        step = dy.std_map_forward(sm.a, step)
    np.testing.assert_array_equal(sm.forward(p), step)


def test_std_map_volume_preserving(rng):
    sm = dy.StandardMap()
    p = rng.uniform(0, 2 * np.pi, (100, 2))
    J = fd_forward_jacobian(sm, p)
    assert np.max(np.abs(np.abs(np.linalg.det(J)) - 1)) <= 1e-6
    np.testing.assert_allclose(sm.forward_jacobian(p), J, atol=1e-6)


def test_std_map_cauchy_green(rng):
    sm = dy.StandardMap()
    p = rng.uniform(0, 2 * np.pi, (50, 2))
    J = sm.forward_jacobian(p)
    ref = np.linalg.inv(np.swapaxes(J, 1, 2) @ J)
    np.testing.assert_allclose(sm.cauchy_green_inverse(p), ref, rtol=1e-9, atol=1e-9)


def test_discrete_map_without_inverse():
    m = dy.DiscreteMap(lambda p: p, None, 1, T)
    with pytest.raises(CoherentRBFError):
        m.backward(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        dy.DiscreteMap(lambda p: p, None, 0, T)


# ---------------------------------------------------------------------------
# RK4

def test_rk4_zero_field(rng):
    x = _cyl_points(rng, 10)
    np.testing.assert_array_equal(dy.rk4_flow(lambda p, t: np.zeros_like(p), x, 0, 5, 7), x)


def test_rk4_constant_advection():
    out = dy.rk4_flow(lambda p, t: np.broadcast_to([1.0, 0.0], p.shape), np.array([[0.0, 1.0]]),
                      0.0, 1.0, 10, C)
    np.testing.assert_allclose(out, [[1.0, 1.0]], atol=1e-14)


def test_rk4_backward_step():
    out = dy.rk4_flow(lambda p, t: np.broadcast_to([1.0, 0.0], p.shape), np.array([[2.0, 1.0]]),
                      1.0, 0.0, 4)
    np.testing.assert_allclose(out, [[1.0, 1.0]], atol=1e-14)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_rk4_nonfinite_raises():
    with pytest.raises(IntegrationError):
        dy.rk4_flow(lambda p, t: p ** 3, np.array([[10.0, 10.0]]), 0, 10, 5)
    with pytest.raises(ValueError):
        dy.rk4_flow(lambda p, t: p, np.zeros((1, 2)), 0, 1, 0)


def test_rk4_fourth_order(rng):
    p = _cyl_points(rng, 200)
    z = [dy.CylinderFlow(tf=4.0, steps=s).forward(p) for s in (40, 80, 160)]
    e1 = np.max(np.abs(C.displacement(z[0], z[1])))
    e2 = np.max(np.abs(C.displacement(z[1], z[2])))
    assert 12 < e1 / e2 < 20


@pytest.mark.xfail(strict=True, reason="trajectories over [0, 40] have Jacobian norms up to 1e5; "
                                       "400 vs 800 RK4 steps differ by about 2e-2")
def test_cylinder_step_halving(rng):
    p = _cyl_points(rng, 1000)
    z4 = dy.CylinderFlow(steps=400).forward(p)
    z8 = dy.CylinderFlow(steps=800).forward(p)
    assert np.max(np.abs(C.displacement(z4, z8))) <= 1e-5


@pytest.mark.xfail(strict=True, reason="RK4 is not time-reversible; over [0, 40] the round trip "
                                       "error is about 5e-3 at 400 steps")
def test_cylinder_round_trip(rng):
    p = _cyl_points(rng, 1000)
    F = dy.CylinderFlow()
    assert np.max(np.abs(C.displacement(F.backward(F.forward(p)), p))) <= 1e-6


def test_cylinder_round_trip_short_interval(rng):
    p = _cyl_points(rng, 1000)
    F = dy.CylinderFlow(tf=4.0, steps=400)
    assert np.max(np.abs(C.displacement(F.backward(F.forward(p)), p))) <= 1e-6


def test_cylinder_walls_invariant(rng):
    x = rng.uniform(0, 2 * np.pi, 50)
    F = dy.CylinderFlow()
    for y in (0.0, np.pi):
        z = F.forward(np.column_stack([x, np.full(50, y)]))
        np.testing.assert_array_equal(z[:, 1], y)


def test_cylinder_jacobian_matches_fd(rng):
    p = _cyl_points(rng, 100)
    fd = dy.fd_jacobian(dy.cylinder_field)
    for t in (0.0, 1.3, 17.0):
        np.testing.assert_allclose(dy.cylinder_jacobian(p, t), fd(p, t), atol=1e-8)


# ---------------------------------------------------------------------------
# Cauchy-Green

def test_cauchy_green_identity_flow(rng):
    F = dy.ODEFlow(lambda p, t: np.zeros_like(p), 0.0, 1.0, C, steps=10)
    np.testing.assert_allclose(F.cauchy_green_inverse(_cyl_points(rng, 5)),
                               np.broadcast_to(np.eye(2), (5, 2, 2)), atol=1e-15)


@pytest.mark.parametrize("method", ["adjoint", "backward"])
def test_cauchy_green_shear(method):
    field = lambda p, t: np.stack([p[..., 1], np.zeros_like(p[..., 0])], axis=-1)
    F = dy.ODEFlow(field, 0.0, 1.0, dm.box((-10, -10), (10, 10)), steps=10, cg_method=method)
    pts = np.array([[0.3, 0.7], [-1.0, 2.0]])
    np.testing.assert_allclose(F.cauchy_green_inverse(pts), [[[2.0, -1.0], [-1.0, 1.0]]] * 2,
                               atol=1e-12)


def test_cauchy_green_interior_fd(rng):
    # interior points: the FD forward Jacobian is well resolved there
    F = dy.CylinderFlow()
    p = np.column_stack([rng.uniform(0, 2 * np.pi, 40), rng.uniform(0.3, np.pi - 0.3, 40)])
    J = fd_forward_jacobian(F, p, h=1e-7)
    ref = np.linalg.inv(np.swapaxes(J, 1, 2) @ J)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        got = F.cauchy_green_inverse(p)
    rel = np.linalg.norm(got - ref, axis=(1, 2)) / np.linalg.norm(ref, axis=(1, 2))
    # strongly stretched trajectories defeat the FD quotient itself; keep resolved points
    ok = np.linalg.cond(J) < 1e3
    assert ok.sum() >= 10
    assert np.max(rel[ok]) <= 1e-4


def test_cauchy_green_spd_at_boundary_nodes():
    F = dy.CylinderFlow()
    _, bd = dm.boundary_nodes(C, dm.regular_grid(C, (50, 50)))
    with pytest.warns(RuntimeWarning, match="nearly singular"):
        M = F.cauchy_green_inverse(bd.points)
    sym = np.abs(M - np.swapaxes(M, 1, 2)).max(axis=(1, 2)) / np.abs(M).max(axis=(1, 2))
    assert np.all(sym <= 1e-10)
    # the smallest eigenvalue is below double resolution of the largest, so positivity is
    # checked on the determinant form B B^T (diagonal > 0, |off| <= sqrt(a d))
    a, d, b = M[:, 0, 0], M[:, 1, 1], M[:, 0, 1]
    assert np.all(a > 0) and np.all(d > 0) and np.all(b * b <= a * d * (1 + 1e-12))


def test_adjoint_matches_inverse_forward_jacobian(rng):
    F = dy.CylinderFlow(tf=10.0)
    p = _cyl_points(rng, 30)
    _, Jf = dy.rk4_variational(F.field, F.jacobian, p, 0.0, 10.0, 400, C)
    _, B = dy.rk4_variational(F.field, F.jacobian, p, 0.0, 10.0, 400, C, adjoint=True)
    np.testing.assert_allclose(B @ Jf, np.broadcast_to(np.eye(2), (30, 2, 2)), atol=1e-5)


# ---------------------------------------------------------------------------
# volume

@pytest.mark.xfail(strict=True, reason="the forced cylinder flow has divergence "
                                       "eps sin(t/2) G'(g) dg/dx, so det D Phi ranges over 0.7-1.4")
def test_cylinder_volume_preserving(rng):
    F = dy.CylinderFlow()
    p = np.column_stack([rng.uniform(0, 2 * np.pi, 100), rng.uniform(0.05, np.pi - 0.05, 100)])
    J = fd_forward_jacobian(F, p)
    assert np.max(np.abs(np.abs(np.linalg.det(J)) - 1)) <= 1e-6


def test_unforced_cylinder_volume_preserving(rng):
    F = dy.CylinderFlow(forcing=0.0, steps=1600)
    p = np.column_stack([rng.uniform(0, 2 * np.pi, 100), rng.uniform(0.05, np.pi - 0.05, 100)])
    _, J = dy.rk4_variational(F.field, F.jacobian, p, 0.0, 40.0, 1600, C)
    assert np.max(np.abs(np.linalg.det(J) - 1)) <= 1e-6


# ---------------------------------------------------------------------------
# system registry

def test_make_system():
    assert isinstance(dy.make_system("standard_map"), dy.StandardMap)
    cf = dy.make_system("cylinder_flow", rk4_steps=200)
    assert cf.steps == 200 and cf.default_times() == [0.0, 40.0]
    assert dy.CylinderFlow().steps == 400
    assert dy.default_rk4_steps(0, 20) == 200
    with pytest.raises(ValueError):
        dy.make_system("lorenz")


def test_ode_flow_partial_times(rng):
    F = dy.CylinderFlow()
    p = _cyl_points(rng, 5)
    np.testing.assert_array_equal(F.forward(p, 0.0), p)
    assert F._steps_to(20.0) == 200
