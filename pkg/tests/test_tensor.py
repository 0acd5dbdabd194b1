import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasakilab.expr import Chart, DomainError, parse_expr
from sasakilab.fixtures import fixture
from sasakilab.tensor import (LocalGeometry, MetricSpec, christoffel, cov_deriv, distance_estimate, fd_oracle_riemann,
                              geodesic_integrate, hessian, laplacian, lie_derivative, ricci, ricci_field, riemann,
                              riemann_field, scalar)

S2 = MetricSpec.from_strings(Chart(("th", "ph"), ((0.1, 3.0), (-3.0, 3.0))), [["1", "0"], ["", "sin(th)^2"]])

GENERIC = MetricSpec.from_strings(
    Chart(("x", "y", "z"), ((-1.0, 1.0),) * 3),
    [["1+x^2", "0.3*sin(x+z)", "0.1*y"],
     ["", "2+cos(y)", "0.2*x*z"],
     ["", "", "1+z^2/2+0.1*x"]],
)

point3 = st.tuples(*(st.floats(-0.8, 0.8) for _ in range(3))).map(np.array)


def test_two_sphere_christoffel_and_curvature():
    th = 1.0
    G = christoffel(S2, [th, 0.3]).components
    assert G[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th), abs=1e-14)
    assert G[1, 0, 1] == pytest.approx(G[1, 1, 0]) == pytest.approx(1 / math.tan(th), abs=1e-14)
    R = riemann(S2, [th, 0.3]).components
    # R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, R_ijkl = g(R(e_i,e_j)e_k, e_l)
    assert R[0, 1, 1, 0] == pytest.approx(math.sin(th) ** 2, abs=1e-14)
    assert R[0, 1, 0, 1] == pytest.approx(-math.sin(th) ** 2, abs=1e-14)
    assert scalar(S2, [th, 0.3]) == pytest.approx(2.0, abs=1e-13)


@pytest.mark.parametrize("name, R", [("sphere3", 6.0), ("sphere5", 20.0)])
def test_round_sphere_constant_curvature(name, R):
    metric = fixture(name).structure.metric
    rng = np.random.default_rng(3)
    for x in rng.uniform(-1.5, 1.5, size=(4, metric.dim)):
        g = metric.values(x)
        Rm = riemann(metric, x).components
        expected = np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g)
        assert np.allclose(Rm, expected, atol=1e-11 * np.max(np.abs(g)) ** 2)
        assert scalar(metric, x) == pytest.approx(R, abs=1e-9)


@settings(max_examples=15)
@given(point3)
def test_riemann_symmetries_and_bianchi(x):
    R = riemann(GENERIC, x).components
    assert np.allclose(R, -R.transpose(1, 0, 2, 3), atol=1e-11)
    assert np.allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-11)
    assert np.allclose(R, R.transpose(2, 3, 0, 1), atol=1e-11)
    assert np.allclose(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3), 0.0, atol=1e-11)
    dR = cov_deriv(riemann_field, GENERIC, x).components  # derivative slot first
    second = dR + np.einsum("abcde->bcade", dR) + np.einsum("abcde->cabde", dR)
    assert np.allclose(second, 0.0, atol=1e-9)


@settings(max_examples=10)
@given(point3)
def test_contracted_bianchi(x):
    ginv = np.linalg.inv(GENERIC.values(x))
    dRic = cov_deriv(ricci_field, GENERIC, x).components
    div = np.einsum("ai,aij->j", ginv, dRic)
    geo = LocalGeometry(GENERIC, x, order=3)
    dR = geo.grad(geo.scalar)[0, 0]
    assert np.allclose(div, 0.5 * dR, atol=1e-9)


@settings(max_examples=10)
@given(point3)
def test_hessian_symmetric_and_laplacian_trace(x):
    f = parse_expr("sin(x)*y+z^3", GENERIC.chart)
    H = hessian(f, GENERIC, x).components
    assert np.allclose(H, H.T, atol=1e-12)
    assert laplacian(f, GENERIC, x) == pytest.approx(np.trace(np.linalg.inv(GENERIC.values(x)) @ H), abs=1e-12)


def test_second_covariant_derivative_of_metric_vanishes():
    from sasakilab.tensor import metric_field
    x = [0.2, -0.1, 0.4]
    assert np.allclose(cov_deriv(metric_field, GENERIC, x, order=2).components, 0.0, atol=1e-12)


def test_ricci_identity_on_a_one_form():
    # nabla_a nabla_b w_c - nabla_b nabla_a w_c = -R_abc^d w_d under the stated convention
    x = [0.3, 0.1, -0.2]
    w = [parse_expr(s, GENERIC.chart) for s in ("y*z", "x^2", "sin(y)")]
    D2 = cov_deriv(w, GENERIC, x, order=2).components
    R = riemann(GENERIC, x).components
    ginv = np.linalg.inv(GENERIC.values(x))
    wv = np.array([0.1 * -0.2, 0.09, math.sin(0.1)])
    lhs = D2 - D2.transpose(1, 0, 2)
    rhs = -np.einsum("abcl,ld,d->abc", R, ginv, wv)
    assert np.allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("name", ["sphere3", "sphere5", "heisenberg3", "sphere3.dhom(2)"])
def test_jet_riemann_matches_finite_differences(name):
    metric = fixture(name).structure.metric
    x = np.full(metric.dim, 0.3)
    ad = riemann(metric, x).components
    fd = fd_oracle_riemann(metric, x, 1e-4).components
    assert np.max(np.abs(ad - fd)) <= 1e-5 * max(1.0, np.max(np.abs(ad)))


def test_fd_oracle_rejects_boundary_points():
    with pytest.raises(DomainError):
        fd_oracle_riemann(GENERIC, [1.0 - 1e-5, 0.0, 0.0], 1e-4)


def test_lie_derivative_of_reeb_field_vanishes():
    S = fixture("sphere3").structure
    x = [0.4, -0.3, 0.2]
    assert np.allclose(lie_derivative(S.metric, S.xi, x).components, 0.0, atol=1e-12)
    radial = [parse_expr(c, S.chart) for c in S.chart.names]
    assert np.max(np.abs(lie_derivative(S.metric, radial, x).components)) > 0.1


def test_great_circle_geodesic_on_sphere3():
    metric = fixture("sphere3").structure.metric
    # stereographic chart: g = 4/(1+|u|^2)^2 delta, so u(s) = tan(s/2) e1 from the origin
    path = geodesic_integrate(metric, [0, 0, 0], [0.5, 0, 0], length=2.0, steps=200)
    assert path.x[-1, 0] == pytest.approx(math.tan(1.0), abs=1e-8)
    assert np.allclose(path.speeds(), 1.0, atol=1e-8)
    assert np.max(path.equation_residual()[1:-1]) < 1e-3   # O(h^2) central differences, h = 0.01


def test_geodesic_requires_unit_speed_and_stays_in_box():
    metric = fixture("sphere3").structure.metric
    with pytest.raises(ValueError):
        geodesic_integrate(metric, [0, 0, 0], [1.0, 0, 0], length=1.0)
    with pytest.raises(DomainError):
        geodesic_integrate(metric, [0, 0, 0], [0.5, 0, 0], length=3.0)   # tan(1.5) > 2


@pytest.mark.parametrize("t", [0.3, 1.0])
def test_distance_on_sphere3_along_a_ray(t):
    metric = fixture("sphere3").structure.metric
    est = distance_estimate(metric, [0, 0, 0], [t, 0, 0], detail=True)
    assert est.converged and est.method == "shooting"
    assert est.value == pytest.approx(2 * math.atan(t), abs=1e-6)
    assert est.polyline_length >= 2 * math.atan(t) - 1e-9


def test_distance_polyline_is_an_upper_bound():
    metric = fixture("sphere3").structure.metric
    x, y = np.array([0.4, -0.2, 0.1]), np.array([-0.3, 0.5, -0.6])
    # chordal distance on the unit sphere image bounds the geodesic distance below
    def embed(u):
        s = u @ u
        return np.append(2 * u, 1 - s) / (1 + s)
    chord = np.linalg.norm(embed(x) - embed(y))
    true = 2 * math.asin(chord / 2)
    est = distance_estimate(metric, x, y, detail=True)
    assert est.value == pytest.approx(true, abs=1e-6)
    assert est.polyline_length >= true - 1e-9
    assert distance_estimate(metric, x, x) == 0.0
