import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfmaxwell.feec import (
    PointLocationError, build_complex, dump_matrices, error_norm, eval_field, locate_points, project_L2,
)
from lfmaxwell.mesh import generate_structured
from lfmaxwell.problems import example1
from lfmaxwell.quadrature import triangle_rule

RNG = np.random.default_rng(7)
BARY = np.array([[0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3], [0.7, 0.1, 0.2], [0.05, 0.9, 0.05]])


def _poly_u(x):
    X, Y = x[..., 0], x[..., 1]
    return 1 + 2 * X - Y + 3 * X * Y - X**2 + 0.5 * Y**2


def _poly_grad(x):
    X, Y = x[..., 0], x[..., 1]
    return np.stack([2 + 3 * Y - 2 * X, -1 + 3 * X + Y], axis=-1)


@pytest.mark.parametrize("r,n,dims", [(1, 2, (9, 16, 8)), (2, 1, (9, 14, 6)), (1, 1, (4, 5, 2))])
def test_dims(complex_factory, r, n, dims):
    assert complex_factory(n, r).dims == dims


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_complex_property(complex_factory, n):
    assert np.abs((complex_factory(n, 1).D1 @ complex_factory(n, 1).D0).toarray()).max() == 0.0
    assert np.abs((complex_factory(n, 2).D1 @ complex_factory(n, 2).D0).toarray()).max() <= 1e-13


@pytest.mark.parametrize("r", [1, 2])
def test_masses_spd(complex_factory, r):
    c = complex_factory(3, r)
    for M in (c.M_U, c.M_V, c.M_W):
        A = M.toarray()
        assert np.abs(A - A.T).max() == 0.0
        assert np.linalg.eigvalsh(A).min() > 0


@pytest.mark.parametrize("r", [1, 2])
def test_gradient_exactness(complex_factory, r):
    c = complex_factory(3, r)
    u = RNG.standard_normal(c.ndof["U"])
    assert np.allclose(c.values("V", c.D0 @ u, BARY), c.values("U", u, BARY, derivative=True), atol=1e-11)


@pytest.mark.parametrize("r", [1, 2])
def test_curl_exactness(complex_factory, r):
    c = complex_factory(3, r)
    e = RNG.standard_normal(c.ndof["V"])
    assert np.allclose(c.values("W", c.D1 @ e, BARY), c.values("V", e, BARY, derivative=True), atol=1e-10)


def test_whitney_reproduction(complex_factory):
    c = complex_factory(3, 1)
    lin = lambda x: 0.3 + x[..., 0] - 2 * x[..., 1]  # noqa: E731
    rot = lambda x: np.stack([0.5 - x[..., 1], 2.0 + x[..., 0]], axis=-1)  # noqa: E731
    assert error_norm(c, "U", c.interpolate("U", lin), lin) < 1e-13
    assert error_norm(c, "V", c.interpolate("V", rot), rot) < 1e-13
    assert error_norm(c, "W", c.interpolate("W", lambda x: 0 * x[..., 0] + 4.0), lambda x: 0 * x[..., 0] + 4.0) < 1e-13


def test_quadratic_reproduction(complex_factory):
    c = complex_factory(2, 2)
    lin_vec = lambda x: np.stack([1 + x[..., 0] - x[..., 1], 2 * x[..., 1] - 3 * x[..., 0]], axis=-1)  # noqa: E731
    lin = lambda x: 1 + x[..., 0] + 5 * x[..., 1]  # noqa: E731
    assert error_norm(c, "U", c.interpolate("U", _poly_u), _poly_u) < 1e-13
    assert error_norm(c, "V", c.interpolate("V", lin_vec), lin_vec) < 1e-13
    assert error_norm(c, "W", c.interpolate("W", lin), lin) < 1e-12
    assert error_norm(c, "V", c.interpolate("V", _poly_grad), _poly_grad) < 1e-13


def test_commuting_interpolants_r1(complex_factory):
    c = complex_factory(4, 1)
    u = lambda x: np.sin(2 * x[..., 0] + 0.3) * np.exp(x[..., 1])  # noqa: E731
    gu = lambda x: np.stack([2 * np.cos(2 * x[..., 0] + 0.3), np.sin(2 * x[..., 0] + 0.3)], -1) * np.exp(x[..., 1])[..., None]  # noqa: E501,E731
    assert np.abs(c.D0 @ c.interpolate("U", u) - c.interpolate("V", gu)).max() < 1e-9


def test_commuting_interpolants_r2_polynomial(complex_factory):
    c = complex_factory(3, 2)
    assert np.abs(c.D0 @ c.interpolate("U", _poly_u) - c.interpolate("V", _poly_grad)).max() < 1e-12


@pytest.mark.parametrize("r", [1, 2])
def test_projection_idempotent(complex_factory, r):
    c = complex_factory(2, r)
    for space in ("U", "V", "W"):
        x = RNG.standard_normal(c.ndof[space])
        y = project_L2(c, space, lambda pts, x=x, space=space: _piecewise(c, space, x))
        assert np.allclose(x, y, atol=1e-10)


def _piecewise(c, space, coeffs):
    # load_vector samples at the degree-8 points of every triangle, in this layout
    bq, _ = triangle_rule(8)
    return c.values(space, coeffs, bq)


def test_interior_projection_zero_boundary(complex_factory):
    c = complex_factory(4, 2)
    E0 = lambda x: example1().E(x, 0.0)  # noqa: E731
    e = project_L2(c, "V", E0, subspace="interior")
    assert np.all(e[c.boundary["V"]] == 0)
    assert np.abs(c.interpolate("V", E0)[c.boundary["V"]]).max() < 1e-14


def test_pinned_projection(complex_factory):
    c = complex_factory(3, 1)
    g = c.interpolate("U", _poly_u)
    p = project_L2(c, "U", _poly_u, boundary_values=g)
    assert np.array_equal(p[c.boundary["U"]], g[c.boundary["U"]])
    with pytest.raises(ValueError):
        project_L2(c, "U", _poly_u, subspace="bogus")


@settings(deadline=None, max_examples=25)
@given(st.floats(0, 1), st.floats(0, 1))
def test_eval_field_matches_polynomial(x, y):
    c = build_complex(generate_structured(3), 2)
    pt = np.array([[x, y]])
    assert eval_field(c, "U", c.interpolate("U", _poly_u), pt)[0] == pytest.approx(_poly_u(pt)[0], abs=1e-12)
    v = eval_field(c, "U", c.interpolate("U", _poly_u), pt, derivative=True)[0]
    assert np.allclose(v, _poly_grad(pt)[0], atol=1e-11)


def test_locate_outside(complex_factory):
    with pytest.raises(PointLocationError):
        locate_points(complex_factory(2, 1), np.array([[1.5, 0.5]]))


def test_error_norm_weight(complex_factory):
    c = complex_factory(2, 1)
    z = np.zeros(c.ndof["W"])
    one = lambda x: np.ones(x.shape[:-1])  # noqa: E731
    assert error_norm(c, "W", z, one) == pytest.approx(1.0)
    assert error_norm(c, "W", z, one, weight=4.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        error_norm(c, "W", z, one, weight=0.0)


def test_values_shape_check(complex_factory):
    with pytest.raises(ValueError):
        complex_factory(2, 1).values("U", np.zeros(3), BARY)


def test_dump_matrices(complex_factory, tmp_path):
    import scipy.io
    c = complex_factory(2, 2)
    dump_matrices(c, tmp_path)
    D0 = scipy.io.mmread(str(tmp_path / "D0.mtx"))
    assert np.allclose(D0.toarray(), c.D0.toarray())
