import numpy as np
import pytest
from hypothesis import given, strategies as st

from lfmaxwell.mesh import MeshError, from_triangles, generate_structured, load_mesh, mesh_stats, save_mesh


@given(st.integers(min_value=1, max_value=12))
def test_structured_counts(n):
    m = generate_structured(n)
    assert m.n_vertices == (n + 1) ** 2
    assert m.n_triangles == 2 * n * n
    assert m.n_edges == 3 * n * n + 2 * n
    assert m.euler_characteristic() == 1
    assert len(m.boundary_edges) == 4 * n
    assert len(m.boundary_vertices) == 4 * n
    assert np.all(m.signed_areas() > 0)
    assert np.isclose(m.signed_areas().sum(), 1.0)


def test_h_is_diagonal():
    assert generate_structured(4).h == pytest.approx(np.sqrt(2) / 4)


@pytest.mark.parametrize("n", [0, -1, 2.5, True])
def test_bad_n(n):
    with pytest.raises(ValueError):
        generate_structured(n)


def test_edge_orientation_and_signs():
    m = generate_structured(3)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    for t in range(m.n_triangles):
        for k, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
            va, vb = m.triangles[t, a], m.triangles[t, b]
            e = m.edges[m.tri_edges[t, k]]
            assert {va, vb} == set(e)
            assert m.tri_edge_signs[t, k] == (1 if va < vb else -1)


def test_interior_edges_opposite_signs():
    # each interior edge is traversed in opposite directions by its two triangles
    m = generate_structured(4)
    total = np.zeros(m.n_edges)
    np.add.at(total, m.tri_edges.ravel(), m.tri_edge_signs.ravel())
    interior = np.setdiff1d(np.arange(m.n_edges), m.boundary_edges)
    assert np.all(total[interior] == 0)
    assert np.all(np.abs(total[m.boundary_edges]) == 1)


def test_clockwise_reoriented(caplog):
    v = [[0, 0], [1, 0], [0, 1]]
    m = from_triangles(v, [[0, 2, 1]])
    assert m.signed_areas()[0] > 0
    assert "reoriented" in caplog.text


def test_arrays_readonly():
    m = generate_structured(1)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


def test_degenerate():
    with pytest.raises(MeshError, match="degenerate"):
        from_triangles([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])


def test_dangling_vertex():
    with pytest.raises(MeshError, match="dangling"):
        from_triangles([[0, 0], [1, 0], [0, 1], [5, 5]], [[0, 1, 2]])


def test_index_out_of_range():
    with pytest.raises(MeshError):
        from_triangles([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])


def test_annulus_rejected():
    # square ring of 8 triangles has a hole
    v = [[0, 0], [3, 0], [3, 3], [0, 3], [1, 1], [2, 1], [2, 2], [1, 2]]
    t = [[0, 1, 5], [0, 5, 4], [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7]]
    with pytest.raises(MeshError, match="simply connected"):
        from_triangles(v, t)
    assert from_triangles(v, t, check_topology=False).euler_characteristic() == 0


def test_roundtrip(tmp_path):
    m = generate_structured(3)
    save_mesh(m, tmp_path / "sq")
    m2 = load_mesh(tmp_path / "sq.node")
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)


def test_triangle_format_zero_based_with_comments(tmp_path):
    (tmp_path / "t.node").write_text("# nodes\n4 2 0 0\n0 0 0\n1 1 0  # corner\n2 1 1\n3 0 1\n")
    (tmp_path / "t.ele").write_text("2 3 0\n0 0 1 2\n1 0 2 3\n")
    m = load_mesh(tmp_path / "t")
    assert m.n_triangles == 2 and m.n_edges == 5


def test_missing_file(tmp_path):
    with pytest.raises(MeshError, match="not found"):
        load_mesh(tmp_path / "nothing")


def test_stats():
    s = mesh_stats(generate_structured(2))
    assert s["min_angle_deg"] == pytest.approx(45.0)
    assert s["euler_characteristic"] == 1
