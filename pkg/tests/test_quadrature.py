from math import factorial

import numpy as np
import pytest

from lfmaxwell.quadrature import TRIANGLE_RULES, line_rule, triangle_rule


def _exact(a, b, c):
    # integral of l0^a l1^b l2^c over the reference simplex, normalised by its area
    return 2 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


@pytest.mark.parametrize("degree", sorted(TRIANGLE_RULES))
def test_exact_to_degree(degree):
    pts, wts = TRIANGLE_RULES[degree]
    assert np.all(wts > 0) and np.all(pts >= 0)
    assert np.allclose(pts.sum(axis=1), 1.0)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            c = degree - a - b
            q = np.sum(wts * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c)
            assert q == pytest.approx(_exact(a, b, c), abs=1e-14)


def test_rule_selection():
    assert len(triangle_rule(3)[1]) == 6
    assert len(triangle_rule(5)[1]) == 12
    with pytest.raises(ValueError):
        triangle_rule(20)


def test_line_rule():
    x, w = line_rule(3)
    assert w.sum() == pytest.approx(1.0)
    assert np.sum(w * x**5) == pytest.approx(1 / 6)
