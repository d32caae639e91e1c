"""Fixed symmetric quadrature rules on the reference triangle.

Points are barycentric triples and weights sum to one, so a physical integral
is ``area * sum(w * f(x_q))``. Rule parameters are the classical Dunavant
orbits, polished to double precision against the monomial moments.
"""

from itertools import permutations

import numpy as np

_ORBITS = {
    4: [
        ("s2", 0.22338158967801136, 0.44594849091596483),
        ("s2", 0.10995174365532195, 0.09157621350977077),
    ],
    6: [
        ("s2", 0.11678627572641208, 0.24928674517089164),
        ("s2", 0.0508449063702126, 0.06308901449150647),
        ("s3", 0.08285107561835432, 0.05314504984480308, 0.31035245103379877),
    ],
    8: [
        ("c", 0.144315607677787),
        ("s2", 0.095091634267285, 0.459292588292723),
        ("s2", 0.103217370534718, 0.17056930775176),
        ("s2", 0.032458497623198, 0.050547228317031),
        ("s3", 0.027230314174435, 0.008394777409958, 0.263112829634638),
    ],
}


def _expand(orbits):
    pts, wts = [], []
    for orbit in orbits:
        kind, w = orbit[0], orbit[1]
        if kind == "c":
            group = [(1 / 3, 1 / 3, 1 / 3)]
        elif kind == "s2":
            a = orbit[2]
            group = sorted(set(permutations((a, a, 1 - 2 * a))))
        else:
            a, b = orbit[2], orbit[3]
            group = sorted(set(permutations((a, b, 1 - a - b))))
        pts.extend(group)
        wts.extend([w] * len(group))
    return np.array(pts), np.array(wts)


TRIANGLE_RULES = {deg: _expand(orbits) for deg, orbits in _ORBITS.items()}


def triangle_rule(degree: int):
    """Smallest tabulated symmetric rule exact for polynomials of ``degree``."""
    for deg in sorted(TRIANGLE_RULES):
        if deg >= degree:
            return TRIANGLE_RULES[deg]
    raise ValueError(f"no triangle rule of degree {degree}; maximum is {max(TRIANGLE_RULES)}")


def line_rule(npts: int):
    """Gauss-Legendre on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w
