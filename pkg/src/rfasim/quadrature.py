"""Symmetric Gauss rules on the reference triangle.

Rules are stored in barycentric coordinates with weights normalized to sum
to one, so the integral of f over a physical triangle K is

    area(K) * sum_q w_q * f(x_q).

Available degrees: 1, 2, 4, 6 (requests in between round up).
"""

import numpy as np


def _perm3(a):
    return [(1.0 - 2.0 * a, a, a), (a, 1.0 - 2.0 * a, a), (a, a, 1.0 - 2.0 * a)]


def _perm6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


_CENTROID = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]

# Dunavant rule tables; weights sum to 1.
_RULES = {
    1: (np.array(_CENTROID), np.array([1.0])),
    2: (
        np.array(_perm3(1.0 / 6.0)),
        np.full(3, 1.0 / 3.0),
    ),
    4: (
        np.array(_perm3(0.445948490915965) + _perm3(0.091576213509771)),
        np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    ),
    6: (
        np.array(
            _perm3(0.063089014491502)
            + _perm3(0.249286745170910)
            + _perm6(0.310352451033785, 0.053145049844816)
        ),
        np.array(
            [0.050844906370207] * 3
            + [0.116786275726379] * 3
            + [0.082851075618374] * 6
        ),
    ),
}


def triangle_rule(degree):
    """Return (points, weights) exact for polynomials up to ``degree``.

    Parameters
    ----------
    degree : int
        Requested polynomial exactness, 1 <= degree <= 6.

    Returns
    -------
    points : (nq, 3) ndarray of barycentric coordinates.
    weights : (nq,) ndarray summing to 1.
    """
    if degree < 1 or degree > 6:
        raise ValueError("no triangle rule for degree %r" % (degree,))
    for d in (1, 2, 4, 6):
        if degree <= d:
            pts, w = _RULES[d]
            return pts.copy(), w.copy()
    raise AssertionError
