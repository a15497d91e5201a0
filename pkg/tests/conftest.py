import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spherical_dpw import laurent as lm

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_twisted(rng, degree=4, scale=0.5, batch=()):
    """Random twisted loop with exponents in [-degree, degree] and det 1 on the circle.

    Built as a product of elementary twisted factors exp-like in shape, so the
    determinant is exactly 1: upper/lower unipotent off-diagonal odd terms and a
    diagonal constant.
    """
    terms = {0: np.eye(2, dtype=complex)}
    L = lm.LaurentMatrix.from_terms(terms, twisted=True)
    for k in range(degree):
        n = 2 * (k // 2) + 1  # odd exponents 1, 1, 3, 3, ...
        sign = 1 if k % 2 == 0 else -1
        c = scale * (rng.normal() + 1j * rng.normal())
        m = np.eye(2, dtype=complex)
        if rng.random() < 0.5:
            m[0, 1] = c
        else:
            m[1, 0] = c
        E = lm.LaurentMatrix.from_terms({0: np.eye(2), sign * n: m - np.eye(2)}, twisted=True)
        L = lm.multiply(L, E, n_trunc=64)
    d = np.exp(rng.normal() * 0.3 + 1j * rng.normal())
    D = lm.LaurentMatrix.from_terms({0: np.diag([d, 1 / d])}, twisted=True)
    return lm.multiply(L, D, n_trunc=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sphere_loop(z=1.0):
    return lm.LaurentMatrix.from_terms({-1: [[0, z], [0, 0]], 0: np.eye(2)}, twisted=True)


def sphere_closed_form(z=1.0):
    s = 1 / np.sqrt(1 + abs(z) ** 2)
    F = lm.LaurentMatrix.from_terms({-1: [[0, s * z], [0, 0]], 0: s * np.eye(2),
                                     1: [[0, 0], [-s * np.conj(z), 0]]}, twisted=True)
    B = lm.LaurentMatrix.from_terms({0: [[s, 0], [0, s * (1 + abs(z) ** 2)]],
                                     1: [[0, 0], [s * np.conj(z), 0]]}, twisted=True)
    return F, B
