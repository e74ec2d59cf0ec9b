import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pcurvature.diffop import DiffOp

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SMALL_PRIMES = [3, 5, 7, 11, 13, 101]


def coeffs_of(f):
    return [int(c) for c in np.asarray(f)]


def random_poly(rng, deg, p, unit=False):
    f = [int(c) for c in rng.integers(0, p, deg + 1)]
    if unit and f[0] == 0:
        f[0] = 1
    return f


def random_op_coeffs(rng, r, d, p, regular=True):
    """Coefficient lists l_0..l_r with exact bidegree (d, r); l_r(0) != 0 when regular, l_r != 0 always."""
    co = [random_poly(rng, d, p) for _ in range(r + 1)]
    if regular and co[r][0] == 0:
        co[r][0] = int(rng.integers(1, p))
    if not any(co[r]):
        co[r][d] = int(rng.integers(1, p))
    if all(sum(c * t**i for i, c in enumerate(co[r])) % p == 0 for t in range(p)):
        co[r][0] = (co[r][0] + 1) % p  # keep some point of F_p where l_r does not vanish
    j = int(rng.integers(0, r + 1))
    if co[j][d] == 0:
        co[j][d] = int(rng.integers(1, p))
    return co


def random_op(rng, r, d, p, regular=True):
    return DiffOp.scalar(random_op_coeffs(rng, r, d, p, regular), p)


@st.composite
def poly_st(draw, p, max_deg=12, min_len=0):
    n = draw(st.integers(min_len, max_deg + 1))
    return np.array(draw(st.lists(st.integers(0, p - 1), min_size=n, max_size=n)), dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
