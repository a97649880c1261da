import numpy as np
import pytest

from fixorder import BENCHMARK, Controller, Poly

# sqrt(15) to 35 digits
SQRT15 = 3.8729833462074168851792653997823996
# z* = -sqrt(15)/5
ZSTAR = -0.77459666924148337703585307995647992

# controller clustering all six benchmark poles at z*:
# x = 7 + (6 sqrt15/5) s + s^2,  y = 27/125 + (54 sqrt15/125) s - (43/5) s^2
X1 = 4.6475800154489002622151184797388795  # 6 sqrt15 / 5
Y1 = 1.6731288055616040943974426527059966  # 54 sqrt15 / 125
XYSTAR_THETA = np.array([7.0, X1, 27 / 125, Y1, -43 / 5])

# (s - z*)^6 = s^6 + (6 sqrt15/5) s^5 + 9 s^4 + (12 sqrt15/5) s^3 + (27/5) s^2
#              + (54 sqrt15/125) s + 27/125
PXYSTAR_COEFFS = [27 / 125, Y1, 27 / 5, 9.2951600308978005244302369594777591, 9.0, X1, 1.0]


@pytest.fixture
def xystar():
    return Controller.from_params(2, XYSTAR_THETA)


@pytest.fixture
def pxystar():
    return Poly(PXYSTAR_COEFFS)


@pytest.fixture
def benchmark():
    return BENCHMARK


def multiset_match(a, b):
    """Max distance after greedy nearest matching of two root multisets."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    worst = 0.0
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b[j]))
        b.pop(j)
    return worst
