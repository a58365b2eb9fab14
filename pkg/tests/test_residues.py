import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fibermeasure.poly import MultiPoly, parse_poly
from fibermeasure.residues import LaurentRing, PadicRing, PolySystem


def test_laurent_codes():
    # codes are sum a_i q^i, so (1 + t)^2 = 1 + t^2 over F_2 is code 5
    ring = LaurentRing(2)
    sys = PolySystem([parse_poly("x0^2", 1)])
    assert int(np.asarray(ring.eval(sys, np.array([[3]]), 4))[0, 0]) == 5


def test_uniformizer_variable():
    ring = LaurentRing(3)
    sys = PolySystem([parse_poly("x0 + x1^2", 2)], tvar=1)
    # x0 = 1, t^2 = code 9
    assert int(np.asarray(ring.eval(sys, np.array([[1]]), 4))[0, 0]) == 1 + 9


@settings(max_examples=30)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.integers(-4, 4),
                       min_size=1, max_size=4), st.sampled_from([2, 3, 5]), st.integers(1, 2),
       st.booleans())
def test_padic_count_matches_enumeration(terms, p, N, sphere):
    f = MultiPoly(2, terms)
    ring = PadicRing(p)
    M = p ** N
    want = 0
    for x in itertools.product(range(M), repeat=2):
        if sphere and all(v % p == 0 for v in x):
            continue
        v = sum(int(c) * x[0] ** e[0] * x[1] ** e[1] for e, c in f.terms.items())
        want += v % M == 0
    assert ring.count_zeros(PolySystem([f]), N, sphere) == want
