from __future__ import annotations

from fractions import Fraction

import pytest

from oracle import coeffs_ref
from qreliable.coeffs import (balance_sum, coeffs, coeffs_countvector, coeffs_enumerate,
                              small_k3_closed_form)
from qreliable.errors import ArgumentError, ResourceError

F = Fraction


@pytest.mark.parametrize("q,k", [(2, 1), (2, 3), (2, 4), (3, 3), (3, 4), (4, 3), (3, 5), (5, 3)])
def test_enumeration_matches_independent_oracle(q, k):
    assert list(coeffs_enumerate(q, k).c) == coeffs_ref(q, k)


def test_published_examples():
    assert coeffs_enumerate(2, 3).c == (1, 1, 0, 0)
    assert coeffs_enumerate(3, 3).c == (1, F(5, 6), 0, 0)
    assert coeffs_enumerate(5, 3).c == (1, F(3, 4), 0, 0)
    assert coeffs_countvector(2, 5).c == (1, 1, 1, 0, 0, 0)


@pytest.mark.parametrize("q", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 3, 5, 7])
def test_countvector_equals_enumeration(q, k):
    assert coeffs_countvector(q, k) == coeffs_enumerate(q, k)


def test_countvector_equals_enumeration_q5_k5():
    assert coeffs_countvector(5, 5) == coeffs_enumerate(5, 5)


@pytest.mark.parametrize("q", range(2, 12))
def test_k3_closed_form(q):
    assert coeffs(q, 3).c == small_k3_closed_form(q)
    assert coeffs(q, 3).c[1] == 1 - F(q - 2, 3 * (q - 1))


@pytest.mark.parametrize("q,k", [(q, k) for q in (2, 3, 4, 5, 7) for k in (1, 2, 3, 4, 5, 6, 7)])
def test_structural_properties(q, k):
    t = coeffs(q, k)
    assert t.c[k] == 0  # all inputs correct never errs
    assert t.c[0] == 1  # no input correct always errs
    assert all(0 <= c <= 1 for c in t.c)
    assert all(a >= b for a, b in zip(t.c, t.c[1:]))  # more correct inputs never hurt
    assert all(t.c[l] == 1 for l in range(k + 1) if l * q < k)  # correct symbol cannot be a mode
    assert balance_sum(t) == F(q - 1, q)


def test_binary_coefficients_are_strict_majority():
    for k in (3, 5, 7, 9):
        t = coeffs(2, k)
        assert t.c == tuple(F(1) if l <= k // 2 else F(0) for l in range(k + 1))


def test_getitem_beyond_range_is_zero():
    t = coeffs(3, 3)
    assert t[4] == 0 and t[-1] == 0 and t[1] == F(5, 6)


def test_method_dispatch_and_errors():
    assert coeffs(3, 3, "both") == coeffs(3, 3, "enum")
    with pytest.raises(ArgumentError):
        coeffs(3, 3, "magic")
    with pytest.raises(ArgumentError):
        coeffs(3, 0)
    with pytest.raises(ResourceError, match="countvector"):
        coeffs_enumerate(20, 9)
