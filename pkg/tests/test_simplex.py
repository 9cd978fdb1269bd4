from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qreliable.errors import ArgumentError, ModeError, UnsupportedError
from qreliable.simplex import (Decoded, Dist, Tie, apply_channel, as_exact, channel_array, decode,
                               float_tol, from_xy, same_mode, set_float_tol, symmetric_encode,
                               to_xy)

F = Fraction


def test_encode_examples():
    assert symmetric_encode(3, 0, 0).weights == (1, 0, 0)
    assert symmetric_encode(3, 1, F(2, 3)).weights == (F(1, 3),) * 3
    d = symmetric_encode(5, 2, 0.2)
    assert not d.exact
    assert d[2] == pytest.approx(0.8) and all(d[i] == pytest.approx(0.05) for i in (0, 1, 3, 4))


def test_encode_rejects_bad_arguments():
    with pytest.raises(ArgumentError):
        symmetric_encode(3, 3, 0.1)
    with pytest.raises(ArgumentError):
        symmetric_encode(3, 0, 1.5)
    with pytest.raises(ArgumentError):
        symmetric_encode(1, 0, 0)


def test_channel_examples():
    e0 = Dist.point(3, 0)
    assert apply_channel(e0, 0) == e0
    assert apply_channel(e0, F(1, 10)).weights == (F(9, 10), F(1, 20), F(1, 20))
    u = Dist.uniform(3)
    assert apply_channel(u, F(3, 7)) == u


def test_channel_at_mixing_strength_gives_uniform():
    for q in (2, 3, 5):
        d = Dist.of([F(1)] + [F(0)] * (q - 1))
        assert apply_channel(d, F(q - 1, q)) == Dist.uniform(q)


def test_exact_dist_validation():
    with pytest.raises(ArgumentError):
        Dist.of([F(1, 2), F(1, 3), F(1, 3)])
    with pytest.raises(ArgumentError):
        Dist.of([F(3, 2), F(-1, 2)])
    with pytest.raises(ModeError):
        Dist((0.5, F(1, 2)), True)


def test_float_tolerance_is_configurable():
    old = float_tol()
    try:
        Dist.of([0.5, 0.5 + 1e-10])
    except ArgumentError:
        pass
    else:
        pytest.fail("drift of 1e-10 accepted at default tolerance")
    set_float_tol(1e-8)
    try:
        Dist.of([0.5, 0.5 + 1e-10])
    finally:
        set_float_tol(old)
    with pytest.raises(ArgumentError):
        set_float_tol(0)


def test_mode_mixing_is_refused():
    with pytest.raises(ModeError):
        same_mode([Dist.uniform(3), Dist.uniform(3, exact=False)])
    with pytest.raises(ModeError):
        apply_channel(Dist.uniform(3), 0.1)
    with pytest.raises(ModeError):
        as_exact(0.1)
    assert as_exact("2/11") == F(2, 11)


def test_decode_examples():
    assert decode(Dist.of([0.5, 0.3, 0.2])) == Decoded(0)
    assert decode(Dist.of([0.4, 0.4, 0.2])) == Tie({0, 1})
    assert decode(Dist.uniform(3)) == Tie({0, 1, 2})
    assert repr(decode(Dist.of([0.5, 0.3, 0.2]))) == "Decoded(0)"
    assert decode(Dist.of([0.4, 0.4 - 1e-12, 0.2 + 1e-12]), tol=1e-9).is_tie
    with pytest.raises(ArgumentError):
        decode(Dist.uniform(3)).symbol


def test_xy_examples():
    assert to_xy(Dist.uniform(3)) == pytest.approx((0, 0), abs=1e-15)
    assert to_xy(Dist.point(3, 2)) == pytest.approx((0, -0.5))
    assert to_xy(Dist.of([F(1, 2), F(1, 2), 0])) == pytest.approx((0, 0.25))
    with pytest.raises(UnsupportedError):
        to_xy(Dist.uniform(4))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_xy_round_trip(w):
    p = np.array(w) / sum(w)
    d = Dist.of(p)
    back = from_xy(to_xy(d))
    assert back.close_to(d, 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7), st.fractions(0, 1), st.fractions(0, 1))
def test_channel_preserves_symmetric_encodings(q, a, eps):
    # the channel maps an a-noisy encoding to an (eps + (1 - q eps/(q-1)) a)-noisy one
    out = apply_channel(symmetric_encode(q, 0, a), eps)
    b = eps + (1 - q * eps / (q - 1)) * a
    assert out == symmetric_encode(q, 0, b)


def test_channel_array_renormalises():
    r = np.array([[0.5, 0.3, 0.2 + 1e-9]])
    out = channel_array(r, 0.1)
    assert abs(out.sum() - 1) < 1e-15
