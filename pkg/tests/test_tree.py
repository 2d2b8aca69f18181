import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accperc.errors import CapacityError, ConfigError
from accperc.tree import (
    Explicit,
    Factorial,
    Homogeneous,
    HorizonError,
    LinearCeil,
    VaryingLinear,
    embed,
    growth_from_dict,
    materialize,
    parse_growth,
)

growths = st.one_of(
    st.builds(LinearCeil, st.floats(0.1, 4.0)),
    st.builds(VaryingLinear, st.lists(st.integers(1, 4), min_size=12, max_size=12)),
    st.just(Factorial()),
    st.builds(Homogeneous, st.integers(2, 5)),
    st.builds(Explicit, st.lists(st.integers(1, 6), min_size=12, max_size=12)),
)


def test_children_examples():
    assert Factorial().children(3) == 4
    assert LinearCeil(1.5).children(0) == 2
    assert VaryingLinear([2, 3]).children(1) == 6
    assert Homogeneous(3).children(7) == 3
    assert Explicit([2, 4, 6]).children(2) == 6


def test_linear_ceil_uses_decimal_alpha():
    # 3 * 1.1 rounds above 3.3 in binary; the ceiling must still be 4
    assert LinearCeil(1.1).children(2) == 4
    assert [LinearCeil(1.1).children(i) for i in range(10)] == [math.ceil(k * 11 / 10) for k in range(1, 11)]


def test_level_sizes():
    assert Factorial().level_size(4) == 24
    assert LinearCeil(2).level_size(3) == 48
    assert all(g.level_size(0) == 1 for g in (Factorial(), Homogeneous(2), LinearCeil(0.5)))
    # exact beyond machine integers
    assert Factorial().level_size(30) == math.factorial(30)
    assert Factorial().log_level_size(30) == pytest.approx(math.lgamma(31), rel=1e-12)


def test_invalid_growths():
    with pytest.raises(ConfigError):
        LinearCeil(0)
    with pytest.raises(ConfigError):
        Homogeneous(1)
    with pytest.raises(ConfigError):
        VaryingLinear([])
    with pytest.raises(ConfigError):
        Explicit([1, 0])
    with pytest.raises(HorizonError):
        Explicit([2, 3]).children(2)
    with pytest.raises(IndexError):
        VaryingLinear([2]).level_size(2)


def test_json_round_trip():
    specs = [
        {"kind": "linear_ceil", "alpha": 1.5},
        {"kind": "varying", "alphas": [2, 3, 2]},
        {"kind": "factorial"},
        {"kind": "homogeneous", "d": 3},
        {"kind": "explicit", "children": [2, 4, 6]},
    ]
    for spec in specs:
        g = growth_from_dict(spec)
        assert g.to_dict() == spec
        assert parse_growth(json.dumps(spec)) == g
        assert parse_growth(g.to_json()) == g
    with pytest.raises(ConfigError):
        parse_growth('{"kind": "binary"}')
    with pytest.raises(ConfigError):
        parse_growth("not json")


def test_integer_alpha_agrees_with_varying():
    a = LinearCeil(3)
    v = VaryingLinear([3] * 20)
    assert list(a.children_array(20)) == list(v.children_array(20))


@settings(max_examples=60, deadline=None)
@given(growths, st.integers(0, 10))
def test_level_size_recurrence(g, n):
    assert g.level_size(n + 1) == g.level_size(n) * g.children(n)
    assert g.children(n) >= 1


@settings(max_examples=40, deadline=None)
@given(growths, st.integers(0, 4))
def test_materialize_level_sizes(g, depth):
    try:
        t = materialize(g, depth, size_cap=50_000)
    except CapacityError:
        return
    assert t.level_sizes == tuple(g.level_size(n) for n in range(depth + 1))
    assert t.n_vertices == sum(g.level_size(n) for n in range(depth + 1))
    for n in range(1, depth + 1):
        par = t.parents[n]
        assert par.size == t.level_sizes[n]
        assert par.min() >= 0 and par.max() < t.level_sizes[n - 1]
        assert np.all(np.bincount(par, minlength=t.level_sizes[n - 1]) == g.children(n - 1))


def test_materialize_examples():
    assert materialize(Homogeneous(2), 3).n_vertices == 15
    assert materialize(Factorial(), 3).level_sizes == (1, 1, 2, 6)
    root_only = materialize(LinearCeil(2), 0)
    assert root_only.level_sizes == (1,) and root_only.n_vertices == 1
    with pytest.raises(CapacityError, match="level 3"):
        materialize(Homogeneous(10), 3, size_cap=500)
    with pytest.raises(ConfigError):
        materialize(Factorial(), -1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(0, 3)), min_size=3, max_size=3))
def test_embedding_preserves_parenthood(pairs):
    small = Explicit([a for a, _ in pairs])
    big = Explicit([a + b for a, b in pairs])
    assert small.dominated_by(big, 3)
    ts, tb = materialize(small, 3), materialize(big, 3)
    m = embed(ts, tb)
    for n in range(1, 4):
        assert np.unique(m[n]).size == m[n].size
        # parent of the image is the image of the parent
        assert np.array_equal(tb.parents[n][m[n]], m[n - 1][ts.parents[n]])
        # images are the first children of each image parent
        c2 = big.children(n - 1)
        assert np.all(m[n] % c2 < small.children(n - 1))


def test_embed_rejects_non_nested():
    with pytest.raises(ConfigError):
        embed(materialize(Homogeneous(3), 2), materialize(Homogeneous(2), 2))
