import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffprep import classical as cl

NAMES = ["m0", "m1", "m2", "m3"]


def exprs():
    leaves = st.one_of(st.sampled_from(NAMES).map(cl.Bit), st.integers(0, 1).map(cl.Const))

    def extend(children):
        nary = st.lists(children, min_size=1, max_size=3).map(tuple)
        return st.one_of(
            children.map(cl.Not),
            nary.map(cl.Xor),
            nary.map(cl.And),
            nary.map(cl.Or),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(exprs())
def test_parse_round_trip(e):
    back = cl.parse(str(e))
    assert str(back) == str(e)
    for vals in itertools.product((0, 1), repeat=len(NAMES)):
        env = dict(zip(NAMES, vals))
        assert back.evaluate(env) == e.evaluate(env)


def test_parity_cancels_pairs_and_folds_constants():
    assert cl.parity(["m0", "m0"]) == cl.Const(0)
    assert str(cl.parity(["m0", cl.const(1)])) == "~m0"
    e = cl.parity(["m0", "m1", cl.Bit("m0"), "m2"])
    assert e.bits() == frozenset({"m1", "m2"})


def test_lookup_table_index_order():
    e = cl.lookup(["a", "b"], lambda bits: bits[0] & (1 - bits[1]))
    assert e.evaluate({"a": 1, "b": 0}) == 1
    assert e.evaluate({"a": 0, "b": 1}) == 0
    assert cl.parse(str(e)) == e


def test_lookup_constant_tables_fold():
    assert cl.lookup(["a"], lambda b: 0) == cl.Const(0)
    assert cl.lookup(["a"], lambda b: 1) == cl.Const(1)


def test_bits_cached_consistently():
    e = cl.Xor((cl.Bit("a"), cl.And((cl.Bit("b"), cl.Not(cl.Bit("c"))))))
    assert e.bits() == frozenset("abc")
    assert e.bits() is e.bits()


@pytest.mark.parametrize("bad", ["", "(a^b", "(a^b&c)", "(a?b)", "$"])
def test_parse_errors(bad):
    with pytest.raises(cl.ParseError):
        cl.parse(bad)
