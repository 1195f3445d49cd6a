import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bushtype.errors import ParseError, SizeMismatch
from bushtype.groupring import (
    GroupContext,
    GroupSubset,
    difference_counts,
    is_subgroup,
    parse_subset,
    reversible_witness,
    subgroup_span,
    translate,
    verify_difference_set,
    verify_reversible,
)

from oracles import convolution_counts, is_difference_set, tuple_elements

SMALL_GROUPS = [
    (),
    ((2, 1),),
    ((2, 2),),
    ((2, 4),),
    ((3, 1),),
    ((3, 2),),
    ((5, 1),),
    ((7, 1),),
    ((3, 1), (5, 1)),
    ((2, 1), (7, 1)),
]


def planted_16_6_2():
    """``x1 x2 + x3 x4 = 1`` in Z_2^4, read as K x Z_2^2."""
    ctx = GroupContext(((2, 2),))
    els = tuple_elements(ctx.digit_primes)
    members = [i for i, (a, b, c, d) in enumerate(els) if (a * b + c * d) % 2 == 1]
    return ctx, GroupSubset.from_elements(ctx, members)


@pytest.mark.parametrize("factors", SMALL_GROUPS)
def test_enumeration_matches_tuple_order(factors):
    ctx = GroupContext(factors)
    els = tuple_elements(ctx.digit_primes)
    assert len(els) == ctx.total_order
    for i, t in enumerate(els):
        k = t[0] | (t[1] << 1)
        assert ctx.element(k, t[2:]) == i
        assert ctx.coords(i) == (k, t[2:])


@pytest.mark.parametrize("factors", SMALL_GROUPS)
def test_group_arithmetic_matches_tuples(factors):
    ctx = GroupContext(factors)
    els = tuple_elements(ctx.digit_primes)
    moduli = (2, 2) + ctx.digit_primes
    idx = ctx.all_elements()
    S = ctx.sub(idx[:, None], idx[None, :])
    A = ctx.add(idx[:, None], idx[None, :])
    lookup = {t: i for i, t in enumerate(els)}
    for i, a in enumerate(els):
        for j, b in enumerate(els):
            assert S[i, j] == lookup[tuple((x - y) % m for x, y, m in zip(a, b, moduli))]
            assert A[i, j] == lookup[tuple((x + y) % m for x, y, m in zip(a, b, moduli))]
    split = ctx.split(idx)
    assert np.array_equal(ctx.sub_outer(split, split), S)


def test_planted_hadamard_difference_set():
    ctx, D = planted_16_6_2()
    assert D.size == 6
    assert verify_difference_set(D, 16, 6, 2).ok
    assert verify_reversible(D)
    for g in range(16):
        assert verify_difference_set(translate(D, g), 16, 6, 2).ok
    wrong = verify_difference_set(D, 16, 6, 3)
    assert not wrong.ok and "count=2" in wrong.witness


def test_trivial_difference_sets():
    ctx = GroupContext(((3, 2),))
    for g in (0, 5, 17):
        assert verify_difference_set(GroupSubset.from_elements(ctx, [g]), 36, 1, 0).ok
    full = GroupSubset(ctx, np.ones(36, dtype=bool))
    assert verify_difference_set(full, 36, 36, 36).ok
    k4 = GroupContext(())
    assert verify_difference_set(GroupSubset.from_elements(k4, [0, 1, 2]), 4, 3, 2).ok


def test_size_mismatch_raises():
    ctx, D = planted_16_6_2()
    with pytest.raises(SizeMismatch):
        verify_difference_set(D, 16, 7, 2)
    assert not verify_difference_set(D, 17, 6, 2).ok


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(SMALL_GROUPS), st.data())
def test_difference_counts_match_convolution_oracle(factors, data):
    ctx = GroupContext(factors)
    v = ctx.total_order
    k = data.draw(st.integers(0, min(12, v)))
    members = data.draw(st.lists(st.integers(0, v - 1), min_size=k, max_size=k, unique=True))
    S = GroupSubset.from_elements(ctx, members)
    els = tuple_elements(ctx.digit_primes)
    oracle = convolution_counts([els[i] for i in members], ctx.digit_primes)
    for chunk in (None, 1, 5):
        got = difference_counts(S, chunk=chunk)
        assert all(int(got[i]) == oracle.get(t, 0) for i, t in enumerate(els) if i)
        assert int(got[0]) == 0


def test_threads_do_not_change_counts(build3):
    a = difference_counts(build3.hds)
    b = difference_counts(build3.hds, threads=4)
    assert np.array_equal(a, b)


def test_reversible_and_translate():
    ctx = GroupContext(((3, 1),))
    S = GroupSubset.from_elements(ctx, [1, 2])
    assert verify_reversible(S)
    T = GroupSubset.from_elements(ctx, [1])
    assert not verify_reversible(T)
    assert reversible_witness(T) in (1, 2)
    moved = translate(T, ctx.element(2, [1]))
    assert moved.elements().tolist() == [ctx.element(2, [2])]


def test_subgroup_span_and_closure():
    ctx = GroupContext(((3, 2),))
    H = subgroup_span(ctx, [ctx.element(0, [1, 0]), ctx.element(1, [0, 0])])
    assert H.size == 6 and is_subgroup(H)
    assert not is_subgroup(GroupSubset.from_elements(ctx, [0, 1]))


def test_subset_text_roundtrip():
    ctx, D = planted_16_6_2()
    text = D.to_text(["hello"]) + "extra: 1 2\n"
    back, extra = parse_subset(text)
    assert back == D
    assert extra == {"extra": "1 2"}
    assert text.splitlines()[0] == "GSET v1 klein=4 w=2^2"


@pytest.mark.parametrize(
    "text",
    [
        "",
        "GSET v2\n",
        "GSET v1 klein=4 w=3\n",
        "GSET v1 klein=4 w=3^1\n0;9\n",
        "GSET v1 klein=4 w=3^1\n4;0\n",
        "GSET v1 klein=4 w=3^1\n0;1\n0;1\n",
        "GSET v1 klein=4 w=3^1\nnonsense\n",
    ],
)
def test_subset_parse_errors(text):
    with pytest.raises(ParseError):
        parse_subset(text)
