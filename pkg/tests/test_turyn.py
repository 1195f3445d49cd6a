import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bushtype.errors import CertificateMismatch, FactorizationError, MixedGroups
from bushtype.groupring import GroupContext, verify_reversible
from bushtype.hds import build_blocks, find_P, find_Q, verify_hds, verify_subgroup
from bushtype.turyn import (
    arrange_as_E1,
    arrange_as_E2,
    compose,
    factor_schedule,
    nabla,
    nabla_size,
    small_large,
    verify_composed_sizes,
)

from oracles import nabla_predicate

@settings(max_examples=200, deadline=None)
@given(st.data())
def test_nabla_matches_definition(data):
    n1 = data.draw(st.integers(1, 10))
    n2 = data.draw(st.integers(1, 10))
    A, B = (np.array(data.draw(st.lists(st.booleans(), min_size=n1, max_size=n1))) for _ in range(2))
    C, D = (np.array(data.draw(st.lists(st.booleans(), min_size=n2, max_size=n2))) for _ in range(2))
    got = nabla(A, B, C, D)
    assert np.array_equal(got, nabla_predicate(A, B, C, D))
    assert int(got.sum()) == nabla_size(A, B, C, D)

def test_nabla_mixed_groups():
    with pytest.raises(MixedGroups):
        nabla(np.ones(3, bool), np.ones(4, bool), np.ones(2, bool), np.ones(2, bool))
    with pytest.raises(MixedGroups):
        nabla(np.ones(3, bool), np.ones(3, bool), np.ones(2, bool), np.ones(5, bool))

def test_factor_schedule():
    assert factor_schedule(3) == [3]
    assert factor_schedule(9) == [3, 3]
    assert factor_schedule(15) == [5, 3]
    assert factor_schedule(45) == [5, 3, 3]
    for bad in (1, 4, 0, -3):
        with pytest.raises(FactorizationError):
            factor_schedule(bad)

def test_small_large():
    assert small_large(9) == (36, 45)
    assert small_large(81) == (3240, 3321)

def test_arrangements_at_p3(cert3):
    blocks = build_blocks(cert3)
    E1 = arrange_as_E1(blocks, find_Q(cert3, blocks))
    E2 = arrange_as_E2(blocks, find_P(cert3, blocks))
    assert [int(b.sum()) for b in E1.blocks] == [36, 36, 36, 45]
    assert [int(b.sum()) for b in E2.blocks] == [45, 36, 36, 36]
    with pytest.raises(TypeError):
        arrange_as_E2(blocks)
    with pytest.raises(CertificateMismatch):
        compose(E2, E1)

def test_wrong_subgroup_is_rejected(cert3):
    blocks = build_blocks(cert3)
    with pytest.raises(CertificateMismatch):
        arrange_as_E1(blocks, find_P(cert3, blocks))

def test_composition_m9(build9):
    r = build9
    assert r.hds.ctx == GroupContext(((3, 4), (3, 4)))
    assert r.subgroup.order == 81
    assert r.klein_pair == (2, 3)
    assert [int(b.sum()) for b in r.blocks] == [3321, 3240, 3240, 3240]
    assert verify_composed_sizes(r.blocks, 81).ok
    assert verify_subgroup(r.subgroup, r.blocks, 81).ok
    assert r.checks.ok
    assert verify_reversible(r.hds)

def test_composition_m15_sizes_and_certificates():
    from conftest import certificate
    from bushtype.turyn import build_for_m

    r = build_for_m(15, certificate)
    assert r.hds.ctx.total_order == 4 * 15**4
    small, large = small_large(225)
    assert [int(b.sum()) for b in r.blocks] == [large, small, small, small]
    assert r.hds.size == 2 * 225**2 - 225
    assert r.subgroup.order == 225
    assert verify_subgroup(r.subgroup, r.blocks, 225).ok

def test_composed_prime3_pair_is_hds(cert3):
    # m = 9 is the smallest composite; compose E1 = E2 = prime-3 blocks and count pairs exactly
    blocks = build_blocks(cert3)
    E1 = arrange_as_E1(blocks, find_Q(cert3, blocks))
    E2 = arrange_as_E2(blocks, find_P(cert3, blocks))
    C = compose(E1, E2)
    assert C.side_markers == ("large", "small", "small", "small")
    assert verify_hds(C.subset(), 81).ok
    # composing again (as E2) is legal
    arrange_as_E2(C)


def test_nabla_complement_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A, B = rng.random((2, 81)) < 0.5
        C, D = rng.random((2, 81)) < 0.5
        a = nabla(A, B, C, D)
        b = nabla(A, B, ~C, ~D)
        assert not (a & b).any() and (a | b).all()


def test_klein_relabel_preserves_difference_set(cert3):
    from bushtype.groupring import GroupSubset

    blocks = build_blocks(cert3)
    D0, D1, D2, D3 = blocks.blocks
    for perm in ((0, 2, 1, 3), (0, 3, 2, 1), (0, 1, 3, 2)):
        S = GroupSubset.from_blocks(blocks.ctx, [blocks.blocks[i] for i in perm])
        assert verify_hds(S, 9).ok
