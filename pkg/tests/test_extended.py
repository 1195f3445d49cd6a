"""Slow checks at the largest orders; enabled with ``pytest --extended``."""

import pytest

from bushtype.bushmat import assemble_bush, verify_bush, verify_delsarte_property
from bushtype.hds import verify_hds
from bushtype.turyn import build_for_m

pytestmark = pytest.mark.extended


def test_m9_full_matrix(build9):
    H = assemble_bush(build9.hds, build9.subgroup, build9.klein_pair)
    assert (H.order, H.block_size) == (26244, 162)
    v = verify_bush(H, threads=4)
    assert v.ok, v.lines()
    assert verify_delsarte_property(H).ok


def test_m15_difference_set_pair_counting():
    from conftest import certificate

    r = build_for_m(15, certificate)
    assert r.hds.size == 101025
    v = verify_hds(r.hds, 225, threads=4)
    assert v.ok, v.lines()
