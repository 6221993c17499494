"""Exact loading kernel vs the unreduced brute-force enumerator."""

import time

import pytest

from boxroute.exact import exact_check
from boxroute.instance import ItemSpec
from boxroute.loading import Container, LoadingVariant, validate_packing

from generators import ALL_VARIANTS, random_micro_clp
from oracles import brute_force_check


def _item(l, w, h, fragile=False, group=1):
    return ItemSpec(l, w, h, fragile, group)


class TestBasics:
    def test_single_fitting_item(self):
        out = exact_check([_item(2, 2, 2)], Container(3, 3, 3), LoadingVariant.all_constraints())
        assert out.is_feasible
        assert validate_packing(out.packing, LoadingVariant.all_constraints()) == []

    def test_oversize_item_infeasible(self):
        out = exact_check(
            [_item(61, 10, 10)], Container(60, 25, 30), LoadingVariant.loading_only()
        )
        assert out.is_infeasible
        assert "cannot fit" in out.reason

    def test_rotation_saves_an_item(self):
        out = exact_check([_item(2, 5, 1)], Container(5, 2, 1), LoadingVariant.loading_only())
        assert out.is_feasible

    def test_volume_bound_infeasible(self):
        items = [_item(3, 3, 3), _item(3, 3, 3)]
        out = exact_check(items, Container(3, 3, 4), LoadingVariant.loading_only())
        assert out.is_infeasible

    def test_empty_item_list(self):
        assert exact_check([], Container(2, 2, 2), LoadingVariant.loading_only()).is_feasible


class TestIncrementalFeasibility:
    # a wide box can only go on top of the first box, which covers just
    # half of its base; the third box completes the support plane
    box = Container(6, 4, 2)
    A = _item(3, 4, 1)
    B = _item(6, 2, 1)
    C = _item(3, 4, 1)
    variant = LoadingVariant.all_constraints(1.0)

    def test_two_boxes_infeasible(self):
        assert exact_check([self.A, self.B], self.box, self.variant).is_infeasible

    def test_adding_the_third_box_makes_it_feasible(self):
        out = exact_check([self.A, self.B, self.C], self.box, self.variant)
        assert out.is_feasible
        assert validate_packing(out.packing, self.variant) == []

    def test_removal_flips_back(self):
        assert exact_check([self.A, self.B], self.box, self.variant).is_infeasible

    def test_brute_force_agrees_on_the_flip(self):
        assert brute_force_check([self.A, self.B], self.box, self.variant) is None
        assert brute_force_check([self.A, self.B, self.C], self.box, self.variant) is not None


class TestLifoVariants:
    # a 2x2 footprint container forces stacking; fragility forces the
    # fragile item on top, so only one unload order can be feasible
    box = Container(2, 2, 2)
    frag = _item(2, 2, 1, fragile=True, group=1)
    solid = _item(2, 2, 1, fragile=False, group=2)
    fixed = LoadingVariant.no_support()

    def test_unload_order_decides_feasibility(self):
        good = exact_check([self.frag, self.solid], self.box, self.fixed, unload_order=[1, 2])
        bad = exact_check([self.frag, self.solid], self.box, self.fixed, unload_order=[2, 1])
        assert good.is_feasible
        assert bad.is_infeasible

    def test_free_sequence_finds_the_working_permutation(self):
        free = LoadingVariant.lifo_no_sequence()
        out = exact_check([self.frag, self.solid], self.box, free, unload_order=[2, 1])
        assert out.is_feasible
        # the witness certifies the permutation it found
        assert tuple(out.packing.unload_order) == (1, 2)


class TestBudget:
    def test_zero_budget_is_unknown(self):
        items = [_item(2, 2, 1), _item(2, 2, 1), _item(2, 1, 1)]
        out = exact_check(items, Container(4, 3, 2), LoadingVariant.all_constraints(), budget=0.0)
        assert out.is_unknown

    def test_anytime_consistency(self):
        items = [_item(2, 2, 1), _item(2, 2, 1)]
        box = Container(4, 2, 1)
        fast = exact_check(items, box, LoadingVariant.loading_only(), budget=0.0)
        slow = exact_check(items, box, LoadingVariant.loading_only(), budget=None)
        assert fast.is_unknown and slow.is_feasible


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: str(v.key))
def test_agreement_with_brute_force(variant):
    mismatches = []
    for seed in range(120):
        items, box = random_micro_clp(seed)
        expected = brute_force_check(items, box, variant) is not None
        got = exact_check(items, box, variant)
        assert not got.is_unknown
        if got.is_feasible != expected:
            mismatches.append((seed, expected, got.status))
        if got.is_feasible:
            assert validate_packing(got.packing, variant) == []
    assert mismatches == []


def test_monotone_infeasibility_without_support():
    # for support-free variants, a superset of an infeasible set stays infeasible
    for seed in range(60):
        items, box = random_micro_clp(seed)
        if len(items) < 2:
            continue
        for variant in (LoadingVariant.no_support(), LoadingVariant.loading_only()):
            if exact_check(items[:-1], box, variant).is_infeasible:
                assert exact_check(items, box, variant).is_infeasible


def test_determinism():
    items, box = random_micro_clp(11)
    variant = LoadingVariant.all_constraints()
    a = exact_check(items, box, variant)
    b = exact_check(items, box, variant)
    assert a.status == b.status
    if a.is_feasible:
        assert a.packing == b.packing


def test_deadline_honored_quickly():
    # a deliberately large search must notice the deadline promptly
    items = [_item(2, 2, 1, group=g % 3 + 1) for g in range(9)]
    box = Container(12, 9, 4)
    start = time.monotonic()
    exact_check(items, box, LoadingVariant.no_support(), budget=0.05)
    assert time.monotonic() - start < 0.3
