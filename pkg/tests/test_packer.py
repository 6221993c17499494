"""Constructive placement, LIFO distances and the iterated-greedy search."""

import pytest

import boxroute.packer as packer
from boxroute.instance import ItemSpec
from boxroute.loading import Container, LoadingVariant, validate_packing
from boxroute.packer import (
    HeuristicConfig,
    StrictLifoIndex,
    constructive_pack,
    lifo_distance,
    metaheuristic_pack,
)

from generators import ALL_VARIANTS, random_micro_clp
from oracles import brute_force_check


def _item(l, w, h, fragile=False, group=1):
    return ItemSpec(l, w, h, fragile, group)


class TestLifoDistance:
    def test_inside_tolerated_slot_is_zero(self):
        for k in range(4, 9):
            assert lifo_distance(5, 7, k, 1) == 0

    def test_before_slot(self):
        assert lifo_distance(5, 7, 2, 1) == 3

    def test_after_slot(self):
        assert lifo_distance(5, 7, 9, 0) == 2

    def test_total_is_additive(self):
        items = [_item(1, 1, 1, group=g) for g in (1, 1, 2, 2, 3)]
        index = StrictLifoIndex(items, unload_order=[3, 2, 1])
        strict = index.strict_sequence
        assert index.total(strict, 0) == 0
        # swapping the first and last item displaces both
        seq = list(strict)
        seq[0], seq[-1] = seq[-1], seq[0]
        d_first = index.distance(seq[0], 0, 0)
        d_last = index.distance(seq[-1], len(seq) - 1, 0)
        assert index.total(seq, 0) == d_first + d_last
        assert index.total(seq, 0) > 0


class TestConstructive:
    def test_empty(self):
        packing, skipped = constructive_pack(
            [], Container(5, 5, 5), LoadingVariant.loading_only(), []
        )
        assert packing.placements == () and skipped == []

    def test_single_item_short_side_along_x(self):
        packing, skipped = constructive_pack(
            [_item(20, 10, 5)], Container(60, 25, 30), LoadingVariant.loading_only(), [1]
        )
        assert skipped == []
        p = packing.placements[0]
        assert (p.x, p.y, p.z) == (0, 0, 0)
        assert p.lx == 10  # the 10-side lies along x

    def test_second_oversize_item_is_skipped(self):
        items = [_item(60, 25, 30), _item(60, 25, 30)]
        packing, skipped = constructive_pack(
            items, Container(60, 25, 30), LoadingVariant.loading_only(), [1]
        )
        assert len(packing.placements) == 1
        assert skipped == [1]

    def test_respects_support_at_placement_time(self):
        # second item cannot hover: it must land on the floor next to the first
        items = [_item(2, 2, 2), _item(2, 2, 1)]
        packing, skipped = constructive_pack(
            items, Container(6, 4, 4), LoadingVariant.all_constraints(1.0), [1]
        )
        assert skipped == []
        assert validate_packing(packing, LoadingVariant.all_constraints(1.0)) == []


class TestMetaheuristic:
    def test_single_item(self):
        out = metaheuristic_pack(
            [_item(3, 3, 3)], Container(5, 5, 5), LoadingVariant.all_constraints()
        )
        assert out is not None

    def test_volume_overflow_fails(self):
        items = [_item(4, 4, 4), _item(4, 4, 4)]
        out = metaheuristic_pack(items, Container(5, 5, 5), LoadingVariant.loading_only())
        assert out is None

    def test_enumeration_bound(self, monkeypatch):
        # 3 items with threshold 3: at most 3! constructive calls in total
        calls = []
        original = packer.constructive_pack

        def counting(*args, **kwargs):
            calls.append(1)
            return original(*args, **kwargs)

        monkeypatch.setattr(packer, "constructive_pack", counting)
        # volume fits but only two of the three slabs can ever be placed
        items = [_item(4, 4, 2, group=g) for g in (1, 2, 3)]
        out = metaheuristic_pack(
            items,
            Container(5, 5, 5),
            LoadingVariant.loading_only(),
            cfg=HeuristicConfig(enum_threshold=3),
        )
        assert out is None
        assert 2 <= len(calls) <= 6

    def test_determinism(self):
        items, box = random_micro_clp(33)
        variant = LoadingVariant.all_constraints()
        a = metaheuristic_pack(items, box, variant, seed=5)
        b = metaheuristic_pack(items, box, variant, seed=5)
        assert (a is None) == (b is None)
        if a is not None:
            assert a == b

    @pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: str(v.key))
    def test_soundness_random(self, variant):
        hits = 0
        for seed in range(80):
            items, box = random_micro_clp(seed + 1000)
            out = metaheuristic_pack(items, box, variant, seed=seed)
            if out is None:
                continue
            hits += 1
            assert validate_packing(out, variant) == []
            # a heuristic success implies true feasibility
            assert brute_force_check(items, box, variant) is not None
        assert hits > 10  # the heuristic does find packings

    def test_vnd_path_runs(self):
        # more items than the enumeration threshold to exercise the VND
        items = [_item(2, 2, 1, group=g % 3 + 1) for g in range(9)]
        box = Container(4, 4, 3)
        out = metaheuristic_pack(
            items,
            box,
            LoadingVariant.no_support(),
            unload_order=[1, 2, 3],
            cfg=HeuristicConfig(enum_threshold=2, max_perturbations=10),
            seed=3,
        )
        if out is not None:
            assert validate_packing(out, LoadingVariant.no_support()) == []


class TestPlacementPoints:
    def test_points_lie_on_floor_or_tops_or_walls(self):
        items = [_item(3, 2, 2), _item(2, 2, 1), _item(1, 1, 1)]
        box = Container(6, 5, 4)
        packing, _ = constructive_pack(items, box, LoadingVariant.loading_only(), [1])
        point_set = packer._PointSet(items, box)
        placed = []
        for p in packing.placements:
            placed.append(p)
            point_set.register(p, placed)
        tops = {q.z2 for q in placed}
        for x, y, z in point_set.points:
            assert 0 <= x < box.length and 0 <= y < box.width and 0 <= z < box.height
            assert z == 0 or z in tops
