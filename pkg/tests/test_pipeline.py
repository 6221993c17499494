"""Staged route checks, reductions and preprocessing on constructed geometry."""

import pytest

from boxroute.instance import CustomerRecord, ItemSpec, VehicleSpec, build_instance
from boxroute.loading import LoadingVariant, validate_packing
from boxroute.memory import FeasibleRouteStore, InfeasibleComboStore
from boxroute.pipeline import FeasibilityPipeline, InstanceInfeasible, PipelineConfig


def make_instance(name, vehicle, item_lists, weights=None):
    customers = []
    for cid, items in enumerate(item_lists, start=1):
        w = 1.0 if weights is None else weights[cid - 1]
        customers.append(
            CustomerRecord(
                id=cid,
                x=float(cid * 10),
                y=0.0,
                weight=w,
                items=tuple(
                    ItemSpec(l, w_, h, bool(f), cid) for (l, w_, h, f) in items
                ),
            )
        )
    return build_instance(name, customers, vehicle, (0.0, 0.0))


def make_pipeline(inst, variant, **cfg_kwargs):
    cfg = PipelineConfig(**cfg_kwargs)
    stats = {}
    pipe = FeasibilityPipeline(
        inst, variant, FeasibleRouteStore(), InfeasibleComboStore(), cfg, stats
    )
    return pipe


# three-customer support construction: customer 2's wide slab needs both
# floor slabs (customers 1 and 3) underneath for full support
SUPPORT_VEHICLE = VehicleSpec(3, 100.0, 6, 4, 2)
SUPPORT_ITEMS = [
    [(3, 4, 1, 0)],        # customer 1: floor slab
    [(6, 2, 1, 0)],        # customer 2: wide slab, needs a full plane
    [(3, 4, 1, 0)],        # customer 3: second floor slab
]


class TestCheckRouteWithSupport:
    def test_support_only_failure_yields_tail_cuts(self):
        # the wide slab can hover (relaxed stages feasible) but can never
        # reach full support on a route over customers 1 and 2 alone
        inst = make_instance("sup", SUPPORT_VEHICLE, SUPPORT_ITEMS)
        pipe = make_pipeline(inst, LoadingVariant.all_constraints(1.0))
        result = pipe.check_route((1, 2))
        assert not result.accepted
        kinds = sorted(c.kind for c in result.cuts)
        assert kinds == ["tt", "uitp"]  # reversed direction is infeasible too
        assert [c.kind for c in result.companions] == ["tt"]

    def test_feasible_route_accepted_with_witness(self):
        inst = make_instance("sup", SUPPORT_VEHICLE, SUPPORT_ITEMS)
        variant = LoadingVariant.all_constraints(1.0)
        pipe = make_pipeline(inst, variant)
        result = pipe.check_route((3, 2, 1))
        if result.accepted:
            assert validate_packing(result.witness, variant) == []
            assert pipe.routes.contains_route((3, 2, 1), variant)

    def test_heuristic_precheck_short_circuits(self):
        inst = make_instance("sup", SUPPORT_VEHICLE, [[(2, 2, 1, 0)], [(2, 2, 1, 0)]])
        variant = LoadingVariant.all_constraints(0.75)
        pipe = make_pipeline(inst, variant)
        result = pipe.check_route((1, 2))
        assert result.accepted
        assert pipe.stats.get("heuristic_hits", 0) >= 1
        assert pipe.stats.get("exact_calls", 0) == 0


# two customers whose slabs always collide: full yz cross-section overlap
# in x is unavoidable and stacking exceeds the height
BLOCK_VEHICLE = VehicleSpec(2, 100.0, 6, 2, 3)
BLOCK_ITEMS = [
    [(4, 2, 2, 0)],
    [(4, 2, 2, 0)],
]


class TestTwoPathStage:
    def test_pair_blocked_in_any_order_yields_two_path(self):
        inst = make_instance("blk", BLOCK_VEHICLE, BLOCK_ITEMS)
        variant = LoadingVariant.no_support()
        pipe = make_pipeline(inst, variant)
        result = pipe.check_route((1, 2))
        assert not result.accepted
        assert [c.kind for c in result.cuts] == ["2p"]
        assert pipe.combos.superset_of_infeasible({1, 2}, pipe.combo_variant) == {1, 2}

    def test_loading_only_volume_overflow(self):
        vehicle = VehicleSpec(2, 100.0, 3, 3, 3)
        inst = make_instance(
            "vol", vehicle, [[(3, 3, 2, 0)], [(3, 3, 2, 0)]]
        )
        pipe = make_pipeline(inst, LoadingVariant.loading_only())
        result = pipe.check_route((1, 2))
        assert not result.accepted
        assert [c.kind for c in result.cuts] == ["2p"]
        assert pipe.combos.superset_of_infeasible({1, 2}, pipe.combo_variant)


class TestReductions:
    def test_reduce_to_the_blocking_pair(self):
        # customers 3 and 4 carry tiny items (smallest volume, removed first)
        vehicle = VehicleSpec(4, 100.0, 6, 2, 3)
        items = BLOCK_ITEMS + [[(1, 1, 1, 0)], [(1, 1, 1, 0)]]
        inst = make_instance("red", vehicle, items)
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        reduced = pipe.reduce_infeasible_set(
            (1, 2, 3, 4), pipe.combo_variant, budget=2.0
        )
        assert reduced == frozenset({1, 2})

    def test_zero_budget_keeps_everything(self):
        vehicle = VehicleSpec(4, 100.0, 6, 2, 3)
        items = BLOCK_ITEMS + [[(1, 1, 1, 0)]]
        inst = make_instance("red0", vehicle, items)
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        reduced = pipe.reduce_infeasible_set((1, 2, 3), pipe.combo_variant, budget=0.0)
        assert reduced == frozenset({1, 2, 3})

    def test_path_head_trim(self):
        # path (3, 1, 2): the (1, 2) suffix alone is already infeasible
        vehicle = VehicleSpec(4, 100.0, 6, 2, 3)
        items = BLOCK_ITEMS + [[(1, 1, 1, 0)]]
        inst = make_instance("ptrim", vehicle, items)
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        reduced = pipe.reduce_infeasible_path([3, 1, 2], pipe.path_variant, budget=2.0)
        assert reduced == [1, 2]

    def test_two_customer_path_not_reducible(self):
        inst = make_instance("p2", BLOCK_VEHICLE, BLOCK_ITEMS)
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        reduced = pipe.reduce_infeasible_path([1, 2], pipe.path_variant, budget=2.0)
        assert reduced == [1, 2]


class TestUnservableCustomer:
    def test_singleton_support_free_infeasible_raises(self):
        # two items of one customer that cannot coexist in the container
        vehicle = VehicleSpec(2, 100.0, 6, 2, 3)
        inst = make_instance("lost", vehicle, [[(4, 2, 2, 0), (4, 2, 2, 0)]])
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        with pytest.raises(InstanceInfeasible):
            pipe.check_route((1,))


class TestPreprocessing:
    def test_blocked_pair_removes_both_arcs_and_stores_combo(self):
        inst = make_instance("blk", BLOCK_VEHICLE, BLOCK_ITEMS)
        pipe = make_pipeline(inst, LoadingVariant.no_support())
        result = pipe.preprocess()
        assert (1, 2) in result.removed_arcs and (2, 1) in result.removed_arcs
        assert pipe.combos.superset_of_infeasible({1, 2}, pipe.combo_variant)

    def test_tiny_items_seed_pair_routes(self):
        vehicle = VehicleSpec(3, 100.0, 6, 4, 4)
        inst = make_instance(
            "tiny", vehicle, [[(1, 1, 1, 0)], [(1, 1, 1, 0)], [(1, 1, 1, 0)]]
        )
        pipe = make_pipeline(inst, LoadingVariant.all_constraints(0.75))
        result = pipe.preprocess()
        assert result.removed_arcs == set()
        assert result.seeded_routes == 6  # n(n-1) ordered pairs
        assert pipe.routes.count(pipe.variant) == 6

    def test_support_repairable_pair_gets_itp_and_keeps_arc(self):
        # pair (1, 2) works only when customer 3's slab completes the
        # support plane, so the arc survives with a tail-path row
        vehicle = VehicleSpec(3, 100.0, 6, 4, 2)
        items = [
            [(3, 4, 1, 0)],   # floor slab
            [(6, 2, 1, 0)],   # wide slab needing full support
            [(1, 1, 1, 0)],   # small helper
        ]
        inst = make_instance("itp", vehicle, items)
        pipe = make_pipeline(inst, LoadingVariant.all_constraints(1.0))
        result = pipe.preprocess()
        assert (1, 2) not in result.removed_arcs
        itp_cuts = [c for c in result.initial_cuts if c.kind == "itp"]
        assert any(set(c.terms) == {(1, 2), (2, 0)} for c in itp_cuts)

    def test_capacity_pair_prefilter(self):
        vehicle = VehicleSpec(2, 10.0, 6, 4, 4)
        inst = make_instance(
            "heavy",
            vehicle,
            [[(1, 1, 1, 0)], [(1, 1, 1, 0)]],
            weights=[6.0, 6.0],
        )
        pipe = make_pipeline(inst, LoadingVariant.loading_only())
        result = pipe.preprocess()
        assert (1, 2) in result.removed_arcs and (2, 1) in result.removed_arcs
        # capacity-based removals do not masquerade as loading combos
        assert pipe.combos.superset_of_infeasible({1, 2}, pipe.combo_variant) is None
