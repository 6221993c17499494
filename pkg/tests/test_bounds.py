"""Savings construction, two-opt and the set-partitioning heuristic."""

from boxroute.bounds import route_cost, savings_solution, sp_heuristic, two_opt
from boxroute.cuts import r_of
from boxroute.instance import CustomerRecord, ItemSpec, VehicleSpec, build_instance
from boxroute.memory import FeasibleRouteStore

from generators import random_routing_instance


def line_instance(xs, capacity=100.0, weights=None, count=None):
    """Customers on a line; item geometry is trivial."""
    customers = []
    for i, x in enumerate(xs, start=1):
        customers.append(
            CustomerRecord(
                id=i,
                x=float(x),
                y=0.0,
                weight=1.0 if weights is None else weights[i - 1],
                items=(ItemSpec(1, 1, 1, False, i),),
            )
        )
    vehicle = VehicleSpec(count or len(xs), capacity, 10, 10, 10)
    return build_instance("line", customers, vehicle, (0.0, 0.0))


def capacity_gate(inst):
    def gate(seq):
        return r_of(seq, inst) == 1
    return gate


class TestTwoOpt:
    def test_two_customer_route_unchanged(self):
        inst = line_instance([1, 2])
        assert two_opt(inst, [1, 2], capacity_gate(inst)) == [1, 2]

    def test_crossing_route_uncrossed(self):
        # visiting 3 before 1 zig-zags; on a line the optimum drives to
        # the far end once, total 2 * 4 = 8
        inst = line_instance([1, 2, 3, 4])
        improved = two_opt(inst, [3, 1, 2, 4], capacity_gate(inst))
        assert route_cost(inst, improved) == 8.0

    def test_gate_rejection_keeps_route(self):
        inst = line_instance([1, 2, 3, 4])
        out = two_opt(inst, [3, 1, 2, 4], lambda seq: list(seq) == [3, 1, 2, 4])
        assert out == [3, 1, 2, 4]


class TestSavings:
    def test_single_customer(self):
        inst = line_instance([5])
        routes, verified = savings_solution(inst, capacity_gate(inst))
        assert routes == [(1,)] and verified

    def test_two_nearby_customers_merge(self):
        inst = line_instance([10, 11])
        routes, verified = savings_solution(inst, capacity_gate(inst))
        assert verified and len(routes) == 1 and set(routes[0]) == {1, 2}

    def test_blocked_merge_keeps_two_routes(self):
        inst = line_instance([10, 11], capacity=1.5)  # pair exceeds the capacity
        routes, verified = savings_solution(inst, capacity_gate(inst))
        assert verified and len(routes) == 2

    def test_loading_blocked_merge(self):
        # gate refuses every multi-customer route
        inst = line_instance([10, 11])
        routes, verified = savings_solution(inst, lambda s: len(s) == 1)
        assert verified and len(routes) == 2


class TestSpHeuristic:
    def test_no_improvement_returns_none(self):
        inst = line_instance([10, 20])
        store = FeasibleRouteStore()
        store.insert((1,), None, None)
        store.insert((2,), None, None)
        incumbent = route_cost(inst, [1]) + route_cost(inst, [2])
        gate = capacity_gate(inst)
        assert sp_heuristic(inst, store, None, incumbent, gate) is None

    def test_better_partition_found(self):
        inst = line_instance([10, 11])
        store = FeasibleRouteStore()
        store.insert((1,), None, None)
        store.insert((2,), None, None)
        store.insert((1, 2), None, None)
        incumbent = route_cost(inst, [1]) + route_cost(inst, [2])
        got = sp_heuristic(inst, store, None, incumbent, capacity_gate(inst))
        assert got is not None
        routes, obj = got
        assert obj < incumbent - 1e-9
        assert sorted(routes) == [(1, 2)]

    def test_covering_bound_early_exit(self):
        # the stored routes cannot possibly beat the incumbent
        inst = line_instance([10, 20])
        store = FeasibleRouteStore()
        store.insert((1,), None, None)
        store.insert((2,), None, None)
        got = sp_heuristic(inst, store, None, 1.0, capacity_gate(inst))
        assert got is None

    def test_multiply_covered_customer_spawns_repairs(self):
        inst = line_instance([10, 11, 12])
        store = FeasibleRouteStore()
        store.insert((1, 2), None, None)
        store.insert((2, 3), None, None)
        store.insert((1,), None, None)
        store.insert((3,), None, None)
        incumbent = route_cost(inst, [1]) + route_cost(inst, [2]) + route_cost(inst, [3])
        got = sp_heuristic(inst, store, None, incumbent, capacity_gate(inst))
        assert got is not None
        routes, obj = got
        covered = sorted(c for r in routes for c in r)
        assert covered == [1, 2, 3]
        assert obj < incumbent


def test_savings_on_random_instance_covers_everyone():
    inst = random_routing_instance(9, 6)
    routes, _verified = savings_solution(inst, capacity_gate(inst))
    covered = sorted(c for r in routes for c in r)
    assert covered == [c.id for c in inst.customers]
