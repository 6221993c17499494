"""Upper-bound machinery: savings start solution, two-opt, and the
set-partitioning heuristic over memoized routes.

Every candidate route goes through a loading gate before it is used; a
gate returns a truthy witness for proven-feasible sequences and None
otherwise, and is expected to record successes in the route store.
Removing a customer from a route never inherits feasibility (support may
be lost), so repaired routes are re-validated from scratch.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from .instance import Instance
from .lp import HighsLpOracle, rows_to_matrix

__all__ = ["route_cost", "two_opt", "savings_solution", "sp_heuristic"]


def route_cost(instance: Instance, seq) -> float:
    path = [0] + list(seq) + [0]
    return sum(instance.cost(a, b) for a, b in zip(path, path[1:]))


def two_opt(instance: Instance, seq, gate):
    """Best-improvement 2-opt restricted to load-feasible reversals."""
    seq = list(seq)
    while True:
        base = route_cost(instance, seq)
        moves = []
        for a in range(len(seq) - 1):
            for b in range(a + 1, len(seq)):
                cand = seq[:a] + seq[a : b + 1][::-1] + seq[b + 1 :]
                delta = route_cost(instance, cand) - base
                if delta < -1e-9:
                    moves.append((delta, a, b, cand))
        moves.sort(key=lambda m: (m[0], m[1], m[2]))
        applied = False
        for _, _, _, cand in moves:
            if gate(cand):
                seq = cand
                applied = True
                break
        if not applied:
            return seq


def savings_solution(instance: Instance, gate):
    """Parallel savings construction with a loading gate on every merge.

    Returns (routes, all_verified). Routes always cover every customer;
    all_verified is False when some route could not be proven feasible
    (such a start cannot serve as an incumbent).
    """
    ids = [c.id for c in instance.customers]
    veh = instance.vehicle
    routes: dict[int, list[int]] = {i: [cid] for i, cid in enumerate(ids)}
    of_customer = {cid: i for i, cid in enumerate(ids)}
    verified = {i: bool(gate(r)) for i, r in routes.items()}

    savings = []
    for i in ids:
        for j in ids:
            if i == j:
                continue
            s = instance.cost(i, 0) + instance.cost(0, j) - instance.cost(i, j)
            savings.append((-s, i, j))
    savings.sort()

    for neg_s, i, j in savings:
        if neg_s >= 0:
            break
        ri, rj = of_customer[i], of_customer[j]
        if ri == rj:
            continue
        if routes[ri][-1] != i or routes[rj][0] != j:
            continue
        merged = routes[ri] + routes[rj]
        if instance.weight_of(merged) > veh.weight_capacity + 1e-9:
            continue
        if instance.volume_of(merged) > veh.volume:
            continue
        if not gate(merged):
            continue
        routes[ri] = merged
        verified[ri] = True
        for cid in routes[rj]:
            of_customer[cid] = ri
        del routes[rj]
        del verified[rj]

    final = []
    all_verified = True
    for key in sorted(routes):
        seq = two_opt(instance, routes[key], gate) if verified[key] else routes[key]
        final.append(tuple(seq))
        all_verified &= verified[key]
    return final, all_verified


# ---------------------------------------------------------------------------
# set partitioning over memoized routes


@dataclass
class _Column:
    seq: tuple[int, ...]
    cost: float
    covers: frozenset[int]


def _columns_from_store(instance, routes_store, variant):
    best: dict[frozenset[int], _Column] = {}
    for seq, _witness in routes_store.routes(variant):
        covers = frozenset(seq)
        cost = route_cost(instance, seq)
        cur = best.get(covers)
        if cur is None or cost < cur.cost - 1e-12:
            best[covers] = _Column(tuple(seq), cost, covers)
    return sorted(best.values(), key=lambda c: (c.cost, c.seq))


def _solve_partition_mip(columns, ids, fleet, oracle, deadline):
    """Tiny branch-and-bound over binary column variables."""
    n = len(columns)
    if n == 0:
        return None
    cost = np.array([c.cost for c in columns])
    row_of = {cid: r for r, cid in enumerate(ids)}
    eq_rows = []
    for cid in ids:
        coefs = {k: 1.0 for k, col in enumerate(columns) if cid in col.covers}
        if not coefs:
            return None  # some customer is uncoverable with current columns
        eq_rows.append((coefs, 1.0))
    a_eq = rows_to_matrix(eq_rows, n)
    b_eq = np.ones(len(ids))
    a_ub = rows_to_matrix([({k: 1.0 for k in range(n)}, float(fleet))], n)
    b_ub = np.array([float(fleet)])

    best_obj, best_pick = float("inf"), None
    heap = [(0.0, 0, ())]  # (parent bound, tiebreak, fixes)
    counter = 1
    while heap:
        if time.monotonic() > deadline:
            break
        bound, _, fixes = heapq.heappop(heap)
        if bound >= best_obj - 1e-9:
            continue
        lower = np.zeros(n)
        upper = np.ones(n)
        for idx, val in fixes:
            lower[idx] = upper[idx] = val
        res = oracle.solve(cost, a_eq, b_eq, a_ub, b_ub, lower, upper)
        if res.status != "optimal" or res.objective >= best_obj - 1e-9:
            continue
        x = res.x
        frac = np.abs(x - np.round(x))
        pick = int(np.argmax(frac))
        if frac[pick] <= 1e-6:
            chosen = tuple(k for k in range(n) if x[k] > 0.5)
            best_obj, best_pick = res.objective, chosen
            continue
        for val in (1.0, 0.0):
            heapq.heappush(heap, (res.objective, counter, fixes + ((pick, val),)))
            counter += 1
    if best_pick is None:
        return None
    return best_obj, [columns[k] for k in best_pick]


def sp_heuristic(
    instance: Instance,
    routes_store,
    variant,
    incumbent_obj: float,
    gate,
    oracle: HighsLpOracle | None = None,
    time_budget: float = 10.0,
):
    """Recombine stored routes through set covering/partitioning.

    Solves the linear set-covering relaxation first; if its bound cannot
    beat the incumbent the call is a cheap no-op. Customers covered more
    than once spawn repaired candidate routes (customer removed, two-opt,
    re-validated). Returns (routes, objective) strictly better than the
    incumbent, or None.
    """
    oracle = oracle or HighsLpOracle()
    deadline = time.monotonic() + time_budget
    ids = [c.id for c in instance.customers]
    columns = _columns_from_store(instance, routes_store, variant)
    if not columns:
        return None

    n = len(columns)
    cost = np.array([c.cost for c in columns])
    cover_rows = []
    for cid in ids:
        coefs = {k: -1.0 for k, col in enumerate(columns) if cid in col.covers}
        if not coefs:
            return None
        cover_rows.append((coefs, -1.0))  # sum >= 1
    cover_rows.append(({k: 1.0 for k in range(n)}, float(instance.vehicle.count)))
    a_ub = rows_to_matrix(cover_rows, n)
    b_ub = np.array([rhs for _, rhs in cover_rows])
    res = oracle.solve(cost, None, None, a_ub, b_ub, np.zeros(n), np.ones(n))
    if res.status != "optimal" or res.objective >= incumbent_obj - 1e-9:
        return None

    multi = []
    x = res.x
    for cid in ids:
        active = [k for k in range(n) if cid in columns[k].covers and x[k] > 1e-6]
        if len(active) > 1:
            multi.append((cid, active))
    for cid, active in multi:
        for k in active:
            shrunk = tuple(c for c in columns[k].seq if c != cid)
            if not shrunk:
                continue
            if gate(shrunk):
                two_opt(instance, shrunk, gate)  # improvements land in the store

    columns = _columns_from_store(instance, routes_store, variant)
    solved = _solve_partition_mip(
        columns, ids, instance.vehicle.count, oracle, deadline
    )
    if solved is None:
        return None
    obj, picked = solved
    if obj >= incumbent_obj - 1e-9:
        return None
    return [col.seq for col in picked], obj
