"""Branch-and-cut over the two-index vehicle flow formulation.

The model holds binary arc variables with degree rows, a fleet row, a
vehicle lower-bound row (exact one-dimensional bin packing over weight
and volume), and pairwise subtour rows; subtour-elimination and
infeasible-path rows enter lazily through the callbacks. The search is
best-bound with depth-first plunging, branching on the most fractional
arc (ties: larger cost, then lexicographic arc).

Two configurations: "complete" runs the full machinery (memoization,
heuristic pre-check, lifted cuts, fractional separation, start solution,
set-partitioning upper bounds), "basic" keeps only exact checks with
plain infeasible-path rows.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds as ub
from . import cuts as cutlib
from .cuts import CutExpr
from .instance import Instance
from .loading import LoadingVariant
from .lp import HighsLpOracle, LpOracleError, rows_to_matrix, stack_ub
from .memory import FeasibleRouteStore, InfeasibleComboStore
from .pipeline import (
    FeasibilityPipeline,
    InstanceInfeasible,
    PipelineConfig,
    TimeLimitReached,
)
from .report import SolutionReport

__all__ = ["BnCConfig", "compute_kmin", "solve", "branching_choice", "LpOracleError"]


@dataclass
class BnCConfig:
    mode: str = "complete"          # or "basic"
    time_limit: float = 28800.0
    threads: int = 8                # forwarded for interface parity; search is serial
    seed: int = 0
    n_all: int = 200                # full separation at the first n_all nodes
    n_sep: int = 100                # afterwards separate every n_sep-th node
    n_sp: int = 20                  # new routes that trigger the SP heuristic
    memo: bool = True
    gap_tol: float = 1e-6
    sp_time: float = 10.0
    max_sep_rounds: int = 10
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.mode not in ("complete", "basic"):
            raise ValueError(f"mode must be complete or basic, got {self.mode!r}")


# ---------------------------------------------------------------------------
# K_min via exact one-dimensional bin packing


def _bin_packing_exact(sizes, cap) -> int:
    sizes = sorted((float(s) for s in sizes if s > 1e-12), reverse=True)
    if not sizes:
        return 0
    if sizes[0] > cap + 1e-9:
        raise ValueError("an indivisible demand exceeds the bin capacity")
    # first-fit decreasing upper bound
    loads: list[float] = []
    for s in sizes:
        for b in range(len(loads)):
            if loads[b] + s <= cap + 1e-9:
                loads[b] += s
                break
        else:
            loads.append(s)
    best = len(loads)
    lb = math.ceil(sum(sizes) / cap - 1e-9)
    if best == lb:
        return best

    suffix = [0.0] * (len(sizes) + 1)
    for i in range(len(sizes) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + sizes[i]

    state: list[float] = []

    def rec(idx: int) -> None:
        nonlocal best
        if idx == len(sizes):
            best = min(best, len(state))
            return
        free = sum(cap - l for l in state)
        need = len(state) + max(
            0, math.ceil((suffix[idx] - free) / cap - 1e-9)
        )
        if need >= best:
            return
        tried = set()
        for b in range(len(state)):
            key = round(state[b], 9)
            if key in tried or state[b] + sizes[idx] > cap + 1e-9:
                continue
            tried.add(key)
            state[b] += sizes[idx]
            rec(idx + 1)
            state[b] -= sizes[idx]
        if len(state) + 1 < best:
            state.append(sizes[idx])
            rec(idx + 1)
            state.pop()

    rec(0)
    return best


def compute_kmin(instance: Instance) -> int:
    """Vehicle lower bound from exact bin packing over weight and volume."""
    weights = [c.weight for c in instance.customers]
    volumes = [float(c.volume) for c in instance.customers]
    k_w = _bin_packing_exact(weights, instance.vehicle.weight_capacity)
    k_v = _bin_packing_exact(volumes, float(instance.vehicle.volume))
    return max(1, k_w, k_v)


def branching_choice(x: np.ndarray, arcs, costs: np.ndarray) -> int:
    """Most fractional variable; ties toward larger cost, then arc order."""
    frac = np.abs(x - np.round(x))
    if frac.max() <= 1e-6:
        raise ValueError("branching called on an integral point")
    best = None
    for k in range(len(arcs)):
        if frac[k] <= 1e-6:
            continue
        key = (-frac[k], -costs[k], arcs[k])
        if best is None or key < best[0]:
            best = (key, k)
    return best[1]


class _Model:
    def __init__(self, instance: Instance, removed_arcs, kmin: int):
        ids = [c.id for c in instance.customers]
        nodes = [0] + ids
        removed = set(removed_arcs)
        self.arcs = sorted(
            (i, j) for i in nodes for j in nodes if i != j and (i, j) not in removed
        )
        self.index = {a: k for k, a in enumerate(self.arcs)}
        self.cost = np.array([instance.cost(i, j) for i, j in self.arcs])
        self.n_arcs = len(self.arcs)

        eq_rows = []
        for i in ids:
            out = {self.index[(i, j)]: 1.0 for j in nodes if (i, j) in self.index}
            inn = {self.index[(j, i)]: 1.0 for j in nodes if (j, i) in self.index}
            eq_rows.append((out, 1.0))
            eq_rows.append((inn, 1.0))
        self.a_eq = rows_to_matrix(eq_rows, self.n_arcs)
        self.b_eq = np.array([rhs for _, rhs in eq_rows])

        static = []
        depot_out = {self.index[(0, j)]: 1.0 for j in ids if (0, j) in self.index}
        if depot_out:
            static.append((depot_out, float(instance.vehicle.count)))
            static.append(({k: -1.0 for k in depot_out}, -float(kmin)))
        for a in ids:
            for b in ids:
                if a < b:
                    coefs = {}
                    if (a, b) in self.index:
                        coefs[self.index[(a, b)]] = 1.0
                    if (b, a) in self.index:
                        coefs[self.index[(b, a)]] = 1.0
                    if coefs:
                        static.append((coefs, 1.0))
        self.static_rows = static
        self.static_mat = rows_to_matrix(static, self.n_arcs)
        self.static_rhs = np.array([rhs for _, rhs in static])

        self.pool: list[CutExpr] = []
        self.pool_sigs: set = set()
        self._cut_cache = None

    def add_cut(self, cut: CutExpr) -> bool:
        cut = cut.restricted_to(self.index.keys())
        sig = cut.signature()
        if sig in self.pool_sigs:
            return False
        self.pool_sigs.add(sig)
        self.pool.append(cut)
        self._cut_cache = None
        return True

    def matrices(self):
        if self._cut_cache is None or self._cut_cache[0] != len(self.pool):
            rows = [
                ({self.index[a]: c for a, c in cut.terms.items()}, cut.rhs)
                for cut in self.pool
            ]
            mat = rows_to_matrix(rows, self.n_arcs)
            rhs = np.array([cut.rhs for cut in self.pool])
            a_ub = stack_ub(self.static_mat, mat)
            b_ub = (
                np.concatenate([self.static_rhs, rhs])
                if len(rhs)
                else self.static_rhs
            )
            self._cut_cache = (len(self.pool), a_ub, b_ub)
        return self._cut_cache[1], self._cut_cache[2]

    def x_as_dict(self, x: np.ndarray) -> dict:
        return {a: float(x[k]) for a, k in self.index.items() if x[k] > 1e-9}


class _Solver:
    def __init__(self, instance, variant, config: BnCConfig):
        self.instance = instance
        self.variant = variant
        self.cfg = config
        self.stats: dict = {}
        self.oracle = HighsLpOracle()
        self.routes_store = FeasibleRouteStore()
        self.combo_store = InfeasibleComboStore()
        self.t0 = time.monotonic()
        self.deadline = self.t0 + config.time_limit
        self.incumbent: tuple[float, list, dict] | None = None  # obj, routes, witnesses
        self.cut_audit: list = []
        self.node_count = 0
        self.best_bound = -math.inf
        self.last_sp_count = 0

        pcfg = replace(
            config.pipeline,
            memo_lookup=config.memo and config.mode == "complete",
            memo_insert=config.mode == "complete",
            heuristic_precheck=config.mode == "complete",
            lifting=config.mode == "complete",
            seed=config.seed,
        )
        self.pipeline = (
            FeasibilityPipeline(
                instance,
                variant,
                self.routes_store,
                self.combo_store,
                pcfg,
                self.stats,
                global_deadline=self.deadline,
            )
            if variant is not None
            else None
        )

    # -- shared helpers -------------------------------------------------
    def out_of_time(self) -> bool:
        return time.monotonic() >= self.deadline

    def _gate(self, seq):
        """Loading gate for the upper-bound machinery."""
        seq = tuple(seq)
        if cutlib.r_of(seq, self.instance) > 1:
            return None
        if self.pipeline is None:
            # capacity relaxation: record the route so the SP heuristic
            # can recombine it, with no packing attached
            self.routes_store.insert(seq, None, None)
            return True
        try:
            return self.pipeline.quick_feasible(seq)
        except TimeLimitReached:
            return None

    def _witness_for(self, seq):
        if self.pipeline is None:
            return None
        return self.routes_store.witness(seq, self.variant)

    def _update_incumbent(self, obj, routes, witnesses) -> None:
        if self.incumbent is None or obj < self.incumbent[0] - 1e-9:
            self.incumbent = (obj, list(routes), dict(witnesses))

    # -- preprocessing ----------------------------------------------------
    def preprocess(self):
        t0 = time.monotonic()
        removed = set()
        initial_cuts = []
        ids = [c.id for c in self.instance.customers]
        if self.pipeline is not None:
            result = self.pipeline.preprocess()
            removed = result.removed_arcs
            initial_cuts = result.initial_cuts
            self.stats["seeded_routes"] = result.seeded_routes
            self.stats["seeded_combos"] = result.seeded_combos
        else:
            for a in ids:
                for b in ids:
                    if a < b and cutlib.r_of([a, b], self.instance) > 1:
                        removed.add((a, b))
                        removed.add((b, a))
        self.stats["removed_arcs"] = len(removed)
        self.stats["t_preprocess"] = time.monotonic() - t0
        return removed, initial_cuts

    def start_solution(self):
        if self.cfg.mode != "complete":
            return
        t0 = time.monotonic()
        routes, verified = ub.savings_solution(self.instance, self._gate)
        if verified and len(routes) <= self.instance.vehicle.count:
            obj = sum(ub.route_cost(self.instance, r) for r in routes)
            witnesses = {tuple(r): self._witness_for(tuple(r)) for r in routes}
            self._update_incumbent(obj, [tuple(r) for r in routes], witnesses)
        if self.incumbent is not None:
            improved = ub.sp_heuristic(
                self.instance,
                self.routes_store,
                self.variant,
                self.incumbent[0],
                self._gate,
                self.oracle,
                self.cfg.sp_time,
            )
            if improved is not None:
                new_routes, obj = improved
                witnesses = {tuple(r): self._witness_for(tuple(r)) for r in new_routes}
                self._update_incumbent(obj, [tuple(r) for r in new_routes], witnesses)
        self.last_sp_count = self.routes_store.count(self.variant)
        self.stats["t_start_solution"] = time.monotonic() - t0

    # -- callbacks --------------------------------------------------------
    def _decompose(self, xdict):
        succ: dict[int, int] = {}
        starts: list[int] = []
        for (i, j), v in xdict.items():
            if v > 0.5:
                if i == 0:
                    starts.append(j)
                else:
                    succ[i] = j
        routes = []
        visited: set[int] = set()
        for s in sorted(starts):
            seq = []
            cur = s
            while cur != 0 and len(seq) <= self.instance.n:
                seq.append(cur)
                visited.add(cur)
                cur = succ.get(cur, 0)
            routes.append(tuple(seq))
        cycles = []
        remaining = sorted(set(succ) - visited)
        seen: set[int] = set()
        for s in remaining:
            if s in seen:
                continue
            cyc = []
            cur = s
            while cur not in seen and cur != 0:
                seen.add(cur)
                cyc.append(cur)
                cur = succ.get(cur, 0)
            if cyc:
                cycles.append(tuple(cyc))
        return routes, cycles

    def _integer_callback(self, xdict):
        cuts: list[CutExpr] = []
        companions: list[CutExpr] = []
        witnesses = {}
        routes, cycles = self._decompose(xdict)
        for cyc in cycles:
            cuts.append(cutlib.gsec(set(cyc), cutlib.r_of(cyc, self.instance)))
        for seq in routes:
            r = cutlib.r_of(seq, self.instance)
            if r > 1:
                cuts.append(cutlib.gsec(set(seq), r))
                continue
            if self.pipeline is None:
                witnesses[seq] = None
                continue
            if self.cfg.memo and self.cfg.mode == "complete":
                if self.routes_store.contains_route(seq, self.variant):
                    self.stats["memo_route_hits"] = self.stats.get("memo_route_hits", 0) + 1
                    witnesses[seq] = self.routes_store.witness(seq, self.variant)
                    continue
                combo = self.combo_store.superset_of_infeasible(
                    set(seq), self.pipeline.combo_variant
                )
                if combo is not None:
                    self.stats["memo_combo_hits"] = self.stats.get("memo_combo_hits", 0) + 1
                    cuts.append(cutlib.gsec(set(seq), 2))
                    continue
            result = self.pipeline.check_route(seq)
            if result.accepted:
                witnesses[seq] = result.witness
            else:
                cuts.extend(result.cuts)
                companions.extend(result.companions)
        return (not cuts), cuts, companions, routes, witnesses

    def _fractional_cuts(self, xdict):
        if self.cfg.mode != "complete":
            return []
        node = self.node_count
        if node <= self.cfg.n_all:
            sequential = False
        elif self.cfg.n_sep > 0 and node % self.cfg.n_sep == 0:
            sequential = True
        else:
            return []
        separators = [cutlib.separate_rounded_capacity]
        found: list[CutExpr] = []
        for sep in separators:
            t0 = time.monotonic()
            got = sep(xdict, self.instance)
            self.stats["t_frac"] = self.stats.get("t_frac", 0.0) + time.monotonic() - t0
            found.extend(got)
            if sequential and got:
                break
        return found

    def _maybe_run_sp(self):
        if self.cfg.mode != "complete" or self.incumbent is None:
            return
        count = self.routes_store.count(self.variant)
        if count - self.last_sp_count < self.cfg.n_sp:
            return
        self.last_sp_count = count
        t0 = time.monotonic()
        improved = ub.sp_heuristic(
            self.instance,
            self.routes_store,
            self.variant,
            self.incumbent[0],
            self._gate,
            self.oracle,
            self.cfg.sp_time,
        )
        self.stats["t_sp"] = self.stats.get("t_sp", 0.0) + time.monotonic() - t0
        self.stats["sp_calls"] = self.stats.get("sp_calls", 0) + 1
        if improved is not None:
            new_routes, obj = improved
            witnesses = {tuple(r): self._witness_for(tuple(r)) for r in new_routes}
            self._update_incumbent(obj, [tuple(r) for r in new_routes], witnesses)

    # -- cut bookkeeping ---------------------------------------------------
    def _register_cuts(self, model: _Model, cuts, xdict, separating: bool = True) -> int:
        added = 0
        for cut in cuts:
            try:
                restricted = cut.restricted_to(model.index.keys())
            except ValueError:
                continue
            viol = cutlib.violation(restricted, xdict)
            if model.add_cut(restricted):
                added += 1
                self.cut_audit.append(
                    (restricted.kind, viol, separating, restricted.signature())
                )
                per = self.stats.setdefault("cuts", {})
                per[restricted.kind] = per.get(restricted.kind, 0) + 1
        return added

    # -- main loop ----------------------------------------------------------
    def run(self) -> SolutionReport:
        inst = self.instance
        for c in inst.customers:
            if cutlib.r_of([c.id], inst) > 1:
                return self._report("infeasible", math.inf)

        status = "optimal"
        exhausted = False
        heap: list = []
        plunge = None
        try:
            removed, initial_cuts = self.preprocess()
            self.start_solution()
            kmin = compute_kmin(inst)
            self.stats["kmin"] = kmin
            model = _Model(inst, removed, kmin)
            self._register_cuts(model, initial_cuts, {}, separating=False)

            lower = np.zeros(model.n_arcs)
            upper = np.ones(model.n_arcs)
            counter = 0
            heapq.heappush(heap, (-math.inf, counter, ()))

            while True:
                if self.out_of_time():
                    status = "time_limit"
                    break
                node = plunge if plunge is not None else (heapq.heappop(heap) if heap else None)
                plunge = None
                if node is None:
                    exhausted = True
                    break
                bound, _, fixes = node
                glb = self._global_lb(bound, heap)
                if glb is not None:
                    self.best_bound = max(self.best_bound, glb)
                if self.incumbent is not None and not self._can_improve(bound):
                    continue
                self.node_count += 1
                lb = lower.copy()
                ps = upper.copy()
                for idx, val in fixes:
                    lb[idx] = ps[idx] = val

                sep_rounds = 0
                while True:
                    if self.out_of_time():
                        status = "time_limit"
                        break
                    a_ub, b_ub = model.matrices()
                    res = self.oracle.solve(
                        model.cost, model.a_eq, model.b_eq, a_ub, b_ub, lb, ps
                    )
                    self.stats["lp_solves"] = self.stats.get("lp_solves", 0) + 1
                    if res.status != "optimal":
                        break  # infeasible node
                    obj = res.objective
                    if self.incumbent is not None and not self._can_improve(obj):
                        break
                    x = res.x
                    xdict = model.x_as_dict(x)
                    frac = np.abs(x - np.round(x))
                    if frac.max() <= 1e-6:
                        t0 = time.monotonic()
                        ok, cuts, comps, routes, witnesses = self._integer_callback(xdict)
                        self.stats["t_int"] = (
                            self.stats.get("t_int", 0.0) + time.monotonic() - t0
                        )
                        if ok:
                            self._update_incumbent(obj, routes, witnesses)
                            break
                        added = self._register_cuts(model, cuts, xdict)
                        self._register_cuts(model, comps, xdict, separating=False)
                        if added == 0:
                            raise RuntimeError(
                                "integer point rejected but no new cut was added"
                            )
                        continue
                    new_cuts = []
                    if sep_rounds < self.cfg.max_sep_rounds:
                        new_cuts = self._fractional_cuts(xdict)
                    if new_cuts and self._register_cuts(model, new_cuts, xdict):
                        sep_rounds += 1
                        continue
                    pick = branching_choice(x, model.arcs, model.cost)
                    counter += 1
                    child_up = (obj, counter, fixes + ((pick, 1.0),))
                    counter += 1
                    child_down = (obj, counter, fixes + ((pick, 0.0),))
                    plunge = child_up
                    heapq.heappush(heap, child_down)
                    break
                if status == "time_limit":
                    break
                self._maybe_run_sp()
                if self.incumbent is not None:
                    lb_now = self._global_lb(None, heap, plunge)
                    gap = self._gap(self.incumbent[0], lb_now)
                    if gap is not None and gap <= self.cfg.gap_tol:
                        self.best_bound = max(self.best_bound, lb_now)
                        exhausted = True
                        break
        except TimeLimitReached:
            status = "time_limit"
        except InstanceInfeasible as exc:
            self.stats["infeasible_reason"] = str(exc)
            return self._report("infeasible", math.inf)

        if exhausted:
            if self.incumbent is None:
                return self._report("infeasible", math.inf)
            return self._report("optimal", self.incumbent[0])
        lb_final = self._global_lb(None, heap, plunge)
        if lb_final is not None:
            self.best_bound = max(self.best_bound, lb_final)
        return self._report(status, self.best_bound)

    def _can_improve(self, bound: float) -> bool:
        obj = self.incumbent[0]
        return obj - bound > self.cfg.gap_tol * max(1.0, abs(obj))

    def _gap(self, obj: float, lb: float | None):
        if lb is None or lb == -math.inf:
            return None
        return (obj - lb) / max(abs(obj), 1e-9)

    def _global_lb(self, current, heap, plunge=None):
        vals = []
        if current is not None and current != -math.inf:
            vals.append(current)
        if heap:
            vals.append(heap[0][0])
        if plunge is not None:
            vals.append(plunge[0])
        if not vals:
            return self.incumbent[0] if self.incumbent else None
        v = min(vals)
        return None if v == -math.inf else v

    def _report(self, status: str, lb: float) -> SolutionReport:
        obj = self.incumbent[0] if self.incumbent else None
        routes = self.incumbent[1] if self.incumbent else []
        witnesses = self.incumbent[2] if self.incumbent else {}
        if status == "optimal" and obj is not None:
            lb = obj
        if status == "infeasible":
            lb = math.inf
        elif lb is None or lb == -math.inf or math.isnan(lb):
            lb = 0.0
        if obj is not None and math.isfinite(lb):
            lb = min(lb, obj)
        self.stats["nodes"] = self.node_count
        self.stats["t_total"] = time.monotonic() - self.t0
        self.stats.setdefault("t_int", 0.0)
        self.stats.setdefault("t_frac", 0.0)
        self.stats.setdefault("t_sp", 0.0)
        self.stats["cut_ledger"] = [
            (kind, sig) for kind, _v, _sep, sig in self.cut_audit
        ]
        if self.variant is not None and self.variant.support:
            self.stats["support_ratio"] = self.variant.support_ratio
        return SolutionReport(
            instance_name=self.instance.name,
            variant_label=self.stats.get("variant_label", ""),
            status=status,
            objective=obj,
            lower_bound=lb,
            routes=list(routes),
            packings=[witnesses.get(tuple(r)) for r in routes],
            stats=self.stats,
            cut_audit=self.cut_audit,
        )


def solve(
    instance: Instance,
    variant: LoadingVariant | None,
    config: BnCConfig | None = None,
    variant_label: str = "",
) -> SolutionReport:
    """Solve an instance under a loading variant (None = capacity-only CVRP)."""
    config = config or BnCConfig()
    solver = _Solver(instance, variant, config)
    solver.stats["variant_label"] = variant_label
    return solver.run()
