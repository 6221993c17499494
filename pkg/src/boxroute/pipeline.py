"""Route feasibility checking at integer solutions.

For each loading variant the exact checks run in a staged order: a quick
time-limited check of the full variant, then relaxed variants that allow
stronger families of cuts (a set-based cut needs a support-free,
sequence-free proof; a path cut needs a support-free proof), and finally
an unlimited run that settles feasibility. Infeasible sets are shrunk by
dropping the smallest-volume customer, infeasible paths by trimming the
head and then the tail, while infeasibility remains provable within the
per-step budget. Reversed routes are probed to add undirected variants.

A successful check stores the route with its witness packing; every
set-based cut also records the reduced combination for the support-free
relaxation it was proven under.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import cuts as cutlib
from .cuts import CutExpr
from .exact import exact_check
from .instance import Instance
from .loading import Container, LoadingVariant, Packing
from .memory import FeasibleRouteStore, InfeasibleComboStore
from .packer import HeuristicConfig, metaheuristic_pack

__all__ = [
    "PipelineConfig",
    "CheckResult",
    "PreprocessResult",
    "FeasibilityPipeline",
    "TimeLimitReached",
]


class TimeLimitReached(Exception):
    """The global solve deadline expired inside a feasibility check."""


class InstanceInfeasible(Exception):
    """A single customer was proven unservable (support-free check failed),
    so no feasible solution exists at all."""


@dataclass
class PipelineConfig:
    stage_limited: float = 1.0      # time-limited exact stages
    stage_two_path: float = 4.0     # budget of the set-based (2P) stage
    heuristic_time: float = 1.0
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    heuristic_precheck: bool = True  # off in the basic configuration
    lifting: bool = True             # off: plain path rows only
    memo_lookup: bool = True
    memo_insert: bool = True
    seed: int = 0


@dataclass
class CheckResult:
    """``cuts`` separate the triggering solution; ``companions`` are valid
    rows added alongside (reversed-path forms) that need not be violated
    by the current point."""

    accepted: bool
    witness: Packing | None = None
    cuts: list[CutExpr] = field(default_factory=list)
    companions: list[CutExpr] = field(default_factory=list)


@dataclass
class PreprocessResult:
    removed_arcs: set[tuple[int, int]] = field(default_factory=set)
    initial_cuts: list[CutExpr] = field(default_factory=list)
    seeded_routes: int = 0
    seeded_combos: int = 0


class FeasibilityPipeline:
    def __init__(
        self,
        instance: Instance,
        variant: LoadingVariant,
        routes: FeasibleRouteStore,
        combos: InfeasibleComboStore,
        cfg: PipelineConfig | None = None,
        stats: dict | None = None,
        global_deadline: float | None = None,
    ):
        self.instance = instance
        self.variant = variant
        self.container = Container.of(instance.vehicle)
        self.routes = routes
        self.combos = combos
        self.cfg = cfg or PipelineConfig()
        self.stats = stats if stats is not None else {}
        self.global_deadline = global_deadline

    # -- variant relaxations ------------------------------------------
    @property
    def combo_variant(self) -> LoadingVariant:
        """Support-free, sequence-free relaxation used for set-based proofs."""
        if self.variant.lifo != "off":
            return self.variant.with_free_lifo()
        return LoadingVariant.loading_only()

    @property
    def path_variant(self) -> LoadingVariant:
        """Support-free relaxation used for path-based proofs."""
        return self.variant.without_support()

    # -- plumbing ------------------------------------------------------
    def _bump(self, key: str, by=1) -> None:
        self.stats[key] = self.stats.get(key, 0) + by

    def route_items(self, seq):
        out = []
        for cid in seq:
            out.extend(self.instance.customer(cid).items)
        return out

    def _exact(self, seq, variant: LoadingVariant, budget: float | None):
        if self.global_deadline is not None and time.monotonic() >= self.global_deadline:
            raise TimeLimitReached
        self._bump("exact_calls")
        t0 = time.monotonic()
        out = exact_check(
            self.route_items(seq),
            self.container,
            variant,
            budget=budget,
            unload_order=list(seq),
            deadline=self.global_deadline,
        )
        self.stats["exact_time"] = self.stats.get("exact_time", 0.0) + (
            time.monotonic() - t0
        )
        if out.is_unknown and budget is None:
            raise TimeLimitReached  # only the global deadline can interrupt
        return out

    def _heuristic(self, seq, variant: LoadingVariant) -> Packing | None:
        self._bump("heuristic_calls")
        deadline = time.monotonic() + self.cfg.heuristic_time
        if self.global_deadline is not None:
            deadline = min(deadline, self.global_deadline)
        packing = metaheuristic_pack(
            self.route_items(seq),
            self.container,
            variant,
            unload_order=list(seq),
            cfg=self.cfg.heuristic,
            seed=self.cfg.seed,
            deadline=deadline,
        )
        if packing is not None:
            self._bump("heuristic_hits")
        return packing

    def _accept(self, seq, witness: Packing) -> CheckResult:
        if self.cfg.memo_insert:
            self.routes.insert(seq, self.variant, witness)
        return CheckResult(True, witness)

    def _store_combo(self, combo) -> None:
        self.combos.insert(combo, self.combo_variant)
        self._bump("combos_stored")

    # -- reductions ----------------------------------------------------
    def reduce_infeasible_set(self, customers, check_variant, budget) -> frozenset:
        """Drop the smallest-volume customer while infeasibility is provable."""
        current = list(customers)
        while len(current) > 2:
            smallest = min(current, key=lambda c: (self.instance.customer(c).volume, c))
            trial = [c for c in current if c != smallest]
            out = self._exact(trial, check_variant, budget)
            if not out.is_infeasible:
                break
            current = trial
            self._bump("set_reduction_steps")
        return frozenset(current)

    def reduce_infeasible_path(self, path, check_variant, budget) -> list:
        """Trim from the head, then from the tail, while provably infeasible."""
        current = list(path)
        while len(current) > 2:
            trial = current[1:]
            out = self._exact(trial, check_variant, budget)
            if not out.is_infeasible:
                break
            current = trial
            self._bump("path_reduction_steps")
        while len(current) > 2:
            trial = current[:-1]
            out = self._exact(trial, check_variant, budget)
            if not out.is_infeasible:
                break
            current = trial
            self._bump("path_reduction_steps")
        return current

    # -- the staged route check ----------------------------------------
    def check_route(self, seq) -> CheckResult:
        seq = tuple(seq)
        if self.cfg.heuristic_precheck:
            packing = self._heuristic(seq, self.variant)
            if packing is not None:
                return self._accept(seq, packing)

        if not self.cfg.lifting:
            return self._check_basic(seq)

        v = self.variant
        if not v.support and v.lifo == "off":
            return self._check_loading_only(seq)
        if v.lifo == "off":
            return self._check_no_lifo(seq)
        if not v.support:
            return self._check_no_support(seq)
        return self._check_with_support(seq)

    def _check_basic(self, seq) -> CheckResult:
        out = self._exact(seq, self.variant, None)
        if out.is_feasible:
            if self.cfg.memo_insert:
                self.routes.insert(seq, self.variant, out.packing)
            return CheckResult(True, out.packing)
        v = self.variant
        if not v.support and len(seq) == 1:
            raise InstanceInfeasible(f"customer {seq[0]} cannot be served")
        if v.support and v.lifo != "off":
            cut = cutlib.infeasible_path(list(seq) + [0], "itp")
        elif v.lifo == "off":
            cut = cutlib.infeasible_path([0] + list(seq) + [0], "ir")
        else:
            cut = cutlib.infeasible_path(list(seq), "irp")
        return CheckResult(False, cuts=[cut])

    def _try_two_path(self, seq) -> CheckResult | None:
        out = self._exact(seq, self.combo_variant, self.cfg.stage_two_path)
        if not out.is_infeasible:
            return None
        if len(seq) == 1:
            raise InstanceInfeasible(f"customer {seq[0]} cannot be served")
        reduced = self.reduce_infeasible_set(
            seq, self.combo_variant, self.cfg.stage_two_path
        )
        self._store_combo(reduced)
        return CheckResult(False, cuts=[cutlib.two_path(seq)])

    def _check_loading_only(self, seq) -> CheckResult:
        out = self._exact(seq, self.variant, None)
        if out.is_feasible:
            return self._accept(seq, out.packing)
        if len(seq) == 1:
            raise InstanceInfeasible(f"customer {seq[0]} cannot be served")
        reduced = self.reduce_infeasible_set(seq, self.variant, self.cfg.stage_two_path)
        self._store_combo(reduced)
        return CheckResult(False, cuts=[cutlib.two_path(seq)])

    def _check_no_lifo(self, seq) -> CheckResult:
        first = self._exact(seq, self.variant, self.cfg.stage_limited)
        if first.is_feasible:
            return self._accept(seq, first.packing)
        res = self._try_two_path(seq)
        if res is not None:
            return res
        if first.is_unknown:
            final = self._exact(seq, self.variant, None)
            if final.is_feasible:
                return self._accept(seq, final.packing)
        return CheckResult(
            False, cuts=[cutlib.two_path_tail(seq, [c.id for c in self.instance.customers])]
        )

    def _check_no_support(self, seq) -> CheckResult:
        first = self._exact(seq, self.variant, self.cfg.stage_limited)
        if first.is_feasible:
            return self._accept(seq, first.packing)
        res = self._try_two_path(seq)
        if res is not None:
            return res
        if first.is_unknown:
            final = self._exact(seq, self.variant, None)
            if final.is_feasible:
                return self._accept(seq, final.packing)
        if len(seq) == 1:
            # support-free infeasibility is monotone: the customer is lost
            raise InstanceInfeasible(f"customer {seq[0]} cannot be served")
        reduced = self.reduce_infeasible_path(
            list(seq), self.variant, self.cfg.stage_limited
        )
        out_cuts = [cutlib.tournament(reduced)]
        companions = []
        rev = self._exact(tuple(reversed(seq)), self.variant, self.cfg.stage_limited)
        if rev.is_infeasible:
            out_cuts.append(cutlib.undirected_infeasible_path(seq))
            companions.append(cutlib.tournament(list(reversed(seq))))
        return CheckResult(False, cuts=out_cuts, companions=companions)

    def _check_with_support(self, seq) -> CheckResult:
        first = self._exact(seq, self.variant, self.cfg.stage_limited)
        if first.is_feasible:
            return self._accept(seq, first.packing)
        res = self._try_two_path(seq)
        if res is not None:
            return res
        relaxed = self._exact(seq, self.path_variant, self.cfg.stage_limited)
        if relaxed.is_infeasible:
            reduced = self.reduce_infeasible_path(
                list(seq), self.path_variant, self.cfg.stage_limited
            )
            return CheckResult(False, cuts=[cutlib.tournament(reduced)])
        if first.is_unknown:
            final = self._exact(seq, self.variant, None)
            if final.is_feasible:
                return self._accept(seq, final.packing)
        tail = list(seq) + [0]
        out_cuts = [cutlib.tail_tournament(tail)]
        companions = []
        rev = self._exact(tuple(reversed(seq)), self.variant, self.cfg.stage_limited)
        if rev.is_infeasible:
            out_cuts.append(cutlib.undirected_infeasible_tail(tail))
            companions.append(cutlib.tail_tournament(list(reversed(seq)) + [0]))
        return CheckResult(False, cuts=out_cuts, companions=companions)

    # -- quick feasibility for upper-bound machinery --------------------
    def quick_feasible(self, seq, use_exact: bool = True) -> Packing | None:
        """Heuristic-first loading gate with a limited exact fallback.

        Confirmed routes are stored; None means "not proven feasible".
        """
        seq = tuple(seq)
        if self.cfg.memo_lookup:
            witness = self.routes.witness(seq, self.variant)
            if witness is not None:
                self._bump("memo_route_hits")
                return witness
        if self.cfg.heuristic_precheck:
            packing = self._heuristic(seq, self.variant)
            if packing is not None:
                if self.cfg.memo_insert:
                    self.routes.insert(seq, self.variant, packing)
                return packing
        if use_exact:
            out = self._exact(seq, self.variant, self.cfg.stage_limited)
            if out.is_feasible:
                if self.cfg.memo_insert:
                    self.routes.insert(seq, self.variant, out.packing)
                return out.packing
        return None

    # -- preprocessing ---------------------------------------------------
    def preprocess(self) -> PreprocessResult:
        """Pairwise arc elimination, pair-route seeding and initial cuts."""
        result = PreprocessResult()
        inst = self.instance
        ids = [c.id for c in inst.customers]
        relax = self.path_variant
        pair_inf_relaxed: set[tuple[int, int]] = set()

        for i in ids:
            for j in ids:
                if i == j:
                    continue
                pair = (i, j)
                if cutlib.r_of([i, j], inst) > 1:
                    # capacity alone forbids the pair on one vehicle
                    result.removed_arcs.add(pair)
                    continue
                status = self._pair_status(pair, relax)
                if status == "infeasible":
                    pair_inf_relaxed.add(pair)
                    result.removed_arcs.add(pair)
                    continue
                if not self.variant.support:
                    if status == "feasible" and self._seed_pair_route(pair):
                        result.seeded_routes += 1
                    continue
                full = self._pair_status(pair, self.variant)
                if full == "feasible":
                    if self._seed_pair_route(pair):
                        result.seeded_routes += 1
                elif full == "infeasible":
                    if self._pair_extensions_all_infeasible(pair, ids, relax):
                        result.removed_arcs.add(pair)
                    else:
                        result.initial_cuts.append(
                            cutlib.infeasible_path([i, j, 0], "itp")
                        )

        for i in ids:
            for j in ids:
                if i < j and (i, j) in pair_inf_relaxed and (j, i) in pair_inf_relaxed:
                    # both orders fail without support, hence the set is out
                    self._store_combo(frozenset((i, j)))
                    result.seeded_combos += 1
        return result

    def _pair_status(self, seq, variant: LoadingVariant) -> str:
        if self.cfg.heuristic_precheck:
            if self._heuristic(seq, variant) is not None:
                return "feasible"
        out = self._exact(seq, variant, self.cfg.stage_limited)
        return out.status

    def _seed_pair_route(self, pair) -> bool:
        if not self.cfg.memo_insert:
            return False
        witness = self.routes.witness(pair, self.variant)
        if witness is not None:
            return False
        packing = None
        if self.cfg.heuristic_precheck:
            packing = self._heuristic(pair, self.variant)
        if packing is None:
            out = self._exact(pair, self.variant, self.cfg.stage_limited)
            packing = out.packing if out.is_feasible else None
        if packing is None:
            return False
        return self.routes.insert(pair, self.variant, packing)

    def _pair_extensions_all_infeasible(self, pair, ids, relax) -> bool:
        i, j = pair
        for k in ids:
            if k in pair:
                continue
            status = self._pair_status((i, j, k), relax)
            if status != "infeasible":
                return False
        return True
