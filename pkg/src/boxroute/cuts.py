"""Inequality constructors over arc variables and fractional separation.

All cuts are sparse "<=" rows over directed arcs (i, j) with node 0 as
the depot. Families:

* gsec        -- generalized subtour elimination with vehicle bound r(S)
* 2p          -- no single route may serve all of S (support-free proof)
* rt / uip    -- (undirected) tournament lifting of an infeasible
                 customer path
* tt / uitp   -- tail-path tournament forms; arcs into the depot carry
                 coefficient 0.5
* 2pt         -- no route over exactly S (cross arcs enter with -1)
* itp/ir/irp  -- plain infeasible-path rows (basic configuration)
* rci         -- rounded-capacity cuts found at fractional points
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "CutExpr",
    "r_of",
    "gsec",
    "two_path",
    "tournament",
    "undirected_infeasible_path",
    "tail_tournament",
    "undirected_infeasible_tail",
    "two_path_tail",
    "infeasible_path",
    "violation",
    "separate_rounded_capacity",
]

Arc = tuple[int, int]

KINDS = ("gsec", "2p", "2pt", "rt", "tt", "uip", "uitp", "itp", "ir", "irp", "rci")


@dataclass(frozen=True)
class CutExpr:
    """sum(terms[arc] * x[arc]) <= rhs"""

    terms: dict[Arc, float] = field(compare=False)
    rhs: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cut kind {self.kind!r}")
        if not self.terms:
            raise ValueError("cut has no terms")

    def signature(self) -> tuple:
        return (self.kind, tuple(sorted(self.terms.items())), round(self.rhs, 9))

    def restricted_to(self, arcs) -> "CutExpr":
        """Drop terms whose arc was eliminated (their variable is fixed 0)."""
        kept = {a: c for a, c in self.terms.items() if a in arcs}
        if not kept:
            raise ValueError("cut references no remaining arcs")
        return CutExpr(kept, self.rhs, self.kind)


def violation(cut: CutExpr, x) -> float:
    """LHS(x) - rhs; positive means the point violates the cut."""
    return sum(c * x.get(a, 0.0) for a, c in cut.terms.items()) - cut.rhs


def r_of(customers, instance) -> int:
    """Lower bound on vehicles needed for a customer set (weight+volume)."""
    customers = list(customers)
    if not customers:
        raise ValueError("r(S) needs a nonempty set")
    q = instance.weight_of(customers)
    v = instance.volume_of(customers)
    veh = instance.vehicle
    r = max(
        math.ceil(q / veh.weight_capacity - 1e-9),
        math.ceil(v / veh.volume - 1e-9),
    )
    return max(1, r)


def _within(nodes) -> dict[Arc, float]:
    nodes = list(nodes)
    return {(i, j): 1.0 for i in nodes for j in nodes if i != j}


def gsec(customers, r: int, kind: str = "gsec") -> CutExpr:
    s = list(customers)
    if not s:
        raise ValueError("GSEC over an empty set")
    return CutExpr(_within(s), len(s) - r, kind)


def two_path(customers) -> CutExpr:
    s = list(customers)
    return CutExpr(_within(s), len(s) - 2, "2p")


def tournament(path) -> CutExpr:
    p = list(path)
    if 0 in p:
        raise ValueError("tournament paths must not contain the depot")
    if len(p) < 2:
        raise ValueError("path too short")
    terms = {(p[i], p[j]): 1.0 for i in range(len(p)) for j in range(i + 1, len(p))}
    return CutExpr(terms, len(p) - 2, "rt")


def undirected_infeasible_path(path) -> CutExpr:
    p = list(path)
    if 0 in p:
        raise ValueError("UIP paths must not contain the depot")
    terms: dict[Arc, float] = {}
    for a, b in zip(p, p[1:]):
        terms[(a, b)] = 1.0
        terms[(b, a)] = 1.0
    return CutExpr(terms, len(p) - 2, "uip")


def tail_tournament(tail_path) -> CutExpr:
    p = list(tail_path)
    if len(p) < 2 or p[-1] != 0 or 0 in p[:-1]:
        raise ValueError("tail paths are customer sequences ending at the depot")
    inner = p[:-1]
    terms = {
        (inner[i], inner[j]): 1.0
        for i in range(len(inner))
        for j in range(i + 1, len(inner))
    }
    for c in inner:
        terms[(c, 0)] = 0.5
    return CutExpr(terms, len(p) - 2, "tt")


def undirected_infeasible_tail(tail_path) -> CutExpr:
    p = list(tail_path)
    if len(p) < 2 or p[-1] != 0 or 0 in p[:-1]:
        raise ValueError("tail paths are customer sequences ending at the depot")
    inner = p[:-1]
    terms: dict[Arc, float] = {}
    for a, b in zip(inner, inner[1:]):
        terms[(a, b)] = 1.0
        terms[(b, a)] = 1.0
    for c in inner:
        terms[(c, 0)] = 0.5
    return CutExpr(terms, len(p) - 2, "uitp")


def two_path_tail(customers, all_customers) -> CutExpr:
    s = list(customers)
    rest = [c for c in all_customers if c not in set(s)]
    terms = _within(s)
    for i in s:
        for j in rest:
            terms[(i, j)] = -1.0
            terms[(j, i)] = -1.0
    return CutExpr(terms, len(s) - 2, "2pt")


def infeasible_path(nodes, kind: str) -> CutExpr:
    """Plain path row: arcs of the node sequence, rhs |A(P)| - 1."""
    p = list(nodes)
    if kind not in ("itp", "ir", "irp"):
        raise ValueError(f"plain path cuts are itp/ir/irp, got {kind!r}")
    if len(p) < 2:
        raise ValueError("path too short")
    terms = {(a, b): 1.0 for a, b in zip(p, p[1:])}
    return CutExpr(terms, len(p) - 2, kind)


# ---------------------------------------------------------------------------
# rounded-capacity separation (heuristic)

_THRESHOLDS = tuple(t / 10 for t in range(1, 10))
_MIN_VIOLATION = 1e-7


def separate_rounded_capacity(x, instance) -> list[CutExpr]:
    """Search for customer sets S with x(A(S)) > |S| - r(S).

    Heuristic: connected components of the support graph at a sweep of
    edge thresholds, plus greedy set growth from every customer. Returns
    rounded-capacity cuts (kind "rci"); an empty list is a valid outcome.
    """
    n = instance.n
    ids = [c.id for c in instance.customers]
    w: dict[int, dict[int, float]] = {i: {} for i in ids}
    for (i, j), val in x.items():
        if i == 0 or j == 0 or val <= 1e-12:
            continue
        w[i][j] = w[i].get(j, 0.0) + val
        w[j][i] = w[j].get(i, 0.0) + val

    def inner_mass(s: set[int]) -> float:
        return sum(
            val for (i, j), val in x.items() if i in s and j in s
        )

    candidates: list[frozenset[int]] = []
    seen: set[frozenset[int]] = set()

    def push(s) -> None:
        fs = frozenset(s)
        if 2 <= len(fs) <= n and fs not in seen:
            seen.add(fs)
            candidates.append(fs)

    for theta in _THRESHOLDS:
        unvisited = set(ids)
        while unvisited:
            start = min(unvisited)
            comp = {start}
            stack = [start]
            unvisited.discard(start)
            while stack:
                u = stack.pop()
                for v, val in w[u].items():
                    if v in unvisited and val > theta:
                        unvisited.discard(v)
                        comp.add(v)
                        stack.append(v)
            push(comp)

    for seed in ids:
        s = {seed}
        while len(s) < n:
            best, best_val = None, 0.0
            for c in ids:
                if c in s:
                    continue
                val = sum(w[c].get(m, 0.0) for m in s)
                if val > best_val + 1e-12:
                    best, best_val = c, val
            if best is None:
                break
            s.add(best)
            push(s)

    cuts = []
    for s in candidates:
        r = r_of(s, instance)
        viol = inner_mass(set(s)) - (len(s) - r)
        if viol > _MIN_VIOLATION:
            cuts.append((viol, sorted(s), gsec(s, r, kind="rci")))
    cuts.sort(key=lambda t: (-t[0], t[1]))
    out = []
    sigs = set()
    for _, _, cut in cuts:
        sig = cut.signature()
        if sig not in sigs:
            sigs.add(sig)
            out.append(cut)
    return out
