"""Exact decision procedure for container-loading feasibility.

A depth-first backtracking search over integer placements with both
orientations per item. Items are placed deepest-first (reverse unload
order, larger volume first) and positions are tried in lexicographic
(x, y, z) order, which mirrors the constructive heuristic so feasible
witnesses surface early.

Coordinate domains are reduced to provably sufficient candidate sets:

* Any packing can be normalized by sliding items toward the walls until
  they touch a face of another item (or must stop one unit short of a
  fragile top), so x/y/z candidates are 0/1-subset sums of the item
  extents -- with a +1 slack option in z when fragility is active
  without support, because a non-fragile item may have to hover just
  above a fragile one.
* When the support constraint is active (ratio > 0) every item's bottom
  must coincide with the floor or with item tops, so z candidates stay
  subset sums of heights; x and y, however, may be forced to arbitrary
  positions by the area ratio and therefore range over all integers.

Agreement with an unreduced brute-force enumeration is part of the test
suite.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from .instance import ItemSpec
from .loading import (
    Container,
    LoadingVariant,
    Packing,
    Placement,
    validate_packing,
)

__all__ = ["LoadCheckOutcome", "exact_check", "FEASIBLE", "INFEASIBLE", "UNKNOWN"]

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

_TICK_MASK = 0x1F  # deadline polled every 32 search steps


@dataclass(frozen=True)
class LoadCheckOutcome:
    status: str
    packing: Packing | None = None
    reason: str = ""

    @property
    def is_feasible(self) -> bool:
        return self.status == FEASIBLE

    @property
    def is_infeasible(self) -> bool:
        return self.status == INFEASIBLE

    @property
    def is_unknown(self) -> bool:
        return self.status == UNKNOWN


class _Timeout(Exception):
    pass


def _axis_candidates(option_sets, limit: int, slack: int = 0) -> list[int]:
    """0/1-subset sums where each item contributes one of its extents.

    ``slack`` = 1 additionally allows extent+1 per contribution (hover
    gap above fragile items).
    """
    reach = bytearray(limit + 1)
    reach[0] = 1
    for opts in option_sets:
        new = bytearray(reach)
        for v in range(limit + 1):
            if not reach[v]:
                continue
            for o in opts:
                for s in range(slack + 1):
                    t = v + o + s
                    if t <= limit:
                        new[t] = 1
        reach = new
    return [v for v in range(limit + 1) if reach[v]]


def _orientations(item: ItemSpec) -> list[tuple[int, int, bool]]:
    # short side along x first; squares have a single orientation
    dims = [(item.length, item.width, False), (item.width, item.length, True)]
    if item.length == item.width:
        dims = dims[:1]
    dims.sort(key=lambda d: (d[0], d[1]))
    return dims


class _Search:
    """Hot path works on plain tuples:
    (x, y, z, x2, y2, z2, fragile, rank, rot) per placed item."""

    def __init__(self, items, container, variant, unload_order, deadline):
        self.container = container
        self.variant = variant
        self.deadline = deadline
        self.ticks = 0
        rank = {g: r for r, g in enumerate(unload_order)}
        self.rank = rank
        # deepest-first: later-unloaded groups are placed first
        self.items = sorted(
            items, key=lambda it: (-rank[it.group_id], -it.volume, it.length, it.width)
        )
        self.orients = [_orientations(it) for it in self.items]
        ratio = variant.support_ratio
        self.support_on = variant.support and ratio > 0
        self.ratio = ratio
        self.frag_on = variant.fragility
        self.lifo_on = variant.lifo != "off"
        self._build_domains()
        self.placed: list[tuple] = []
        areas = [it.base_area for it in self.items]
        self.suffix_area = [0] * (len(areas) + 1)
        for i in range(len(areas) - 1, -1, -1):
            self.suffix_area[i] = self.suffix_area[i + 1] + areas[i]

    def _build_domains(self):
        box = self.container
        horiz = [{it.length, it.width} for it in self.items]
        heights = [{it.height} for it in self.items]
        if self.support_on and self.ratio < 1.0:
            # a partial area ratio can pin an item at any integer offset
            self.xs = list(range(box.length))
            self.ys = list(range(box.width))
            self.zs = _axis_candidates(heights, box.height - 1)
        elif self.support_on:
            # full support: sliding stops on face alignments only
            self.xs = _axis_candidates(horiz, box.length - 1)
            self.ys = _axis_candidates(horiz, box.width - 1)
            self.zs = _axis_candidates(heights, box.height - 1)
        else:
            z_slack = 1 if self.variant.fragility else 0
            self.xs = _axis_candidates(horiz, box.length - 1)
            self.ys = _axis_candidates(horiz, box.width - 1)
            self.zs = _axis_candidates(heights, box.height - 1, slack=z_slack)

    def _tick(self):
        self.ticks += 1
        if self.deadline is not None and (self.ticks & _TICK_MASK) == 0:
            if time.monotonic() >= self.deadline:
                raise _Timeout

    def _support_state_ok(self, depth: int, final: bool) -> bool:
        """Hovering items must reach the ratio, now or with future help."""
        if not self.support_on:
            return True
        need = self.ratio
        future = 0 if final else self.suffix_area[depth]
        placed = self.placed
        for p in placed:
            if p[2] == 0:
                continue
            covered = 0
            px, py, pz, px2, py2 = p[0], p[1], p[2], p[3], p[4]
            for q in placed:
                if q is p or q[5] != pz:
                    continue
                w = min(px2, q[3]) - max(px, q[0])
                if w <= 0:
                    continue
                h = min(py2, q[4]) - max(py, q[1])
                if h > 0:
                    covered += w * h
            if covered + future < need * (px2 - px) * (py2 - py):
                return False
        return True

    def run(self) -> str:
        box = self.container
        if sum(it.volume for it in self.items) > box.volume:
            return INFEASIBLE
        try:
            return FEASIBLE if self._place(0) else INFEASIBLE
        except _Timeout:
            return UNKNOWN

    def _place(self, depth: int) -> bool:
        if depth == len(self.items):
            return self._support_state_ok(depth, final=True)
        item = self.items[depth]
        box_l, box_w, box_h = (
            self.container.length,
            self.container.width,
            self.container.height,
        )
        h = item.height
        fragile = item.fragile
        my_rank = self.rank[item.group_id]
        placed = self.placed
        frag_on, lifo_on = self.frag_on, self.lifo_on
        # identical items are interchangeable: force nondecreasing positions
        min_pos = None
        if depth > 0:
            prev = self.items[depth - 1]
            if (
                prev.length == item.length
                and prev.width == item.width
                and prev.height == item.height
                and prev.fragile == item.fragile
                and prev.group_id == item.group_id
            ):
                last = placed[-1]
                min_pos = (last[0], last[1], last[2])
        zs = [z for z in self.zs if z + h <= box_h]
        for x in self.xs:
            for y in self.ys:
                for z in zs:
                    if min_pos is not None and (x, y, z) < min_pos:
                        continue
                    z2 = z + h
                    for lx, ly, rot in self.orients[depth]:
                        self._tick()
                        x2 = x + lx
                        y2 = y + ly
                        if x2 > box_l or y2 > box_w:
                            continue
                        ok = True
                        for q in placed:
                            qx, qy, qz, qx2, qy2, qz2, qfrag, qrank, _ = q
                            xo = x < qx2 and qx < x2
                            yo = y < qy2 and qy < y2
                            zo = z < qz2 and qz < z2
                            if xo and yo:
                                if zo:
                                    ok = False
                                    break
                                if frag_on:
                                    if fragile and not qfrag and z2 == qz:
                                        ok = False
                                        break
                                    if qfrag and not fragile and qz2 == z:
                                        ok = False
                                        break
                            if lifo_on and my_rank != qrank:
                                if my_rank < qrank:
                                    # q is unloaded after this item
                                    if qx >= x2 and yo and zo:
                                        ok = False
                                        break
                                    if qz >= z2 and xo and yo:
                                        ok = False
                                        break
                                else:
                                    if x >= qx2 and yo and zo:
                                        ok = False
                                        break
                                    if z >= qz2 and xo and yo:
                                        ok = False
                                        break
                        if not ok:
                            continue
                        placed.append((x, y, z, x2, y2, z2, fragile, my_rank, rot))
                        if self._support_state_ok(depth + 1, final=False) and self._place(
                            depth + 1
                        ):
                            return True
                        placed.pop()
        return False

    def witness_placements(self):
        out = []
        for item, p in zip(self.items, self.placed):
            out.append(Placement(item, p[0], p[1], p[2], p[8]))
        return tuple(out)


def exact_check(
    items,
    container: Container,
    variant: LoadingVariant,
    budget: float | None = None,
    seed: int = 0,
    unload_order=None,
    deadline: float | None = None,
) -> LoadCheckOutcome:
    """Decide feasibility of packing ``items`` under ``variant``.

    ``budget`` is a per-call limit in seconds (None = unlimited); an
    optional external ``deadline`` (time.monotonic value) is honored as
    well. INFEASIBLE is only returned after exhausting the search space;
    hitting a limit yields UNKNOWN. The search is deterministic; ``seed``
    is accepted for interface stability.
    """
    del seed
    items = list(items)
    if unload_order is None:
        unload_order = list(dict.fromkeys(it.group_id for it in items))
    else:
        unload_order = list(unload_order)
        known = set(unload_order)
        for it in items:  # groups absent from the order go to the back
            if it.group_id not in known:
                unload_order.append(it.group_id)
                known.add(it.group_id)

    for it in items:
        fits = it.height <= container.height and (
            (it.length <= container.length and it.width <= container.width)
            or (it.width <= container.length and it.length <= container.width)
        )
        if not fits:
            return LoadCheckOutcome(
                INFEASIBLE, reason=f"item {it.length}x{it.width}x{it.height} cannot fit"
            )
    if not items:
        return LoadCheckOutcome(FEASIBLE, Packing(container, (), tuple(unload_order)))

    end = None
    if budget is not None:
        end = time.monotonic() + budget
    if deadline is not None:
        end = deadline if end is None else min(end, deadline)
    if end is not None and time.monotonic() >= end:
        return LoadCheckOutcome(UNKNOWN)

    if variant.lifo == "free":
        groups = sorted(set(it.group_id for it in items))
        saw_unknown = False
        for perm in itertools.permutations(groups):
            search = _Search(items, container, variant, list(perm), end)
            status = search.run()
            if status == FEASIBLE:
                return _witness(search, container, perm)
            if status == UNKNOWN:
                saw_unknown = True
        return LoadCheckOutcome(UNKNOWN if saw_unknown else INFEASIBLE)

    search = _Search(items, container, variant, unload_order, end)
    status = search.run()
    if status == FEASIBLE:
        return _witness(search, container, unload_order)
    return LoadCheckOutcome(status)


def _witness(search: _Search, container: Container, unload_order) -> LoadCheckOutcome:
    packing = Packing(container, search.witness_placements(), tuple(unload_order))
    bad = validate_packing(packing, search.variant)
    if bad:  # internal consistency guard; should be unreachable
        raise AssertionError(f"exact search produced an invalid witness: {bad}")
    return LoadCheckOutcome(FEASIBLE, packing)
