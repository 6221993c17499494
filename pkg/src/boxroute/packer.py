"""Fast feasibility heuristic for the container-loading subproblem.

A constructive placement pass puts items one at a time on candidate
placement points: the best position is the lexicographically smallest
feasible (x, y, z) over both orientations, ties broken toward the
shorter side lying along x. Points come from two generators, normal
patterns (subset sums of item extents, seeded on the container floor
and re-projected onto top faces of placed items) and extreme points
(corner projections toward the walls).

On top of that sits an iterated-greedy search over the placement
sequence: full enumeration for few items, otherwise a variable
neighborhood descent with a pipe change step over swap and insertion
moves, restricted by how far a move displaces an item from its group's
slot in the strict last-in-first-out sequence, plus a locally
restricted random swap perturbation.

The heuristic answers feasibility only. It is sound (every returned
packing revalidates) and makes no completeness claim.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass

from .loading import Container, LoadingVariant, Packing, Placement, validate_packing

__all__ = [
    "HeuristicConfig",
    "StrictLifoIndex",
    "lifo_distance",
    "total_lifo_distance",
    "constructive_pack",
    "metaheuristic_pack",
]


@dataclass(frozen=True)
class HeuristicConfig:
    enum_threshold: int = 7       # below this many items, enumerate all sequences
    lifo_tolerance: int = 2       # tolerance inside the total-displacement sum
    lifo_eval_window: int = 4     # moves beyond this displacement are not evaluated
    swap_window: int = 3          # perturbation swap distance
    max_perturbations: int = 50

    def __post_init__(self):
        for name in ("enum_threshold", "lifo_tolerance", "lifo_eval_window",
                     "swap_window", "max_perturbations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def lifo_distance(start: int, end: int, k: int, tol: int) -> int:
    """Displacement of sequence index k from the group slot [start, end]."""
    if k < start - tol:
        return start - k
    if k > end + tol:
        return k - end
    return 0


class StrictLifoIndex:
    """Group slots in the strict LIFO placement sequence.

    The strict sequence places the last-unloaded group first (it ends up
    deepest in the container), so slots are contiguous index ranges per
    group in reverse unload order.
    """

    def __init__(self, items, unload_order):
        rank = {g: r for r, g in enumerate(unload_order)}
        order = sorted(
            range(len(items)),
            key=lambda i: (
                -rank.get(items[i].group_id, -1),
                -items[i].base_area,
                -items[i].height,
                i,
            ),
        )
        self.strict_sequence = tuple(order)
        self.slots: dict[int, tuple[int, int]] = {}
        for pos, idx in enumerate(order):
            g = items[idx].group_id
            if g in self.slots:
                self.slots[g] = (self.slots[g][0], pos)
            else:
                self.slots[g] = (pos, pos)
        self._groups = [it.group_id for it in items]

    def distance(self, item_idx: int, k: int, tol: int) -> int:
        start, end = self.slots[self._groups[item_idx]]
        return lifo_distance(start, end, k, tol)

    def total(self, sequence, tol: int) -> int:
        return sum(self.distance(idx, k, tol) for k, idx in enumerate(sequence))


def total_lifo_distance(sequence, index: StrictLifoIndex, tol: int) -> int:
    return index.total(sequence, tol)


def _axis_sums(extent_options, limit: int) -> list[int]:
    reach = bytearray(limit + 1)
    reach[0] = 1
    for opts in extent_options:
        new = bytearray(reach)
        for v in range(limit + 1):
            if reach[v]:
                for o in opts:
                    if v + o <= limit:
                        new[v + o] = 1
        reach = new
    return [v for v in range(limit + 1) if reach[v]]


class _PointSet:
    """Candidate placement points with the two augmentation schemes."""

    def __init__(self, items, container: Container):
        self.container = container
        horiz = [{it.length, it.width} for it in items]
        self.np_x = _axis_sums(horiz, container.length - 1)
        self.np_y = _axis_sums(horiz, container.width - 1)
        self.points = {(x, y, 0) for x in self.np_x for y in self.np_y}

    def sorted_points(self):
        return sorted(self.points)

    def _project_y(self, a: int, b: int, c: int, placed) -> int:
        best = 0
        for q in placed:
            if q.x <= a < q.x2 and q.z <= c < q.z2 and q.y2 <= b:
                best = max(best, q.y2)
        return best

    def _project_x(self, a: int, b: int, c: int, placed) -> int:
        best = 0
        for q in placed:
            if q.y <= b < q.y2 and q.z <= c < q.z2 and q.x2 <= a:
                best = max(best, q.x2)
        return best

    def _project_z(self, a: int, b: int, c: int, placed) -> int:
        best = 0
        for q in placed:
            if q.x <= a < q.x2 and q.y <= b < q.y2 and q.z2 <= c:
                best = max(best, q.z2)
        return best

    def register(self, p: Placement, placed) -> None:
        box = self.container
        new_pts = []
        # extreme points: three corners, each projected in two directions
        cx, cy, cz = p.x2, p.y, p.z
        if cx < box.length:
            new_pts.append((cx, self._project_y(cx, cy, cz, placed), cz))
            new_pts.append((cx, cy, self._project_z(cx, cy, cz, placed)))
        cx, cy, cz = p.x, p.y2, p.z
        if cy < box.width:
            new_pts.append((self._project_x(cx, cy, cz, placed), cy, cz))
            new_pts.append((cx, cy, self._project_z(cx, cy, cz, placed)))
        cx, cy, cz = p.x, p.y, p.z2
        if cz < box.height:
            new_pts.append((self._project_x(cx, cy, cz, placed), cy, cz))
            new_pts.append((cx, self._project_y(cx, cy, cz, placed), cz))
        # normal-pattern augmentation on the top face
        if p.z2 < box.height:
            for gx in self.np_x:
                if p.x <= gx < p.x2:
                    for gy in self.np_y:
                        if p.y <= gy < p.y2:
                            new_pts.append((gx, gy, p.z2))
        self.points.update(new_pts)
        # points swallowed by the new box can never host a corner again
        self.points = {
            pt
            for pt in self.points
            if not (p.x <= pt[0] < p.x2 and p.y <= pt[1] < p.y2 and p.z <= pt[2] < p.z2)
        }


def _orientations(item):
    dims = [(item.length, item.width, False), (item.width, item.length, True)]
    if item.length == item.width:
        dims = dims[:1]
    dims.sort(key=lambda d: (d[0], d[1]))
    return dims


def _placement_ok(cand: Placement, placed, variant: LoadingVariant, rank) -> bool:
    box_support = variant.support and variant.support_ratio > 0
    for q in placed:
        xo = cand.x < q.x2 and q.x < cand.x2
        yo = cand.y < q.y2 and q.y < cand.y2
        zo = cand.z < q.z2 and q.z < cand.z2
        if xo and yo and zo:
            return False
        if variant.fragility and xo and yo:
            if cand.item.fragile and not q.item.fragile and cand.z2 == q.z:
                return False
            if q.item.fragile and not cand.item.fragile and q.z2 == cand.z:
                return False
        if variant.lifo != "off":
            ra = rank.get(cand.item.group_id, 0)
            rb = rank.get(q.item.group_id, 0)
            if ra != rb:
                a, b = (cand, q) if ra < rb else (q, cand)
                if b.x >= a.x2 and yo and a.z < b.z2 and b.z < a.z2:
                    return False
                if b.z >= a.z2 and xo and yo:
                    return False
    if box_support and cand.z > 0:
        covered = 0
        for q in placed:
            if q.z2 != cand.z:
                continue
            covered += max(0, min(cand.x2, q.x2) - max(cand.x, q.x)) * max(
                0, min(cand.y2, q.y2) - max(cand.y, q.y)
            )
        if covered < variant.support_ratio * cand.base_area:
            return False
    return True


def constructive_pack(
    items,
    container: Container,
    variant: LoadingVariant,
    unload_order,
    sequence=None,
    abort_on_skip: bool = False,
):
    """Place items along ``sequence`` (indices into ``items``).

    Returns (packing, skipped_indices). Skipped items generate no new
    placement points; with ``abort_on_skip`` the pass stops at the first
    failure (used for move evaluation inside the metaheuristic).
    """
    items = list(items)
    if sequence is None:
        sequence = range(len(items))
    rank = {g: r for r, g in enumerate(unload_order)}
    points = _PointSet(items, container)
    placed: list[Placement] = []
    skipped: list[int] = []
    for idx in sequence:
        item = items[idx]
        choice = None
        for pt in points.sorted_points():
            for lx, ly, rot in _orientations(item):
                x, y, z = pt
                if x + lx > container.length or y + ly > container.width or z + item.height > container.height:
                    continue
                cand = Placement(item, x, y, z, rot)
                if _placement_ok(cand, placed, variant, rank):
                    choice = cand
                    break
            if choice is not None:
                break
        if choice is None:
            skipped.append(idx)
            if abort_on_skip:
                break
            continue
        placed.append(choice)
        points.register(choice, placed)
    return Packing(container, tuple(placed), tuple(unload_order)), skipped


def metaheuristic_pack(
    items,
    container: Container,
    variant: LoadingVariant,
    unload_order=None,
    cfg: HeuristicConfig | None = None,
    seed: int = 0,
    deadline: float | None = None,
) -> Packing | None:
    """Search for a feasible packing; None signals failure (not a proof).

    Deterministic for a fixed seed/config/input. Any returned packing has
    been revalidated against the requested variant.
    """
    items = list(items)
    cfg = cfg or HeuristicConfig()
    if unload_order is None:
        unload_order = list(dict.fromkeys(it.group_id for it in items))
    unload_order = tuple(unload_order)
    if not items:
        return Packing(container, (), unload_order)
    if sum(it.volume for it in items) > container.volume:
        return None

    index = StrictLifoIndex(items, unload_order)

    def out_of_time() -> bool:
        return deadline is not None and time.monotonic() >= deadline

    def evaluate(seq, abort):
        packing, skipped = constructive_pack(
            items, container, variant, unload_order, seq, abort_on_skip=abort
        )
        return packing, len(packing.placements)

    def finish(packing: Packing) -> Packing | None:
        return packing if not validate_packing(packing, variant) else None

    seq0 = index.strict_sequence
    packing, placed = evaluate(seq0, abort=False)
    if placed == len(items):
        return finish(packing)

    if len(items) <= cfg.enum_threshold:
        for perm in itertools.permutations(range(len(items))):
            if perm == seq0:
                continue
            if out_of_time():
                return None
            packing, placed = evaluate(perm, abort=True)
            if placed == len(items):
                return finish(packing)
        return None

    rng = random.Random(seed)
    best_seq = list(seq0)
    best_score = (placed, -index.total(seq0, cfg.lifo_tolerance))

    def moves(kind, seq):
        n = len(seq)
        if kind == "swap":
            for i in range(n):
                for j in range(i + 1, n):
                    if (
                        index.distance(seq[i], j, 0) <= cfg.lifo_eval_window
                        and index.distance(seq[j], i, 0) <= cfg.lifo_eval_window
                    ):
                        new = list(seq)
                        new[i], new[j] = new[j], new[i]
                        yield new
        else:  # insertion
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    if index.distance(seq[i], j, 0) <= cfg.lifo_eval_window:
                        new = list(seq)
                        item = new.pop(i)
                        new.insert(j, item)
                        yield new

    perturbations = 0
    while perturbations <= cfg.max_perturbations:
        k = 0
        while k < 2:
            kind = ("swap", "insertion")[k]
            best_move = None
            best_move_score = best_score
            for cand_seq in moves(kind, best_seq):
                if out_of_time():
                    return None
                packing, placed = evaluate(cand_seq, abort=True)
                if placed == len(items):
                    result = finish(packing)
                    if result is not None:
                        return result
                score = (placed, -index.total(cand_seq, cfg.lifo_tolerance))
                if score > best_move_score:
                    best_move, best_move_score = cand_seq, score
            if best_move is not None:
                best_seq, best_score = best_move, best_move_score
                # pipe change step: keep descending in the same neighborhood
            else:
                k += 1
        if perturbations == cfg.max_perturbations or out_of_time():
            break
        # locally restricted random swap
        n = len(best_seq)
        for _ in range(8 * n):
            i = rng.randrange(n)
            j = rng.randrange(n)
            if i != j and index.distance(best_seq[i], j, 0) <= cfg.swap_window:
                best_seq[i], best_seq[j] = best_seq[j], best_seq[i]
                break
        packing, placed = evaluate(best_seq, abort=True)
        if placed == len(items):
            result = finish(packing)
            if result is not None:
                return result
        best_score = (placed, -index.total(best_seq, cfg.lifo_tolerance))
        perturbations += 1
    return None
