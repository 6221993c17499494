"""Solution reports, the canonical solution JSON format and its validator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .instance import Instance
from .loading import Container, LoadingVariant, Packing, Placement, validate_packing

__all__ = [
    "SolutionReport",
    "variant_from_label",
    "VARIANT_LABELS",
    "write_solution",
    "read_solution",
    "validate_solution",
]

VARIANT_LABELS = ("all", "no-fragility", "no-lifo", "no-support", "loading-only", "cvrp")


def variant_from_label(label: str, support_ratio: float = 0.75) -> LoadingVariant | None:
    """Map a CLI variant label to a loading variant; "cvrp" maps to None
    (pure capacity relaxation, no loading checks)."""
    table = {
        "all": lambda: LoadingVariant.all_constraints(support_ratio),
        "no-fragility": lambda: LoadingVariant.no_fragility(support_ratio),
        "no-lifo": lambda: LoadingVariant.no_lifo(support_ratio),
        "no-support": lambda: LoadingVariant.no_support(),
        "loading-only": lambda: LoadingVariant.loading_only(),
        "cvrp": lambda: None,
    }
    if label not in table:
        raise ValueError(f"unknown variant {label!r}; expected one of {VARIANT_LABELS}")
    return table[label]()


@dataclass
class SolutionReport:
    instance_name: str
    variant_label: str
    status: str                      # optimal | time_limit | infeasible
    objective: float | None
    lower_bound: float
    routes: list[tuple[int, ...]] = field(default_factory=list)
    packings: list[Packing | None] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    cut_audit: list = field(default_factory=list)  # (kind, violation, signature)

    @property
    def gap(self) -> float | None:
        if self.objective is None:
            return None
        if abs(self.objective) < 1e-12:
            return 0.0 if abs(self.lower_bound) < 1e-12 else 1.0
        return max(0.0, (self.objective - self.lower_bound) / abs(self.objective))


def _placement_entries(instance: Instance, seq, packing: Packing | None):
    if packing is None:
        return []
    remaining: dict[int, list[int]] = {
        cid: list(range(len(instance.customer(cid).items))) for cid in seq
    }
    entries = []
    for pl in packing.placements:
        cid = pl.item.group_id
        idx = None
        for cand in remaining.get(cid, ()):
            if instance.customer(cid).items[cand] == pl.item:
                idx = cand
                break
        if idx is None:
            raise ValueError(
                f"packing for route {seq} places an item that customer {cid} "
                "does not have (or places it twice)"
            )
        remaining[cid].remove(idx)
        entries.append(
            {
                "customer": cid,
                "item": idx,
                "x": pl.x,
                "y": pl.y,
                "z": pl.z,
                "rotated": pl.rotated,
            }
        )
    return entries


def write_solution(report: SolutionReport, instance: Instance) -> str:
    """Serialize a report; routes must partition the customer set."""
    seen: set[int] = set()
    for seq in report.routes:
        for cid in seq:
            if cid in seen:
                raise ValueError(f"customer {cid} appears on more than one route")
            seen.add(cid)
    if report.routes and seen != {c.id for c in instance.customers}:
        missing = sorted({c.id for c in instance.customers} - seen)
        raise ValueError(f"routes do not cover customers {missing}")

    def _num(v):
        if v is None or not math.isfinite(v):
            return None
        return v

    stats = {k: v for k, v in report.stats.items() if k != "cut_ledger"}
    doc = {
        "instance": report.instance_name,
        "variant": report.variant_label,
        "objective": _num(report.objective),
        "lower_bound": _num(report.lower_bound),
        "gap": _num(report.gap),
        "routes": [
            {
                "sequence": list(seq),
                "placements": _placement_entries(instance, seq, packing),
            }
            for seq, packing in zip(report.routes, report.packings)
        ],
        "stats": stats,
    }
    return json.dumps(doc, indent=2)


def read_solution(text: str) -> dict:
    doc = json.loads(text)
    if not isinstance(doc, dict) or "routes" not in doc:
        raise ValueError("not a solution document")
    return doc


def validate_solution(
    instance: Instance,
    doc: dict,
    support_ratio: float | None = None,
) -> list[str]:
    """Independent checks of a solution file against its instance.

    Returns a list of human-readable violations (empty = clean). The
    loading constraints checked follow the variant declared in the file;
    hovering items are legal whenever the variant disables support.
    """
    problems: list[str] = []
    label = doc.get("variant", "all")
    ratio = support_ratio
    if ratio is None:
        ratio = doc.get("stats", {}).get("support_ratio", 0.75)
    try:
        variant = variant_from_label(label, ratio)
    except ValueError as exc:
        return [str(exc)]

    if doc.get("instance") != instance.name:
        problems.append(
            f"solution names instance {doc.get('instance')!r}, expected {instance.name!r}"
        )

    routes = doc.get("routes", [])
    if len(routes) > instance.vehicle.count:
        problems.append(
            f"{len(routes)} routes exceed the fleet of {instance.vehicle.count}"
        )

    seen: dict[int, int] = {}
    for r, entry in enumerate(routes):
        for cid in entry.get("sequence", []):
            seen[cid] = seen.get(cid, 0) + 1
    for c in instance.customers:
        count = seen.get(c.id, 0)
        if count != 1:
            problems.append(f"customer {c.id} is visited {count} times")
    for cid in seen:
        try:
            instance.customer(cid)
        except KeyError:
            problems.append(f"route visits unknown customer {cid}")

    total_cost = 0.0
    container = Container.of(instance.vehicle)
    for r, entry in enumerate(routes):
        seq = [int(c) for c in entry.get("sequence", [])]
        if not seq:
            problems.append(f"route {r} is empty")
            continue
        try:
            weight = instance.weight_of(seq)
            volume = instance.volume_of(seq)
        except KeyError:
            continue
        if weight > instance.vehicle.weight_capacity + 1e-9:
            problems.append(f"route {r} weight {weight} exceeds capacity")
        if volume > instance.vehicle.volume:
            problems.append(f"route {r} item volume {volume} exceeds container volume")
        path = [0] + seq + [0]
        total_cost += sum(instance.cost(a, b) for a, b in zip(path, path[1:]))

        if variant is None:
            continue
        placements = []
        counts_ok = True
        used: dict[tuple[int, int], int] = {}
        for p in entry.get("placements", []):
            cid, idx = int(p["customer"]), int(p["item"])
            if cid not in seq:
                problems.append(f"route {r} places an item of customer {cid} not on it")
                counts_ok = False
                continue
            items = instance.customer(cid).items
            if not 0 <= idx < len(items):
                problems.append(f"route {r}: customer {cid} has no item {idx}")
                counts_ok = False
                continue
            used[(cid, idx)] = used.get((cid, idx), 0) + 1
            placements.append(
                Placement(items[idx], int(p["x"]), int(p["y"]), int(p["z"]), bool(p["rotated"]))
            )
        for cid in seq:
            for idx in range(len(instance.customer(cid).items)):
                n = used.get((cid, idx), 0)
                if n != 1:
                    problems.append(
                        f"route {r}: item {idx} of customer {cid} placed {n} times"
                    )
                    counts_ok = False
        if not counts_ok:
            continue
        packing = Packing(container, tuple(placements), tuple(seq))
        for bad in validate_packing(packing, variant):
            problems.append(f"route {r}: {bad.kind} violation on items {bad.items} {bad.detail}")

    obj = doc.get("objective")
    if obj is not None and routes and abs(obj - total_cost) > 1e-6:
        problems.append(f"objective {obj} does not match route costs {total_cost:.9f}")
    return problems
