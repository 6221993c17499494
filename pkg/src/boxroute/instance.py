"""Instance types and file I/O.

Two on-disk formats are supported:

* the canonical JSON format, which is the stability contract of this
  project (see ``write_canonical`` / ``parse_canonical``), and
* a line-oriented benchmark text format used by the instance files
  shipped under ``instances/``.

Benchmark text layout (lines starting with ``---`` are section markers
and are ignored by the parser)::

    --- instance name
    E016-03m
    --- customers, vehicles, total items
    15 3 32
    --- vehicle: weight capacity, container length, width, height
    90 60 25 30
    --- depot: x y
    30 40
    --- per customer: id x y weight item_count, then one line per item:
    ---   length width height fragile(0|1)
    1 37 52 19 2
    25 8 10 1
    22 10 9 0
    ...

Travel costs are full-precision Euclidean distances computed from the
coordinates; no rounding mode is applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ItemSpec",
    "CustomerRecord",
    "VehicleSpec",
    "Instance",
    "ParseError",
    "ValidationError",
    "parse_benchmark",
    "parse_canonical",
    "write_canonical",
]


class ParseError(ValueError):
    """Raised for malformed instance files; the message names the line."""


class ValidationError(ValueError):
    """Raised when a parsed instance violates a structural invariant."""


@dataclass(frozen=True)
class ItemSpec:
    """A rectangular item. ``group_id`` is the id of the owning customer."""

    length: int
    width: int
    height: int
    fragile: bool
    group_id: int

    @property
    def volume(self) -> int:
        return self.length * self.width * self.height

    @property
    def base_area(self) -> int:
        return self.length * self.width


@dataclass(frozen=True)
class CustomerRecord:
    id: int
    x: float
    y: float
    weight: float
    items: tuple[ItemSpec, ...]

    @property
    def volume(self) -> int:
        return sum(it.volume for it in self.items)


@dataclass(frozen=True)
class VehicleSpec:
    count: int
    weight_capacity: float
    length: int
    width: int
    height: int

    @property
    def volume(self) -> int:
        return self.length * self.width * self.height


@dataclass(frozen=True)
class Instance:
    name: str
    customers: tuple[CustomerRecord, ...]
    vehicle: VehicleSpec
    depot_xy: tuple[float, float]
    cost_matrix: np.ndarray = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.customers)

    def customer(self, cid: int) -> CustomerRecord:
        rec = self._by_id.get(cid)
        if rec is None:
            raise KeyError(f"unknown customer id {cid}")
        return rec

    def __post_init__(self):
        object.__setattr__(
            self, "_by_id", {c.id: c for c in self.customers}
        )

    def cost(self, i: int, j: int) -> float:
        return float(self.cost_matrix[i, j])

    def weight_of(self, cids) -> float:
        return sum(self.customer(c).weight for c in cids)

    def volume_of(self, cids) -> float:
        return sum(self.customer(c).volume for c in cids)


def _cost_matrix(depot_xy, customers) -> np.ndarray:
    pts = [depot_xy] + [(c.x, c.y) for c in customers]
    coords = np.asarray(pts, dtype=float)
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def build_instance(name, customers, vehicle, depot_xy) -> Instance:
    """Assemble and validate an Instance; raises ValidationError.

    Customer ids must be exactly 1..n; node id doubles as the cost-matrix
    index (0 is the depot)."""
    customers = sorted(customers, key=lambda c: c.id)
    if [c.id for c in customers] != list(range(1, len(customers) + 1)):
        raise ValidationError("customer ids must be exactly 1..n")
    inst = Instance(
        name=name,
        customers=tuple(customers),
        vehicle=vehicle,
        depot_xy=tuple(depot_xy),
        cost_matrix=_cost_matrix(depot_xy, customers),
    )
    _validate(inst)
    return inst


def _validate(inst: Instance) -> None:
    veh = inst.vehicle
    if veh.count < 1 or veh.weight_capacity <= 0:
        raise ValidationError("vehicle count and weight capacity must be positive")
    if min(veh.length, veh.width, veh.height) < 1:
        raise ValidationError("container dimensions must be positive integers")
    if not inst.customers:
        raise ValidationError("instance has no customers")
    seen = set()
    for cust in inst.customers:
        if cust.id in seen:
            raise ValidationError(f"duplicate customer id {cust.id}")
        seen.add(cust.id)
        if not cust.items:
            raise ValidationError(f"customer {cust.id} has no items")
        if cust.weight > veh.weight_capacity:
            raise ValidationError(
                f"customer {cust.id} weight {cust.weight} exceeds capacity"
            )
        for k, item in enumerate(cust.items):
            if min(item.length, item.width, item.height) < 1:
                raise ValidationError(
                    f"customer {cust.id} item {k} has non-positive dimension"
                )
            if item.group_id != cust.id:
                raise ValidationError(
                    f"customer {cust.id} item {k} carries group id {item.group_id}"
                )
            fits = item.height <= veh.height and (
                (item.length <= veh.length and item.width <= veh.width)
                or (item.width <= veh.length and item.length <= veh.width)
            )
            if not fits:
                raise ValidationError(
                    f"customer {cust.id} item {k} does not fit the container "
                    "in any orientation"
                )


# ---------------------------------------------------------------------------
# benchmark text format


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("---"):
            continue
        yield lineno, line


def _take(lines, what: str):
    try:
        return next(lines)
    except StopIteration:
        raise ParseError(f"unexpected end of file, expected {what}") from None


def _ints(line: str, lineno: int, count: int, what: str) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"line {lineno}: expected {count} fields ({what}), got {len(parts)}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"line {lineno}: non-integer field in {what}") from None


def _floats(line: str, lineno: int, count: int, what: str) -> list[float]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"line {lineno}: expected {count} fields ({what}), got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"line {lineno}: non-numeric field in {what}") from None


def parse_benchmark(text: str) -> Instance:
    """Parse the line-oriented benchmark format described in the module docs."""
    lines = _data_lines(text)

    lineno, name = _take(lines, "instance name")
    if len(name.split()) != 1:
        raise ParseError(f"line {lineno}: instance name must be a single token")

    lineno, line = _take(lines, "counts line")
    n, k, total_items = _ints(line, lineno, 3, "customers/vehicles/items")
    if n < 1 or k < 1 or total_items < n:
        raise ParseError(f"line {lineno}: implausible counts {n} {k} {total_items}")

    lineno, line = _take(lines, "vehicle line")
    cap, length, width, height = _floats(line, lineno, 4, "vehicle")
    vehicle = VehicleSpec(
        count=k,
        weight_capacity=cap,
        length=int(length),
        width=int(width),
        height=int(height),
    )

    lineno, line = _take(lines, "depot line")
    dx, dy = _floats(line, lineno, 2, "depot coordinates")

    customers = []
    items_seen = 0
    for _ in range(n):
        lineno, line = _take(lines, "customer line")
        cid_f, cx, cy, weight, m = _floats(line, lineno, 5, "customer")
        cid, m = int(cid_f), int(m)
        if m < 1:
            raise ParseError(f"line {lineno}: customer {cid} declares {m} items")
        items = []
        for _ in range(m):
            lineno, line = _take(lines, f"item line of customer {cid}")
            il, iw, ih, frag = _ints(line, lineno, 4, "item")
            if frag not in (0, 1):
                raise ParseError(f"line {lineno}: fragile flag must be 0 or 1")
            items.append(ItemSpec(il, iw, ih, bool(frag), group_id=cid))
        items_seen += m
        customers.append(
            CustomerRecord(id=cid, x=cx, y=cy, weight=weight, items=tuple(items))
        )

    extra = next(lines, None)
    if extra is not None:
        raise ParseError(f"line {extra[0]}: trailing data after last customer")
    if items_seen != total_items:
        raise ParseError(
            f"declared {total_items} items but customer records list {items_seen}"
        )
    return build_instance(name, customers, vehicle, (dx, dy))


# ---------------------------------------------------------------------------
# canonical JSON format


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"canonical instance: missing '{key}' in {where}")
    return obj[key]


def parse_canonical(text: str) -> Instance:
    """Parse the canonical JSON instance format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("canonical instance: top level must be an object")

    name = _require(doc, "name", "top level")
    veh = _require(doc, "vehicle", "top level")
    vehicle = VehicleSpec(
        count=int(_require(veh, "count", "vehicle")),
        weight_capacity=float(_require(veh, "weight_capacity", "vehicle")),
        length=int(_require(veh, "length", "vehicle")),
        width=int(_require(veh, "width", "vehicle")),
        height=int(_require(veh, "height", "vehicle")),
    )
    depot = _require(doc, "depot", "top level")
    depot_xy = (float(_require(depot, "x", "depot")), float(_require(depot, "y", "depot")))

    customers = []
    for entry in _require(doc, "customers", "top level"):
        cid = int(_require(entry, "id", "customer"))
        items = []
        for it in _require(entry, "items", f"customer {cid}"):
            items.append(
                ItemSpec(
                    length=int(_require(it, "l", "item")),
                    width=int(_require(it, "w", "item")),
                    height=int(_require(it, "h", "item")),
                    fragile=bool(_require(it, "fragile", "item")),
                    group_id=cid,
                )
            )
        customers.append(
            CustomerRecord(
                id=cid,
                x=float(_require(entry, "x", f"customer {cid}")),
                y=float(_require(entry, "y", f"customer {cid}")),
                weight=float(_require(entry, "weight", f"customer {cid}")),
                items=tuple(items),
            )
        )
    return build_instance(str(name), customers, vehicle, depot_xy)


def write_canonical(inst: Instance) -> str:
    """Serialize an Instance to the canonical JSON format."""
    doc = {
        "name": inst.name,
        "vehicle": {
            "count": inst.vehicle.count,
            "weight_capacity": inst.vehicle.weight_capacity,
            "length": inst.vehicle.length,
            "width": inst.vehicle.width,
            "height": inst.vehicle.height,
        },
        "depot": {"x": inst.depot_xy[0], "y": inst.depot_xy[1]},
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "weight": c.weight,
                "items": [
                    {
                        "l": it.length,
                        "w": it.width,
                        "h": it.height,
                        "fragile": it.fragile,
                    }
                    for it in c.items
                ],
            }
            for c in inst.customers
        ],
    }
    return json.dumps(doc, indent=2)
