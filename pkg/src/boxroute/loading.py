"""Geometry primitives and the authoritative loading-constraint semantics.

The coordinate system: x runs from the closed front wall (x = 0) toward
the rear opening at ``x = L`` through which items are loaded and
unloaded; y spans the width; z the height. A placement fixes an item's
left-bottom-back corner. Rotation swaps length and width (the only
allowed rotation).

Unloading a customer's items requires straight pulls in +x direction;
an item placed nearer the opening, or stacked on top, blocks everything
behind or below it that must come out earlier. ``unload_order`` lists
customer group ids in the order they are unloaded (first element comes
out first).

All dimensions and coordinates are integers, so "touching" means exact
coordinate equality and overlap tests use open intervals (faces may
touch).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .instance import ItemSpec, VehicleSpec

__all__ = [
    "Container",
    "Placement",
    "Packing",
    "LoadingVariant",
    "Violation",
    "overlaps",
    "support_ratio_of",
    "fragility_ok",
    "lifo_ok",
    "validate_packing",
]


@dataclass(frozen=True)
class Container:
    length: int
    width: int
    height: int

    @classmethod
    def of(cls, vehicle: VehicleSpec) -> "Container":
        return cls(vehicle.length, vehicle.width, vehicle.height)

    @property
    def volume(self) -> int:
        return self.length * self.width * self.height


@dataclass(frozen=True)
class Placement:
    item: ItemSpec
    x: int
    y: int
    z: int
    rotated: bool = False

    # extents along the axes after applying the rotation
    @property
    def lx(self) -> int:
        return self.item.width if self.rotated else self.item.length

    @property
    def ly(self) -> int:
        return self.item.length if self.rotated else self.item.width

    @property
    def lz(self) -> int:
        return self.item.height

    @property
    def x2(self) -> int:
        return self.x + self.lx

    @property
    def y2(self) -> int:
        return self.y + self.ly

    @property
    def z2(self) -> int:
        return self.z + self.lz

    @property
    def base_area(self) -> int:
        return self.lx * self.ly


@dataclass(frozen=True)
class LoadingVariant:
    """Which loading constraints are active.

    ``lifo`` is one of ``"off"``, ``"fixed"`` (unload order given by the
    route) or ``"free"`` (any group permutation may be chosen). A free
    LIFO check always runs without the support constraint.
    """

    fragility: bool = True
    support: bool = True
    lifo: str = "fixed"
    support_ratio: float = 0.75

    def __post_init__(self):
        if self.lifo not in ("off", "fixed", "free"):
            raise ValueError(f"invalid lifo mode {self.lifo!r}")
        if self.lifo == "free" and self.support:
            raise ValueError("free-lifo variants must have support disabled")
        if not 0.0 <= self.support_ratio <= 1.0:
            raise ValueError("support_ratio must lie in [0, 1]")

    # named variants -------------------------------------------------
    @classmethod
    def all_constraints(cls, support_ratio: float = 0.75) -> "LoadingVariant":
        return cls(True, True, "fixed", support_ratio)

    @classmethod
    def no_fragility(cls, support_ratio: float = 0.75) -> "LoadingVariant":
        return cls(False, True, "fixed", support_ratio)

    @classmethod
    def no_lifo(cls, support_ratio: float = 0.75) -> "LoadingVariant":
        return cls(True, True, "off", support_ratio)

    @classmethod
    def no_support(cls) -> "LoadingVariant":
        return cls(True, False, "fixed")

    @classmethod
    def loading_only(cls) -> "LoadingVariant":
        return cls(False, False, "off")

    @classmethod
    def lifo_no_sequence(cls) -> "LoadingVariant":
        return cls(True, False, "free")

    # relaxations ----------------------------------------------------
    def without_support(self) -> "LoadingVariant":
        return replace(self, support=False)

    def with_free_lifo(self) -> "LoadingVariant":
        """Free the unload sequence; implies dropping support."""
        return replace(self, support=False, lifo="free")

    @property
    def key(self):
        ratio = self.support_ratio if self.support else None
        return (self.fragility, self.support, self.lifo, ratio)


@dataclass(frozen=True)
class Packing:
    container: Container
    placements: tuple[Placement, ...]
    unload_order: tuple[int, ...] = ()

    @property
    def used_volume(self) -> int:
        return sum(p.lx * p.ly * p.lz for p in self.placements)


@dataclass(frozen=True)
class Violation:
    kind: str
    items: tuple[int, ...]
    detail: str = ""


def _open_overlap(a1: int, a2: int, b1: int, b2: int) -> bool:
    return a1 < b2 and b1 < a2


def _overlap_len(a1: int, a2: int, b1: int, b2: int) -> int:
    return max(0, min(a2, b2) - max(a1, b1))


def overlaps(a: Placement, b: Placement) -> bool:
    """True iff the interiors intersect in all three axes."""
    return (
        _open_overlap(a.x, a.x2, b.x, b.x2)
        and _open_overlap(a.y, a.y2, b.y, b.y2)
        and _open_overlap(a.z, a.z2, b.z, b.z2)
    )


def _xy_overlap(a: Placement, b: Placement) -> bool:
    return _open_overlap(a.x, a.x2, b.x, b.x2) and _open_overlap(a.y, a.y2, b.y, b.y2)


def support_ratio_of(p: Placement, pk: Packing) -> float:
    """Fraction of p's base covered by the floor or by touching item tops."""
    if p.z == 0:
        return 1.0
    covered = 0
    for q in pk.placements:
        if q is p or q.z2 != p.z:
            continue
        covered += _overlap_len(p.x, p.x2, q.x, q.x2) * _overlap_len(
            p.y, p.y2, q.y, q.y2
        )
    return covered / p.base_area


def fragility_ok(pk: Packing) -> bool:
    """No non-fragile item rests directly on top of a fragile item."""
    return not _fragility_violations(pk.placements)


def _fragility_violations(placements) -> list[tuple[int, int]]:
    bad = []
    for i, upper in enumerate(placements):
        if upper.item.fragile:
            continue
        for j, lower in enumerate(placements):
            if i == j or not lower.item.fragile:
                continue
            if lower.z2 == upper.z and _xy_overlap(upper, lower):
                bad.append((i, j))
    return bad


def lifo_ok(pk: Packing) -> bool:
    return not _lifo_violations(pk.placements, pk.unload_order)


def _lifo_violations(placements, unload_order) -> list[tuple[int, int]]:
    rank = {g: r for r, g in enumerate(unload_order)}
    bad = []
    for i, a in enumerate(placements):
        ra = rank.get(a.item.group_id)
        if ra is None:
            continue
        for j, b in enumerate(placements):
            if i == j:
                continue
            rb = rank.get(b.item.group_id)
            if rb is None or rb <= ra:
                continue
            # b is unloaded after a; it must not block a's pull toward +x
            in_front = b.x >= a.x2 and _open_overlap(
                a.y, a.y2, b.y, b.y2
            ) and _open_overlap(a.z, a.z2, b.z, b.z2)
            above = b.z >= a.z2 and _xy_overlap(a, b)
            if in_front or above:
                bad.append((i, j))
    return bad


def validate_packing(pk: Packing, variant: LoadingVariant) -> list[Violation]:
    """Check a fully specified packing; an empty list means it is valid.

    For a free-lifo variant the permutation to certify is the one given
    in ``pk.unload_order``.
    """
    out: list[Violation] = []
    box = pk.container
    for i, p in enumerate(pk.placements):
        if p.x < 0 or p.y < 0 or p.z < 0 or p.x2 > box.length or p.y2 > box.width or p.z2 > box.height:
            out.append(Violation("bounds", (i,), f"({p.x},{p.y},{p.z}) size ({p.lx},{p.ly},{p.lz})"))
    for i in range(len(pk.placements)):
        for j in range(i + 1, len(pk.placements)):
            if overlaps(pk.placements[i], pk.placements[j]):
                out.append(Violation("overlap", (i, j)))
    if variant.fragility:
        for i, j in _fragility_violations(pk.placements):
            out.append(Violation("fragility", (i, j)))
    if variant.support:
        for i, p in enumerate(pk.placements):
            ratio = support_ratio_of(p, pk)
            if ratio < variant.support_ratio:
                out.append(
                    Violation("support", (i,), f"{ratio:.4f} < {variant.support_ratio}")
                )
    if variant.lifo != "off":
        for i, j in _lifo_violations(pk.placements, pk.unload_order):
            out.append(Violation("lifo", (i, j)))
    return out
