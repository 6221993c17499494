"""Memoization of feasible routes and infeasible customer combinations.

Both stores are keyed by loading-variant key so that entries found under
one variant or relaxation are never reused for another. Infeasible
combinations are only meaningful for support-free checks (with support
active, adding a customer can repair infeasibility), so the combo store
rejects support-active keys outright.
"""

from __future__ import annotations

import threading

from .loading import LoadingVariant, Packing

__all__ = ["FeasibleRouteStore", "InfeasibleComboStore"]


def _key(variant: LoadingVariant | None) -> tuple:
    # None stands for the capacity-only relaxation (no loading checks)
    return variant.key if variant is not None else ("cvrp",)


class FeasibleRouteStore:
    """Exact-sequence route memo with witness packings, per variant."""

    def __init__(self):
        self._routes: dict[tuple, dict[tuple[int, ...], Packing | None]] = {}
        self._lock = threading.Lock()

    def insert(self, seq, variant: LoadingVariant | None, witness: Packing | None) -> bool:
        key = _key(variant)
        with self._lock:
            per = self._routes.setdefault(key, {})
            if tuple(seq) in per:
                return False
            per[tuple(seq)] = witness
            return True

    def contains_route(self, seq, variant: LoadingVariant | None) -> bool:
        return tuple(seq) in self._routes.get(_key(variant), {})

    def witness(self, seq, variant: LoadingVariant | None) -> Packing | None:
        return self._routes.get(_key(variant), {}).get(tuple(seq))

    def routes(self, variant: LoadingVariant | None):
        return list(self._routes.get(_key(variant), {}).items())

    def count(self, variant: LoadingVariant | None) -> int:
        return len(self._routes.get(_key(variant), {}))

    def dump(self, variant: LoadingVariant | None) -> str:
        lines = [" ".join(map(str, seq)) for seq in sorted(self._routes.get(_key(variant), {}))]
        return "\n".join(lines)


class _ComboIndex:
    """Subset queries over customer-id sets via bitmasks (dense ids) with
    a plain frozenset fallback once more than 64 distinct ids appear."""

    def __init__(self):
        self.bit: dict[int, int] = {}
        self.masked: list[tuple[int, frozenset[int]]] = []
        self.plain: list[frozenset[int]] = []

    def _mask(self, ids) -> int | None:
        m = 0
        for c in ids:
            b = self.bit.get(c)
            if b is None:
                if len(self.bit) >= 64:
                    return None
                b = len(self.bit)
                self.bit[c] = b
            m |= 1 << b
        return m

    def insert(self, combo: frozenset[int]) -> None:
        m = self._mask(combo)
        if m is None:
            self.plain.append(combo)
        else:
            self.masked.append((m, combo))

    def superset_of(self, s: frozenset[int]) -> frozenset[int] | None:
        m = 0
        complete = True
        for c in s:
            b = self.bit.get(c)
            if b is None:
                complete = False
                continue
            m |= 1 << b
        for mask, combo in self.masked:
            if mask & m == mask and (complete or combo <= s):
                return combo
        for combo in self.plain:
            if combo <= s:
                return combo
        return None


class InfeasibleComboStore:
    """Customer-id sets proven infeasible under a support-free check."""

    def __init__(self):
        self._by_key: dict[tuple, _ComboIndex] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _check(variant: LoadingVariant) -> tuple:
        if variant.support:
            raise ValueError(
                "infeasible combinations are only valid for support-free checks"
            )
        return variant.key

    def insert(self, combo, variant: LoadingVariant) -> None:
        key = self._check(variant)
        with self._lock:
            self._by_key.setdefault(key, _ComboIndex()).insert(frozenset(combo))

    def superset_of_infeasible(self, s, variant: LoadingVariant) -> frozenset[int] | None:
        key = self._check(variant)
        index = self._by_key.get(key)
        if index is None:
            return None
        return index.superset_of(frozenset(s))

    def count(self, variant: LoadingVariant) -> int:
        index = self._by_key.get(self._check(variant))
        if index is None:
            return 0
        return len(index.masked) + len(index.plain)

    def dump(self, variant: LoadingVariant) -> str:
        index = self._by_key.get(self._check(variant))
        if index is None:
            return ""
        combos = [sorted(c) for _, c in index.masked] + [sorted(c) for c in index.plain]
        return "\n".join(" ".join(map(str, c)) for c in sorted(combos))
