"""Freeness of finite set families: transversals, Hall certificates, reshuffling.

A family is free when it has a transversal (an injective choice of one
element per set).  `find_transversal` decides this by augmenting-path
matching and, on failure, extracts a violating index set whose union is
smaller than itself, which by Hall's theorem is the exact dual witness.
`k_free_check` asks the same of every subfamily below a size bound, using
the deficiency structure of one maximum matching instead of enumerating
subsets.  `find_reshuffling` searches for a well-order of the finals that
keeps every set "fresh" relative to its predecessors and respects a cutoff
on the first coordinate.

Vertex orders are fixed (index order on sets, canonical order on atoms), so
results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import Atom, BasedFamily, Node, atom_sort_key, lex_key, node_key


@dataclass(frozen=True)
class Transversal:
    assignment: Mapping[int, Atom]

    def verify(self, family: Sequence[frozenset]) -> bool:
        if set(self.assignment) != set(range(len(family))):
            return False
        if len(set(self.assignment.values())) != len(family):
            return False
        return all(self.assignment[i] in family[i] for i in range(len(family)))


@dataclass(frozen=True)
class HallCertificate:
    violator: frozenset[int]

    def verify(self, family: Sequence[frozenset]) -> bool:
        if not self.violator or not all(0 <= i < len(family) for i in self.violator):
            return False
        union: set = set()
        for i in self.violator:
            union |= family[i]
        return len(union) < len(self.violator)


def _normalize(family) -> list[frozenset]:
    return [frozenset(s) for s in family]


def _max_matching(sets: list[frozenset]):
    """Deterministic augmenting-path matching; returns (match_of_set, match_of_atom)."""
    atoms = sorted({a for s in sets for a in s}, key=atom_sort_key)
    adj = [[a for a in atoms if a in s] for s in sets]
    match_of_atom: dict[Atom, int] = {}
    match_of_set: dict[int, Atom] = {}

    def augment(i: int, seen: set) -> bool:
        for a in adj[i]:
            if a in seen:
                continue
            seen.add(a)
            j = match_of_atom.get(a)
            if j is None or augment(j, seen):
                match_of_atom[a] = i
                match_of_set[i] = a
                return True
        return False

    for i in range(len(sets)):
        augment(i, set())
    return match_of_set, match_of_atom


def _reachable_violator(sets, match_of_set, match_of_atom, start: int) -> frozenset[int]:
    """Alternating-reachability closure of an unmatched set index.

    Every atom adjacent to the closure is matched into it, so the closure has
    exactly one more set than its union has atoms.
    """
    frontier = [start]
    reached = {start}
    while frontier:
        nxt = []
        for i in frontier:
            for a in sorted(sets[i], key=atom_sort_key):
                j = match_of_atom.get(a)
                if j is not None and j not in reached:
                    reached.add(j)
                    nxt.append(j)
        frontier = nxt
    return frozenset(reached)


def find_transversal(family):
    """A verified Transversal, or a verified HallCertificate when none exists."""
    sets = _normalize(family)
    match_of_set, match_of_atom = _max_matching(sets)
    if len(match_of_set) == len(sets):
        t = Transversal(dict(sorted(match_of_set.items())))
        assert t.verify(sets)
        return t
    unmatched = min(i for i in range(len(sets)) if i not in match_of_set)
    cert = HallCertificate(_reachable_violator(sets, match_of_set, match_of_atom, unmatched))
    assert cert.verify(sets)
    return cert


def k_free_check(family, k: int):
    """'pass' when every subfamily of size < k has a transversal.

    Otherwise returns the smallest Hall certificate of size < k.  Minimum
    violators contain an unmatched index of any maximum matching and are
    closed under alternating reachability, so it is enough to minimize the
    closures over unmatched indices.
    """
    sets = _normalize(family)
    if not (0 <= k <= len(sets) + 1):
        raise ValueError(f"k must be at most family size + 1 = {len(sets) + 1}")
    match_of_set, match_of_atom = _max_matching(sets)
    best: HallCertificate | None = None
    for i in range(len(sets)):
        if i in match_of_set:
            continue
        violator = _reachable_violator(sets, match_of_set, match_of_atom, i)
        if best is None or len(violator) < len(best.violator):
            best = HallCertificate(violator)
    if best is None or len(best.violator) >= k:
        return "pass"
    assert best.verify(sets)
    return best


@dataclass(frozen=True)
class ReshufflingOrder:
    order: tuple[Node, ...]
    alpha: int
    theta_fresh: int

    def verify(self, fam: BasedFamily) -> bool:
        seen: set = set()
        for z in self.order:
            fresh = fam.s(z) - seen
            if len(fresh) < self.theta_fresh:
                return False
            seen |= fam.s(z)
        for i, tau in enumerate(self.order):
            for z in self.order[i + 1:]:
                if z[0] <= self.alpha < tau[0]:
                    return False
        return True

    def to_jsonable(self) -> dict:
        return {
            "order": [node_key(z) for z in self.order],
            "alpha": self.alpha,
            "theta_fresh": self.theta_fresh,
        }


@dataclass(frozen=True)
class ReshufflingResult:
    status: str  # "found" | "none" | "unknown"
    order: ReshufflingOrder | None
    nodes_visited: int


def find_reshuffling(
    fam: BasedFamily,
    finals: Sequence[Node] | None = None,
    alpha: int = -1,
    theta_fresh: int = 1,
    budget: int = 200_000,
    exact_limit: int = 10,
) -> ReshufflingResult:
    """Search for an order with the freshness and cutoff-split properties.

    Exact backtracking for small index sets; above `exact_limit` a greedy
    pass runs first and its failure falls back to backtracking capped by
    `budget` visited nodes, reporting "unknown" when the cap is hit.  The
    freshness requirement is monotone (prefix unions only grow), so any
    currently failing candidate prunes the whole branch.
    """
    index = sorted(finals if finals is not None else fam.finals, key=lex_key)
    if not index:
        raise ValueError("empty index set")
    sets = {z: fam.s(z) for z in index}
    low = [z for z in index if z[0] <= alpha]
    high = [z for z in index if z[0] > alpha]
    visited = 0

    def backtrack(remaining_low, remaining_high, union, acc, cap):
        nonlocal visited
        visited += 1
        if cap is not None and visited > cap:
            return "budget"
        if not remaining_low and not remaining_high:
            return list(acc)
        pool = remaining_low if remaining_low else remaining_high
        for z in remaining_low + remaining_high:
            if len(sets[z] - union) < theta_fresh:
                return None  # it can only get worse later
        for z in pool:
            rest_low = [w for w in remaining_low if w != z] if remaining_low else []
            rest_high = remaining_high if remaining_low else [w for w in remaining_high if w != z]
            res = backtrack(rest_low, rest_high, union | sets[z], acc + [z], cap)
            if res is not None:
                return res
        return None

    def greedy():
        union: set = set()
        acc = []
        rem_low, rem_high = list(low), list(high)
        while rem_low or rem_high:
            pool = rem_low if rem_low else rem_high
            candidates = [z for z in pool if len(sets[z] - union) >= theta_fresh]
            if not candidates:
                return None
            # most constrained first: fewest fresh atoms, then canonical order
            z = min(candidates, key=lambda w: (len(sets[w] - union), lex_key(w)))
            acc.append(z)
            union |= sets[z]
            (rem_low if rem_low else rem_high).remove(z)
        return acc

    if len(index) > exact_limit:
        g = greedy()
        if g is not None:
            order = ReshufflingOrder(tuple(g), alpha, theta_fresh)
            assert order.verify(fam)
            return ReshufflingResult("found", order, visited)
        res = backtrack(low, high, set(), [], budget)
        if res == "budget":
            return ReshufflingResult("unknown", None, visited)
    else:
        res = backtrack(low, high, set(), [], None)
    if res is None:
        return ReshufflingResult("none", None, visited)
    order = ReshufflingOrder(tuple(res), alpha, theta_fresh)
    assert order.verify(fam)
    return ReshufflingResult("found", order, visited)
