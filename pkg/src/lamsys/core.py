"""Finite rooted trees of index sequences with leveled carrier sets.

A SystemSkeleton is the finite surrogate of a tree of sequences whose nodes
carry strictly decreasing level labels (level 0 marks a final node), child
index sets E, and a monotone chain of carrier sets B along siblings.  A
BasedFamily attaches to each final node a family of per-level enumerations
whose ranges live inside the carriers on the path to that node.

"Largeness" of the index sets is a named pluggable predicate; there is no
pretense that any finite predicate models stationarity.  All values are
immutable after construction and every operation is a pure function, so
concurrent use needs no synchronization.

Atoms are ints, strings, or (recursively) tuples of atoms; tuples are what
the two normalizing transforms below produce.  Equality is structural and
survives the JSON round-trip in `jsonio`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

Node = tuple[int, ...]
Atom = Union[int, str, tuple]

ROOT: Node = ()


def node_key(node: Node) -> str:
    """Dot-joined digit string; the root is the empty string."""
    return ".".join(str(i) for i in node)


def parse_node_key(key: str) -> Node:
    if key == "":
        return ROOT
    return tuple(int(part) for part in key.split("."))


def is_prefix(a: Node, b: Node) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def lex_compare(a: Node, b: Node) -> int:
    """-1, 0, or 1: proper prefixes come first, then first-disagreement order."""
    for x, y in zip(a, b):
        if x != y:
            return -1 if x < y else 1
    if len(a) == len(b):
        return 0
    return -1 if len(a) < len(b) else 1


def lex_key(node: Node):
    # proper prefixes sort first; at a disagreement the coordinate decides
    return tuple((0, v) for v in node) + ((-1, 0),)


def atom_sort_key(a: Atom):
    if isinstance(a, bool):
        raise TypeError("bool is not an atom")
    if isinstance(a, int):
        return (0, a)
    if isinstance(a, str):
        return (1, a)
    if isinstance(a, tuple):
        return (2, tuple(atom_sort_key(x) for x in a))
    raise TypeError(f"not an atom: {a!r}")


def sorted_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms, key=atom_sort_key)


# Largeness predicates: finite stand-ins used wherever the source notion
# demands "large" index sets.  Each takes (level of the node, index set).
LARGENESS: dict[str, Callable[[int, frozenset], bool]] = {
    "nonempty": lambda level, indices: len(indices) > 0,
    "half": lambda level, indices: 2 * len(indices) >= level,
}


def register_largeness(name: str, predicate: Callable[[int, frozenset], bool]) -> None:
    LARGENESS[name] = predicate


@dataclass(frozen=True)
class Violation:
    clause: str
    node: Node | None
    detail: str

    def to_jsonable(self) -> dict:
        return {
            "clause": self.clause,
            "node": None if self.node is None else node_key(self.node),
            "detail": self.detail,
        }


@dataclass(frozen=True, eq=False)
class SystemSkeleton:
    """Prefix-closed node set with levels, child index sets, and carriers."""

    nodes: frozenset[Node]
    level: Mapping[Node, int]
    E: Mapping[Node, frozenset[int]]
    B: Mapping[Node, frozenset[Atom]]
    largeness: str = "nonempty"

    def sorted_nodes(self) -> list[Node]:
        return sorted(self.nodes, key=lex_key)

    def children(self, node: Node) -> list[Node]:
        return sorted(
            (n for n in self.nodes if len(n) == len(node) + 1 and n[: len(node)] == node),
            key=lex_key,
        )

    def is_final(self, node: Node) -> bool:
        return not any(
            len(n) == len(node) + 1 and n[: len(node)] == node for n in self.nodes
        )

    def finals(self) -> list[Node]:
        return sorted((n for n in self.nodes if self.is_final(n)), key=lex_key)

    def bar_b(self, node: Node) -> frozenset[Atom]:
        """Union of carriers along the path from the root to `node` inclusive."""
        out: set[Atom] = set()
        for m in range(len(node) + 1):
            out |= self.B.get(node[:m], frozenset())
        return frozenset(out)


def make_skeleton(
    nodes: Iterable[Node],
    level: Mapping[Node, int],
    e_map: Mapping[Node, Iterable[int]],
    b_map: Mapping[Node, Iterable[Atom]],
    largeness: str = "nonempty",
) -> SystemSkeleton:
    return SystemSkeleton(
        nodes=frozenset(tuple(n) for n in nodes),
        level={tuple(k): int(v) for k, v in level.items()},
        E={tuple(k): frozenset(int(i) for i in v) for k, v in e_map.items()},
        B={tuple(k): frozenset(v) for k, v in b_map.items()},
        largeness=largeness,
    )


def validate_system(sys_: SystemSkeleton) -> list[Violation]:
    """Check every skeleton invariant; violations are data, not errors."""
    out: list[Violation] = []
    nodes = sys_.nodes
    if ROOT not in nodes:
        out.append(Violation("root-missing", None, "the empty sequence must be a node"))
        return out
    for n in sorted(nodes, key=lex_key):
        if n != ROOT and n[:-1] not in nodes:
            out.append(Violation("prefix-closed", n, "parent node missing"))
        if n not in sys_.level:
            out.append(Violation("level-missing", n, "no level assigned"))
    if any(v.clause == "level-missing" for v in out):
        return out

    root_level = sys_.level[ROOT]
    finals = [n for n in nodes if sys_.is_final(n)]
    if not any(sys_.level[n] == 0 for n in nodes):
        out.append(Violation("no-final-node", ROOT, "no final node reachable (no node at level 0)"))
    for n in sorted(nodes, key=lex_key):
        lv = sys_.level[n]
        if lv > root_level:
            out.append(Violation("root-level-max", n, f"level {lv} exceeds root level {root_level}"))
        final = sys_.is_final(n)
        if final and lv != 0:
            out.append(Violation("final-iff-level-zero", n, f"final node has level {lv}"))
        if not final and lv == 0:
            out.append(Violation("final-iff-level-zero", n, "level 0 node has children"))
        if n != ROOT:
            parent = n[:-1]
            if sys_.level.get(parent) is not None and lv >= sys_.level[parent]:
                out.append(
                    Violation("level-decrease", n, f"level must strictly decrease ({sys_.level[parent]} -> {lv})")
                )
            e_parent = sys_.E.get(parent, frozenset())
            if n[-1] not in e_parent:
                out.append(Violation("child-index-in-E", n, f"index {n[-1]} missing from E of parent"))

    pred = LARGENESS.get(sys_.largeness)
    if pred is None:
        out.append(Violation("largeness-unknown", None, f"no predicate named {sys_.largeness!r}"))
    for n in sorted(nodes, key=lex_key):
        final = sys_.is_final(n)
        e = sys_.E.get(n)
        if final:
            if e is not None:
                out.append(Violation("E-on-final", n, "index set attached to a final node"))
            continue
        if e is None or not e:
            out.append(Violation("E-empty", n, "non-final node needs a nonempty index set"))
            continue
        for beta in sorted(e):
            if n + (beta,) not in nodes:
                out.append(Violation("E-index-no-child", n, f"index {beta} has no child node"))
        if pred is not None and not pred(sys_.level[n], e):
            out.append(Violation("largeness", n, f"predicate {sys_.largeness!r} fails on E"))

    if sys_.B.get(ROOT, frozenset()):
        out.append(Violation("B-root-empty", ROOT, "carrier at the root must be empty"))
    for n in sorted(nodes, key=lex_key):
        if n not in sys_.B:
            out.append(Violation("B-missing", n, "no carrier set assigned"))
    for n in sorted(nodes, key=lex_key):
        if sys_.is_final(n):
            continue
        kids = [b for b in sorted(sys_.E.get(n, frozenset())) if n + (b,) in nodes]
        for b1, b2 in zip(kids, kids[1:]):
            lo = sys_.B.get(n + (b1,), frozenset())
            hi = sys_.B.get(n + (b2,), frozenset())
            if not lo <= hi:
                missing = sorted_atoms(lo - hi)[0]
                out.append(
                    Violation(
                        "B-chain",
                        n + (b2,),
                        f"carrier chain not monotone at sibling {b1} <= {b2}: {missing!r} lost",
                    )
                )
    return out


def height(sys_: SystemSkeleton) -> int | None:
    """Common length of all final nodes, or None when lengths are mixed."""
    lengths = {len(f) for f in sys_.finals()}
    if len(lengths) == 1:
        return lengths.pop()
    return None


def restrict_to_height(sys_: SystemSkeleton, n: int) -> SystemSkeleton:
    """Keep only nodes below some final of length n, pruning E and B."""
    keep_finals = [f for f in sys_.finals() if len(f) == n]
    keep: set[Node] = set()
    for f in keep_finals:
        for m in range(len(f) + 1):
            keep.add(f[:m])
    new_e = {}
    for node in keep:
        if node in sys_.E:
            pruned = frozenset(b for b in sys_.E[node] if node + (b,) in keep)
            if pruned:
                new_e[node] = pruned
    return SystemSkeleton(
        nodes=frozenset(keep),
        level={k: v for k, v in sys_.level.items() if k in keep},
        E=new_e,
        B={k: v for k, v in sys_.B.items() if k in keep},
        largeness=sys_.largeness,
    )


def candidate_heights(sys_: SystemSkeleton) -> list[int]:
    """All n whose height-n restriction passes validation (possibly empty)."""
    lengths = sorted({len(f) for f in sys_.finals()})
    good = []
    for n in lengths:
        if n == 0:
            continue
        sub = restrict_to_height(sys_, n)
        if sub.nodes and not validate_system(sub):
            good.append(n)
    return good


@dataclass(frozen=True, eq=False)
class BasedFamily:
    """Per-final enumerations phi[(final, k)] with ranges inside B(final[:k])."""

    system: SystemSkeleton
    finals: tuple[Node, ...]
    phi: Mapping[tuple[Node, int], tuple[Atom, ...]]
    truncation: int

    def slice_atoms(self, final: Node, k: int) -> frozenset[Atom]:
        return frozenset(self.phi.get((final, k), ()))

    def s(self, final: Node) -> frozenset[Atom]:
        out: set[Atom] = set()
        for k in range(1, len(final) + 1):
            out |= self.slice_atoms(final, k)
        return frozenset(out)

    def union_s(self) -> frozenset[Atom]:
        out: set[Atom] = set()
        for z in self.finals:
            out |= self.s(z)
        return frozenset(out)


def make_family(
    system: SystemSkeleton,
    phi: Mapping[tuple[Node, int], Sequence[Atom]],
    truncation: int,
) -> BasedFamily:
    return BasedFamily(
        system=system,
        finals=tuple(system.finals()),
        phi={(tuple(z), int(k)): tuple(v) for (z, k), v in phi.items()},
        truncation=int(truncation),
    )


def validate_family(fam: BasedFamily) -> list[Violation]:
    out: list[Violation] = []
    sys_ = fam.system
    if set(fam.finals) != set(sys_.finals()):
        out.append(Violation("finals-mismatch", None, "family finals differ from skeleton finals"))
    for z in fam.finals:
        for k in range(1, len(z) + 1):
            vals = fam.phi.get((z, k))
            if vals is None:
                out.append(Violation("phi-missing", z, f"no enumeration at level {k}"))
                continue
            if len(vals) != fam.truncation:
                out.append(
                    Violation("phi-length", z, f"level {k} enumeration has {len(vals)} values, truncation {fam.truncation}")
                )
            if len(set(vals)) != len(vals):
                out.append(Violation("phi-injective", z, f"level {k} enumeration repeats a value"))
            carrier = sys_.B.get(z[:k], frozenset())
            stray = [v for v in vals if v not in carrier]
            if stray:
                out.append(
                    Violation("phi-based-on", z, f"level {k} value {stray[0]!r} outside carrier of {node_key(z[:k])!r}")
                )
    for (z, k) in fam.phi:
        if z not in fam.finals or not (1 <= k <= len(z)):
            out.append(Violation("phi-domain", z, f"enumeration key ({node_key(z)}, {k}) out of range"))
    return out


class DerivedSystemError(ValueError):
    pass


def derived_system(sys_: SystemSkeleton, fam: BasedFamily, node: Node) -> tuple[SystemSkeleton, BasedFamily]:
    """Subtree above `node`, re-rooted by stripping the prefix; carrier at the new root emptied.

    Family slices keep only levels beyond len(node), shifted down accordingly.
    """
    if node not in sys_.nodes:
        raise DerivedSystemError(f"node {node_key(node)!r} not in the skeleton")
    if sys_.is_final(node):
        raise DerivedSystemError("derived system undefined at final node")
    ln = len(node)
    sub = [n for n in sys_.nodes if is_prefix(node, n)]
    strip = lambda n: n[ln:]
    new_nodes = frozenset(strip(n) for n in sub)
    new_level = {strip(n): sys_.level[n] for n in sub}
    new_e = {strip(n): sys_.E[n] for n in sub if n in sys_.E}
    new_b = {strip(n): (frozenset() if n == node else sys_.B.get(n, frozenset())) for n in sub}
    new_sys = SystemSkeleton(new_nodes, new_level, new_e, new_b, sys_.largeness)

    new_phi = {}
    new_finals = []
    for z in fam.finals:
        if not is_prefix(node, z):
            continue
        nz = strip(z)
        new_finals.append(nz)
        for k in range(ln + 1, len(z) + 1):
            new_phi[(nz, k - ln)] = fam.phi[(z, k)]
    new_fam = BasedFamily(new_sys, tuple(sorted(new_finals, key=lex_key)), new_phi, fam.truncation)
    return new_sys, new_fam


@dataclass(frozen=True)
class StructureReport:
    """Witness lists for the three checkable structure properties.

    sibling_overlap: carrier sets meeting anywhere except between siblings.
    slice_alignment: slice values shared across levels or across finals that
        disagree somewhere other than the level's branching coordinate.
    enumeration_tree: enumeration values appearing in another final's slice
        without their predecessor.
    The remaining structural properties of the source notion (family
    freeness, heredity under derived systems, the cofinality pattern) have no
    finite content and are recorded as declared-only.
    """

    sibling_overlap: tuple[dict, ...]
    slice_alignment: tuple[dict, ...]
    enumeration_tree: tuple[dict, ...]
    declared_only: tuple[str, ...] = (
        "family-freeness",
        "derived-systems-structured",
        "cofinality-pattern",
    )

    @property
    def ok(self) -> bool:
        return not (self.sibling_overlap or self.slice_alignment or self.enumeration_tree)


def check_structure(sys_: SystemSkeleton, fam: BasedFamily) -> StructureReport:
    """Check the three finite structure properties, returning witnesses for failures."""
    overlap = []
    nodes = sys_.sorted_nodes()
    for i, n1 in enumerate(nodes):
        for n2 in nodes[i + 1:]:
            shared = sys_.B.get(n1, frozenset()) & sys_.B.get(n2, frozenset())
            if shared and (len(n1) != len(n2) or n1[:-1] != n2[:-1] or n1 == ROOT or n2 == ROOT):
                overlap.append(
                    {"nodes": (node_key(n1), node_key(n2)), "atom": sorted_atoms(shared)[0]}
                )

    alignment = []
    finals = list(fam.finals)
    for zi, z in enumerate(finals):
        for v in finals[zi:]:
            for k in range(1, len(z) + 1):
                for i in range(1, len(v) + 1):
                    if z == v and k == i:
                        continue
                    shared = fam.slice_atoms(z, k) & fam.slice_atoms(v, i)
                    if not shared:
                        continue
                    bad = (
                        k != i
                        or len(z) != len(v)
                        or any(z[j] != v[j] for j in range(len(z)) if j != k - 1)
                    )
                    if bad:
                        alignment.append(
                            {
                                "finals": (node_key(z), node_key(v)),
                                "levels": (k, i),
                                "atom": sorted_atoms(shared)[0],
                            }
                        )

    tree = []
    for z in finals:
        for k in range(1, len(z) + 1):
            vals = fam.phi.get((z, k), ())
            for v in finals:
                if len(v) < k:
                    continue
                other = fam.slice_atoms(v, k)
                for m in range(len(vals) - 1):
                    if vals[m + 1] in other and vals[m] not in other:
                        tree.append(
                            {
                                "final": node_key(z),
                                "level": k,
                                "position": m + 1,
                                "other": node_key(v),
                            }
                        )
    return StructureReport(tuple(overlap), tuple(alignment), tuple(tree))


@dataclass(frozen=True)
class TransformResult:
    """Transformed skeleton and family plus the map back to original atoms.

    old_of_new sends every transformed atom occurring in a carrier or slice to
    the atom it came from, so an integer witness f' on the original family
    transfers to the transformed one by f(new) = f'(old_of_new[new]).
    """

    system: SystemSkeleton
    family: BasedFamily
    old_of_new: Mapping[Atom, Atom]


def transform_disjoint(sys_: SystemSkeleton, fam: BasedFamily) -> TransformResult:
    """Tag every carrier atom with its parent node, forcing sibling-only overlap.

    A level-k slice value x becomes (x, parent-of-(final[:k])); distinct
    levels of one final then have disjoint ranges.
    """
    new_b = {ROOT: frozenset()}
    old_of_new: dict[Atom, Atom] = {}
    for n in sys_.nodes:
        if n == ROOT:
            continue
        tagged = frozenset((x, n[:-1]) for x in sys_.B.get(n, frozenset()))
        new_b[n] = tagged
        for x in sys_.B.get(n, frozenset()):
            old_of_new[(x, n[:-1])] = x
    new_sys = SystemSkeleton(sys_.nodes, dict(sys_.level), dict(sys_.E), new_b, sys_.largeness)
    new_phi = {
        (z, k): tuple((x, z[: k - 1]) for x in vals)
        for (z, k), vals in fam.phi.items()
    }
    new_fam = BasedFamily(new_sys, fam.finals, new_phi, fam.truncation)
    return TransformResult(new_sys, new_fam, old_of_new)


def transform_tree(sys_: SystemSkeleton, fam: BasedFamily) -> TransformResult:
    """Replace each slice value by the initial segment of its enumeration.

    The m-th value of a slice becomes the tuple of values 0..m, so whenever a
    transformed value lies in another slice, so do all its predecessors.  New
    carriers are the used initial-segment tuples whose entries the old carrier
    contains, which keeps the sibling chains monotone.
    """
    used: set[tuple] = set()
    new_phi = {}
    for (z, k), vals in fam.phi.items():
        seqs = tuple(tuple(vals[: m + 1]) for m in range(len(vals)))
        new_phi[(z, k)] = seqs
        used.update(seqs)
    new_b = {}
    for n in sys_.nodes:
        carrier = sys_.B.get(n, frozenset())
        new_b[n] = frozenset(t for t in used if set(t) <= carrier) if carrier else frozenset()
    old_of_new = {t: t[-1] for t in used}
    new_sys = SystemSkeleton(sys_.nodes, dict(sys_.level), dict(sys_.E), new_b, sys_.largeness)
    new_fam = BasedFamily(new_sys, fam.finals, new_phi, fam.truncation)
    return TransformResult(new_sys, new_fam, old_of_new)
