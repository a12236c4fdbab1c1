"""Witness systems: skeleton + family + primes and coefficients, and their group.

A WhiteheadSystem attaches to every final node a prime sequence q and
integer coefficient rows d.  Its group is presented on the family's atoms
together with per-final generators z, modulo one relation per (final, m):

    q[m] * z[m+r+1] - z[m+r] - sum_{l<r} d[m][l] * z[l] - sum_k phi_k(m).

A coloring c of the finals is "witnessed" by integers f on the atoms and a
on the z's satisfying, for every final and m,

    c(m) = q[m]*a[m+r+1] - a[m+r] - sum_{l<r} d[m][l]*a[l] - sum_k f(phi_k(m)),

which is exactly the condition for the homomorphism sending atoms to f and
z's to a to take the relation rows to c.  `solve_witness` assembles this as
one integer linear system (atoms shared between finals couple the
equations) and hands it to the exact solver, returning either a verified
witness or the solver's duality certificate.

`enumerate_basis` and `verify_basis` realize the quotient-basis
construction: a reshuffling order picks the "fresh" generators, and the
verifier checks generation plus unit invariant factors in the truncated
quotient presentation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .abelian import (
    InfeasibilityCertificate,
    IntMatrix,
    Presentation,
    hnf,
    in_lattice,
    invariant_factors,
    is_prime,
    matrix_rank,
    solve_z,
)
from .core import (
    Atom,
    BasedFamily,
    Node,
    SystemSkeleton,
    TransformResult,
    Violation,
    atom_sort_key,
    lex_key,
    node_key,
    validate_family,
    validate_system,
)
from .freeness import ReshufflingOrder


def atom_name(a: Atom) -> str:
    """Canonical generator name for an atom (tuples as JSON arrays)."""

    def enc(x):
        return list(map(enc, x)) if isinstance(x, tuple) else x

    return "a:" + json.dumps(enc(a), sort_keys=True, separators=(",", ":"))


def z_name(final: Node, j: int) -> str:
    return f"z:{node_key(final)}:{j}"


@dataclass(frozen=True, eq=False)
class WhiteheadSystem:
    system: SystemSkeleton
    family: BasedFamily
    r: int
    q: Mapping[Node, tuple[int, ...]]
    d: Mapping[Node, tuple[tuple[int, ...], ...]]
    j_trunc: int
    strong_order: ReshufflingOrder | None = None

    @property
    def m_range(self) -> int:
        """Number of relation rows per final."""
        return min(self.family.truncation, self.j_trunc - self.r - 1)

    def finals(self) -> tuple[Node, ...]:
        return self.family.finals

    def levels(self, final: Node) -> range:
        return range(1, len(final) + 1)


def validate_whitehead(ws: WhiteheadSystem) -> list[Violation]:
    out = validate_system(ws.system)
    out += validate_family(ws.family)
    if ws.j_trunc < ws.r + 2:
        out.append(Violation("j-trunc", None, f"need j_trunc >= r+2 = {ws.r + 2}"))
        return out
    for z in ws.finals():
        qs = ws.q.get(z, ())
        ds = ws.d.get(z, ())
        if len(qs) < ws.m_range or len(ds) < ws.m_range:
            out.append(Violation("qd-range", z, f"need {ws.m_range} primes and coefficient rows"))
            continue
        for m in range(ws.m_range):
            if not is_prime(qs[m]):
                out.append(Violation("q-prime", z, f"q[{m}] = {qs[m]} is not prime"))
            if len(ds[m]) != ws.r:
                out.append(Violation("d-width", z, f"d[{m}] has width {len(ds[m])}, expected {ws.r}"))
    if ws.strong_order is not None:
        for z in ws.finals():
            for k1 in ws.levels(z):
                for k2 in ws.levels(z):
                    if k1 < k2 and ws.family.slice_atoms(z, k1) & ws.family.slice_atoms(z, k2):
                        out.append(Violation("strong-disjoint", z, f"levels {k1} and {k2} share a value"))
        if not ws.strong_order.verify(ws.family):
            out.append(Violation("strong-order", None, "attached order fails its invariants"))
    return out


def generator_names(ws: WhiteheadSystem) -> tuple[list[str], dict[str, int]]:
    """Atoms of the family union first, then per-final z generators."""
    names = [atom_name(a) for a in sorted(ws.family.union_s(), key=atom_sort_key)]
    for z in ws.finals():
        names += [z_name(z, j) for j in range(ws.j_trunc)]
    return names, {g: i for i, g in enumerate(names)}


def _relation_row(ws: WhiteheadSystem, index: dict[str, int], z: Node, m: int) -> list[int]:
    row = [0] * len(index)
    row[index[z_name(z, m + ws.r + 1)]] += ws.q[z][m]
    row[index[z_name(z, m + ws.r)]] -= 1
    for l in range(ws.r):
        row[index[z_name(z, l)]] -= ws.d[z][m][l]
    for k in ws.levels(z):
        row[index[atom_name(ws.family.phi[(z, k)][m])]] -= 1
    return row


def build_witness_group(ws: WhiteheadSystem) -> Presentation:
    """Presentation on the family atoms and z generators with one row per (final, m)."""
    if ws.j_trunc < ws.r + 2:
        raise ValueError(f"need j_trunc >= r+2 = {ws.r + 2}")
    names, index = generator_names(ws)
    rows = [
        _relation_row(ws, index, z, m)
        for z in ws.finals()
        for m in range(ws.m_range)
    ]
    return Presentation(tuple(names), IntMatrix.from_rows(rows))


@dataclass(frozen=True)
class Witness:
    f: Mapping[Atom, int]
    a: Mapping[tuple[Node, int], int]


class MissingValueError(KeyError):
    pass


def verify_witness(ws: WhiteheadSystem, c: Mapping[Node, Sequence[int]], w: Witness):
    """Check the witness equation exactly; returns (ok, first failing (final, m))."""
    for z in ws.finals():
        for m in range(ws.m_range):
            total = ws.q[z][m] * w.a[(z, m + ws.r + 1)] - w.a[(z, m + ws.r)]
            for l in range(ws.r):
                total -= ws.d[z][m][l] * w.a[(z, l)]
            for k in ws.levels(z):
                x = ws.family.phi[(z, k)][m]
                if x not in w.f:
                    raise MissingValueError(f"witness lacks a value on atom {x!r}")
                total -= w.f[x]
            if total != c[z][m]:
                return False, (z, m)
    return True, None


def solve_witness(ws: WhiteheadSystem, c: Mapping[Node, Sequence[int]]):
    """Witness solving as one integer linear system over {f(x)} and {a(z, j)}."""
    atoms = sorted(ws.family.union_s(), key=atom_sort_key)
    unknowns: list = [("f", a) for a in atoms]
    for z in ws.finals():
        unknowns += [("a", z, j) for j in range(ws.j_trunc)]
    col = {u: i for i, u in enumerate(unknowns)}
    rows, rhs = [], []
    for z in ws.finals():
        for m in range(ws.m_range):
            row = [0] * len(unknowns)
            row[col[("a", z, m + ws.r + 1)]] += ws.q[z][m]
            row[col[("a", z, m + ws.r)]] -= 1
            for l in range(ws.r):
                row[col[("a", z, l)]] -= ws.d[z][m][l]
            for k in ws.levels(z):
                row[col[("f", ws.family.phi[(z, k)][m])]] -= 1
            rows.append(row)
            rhs.append(c[z][m])
    res = solve_z(IntMatrix.from_rows(rows), rhs)
    if isinstance(res, InfeasibilityCertificate):
        return res
    f = {a: res[col[("f", a)]] for a in atoms}
    a_map = {
        (z, j): res[col[("a", z, j)]]
        for z in ws.finals()
        for j in range(ws.j_trunc)
    }
    w = Witness(f, a_map)
    ok, _ = verify_witness(ws, c, w)
    assert ok, "solver output failed re-verification"
    return w


def transport_witness(result: TransformResult, ws_new: WhiteheadSystem, w: Witness) -> Witness:
    """Carry a witness across a transform: f(new) = f(old), a unchanged."""
    f = {}
    for z in ws_new.finals():
        for k in ws_new.levels(z):
            for x in ws_new.family.phi[(z, k)]:
                f[x] = w.f[result.old_of_new[x]]
    return Witness(f, dict(w.a))


def transformed_system(ws: WhiteheadSystem, result: TransformResult) -> WhiteheadSystem:
    """Same primes and coefficients over the transformed skeleton and family."""
    return WhiteheadSystem(
        system=result.system,
        family=result.family,
        r=ws.r,
        q=dict(ws.q),
        d=dict(ws.d),
        j_trunc=ws.j_trunc,
        strong_order=ws.strong_order,
    )


def theta_extends(ws: WhiteheadSystem, c: Mapping[Node, Sequence[int]], w: Witness) -> bool:
    """The homomorphism (atoms -> f, z -> a) takes each relation row to c exactly."""
    pres = build_witness_group(ws)
    names, index = generator_names(ws)
    vec = [0] * len(names)
    for a, v in w.f.items():
        vec[index[atom_name(a)]] = v
    for (z, j), v in w.a.items():
        vec[index[z_name(z, j)]] = v
    i = 0
    for z in ws.finals():
        for m in range(ws.m_range):
            image = sum(pres.relations.entries[i][t] * vec[t] for t in range(len(names)))
            if image != c[z][m]:
                return False
            i += 1
    return True


# --- quotient bases ---------------------------------------------------------


@dataclass(frozen=True)
class BasisCandidate:
    z_part: tuple[tuple[Node, int], ...]
    atom_part: tuple[Atom, ...]

    @property
    def size(self) -> int:
        return len(self.z_part) + len(self.atom_part)


class MissingOrderError(ValueError):
    pass


def _predecessor_slices(ws: WhiteheadSystem, order: Sequence[Node], upto: int, k: int) -> frozenset:
    out: set = set()
    for nu in order[:upto]:
        if k <= len(nu):
            out |= ws.family.slice_atoms(nu, k)
    return frozenset(out)


def enumerate_basis(ws: WhiteheadSystem, order: ReshufflingOrder, alpha: int, beta: int) -> BasisCandidate:
    """Candidate basis of the segment quotient from a reshuffling order.

    A z generator of an in-window final survives when its index sits in the
    head, beyond the relation range, or references a value fresh at some
    level; a family value survives when fresh at its level and not at the
    minimal fresh level of its position (that one is recovered through the
    relation row).
    """
    window = [z for z in ws.finals() if alpha < z[0] < beta]
    in_i = [z for z in ws.finals() if z[0] < beta]
    if sorted(order.order, key=lex_key) != sorted(in_i, key=lex_key):
        raise MissingOrderError(
            "order must cover exactly the finals with first coordinate below beta"
        )
    pos = {z: i for i, z in enumerate(order.order)}
    z_part = []
    atom_part: set = set()
    for z in sorted(window, key=lex_key):
        fresh = {}
        for k in ws.levels(z):
            before = _predecessor_slices(ws, order.order, pos[z], k)
            fresh[k] = [x not in before for x in ws.family.phi[(z, k)]]
        for j in range(ws.j_trunc):
            if j < ws.r or j - ws.r >= ws.m_range:
                z_part.append((z, j))
            elif any(fresh[k][j - ws.r] for k in ws.levels(z)):
                z_part.append((z, j))
        for m in range(ws.family.truncation):
            fresh_levels = [k for k in ws.levels(z) if fresh[k][m]]
            # the minimal fresh level is recovered through the relation row;
            # beyond the relation range no row exists, so nothing is dropped
            keep = fresh_levels if m >= ws.m_range else fresh_levels[1:]
            for k in keep:
                atom_part.add(ws.family.phi[(z, k)][m])
    return BasisCandidate(tuple(z_part), tuple(sorted(atom_part, key=atom_sort_key)))


def quotient_presentation(ws: WhiteheadSystem, alpha: int, beta: int) -> Presentation:
    """Presentation of the slice between the alpha+1 and beta stages.

    Generators and relation rows of finals with first coordinate below beta,
    with kill rows for every generator already present at stage alpha+1.
    """
    in_i = [z for z in ws.finals() if z[0] < beta]
    low = [z for z in in_i if z[0] <= alpha]
    atoms: set = set()
    for z in in_i:
        atoms |= ws.family.s(z)
    low_atoms: set = set()
    for z in low:
        low_atoms |= ws.family.s(z)
    names = [atom_name(a) for a in sorted(atoms, key=atom_sort_key)]
    for z in in_i:
        names += [z_name(z, j) for j in range(ws.j_trunc)]
    index = {g: i for i, g in enumerate(names)}
    rows = []
    for z in in_i:
        for m in range(ws.m_range):
            row = [0] * len(names)
            row[index[z_name(z, m + ws.r + 1)]] += ws.q[z][m]
            row[index[z_name(z, m + ws.r)]] -= 1
            for l in range(ws.r):
                row[index[z_name(z, l)]] -= ws.d[z][m][l]
            for k in ws.levels(z):
                row[index[atom_name(ws.family.phi[(z, k)][m])]] -= 1
            rows.append(row)
    killed = [atom_name(a) for a in sorted(low_atoms, key=atom_sort_key)]
    killed += [z_name(z, j) for z in low for j in range(ws.j_trunc)]
    for g in killed:
        row = [0] * len(names)
        row[index[g]] = 1
        rows.append(row)
    return Presentation(tuple(names), IntMatrix.from_rows(rows))


@dataclass(frozen=True)
class BasisReport:
    generated: bool
    unit_factors: bool
    count_matches: bool
    free_rank: int
    candidate_size: int
    failing_generators: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.generated and self.unit_factors and self.count_matches


def verify_basis(ws: WhiteheadSystem, candidate: BasisCandidate, alpha: int, beta: int) -> BasisReport:
    """Generation and independence of the candidate in the truncated quotient.

    Generation: every generator lies in the lattice spanned by the relation
    rows plus the candidate's unit vectors.  Independence: the quotient has
    unit invariant factors with free rank equal to the candidate size, and a
    surjection of a free group onto a free group of the same rank is an
    isomorphism.
    """
    pres = quotient_presentation(ws, alpha, beta)
    index = {g: i for i, g in enumerate(pres.generators)}
    n = len(pres.generators)
    cand_names = [z_name(z, j) for z, j in candidate.z_part]
    cand_names += [atom_name(a) for a in candidate.atom_part]
    stray = tuple(g for g in cand_names if g not in index)
    if stray:
        return BasisReport(
            generated=False,
            unit_factors=False,
            count_matches=False,
            free_rank=-1,
            candidate_size=candidate.size,
            failing_generators=stray,
        )
    cand_rows = []
    for g in cand_names:
        row = [0] * n
        row[index[g]] = 1
        cand_rows.append(row)

    factors = invariant_factors(pres)
    unit = all(d == 1 for d in factors)
    free_rank = n - matrix_rank(pres.relations) if pres.relations.rows else n
    stacked = IntMatrix.from_rows(list(pres.relations.entries) + cand_rows)
    h, _ = hnf(stacked)
    failing = []
    for g in pres.generators:
        e = [0] * n
        e[index[g]] = 1
        if not in_lattice(h, e):
            failing.append(g)
    return BasisReport(
        generated=not failing,
        unit_factors=unit,
        count_matches=candidate.size == free_rank,
        free_rank=free_rank,
        candidate_size=candidate.size,
        failing_generators=tuple(failing),
    )


def variant_filter(ws: WhiteheadSystem, allowed_first: frozenset[int]) -> WhiteheadSystem:
    """Index-bookkeeping stub: keep only the finals whose first coordinate is allowed.

    Prunes the subtrees under dropped root indices; no structural claim is
    made beyond relabeling.
    """
    keep_nodes = frozenset(
        n for n in ws.system.nodes if n == () or n[0] in allowed_first
    )
    new_e = {}
    for node in keep_nodes:
        if node in ws.system.E:
            pruned = frozenset(b for b in ws.system.E[node] if node + (b,) in keep_nodes)
            if pruned:
                new_e[node] = pruned
    sys_ = SystemSkeleton(
        nodes=keep_nodes,
        level={k: v for k, v in ws.system.level.items() if k in keep_nodes},
        E=new_e,
        B={k: v for k, v in ws.system.B.items() if k in keep_nodes},
        largeness=ws.system.largeness,
    )
    finals = tuple(z for z in ws.family.finals if z in keep_nodes)
    fam = BasedFamily(
        system=sys_,
        finals=finals,
        phi={(z, k): v for (z, k), v in ws.family.phi.items() if z in keep_nodes},
        truncation=ws.family.truncation,
    )
    return WhiteheadSystem(
        system=sys_,
        family=fam,
        r=ws.r,
        q={z: v for z, v in ws.q.items() if z in keep_nodes},
        d={z: v for z, v in ws.d.items() if z in keep_nodes},
        j_trunc=ws.j_trunc,
        strong_order=None,
    )
