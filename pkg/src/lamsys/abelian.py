"""Exact integer linear algebra and finitely generated abelian group presentations.

Everything here runs over arbitrary-precision integers: Hermite and Smith
normal forms with recorded unimodular transforms, integer linear system
solving with dual infeasibility certificates, and presentations given by a
generator list plus an integer relation matrix.  All functions are pure and
all results carry enough data to be re-verified by direct multiplication.

Pivoting is deterministic (smallest absolute value, lexicographic
tie-break), so every normal form and certificate is reproducible bit for
bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class DimensionError(ValueError):
    """Raised when matrix/vector shapes do not line up."""


@dataclass(frozen=True)
class IntMatrix:
    """Immutable dense integer matrix, row major."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        widths = {len(row) for row in self.entries}
        if len(widths) > 1:
            raise DimensionError(f"ragged rows: widths {sorted(widths)}")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]]) -> "IntMatrix":
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(tuple(tuple(0 for _ in range(cols)) for _ in range(rows)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.entries)) if self.entries else ())

    def mul(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        cols = other.cols
        out = []
        for r in self.entries:
            out.append(tuple(sum(r[k] * other.entries[k][j] for k in range(self.cols)) for j in range(cols)))
        return IntMatrix(tuple(out))

    def mul_vec(self, v: Sequence[int]) -> tuple[int, ...]:
        if self.cols != len(v):
            raise DimensionError(f"matrix has {self.cols} columns, vector has {len(v)}")
        return tuple(sum(row[j] * v[j] for j in range(self.cols)) for row in self.entries)

    def det(self) -> int:
        """Determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise DimensionError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = [list(row) for row in self.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                pivot = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if pivot is None:
                    return 0
                m[k], m[pivot] = m[pivot], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]


def _pivot_candidate(m: list[list[int]], start_row: int, start_col: int, rows: int, cols: int):
    """Smallest-|value| nonzero entry in the trailing block, lexicographic tie-break."""
    best = None
    for i in range(start_row, rows):
        for j in range(start_col, cols):
            v = m[i][j]
            if v != 0 and (best is None or abs(v) < abs(m[best[0]][best[1]])):
                best = (i, j)
    return best


def hnf(a: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form.

    Returns (H, U) with H = U * a, U unimodular, pivots positive with
    increasing column indices, and entries above each pivot reduced into
    [0, pivot).
    """
    rows, cols = a.rows, a.cols
    h = [list(row) for row in a.entries]
    u = [list(row) for row in IntMatrix.identity(rows).entries]

    def row_sub(i: int, j: int, q: int) -> None:
        if q == 0:
            return
        h[i] = [x - q * y for x, y in zip(h[i], h[j])]
        u[i] = [x - q * y for x, y in zip(u[i], u[j])]

    pr = 0
    for c in range(cols):
        while True:
            best = None
            for i in range(pr, rows):
                v = h[i][c]
                if v != 0 and (best is None or abs(v) < abs(h[best][c])):
                    best = i
            if best is None:
                break
            if best != pr:
                h[pr], h[best] = h[best], h[pr]
                u[pr], u[best] = u[best], u[pr]
            done = True
            for i in range(pr + 1, rows):
                if h[i][c] != 0:
                    row_sub(i, pr, h[i][c] // h[pr][c])
                    if h[i][c] != 0:
                        done = False
            if done:
                break
        if pr < rows and h[pr][c] != 0:
            if h[pr][c] < 0:
                h[pr] = [-x for x in h[pr]]
                u[pr] = [-x for x in u[pr]]
            for i in range(pr):
                row_sub(i, pr, h[i][c] // h[pr][c])
            pr += 1
            if pr == rows:
                break
    return IntMatrix.from_rows(h), IntMatrix.from_rows(u)


@dataclass(frozen=True)
class SmithDecomposition:
    """D = U * A * V with U, V unimodular and nonnegative divisibility-chained diagonal."""

    u: IntMatrix
    d: IntMatrix
    v: IntMatrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.d.entries[i][i] for i in range(min(self.d.rows, self.d.cols)))

    def verify(self, a: IntMatrix) -> bool:
        if self.u.mul(a).mul(self.v).entries != self.d.entries:
            return False
        if abs(self.u.det()) != 1 or abs(self.v.det()) != 1:
            return False
        diag = self.diagonal
        for i in range(self.d.rows):
            for j in range(self.d.cols):
                if i != j and self.d.entries[i][j] != 0:
                    return False
        for i in range(len(diag) - 1):
            if diag[i] < 0:
                return False
            nxt = diag[i + 1]
            if diag[i] == 0:
                if nxt != 0:
                    return False
            elif nxt % diag[i] != 0:
                return False
        return True


def snf(a: IntMatrix) -> SmithDecomposition:
    """Smith normal form with recorded transforms, verified before returning."""
    rows, cols = a.rows, a.cols
    d = [list(row) for row in a.entries]
    u = [list(row) for row in IntMatrix.identity(rows).entries]
    v = [list(row) for row in IntMatrix.identity(cols).entries]

    def row_sub(i, j, q):
        if q:
            d[i] = [x - q * y for x, y in zip(d[i], d[j])]
            u[i] = [x - q * y for x, y in zip(u[i], u[j])]

    def col_sub(i, j, q):
        if q:
            for r in range(rows):
                d[r][i] -= q * d[r][j]
            for r in range(cols):
                v[r][i] -= q * v[r][j]

    def swap_rows(i, j):
        if i != j:
            d[i], d[j] = d[j], d[i]
            u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        if i != j:
            for r in range(rows):
                d[r][i], d[r][j] = d[r][j], d[r][i]
            for r in range(cols):
                v[r][i], v[r][j] = v[r][j], v[r][i]

    s = 0
    while s < min(rows, cols):
        piv = _pivot_candidate(d, s, s, rows, cols)
        if piv is None:
            break
        swap_rows(s, piv[0])
        swap_cols(s, piv[1])
        while True:
            # clear the pivot's column and row by repeated division
            redo = False
            for i in range(s + 1, rows):
                if d[i][s] != 0:
                    row_sub(i, s, d[i][s] // d[s][s])
                    if d[i][s] != 0:
                        swap_rows(s, i)
                        redo = True
            if redo:
                continue
            for j in range(s + 1, cols):
                if d[s][j] != 0:
                    col_sub(j, s, d[s][j] // d[s][s])
                    if d[s][j] != 0:
                        swap_cols(s, j)
                        redo = True
            if redo:
                continue
            # enforce divisibility of the trailing block by the pivot
            offender = None
            for i in range(s + 1, rows):
                for j in range(s + 1, cols):
                    if d[i][j] % d[s][s] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_add = offender
            d[s] = [x + y for x, y in zip(d[s], d[row_add])]
            u[s] = [x + y for x, y in zip(u[s], u[row_add])]
        if d[s][s] < 0:
            d[s] = [-x for x in d[s]]
            u[s] = [-x for x in u[s]]
        s += 1

    result = SmithDecomposition(IntMatrix.from_rows(u), IntMatrix.from_rows(d), IntMatrix.from_rows(v))
    assert result.verify(a), "smith decomposition failed self-check"
    return result


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Rational row vector y with y*A integral but y*b non-integral."""

    y: tuple[Fraction, ...]

    def verify(self, a: IntMatrix, b: Sequence[int]) -> bool:
        if len(self.y) != a.rows or len(b) != a.rows:
            return False
        for j in range(a.cols):
            if sum(self.y[i] * a.entries[i][j] for i in range(a.rows)).denominator != 1:
                return False
        return sum(self.y[i] * b[i] for i in range(a.rows)).denominator != 1


def solve_z(a: IntMatrix, b: Sequence[int]):
    """Solve a*x = b over the integers.

    Returns a solution tuple, or an InfeasibilityCertificate whose dot
    products prove no integer solution exists.
    """
    if len(b) != a.rows:
        raise DimensionError(f"matrix has {a.rows} rows, rhs has {len(b)}")
    if a.rows == 0:
        return tuple(0 for _ in range(a.cols))
    dec = snf(a)
    c = dec.u.mul_vec(b)
    diag = dec.diagonal
    y = [0] * a.cols
    for i in range(a.rows):
        di = diag[i] if i < len(diag) else 0
        if di == 0:
            if c[i] != 0:
                denom = abs(c[i]) + 1
                cert = InfeasibilityCertificate(tuple(Fraction(x, denom) for x in dec.u.row(i)))
                assert cert.verify(a, b)
                return cert
        else:
            if c[i] % di != 0:
                cert = InfeasibilityCertificate(tuple(Fraction(x, di) for x in dec.u.row(i)))
                assert cert.verify(a, b)
                return cert
            if i < a.cols:
                y[i] = c[i] // di
    x = tuple(sum(dec.v.entries[r][k] * y[k] for k in range(a.cols)) for r in range(a.cols))
    assert a.mul_vec(x) == tuple(int(t) for t in b)
    return x


def kernel_basis(a: IntMatrix) -> IntMatrix:
    """Rows form a basis of the integer kernel {x : a*x = 0}."""
    if a.rows == 0:
        return IntMatrix.identity(a.cols)
    dec = snf(a)
    diag = dec.diagonal
    free = [j for j in range(a.cols) if j >= len(diag) or diag[j] == 0]
    rows = [tuple(dec.v.entries[r][j] for r in range(a.cols)) for j in free]
    return IntMatrix.from_rows(rows)


def express_in_lattice(a: IntMatrix, v: Sequence[int]):
    """Integer coefficients t with t * a = v, or None when v is outside the row lattice."""
    if len(v) != a.cols:
        raise DimensionError(f"lattice ambient dimension {a.cols}, vector has {len(v)}")
    res = solve_z(a.transpose(), v)
    return None if isinstance(res, InfeasibilityCertificate) else res


def reduce_mod_lattice(v: Sequence[int], h: IntMatrix, balanced: bool = False) -> tuple[int, ...]:
    """Canonical representative of v modulo the row lattice of an HNF matrix h.

    With balanced=True residues at pivot coordinates land in (-p/2, p/2],
    otherwise in [0, p).
    """
    x = list(int(t) for t in v)
    for row in h.entries:
        j = next((k for k, val in enumerate(row) if val != 0), None)
        if j is None:
            continue
        p = row[j]
        q = (x[j] + (p // 2 if balanced else 0)) // p if p > 0 else 0
        if q:
            x = [xi - q * ri for xi, ri in zip(x, row)]
    return tuple(x)


def in_lattice(h: IntMatrix, v: Sequence[int]) -> bool:
    """Membership of v in the row lattice, h already in HNF."""
    return all(t == 0 for t in reduce_mod_lattice(v, h))


def matrix_rank(a: IntMatrix) -> int:
    h, _ = hnf(a)
    return sum(1 for row in h.entries if any(row))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for anything this library will see."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # exact for n < 3.3 * 10^24 with these witnesses
    for base in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class Presentation:
    """Finitely generated abelian group given by named generators and relation rows."""

    generators: tuple[str, ...]
    relations: IntMatrix

    def __post_init__(self):
        if self.relations.rows and self.relations.cols != len(self.generators):
            raise DimensionError(
                f"relation width {self.relations.cols} != generator count {len(self.generators)}"
            )
        if len(set(self.generators)) != len(self.generators):
            raise ValueError("duplicate generator names")


def invariant_factors(p: Presentation) -> tuple[int, ...]:
    """Nonzero diagonal of the Smith form of the relation matrix, each > 0."""
    if p.relations.rows == 0:
        return ()
    rel = IntMatrix.from_rows([r for r in p.relations.entries if any(r)] or [[0] * len(p.generators)])
    if p.relations.cols == 0:
        return ()
    return tuple(d for d in snf(rel).diagonal if d != 0)


def is_free(p: Presentation) -> bool:
    return all(d == 1 for d in invariant_factors(p))


def rank(p: Presentation) -> int:
    return len(p.generators) - matrix_rank(p.relations) if p.relations.rows else len(p.generators)


@dataclass(frozen=True)
class NonfreeSpec:
    """Data for a divisibility-chain group on generators z_0..z_{j_trunc-1}.

    The relations are q_m * z_{m+r+1} = z_{m+r} + sum_{l<r} d[m][l] * z_l for
    every m with m + r + 1 < j_trunc.  Finite truncations are free; the
    interest is the divisibility the chain forces in the quotient by
    <z_0..z_{r-1}>.
    """

    r: int
    q: tuple[int, ...]
    d: tuple[tuple[int, ...], ...]
    j_trunc: int

    def __post_init__(self):
        if self.j_trunc < self.r + 2:
            raise ValueError(f"truncation {self.j_trunc} too small, need at least r+2 = {self.r + 2}")
        need = self.relation_count
        if len(self.q) < need:
            raise ValueError(f"need {need} primes for truncation {self.j_trunc}, got {len(self.q)}")
        if len(self.d) < need:
            raise ValueError(f"need {need} coefficient rows, got {len(self.d)}")
        for m in range(need):
            if not is_prime(self.q[m]):
                raise ValueError(f"q[{m}] = {self.q[m]} is not prime")
            if len(self.d[m]) != self.r:
                raise ValueError(f"coefficient row {m} has length {len(self.d[m])}, expected r = {self.r}")

    @property
    def relation_count(self) -> int:
        # one relation per z-generator beyond the head and the chain anchor
        return self.j_trunc - self.r - 1


def build_chain_group(spec: NonfreeSpec) -> Presentation:
    """Presentation of the truncated divisibility-chain group."""
    j = spec.j_trunc
    gens = tuple(f"z{i}" for i in range(j))
    rows = []
    for m in range(spec.relation_count):
        row = [0] * j
        row[m + spec.r + 1] = spec.q[m]
        row[m + spec.r] -= 1
        for l in range(spec.r):
            row[l] -= spec.d[m][l]
        rows.append(row)
    return Presentation(gens, IntMatrix.from_rows(rows))


@dataclass(frozen=True)
class DivisibilityStep:
    m: int
    product: int
    witness_index: int
    combination: tuple[int, ...]
    head_coefficients: tuple[int, ...]
    verified: bool


@dataclass(frozen=True)
class DivisibilityReport:
    steps: tuple[DivisibilityStep, ...]

    @property
    def ok(self) -> bool:
        return all(s.verified for s in self.steps)


def divisibility_evidence(spec: NonfreeSpec, m_max: int) -> DivisibilityReport:
    """Certify that z_r is divisible by q_0*...*q_m modulo <z_0..z_{r-1}>.

    For each m <= m_max exhibits integer coefficients expressing
    z_r - (q_0*...*q_m) * z_{m+r+1} as a combination of relation rows and the
    head generators z_0..z_{r-1}, then re-verifies the combination exactly.
    """
    if m_max > spec.relation_count - 1:
        raise ValueError(
            f"m_max {m_max} exceeds truncation: need m_max <= {spec.relation_count - 1}"
        )
    pres = build_chain_group(spec)
    j = spec.j_trunc
    head = [tuple(1 if k == l else 0 for k in range(j)) for l in range(spec.r)]
    stacked = IntMatrix.from_rows(list(pres.relations.entries) + head)
    steps = []
    product = 1
    for m in range(m_max + 1):
        product *= spec.q[m]
        target = [0] * j
        target[spec.r] = 1
        target[m + spec.r + 1] -= product
        coeffs = express_in_lattice(stacked, target)
        ok = False
        rel_part: tuple[int, ...] = ()
        head_part: tuple[int, ...] = ()
        if coeffs is not None:
            rel_part = coeffs[: pres.relations.rows]
            head_part = coeffs[pres.relations.rows:]
            recombined = [0] * j
            for t, row in zip(coeffs, stacked.entries):
                for k in range(j):
                    recombined[k] += t * row[k]
            ok = recombined == target
        steps.append(
            DivisibilityStep(
                m=m,
                product=product,
                witness_index=m + spec.r + 1,
                combination=rel_part,
                head_coefficients=head_part,
                verified=ok,
            )
        )
    return DivisibilityReport(tuple(steps))


def purity_evidence(spec: NonfreeSpec, box: int = 2, k_max: int = 4):
    """Brute-force check that the head subgroup is pure in the truncated chain group.

    Searches coefficient vectors x with |entries| <= box and multipliers
    2 <= k <= k_max; whenever k*x lands in <z_0..z_{r-1}> modulo relations, x
    itself must.  Returns (True, None) or (False, counterexample vector).
    """
    from itertools import product as iproduct

    pres = build_chain_group(spec)
    j = spec.j_trunc
    head = [tuple(1 if k == l else 0 for k in range(j)) for l in range(spec.r)]
    lattice = IntMatrix.from_rows(list(pres.relations.entries) + head)
    h, _ = hnf(lattice)
    for x in iproduct(range(-box, box + 1), repeat=j):
        if all(v == 0 for v in x):
            continue
        for k in range(2, k_max + 1):
            kx = [k * v for v in x]
            if in_lattice(h, kx) and not in_lattice(h, x):
                return False, tuple(x)
    return True, None
