"""HL-triples, primitive decompositions and the canonical splitting.

An HL-triple is a filtered graded space ``(H, F)`` with an operator ``e`` of
cohomological degree 2 sending ``F_b`` into ``F_{b+2}``, such that every
induced ``e^i: Gr_{-i} -> Gr_i`` is invertible.  Such a triple has a unique
filtered isomorphism ``phi_e: Gr_* -> H`` built from lifts of primitive
classes that are killed, modulo lower steps, by all higher powers of ``e``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction

from .filtered import FilteredGradedSpace, FilteredMap, is_filtered
from .linalg import (
    Matrix,
    Subspace,
    determinant,
    inverse,
    kernel,
    quotient_with_projection,
    solve,
    vstack,
)


class FiltrationShiftError(ValueError):
    """``e`` does not send ``F_b`` into ``F_{b+2}`` (or is not of degree 2)."""


class HardLefschetzError(ValueError):
    """An operation that needs the hard Lefschetz property was given a triple without it."""


class SplittingInvariantError(RuntimeError):
    """Internal invariant violated while building the splitting; indicates a bug."""


@dataclass(frozen=True)
class HLTriple:
    space: FilteredGradedSpace
    e: FilteredMap

    @classmethod
    def from_blocks(cls, space: FilteredGradedSpace, blocks) -> "HLTriple":
        """``blocks[k]`` is the matrix ``H^k -> H^{k+2}``."""
        target = dataclasses.replace(space, twist=space.twist + 1)
        return cls(space, FilteredMap(space, target, dict(blocks), 2, 2, 1))

    @classmethod
    def from_total(cls, space: FilteredGradedSpace, m: Matrix) -> "HLTriple":
        target = dataclasses.replace(space, twist=space.twist + 1)
        return cls(space, FilteredMap.from_total(space, target, m, 2, 2, 1))

    @property
    def matrix(self) -> Matrix:
        return self.e.total

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def check_shift(self) -> None:
        if self.e.degree_shift != 2 or self.e.filtration_shift != 2:
            raise FiltrationShiftError(
                f"e has degree shift {self.e.degree_shift} and filtration shift "
                f"{self.e.filtration_shift}; both must be 2"
            )
        if not is_filtered(self.e):
            raise FiltrationShiftError("e does not map F_b into F_{b+2}")

    def graded_e(self) -> Matrix:
        """``Gr(e)`` as an endomorphism of ``Gr_*``."""
        gc = self.space.graded
        rows = [[Fraction(0)] * gc.dim for _ in range(gc.dim)]
        e = self.matrix
        for b in self.space.levels:
            if b + 2 not in gc.pieces:
                continue
            m = gc.graded_map(e, b, b + 2)
            src, tgt = gc.level_indices(b), gc.level_indices(b + 2)
            for i, r in enumerate(tgt):
                for j, c in enumerate(src):
                    rows[r][c] = m[i, j]
        return Matrix.from_rows(rows, gc.dim)


def _max_index(space: FilteredGradedSpace) -> int:
    return max(abs(space.b_min), abs(space.b_max))


@dataclass
class HLCertificate:
    level: int
    matrix: Matrix
    determinant: Fraction


@dataclass
class HLReport:
    holds: bool
    certificates: list = field(default_factory=list)
    failure: int | None = None

    def __bool__(self) -> bool:
        return self.holds


def verify_hl(t: HLTriple) -> HLReport:
    """Check that ``e^i: Gr_{-i} -> Gr_i`` is invertible for every ``i >= 0``."""
    t.check_shift()
    gc = t.space.graded
    e = t.matrix
    report = HLReport(True)
    power = Matrix.identity(t.dim)
    for i in range(_max_index(t.space) + 1):
        m = gc.graded_map(power, -i, i) if -i in gc.pieces and i in gc.pieces else None
        if m is None:
            lo, hi = gc.gr_dim(-i), gc.gr_dim(i)
            m = Matrix.zero(hi, lo)
        det = determinant(m) if m.is_square() else Fraction(0)
        report.certificates.append(HLCertificate(i, m, det))
        if det == 0 and report.holds:
            report.holds = False
            report.failure = i
        power = e @ power
    return report


@dataclass
class PrimitiveDecomposition:
    """``Gr_* = ⊕_{0<=j<=i} e^j P_{-i}``.

    ``primitive[i]`` lives in the coordinates of ``Gr_{-i}``; ``generators[i]``
    lists its basis in ``Gr_*`` coordinates; ``pieces[i, j]`` is
    ``e^j P_{-i} ⊆ Gr_{-i+2j}`` as a subspace of ``Gr_*``.
    """

    primitive: dict
    generators: dict
    pieces: dict
    graded_e: Matrix

    def basis(self) -> list[tuple[int, int, int, tuple]]:
        """``(i, j, g, Gr(e)^j u_g)`` for every primitive generator ``u_g``."""
        out = []
        for i in sorted(self.generators):
            for g, u in enumerate(self.generators[i]):
                v = u
                for j in range(i + 1):
                    out.append((i, j, g, v))
                    v = self.graded_e @ v
        return out


def _require_hl(t: HLTriple) -> HLReport:
    report = verify_hl(t)
    if not report.holds:
        raise HardLefschetzError(f"hard Lefschetz fails at i = {report.failure}")
    return report


def primitive_parts(t: HLTriple) -> PrimitiveDecomposition:
    _require_hl(t)
    gc = t.space.graded
    ge = t.graded_e()
    n = gc.dim
    primitive, generators, pieces = {}, {}, {}
    for i in range(_max_index(t.space) + 1):
        if gc.gr_dim(-i) == 0:
            continue
        src = gc.level_indices(-i)
        top = gc.level_indices(i + 2) if (i + 2) in gc.pieces else []
        power = ge.power(i + 1)
        m = power.submatrix(top, src) if top else Matrix.zero(0, len(src))
        p = kernel(m)
        if p.is_zero():
            continue
        primitive[i] = p
        gens = []
        for v in p.basis:
            w = [Fraction(0)] * n
            for idx, x in zip(src, v):
                w[idx] = x
            gens.append(tuple(w))
        generators[i] = gens
        cur = gens
        for j in range(i + 1):
            pieces[i, j] = Subspace.span(cur, n)
            cur = [ge @ v for v in cur]
    dec = PrimitiveDecomposition(primitive, generators, pieces, ge)
    total = sum(s.dim for s in pieces.values())
    if total != n or Subspace.span([v for *_, v in dec.basis()], n).dim != n:
        raise SplittingInvariantError(
            f"primitive pieces span dimension {total} of Gr_* (dimension {n})"
        )
    return dec


@dataclass
class Lift:
    """``f_i``: columns are lifts of the generators of ``P_{-i}`` into ``F_{-i} H``."""

    level: int
    matrix: Matrix
    naive: Matrix
    nullity: int
    equations: int


def _lift_system(t: HLTriple, i: int) -> tuple[Matrix, Matrix, Matrix]:
    """Coefficient matrix, step basis and projection for the lift conditions.

    Unknown ``z`` parametrizes ``x = S z`` in ``F_{-i} H``.  Rows:
    ``p_{-i} x = u`` and, for each ``s > i`` with ``F_{s-1} != H``,
    ``e^s x ∈ F_{s-1}``.  The latter is the chain form of "the image of
    ``e^s x`` in ``Gr_s`` vanishes".
    """
    space = t.space
    gc = space.graded
    n = space.total_dim
    step = space.total_step(-i)
    basis = step.columns()
    blocks = [gc.level_projection(-i) @ basis]
    e = t.matrix
    power = e.power(i + 1)
    s = i + 1
    while s - 1 < space.b_max:
        q = quotient_with_projection(n, space.total_step(s - 1))[1]
        blocks.append(q @ power @ basis)
        power = e @ power
        s += 1
    return vstack(blocks, basis.cols), basis, gc.level_projection(-i)


def unique_lift(t: HLTriple, i: int, dec: PrimitiveDecomposition | None = None) -> Lift:
    if dec is None:
        dec = primitive_parts(t)
    gc = t.space.graded
    n = t.dim
    gens = dec.generators.get(i, [])
    coeffs, basis, proj = _lift_system(t, i)
    idx = gc.level_indices(-i)
    u = Matrix.from_rows([[g[j] for g in gens] for j in idx], len(gens)) if idx else Matrix.zero(0, len(gens))
    rhs = vstack([u, Matrix.zero(coeffs.rows - u.rows, len(gens))], len(gens))
    z, nullity = solve(coeffs, rhs)
    if z is None:
        raise SplittingInvariantError(f"lift conditions for i = {i} are inconsistent")
    if nullity:
        raise SplittingInvariantError(f"lift conditions for i = {i} leave {nullity} free parameters")
    naive = gc.level_section(-i) @ u if gens else Matrix.zero(n, 0)
    return Lift(i, basis @ z if gens else Matrix.zero(n, 0), naive, nullity, coeffs.rows)


@dataclass
class CanonicalSplitting:
    """``phi_e = Σ e^j f_i : Gr_* -> H`` and its inverse."""

    lifts: dict
    phi: Matrix
    phi_inverse: Matrix
    decomposition: PrimitiveDecomposition


def canonical_splitting(t: HLTriple) -> CanonicalSplitting:
    dec = primitive_parts(t)
    n = t.dim
    if n == 0:
        z = Matrix.zero(0, 0)
        return CanonicalSplitting({}, z, z, dec)
    lifts = {i: unique_lift(t, i, dec) for i in dec.generators}
    e = t.matrix
    domain, images = [], []
    for i, j, g, v in dec.basis():
        domain.append(v)
        images.append(e.power(j) @ lifts[i].matrix.col(g))
    dom = Matrix.from_columns(domain, n)
    img = Matrix.from_columns(images, n)
    phi = img @ inverse(dom)
    try:
        phi_inv = inverse(phi)
    except ZeroDivisionError:
        raise SplittingInvariantError("phi_e is singular") from None
    split = CanonicalSplitting(lifts, phi, phi_inv, dec)
    failure = splitting_defect(t, split)
    if failure:
        raise SplittingInvariantError(failure)
    return split


def splitting_defect(t: HLTriple, split: CanonicalSplitting) -> str | None:
    """Describe the first way ``phi_e`` fails to be a filtered isomorphism inducing the identity."""
    gc = t.space.graded
    phi = split.phi
    for b in t.space.levels:
        src = gc.filtration_on_gr(b).map(phi)
        if src != t.space.total_step(b):
            return f"phi_e(F_{b} Gr) != F_{b} H"
        sec = gc.level_subspace(b).columns()
        got = gc.level_projection(b) @ phi @ sec
        if got != Matrix.identity(gc.gr_dim(b)):
            return f"Gr_{b}(phi_e) is not the identity"
    return None


def graded_of(t: HLTriple, m: Matrix) -> Matrix:
    """``Gr(m)`` for a filtration-preserving endomorphism of the total space (block diagonal on ``Gr_*``)."""
    gc = t.space.graded
    blocks = []
    for b in t.space.levels:
        blocks.append(gc.graded_map(m, b, b))
    return Matrix.block_diag(blocks) if blocks else Matrix.zero(0, 0)


def lefschetz_compatible(t: HLTriple, split: CanonicalSplitting) -> bool:
    """``e φ(Gr(e)^j u) = φ(Gr(e)^{j+1} u)`` for primitive ``u ∈ P_{-i}`` and ``j < i``."""
    e, phi, ge = t.matrix, split.phi, split.decomposition.graded_e
    for i, j, _, v in split.decomposition.basis():
        if j < i and e @ (phi @ v) != phi @ (ge @ v):
            return False
    return True
