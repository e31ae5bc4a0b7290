"""Projector families of the decomposition theorem.

The associated graded ``Gr_*`` of an HL-triple splits four ways: by
perversity, by perversity and support, by primitive Lefschetz piece, and by
both.  Each splitting, transported to ``H`` through the canonical splitting
``phi``, gives a complete system of orthogonal projectors on ``H``.

This module also holds the composition-of-maps identities: the filtration
induced by a composite on the graded pieces of the first map, the support
refined subquotients, their iterated n-fold form, and the extraction of
intersection cohomology as the dense perversity-zero block of a resolution.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .filtered import FilteredGradedSpace, FiltrationError, Subquotient, validate_filtration
from .lefschetz import CanonicalSplitting, HLTriple, PrimitiveDecomposition
from .linalg import Matrix, Subspace, inverse
from .supports import SupportDecomposition

KINDS = ("perversity", "support", "primitive", "both")


class DecompositionError(ValueError):
    """Blocks of a family fail to form a direct sum of ``Gr_*``."""


@dataclass
class FourDecompositions:
    """Blocks of ``Gr_*`` (subspaces in ``Gr_*`` coordinates) for each family."""

    by_perversity: dict
    by_support: dict
    by_primitive: dict
    by_both: dict

    def family(self, kind: str) -> dict:
        try:
            return {
                "perversity": self.by_perversity,
                "support": self.by_support,
                "primitive": self.by_primitive,
                "both": self.by_both,
            }[kind]
        except KeyError:
            raise ValueError(f"unknown family {kind!r}; expected one of {KINDS}") from None


def _direct_sum_defect(blocks: Mapping, n: int) -> str | None:
    total = sum(s.dim for s in blocks.values())
    if total != n:
        return f"block dimensions sum to {total}, expected {n}"
    span = Subspace.span([v for s in blocks.values() for v in s.basis], n)
    if span.dim != n:
        return f"blocks span only dimension {span.dim} of {n}"
    return None


def refinement_map(fine: str, coarse: str):
    """Index map sending a block of ``fine`` to the block of ``coarse`` containing it."""
    level = {
        "perversity": lambda ix: ix,
        "support": lambda ix: ix[0],
        "primitive": lambda ix: -ix[0] + 2 * ix[1],
        "both": lambda ix: -ix[0] + 2 * ix[1],
    }
    if fine == coarse:
        return lambda ix: ix
    if coarse == "perversity":
        return level[fine]
    if fine == "both" and coarse == "support":
        return lambda ix: (-ix[0] + 2 * ix[1], ix[2])
    if fine == "both" and coarse == "primitive":
        return lambda ix: (ix[0], ix[1])
    raise ValueError(f"{fine} does not refine {coarse}")


def four_decompositions(
    t: HLTriple,
    d: SupportDecomposition | None,
    primitive: PrimitiveDecomposition,
    dense_label: str = "V",
) -> FourDecompositions:
    """Build and certify the four splittings of ``Gr_*``.

    With ``d = None`` every graded piece is assigned to the single support
    ``dense_label``.
    """
    gc = t.space.graded
    n = gc.dim
    by_perv = {b: gc.level_subspace(b) for b in t.space.levels}
    by_supp = {}
    if d is None:
        for b in t.space.levels:
            by_supp[b, dense_label] = by_perv[b]
    else:
        for b in t.space.levels:
            for label in d.labels:
                parts = []
                for k in t.space.degrees:
                    if gc.gr_dim(b, k) == 0:
                        continue
                    try:
                        s = d.summands[b, k][label]
                    except KeyError:
                        raise DecompositionError(f"no support summand for (b={b}, degree {k})") from None
                    if s.ambient_dim != gc.gr_dim(b, k):
                        raise DecompositionError(
                            f"support summand {label} at (b={b}, degree {k}) lives in Q^{s.ambient_dim}, "
                            f"but Gr has dimension {gc.gr_dim(b, k)}"
                        )
                    parts.append(gc.gr_subspace(b, k, s))
                by_supp[b, label] = Subspace.span([v for p in parts for v in p.basis], n)
    by_prim = dict(primitive.pieces)
    by_both = {}
    labels = sorted({y for _, y in by_supp}, key=lambda y: [yy for _, yy in by_supp].index(y))
    for (i, j), piece in by_prim.items():
        b = -i + 2 * j
        for y in labels:
            by_both[i, j, y] = piece & by_supp[b, y]
    dec = FourDecompositions(by_perv, by_supp, by_prim, by_both)
    for kind in KINDS:
        bad = _direct_sum_defect(dec.family(kind), n)
        if bad:
            raise DecompositionError(f"{kind} family: {bad}")
    for coarse in ("perversity", "support", "primitive"):
        fine_blocks = dec.by_both
        f = refinement_map("both", coarse)
        for ix, block in dec.family(coarse).items():
            fiber = [s for jx, s in fine_blocks.items() if f(jx) == ix]
            if Subspace.span([v for s in fiber for v in s.basis], n) != block:
                raise DecompositionError(f"both family does not refine {coarse} block {ix}")
    return dec


@dataclass
class ProjectorFamily:
    kind: str
    projectors: dict  # index -> Matrix on H
    filtrations: dict = field(default_factory=dict)

    def rank(self, index) -> int:
        from .linalg import rank

        return rank(self.projectors[index])

    def ranks(self) -> dict:
        from .linalg import rank

        return {ix: rank(p) for ix, p in self.projectors.items()}

    def conjugate(self, c: Matrix, c_inv: Matrix | None = None) -> "ProjectorFamily":
        c_inv = inverse(c) if c_inv is None else c_inv
        return ProjectorFamily(
            self.kind, {ix: c @ p @ c_inv for ix, p in self.projectors.items()}, dict(self.filtrations)
        )


def build_projectors(split: CanonicalSplitting, dec: FourDecompositions, kind: str) -> ProjectorFamily:
    """``π_index = φ ∘ (projection onto the block along the others) ∘ φ^{-1}``."""
    blocks = dec.family(kind)
    n = split.phi.rows
    if n == 0:
        return ProjectorFamily(kind, {ix: Matrix.zero(0, 0) for ix in blocks})
    cols, spans = [], {}
    for ix, s in blocks.items():
        spans[ix] = range(len(cols), len(cols) + s.dim)
        cols.extend(s.basis)
    basis = Matrix.from_columns(cols, n)
    m = split.phi @ basis
    try:
        m_inv = inverse(m)
    except ZeroDivisionError:
        raise DecompositionError(f"{kind} blocks do not form a basis of Gr_*") from None
    out = {}
    for ix, rng in spans.items():
        if not rng:
            out[ix] = Matrix.zero(n, n)
            continue
        out[ix] = m.submatrix(range(n), rng) @ m_inv.submatrix(rng, range(n))
    return ProjectorFamily(kind, out)


@dataclass
class SystemReport:
    ok: bool
    witness: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_projector_system(p: ProjectorFamily) -> SystemReport:
    """``π² = π``, ``π π' = 0`` for distinct indices, ``Σ π = Id``; all exact."""
    items = list(p.projectors.items())
    if not items:
        return SystemReport(False, "empty family")
    n = items[0][1].rows
    for ix, m in items:
        if m.shape != (n, n):
            return SystemReport(False, f"projector {ix} has shape {m.shape}")
        if m @ m != m:
            return SystemReport(False, f"idempotence fails for {ix}")
    for a, (ia, ma) in enumerate(items):
        for ib, mb in items[a + 1:]:
            if not (ma @ mb).is_zero():
                return SystemReport(False, f"orthogonality fails for {ia}, {ib}")
            if not (mb @ ma).is_zero():
                return SystemReport(False, f"orthogonality fails for {ib}, {ia}")
    total = Matrix.zero(n, n)
    for _, m in items:
        total = total + m
    if total != Matrix.identity(n):
        return SystemReport(False, "completeness fails: projectors do not sum to the identity")
    return SystemReport(True)


def verify_refinement(fine: ProjectorFamily, coarse: ProjectorFamily, mapping=None) -> bool:
    """Every coarse projector is the sum of the fine projectors mapped to it."""
    f = mapping if mapping is not None else refinement_map(fine.kind, coarse.kind)
    if callable(f):
        index_map = {ix: f(ix) for ix in fine.projectors}
    else:
        index_map = dict(f)
    if set(index_map.values()) - set(coarse.projectors):
        return False
    for ix, target in coarse.projectors.items():
        fiber = [fine.projectors[j] for j, c in index_map.items() if c == ix]
        n = target.rows
        total = Matrix.zero(n, n)
        for m in fiber:
            total = total + m
        if total != target:
            return False
    return True


@dataclass
class PreservationReport:
    ok: bool
    witness: tuple | None = None  # (filtration name, projector index, degree, level)

    def __bool__(self) -> bool:
        return self.ok


def verify_hodge_weight_preservation(
    p: ProjectorFamily,
    hodge: FilteredGradedSpace | None = None,
    weight: FilteredGradedSpace | None = None,
) -> PreservationReport:
    """Every projector maps every step of each given filtration into itself."""
    for name, filt in (("hodge", hodge), ("weight", weight)):
        if filt is None:
            continue
        for b in range(filt.b_min - 1, filt.b_max + 1):
            step = filt.total_step(b)
            for ix, m in p.projectors.items():
                if not step.map(m).issubspace(step):
                    deg = next(
                        (k for k in filt.degrees if not filt.step(k, b).is_full()), None
                    )
                    return PreservationReport(False, (name, ix, deg, b))
    return PreservationReport(True)


# composition of maps ----------------------------------------------------


@dataclass
class InducedFiltration:
    """Filtration induced on ``Gr_{g,a}`` by a composite's perverse filtration.

    ``space`` carries the steps in ``Gr_{g,a}`` coordinates (the subquotient
    coordinates of each degree), renumbered so step ``b`` comes from
    ``P_{h,a+b}``.  ``identity_holds`` is ``None`` when no declared filtration
    was supplied for comparison.
    """

    level: int
    space: FilteredGradedSpace
    quotients: dict
    identity_holds: bool | None = None
    failures: list = field(default_factory=list)
    blocks: dict = field(default_factory=dict)
    block_total: int | None = None


def _subquotients(upper: Mapping[int, Subspace], lower: Mapping[int, Subspace]) -> dict:
    return {k: Subquotient(upper[k], lower[k]) for k in upper}


def induced_filtration_on_graded(
    pg: FilteredGradedSpace,
    ph: FilteredGradedSpace,
    a: int,
    pf: FilteredGradedSpace | None = None,
    g_supports: Mapping | None = None,
    h_supports: Mapping | None = None,
    f_supports: Mapping | None = None,
) -> InducedFiltration:
    """Filtration ``P_{h,a+b} Gr_{g,a}`` and, if declared, its comparison with ``P_{f,b} Gr_{g,a}``.

    ``pf`` is an ambient filtration whose induced filtration on ``Gr_{g,a}``
    is the declared one.  ``g_supports[(a, X)]``, ``h_supports[(c, Y)]`` and
    ``f_supports[(b, Y)]`` map degrees to ambient lifts of the support
    refined steps; when present, the support blocks
    ``(P_{h,a+b,Y} ∩ P_{g,a,X})`` modulo ``(P_{h,a+b-1} ∩ P_{g,a,X})``, read in
    ``Gr_{g,a}``, are computed and their dimensions totalled.
    """
    for name, f in (("P_g", pg), ("P_h", ph)) + ((("P_f", pf),) if pf is not None else ()):
        rep = validate_filtration(f)
        if not rep:
            raise FiltrationError(f"{name}: {rep.violations[0]}")
    degrees = pg.degrees
    upper = {k: pg.step(k, a) for k in degrees}
    lower = {k: pg.step(k, a - 1) for k in degrees}
    quot = _subquotients(upper, lower)
    b_lo = ph.b_min - a - 1
    b_hi = ph.b_max - a
    steps = {}
    for k in degrees:
        chain = [quot[k].image_of(ph.step(k, a + b)) for b in range(b_lo, b_hi + 1)]
        for x, y in zip(chain, chain[1:]):
            if not x.issubspace(y):
                raise FiltrationError(f"induced filtration on Gr_{a} is not nested in degree {k}")
        steps[k] = (b_lo, tuple(chain))
    space = FilteredGradedSpace({k: quot[k].dim for k in degrees}, steps)
    out = InducedFiltration(a, space, quot)

    if pf is not None:
        out.identity_holds = True
        lo = min(b_lo, pf.b_min - 1)
        hi = max(b_hi, pf.b_max)
        for k in degrees:
            for b in range(lo, hi + 1):
                lhs = (pf.step(k, b) & upper[k]) + lower[k]
                rhs = (ph.step(k, a + b) & upper[k]) + lower[k]
                if lhs != rhs:
                    out.identity_holds = False
                    out.failures.append((k, b))

    if g_supports:
        total = 0
        for (aa, x), lift in g_supports.items():
            if aa != a:
                continue
            up_x = {k: lift[k] for k in degrees}
            for (c, y), h_lift in (h_supports or {}).items():
                b = c - a
                dims = {}
                for k in degrees:
                    num = (h_lift[k] & up_x[k]) + lower[k]
                    den = (ph.step(k, c - 1) & up_x[k]) + lower[k]
                    if not den.issubspace(num):
                        raise FiltrationError(f"support step ({c}, {y}) does not contain P_h,{c - 1}")
                    dims[k] = num.dim - den.dim
                    if f_supports is not None and (b, y) in f_supports and pf is not None:
                        fnum = (f_supports[b, y][k] & up_x[k]) + lower[k]
                        fden = (pf.step(k, b - 1) & up_x[k]) + lower[k]
                        if fnum != num or fden != den:
                            out.identity_holds = False
                            out.failures.append((k, b, x, y))
                if any(dims.values()):
                    out.blocks[x, b, y] = dims
                total += sum(dims.values())
        out.block_total = total
    return out


@dataclass
class ChainReport:
    ok: bool
    leaves: dict
    failures: list
    total: int
    dim: int

    def __bool__(self) -> bool:
        return self.ok


def multi_composition_check(
    chain: Sequence[FilteredGradedSpace], relative: Sequence[FilteredGradedSpace]
) -> ChainReport:
    """Iterate the composite identity along ``Q_1, ..., Q_n``.

    ``chain[m]`` is the perverse filtration of the composite of the first
    ``m + 1`` maps; ``relative[m - 1]`` is the declared filtration of the
    ``(m + 1)``-st map, given as an ambient filtration.  On each multi-graded
    piece ``U/L`` of ``Q_m`` at accumulated level ``a`` the check is
    ``(Q_{m+1, a+b} ∩ U) + L = (R_{m+1, b} ∩ U) + L`` for every ``b``.
    """
    if not chain:
        raise ValueError("empty chain")
    if len(relative) != len(chain) - 1:
        raise ValueError(f"{len(chain)} filtrations need {len(chain) - 1} relative filtrations")
    failures = []
    for m, f in enumerate(list(chain) + list(relative)):
        rep = validate_filtration(f)
        if not rep:
            failures.append(("invalid filtration", m, str(rep.violations[0])))
    first = chain[0]
    n = first.total_dim
    if failures:
        return ChainReport(False, {}, failures, 0, n)
    leaves = {}
    for a in range(first.b_min, first.b_max + 1):
        up, lo = first.total_step(a), first.total_step(a - 1)
        if up.dim > lo.dim:
            leaves[(a,)] = (a, up, lo)
    for m in range(1, len(chain)):
        q, r = chain[m], relative[m - 1]
        nxt = {}
        for idx, (acc, up, lo) in leaves.items():
            c_lo = min(q.b_min, acc + r.b_min) - 1
            c_hi = max(q.b_max, acc + r.b_max)
            prev = (q.total_step(c_lo - 1) & up) + lo
            for c in range(c_lo, c_hi + 1):
                cur = (q.total_step(c) & up) + lo
                rel = (r.total_step(c - acc) & up) + lo
                if cur != rel:
                    failures.append(("identity", idx, c - acc))
                if cur.dim > prev.dim:
                    nxt[idx + (c - acc,)] = (c, cur, prev)
                prev = cur
        leaves = nxt
    dims = {idx: up.dim - lo.dim for idx, (_, up, lo) in leaves.items()}
    total = sum(dims.values())
    if total != n:
        failures.append(("dimension", total, n))
    return ChainReport(not failures, dims, failures, total, n)


# intersection cohomology ------------------------------------------------


class IntersectionBlockError(ValueError):
    pass


@dataclass
class IntersectionCohomology:
    """``IH = Gr_{g,0,X}`` with everything it inherits from ``H(W)``."""

    space: FilteredGradedSpace
    quotients: dict
    eta: dict
    hodge: FilteredGradedSpace | None = None
    weight: FilteredGradedSpace | None = None

    def induced(self, blocks: Mapping[int, Matrix], degree_shift: int = 0) -> dict:
        """Blocks of the map induced on ``IH`` by a map of ``H(W)`` preserving the block."""
        out = {}
        for k, q in self.quotients.items():
            t = k + degree_shift
            if t not in self.quotients or k not in blocks:
                continue
            m = blocks[k]
            qt = self.quotients[t]
            image = q.upper.map(m)
            if not image.issubspace(qt.upper) or not q.lower.map(m).issubspace(qt.lower):
                raise IntersectionBlockError(f"map in degree {k} does not preserve the dense block")
            out[k] = q.induced_map(m, qt)
        return out

    def induced_total(self, blocks: Mapping[int, Matrix], degree_shift: int = 0) -> Matrix:
        from .filtered import FilteredMap

        fm = FilteredMap(self.space, self.space, self.induced(blocks, degree_shift), degree_shift)
        return fm.total

    def induced_filtration(self, f: FilteredGradedSpace) -> FilteredGradedSpace:
        steps = {}
        for k, q in self.quotients.items():
            if q.dim == 0:
                steps[k] = (0, (Subspace.zero(0),))
                continue
            lo, hi = f.b_min, f.b_max
            chain = [q.image_of(f.step(k, b)) for b in range(lo, hi + 1)]
            while len(chain) > 1 and chain[0].is_zero():
                chain.pop(0)
                lo += 1
            while len(chain) > 1 and chain[-2].is_full():
                chain.pop()
            steps[k] = (lo, tuple(chain))
        return FilteredGradedSpace({k: q.dim for k, q in self.quotients.items()}, steps)


def intersection_subquotient(
    pg: FilteredGradedSpace,
    dense_lift: Mapping[int, Subspace] | None,
    ph: FilteredGradedSpace,
    eta: Mapping[int, Matrix],
    hodge: FilteredGradedSpace | None = None,
    weight: FilteredGradedSpace | None = None,
    defect: int | None = None,
) -> IntersectionCohomology:
    """``Gr_{g,0,X}`` as a standalone filtered graded space.

    ``dense_lift[k]`` is ``P_{g,0,X} H^k(W)``, the preimage of the dense
    block; the perverse filtration on the result is induced by ``ph`` (the
    composite's filtration, equal on this block to the one of ``f``), and
    ``eta`` is carried over degree by degree.
    """
    if not dense_lift:
        raise IntersectionBlockError("no dense block declared at perversity 0")
    lower = {k: pg.step(k, -1) for k in pg.degrees}
    upper = {}
    for k in pg.degrees:
        lift = dense_lift.get(k, lower[k])
        if not lower[k].issubspace(lift) or not lift.issubspace(pg.step(k, 0)):
            raise IntersectionBlockError(f"dense block in degree {k} is not between P_g,-1 and P_g,0")
        upper[k] = lift
    quot = _subquotients(upper, lower)
    base = FilteredGradedSpace({k: q.dim for k, q in quot.items()}, {k: (0, (Subspace.full(q.dim),)) for k, q in quot.items()})
    ih = IntersectionCohomology(base, quot, {})
    perverse = ih.induced_filtration(ph)
    perverse = dataclasses.replace(perverse, defect=defect)
    ih.space = perverse
    ih.eta = ih.induced(eta, 2)
    if hodge is not None:
        ih.hodge = ih.induced_filtration(hodge)
    if weight is not None:
        ih.weight = ih.induced_filtration(weight)
    return ih
