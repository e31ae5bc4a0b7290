"""Filtered graded vector spaces over Q.

A :class:`FilteredGradedSpace` is a cohomologically graded space
``H = ⊕_k H^k`` with, in each degree, an increasing exhaustive filtration
``F_b H^k``.  Steps outside the stored range are implicit: ``0`` below,
the whole of ``H^k`` above.  Perverse, weight and Hodge filtrations all use
this one shape (a decreasing filtration ``F^p`` is stored as the increasing
filtration ``G_{-p} = F^p``).

Coordinates on the total space ``H`` list the degrees in increasing order.
Coordinates on the associated graded ``Gr_* = ⊕_b ⊕_k Gr_b H^k`` list the
blocks ordered by ``(b, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .linalg import (
    DimensionError,
    Matrix,
    Subspace,
    complement_in,
    image,
    inverse,
    kernel,
    sum_all,
)


class FiltrationError(ValueError):
    """Raised on malformed filtration data (out-of-range level, non-nesting)."""


class FlagDataError(FiltrationError):
    """Flag restriction data that does not produce a filtration."""


def _adapted_basis(chain: Sequence[Subspace], n: int) -> tuple[list[Matrix], list[Matrix]]:
    """Sections and projections for the successive quotients of a nested chain.

    ``chain`` is increasing; a final ``Q^n`` step is appended if needed.  The
    i-th section has as columns the canonical complement of ``chain[i-1]`` in
    ``chain[i]``; the i-th projection is defined on all of ``Q^n`` and, on
    ``chain[i]``, has kernel exactly ``chain[i-1]``.
    """
    steps = list(chain)
    if not steps or not steps[-1].is_full():
        steps.append(Subspace.full(n))
    prev = Subspace.zero(n)
    blocks = []
    for s in steps:
        blocks.append(complement_in(prev, s))
        prev = s
    cols = [v for b in blocks for v in b.basis]
    if len(cols) != n:
        raise FiltrationError("chain is not nested")
    sections, projections = [], []
    if n == 0:
        for b in blocks[: len(chain)]:
            sections.append(Matrix.zero(0, 0))
            projections.append(Matrix.zero(0, 0))
        return sections, projections
    a = Matrix.from_columns(cols, n)
    ainv = inverse(a)
    start = 0
    for b in blocks[: len(chain)]:
        idx = list(range(start, start + b.dim))
        sections.append(a.submatrix(range(n), idx))
        projections.append(ainv.submatrix(idx, range(n)))
        start += b.dim
    return sections, projections


@dataclass(frozen=True)
class FilteredGradedSpace:
    """Graded space with an increasing filtration in every degree.

    ``steps[k] = (lo, (F_lo, F_lo+1, ..., F_hi))``; below ``lo`` the step is
    ``0``, above ``hi`` it is ``H^k``.  ``defect`` flags a perverse
    filtration whose range must lie in ``[-defect, defect]``.
    """

    dims: Mapping[int, int]
    steps: Mapping[int, tuple]
    twist: int = 0
    defect: int | None = None

    @classmethod
    def from_rows(
        cls,
        dims: Mapping[int, int],
        steps: Mapping[int, Mapping[int, Sequence[Sequence]]],
        twist: int = 0,
        defect: int | None = None,
    ) -> "FilteredGradedSpace":
        """Build from ``{k: {b: basis rows of F_b H^k}}`` with consecutive ``b``."""
        out = {}
        for k, n in dims.items():
            levels = steps.get(k)
            if not levels:
                out[k] = (0, (Subspace.full(n),))
                continue
            bs = sorted(levels)
            if bs != list(range(bs[0], bs[-1] + 1)):
                raise FiltrationError(f"degree {k}: filtration levels {bs} are not consecutive")
            out[k] = (bs[0], tuple(Subspace.span(levels[b], n) for b in bs))
        unknown = set(steps) - set(dims)
        if unknown:
            raise FiltrationError(f"filtration given for undeclared degrees {sorted(unknown)}")
        return cls(dict(dims), out, twist, defect)

    @classmethod
    def trivial(cls, dims: Mapping[int, int], level: int = 0) -> "FilteredGradedSpace":
        """One-step filtration ``0 ⊂ H`` jumping at ``level``."""
        return cls(dict(dims), {k: (level, (Subspace.full(n),)) for k, n in dims.items()})

    @classmethod
    def from_levels(
        cls,
        dims: Mapping[int, int],
        levels: Mapping[int, Sequence[int]],
        defect: int | None = None,
    ) -> "FilteredGradedSpace":
        """Coordinate filtration: basis vector ``i`` of ``H^k`` sits at level ``levels[k][i]``."""
        out = {}
        for k, n in dims.items():
            lv = list(levels.get(k, [0] * n))
            if len(lv) != n:
                raise DimensionError(f"degree {k}: {len(lv)} levels for dimension {n}")
            if not lv:
                out[k] = (0, (Subspace.zero(0),))
                continue
            lo, hi = min(lv), max(lv)
            out[k] = (
                lo,
                tuple(
                    Subspace.coordinate(n, [i for i, x in enumerate(lv) if x <= b])
                    for b in range(lo, hi + 1)
                ),
            )
        return cls(dict(dims), out, 0, defect)

    # shape ------------------------------------------------------------

    @cached_property
    def degrees(self) -> list[int]:
        return sorted(self.dims)

    @cached_property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    @cached_property
    def offsets(self) -> dict[int, int]:
        out, o = {}, 0
        for k in self.degrees:
            out[k] = o
            o += self.dims[k]
        return out

    def degree_slice(self, k: int) -> range:
        o = self.offsets[k]
        return range(o, o + self.dims[k])

    @cached_property
    def b_min(self) -> int:
        los = [lo for lo, _ in self.steps.values()]
        return min(los) if los else 0

    @cached_property
    def b_max(self) -> int:
        his = [lo + len(st) - 1 for lo, st in self.steps.values()]
        return max(his) if his else 0

    @property
    def levels(self) -> range:
        return range(self.b_min, self.b_max + 1)

    def step(self, k: int, b: int) -> Subspace:
        n = self.dims[k]
        lo, st = self.steps[k]
        if b < lo:
            return Subspace.zero(n)
        if b >= lo + len(st):
            return Subspace.full(n)
        return st[b - lo]

    def embed(self, k: int, s: Subspace) -> Subspace:
        """Image of a subspace of ``H^k`` in the total space."""
        o, n = self.offsets[k], self.total_dim
        vecs = []
        for v in s.basis:
            w = [0] * n
            w[o:o + len(v)] = v
            vecs.append(w)
        return Subspace.span(vecs, n)

    def total(self, per_degree: Mapping[int, Subspace]) -> Subspace:
        n = self.total_dim
        vecs = []
        for k, s in per_degree.items():
            o = self.offsets[k]
            for v in s.basis:
                w = [0] * n
                w[o:o + len(v)] = v
                vecs.append(w)
        return Subspace.span(vecs, n)

    def total_step(self, b: int) -> Subspace:
        return self.total({k: self.step(k, b) for k in self.degrees})

    def restrict(self, k: int, v: Sequence) -> tuple:
        return tuple(v[i] for i in self.degree_slice(k))

    def is_graded(self, s: Subspace) -> bool:
        """True if the total-space subspace ``s`` is the sum of its degree parts."""
        parts = [s & Subspace.coordinate(self.total_dim, self.degree_slice(k)) for k in self.degrees]
        return sum_all(parts, self.total_dim) == s

    def split_total(self, s: Subspace) -> dict[int, Subspace]:
        """Degree parts of a graded total-space subspace."""
        out = {}
        for k in self.degrees:
            part = s & Subspace.coordinate(self.total_dim, self.degree_slice(k))
            out[k] = Subspace.span([self.restrict(k, v) for v in part.basis], self.dims[k])
        return out

    def same_steps(self, other: "FilteredGradedSpace") -> bool:
        """Equality of every step ``F_b H^k`` (ranges may be padded differently)."""
        if dict(self.dims) != dict(other.dims):
            return False
        lo = min(self.b_min, other.b_min) - 1
        hi = max(self.b_max, other.b_max) + 1
        return all(
            self.step(k, b) == other.step(k, b) for k in self.degrees for b in range(lo, hi + 1)
        )

    def transport(self, c: Mapping[int, Matrix]) -> "FilteredGradedSpace":
        """Image of the filtration under a graded isomorphism ``c`` (blocks per degree)."""
        return FilteredGradedSpace(
            dict(self.dims),
            {k: (lo, tuple(s.map(c[k]) for s in st)) for k, (lo, st) in self.steps.items()},
            self.twist,
            self.defect,
        )

    @cached_property
    def graded(self) -> "GradedCoordinates":
        return GradedCoordinates(self)


# graded pieces ----------------------------------------------------------


@dataclass(frozen=True)
class GradedPiece:
    """``Gr_b H = F_b / F_{b-1}`` in each degree.

    ``projection[k]`` is defined on all of ``H^k``; its restriction to
    ``F_b H^k`` is surjective with kernel ``F_{b-1} H^k``.  ``section[k]`` is
    the canonical lift with ``projection @ section = id``.
    """

    level: int
    dims: dict
    projection: dict
    section: dict


class GradedCoordinates:
    """Adapted coordinates linking ``H`` and its associated graded ``Gr_*``."""

    def __init__(self, space: FilteredGradedSpace):
        self.space = space
        self.pieces: dict[int, GradedPiece] = {}
        sec: dict[tuple[int, int], Matrix] = {}
        proj: dict[tuple[int, int], Matrix] = {}
        levels = list(space.levels)
        for k in space.degrees:
            n = space.dims[k]
            chain = [space.step(k, b) for b in levels]
            bad = _first_nesting_failure(chain)
            if bad is not None:
                raise FiltrationError(f"degree {k}: F_{levels[bad]} is not contained in F_{levels[bad] + 1}")
            if not chain[-1].is_full():
                raise FiltrationError(f"degree {k}: filtration is not exhaustive")
            s, p = _adapted_basis(chain, n)
            for b, si, pi in zip(levels, s, p):
                sec[b, k] = si
                proj[b, k] = pi
        for b in levels:
            self.pieces[b] = GradedPiece(
                b,
                {k: sec[b, k].cols for k in space.degrees},
                {k: proj[b, k] for k in space.degrees},
                {k: sec[b, k] for k in space.degrees},
            )
        # total-space bookkeeping
        self.blocks: list[tuple[int, int]] = [
            (b, k) for b in levels for k in space.degrees if sec[b, k].cols
        ]
        self.block_offset: dict[tuple[int, int], int] = {}
        o = 0
        for b in levels:
            for k in space.degrees:
                self.block_offset[b, k] = o
                o += sec[b, k].cols
        self.dim = o
        n = space.total_dim
        sect = [[0] * self.dim for _ in range(n)]
        for b in levels:
            for k in space.degrees:
                m = sec[b, k]
                ro, co = space.offsets[k], self.block_offset[b, k]
                for i in range(m.rows):
                    for j in range(m.cols):
                        sect[ro + i][co + j] = m[i, j]
        self.section = Matrix.from_rows(sect, self.dim)
        self.projection = inverse(self.section) if n else Matrix.zero(0, 0)

    def gr_dim(self, b: int, k: int | None = None) -> int:
        if b not in self.pieces:
            return 0
        if k is None:
            return sum(self.pieces[b].dims.values())
        return self.pieces[b].dims.get(k, 0)

    def level_indices(self, b: int) -> list[int]:
        out = []
        for k in self.space.degrees:
            o = self.block_offset.get((b, k))
            if o is not None:
                out.extend(range(o, o + self.gr_dim(b, k)))
        return out

    def block_indices(self, b: int, k: int) -> list[int]:
        if (b, k) not in self.block_offset:
            return []
        o = self.block_offset[b, k]
        return list(range(o, o + self.gr_dim(b, k)))

    def level_projection(self, b: int) -> Matrix:
        """``H -> Gr_b`` (all degrees); kernel on ``F_b`` is ``F_{b-1}``."""
        return self.projection.submatrix(self.level_indices(b), range(self.space.total_dim))

    def level_section(self, b: int) -> Matrix:
        return self.section.submatrix(range(self.space.total_dim), self.level_indices(b))

    def gr_subspace(self, b: int, k: int, s: Subspace) -> Subspace:
        """Embed a subspace of ``Gr_b H^k`` into ``Gr_*``."""
        idx = self.block_indices(b, k)
        vecs = []
        for v in s.basis:
            w = [0] * self.dim
            for i, x in zip(idx, v):
                w[i] = x
            vecs.append(w)
        return Subspace.span(vecs, self.dim)

    def level_subspace(self, b: int) -> Subspace:
        return Subspace.coordinate(self.dim, self.level_indices(b))

    def filtration_on_gr(self, b: int) -> Subspace:
        """``F_b Gr_* = ⊕_{b' <= b} Gr_{b'}``."""
        return Subspace.coordinate(
            self.dim, [i for bb in self.space.levels if bb <= b for i in self.level_indices(bb)]
        )

    def graded_map(self, m: Matrix, source_level: int, target_level: int) -> Matrix:
        """Matrix of ``Gr_source -> Gr_target`` induced by ``m`` on the total space."""
        return self.level_projection(target_level) @ m @ self.level_section(source_level)


def _first_nesting_failure(chain: Sequence[Subspace]) -> int | None:
    for i in range(len(chain) - 1):
        if not chain[i].issubspace(chain[i + 1]):
            return i
    return None


def graded_piece(s: FilteredGradedSpace, b: int) -> GradedPiece:
    if b < s.b_min or b > s.b_max:
        raise FiltrationError(f"level {b} outside the declared range [{s.b_min}, {s.b_max}]")
    return s.graded.pieces[b]


# validation -------------------------------------------------------------


@dataclass
class Violation:
    degree: int
    level: int | None
    reason: str

    def __str__(self) -> str:
        where = f"degree {self.degree}" + ("" if self.level is None else f", level {self.level}")
        return f"{where}: {self.reason}"


@dataclass
class FiltrationReport:
    violations: list = field(default_factory=list)
    ranges: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def validate_filtration(s: FilteredGradedSpace) -> FiltrationReport:
    report = FiltrationReport()
    for k in s.degrees:
        n = s.dims[k]
        if k not in s.steps:
            report.violations.append(Violation(k, None, "no filtration declared"))
            continue
        lo, st = s.steps[k]
        report.ranges[k] = (lo, lo + len(st) - 1)
        for i, sub in enumerate(st):
            if sub.ambient_dim != n:
                report.violations.append(
                    Violation(k, lo + i, f"step lives in Q^{sub.ambient_dim}, expected Q^{n}")
                )
        if any(v.degree == k for v in report.violations):
            continue
        for i in range(len(st) - 1):
            if not st[i].issubspace(st[i + 1]):
                report.violations.append(
                    Violation(k, lo + i, f"F_{lo + i} is not contained in F_{lo + i + 1}")
                )
        if st and not st[-1].is_full():
            report.violations.append(Violation(k, lo + len(st) - 1, "top step is not the whole space"))
        if s.defect is not None:
            r = s.defect
            if not s.step(k, -r - 1).is_zero():
                report.violations.append(Violation(k, -r - 1, f"F_{-r - 1} is nonzero (defect {r})"))
            if not s.step(k, r).is_full():
                report.violations.append(Violation(k, r, f"F_{r} is not the whole space (defect {r})"))
    return report


# filtered maps ----------------------------------------------------------


@dataclass(frozen=True)
class FilteredMap:
    """Graded map ``H^k -> H'^{k + degree_shift}`` with ``F_b -> F_{b + filtration_shift}``."""

    source: FilteredGradedSpace
    target: FilteredGradedSpace
    blocks: Mapping[int, Matrix]
    degree_shift: int = 0
    filtration_shift: int = 0
    twist_shift: int = 0

    def block(self, k: int) -> Matrix:
        t = k + self.degree_shift
        rows = self.target.dims.get(t, 0)
        m = self.blocks.get(k)
        if m is None:
            return Matrix.zero(rows, self.source.dims[k])
        if m.shape != (rows, self.source.dims[k]):
            raise DimensionError(f"block for degree {k} has shape {m.shape}, expected {(rows, self.source.dims[k])}")
        return m

    @cached_property
    def total(self) -> Matrix:
        src, tgt = self.source, self.target
        rows = [[0] * src.total_dim for _ in range(tgt.total_dim)]
        for k in src.degrees:
            t = k + self.degree_shift
            if t not in tgt.dims:
                continue
            m = self.block(k)
            ro, co = tgt.offsets[t], src.offsets[k]
            for i in range(m.rows):
                for j in range(m.cols):
                    rows[ro + i][co + j] = m[i, j]
        return Matrix.from_rows(rows, src.total_dim)

    @classmethod
    def from_total(
        cls,
        source: FilteredGradedSpace,
        target: FilteredGradedSpace,
        m: Matrix,
        degree_shift: int = 0,
        filtration_shift: int = 0,
        twist_shift: int = 0,
    ) -> "FilteredMap":
        blocks = {}
        for k in source.degrees:
            t = k + degree_shift
            if t in target.dims:
                blocks[k] = m.submatrix(target.degree_slice(t), source.degree_slice(k))
        return cls(source, target, blocks, degree_shift, filtration_shift, twist_shift)


@dataclass
class StrictnessReport:
    strict: bool
    filtered: bool
    witness: tuple | None = None  # (degree, level, vector)

    def __bool__(self) -> bool:
        return self.strict


def _levels_of(*spaces: FilteredGradedSpace) -> range:
    lo = min(s.b_min for s in spaces) - 1
    hi = max(s.b_max for s in spaces) + 1
    return range(lo, hi + 1)


def is_strict(f: FilteredMap) -> StrictnessReport:
    """``f(F_b) = im f ∩ F_{b+shift}`` for every degree and level."""
    src, tgt, shift = f.source, f.target, f.filtration_shift
    levels = range(
        min(src.b_min, tgt.b_min - shift) - 1, max(src.b_max, tgt.b_max - shift) + 1
    )
    for k in src.degrees:
        t = k + f.degree_shift
        if t not in tgt.dims:
            continue
        m = f.block(k)
        im = image(m)
        for b in levels:
            mapped = src.step(k, b).map(m)
            allowed = tgt.step(t, b + shift)
            if not mapped.issubspace(allowed):
                v = next(v for v in mapped.basis if not allowed.contains(v))
                return StrictnessReport(False, False, (k, b, v))
            meet = im & allowed
            if meet != mapped:
                v = next(v for v in meet.basis if not mapped.contains(v))
                return StrictnessReport(False, True, (k, b, v))
    return StrictnessReport(True, True)


def is_filtered(f: FilteredMap) -> bool:
    src, tgt, shift = f.source, f.target, f.filtration_shift
    for k in src.degrees:
        t = k + f.degree_shift
        if t not in tgt.dims:
            continue
        m = f.block(k)
        for b in _levels_of(src, tgt):
            if not src.step(k, b).map(m).issubspace(tgt.step(t, b + shift)):
                return False
    return True


# flag filtrations -------------------------------------------------------


@dataclass(frozen=True)
class FlagRestrictionData:
    """Restriction maps attached to a complete flag of linear sections.

    ``ordinary[k][j]`` is the degree-``j`` block of ``r*_{-k}: H -> H(X'_{-k})``
    (columns = ``dim H^j``); ``compact[k][j]`` is the degree-``j`` block of
    ``r_{!,k}: H_!(X'_k) -> H_!`` (rows = ``dim H_!^j``).  A missing block is the
    zero map.
    """

    ordinary: Mapping[int, Mapping[int, Matrix]]
    compact: Mapping[int, Mapping[int, Matrix]] = field(default_factory=dict)
    renumbering: Mapping[int, int] = field(default_factory=dict)
    compact_renumbering: Mapping[int, int] = field(default_factory=dict)


def _chain_to_space(dims, chains: dict[int, tuple[int, list[Subspace]]], what: str) -> FilteredGradedSpace:
    steps = {}
    for k, (lo, chain) in chains.items():
        bad = _first_nesting_failure(chain)
        if bad is not None:
            raise FlagDataError(f"{what}, degree {k}: step {lo + bad} is not contained in step {lo + bad + 1}")
        if chain and not chain[-1].is_full():
            raise FlagDataError(f"{what}, degree {k}: last step {lo + len(chain) - 1} is not the whole space")
        steps[k] = (lo, tuple(chain))
    return FilteredGradedSpace(dict(dims), steps)


def flag_filtration(
    dims: Mapping[int, int],
    data: FlagRestrictionData,
    compact_dims: Mapping[int, int] | None = None,
) -> tuple[FilteredGradedSpace, FilteredGradedSpace | None]:
    """``F_k = Ker r*_{-k}`` on ``H`` and ``F_{!,k} = Im r_{!,k}`` on ``H_!``."""
    idx = sorted(data.ordinary)
    chains = {}
    for j, n in dims.items():
        chain = []
        for k in idx:
            m = data.ordinary[k].get(j)
            if m is None:
                chain.append(Subspace.full(n))
                continue
            if m.cols != n:
                raise FlagDataError(f"r*_{-k} degree {j}: {m.cols} columns for dim H^{j} = {n}")
            chain.append(kernel(m))
        chains[j] = (idx[0] if idx else 0, chain)
    if idx and idx != list(range(idx[0], idx[-1] + 1)):
        raise FlagDataError(f"flag indices {idx} are not consecutive")
    ordinary = _chain_to_space(dims, chains, "ordinary flag filtration")

    compact = None
    if data.compact:
        cdims = dims if compact_dims is None else compact_dims
        cidx = sorted(data.compact)
        if cidx != list(range(cidx[0], cidx[-1] + 1)):
            raise FlagDataError(f"compact flag indices {cidx} are not consecutive")
        cchains = {}
        for j, n in cdims.items():
            chain = []
            for k in cidx:
                m = data.compact[k].get(j)
                if m is None:
                    chain.append(Subspace.zero(n))
                    continue
                if m.rows != n:
                    raise FlagDataError(f"r_!,{k} degree {j}: {m.rows} rows for dim H_!^{j} = {n}")
                chain.append(image(m))
            cchains[j] = (cidx[0], chain)
        compact = _chain_to_space(cdims, cchains, "compact flag filtration")
    return ordinary, compact


def renumber(
    s: FilteredGradedSpace, offset: int | Mapping[int, int] | Callable[[int], int]
) -> FilteredGradedSpace:
    """Shift levels: the old step ``F_b H^k`` becomes step ``b + offset(k)``."""
    if isinstance(offset, int):
        shift = lambda k: offset  # noqa: E731
    elif callable(offset):
        shift = offset
    else:
        shift = lambda k: offset.get(k, 0)  # noqa: E731
    return FilteredGradedSpace(
        dict(s.dims),
        {k: (lo + shift(k), st) for k, (lo, st) in s.steps.items()},
        s.twist,
        s.defect,
    )


# subquotients -----------------------------------------------------------


class Subquotient:
    """``upper / lower`` for nested subspaces of a common ambient space.

    ``projection`` is defined on the whole ambient space and, on ``upper``,
    has kernel exactly ``lower``; ``section`` lifts quotient coordinates into
    ``upper``.
    """

    def __init__(self, upper: Subspace, lower: Subspace):
        if not lower.issubspace(upper):
            raise FiltrationError("lower step is not contained in upper step")
        self.upper, self.lower = upper, lower
        n = upper.ambient_dim
        sections, projections = _adapted_basis([lower, upper], n)
        self.section = sections[1]
        self.projection = projections[1]
        self.dim = self.section.cols

    def image_of(self, s: Subspace) -> Subspace:
        """Image in quotient coordinates of ``s ∩ upper``."""
        return (s & self.upper).map(self.projection)

    def lift(self, s: Subspace) -> Subspace:
        """Preimage in ``upper`` of a subspace of the quotient."""
        return s.map(self.section) + self.lower

    def induced_map(self, m: Matrix, target: "Subquotient") -> Matrix:
        return target.projection @ m @ self.section

    def __len__(self) -> int:
        return self.dim


def induced_steps(
    upper: Subspace, lower: Subspace, steps: Iterable[Subspace]
) -> list[Subspace]:
    """Induced filtration ``(S ∩ upper) + lower`` of each ambient step."""
    return [(s & upper) + lower for s in steps]
