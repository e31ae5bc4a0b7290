"""Decomposition of perverse graded pieces by supports.

The summand of the dense stratum is the common kernel of the restrictions
to the closures of all other strata.  The summand of a non-dense stratum
``T`` is the common kernel of the restrictions to the remaining non-dense
strata, intersected with the orthogonal of the dense compact-support summand
under the graded Poincaré pairing.  Compact-support summands use the same
formulas with the ordinary and compact-support roles exchanged.

A :class:`SupportScenario` works in graded coordinates: ``gr[b, j]`` is
``dim Gr_b H^j`` and ``gr_c[b, j]`` is ``dim Gr_b H_!^j``.  The pairing block
``pairing[b, j]`` pairs ``Gr_b H^j`` with ``Gr_{-b} H_!^{2d-j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .filtered import FilteredGradedSpace
from .linalg import (
    DimensionError,
    Matrix,
    Subspace,
    determinant,
    intersect_all,
    kernel,
    orthogonal_complement,
    sum_all,
)


class SupportDataError(ValueError):
    """Scenario data inconsistent with a decomposition by supports."""


class UnknownStratumError(KeyError):
    pass


@dataclass(frozen=True)
class Stratum:
    """A stratum and its restriction maps.

    ``cover_dim`` is the dimension of the resolved preimage of the stratum
    closure; restrictions at level ``b`` land in perversity
    ``b + d - cover_dim``.  ``restrictions[b][j]`` is a matrix out of
    ``Gr_b H^j`` (graded coordinates inside a :class:`SupportScenario`;
    ambient ``H^j`` coordinates, vanishing on ``F_{b-1}``, inside a
    realization).
    """

    label: str
    cover_dim: int = 0
    dense: bool = False
    restrictions: Mapping[int, Mapping[int, Matrix]] = field(default_factory=dict)
    compact_restrictions: Mapping[int, Mapping[int, Matrix]] = field(default_factory=dict)


@dataclass(frozen=True)
class SupportScenario:
    dim: int
    gr: Mapping[tuple, int]
    gr_c: Mapping[tuple, int]
    strata: tuple
    pairing: Mapping[tuple, Matrix]

    @property
    def dense(self) -> Stratum:
        dense = [s for s in self.strata if s.dense]
        if len(dense) != 1:
            raise SupportDataError(f"expected exactly one dense stratum, found {len(dense)}")
        return dense[0]

    @property
    def nondense(self) -> list[Stratum]:
        return [s for s in self.strata if not s.dense]

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.strata]

    def stratum(self, label: str) -> Stratum:
        for s in self.strata:
            if s.label == label:
                return s
        raise UnknownStratumError(label)

    def shifted_level(self, stratum: Stratum, b: int) -> int:
        return b + self.dim - stratum.cover_dim

    def levels(self) -> list[int]:
        return sorted({b for b, _ in self.gr} | {b for b, _ in self.gr_c})

    def degrees(self, b: int, compact: bool = False) -> list[int]:
        table = self.gr_c if compact else self.gr
        return sorted(j for bb, j in table if bb == b)

    def dual(self, b: int, j: int) -> tuple[int, int]:
        return -b, 2 * self.dim - j

    def restriction(self, stratum: Stratum, b: int, j: int, compact: bool = False) -> Matrix:
        table = stratum.compact_restrictions if compact else stratum.restrictions
        n = (self.gr_c if compact else self.gr).get((b, j), 0)
        m = table.get(b, {}).get(j)
        if m is None:
            return Matrix.zero(0, n)
        if m.cols != n:
            raise DimensionError(
                f"restriction to {stratum.label} at (b={b}, j={j}) has {m.cols} columns, expected {n}"
            )
        return m

    def pairing_block(self, b: int, j: int) -> Matrix:
        rows = self.gr.get((b, j), 0)
        cols = self.gr_c.get(self.dual(b, j), 0)
        m = self.pairing.get((b, j))
        if m is None:
            return Matrix.zero(rows, cols)
        if m.shape != (rows, cols):
            raise DimensionError(
                f"pairing block (b={b}, j={j}) has shape {m.shape}, expected {(rows, cols)}"
            )
        return m


@dataclass
class PairingReport:
    nondegenerate: bool
    witness: tuple | None = None  # (b, j, reason)

    def __bool__(self) -> bool:
        return self.nondegenerate


def check_graded_pairing(s: SupportScenario) -> PairingReport:
    keys = set(s.gr) | {s.dual(b, j) for b, j in s.gr_c}
    for b, j in sorted(keys):
        if s.gr.get((b, j), 0) == 0 and s.gr_c.get(s.dual(b, j), 0) == 0:
            continue
        m = s.pairing_block(b, j)
        if not m.is_square():
            return PairingReport(False, (b, j, f"paired blocks have dimensions {m.shape}"))
        if determinant(m) == 0:
            return PairingReport(False, (b, j, "pairing block is degenerate"))
    return PairingReport(True)


def _require_pairing(s: SupportScenario) -> None:
    report = check_graded_pairing(s)
    if not report:
        b, j, why = report.witness
        raise SupportDataError(f"graded pairing at (b={b}, j={j}): {why}")


def _dense(s: SupportScenario, b: int, compact: bool) -> dict[int, Subspace]:
    table = s.gr_c if compact else s.gr
    out = {}
    for j in s.degrees(b, compact):
        n = table[b, j]
        out[j] = intersect_all([kernel(s.restriction(t, b, j, compact)) for t in s.nondense], n)
    return out


def dense_summand(s: SupportScenario, b: int, compact: bool = False) -> dict[int, Subspace]:
    """Summand of the dense stratum in ``Gr_b`` (per degree)."""
    _require_pairing(s)
    return _dense(s, b, compact)


def _nondense(s: SupportScenario, b: int, label: str, compact: bool) -> dict[int, Subspace]:
    target = s.stratum(label)
    if target.dense:
        raise SupportDataError(f"{label} is the dense stratum")
    table = s.gr_c if compact else s.gr
    out = {}
    for j in s.degrees(b, compact):
        n = table[b, j]
        others = [
            kernel(s.restriction(t, b, j, compact)) for t in s.nondense if t.label != label
        ]
        db, dj = s.dual(b, j)
        if compact:
            # pairing[db, dj] pairs Gr_{db} H^{dj} with Gr_b H_!^j
            partner = _dense(s, db, False).get(dj, Subspace.zero(s.gr.get((db, dj), 0)))
            orth = orthogonal_complement(partner, s.pairing_block(db, dj))
        else:
            partner = _dense(s, db, True).get(dj, Subspace.zero(s.gr_c.get((db, dj), 0)))
            orth = orthogonal_complement(partner, s.pairing_block(b, j).T)
        out[j] = intersect_all(others + [orth], n)
    return out


def nondense_summand(
    s: SupportScenario, b: int, label: str, compact: bool = False
) -> dict[int, Subspace]:
    """Summand of the non-dense stratum ``label`` in ``Gr_b`` (per degree)."""
    _require_pairing(s)
    return _nondense(s, b, label, compact)


@dataclass
class SupportDecomposition:
    """``summands[b, j][label]`` (ordinary) and ``compact[b, j][label]``."""

    summands: dict
    compact: dict
    labels: list

    def summand(self, b: int, j: int, label: str, compact: bool = False) -> Subspace:
        return (self.compact if compact else self.summands)[b, j][label]


def _certify_direct_sum(parts: dict[str, Subspace], n: int, where: str) -> None:
    labels = list(parts)
    for x in range(len(labels)):
        for y in range(x + 1, len(labels)):
            meet = parts[labels[x]] & parts[labels[y]]
            if not meet.is_zero():
                raise SupportDataError(
                    f"{where}: summands {labels[x]} and {labels[y]} intersect in dimension {meet.dim}"
                )
    total = sum(p.dim for p in parts.values())
    if total != n or sum_all(list(parts.values()), n).dim != n:
        raise SupportDataError(f"{where}: summands have total dimension {total}, expected {n}")


def assemble_support_decomposition(s: SupportScenario) -> SupportDecomposition:
    _require_pairing(s)
    out: dict = {}
    out_c: dict = {}
    for compact, table, dest in ((False, s.gr, out), (True, s.gr_c, out_c)):
        for b in sorted({b for b, _ in table}):
            dense = _dense(s, b, compact)
            nond = {t.label: _nondense(s, b, t.label, compact) for t in s.nondense}
            for j in s.degrees(b, compact):
                parts = {s.dense.label: dense[j]}
                for t in s.nondense:
                    parts[t.label] = nond[t.label][j]
                side = "compact" if compact else "ordinary"
                _certify_direct_sum(parts, table[b, j], f"{side} Gr_{b} degree {j}")
                dest[b, j] = parts
    dec = SupportDecomposition(out, out_c, s.labels)
    bad = orthogonality_failure(s, dec)
    if bad:
        raise SupportDataError(bad)
    return dec


def orthogonality_failure(s: SupportScenario, dec: SupportDecomposition) -> str | None:
    """First pair of distinct labels whose summands pair nontrivially, if any."""
    for (b, j), parts in dec.summands.items():
        dual = s.dual(b, j)
        if dual not in dec.compact:
            continue
        form = s.pairing_block(b, j)
        for la, va in parts.items():
            for lb, wb in dec.compact[dual].items():
                if la == lb or va.is_zero() or wb.is_zero():
                    continue
                if not (va.matrix() @ form @ wb.columns()).is_zero():
                    return f"summands {la} (b={b}, j={j}) and {lb} (compact) are not orthogonal"
    return None


# descent from ambient data ----------------------------------------------


def descend(
    space: FilteredGradedSpace,
    compact_space: FilteredGradedSpace,
    strata,
    pairing: Mapping[int, Matrix],
    dim: int,
) -> SupportScenario:
    """Graded scenario from restrictions and a pairing given on ``H`` and ``H_!``.

    Restrictions at level ``b`` must vanish on ``F_{b-1}``; the pairing must
    kill ``F_c H × F_{c'} H_!`` whenever ``c + c' < 0``.
    """
    gc, gcc = space.graded, compact_space.graded
    gr = {(b, j): gc.gr_dim(b, j) for b in space.levels for j in space.degrees}
    gr_c = {(b, j): gcc.gr_dim(b, j) for b in compact_space.levels for j in compact_space.degrees}
    graded_strata = []
    for t in strata:
        res, res_c = {}, {}
        for sp, g, src, dest, side in (
            (space, gc, t.restrictions, res, "ordinary"),
            (compact_space, gcc, t.compact_restrictions, res_c, "compact"),
        ):
            for b, per_deg in src.items():
                if b not in g.pieces:
                    continue
                for j, m in per_deg.items():
                    if m.cols != sp.dims[j]:
                        raise DimensionError(
                            f"{side} restriction to {t.label} at (b={b}, j={j}) has {m.cols} "
                            f"columns, expected dim H^{j} = {sp.dims[j]}"
                        )
                    lower = sp.step(j, b - 1)
                    if not lower.is_zero() and not (m @ lower.columns()).is_zero():
                        raise SupportDataError(
                            f"{side} restriction to {t.label} at (b={b}, j={j}) does not vanish on F_{b - 1}"
                        )
                    dest.setdefault(b, {})[j] = m @ g.pieces[b].section[j]
        graded_strata.append(Stratum(t.label, t.cover_dim, t.dense, res, res_c))
    blocks = {}
    for j, m in pairing.items():
        jd = 2 * dim - j
        if j not in space.dims or jd not in compact_space.dims:
            continue
        if m.shape != (space.dims[j], compact_space.dims[jd]):
            raise DimensionError(
                f"pairing in degree {j} has shape {m.shape}, expected "
                f"{(space.dims[j], compact_space.dims[jd])}"
            )
        for c in range(space.b_min - 1, space.b_max + 1):
            for cc in range(compact_space.b_min - 1, -c):
                a, bsp = space.step(j, c), compact_space.step(jd, cc)
                if a.is_zero() or bsp.is_zero():
                    continue
                if not (a.matrix() @ m @ bsp.columns()).is_zero():
                    raise SupportDataError(
                        f"pairing in degree {j} does not kill F_{c} x F_!,{cc}; it does not descend"
                    )
        for b in space.levels:
            if -b not in gcc.pieces:
                continue
            blocks[b, j] = gc.pieces[b].section[j].T @ m @ gcc.pieces[-b].section[jd]
    return SupportScenario(dim, gr, gr_c, tuple(graded_strata), blocks)
