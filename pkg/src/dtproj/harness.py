"""Realizations, comparison diagrams and the end-to-end pipeline.

A realization bundles one cohomology theory's data: the filtered graded
space, the Lefschetz operator, strata with restrictions, the pairing with
the compactly supported side, optional Hodge and weight filtrations and
symmetries.  Comparison isomorphisms connect realizations in a star.  The
pipeline runs each realization independently; the checks then test that the
resulting projectors are carried to each other by the comparisons, are
rational and commute with the symmetries.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .filtered import FilteredGradedSpace, FilteredMap, FlagRestrictionData
from .lefschetz import (
    CanonicalSplitting,
    HLReport,
    HLTriple,
    canonical_splitting,
    verify_hl,
)
from .linalg import Matrix, Subspace, determinant, inverse
from .projectors import (
    KINDS,
    FourDecompositions,
    IntersectionCohomology,
    build_projectors,
    four_decompositions,
    intersection_subquotient,
)
from .supports import (
    Stratum,
    SupportDecomposition,
    SupportScenario,
    assemble_support_decomposition,
    descend,
)

SAME = "same"


class PipelineError(RuntimeError):
    def __init__(self, label: str, stage: str, cause: Exception | str):
        self.label, self.stage, self.cause = label, stage, cause
        super().__init__(f"realization {label!r}, stage {stage}: {cause}")


class DisconnectedDiagramError(ValueError):
    pass


@dataclass(frozen=True)
class CompactSide:
    space: FilteredGradedSpace
    eta: Mapping[int, Matrix] = field(default_factory=dict)


@dataclass(frozen=True)
class Resolution:
    """``H(W)`` of a resolution: the first-map filtration and the dense block.

    The realization's own ``space`` then carries the composite's perverse
    filtration on ``H(W)``, and the pipeline runs on ``IH = Gr_{g,0,X}``.
    """

    g_filtration: FilteredGradedSpace
    dense_label: str
    dense_lift: Mapping[int, Subspace]


@dataclass(frozen=True)
class Realization:
    label: str
    space: FilteredGradedSpace
    eta: Mapping[int, Matrix]
    dim: int = 0
    strata: tuple = ()
    compact: CompactSide | str | None = None
    pairing: Mapping[int, Matrix] = field(default_factory=dict)
    hodge: FilteredGradedSpace | None = None
    weight: FilteredGradedSpace | None = None
    symmetries: tuple = ()
    flag: FlagRestrictionData | None = None
    resolution: Resolution | None = None
    forget: Mapping[int, Matrix] | None = None  # H_! -> H, degree by degree

    @property
    def compact_side(self) -> CompactSide | None:
        if self.compact == SAME:
            return CompactSide(self.space, self.eta)
        return self.compact

    @property
    def dense_label(self) -> str:
        if self.resolution is not None:
            return self.resolution.dense_label
        dense = [s.label for s in self.strata if s.dense]
        return dense[0] if dense else "V"


@dataclass(frozen=True)
class Comparison:
    source: str
    target: str
    blocks: Mapping[int, Matrix]
    compact_blocks: Mapping[int, Matrix] | None = None


@dataclass(frozen=True)
class DiagramStar:
    realizations: tuple
    comparisons: tuple = ()
    rational: str | None = None

    def realization(self, label: str) -> Realization:
        for r in self.realizations:
            if r.label == label:
                return r
        raise KeyError(f"unknown realization {label!r}")

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.realizations]


@dataclass
class PipelineResult:
    """Everything computed for one realization, in its working coordinates.

    The working space is ``H`` itself, or ``IH`` when the realization is a
    resolution.
    """

    label: str
    triple: HLTriple
    hl: HLReport
    splitting: CanonicalSplitting
    supports: SupportDecomposition | None
    decompositions: FourDecompositions
    families: dict
    compact_families: dict = field(default_factory=dict)
    hodge: FilteredGradedSpace | None = None
    weight: FilteredGradedSpace | None = None
    symmetries: tuple = ()
    ih: IntersectionCohomology | None = None
    scenario: SupportScenario | None = None

    def ranks(self, kind: str) -> dict:
        return self.families[kind].ranks()

    def working_map(self, blocks: Mapping[int, Matrix], target: "PipelineResult | None" = None) -> Matrix:
        """Total matrix, in working coordinates, of a degree-0 map given on ``H``."""
        target = self if target is None else target
        space = self.triple.space
        if self.ih is None:
            return FilteredMap(space, target.triple.space, dict(blocks)).total
        out = {}
        for k, q in self.ih.quotients.items():
            out[k] = q.induced_map(blocks[k], target.ih.quotients[k])
        return FilteredMap(space, target.triple.space, out).total


def _compact_decomposition(d: SupportDecomposition) -> SupportDecomposition:
    return SupportDecomposition(d.compact, d.summands, d.labels)


def run_pipeline(r: Realization, kinds=KINDS) -> PipelineResult:
    """HL check, canonical splitting, supports and the projector families."""
    stage = "setup"
    try:
        hodge, weight, ih = r.hodge, r.weight, None
        symmetries = r.symmetries
        if r.resolution is not None:
            stage = "intersection cohomology"
            res = r.resolution
            ih = intersection_subquotient(
                res.g_filtration, res.dense_lift, r.space, r.eta, r.hodge, r.weight, r.space.defect
            )
            triple = HLTriple.from_blocks(ih.space, ih.eta)
            hodge, weight = ih.hodge, ih.weight
            symmetries = tuple(ih.induced(g) for g in r.symmetries)
        else:
            triple = HLTriple.from_blocks(r.space, r.eta)
        stage = "hard Lefschetz"
        hl = verify_hl(triple)
        if not hl.holds:
            raise PipelineError(r.label, stage, f"hard Lefschetz fails at i = {hl.failure}")
        stage = "splitting"
        split = canonical_splitting(triple)
        stage = "supports"
        scen, sup = None, None
        compact = r.compact_side
        if r.strata and r.resolution is None:
            if compact is None:
                raise PipelineError(r.label, stage, "strata given without compactly supported data")
            scen = descend(r.space, compact.space, r.strata, r.pairing, r.dim)
            sup = assemble_support_decomposition(scen)
        stage = "projectors"
        dec = four_decompositions(triple, sup, split.decomposition, r.dense_label)
        families = {k: build_projectors(split, dec, k) for k in kinds}
        compact_families = {}
        if compact is not None and compact.eta and r.resolution is None:
            stage = "compact projectors"
            if compact.space is r.space and compact.eta is r.eta:
                ctriple, csplit = triple, split
            else:
                ctriple = HLTriple.from_blocks(compact.space, compact.eta)
                csplit = canonical_splitting(ctriple)
            csup = _compact_decomposition(sup) if sup is not None else None
            cdec = four_decompositions(ctriple, csup, csplit.decomposition, r.dense_label)
            compact_families = {k: build_projectors(csplit, cdec, k) for k in kinds}
        return PipelineResult(
            r.label, triple, hl, split, sup, dec, families, compact_families,
            hodge, weight, symmetries, ih, scen,
        )
    except PipelineError:
        raise
    except (ValueError, ArithmeticError, KeyError, RuntimeError) as exc:
        raise PipelineError(r.label, stage, exc) from exc


def run_diagram(d: DiagramStar, kinds=KINDS) -> dict:
    """Run the pipeline on every vertex independently."""
    return {r.label: run_pipeline(r, kinds) for r in d.realizations}


# diagram checks ---------------------------------------------------------


@dataclass
class EdgeFailure:
    edge: tuple
    check: str
    detail: str


@dataclass
class DiagramReport:
    ok: bool
    failures: list
    table: dict  # (source, target) -> {check: bool}

    def __bool__(self) -> bool:
        return self.ok


def _block(blocks: Mapping[int, Matrix], k: int, n: int) -> Matrix:
    return blocks.get(k, Matrix.zero(n, n))


def _steps_match(a: FilteredGradedSpace, b: FilteredGradedSpace, c: Mapping[int, Matrix]) -> str | None:
    if dict(a.dims) != dict(b.dims):
        return f"dimensions {dict(a.dims)} vs {dict(b.dims)}"
    lo = min(a.b_min, b.b_min) - 1
    hi = max(a.b_max, b.b_max) + 1
    for k in a.degrees:
        m = _block(c, k, a.dims[k])
        for lvl in range(lo, hi + 1):
            if a.step(k, lvl).map(m) != b.step(k, lvl):
                return f"degree {k}, step {lvl}"
    return None


def edge_checks(
    d: DiagramStar, c: Comparison, bundle: Mapping[str, PipelineResult] | None = None
) -> list[EdgeFailure]:
    ra, rb = d.realization(c.source), d.realization(c.target)
    edge = (c.source, c.target)
    out = []
    for k in ra.space.degrees:
        m = _block(c.blocks, k, ra.space.dims[k])
        if not m.is_square() or m.rows != rb.space.dims.get(k) or determinant(m) == 0:
            out.append(EdgeFailure(edge, "invertible", f"degree {k} block is not invertible"))
            return out
    bad = _steps_match(ra.space, rb.space, c.blocks)
    if bad:
        out.append(EdgeFailure(edge, "filtration", f"perverse filtration not carried over: {bad}"))
    for name in ("hodge", "weight"):
        fa, fb = getattr(ra, name), getattr(rb, name)
        if fa is not None and fb is not None:
            bad = _steps_match(fa, fb, c.blocks)
            if bad:
                out.append(EdgeFailure(edge, name, f"{name} filtration not carried over: {bad}"))
    if ra.resolution is not None and rb.resolution is not None:
        bad = _steps_match(ra.resolution.g_filtration, rb.resolution.g_filtration, c.blocks)
        if bad:
            out.append(EdgeFailure(edge, "filtration", f"first-map filtration not carried over: {bad}"))
    for k in ra.space.degrees:
        if k + 2 not in ra.space.dims:
            continue
        na, nt = ra.space.dims[k], ra.space.dims[k + 2]
        ea = ra.eta.get(k, Matrix.zero(nt, na))
        eb = rb.eta.get(k, Matrix.zero(nt, na))
        if _block(c.blocks, k + 2, nt) @ ea != eb @ _block(c.blocks, k, na):
            out.append(EdgeFailure(edge, "eta", f"c does not intertwine eta in degree {k}"))
            break
    ca, cb = ra.compact_side, rb.compact_side
    if ra.pairing and rb.pairing and ca is not None and cb is not None:
        cc = c.compact_blocks
        if cc is None and ra.compact == SAME and rb.compact == SAME:
            cc = c.blocks
        if cc is not None:
            for j, pa in ra.pairing.items():
                jd = 2 * ra.dim - j
                if j not in rb.pairing:
                    out.append(EdgeFailure(edge, "pairing", f"target has no pairing in degree {j}"))
                    break
                lhs = _block(c.blocks, j, ra.space.dims[j]).T @ rb.pairing[j] @ _block(cc, jd, ca.space.dims[jd])
                if lhs != pa:
                    out.append(EdgeFailure(edge, "pairing", f"pairing not preserved in degree {j}"))
                    break
            if c.compact_blocks is not None:
                bad = _steps_match(ca.space, cb.space, c.compact_blocks)
                if bad:
                    out.append(EdgeFailure(edge, "compact filtration", f"not carried over: {bad}"))
    if bundle is not None:
        pa, pb = bundle[c.source], bundle[c.target]
        try:
            cm = pa.working_map(c.blocks, pb)
        except Exception as exc:
            out.append(EdgeFailure(edge, "projectors", f"cannot induce comparison: {exc}"))
            return out
        for kind, fa in pa.families.items():
            fb = pb.families.get(kind)
            if fb is None or set(fa.projectors) != set(fb.projectors):
                out.append(EdgeFailure(edge, f"projectors:{kind}", "index sets differ"))
                continue
            for ix, m in fa.projectors.items():
                if cm @ m != fb.projectors[ix] @ cm:
                    out.append(EdgeFailure(edge, f"projectors:{kind}", f"c π_A != π_B c at {ix}"))
    return out


def check_diagram(d: DiagramStar, bundle: Mapping[str, PipelineResult] | None = None) -> DiagramReport:
    failures, table = [], {}
    for c in d.comparisons:
        fs = edge_checks(d, c, bundle)
        failures.extend(fs)
        kinds = ["invertible", "filtration", "eta", "pairing"]
        if bundle is not None:
            kinds += [f"projectors:{k}" for k in bundle[c.source].families]
        table[c.source, c.target] = {k: not any(f.check == k for f in fs) for k in kinds}
    return DiagramReport(not failures, failures, table)


@dataclass
class RationalityReport:
    ok: bool
    transports: dict
    failures: list

    def __bool__(self) -> bool:
        return self.ok


def check_rationality(d: DiagramStar, bundle: Mapping[str, PipelineResult]) -> RationalityReport:
    """Every vertex's projectors are transports of the rational vertex's projectors.

    Transport matrices are composed along a spanning tree from the rational
    vertex; edges outside the tree must agree with the tree transport.
    """
    root = d.rational if d.rational is not None else d.labels[0]
    if root not in d.labels:
        raise KeyError(f"rational vertex {root!r} is not a realization")
    adj: dict = {lab: [] for lab in d.labels}
    edges = {}
    for c in d.comparisons:
        m = bundle[c.source].working_map(c.blocks, bundle[c.target])
        edges[c.source, c.target] = m
        adj[c.source].append((c.target, m, False))
        adj[c.target].append((c.source, m, True))
    transports = {root: Matrix.identity(bundle[root].triple.dim)}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w, m, backwards in adj[v]:
            if w in transports:
                continue
            step = inverse(m) if backwards else m
            transports[w] = step @ transports[v]
            queue.append(w)
    missing = [v for v in d.labels if v not in transports]
    if missing:
        raise DisconnectedDiagramError(f"vertices {missing} are not connected to the rational vertex {root!r}")
    failures = []
    for (s, t), m in edges.items():
        if m @ transports[s] != transports[t]:
            failures.append(((s, t), "cycle", "comparison disagrees with the transport along the tree"))
    base = bundle[root].families
    for v, tv in transports.items():
        if v == root:
            continue
        tinv = inverse(tv)
        for kind, fam in bundle[v].families.items():
            for ix, m in fam.projectors.items():
                ref = base[kind].projectors.get(ix)
                if ref is None or m != tv @ ref @ tinv:
                    failures.append((v, kind, ix))
    return RationalityReport(not failures, transports, failures)


def check_forget(r: Realization, result: PipelineResult) -> list[tuple[str, object]]:
    """``F π_! = π F`` for the map ``F: H_! -> H``; returns the failing (family, index) pairs."""
    if r.forget is None or not result.compact_families or r.resolution is not None:
        return []
    cs = r.compact_side
    fm = FilteredMap(cs.space, r.space, dict(r.forget)).total
    bad = []
    for kind, fam in result.families.items():
        cf = result.compact_families[kind]
        for ix, p in fam.projectors.items():
            q = cf.projectors.get(ix)
            if q is None or fm @ q != p @ fm:
                bad.append((kind, ix))
    return bad


@dataclass
class EquivarianceReport:
    ok: bool
    witness: tuple | None = None  # (symmetry index, family, projector index)

    def __bool__(self) -> bool:
        return self.ok


def check_equivariance(result: PipelineResult, kinds=None) -> EquivarianceReport:
    """``γ π = π γ`` for every declared symmetry and projector."""
    for g_ix, g in enumerate(result.symmetries):
        gm = FilteredMap(result.triple.space, result.triple.space, dict(g)).total
        for kind, fam in result.families.items():
            if kinds is not None and kind not in kinds:
                continue
            for ix, p in fam.projectors.items():
                if gm @ p != p @ gm:
                    return EquivarianceReport(False, (g_ix, kind, ix))
    return EquivarianceReport(True)


def transport_realization(
    r: Realization,
    label: str,
    c: Mapping[int, Matrix],
    compact_c: Mapping[int, Matrix] | None = None,
) -> Realization:
    """The realization obtained by pushing ``r`` through graded isomorphisms ``c`` (and ``compact_c`` on ``H_!``).

    Restrictions become ``r ∘ c^{-1}``; the pairing becomes
    ``c^{-T} P c_!^{-1}``.
    """
    inv = {k: inverse(m) for k, m in c.items()}
    cc = c if compact_c is None else compact_c
    cinv = inv if compact_c is None else {k: inverse(m) for k, m in compact_c.items()}

    def conj(blocks, shift, fwd, back):
        return {k: fwd[k + shift] @ m @ back[k] for k, m in blocks.items()}

    def opt(f: FilteredGradedSpace | None):
        return None if f is None else f.transport(c)

    strata = tuple(
        Stratum(
            s.label,
            s.cover_dim,
            s.dense,
            {b: {j: m @ inv[j] for j, m in per.items()} for b, per in s.restrictions.items()},
            {b: {j: m @ cinv[j] for j, m in per.items()} for b, per in s.compact_restrictions.items()},
        )
        for s in r.strata
    )
    compact = r.compact
    if isinstance(compact, CompactSide):
        compact = CompactSide(compact.space.transport(cc), conj(compact.eta, 2, cc, cinv))
    pairing = {j: inv[j].T @ m @ cinv[2 * r.dim - j] for j, m in r.pairing.items()}
    resolution = r.resolution
    if resolution is not None:
        resolution = Resolution(
            resolution.g_filtration.transport(c),
            resolution.dense_label,
            {k: s.map(c[k]) for k, s in resolution.dense_lift.items()},
        )
    flag = r.flag
    if flag is not None:
        flag = FlagRestrictionData(
            {i: {j: m @ inv[j] for j, m in per.items()} for i, per in flag.ordinary.items()},
            {i: {j: cc[j] @ m for j, m in per.items()} for i, per in flag.compact.items()},
            dict(flag.renumbering),
            dict(flag.compact_renumbering),
        )
    forget = r.forget
    if forget is not None:
        forget = {k: c[k] @ m @ cinv[k] for k, m in forget.items()}
    return dataclasses.replace(
        r,
        label=label,
        forget=forget,
        space=r.space.transport(c),
        eta=conj(r.eta, 2, c, inv),
        strata=strata,
        compact=compact,
        pairing=pairing,
        hodge=opt(r.hodge),
        weight=opt(r.weight),
        symmetries=tuple(conj(g, 0, c, inv) for g in r.symmetries),
        flag=flag,
        resolution=resolution,
    )
