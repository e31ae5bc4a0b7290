"""Aggregated checks over a scenario file; each returns a machine-readable result."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

from .filtered import (
    FilteredGradedSpace,
    FilteredMap,
    flag_filtration,
    is_strict,
    renumber,
    validate_filtration,
)
from .harness import (
    DisconnectedDiagramError,
    PipelineError,
    PipelineResult,
    check_diagram,
    check_equivariance,
    check_forget,
    check_rationality,
    run_pipeline,
)
from .lefschetz import (
    HLTriple,
    lefschetz_compatible,
    splitting_defect,
    verify_hl,
)
from .linalg import Matrix, determinant
from .projectors import (
    KINDS,
    induced_filtration_on_graded,
    intersection_subquotient,
    multi_composition_check,
    refinement_map,
    verify_hodge_weight_preservation,
    verify_projector_system,
    verify_refinement,
)
from .scenario import ScenarioFile
from .supports import check_graded_pairing, descend


@dataclass
class Check:
    name: str
    subject: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"check": self.name, "subject": self.subject, "passed": self.passed, "detail": self.detail}


@dataclass
class Result:
    """Outcome of one command: pass/fail checks plus structured data for display."""

    command: str
    scenario: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, subject: str, passed: bool, detail: str = "") -> Check:
        c = Check(name, subject, bool(passed), detail)
        self.checks.append(c)
        return c

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "scenario": self.scenario,
            "ok": self.ok,
            "checks": [c.to_dict() for c in self.checks],
            "data": jsonable(self.data),
        }


def fmt_index(ix: Any) -> str:
    if isinstance(ix, tuple):
        return ",".join(str(x) for x in ix)
    return str(ix)


def jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Matrix):
        return [[str(v) for v in row] for row in x.to_rows()]
    if isinstance(x, dict):
        return {fmt_index(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def _triple(r) -> HLTriple:
    if r.resolution is not None:
        ih = intersection_subquotient(
            r.resolution.g_filtration, r.resolution.dense_lift, r.space, r.eta, defect=r.space.defect
        )
        return HLTriple.from_blocks(ih.space, ih.eta)
    return HLTriple.from_blocks(r.space, r.eta)


def _filtrations(r) -> Iterable[tuple[str, FilteredGradedSpace]]:
    yield "perverse", r.space
    cs = r.compact_side
    if cs is not None and cs.space is not r.space:
        yield "compact perverse", cs.space
    if r.hodge is not None:
        yield "hodge", r.hodge
    if r.weight is not None:
        yield "weight", r.weight
    if r.resolution is not None:
        yield "first-map filtration", r.resolution.g_filtration


def flag_check(r) -> list[tuple[str, bool, str]]:
    """Flag filtrations, renumbered as declared, against the declared perverse filtrations."""
    out = []
    cs = r.compact_side
    ordinary, compact = flag_filtration(r.space.dims, r.flag, cs.space.dims if cs else None)
    got = renumber(ordinary, dict(r.flag.renumbering))
    out.append(("flag", got.same_steps(r.space), "ordinary flag filtration vs perverse filtration"))
    if compact is not None and cs is not None:
        got_c = renumber(compact, dict(r.flag.compact_renumbering))
        out.append(("flag compact", got_c.same_steps(cs.space), "compact flag filtration vs compact perverse filtration"))
    return out


def validate_scenario(s: ScenarioFile) -> Result:
    res = Result("validate", s.name)
    for r in s.realizations:
        for name, f in _filtrations(r):
            rep = validate_filtration(f)
            res.add(f"filtration:{name}", r.label, rep.valid, "; ".join(map(str, rep.violations[:3])))
        try:
            t = _triple(r)
            hl = verify_hl(t)
            detail = "" if hl.holds else f"hard Lefschetz fails at i = {hl.failure}"
            res.add("hard-lefschetz", r.label, hl.holds, detail)
            res.data.setdefault("hl", {})[r.label] = {c.level: c.determinant for c in hl.certificates}
        except ValueError as exc:
            res.add("hard-lefschetz", r.label, False, str(exc))
        if r.strata and r.resolution is None:
            cs = r.compact_side
            try:
                if cs is None:
                    raise ValueError("strata given without compactly supported data")
                scen = descend(r.space, cs.space, r.strata, r.pairing, r.dim)
                rep = check_graded_pairing(scen)
                detail = "" if rep else f"graded pairing at (b, j) = {rep.witness[:2]}: {rep.witness[2]}"
                res.add("pairing", r.label, rep.nondegenerate, detail)
            except ValueError as exc:
                res.add("pairing", r.label, False, str(exc))
        if r.flag is not None:
            try:
                for name, ok, detail in flag_check(r):
                    res.add(name, r.label, ok, "" if ok else detail + " differ")
            except ValueError as exc:
                res.add("flag", r.label, False, str(exc))
    for c in s.comparisons:
        edge = f"{c.source}->{c.target}"
        src, tgt = s.diagram.realization(c.source), s.diagram.realization(c.target)
        bad = [
            k for k in src.space.degrees
            if src.space.dims[k] and (k not in c.blocks or determinant(c.blocks[k]) == 0)
        ]
        res.add("comparison:invertible", edge, not bad, f"singular in degrees {bad}" if bad else "")
        if not bad:
            rep = is_strict(FilteredMap(src.space, tgt.space, dict(c.blocks)))
            same = all(
                src.space.step(k, b).map(c.blocks[k]) == tgt.space.step(k, b)
                for k in src.space.degrees if src.space.dims[k]
                for b in range(min(src.space.b_min, tgt.space.b_min) - 1, max(src.space.b_max, tgt.space.b_max) + 1)
            )
            res.add("comparison:strict", edge, rep.strict and same, "" if rep.strict and same else "perverse filtration not carried onto the target's")
    if s.comparisons:
        labels = {r.label for r in s.realizations}
        seen, frontier = {s.rational or s.realizations[0].label}, [s.rational or s.realizations[0].label]
        while frontier:
            v = frontier.pop()
            for c in s.comparisons:
                for a, b in ((c.source, c.target), (c.target, c.source)):
                    if a == v and b not in seen:
                        seen.add(b)
                        frontier.append(b)
        res.add("diagram:connected", s.name, seen == labels, "" if seen == labels else f"unreachable: {sorted(labels - seen)}")
    if s.composition is not None:
        for i, f in enumerate(list(s.composition.chain) + list(s.composition.relative)):
            rep = validate_filtration(f)
            res.add(f"filtration:composition[{i}]", s.name, rep.valid, "; ".join(map(str, rep.violations[:3])))
    return res


def _pipelines(s: ScenarioFile, res: Result) -> dict[str, PipelineResult]:
    out = {}
    for r in s.realizations:
        try:
            out[r.label] = run_pipeline(r)
            res.add("pipeline", r.label, True)
        except PipelineError as exc:
            res.add("pipeline", r.label, False, str(exc))
    return out


def hl_check(s: ScenarioFile) -> Result:
    res = Result("hl-check", s.name)
    for r in s.realizations:
        try:
            t = _triple(r)
            hl = verify_hl(t)
        except ValueError as exc:
            res.add("hard-lefschetz", r.label, False, str(exc))
            continue
        res.add("hard-lefschetz", r.label, hl.holds, "" if hl.holds else f"fails at i = {hl.failure}")
        res.data[r.label] = {
            "certificates": {c.level: {"shape": list(c.matrix.shape), "determinant": c.determinant} for c in hl.certificates},
        }
    return res


def split(s: ScenarioFile) -> Result:
    res = Result("split", s.name)
    bundle = _pipelines(s, res)
    for label, p in bundle.items():
        sp = p.splitting
        res.add("lift-uniqueness", label, all(l.nullity == 0 for l in sp.lifts.values()))
        bad = splitting_defect(p.triple, sp)
        res.add("filtered-isomorphism", label, bad is None, bad or "")
        res.add("lefschetz-compatible", label, lefschetz_compatible(p.triple, sp))
        res.data[label] = {
            "primitive_dims": {i: g.dim for i, g in sp.decomposition.primitive.items()},
            "lifts": {i: {"nullity": l.nullity, "equations": l.equations} for i, l in sp.lifts.items()},
            "phi": sp.phi,
        }
    return res


def supports(s: ScenarioFile) -> Result:
    res = Result("supports", s.name)
    bundle = _pipelines(s, res)
    for label, p in bundle.items():
        if p.supports is None:
            res.data[label] = {"labels": sorted({lab for _, lab in p.decompositions.by_support}), "note": "single dense support"}
            continue
        dims = {}
        bases = {}
        for (b, j), parts in sorted(p.supports.summands.items()):
            for lab, sub in parts.items():
                dims[f"b={b},j={j},{lab}"] = sub.dim
                bases[f"b={b},j={j},{lab}"] = [[str(v) for v in row] for row in sub.basis]
        ranks = {}
        for (b, lab), sub in p.decompositions.by_support.items():
            ranks[lab] = ranks.get(lab, 0) + sub.dim
        res.data[label] = {"dims": dims, "bases": bases, "ranks": ranks}
    return res


def projectors(s: ScenarioFile, kinds=KINDS) -> Result:
    res = Result("projectors", s.name)
    bundle = _pipelines(s, res)
    for label, p in bundle.items():
        res.data[label] = {}
        for kind in kinds:
            fam = p.families[kind]
            rep = verify_projector_system(fam)
            res.add(f"system:{kind}", label, rep.ok, rep.witness or "")
            hw = verify_hodge_weight_preservation(fam, p.hodge, p.weight)
            res.add(f"hodge-weight:{kind}", label, hw.ok, "" if hw.ok else f"{hw.witness[0]} step {hw.witness[3]} not preserved by {fmt_index(hw.witness[1])}")
            if p.symmetries:
                eq = check_equivariance(p, (kind,))
                res.add(f"equivariance:{kind}", label, eq.ok, "" if eq.ok else f"symmetry {eq.witness[0]} vs projector {fmt_index(eq.witness[2])}")
            res.data[label][kind] = fam.ranks()
            cf = p.compact_families.get(kind)
            if cf is not None and cf is not fam:
                rep = verify_projector_system(cf)
                res.add(f"system:compact:{kind}", label, rep.ok, rep.witness or "")
        r = next(x for x in s.realizations if x.label == label)
        if r.forget is not None:
            bad = check_forget(r, p)
            detail = "" if not bad else f"F π_! != π F for {bad[0][0]} {fmt_index(bad[0][1])}"
            res.add("forget-intertwines", label, not bad, detail)
        for fine in kinds:
            for coarse in kinds:
                try:
                    refinement_map(fine, coarse)
                except ValueError:
                    continue
                if fine == coarse:
                    continue
                ok = verify_refinement(p.families[fine], p.families[coarse])
                res.add(f"refinement:{fine}>{coarse}", label, ok)
    return res


def diagram_check(s: ScenarioFile) -> Result:
    res = Result("diagram-check", s.name)
    bundle = _pipelines(s, res)
    if len(bundle) != len(s.realizations):
        return res
    d = s.diagram
    rep = check_diagram(d, bundle)
    for f in rep.failures:
        res.add(f.check, "->".join(f.edge), False, f.detail)
    res.add("diagram:commutation", s.name, rep.ok, "" if rep.ok else f"{len(rep.failures)} failure(s)")
    res.data["edges"] = {f"{a}->{b}": row for (a, b), row in rep.table.items()}
    try:
        rat = check_rationality(d, bundle)
        res.add("rationality", s.name, rat.ok, "" if rat.ok else "; ".join(map(str, rat.failures[:3])))
    except (DisconnectedDiagramError, KeyError) as exc:
        res.add("rationality", s.name, False, str(exc))
    return res


def compose_check(s: ScenarioFile) -> Result:
    res = Result("compose-check", s.name)
    c = s.composition
    if c is None:
        res.add("composition", s.name, False, "scenario has no composition section")
        return res
    if len(c.chain) >= 2:
        pg, ph = c.chain[0], c.chain[1]
        pf = c.relative[0] if c.relative else None
        blocks = {}
        for a in pg.levels:
            ind = induced_filtration_on_graded(pg, ph, a, pf, c.g_supports, c.h_supports, c.f_supports)
            gr = sum(q.dim for q in ind.quotients.values())
            if ind.identity_holds is not None:
                where = ", ".join(f"degree {f[0]} b={f[1]}" for f in ind.failures[:3])
                res.add("composite-identity", f"a={a}", ind.identity_holds, "" if ind.identity_holds else f"differs at {where}")
            if ind.block_total is not None:
                res.add("block-dimensions", f"a={a}", ind.block_total == gr, f"blocks {ind.block_total} vs Gr {gr}")
            for (x, b, y), dims in ind.blocks.items():
                blocks[f"a={a},{x},b={b},{y}"] = sum(dims.values())
        res.data["blocks"] = blocks
    if len(c.relative) == len(c.chain) - 1:
        rep = multi_composition_check(list(c.chain), list(c.relative))
        res.add("chain", s.name, rep.ok, "" if rep.ok else "; ".join(map(str, rep.failures[:3])))
        res.data["chain"] = {"total": rep.total, "dim": rep.dim, "leaves": {fmt_index(k): v for k, v in rep.leaves.items()}}
    return res


def full_report(s: ScenarioFile, kinds=KINDS) -> Result:
    """Validation, projectors and, where declared, diagram and composition checks."""
    res = Result("report", s.name)
    parts = [validate_scenario(s), projectors(s, kinds)]
    if s.comparisons:
        parts.append(diagram_check(s))
    if s.composition is not None:
        parts.append(compose_check(s))
    for part in parts:
        for chk in part.checks:
            res.checks.append(Check(f"{part.command}/{chk.name}", chk.subject, chk.passed, chk.detail))
        res.data[part.command] = part.data
    return res


COMMANDS = {
    "validate": validate_scenario,
    "hl-check": hl_check,
    "split": split,
    "supports": supports,
    "projectors": projectors,
    "diagram-check": diagram_check,
    "compose-check": compose_check,
    "report": full_report,
}
