"""Scenario files: YAML documents describing realizations, comparisons and composition data.

Rationals are written as strings ``"p/q"`` (or plain integers); matrices are
lists of rows; subspaces are lists of basis rows; filtrations map a degree
to ``{level: basis rows}`` with consecutive levels.  A Hodge filtration is
written decreasingly (``{p: F^p}``) and stored increasingly with index
``-p``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import yaml

from .filtered import FilteredGradedSpace, FlagRestrictionData
from .harness import SAME, CompactSide, Comparison, DiagramStar, Realization, Resolution
from .linalg import Matrix, Subspace
from .supports import Stratum

FORMAT = "dtproj-scenario/1"


class ScenarioError(ValueError):
    """Base class; ``path`` names the offending field, ``line`` the source line if known."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path, self.line, self.message = path, line, message
        where = path or "<document>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")


class ScenarioParseError(ScenarioError):
    pass


class ScenarioSchemaError(ScenarioError):
    pass


class ScenarioDimensionError(ScenarioError):
    pass


@dataclass(frozen=True)
class CompositionData:
    """Ambient filtrations of a chain of maps ``Q_1, ..., Q_n`` on one ``H(W)``.

    ``chain[0]`` is ``P_g``, ``chain[1]`` is ``P_h``; ``relative[m]`` lifts the
    filtration of the ``(m + 2)``-nd map.  Support-refined steps map
    ``(level, label)`` to per-degree lifts.
    """

    dims: Mapping[int, int]
    chain: tuple
    relative: tuple = ()
    g_supports: Mapping = field(default_factory=dict)
    h_supports: Mapping = field(default_factory=dict)
    f_supports: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    realizations: tuple
    comparisons: tuple = ()
    rational: str | None = None
    composition: CompositionData | None = None
    description: str = ""
    certificate: Mapping = field(default_factory=dict)

    @property
    def diagram(self) -> DiagramStar:
        return DiagramStar(self.realizations, self.comparisons, self.rational)


# parsing helpers -------------------------------------------------------


def _rat(x: Any, path: str) -> Fraction:
    if isinstance(x, bool) or isinstance(x, float):
        raise ScenarioSchemaError(f"expected an exact rational, got {x!r}", path)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ScenarioSchemaError(f"not a rational: {x!r}", path) from None
    raise ScenarioSchemaError(f"expected a rational, got {type(x).__name__}", path)


def _map(x: Any, path: str) -> dict:
    if not isinstance(x, dict):
        raise ScenarioSchemaError(f"expected a mapping, got {type(x).__name__}", path)
    return x


def _list(x: Any, path: str) -> list:
    if not isinstance(x, list):
        raise ScenarioSchemaError(f"expected a list, got {type(x).__name__}", path)
    return x


def _int(x: Any, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ScenarioSchemaError(f"expected an integer, got {x!r}", path)
    return x


def _int_keys(x: Any, path: str) -> dict:
    out = {}
    for k, v in _map(x, path).items():
        out[_int(k, f"{path}.{k}")] = v
    return out


def _matrix(x: Any, path: str, rows: int | None = None, cols: int | None = None) -> Matrix:
    data = _list(x, path)
    parsed = []
    for i, row in enumerate(data):
        parsed.append([_rat(v, f"{path}[{i}][{j}]") for j, v in enumerate(_list(row, f"{path}[{i}]"))])
    widths = {len(r) for r in parsed}
    if len(widths) > 1:
        raise ScenarioDimensionError(f"ragged matrix with row lengths {sorted(widths)}", path)
    r = len(parsed)
    c = widths.pop() if widths else (cols if cols is not None else 0)
    if rows is not None and r != rows:
        raise ScenarioDimensionError(f"matrix has {r} rows, declared dimensions require {rows}", path)
    if cols is not None and c != cols and r > 0:
        raise ScenarioDimensionError(f"matrix has {c} columns, declared dimensions require {cols}", path)
    if cols is not None and r == 0:
        c = cols
    return Matrix.from_rows(parsed, c)


def _subspace(x: Any, path: str, n: int) -> Subspace:
    m = _matrix(x, path, cols=n)
    return Subspace.span(m.to_rows(), n)


def _dims(x: Any, path: str) -> dict:
    out = {}
    for k, v in _int_keys(x, path).items():
        n = _int(v, f"{path}.{k}")
        if n < 0:
            raise ScenarioSchemaError("negative dimension", f"{path}.{k}")
        out[k] = n
    return out


def _filtration(x: Any, path: str, dims: Mapping[int, int], defect=None, decreasing=False) -> FilteredGradedSpace:
    raw = _int_keys(x, path)
    unknown = set(raw) - set(dims)
    if unknown:
        raise ScenarioDimensionError(f"filtration given for undeclared degrees {sorted(unknown)}", path)
    steps = {}
    for k, n in dims.items():
        if k not in raw:
            steps[k] = (0, (Subspace.full(n),))
            continue
        levels = _int_keys(raw[k], f"{path}.{k}")
        if not levels:
            raise ScenarioSchemaError("empty filtration", f"{path}.{k}")
        bs = sorted(levels)
        if bs != list(range(bs[0], bs[-1] + 1)):
            raise ScenarioSchemaError(f"levels {bs} are not consecutive", f"{path}.{k}")
        subs = {b: _subspace(levels[b], f"{path}.{k}.{b}", n) for b in bs}
        if decreasing:
            subs = {-p: s for p, s in subs.items()}
        lo = min(subs)
        steps[k] = (lo, tuple(subs[b] for b in range(lo, lo + len(subs))))
    return FilteredGradedSpace(dict(dims), steps, 0, defect)


def _blocks(x: Any, path: str, dims: Mapping[int, int], shift: int) -> dict:
    out = {}
    for k, v in _int_keys(x, path).items():
        if k not in dims:
            raise ScenarioDimensionError(f"degree {k} is not declared", f"{path}.{k}")
        rows = dims.get(k + shift, 0)
        out[k] = _matrix(v, f"{path}.{k}", rows, dims[k])
    return out


def _restrictions(x: Any, path: str, dims: Mapping[int, int], compact: bool) -> dict:
    out = {}
    for b, per in _int_keys(x, path).items():
        out[b] = {}
        for j, m in _int_keys(per, f"{path}.{b}").items():
            if j not in dims:
                raise ScenarioDimensionError(f"degree {j} is not declared", f"{path}.{b}.{j}")
            out[b][j] = _matrix(m, f"{path}.{b}.{j}", cols=dims[j])
    return out


def _flag(x: Any, path: str, dims, cdims) -> FlagRestrictionData:
    x = _map(x, path)
    ordinary = {}
    for i, per in _int_keys(x.get("ordinary", {}), f"{path}.ordinary").items():
        ordinary[i] = {}
        for j, m in _int_keys(per, f"{path}.ordinary.{i}").items():
            ordinary[i][j] = _matrix(m, f"{path}.ordinary.{i}.{j}", cols=dims.get(j))
    compact = {}
    for i, per in _int_keys(x.get("compact", {}), f"{path}.compact").items():
        compact[i] = {}
        for j, m in _int_keys(per, f"{path}.compact.{i}").items():
            m_ = _matrix(m, f"{path}.compact.{i}.{j}", rows=cdims.get(j))
            compact[i][j] = m_
    ren = {k: _int(v, f"{path}.renumbering.{k}") for k, v in _int_keys(x.get("renumbering", {}), f"{path}.renumbering").items()}
    cren = {
        k: _int(v, f"{path}.compact_renumbering.{k}")
        for k, v in _int_keys(x.get("compact_renumbering", {}), f"{path}.compact_renumbering").items()
    }
    return FlagRestrictionData(ordinary, compact, ren, cren)


def _check_keys(x: dict, allowed: set, path: str, required: set = frozenset()) -> None:
    extra = set(x) - allowed
    if extra:
        raise ScenarioSchemaError(f"unknown field(s) {sorted(map(str, extra))}", path)
    missing = set(required) - set(x)
    if missing:
        raise ScenarioSchemaError(f"missing field(s) {sorted(missing)}", path)


_REALIZATION_KEYS = {
    "label", "dim", "degrees", "defect", "perverse", "eta", "compact", "strata", "pairing",
    "hodge", "weight", "symmetries", "flag", "resolution", "forget",
}


def _realization(x: Any, path: str) -> Realization:
    x = _map(x, path)
    _check_keys(x, _REALIZATION_KEYS, path, {"label", "degrees", "eta"})
    label = x["label"]
    if not isinstance(label, str) or not label:
        raise ScenarioSchemaError("label must be a nonempty string", f"{path}.label")
    dims = _dims(x["degrees"], f"{path}.degrees")
    d = _int(x.get("dim", 0), f"{path}.dim")
    defect = x.get("defect")
    if defect is not None:
        defect = _int(defect, f"{path}.defect")
    space = _filtration(x.get("perverse", {}), f"{path}.perverse", dims, defect)
    eta = _blocks(x["eta"], f"{path}.eta", dims, 2)

    compact = None
    cdims = dims
    if "compact" in x:
        c = x["compact"]
        if c == SAME:
            compact = SAME
        else:
            c = _map(c, f"{path}.compact")
            _check_keys(c, {"degrees", "perverse", "eta", "defect"}, f"{path}.compact", {"degrees"})
            cdims = _dims(c["degrees"], f"{path}.compact.degrees")
            cdef = c.get("defect")
            compact = CompactSide(
                _filtration(c.get("perverse", {}), f"{path}.compact.perverse", cdims,
                            None if cdef is None else _int(cdef, f"{path}.compact.defect")),
                _blocks(c.get("eta", {}), f"{path}.compact.eta", cdims, 2),
            )

    strata = []
    for i, s in enumerate(_list(x.get("strata", []), f"{path}.strata")):
        sp = f"{path}.strata[{i}]"
        s = _map(s, sp)
        _check_keys(s, {"label", "dense", "cover_dim", "restrictions", "compact_restrictions"}, sp, {"label"})
        dense = s.get("dense", False)
        if not isinstance(dense, bool):
            raise ScenarioSchemaError("dense must be true or false", f"{sp}.dense")
        strata.append(
            Stratum(
                str(s["label"]),
                _int(s.get("cover_dim", d if dense else 0), f"{sp}.cover_dim"),
                dense,
                _restrictions(s.get("restrictions", {}), f"{sp}.restrictions", dims, False),
                _restrictions(s.get("compact_restrictions", {}), f"{sp}.compact_restrictions", cdims, True),
            )
        )
    labels = [s.label for s in strata]
    if len(set(labels)) != len(labels):
        raise ScenarioSchemaError(f"duplicate stratum labels {labels}", f"{path}.strata")
    if strata and sum(s.dense for s in strata) != 1:
        raise ScenarioSchemaError("exactly one stratum must be dense", f"{path}.strata")

    pairing = {}
    for j, m in _int_keys(x.get("pairing", {}), f"{path}.pairing").items():
        jd = 2 * d - j
        if j not in dims or jd not in cdims:
            raise ScenarioDimensionError(f"degree {j} pairs with undeclared degree {jd}", f"{path}.pairing.{j}")
        pairing[j] = _matrix(m, f"{path}.pairing.{j}", dims[j], cdims[jd])

    hodge = _filtration(x["hodge"], f"{path}.hodge", dims, decreasing=True) if "hodge" in x else None
    weight = _filtration(x["weight"], f"{path}.weight", dims) if "weight" in x else None
    syms = tuple(
        _blocks(g, f"{path}.symmetries[{i}]", dims, 0)
        for i, g in enumerate(_list(x.get("symmetries", []), f"{path}.symmetries"))
    )
    for i, g in enumerate(syms):
        missing = [k for k in dims if k not in g and dims[k]]
        if missing:
            raise ScenarioDimensionError(f"symmetry has no block for degrees {missing}", f"{path}.symmetries[{i}]")
    flag = _flag(x["flag"], f"{path}.flag", dims, cdims) if "flag" in x else None

    resolution = None
    if "resolution" in x:
        rp = f"{path}.resolution"
        rx = _map(x["resolution"], rp)
        _check_keys(rx, {"g_filtration", "dense_label", "dense_lift"}, rp, {"g_filtration", "dense_label", "dense_lift"})
        lift = {
            k: _subspace(v, f"{rp}.dense_lift.{k}", dims[k])
            for k, v in _int_keys(rx["dense_lift"], f"{rp}.dense_lift").items()
            if k in dims or _raise_dim(f"{rp}.dense_lift.{k}", k)
        }
        resolution = Resolution(_filtration(rx["g_filtration"], f"{rp}.g_filtration", dims), str(rx["dense_label"]), lift)

    forget = None
    if "forget" in x:
        forget = {}
        for k, m in _int_keys(x["forget"], f"{path}.forget").items():
            if k not in dims or k not in cdims:
                _raise_dim(f"{path}.forget.{k}", k)
            forget[k] = _matrix(m, f"{path}.forget.{k}", dims[k], cdims[k])

    return Realization(
        label, space, eta, d, tuple(strata), compact, pairing, hodge, weight, syms, flag, resolution, forget
    )


def _raise_dim(path: str, k: int) -> bool:
    raise ScenarioDimensionError(f"degree {k} is not declared", path)


def _support_lifts(x: Any, path: str, dims) -> dict:
    out = {}
    for lvl, per_label in _int_keys(x, path).items():
        for label, per_deg in _map(per_label, f"{path}.{lvl}").items():
            lp = f"{path}.{lvl}.{label}"
            raw = _int_keys(per_deg, lp)
            for k in raw:
                if k not in dims:
                    _raise_dim(f"{lp}.{k}", k)
            out[lvl, str(label)] = {k: _subspace(raw[k], f"{lp}.{k}", n) if k in raw else Subspace.zero(n) for k, n in dims.items()}
    return out


def _composition(x: Any, path: str) -> CompositionData:
    x = _map(x, path)
    _check_keys(x, {"degrees", "chain", "relative", "g_supports", "h_supports", "f_supports"}, path, {"degrees", "chain"})
    dims = _dims(x["degrees"], f"{path}.degrees")
    chain = tuple(_filtration(f, f"{path}.chain[{i}]", dims) for i, f in enumerate(_list(x["chain"], f"{path}.chain")))
    relative = tuple(
        _filtration(f, f"{path}.relative[{i}]", dims) for i, f in enumerate(_list(x.get("relative", []), f"{path}.relative"))
    )
    if len(chain) < 1:
        raise ScenarioSchemaError("chain needs at least one filtration", f"{path}.chain")
    if relative and len(relative) != len(chain) - 1:
        raise ScenarioSchemaError(f"{len(chain)} chain filtrations need {len(chain) - 1} relative ones", f"{path}.relative")
    return CompositionData(
        dims,
        chain,
        relative,
        _support_lifts(x.get("g_supports", {}), f"{path}.g_supports", dims),
        _support_lifts(x.get("h_supports", {}), f"{path}.h_supports", dims),
        _support_lifts(x.get("f_supports", {}), f"{path}.f_supports", dims),
    )


def from_data(data: Any) -> ScenarioFile:
    data = _map(data, "")
    _check_keys(
        data,
        {"format", "name", "description", "realizations", "comparisons", "rational_vertex", "composition", "certificate"},
        "",
        {"format", "name"},
    )
    if data["format"] != FORMAT:
        raise ScenarioSchemaError(f"unsupported format {data['format']!r}; expected {FORMAT!r}", "format")
    reals = tuple(_realization(r, f"realizations[{i}]") for i, r in enumerate(_list(data.get("realizations", []), "realizations")))
    labels = [r.label for r in reals]
    if len(set(labels)) != len(labels):
        raise ScenarioSchemaError(f"duplicate realization labels {labels}", "realizations")
    by_label = {r.label: r for r in reals}
    comps = []
    for i, c in enumerate(_list(data.get("comparisons", []), "comparisons")):
        cp = f"comparisons[{i}]"
        c = _map(c, cp)
        _check_keys(c, {"source", "target", "map", "compact_map"}, cp, {"source", "target", "map"})
        for end in ("source", "target"):
            if c[end] not in by_label:
                raise ScenarioSchemaError(f"unknown realization {c[end]!r}", f"{cp}.{end}")
        src, tgt = by_label[c["source"]], by_label[c["target"]]
        if dict(src.space.dims) != dict(tgt.space.dims):
            raise ScenarioDimensionError("source and target have different dimensions", cp)
        blocks = _blocks(c["map"], f"{cp}.map", src.space.dims, 0)
        compact_blocks = None
        if "compact_map" in c:
            cs = src.compact_side
            if cs is None:
                raise ScenarioSchemaError("compact map given but the source has no compact side", f"{cp}.compact_map")
            compact_blocks = _blocks(c["compact_map"], f"{cp}.compact_map", cs.space.dims, 0)
        comps.append(Comparison(c["source"], c["target"], blocks, compact_blocks))
    rational = data.get("rational_vertex")
    if rational is not None and rational not in by_label:
        raise ScenarioSchemaError(f"unknown realization {rational!r}", "rational_vertex")
    comp = _composition(data["composition"], "composition") if "composition" in data else None
    return ScenarioFile(
        str(data["name"]),
        reals,
        tuple(comps),
        rational,
        comp,
        str(data.get("description", "")),
        _map(data.get("certificate", {}), "certificate"),
    )


def loads(text: str) -> ScenarioFile:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ScenarioParseError(exc.problem or str(exc), "", mark.line + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ScenarioParseError(str(exc)) from None
    if data is None:
        raise ScenarioParseError("empty document")
    return from_data(data)


def load(path: str | Path) -> ScenarioFile:
    return loads(Path(path).read_text())


# serialization --------------------------------------------------------


def _q(x: Fraction) -> str:
    return str(x)


def _mat_out(m: Matrix) -> list:
    return [[_q(v) for v in row] for row in m.to_rows()]


def _sub_out(s: Subspace) -> list:
    return [[_q(v) for v in row] for row in s.basis]


def _filt_out(f: FilteredGradedSpace, decreasing: bool = False) -> dict:
    out = {}
    for k in f.degrees:
        lo, st = f.steps[k]
        levels = {lo + i: _sub_out(s) for i, s in enumerate(st)}
        if decreasing:
            levels = {-b: v for b, v in levels.items()}
        out[k] = dict(sorted(levels.items()))
    return out


def _blocks_out(blocks: Mapping[int, Matrix]) -> dict:
    return {k: _mat_out(m) for k, m in sorted(blocks.items())}


def _realization_out(r: Realization) -> dict:
    out: dict = {"label": r.label, "dim": r.dim, "degrees": dict(sorted(r.space.dims.items()))}
    if r.space.defect is not None:
        out["defect"] = r.space.defect
    out["perverse"] = _filt_out(r.space)
    out["eta"] = _blocks_out(r.eta)
    if r.compact == SAME:
        out["compact"] = SAME
    elif isinstance(r.compact, CompactSide):
        c: dict = {"degrees": dict(sorted(r.compact.space.dims.items()))}
        if r.compact.space.defect is not None:
            c["defect"] = r.compact.space.defect
        c["perverse"] = _filt_out(r.compact.space)
        c["eta"] = _blocks_out(r.compact.eta)
        out["compact"] = c
    if r.strata:
        out["strata"] = []
        for s in r.strata:
            so: dict = {"label": s.label, "dense": s.dense, "cover_dim": s.cover_dim}
            if s.restrictions:
                so["restrictions"] = {b: _blocks_out(per) for b, per in sorted(s.restrictions.items())}
            if s.compact_restrictions:
                so["compact_restrictions"] = {b: _blocks_out(per) for b, per in sorted(s.compact_restrictions.items())}
            out["strata"].append(so)
    if r.pairing:
        out["pairing"] = _blocks_out(r.pairing)
    if r.hodge is not None:
        out["hodge"] = _filt_out(r.hodge, decreasing=True)
    if r.weight is not None:
        out["weight"] = _filt_out(r.weight)
    if r.symmetries:
        out["symmetries"] = [_blocks_out(g) for g in r.symmetries]
    if r.flag is not None:
        fo: dict = {"ordinary": {i: _blocks_out(per) for i, per in sorted(r.flag.ordinary.items())}}
        if r.flag.compact:
            fo["compact"] = {i: _blocks_out(per) for i, per in sorted(r.flag.compact.items())}
        if r.flag.renumbering:
            fo["renumbering"] = dict(sorted(r.flag.renumbering.items()))
        if r.flag.compact_renumbering:
            fo["compact_renumbering"] = dict(sorted(r.flag.compact_renumbering.items()))
        out["flag"] = fo
    if r.resolution is not None:
        out["resolution"] = {
            "g_filtration": _filt_out(r.resolution.g_filtration),
            "dense_label": r.resolution.dense_label,
            "dense_lift": {k: _sub_out(s) for k, s in sorted(r.resolution.dense_lift.items())},
        }
    if r.forget is not None:
        out["forget"] = _blocks_out(r.forget)
    return out


def _lifts_out(lifts: Mapping) -> dict:
    out: dict = {}
    for (lvl, label), per in sorted(lifts.items()):
        out.setdefault(lvl, {})[label] = {k: _sub_out(s) for k, s in sorted(per.items())}
    return out


def to_data(s: ScenarioFile) -> dict:
    out: dict = {"format": FORMAT, "name": s.name}
    if s.description:
        out["description"] = s.description
    out["realizations"] = [_realization_out(r) for r in s.realizations]
    if s.comparisons:
        cs = []
        for c in s.comparisons:
            co = {"source": c.source, "target": c.target, "map": _blocks_out(c.blocks)}
            if c.compact_blocks is not None:
                co["compact_map"] = _blocks_out(c.compact_blocks)
            cs.append(co)
        out["comparisons"] = cs
    if s.rational is not None:
        out["rational_vertex"] = s.rational
    if s.composition is not None:
        c = s.composition
        co = {"degrees": dict(sorted(c.dims.items())), "chain": [_filt_out(f) for f in c.chain]}
        if c.relative:
            co["relative"] = [_filt_out(f) for f in c.relative]
        for name in ("g_supports", "h_supports", "f_supports"):
            lifts = getattr(c, name)
            if lifts:
                co[name] = _lifts_out(lifts)
        out["composition"] = co
    if s.certificate:
        out["certificate"] = s.certificate
    return out


def dumps(s: ScenarioFile) -> str:
    return yaml.safe_dump(to_data(s), sort_keys=False, default_flow_style=None, width=120)


def dump(s: ScenarioFile, path: str | Path) -> None:
    Path(path).write_text(dumps(s))


def with_name(s: ScenarioFile, name: str) -> ScenarioFile:
    return dataclasses.replace(s, name=name)
