"""Seeded synthetic scenarios with planted answers.

Every fixture starts from a model in which the answer is visible in the
coordinates: Lefschetz strings sitting in perversity levels, a label on each
string naming its support, and block coordinates for compositions.  The
model is perturbed by maps that do not change the answer (lower-order terms
of ``e``, of the restrictions and of the pairing), then hidden by a random
graded change of basis.  The planted answer is returned alongside, pushed
through the same change of basis.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .filtered import FilteredGradedSpace
from .harness import SAME, Comparison, Realization, Resolution, transport_realization
from .linalg import Matrix, Subspace, inverse, rank
from .scenario import CompositionData, ScenarioFile
from .supports import Stratum

PROFILES = ("hl-only", "supports", "composition", "diagram")
VERTEX_LABELS = ("betti", "deRham", "etale-3", "etale-5", "etale-7")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class FixtureSpec:
    seed: int
    profile: str = "hl-only"
    max_dim: int = 12
    max_strata: int = 3
    max_length: int = 5

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise GeneratorError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if self.max_dim < 1:
            raise GeneratorError("max_dim must be at least 1")
        if self.max_length < 1:
            raise GeneratorError("max_length must be at least 1")
        if self.max_strata < 1:
            raise GeneratorError("max_strata must be at least 1")


@dataclass
class Fixture:
    spec: FixtureSpec
    scenario: ScenarioFile
    certificate: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _String:
    i: int
    k0: int
    m: int
    label: str
    tags: tuple = ()


@dataclass(frozen=True)
class _Elem:
    string: int
    j: int
    copy: int
    degree: int
    level: int
    label: str
    tags: tuple = ()


def _nonzero(rng: random.Random) -> int:
    return rng.choice((-2, -1, 1, 1, 2, 3))


def _small(rng: random.Random) -> int:
    return rng.choice((-2, -1, 0, 0, 1, 2))


def random_invertible(rng: random.Random, n: int, ops: int | None = None) -> Matrix:
    """Unimodular integer matrix: a random permutation followed by elementary row operations."""
    rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    rng.shuffle(rows)
    for _ in range(2 * n if ops is None else ops):
        if n < 2:
            break
        a, b = rng.sample(range(n), 2)
        c = rng.choice((-1, 1, 2))
        rows[a] = [x + c * y for x, y in zip(rows[a], rows[b])]
    for i in range(n):
        if rng.random() < 0.3:
            rows[i] = [-x for x in rows[i]]
    return Matrix.from_rows(rows, n)


def _injective(rng: random.Random, rows: int, cols: int) -> Matrix:
    while True:
        m = Matrix.from_rows([[_small(rng) for _ in range(cols)] for _ in range(rows)], cols)
        if rank(m) == cols:
            return m


def _elements(strings: list[_String]) -> list[_Elem]:
    out = []
    for s_ix, s in enumerate(strings):
        for j in range(s.i + 1):
            for t in range(s.m):
                out.append(_Elem(s_ix, j, t, s.k0 + 2 * j, -s.i + 2 * j, s.label, s.tags))
    return out


def _by_degree(elems: list[_Elem]) -> dict[int, list[_Elem]]:
    out: dict = {}
    for x in elems:
        out.setdefault(x.degree, []).append(x)
    return dict(sorted(out.items()))


def _plant_strings(rng: random.Random, d: int, max_i: int, budget: int, labels: list[str]) -> list[_String]:
    first_i = min(max_i, budget - 1, d)
    strings = [_String(first_i, d - first_i, 1, labels[0])]
    used = first_i + 1
    for _ in range(60):
        if used >= budget:
            break
        i = rng.randint(0, min(max_i, d))
        k0 = rng.randint(0, 2 * d - 2 * i)
        dual = 2 * d - 2 * i - k0
        m = 1 if rng.random() < 0.75 else 2
        size = m * (i + 1) * (1 if dual == k0 else 2)
        if used + size > budget:
            continue
        label = rng.choice(labels)
        strings.append(_String(i, k0, m, label))
        if dual != k0:
            strings.append(_String(i, dual, m, label))
        used += size
    return strings


def _matrix_from(entries: dict, rows: int, cols: int) -> Matrix:
    data = [[Fraction(0)] * cols for _ in range(rows)]
    for (r, c), v in entries.items():
        data[r][c] = Fraction(v)
    return Matrix.from_rows(data, cols)


def _eta_blocks(rng, by_deg, allowed, perturb=0.35) -> dict:
    """``e0`` along strings plus random lower-order terms where ``allowed(x, y)``."""
    eta = {}
    weights = {}
    for k, xs in by_deg.items():
        if k + 2 not in by_deg:
            continue
        ys = by_deg[k + 2]
        entries = {}
        for c, x in enumerate(xs):
            for r, y in enumerate(ys):
                if y.string == x.string and y.j == x.j + 1 and y.copy == x.copy:
                    w = weights.setdefault((x.string, x.j), _nonzero(rng))
                    entries[r, c] = w
                elif allowed(x, y) and rng.random() < perturb:
                    entries[r, c] = _small(rng)
        eta[k] = _matrix_from(entries, len(ys), len(xs))
    return eta


def _degree_filtrations(dims: dict) -> tuple[FilteredGradedSpace, FilteredGradedSpace]:
    hodge = FilteredGradedSpace(
        dict(dims), {k: (-(k // 2), (Subspace.full(n),)) for k, n in dims.items()}
    )
    weight = FilteredGradedSpace(dict(dims), {k: (k, (Subspace.full(n),)) for k, n in dims.items()})
    return hodge, weight


def _graded_change(rng, dims: dict) -> dict:
    return {k: random_invertible(rng, n) for k, n in dims.items()}


def _model_realization(rng: random.Random, spec: FixtureSpec, with_supports: bool):
    max_i = (spec.max_length - 1) // 2
    budget = spec.max_dim
    max_i = min(max_i, budget - 1)
    d = max_i + rng.randint(0, 1)
    n_nondense = min(spec.max_strata - 1, rng.randint(1, 2)) if with_supports else 0
    labels = ["V"] + [f"T{i + 1}" for i in range(n_nondense)]
    strings = _plant_strings(rng, d, max_i, budget, labels)
    elems = _elements(strings)
    by_deg = _by_degree(elems)
    dims = {k: len(v) for k, v in by_deg.items()}
    levels = {k: [x.level for x in v] for k, v in by_deg.items()}
    defect = max(abs(x.level) for x in elems)
    space = FilteredGradedSpace.from_levels(dims, levels, defect)
    eta = _eta_blocks(rng, by_deg, lambda x, y: y.label == x.label and y.level <= x.level + 1)

    pairing = {}
    # _plant_strings appends each non-self-dual string right before its dual
    dual_of = {}
    for s_ix, s in enumerate(strings):
        if s_ix in dual_of:
            continue
        kd = 2 * d - 2 * s.i - s.k0
        if kd == s.k0:
            dual_of[s_ix] = s_ix
            continue
        partner = s_ix + 1
        dual_of[s_ix], dual_of[partner] = partner, s_ix
    gr_blocks: dict = {}
    for s_ix, s in enumerate(strings):
        for j in range(s.i + 1):
            m = random_invertible(rng, s.m, 2)
            gr_blocks[s_ix, j] = m
    for k, xs in by_deg.items():
        kd = 2 * d - k
        ys = by_deg.get(kd, [])
        entries = {}
        for r, x in enumerate(xs):
            for c, y in enumerate(ys):
                if y.string == dual_of[x.string] and y.j == strings[x.string].i - x.j:
                    entries[r, c] = gr_blocks[x.string, x.j][x.copy, y.copy]
                elif y.label == x.label and x.level + y.level > 0 and rng.random() < 0.3:
                    entries[r, c] = _small(rng)
        if kd in dims:
            pairing[k] = _matrix_from(entries, len(xs), len(ys))

    strata = [Stratum("V", d, True)]
    for t_ix, lab in enumerate(labels[1:]):
        cover = rng.randint(0, max(d - 1, 0))
        res, res_c = {}, {}
        for dest in (res, res_c):
            for b in space.levels:
                for k, xs in by_deg.items():
                    own = [c for c, x in enumerate(xs) if x.level == b and x.label == lab]
                    extra = rng.randint(0, 1) if own else 0
                    rows = len(own) + extra
                    if rows == 0:
                        continue
                    inj = _injective(rng, rows, len(own))
                    entries = {}
                    for c, x in enumerate(xs):
                        if x.level > b:
                            for r in range(rows):
                                if rng.random() < 0.4:
                                    entries[r, c] = _small(rng)
                    for jj, c in enumerate(own):
                        for r in range(rows):
                            entries[r, c] = inj[r, jj]
                    dest.setdefault(b, {})[k] = _matrix_from(entries, rows, len(xs))
        strata.append(Stratum(lab, cover, False, res, res_c))

    scal = {lab: i + 1 for i, lab in enumerate(labels)}
    gamma = {k: Matrix.diag([scal[x.label] * 2 ** k for x in xs]) for k, xs in by_deg.items()}
    hodge, weight = _degree_filtrations(dims)
    model = Realization(
        "model", space, eta, d,
        tuple(strata) if with_supports else (),
        SAME if with_supports else None,
        pairing if with_supports else {},
        hodge, weight, (gamma,),
    )
    planted = {"strings": strings, "by_deg": by_deg, "labels": labels}
    return model, planted


def _planted_supports(space: FilteredGradedSpace, by_deg: dict, c: dict, labels) -> list[dict]:
    out = []
    for b in space.levels:
        for k, xs in by_deg.items():
            lower = space.step(k, b - 1)
            for lab in labels:
                own = [i for i, x in enumerate(xs) if x.level == b and x.label == lab]
                if not any(x.level == b for x in xs):
                    continue
                s = Subspace.coordinate(len(xs), own) + lower
                out.append({
                    "level": b,
                    "degree": k,
                    "label": lab,
                    "dim": len(own),
                    "lift": [[str(v) for v in row] for row in s.map(c[k]).basis],
                })
    return out


def _primitive_dims(strings: list[_String]) -> dict:
    out: dict = {}
    for s in strings:
        out[s.i] = out.get(s.i, 0) + s.m
    return dict(sorted(out.items()))


def _hl_or_supports(rng: random.Random, spec: FixtureSpec, with_supports: bool) -> Fixture:
    model, planted = _model_realization(rng, spec, with_supports)
    c = _graded_change(rng, model.space.dims)
    r = transport_realization(model, "betti", c)
    cert = {
        "profile": spec.profile,
        "seed": spec.seed,
        "primitive_dims": _primitive_dims(planted["strings"]),
        "perverse_dims": {
            b: sum(1 for x in sum(planted["by_deg"].values(), []) if x.level == b) for b in model.space.levels
        },
    }
    if with_supports:
        cert["supports"] = _planted_supports(model.space, planted["by_deg"], c, planted["labels"])
    name = f"{spec.profile}-{spec.seed}"
    scen = ScenarioFile(name, (r,), (), "betti", None, f"generated fixture, profile {spec.profile}", cert)
    return Fixture(spec, scen, cert)


def _diagram(rng: random.Random, spec: FixtureSpec) -> Fixture:
    fx = _hl_or_supports(rng, spec, True)
    base = fx.scenario.realizations[0]
    n_vertices = rng.randint(2, 4)
    maps = {VERTEX_LABELS[0]: {k: Matrix.identity(n) for k, n in base.space.dims.items()}}
    reals = [base]
    for v in VERTEX_LABELS[1:n_vertices]:
        cv = _graded_change(rng, base.space.dims)
        maps[v] = cv
        reals.append(transport_realization(base, v, cv))
    labels = list(maps)

    def edge(a: str, b: str) -> Comparison:
        blocks = {k: maps[b][k] @ inverse(maps[a][k]) for k in base.space.dims}
        return Comparison(a, b, blocks)

    comps = []
    for ix, v in enumerate(labels[1:], start=1):
        parent = labels[rng.randrange(ix)]
        comps.append(edge(parent, v) if rng.random() < 0.5 else edge(v, parent))
    present = {frozenset((c.source, c.target)) for c in comps}
    free = [(a, b) for a in labels for b in labels if a < b and frozenset((a, b)) not in present]
    if free and rng.random() < 0.6:
        comps.append(edge(*rng.choice(free)))
    cert = dict(fx.certificate)
    cert["vertices"] = labels
    scen = ScenarioFile(
        f"diagram-{spec.seed}", tuple(reals), tuple(comps), labels[0], None,
        "generated fixture, profile diagram", cert,
    )
    return Fixture(spec, scen, cert)


def _composition(rng: random.Random, spec: FixtureSpec, n_maps: int | None = None) -> Fixture:
    n_maps = rng.choice((2, 3)) if n_maps is None else n_maps
    span_a = 1 if spec.max_length >= 3 and rng.random() < 0.6 else 0
    blocks = [(0, "X")]
    if rng.random() < 0.5:
        blocks.append((0, "Z"))
    for a in range(-span_a, span_a + 1):
        if a != 0:
            blocks.append((a, "p"))
    max_i = min((spec.max_length - 1) // 2, 2)
    budget = spec.max_dim
    strings: list[_String] = []
    used = 0
    for b_ix, (a, x) in enumerate(blocks):
        share = max(1, (budget - used) // (len(blocks) - b_ix)) if b_ix < len(blocks) - 1 else budget - used
        if share <= 0:
            break
        i = rng.randint(0, min(max_i, share - 1))
        cur = 0
        first = True
        while cur < share:
            if not first:
                i = rng.randint(0, min(max_i, share - cur - 1))
            first = False
            k0 = rng.randint(0, 3)
            y = rng.choice(("Y0", "Y1"))
            third = rng.choice((-1, 0, 1)) if n_maps == 3 else 0
            strings.append(_String(i, k0, 1, y, (a, x, third)))
            cur += i + 1
            if rng.random() < 0.4:
                break
        used += cur
    elems = _elements(strings)
    by_deg = _by_degree(elems)
    dims = {k: len(v) for k, v in by_deg.items()}

    def a_of(e):
        return e.tags[0]

    def x_of(e):
        return e.tags[1]

    def l3(e):
        return e.tags[2]

    pg = FilteredGradedSpace.from_levels(dims, {k: [a_of(e) for e in v] for k, v in by_deg.items()})
    ph_model = FilteredGradedSpace.from_levels(dims, {k: [a_of(e) + e.level for e in v] for k, v in by_deg.items()})
    pf = FilteredGradedSpace.from_levels(dims, {k: [e.level for e in v] for k, v in by_deg.items()})

    def coord_lifts(pred) -> dict:
        return {k: Subspace.coordinate(len(v), [i for i, e in enumerate(v) if pred(e)]) for k, v in by_deg.items()}

    g_sup = {
        (a, x): coord_lifts(lambda e, a=a, x=x: a_of(e) < a or (a_of(e) == a and x_of(e) == x))
        for a, x in blocks
    }
    cs = sorted({a_of(e) + e.level for e in elems})
    bs = sorted({e.level for e in elems})
    h_sup = {
        (c, y): coord_lifts(lambda e, c=c, y=y: a_of(e) + e.level < c or (a_of(e) + e.level == c and e.label == y))
        for c in cs for y in ("Y0", "Y1")
    }
    f_sup = {
        (b, y): coord_lifts(lambda e, b=b, y=y: e.level < b or (e.level == b and e.label == y))
        for b in bs for y in ("Y0", "Y1")
    }

    def unipotent(lower) -> dict:
        out = {}
        for k, v in by_deg.items():
            entries = {(i, i): 1 for i in range(len(v))}
            for c, x in enumerate(v):
                for r, y in enumerate(v):
                    if lower(x, y) and rng.random() < 0.5:
                        entries[r, c] = _small(rng)
            out[k] = _matrix_from(entries, len(v), len(v))
        return out

    u = unipotent(lambda x, y: a_of(y) < a_of(x))
    u_inv = {k: inverse(m) for k, m in u.items()}
    ph = ph_model.transport(u)
    h_sup = {key: {k: s.map(u[k]) for k, s in lifts.items()} for key, lifts in h_sup.items()}

    def allowed(x, y):
        same_block = a_of(y) == a_of(x) and x_of(y) == x_of(x)
        return (a_of(y) < a_of(x) or same_block) and a_of(y) + y.level <= a_of(x) + x.level + 1 and (
            not same_block or y.level <= x.level + 1
        )

    eta_m = _eta_blocks(rng, by_deg, allowed)
    eta = {k: u[k + 2] @ m @ u_inv[k] for k, m in eta_m.items()}

    chain = [pg, ph]
    relative = [pf]
    if n_maps == 3:
        q3_model = FilteredGradedSpace.from_levels(
            dims, {k: [a_of(e) + e.level + l3(e) for e in v] for k, v in by_deg.items()}
        )
        r3 = FilteredGradedSpace.from_levels(dims, {k: [l3(e) for e in v] for k, v in by_deg.items()})
        u3 = unipotent(
            lambda x, y: a_of(y) < a_of(x) or (a_of(y) == a_of(x) and a_of(y) + y.level < a_of(x) + x.level)
        )
        chain.append(q3_model.transport({k: u3[k] @ u[k] for k in dims}))
        relative.append(r3)

    c = _graded_change(rng, dims)

    def move(f: FilteredGradedSpace) -> FilteredGradedSpace:
        return f.transport(c)

    def move_lifts(lifts: dict) -> dict:
        return {key: {k: s.map(c[k]) for k, s in per.items()} for key, per in lifts.items()}

    comp = CompositionData(
        dims,
        tuple(move(f) for f in chain),
        tuple(move(f) for f in relative),
        move_lifts(g_sup),
        move_lifts(h_sup),
        move_lifts(f_sup),
    )
    c_inv = {k: inverse(m) for k, m in c.items()}
    hodge, weight = _degree_filtrations(dims)
    gamma = {k: Matrix.identity(n).scale(2 ** k) for k, n in dims.items()}
    res = Resolution(move(pg), "X", {k: s.map(c[k]) for k, s in g_sup[0, "X"].items()})
    real = Realization(
        "betti",
        move(ph),
        {k: c[k + 2] @ m @ c_inv[k] for k, m in eta.items()},
        0,
        hodge=hodge,
        weight=weight,
        symmetries=({k: c[k] @ m @ c_inv[k] for k, m in gamma.items()},),
        resolution=res,
    )
    block_dims: dict = {}
    for e in elems:
        key = f"{a_of(e)},{x_of(e)},{e.level},{e.label}"
        block_dims.setdefault(key, {}).setdefault(e.degree, 0)
        block_dims[key][e.degree] += 1
    ih_levels: dict = {}
    for e in elems:
        if a_of(e) == 0 and x_of(e) == "X":
            ih_levels[e.level] = ih_levels.get(e.level, 0) + 1
    cert = {
        "profile": spec.profile,
        "seed": spec.seed,
        "maps": n_maps,
        "blocks": {k: dict(sorted(v.items())) for k, v in sorted(block_dims.items())},
        "ih_perverse_dims": dict(sorted(ih_levels.items())),
    }
    scen = ScenarioFile(
        f"composition-{spec.seed}", (real,), (), "betti", comp, "generated fixture, profile composition", cert
    )
    return Fixture(spec, scen, cert)


def generate_fixture(spec: FixtureSpec) -> Fixture:
    """Deterministic in ``spec``: the same spec always yields the same scenario."""
    rng = random.Random(f"{spec.profile}:{spec.seed}:{spec.max_dim}:{spec.max_strata}:{spec.max_length}")
    if spec.profile == "hl-only":
        return _hl_or_supports(rng, spec, False)
    if spec.profile == "supports":
        return _hl_or_supports(rng, spec, True)
    if spec.profile == "diagram":
        return _diagram(rng, spec)
    return _composition(rng, spec)
