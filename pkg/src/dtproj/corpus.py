"""The shipped scenarios, built in code and stored as files under ``corpus/``.

``DTPROJ_CORPUS`` overrides the directory that names like ``blowup`` resolve
against.  Running this module rewrites the shipped files from the builders.
"""

from __future__ import annotations

import os
import random
from pathlib import Path

from .filtered import FilteredGradedSpace, FlagRestrictionData
from .generate import FixtureSpec, _composition
from .harness import SAME, Comparison, Realization, transport_realization
from .linalg import Matrix, Subspace, inverse
from .scenario import ScenarioFile, dump, load
from .supports import Stratum

ENV_VAR = "DTPROJ_CORPUS"
SUFFIX = ".scenario"
NAMES = ("blowup", "ruled", "compose", "diagram3")


def corpus_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "corpus"


def resolve(name_or_path: str | os.PathLike) -> Path:
    """A path as given if it exists, otherwise ``<corpus>/<name>.scenario``."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidate = corpus_dir() / (p.name if p.suffix == SUFFIX else p.name + SUFFIX)
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no scenario file {str(name_or_path)!r} (also looked in {corpus_dir()})")


def load_named(name: str) -> ScenarioFile:
    return load(resolve(name))


def shipped_paths() -> list[Path]:
    return sorted(corpus_dir().glob("*" + SUFFIX))


def _m(rows, cols=None) -> Matrix:
    return Matrix.from_rows(rows, cols)


def _tate(dims: dict) -> tuple[FilteredGradedSpace, FilteredGradedSpace]:
    """Hodge ``F^p H^{2k} = H^{2k}`` for ``p <= k``; pure weight ``2k``."""
    hodge = FilteredGradedSpace(dict(dims), {k: (-(k // 2), (Subspace.full(n),)) for k, n in dims.items()})
    weight = FilteredGradedSpace(dict(dims), {k: (k, (Subspace.full(n),)) for k, n in dims.items()})
    return hodge, weight


def _frobenius_like(dims: dict) -> dict:
    """Multiplication by ``2^{k/2}`` in degree ``k``."""
    return {k: Matrix.identity(n).scale(2 ** (k // 2)) for k, n in dims.items()}


def blowup() -> ScenarioFile:
    """Blow-up of the plane at a point, mapped down to the plane.

    ``H^2`` has basis ``(h, e)``: the pulled-back hyperplane class and the
    exceptional curve, with ``h^2 = 1`` and ``e^2 = -1``.  The map is
    semismall, so the perverse filtration has the single level 0.  The
    exceptional curve lies over the point stratum.
    """
    dims = {0: 1, 2: 2, 4: 1}
    space = FilteredGradedSpace.from_levels(dims, {0: [0], 2: [0, 0], 4: [0]}, defect=0)
    # eta = -e: 1 -> -e, h -> -h.e = 0, e -> -e.e = pt
    eta = {0: _m([[0], [-1]]), 2: _m([[0, 1]])}
    point = Stratum(
        "pt",
        cover_dim=1,
        restrictions={0: {2: _m([[0, -1]])}},
        compact_restrictions={0: {2: _m([[0, -1]])}},
    )
    strata = (Stratum("P2", 2, True), point)
    pairing = {0: _m([[1]]), 2: Matrix.diag([1, -1]), 4: _m([[1]])}
    hodge, weight = _tate(dims)
    flag = FlagRestrictionData(
        ordinary={
            0: {0: _m([[1]]), 2: _m([[1, 0], [0, 1]]), 4: _m([[1]])},
            1: {0: _m([], 1), 2: _m([[1, 1], [0, 1], [2, -1]]), 4: _m([[2]])},
            2: {0: _m([], 1), 2: _m([], 2), 4: _m([[1], [1]])},
            3: {0: _m([], 1), 2: _m([], 2), 4: _m([], 1)},
        },
        compact={
            0: {0: _m([[]]), 2: _m([[], []]), 4: _m([[]])},
            1: {0: _m([[]]), 2: _m([[], []]), 4: _m([[1, 2]])},
            2: {0: _m([[]]), 2: _m([[1, 0, 1], [0, 1, 1]]), 4: _m([[1]])},
            3: {0: _m([[2]]), 2: _m([[1, 0], [0, 1]]), 4: _m([[1]])},
        },
        renumbering={0: -1, 2: -2, 4: -3},
        compact_renumbering={0: -3, 2: -2, 4: -1},
    )
    # X is compact, so H_! -> H is the identity
    forget = {k: Matrix.identity(n) for k, n in dims.items()}
    r = Realization(
        "betti", space, eta, 2, strata, SAME, pairing, hodge, weight, (_frobenius_like(dims),), flag,
        forget=forget,
    )
    return ScenarioFile(
        "blowup",
        (r,),
        (),
        "betti",
        description="blow-up of the projective plane at a point, mapped to the plane",
    )


def ruled() -> ScenarioFile:
    """``P^1 x P^1`` projected to the second factor, with the ruling class as ``eta``.

    ``H^2`` has basis ``(a, b)``: ``a`` is the fiber class (pulled back from
    the base), ``b`` the class of a section, ``ab = pt``, ``a^2 = b^2 = 0``.
    Perversities: ``1`` and ``a`` at ``-1``, ``b`` and ``ab`` at ``1``.
    """
    dims = {0: 1, 2: 2, 4: 1}
    space = FilteredGradedSpace.from_levels(dims, {0: [-1], 2: [-1, 1], 4: [1]}, defect=1)
    eta = {0: _m([[0], [1]]), 2: _m([[1, 0]])}
    pairing = {0: _m([[1]]), 2: _m([[0, 1], [1, 0]]), 4: _m([[1]])}
    hodge, weight = _tate(dims)
    r = Realization(
        "betti", space, eta, 2, (Stratum("P1", 2, True),), SAME, pairing, hodge, weight,
        (_frobenius_like(dims),),
    )
    return ScenarioFile(
        "ruled", (r,), (), "betti", description="product of two projective lines over a line"
    )


def compose() -> ScenarioFile:
    spec = FixtureSpec(7, "composition", max_dim=10, max_length=5)
    rng = random.Random("corpus:compose:12")
    fx = _composition(rng, spec, n_maps=2)
    s = fx.scenario
    return ScenarioFile(
        "compose", s.realizations, (), s.rational, s.composition,
        "two maps in block-model coordinates, hidden by a change of basis", s.certificate,
    )


def diagram3() -> ScenarioFile:
    base = blowup().realizations[0]
    c_dr = {0: _m([[2]]), 2: _m([[1, 1], [0, 1]]), 4: _m([["1/2"]])}
    c_et = {0: _m([[1]]), 2: _m([[1, 0], [1, -1]]), 4: _m([[3]])}
    dr = transport_realization(base, "deRham", c_dr)
    et = transport_realization(base, "etale-3", c_et)
    between = {k: c_et[k] @ inverse(c_dr[k]) for k in c_dr}
    comps = (
        Comparison("betti", "deRham", c_dr),
        Comparison("betti", "etale-3", c_et),
        Comparison("deRham", "etale-3", between),
    )
    return ScenarioFile(
        "diagram3",
        (base, dr, et),
        comps,
        "betti",
        description="the blow-up scenario in three realizations related by comparison maps",
    )


BUILDERS = {"blowup": blowup, "ruled": ruled, "compose": compose, "diagram3": diagram3}


def write_corpus(directory: str | os.PathLike | None = None) -> list[Path]:
    out = Path(directory) if directory is not None else Path(__file__).resolve().parent / "corpus"
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, build in BUILDERS.items():
        p = out / (name + SUFFIX)
        dump(build(), p)
        paths.append(p)
    return paths


if __name__ == "__main__":
    for p in write_corpus():
        print(p)
