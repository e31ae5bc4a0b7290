from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtproj.corpus import blowup, diagram3
from dtproj.filtered import FilteredGradedSpace, FilteredMap
from dtproj.generate import FixtureSpec, _composition, generate_fixture, random_invertible
from dtproj.harness import (
    Comparison,
    DiagramStar,
    DisconnectedDiagramError,
    PipelineError,
    Realization,
    check_diagram,
    check_equivariance,
    check_forget,
    check_rationality,
    run_diagram,
    run_pipeline,
    transport_realization,
)
from dtproj.linalg import Matrix, inverse
from dtproj.projectors import KINDS, multi_composition_check, verify_projector_system


def M(rows, cols=None):
    return Matrix.from_rows(rows, cols)


def identity_blocks(dims):
    return {k: Matrix.identity(n) for k, n in dims.items()}


def test_trivial_realization():
    space = FilteredGradedSpace.trivial({0: 1})
    p = run_pipeline(Realization("point", space, {}))
    for kind in KINDS:
        fam = p.families[kind]
        assert verify_projector_system(fam)
        assert list(fam.ranks().values()) == [1]


def test_pipeline_error_names_the_stage():
    space = FilteredGradedSpace.from_levels({0: 1, 2: 1}, {0: [-1], 2: [1]})
    with pytest.raises(PipelineError) as err:
        run_pipeline(Realization("broken", space, {0: M([[0]])}))
    assert err.value.stage == "hard Lefschetz"
    assert err.value.label == "broken"


def test_identity_edge_passes():
    r = blowup().realizations[0]
    twin = dataclasses.replace(r, label="twin")
    d = DiagramStar((r, twin), (Comparison("betti", "twin", identity_blocks(r.space.dims)),), "betti")
    bundle = run_diagram(d)
    assert check_diagram(d, bundle)
    assert check_rationality(d, bundle)


def test_corrupted_entry_is_detected():
    s = diagram3()
    bundle = run_diagram(s.diagram)
    assert check_diagram(s.diagram, bundle)
    c = s.comparisons[0]
    blocks = dict(c.blocks)
    rows = blocks[2].to_rows()
    rows[0][1] += 1
    blocks[2] = M(rows)
    bad = dataclasses.replace(s.diagram, comparisons=(Comparison(c.source, c.target, blocks),) + s.comparisons[1:])
    rep = check_diagram(bad, bundle)
    assert not rep
    assert rep.failures[0].edge == (c.source, c.target)


def test_inconsistent_cycle_fails_rationality():
    s = diagram3()
    bundle = run_diagram(s.diagram)
    last = s.comparisons[2]
    # replace the closing edge by another valid comparison: minus the original
    flipped = Comparison(last.source, last.target, {k: -m for k, m in last.blocks.items()})
    d = dataclasses.replace(s.diagram, comparisons=s.comparisons[:2] + (flipped,))
    rep = check_rationality(d, bundle)
    assert not rep
    assert any(f[1] == "cycle" for f in rep.failures)


def test_disconnected_diagram():
    s = diagram3()
    d = dataclasses.replace(s.diagram, comparisons=s.comparisons[:1])
    with pytest.raises(DisconnectedDiagramError):
        check_rationality(d, run_diagram(d))


def test_scalar_symmetry_commutes():
    r = blowup().realizations[0]
    two = {k: Matrix.identity(n).scale(2) for k, n in r.space.dims.items()}
    assert check_equivariance(run_pipeline(dataclasses.replace(r, symmetries=(two,))))


def test_swapping_hyperplane_and_exceptional_class_is_not_a_symmetry():
    r = blowup().realizations[0]
    swap = {0: M([[2]]), 2: M([[0, 2], [2, 0]]), 4: M([[2]])}
    rep = check_equivariance(run_pipeline(dataclasses.replace(r, symmetries=(swap,))))
    assert not rep
    assert rep.witness[1] in ("support", "both")


def test_forget_map_intertwines_on_compact_varieties():
    r = blowup().realizations[0]
    p = run_pipeline(r)
    assert check_forget(r, p) == []


def test_three_map_chain():
    fx = _composition(random.Random("three"), FixtureSpec(3, "composition", max_dim=10), n_maps=3)
    c = fx.scenario.composition
    assert len(c.chain) == 3
    rep = multi_composition_check(c.chain, c.relative)
    assert rep.ok and rep.total == rep.dim


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 30))
def test_transport_conjugates_projectors(seed, fixture_seed):
    r = generate_fixture(FixtureSpec(fixture_seed, "supports", max_dim=8)).scenario.realizations[0]
    rng = random.Random(seed)
    c = {k: random_invertible(rng, n) for k, n in r.space.dims.items()}
    base = run_pipeline(r)
    moved = run_pipeline(transport_realization(r, "moved", c))
    cm = FilteredMap(r.space, r.space, c).total
    cinv = inverse(cm)
    for kind in KINDS:
        for ix, p in base.families[kind].projectors.items():
            assert moved.families[kind].projectors[ix] == cm @ p @ cinv
