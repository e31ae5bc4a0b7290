from __future__ import annotations

import random

import pytest

from dtproj.generate import FixtureSpec, generate_fixture, random_invertible
from dtproj.harness import run_pipeline, transport_realization
from dtproj.linalg import Matrix, Subspace
from dtproj.supports import (
    Stratum,
    SupportDataError,
    SupportScenario,
    assemble_support_decomposition,
    check_graded_pairing,
    dense_summand,
    nondense_summand,
)


def M(rows, cols=None):
    return Matrix.from_rows(rows, cols)


def scenario(strata, pairing=None):
    # one graded piece Gr_0 H^1 of dimension 2 on a curve, self-paired
    pairing = {(0, 1): Matrix.identity(2)} if pairing is None else pairing
    return SupportScenario(1, {(0, 1): 2}, {(0, 1): 2}, tuple(strata), pairing)


DENSE = Stratum("V", 1, True)


def test_zero_pairing_has_witness():
    rep = check_graded_pairing(scenario([DENSE], {(0, 1): Matrix.zero(2, 2)}))
    assert not rep
    assert rep.witness[:2] == (0, 1)
    with pytest.raises(SupportDataError):
        assemble_support_decomposition(scenario([DENSE], {(0, 1): Matrix.zero(2, 2)}))


def test_only_dense_stratum_takes_everything():
    s = scenario([DENSE])
    assert dense_summand(s, 0)[1].is_full()
    dec = assemble_support_decomposition(s)
    assert dec.summand(0, 1, "V").is_full()


def test_injective_restriction_kills_dense_summand():
    t = Stratum("T", 0, False, {0: {1: Matrix.identity(2)}}, {0: {1: Matrix.identity(2)}})
    s = scenario([DENSE, t])
    assert dense_summand(s, 0)[1].is_zero()
    dec = assemble_support_decomposition(s)
    assert dec.summand(0, 1, "T").is_full()
    assert dec.summand(0, 1, "T", compact=True).is_full()


def test_zero_restriction_leaves_nothing_for_the_stratum():
    t = Stratum("T", 0, False, {0: {1: Matrix.zero(1, 2)}}, {0: {1: Matrix.zero(1, 2)}})
    s = scenario([DENSE, t])
    assert nondense_summand(s, 0, "T")[1].is_zero()
    dec = assemble_support_decomposition(s)
    assert dec.summand(0, 1, "V").is_full()
    # zero summands are kept, not dropped
    assert "T" in dec.summands[0, 1]


def test_mixed_piece():
    t = Stratum("T", 0, False, {0: {1: M([[1, 0]])}}, {0: {1: M([[1, 0]])}})
    dec = assemble_support_decomposition(scenario([DENSE, t]))
    assert dec.summand(0, 1, "V") == Subspace.span([[0, 1]], 2)
    assert dec.summand(0, 1, "T") == Subspace.span([[1, 0]], 2)


def test_inconsistent_data_is_rejected():
    # ordinary side cut by e1, compact side by e2: the summands overlap
    t = Stratum("T", 0, False, {0: {1: M([[1, 0]])}}, {0: {1: M([[0, 1]])}})
    with pytest.raises(SupportDataError):
        assemble_support_decomposition(scenario([DENSE, t]))


def test_dense_summand_of_the_dense_label_is_not_a_nondense_summand():
    with pytest.raises(SupportDataError):
        nondense_summand(scenario([DENSE]), 0, "V")


def lifted_summands(result):
    """Summands pulled back to ambient ``H^k`` as ``lift + F_{b-1}``."""
    space = result.triple.space
    gc = space.graded
    out = {}
    for (b, k), parts in result.supports.summands.items():
        if gc.gr_dim(b, k) == 0:
            continue
        for label, s in parts.items():
            out[b, k, label] = s.map(gc.pieces[b].section[k]) + space.step(k, b - 1)
    return out


def planted_summands(fx):
    out = {}
    for row in fx.certificate["supports"]:
        r = fx.scenario.realizations[0]
        n = r.space.dims[row["degree"]]
        out[row["level"], row["degree"], row["label"]] = Subspace.span(row["lift"], n)
    return out


@pytest.mark.parametrize("seed", range(12))
def test_planted_supports_are_recovered(seed):
    fx = generate_fixture(FixtureSpec(seed, "supports"))
    got = lifted_summands(run_pipeline(fx.scenario.realizations[0]))
    assert got == planted_summands(fx)


@pytest.mark.parametrize("seed", range(6))
def test_supports_are_natural_under_isomorphisms(seed):
    fx = generate_fixture(FixtureSpec(seed, "supports"))
    r = fx.scenario.realizations[0]
    rng = random.Random(seed)
    c = {k: random_invertible(rng, n) for k, n in r.space.dims.items()}
    moved = run_pipeline(transport_realization(r, "moved", c))
    base = lifted_summands(run_pipeline(r))
    for (b, k, label), s in lifted_summands(moved).items():
        assert s == base[b, k, label].map(c[k])
