from __future__ import annotations

import pytest
import sympy

from conftest import to_sympy
from dtproj.filtered import FilteredGradedSpace
from dtproj.generate import FixtureSpec, generate_fixture
from dtproj.lefschetz import (
    FiltrationShiftError,
    HardLefschetzError,
    HLTriple,
    canonical_splitting,
    lefschetz_compatible,
    primitive_parts,
    unique_lift,
    verify_hl,
)
from dtproj.linalg import Matrix


def M(rows, cols=None):
    return Matrix.from_rows(rows, cols)


def projective_line(e=1):
    space = FilteredGradedSpace.from_levels({0: 1, 2: 1}, {0: [-1], 2: [1]})
    return HLTriple.from_blocks(space, {0: M([[e]])})


def test_projective_line():
    t = projective_line()
    rep = verify_hl(t)
    assert rep.holds
    assert [c.determinant for c in rep.certificates] == [1, 1]
    split = canonical_splitting(t)
    assert split.phi == Matrix.identity(2)
    assert {i: p.dim for i, p in split.decomposition.primitive.items()} == {1: 1}


def test_zero_operator_fails_at_one():
    rep = verify_hl(projective_line(0))
    assert not rep.holds and rep.failure == 1
    with pytest.raises(HardLefschetzError):
        canonical_splitting(projective_line(0))


def test_string_of_length_three():
    space = FilteredGradedSpace.from_levels({0: 1, 2: 1, 4: 1}, {0: [-2], 2: [0], 4: [2]})
    t = HLTriple.from_blocks(space, {0: M([[2]]), 2: M([[3]])})
    split = canonical_splitting(t)
    assert list(split.decomposition.primitive) == [2]
    assert split.phi == Matrix.identity(3)


def test_operator_must_raise_filtration_by_two():
    space = FilteredGradedSpace.from_levels({0: 1, 2: 1}, {0: [-1], 2: [2]})
    t = HLTriple.from_blocks(space, {0: M([[1]])})
    with pytest.raises(FiltrationShiftError):
        verify_hl(t)


def _oracle_lift(t: HLTriple, i: int, naive_col, expected_col) -> int:
    """Solve the lift conditions with sympy, parametrizing ``x = naive + F_{-i-1}``.

    Returns the dimension of the solution space; asserts the unique solution
    equals ``expected_col`` when it is zero-dimensional.
    """
    space = t.space
    n = t.dim
    e = to_sympy(t.matrix)
    lower = space.total_step(-i - 1)
    base = sympy.Matrix([sympy.Rational(x.numerator, x.denominator) for x in naive_col])
    if lower.dim:
        B = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in v] for v in lower.basis]).T
    else:
        B = sympy.zeros(n, 0)
    ys = sympy.symbols(f"y0:{B.cols}") if B.cols else ()
    x = base + (B * sympy.Matrix(ys) if B.cols else sympy.zeros(n, 1))
    eqs = []
    s = i + 1
    while s - 1 < space.b_max:
        step = space.total_step(s - 1)
        if step.dim:
            S = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in step.basis])
            annihilator = S.nullspace()
        else:
            annihilator = [sympy.eye(n).col(c) for c in range(n)]
        ex = e ** s * x
        for w in annihilator:
            eqs.append((w.T * ex)[0])
        s += 1
    if not ys:
        assert all(sympy.simplify(q) == 0 for q in eqs)
        sol = x
        free = 0
    else:
        sols = sympy.linsolve(eqs, ys)
        (tup,) = list(sols)
        free = len(set().union(*[sympy.sympify(v).free_symbols for v in tup]))
        sol = x.subs(dict(zip(ys, tup)))
    if free == 0:
        assert [sympy.Rational(c.numerator, c.denominator) for c in expected_col] == list(sol)
    return free


ORACLE_SEEDS = range(6)


def _oracle_triple(seed: int) -> HLTriple:
    r = generate_fixture(FixtureSpec(seed, "hl-only", max_dim=12, max_length=9)).scenario.realizations[0]
    return HLTriple.from_blocks(r.space, r.eta)


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
def test_unique_lift_against_sympy_oracle(seed):
    t = _oracle_triple(seed)
    dec = primitive_parts(t)
    for i in dec.generators:
        lift = unique_lift(t, i, dec)
        assert lift.nullity == 0
        for g in range(lift.matrix.cols):
            assert _oracle_lift(t, i, lift.naive.col(g), lift.matrix.col(g)) == 0


def test_oracle_set_is_not_trivial():
    # at least five perversity levels, and lifts that differ from the naive section
    levels, moved = 0, 0
    for seed in ORACLE_SEEDS:
        t = _oracle_triple(seed)
        levels = max(levels, len(t.space.levels))
        dec = primitive_parts(t)
        moved += sum(unique_lift(t, i, dec).matrix != unique_lift(t, i, dec).naive for i in dec.generators)
    assert levels >= 5
    assert moved > 0


@pytest.mark.parametrize("seed", range(10))
def test_primitive_dimensions_match_planted_strings(seed):
    fx = generate_fixture(FixtureSpec(seed, "hl-only"))
    r = fx.scenario.realizations[0]
    dec = primitive_parts(HLTriple.from_blocks(r.space, r.eta))
    got = {i: p.dim for i, p in dec.primitive.items()}
    assert got == fx.certificate["primitive_dims"]


@pytest.mark.parametrize("seed", range(10))
def test_splitting_is_lefschetz_compatible(seed):
    r = generate_fixture(FixtureSpec(seed, "hl-only")).scenario.realizations[0]
    t = HLTriple.from_blocks(r.space, r.eta)
    assert lefschetz_compatible(t, canonical_splitting(t))
