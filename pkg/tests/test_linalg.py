from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sympy_rref_rows, to_sympy
from dtproj.linalg import (
    DimensionError,
    Matrix,
    Subspace,
    canonicalize,
    determinant,
    image,
    intersect_all,
    inverse,
    kernel,
    orthogonal_complement,
    quotient_with_projection,
    rank,
    solve,
    to_rational,
)


def M(rows, cols=None):
    return Matrix.from_rows(rows, cols)


small = st.integers(min_value=-3, max_value=3)


@st.composite
def matrices(draw, max_rows=5, max_cols=5):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return M([[draw(small) for _ in range(c)] for _ in range(r)], c)


@st.composite
def vector_sets(draw, n=None, max_vectors=4):
    n = draw(st.integers(1, 5)) if n is None else n
    k = draw(st.integers(0, max_vectors))
    return n, [[draw(small) for _ in range(n)] for _ in range(k)]


def test_canonical_form_of_dependent_rows():
    assert canonicalize(M([[2, 4], [1, 2]])) == M([[1, 2]])
    assert Subspace.span([[2, 4], [1, 2]], 2).basis == ((1, 2),)


def test_kernel_of_single_row():
    k = kernel(M([[1, 2, 3]]))
    assert k.dim == 2
    assert k == Subspace.span([[-2, 1, 0], [-3, 0, 1]], 3)


def test_orthogonal_complement_under_indefinite_form():
    form = Matrix.diag([1, -1])
    line = Subspace.span([[1, 1]], 2)
    # (1,1) pairs with (a,b) to a - b
    assert orthogonal_complement(line, form) == Subspace.span([[1, 1]], 2)
    assert orthogonal_complement(Subspace.span([[1, 0]], 2), form) == Subspace.span([[0, 1]], 2)


def test_quotient_by_diagonal_line():
    s = Subspace.span([[1, 1]], 2)
    section, proj = quotient_with_projection(2, s)
    assert proj.shape == (1, 2)
    assert (proj @ s.columns()).is_zero()
    assert proj @ section == Matrix.identity(1)


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        to_rational(0.5)
    assert to_rational("3/4") == Fraction(3, 4)


def test_singular_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        inverse(M([[1, 2], [2, 4]]))


def test_mismatched_ambient_dimensions():
    with pytest.raises(DimensionError):
        Subspace.full(2) + Subspace.full(3)
    with pytest.raises(DimensionError):
        M([[1, 2]]) + M([[1], [2]])


def test_empty_shapes():
    z = Matrix.zero(0, 3)
    assert kernel(z) == Subspace.full(3)
    assert image(z).dim == 0
    assert rank(Matrix.zero(0, 0)) == 0
    assert intersect_all([], 2) == Subspace.full(2)


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_kernel_image_match_sympy(m):
    sm = to_sympy(m)
    assert rank(m) == sm.rank()
    k = kernel(m)
    assert k.dim == m.cols - sm.rank()
    oracle = sympy_rref_rows([list(v) for v in sm.nullspace()], m.cols)
    assert list(k.basis) == oracle
    assert list(image(m).basis) == sympy_rref_rows([list(sm.col(j)) for j in range(m.cols)], m.rows)


@settings(max_examples=60, deadline=None)
@given(vector_sets())
def test_span_is_canonical(data):
    n, vs = data
    s = Subspace.span(vs, n)
    assert list(s.basis) == sympy_rref_rows(vs, n)
    for v in vs:
        assert s.contains(v)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_sum_and_intersection_dimension_formula(data):
    n = data.draw(st.integers(1, 5))
    a = Subspace.span(data.draw(vector_sets(n))[1], n)
    b = Subspace.span(data.draw(vector_sets(n))[1], n)
    s, i = a + b, a & b
    assert s.dim + i.dim == a.dim + b.dim
    assert i.issubspace(a) and i.issubspace(b)
    assert a.issubspace(s) and b.issubspace(s)
    # oracle: intersection via sympy nullspace of [A | -B]
    if a.dim and b.dim:
        stacked = sympy.Matrix([list(v) for v in a.basis] + [[-x for x in w] for w in b.basis]).T
        vecs = []
        for z in stacked.nullspace():
            vecs.append([sum(z[r] * a.basis[r][c] for r in range(a.dim)) for c in range(n)])
        assert list(i.basis) == sympy_rref_rows(vecs, n)


@settings(max_examples=60, deadline=None)
@given(matrices(4, 4))
def test_inverse_and_determinant_match_sympy(m):
    if not m.is_square():
        return
    sm = to_sympy(m)
    assert determinant(m) == Fraction(int(sm.det().p), int(sm.det().q))
    if sm.det() != 0:
        assert inverse(m) @ m == Matrix.identity(m.rows)
        assert to_sympy(inverse(m)) == sm.inv()


@settings(max_examples=40, deadline=None)
@given(matrices(4, 4), st.data())
def test_solve_reports_nullity(m, data):
    rhs = M([[data.draw(small)] for _ in range(m.rows)], 1)
    x, nullity = solve(m, rhs)
    assert nullity == m.cols - rank(m)
    consistent = to_sympy(m).rank() == to_sympy(m).row_join(to_sympy(rhs)).rank()
    assert (x is not None) == consistent
    if x is not None:
        assert m @ x == rhs


@settings(max_examples=40, deadline=None)
@given(matrices(4, 4), st.data())
def test_map_and_preimage(m, data):
    s = Subspace.span(data.draw(vector_sets(m.cols))[1], m.cols)
    img = s.map(m)
    assert img.issubspace(image(m))
    pre = img.preimage(m)
    assert s.issubspace(pre)
    assert kernel(m).issubspace(pre)
    assert pre.dim == (s + kernel(m)).dim
