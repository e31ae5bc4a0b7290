"""Exact rational linear algebra.

Every matrix entry is a :class:`fractions.Fraction`; no floating point is
used anywhere.  Subspaces are stored by a basis in reduced row-echelon form,
so two constructions of the same subspace compare equal with ``==``.

Matrices act on column vectors: ``m @ v`` for ``v`` in ``Q^cols``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction
Vector = tuple  # tuple[Fraction, ...]


class DimensionError(ValueError):
    """Raised when operands live in incompatible ambient spaces."""


def to_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact arithmetic")
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class Matrix:
    rows: int
    cols: int
    entries: tuple  # row-major tuple of Fraction

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"entries length {len(self.entries)} != {self.rows}x{self.cols}"
            )

    # construction -----------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "Matrix":
        rows = [list(r) for r in rows]
        if cols is None:
            if not rows:
                raise DimensionError("column count needed for a matrix with no rows")
            cols = len(rows[0])
        flat = []
        for r in rows:
            if len(r) != cols:
                raise DimensionError(f"ragged row of length {len(r)}, expected {cols}")
            flat.extend(to_rational(x) for x in r)
        return cls(len(rows), cols, tuple(flat))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> "Matrix":
        return cls.from_rows([[c[r] for c in columns] for r in range(rows)], len(columns))

    @classmethod
    def zero(cls, rows: int, cols: int) -> "Matrix":
        return cls(rows, cols, (Fraction(0),) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        one, zero = Fraction(1), Fraction(0)
        return cls(n, n, tuple(one if i == j else zero for i in range(n) for j in range(n)))

    @classmethod
    def diag(cls, values: Sequence) -> "Matrix":
        n = len(values)
        zero = Fraction(0)
        return cls(
            n, n,
            tuple(to_rational(values[i]) if i == j else zero for i in range(n) for j in range(n)),
        )

    @classmethod
    def block_diag(cls, blocks: Sequence["Matrix"]) -> "Matrix":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        out = [[Fraction(0)] * cols for _ in range(rows)]
        r0 = c0 = 0
        for b in blocks:
            for i, row in enumerate(b.to_rows()):
                out[r0 + i][c0:c0 + b.cols] = row
            r0 += b.rows
            c0 += b.cols
        return cls.from_rows(out, cols)

    # access -----------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        return self.entries[j::self.cols] if self.cols else ()

    def to_rows(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def T(self) -> "Matrix":
        return Matrix.from_rows([list(self.col(j)) for j in range(self.cols)], self.rows)

    def is_zero(self) -> bool:
        return not any(self.entries)

    def is_square(self) -> bool:
        return self.rows == self.cols

    # arithmetic -------------------------------------------------------

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            return matmul(self, other)
        return apply(self, other)

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return Matrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot subtract {self.shape} and {other.shape}")
        return Matrix(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(-a for a in self.entries))

    def scale(self, c) -> "Matrix":
        c = to_rational(c)
        return Matrix(self.rows, self.cols, tuple(c * a for a in self.entries))

    def power(self, k: int) -> "Matrix":
        if not self.is_square():
            raise DimensionError("power of a non-square matrix")
        out = Matrix.identity(self.rows)
        for _ in range(k):
            out = out @ self
        return out

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Matrix":
        return Matrix.from_rows([[self[i, j] for j in cols] for i in rows], len(cols))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in self.row(i)) for i in range(self.rows))
        return f"Matrix({self.rows}x{self.cols}: [{body}])"


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    bcols = [b.col(j) for j in range(b.cols)]
    out = []
    zero = Fraction(0)
    for i in range(a.rows):
        arow = a.row(i)
        nz = [(k, x) for k, x in enumerate(arow) if x]
        for j in range(b.cols):
            bc = bcols[j]
            s = zero
            for k, x in nz:
                y = bc[k]
                if y:
                    s += x * y
            out.append(s)
    return Matrix(a.rows, b.cols, tuple(out))


def apply(m: Matrix, v: Sequence) -> tuple:
    if len(v) != m.cols:
        raise DimensionError(f"cannot apply {m.shape} matrix to a vector of length {len(v)}")
    zero = Fraction(0)
    out = []
    for i in range(m.rows):
        s = zero
        for x, y in zip(m.row(i), v):
            if x and y:
                s += x * y
        out.append(s)
    return tuple(out)


def hstack(mats: Sequence[Matrix], rows: int | None = None) -> Matrix:
    if not mats:
        return Matrix.zero(rows or 0, 0)
    r = mats[0].rows
    if any(m.rows != r for m in mats):
        raise DimensionError("hstack of matrices with different row counts")
    return Matrix.from_rows(
        [[x for m in mats for x in m.row(i)] for i in range(r)],
        sum(m.cols for m in mats),
    )


def vstack(mats: Sequence[Matrix], cols: int | None = None) -> Matrix:
    if not mats:
        return Matrix.zero(0, cols or 0)
    c = mats[0].cols
    if any(m.cols != c for m in mats):
        raise DimensionError("vstack of matrices with different column counts")
    return Matrix(sum(m.rows for m in mats), c, tuple(x for m in mats for x in m.entries))


# row reduction ----------------------------------------------------------


def _rref_rows(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """In-place Gauss-Jordan elimination; returns nonzero rows and pivot columns."""
    rows = [r for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        p = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            prow = rows[r] = [x * inv for x in prow]
        nzc = [j for j in range(c, ncols) if prow[j]]
        for i in range(len(rows)):
            if i != r:
                f = rows[i][c]
                if f:
                    ri = rows[i]
                    for j in nzc:
                        ri[j] -= f * prow[j]
        pivots.append(c)
        r += 1
    return rows[:r], pivots


def canonicalize(m: Matrix) -> Matrix:
    """Reduced row-echelon form of ``m`` with zero rows dropped."""
    rows, _ = _rref_rows(m.to_rows(), m.cols)
    return Matrix.from_rows(rows, m.cols)


def rank(m: Matrix) -> int:
    return len(_rref_rows(m.to_rows(), m.cols)[1])


# subspaces ---------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``Q^ambient_dim``; ``basis`` rows are in RREF."""

    ambient_dim: int
    basis: tuple  # tuple of row tuples

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient_dim: int) -> "Subspace":
        rows = [[to_rational(x) for x in v] for v in vectors]
        for v in rows:
            if len(v) != ambient_dim:
                raise DimensionError(f"vector of length {len(v)} in Q^{ambient_dim}")
        red, _ = _rref_rows(rows, ambient_dim)
        return cls(ambient_dim, tuple(tuple(r) for r in red))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, tuple(Matrix.identity(n).row(i) for i in range(n)))

    @classmethod
    def coordinate(cls, n: int, indices: Iterable[int]) -> "Subspace":
        idx = sorted(set(indices))
        one, zero = Fraction(1), Fraction(0)
        return cls(n, tuple(tuple(one if j == i else zero for j in range(n)) for i in idx))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> list[int]:
        return [next(j for j, x in enumerate(r) if x) for r in self.basis]

    def matrix(self) -> Matrix:
        """Basis vectors as rows."""
        return Matrix(self.dim, self.ambient_dim, tuple(x for r in self.basis for x in r))

    def columns(self) -> Matrix:
        """Basis vectors as columns (an ``ambient_dim x dim`` inclusion)."""
        return self.matrix().T

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def reduce(self, v: Sequence) -> list[Fraction]:
        """Remainder of ``v`` after clearing the pivot columns of the basis."""
        v = [to_rational(x) for x in v]
        for r, p in zip(self.basis, self.pivots):
            f = v[p]
            if f:
                for j, x in enumerate(r):
                    if x:
                        v[j] -= f * x
        return v

    def contains(self, v: Sequence) -> bool:
        if len(v) != self.ambient_dim:
            raise DimensionError(f"vector of length {len(v)} tested against Q^{self.ambient_dim}")
        return not any(self.reduce(v))

    def __contains__(self, v) -> bool:
        return self.contains(v)

    def issubspace(self, other: "Subspace") -> bool:
        _check_same(self, other)
        return all(other.contains(v) for v in self.basis)

    __le__ = issubspace

    def __add__(self, other: "Subspace") -> "Subspace":
        return subspace_sum(self, other)

    def __and__(self, other: "Subspace") -> "Subspace":
        return intersect(self, other)

    def map(self, m: Matrix) -> "Subspace":
        """Image of this subspace under ``m``."""
        if m.cols != self.ambient_dim:
            raise DimensionError(f"cannot map Q^{self.ambient_dim} by a {m.shape} matrix")
        return Subspace.span([apply(m, v) for v in self.basis], m.rows)

    def preimage(self, m: Matrix) -> "Subspace":
        """``{v : m v in self}``."""
        if m.rows != self.ambient_dim:
            raise DimensionError(f"cannot pull Q^{self.ambient_dim} back along a {m.shape} matrix")
        quotient = quotient_with_projection(self.ambient_dim, self)[1]
        return kernel(quotient @ m)

    def __repr__(self) -> str:
        rows = ", ".join("(" + ", ".join(str(x) for x in r) + ")" for r in self.basis)
        return f"Subspace(Q^{self.ambient_dim}: {{{rows}}})"


def _check_same(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")


def kernel(m: Matrix) -> Subspace:
    rows, pivots = _rref_rows(m.to_rows(), m.cols)
    free = [j for j in range(m.cols) if j not in set(pivots)]
    vecs = []
    for f in free:
        v = [Fraction(0)] * m.cols
        v[f] = Fraction(1)
        for r, p in zip(rows, pivots):
            v[p] = -r[f]
        vecs.append(v)
    return Subspace.span(vecs, m.cols)


def image(m: Matrix) -> Subspace:
    return Subspace.span([m.col(j) for j in range(m.cols)], m.rows)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check_same(a, b)
    return Subspace.span(list(a.basis) + list(b.basis), a.ambient_dim)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _check_same(a, b)
    if a.is_zero() or b.is_zero():
        return Subspace.zero(a.ambient_dim)
    if a.is_full():
        return b
    if b.is_full():
        return a
    # a ∩ b = kernel of the quotient map by b, restricted to a
    q = quotient_with_projection(b.ambient_dim, b)[1]
    coeffs = kernel(q @ a.columns())
    return coeffs.map(a.columns())


def intersect_all(spaces: Sequence[Subspace], ambient_dim: int) -> Subspace:
    out = Subspace.full(ambient_dim)
    for s in spaces:
        out = intersect(out, s)
    return out


def sum_all(spaces: Sequence[Subspace], ambient_dim: int) -> Subspace:
    return Subspace.span([v for s in spaces for v in s.basis], ambient_dim)


def orthogonal_complement(s: Subspace, form: Matrix) -> Subspace:
    """``{w : v^T form w = 0 for all v in s}`` inside the partner space ``Q^form.cols``."""
    if form.rows != s.ambient_dim:
        raise DimensionError(
            f"form of shape {form.shape} does not pair with Q^{s.ambient_dim}"
        )
    if s.is_zero():
        return Subspace.full(form.cols)
    return kernel(s.matrix() @ form)


def quotient_with_projection(ambient_dim: int, s: Subspace) -> tuple[Matrix, Matrix]:
    """Return ``(section, projection)`` for the quotient ``Q^ambient_dim / s``.

    ``section`` has as columns the standard basis vectors at the non-pivot
    columns of ``s``; ``projection`` is surjective with kernel exactly ``s``
    and ``projection @ section`` is the identity.
    """
    if s.ambient_dim != ambient_dim:
        raise DimensionError(f"subspace of Q^{s.ambient_dim} in Q^{ambient_dim}")
    pivots = s.pivots
    pivset = set(pivots)
    free = [j for j in range(ambient_dim) if j not in pivset]
    where = {f: i for i, f in enumerate(free)}
    q = len(free)
    cols = []
    row_of_pivot = dict(zip(pivots, s.basis))
    for j in range(ambient_dim):
        col = [Fraction(0)] * q
        if j in pivset:
            r = row_of_pivot[j]
            for f, i in where.items():
                col[i] = -r[f]
        else:
            col[where[j]] = Fraction(1)
        cols.append(col)
    projection = Matrix.from_rows([[cols[j][i] for j in range(ambient_dim)] for i in range(q)], ambient_dim)
    section = Matrix.from_rows(
        [[Fraction(1) if f == r else Fraction(0) for f in free] for r in range(ambient_dim)], q
    )
    return section, projection


def complement_in(sub: Subspace, sup: Subspace) -> Subspace:
    """Canonical complement of ``sub`` inside ``sup`` (requires ``sub <= sup``).

    Vectors of ``sup`` are reduced modulo ``sub``; the span of the remainders
    meets ``sub`` trivially because it vanishes on the pivots of ``sub``.
    """
    _check_same(sub, sup)
    return Subspace.span([sub.reduce(v) for v in sup.basis], sup.ambient_dim)


def inverse(m: Matrix) -> Matrix:
    if not m.is_square():
        raise DimensionError(f"cannot invert a {m.shape} matrix")
    n = m.rows
    aug = [r + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m.to_rows())]
    rows, pivots = _rref_rows(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(rows) < n:
        raise ZeroDivisionError("matrix is singular")
    return Matrix.from_rows([r[n:] for r in rows], n)


def is_invertible(m: Matrix) -> bool:
    return m.is_square() and rank(m) == m.rows


def determinant(m: Matrix) -> Fraction:
    if not m.is_square():
        raise DimensionError(f"determinant of a {m.shape} matrix")
    a = m.to_rows()
    n = m.rows
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            if f:
                for j in range(c, n):
                    a[i][j] -= f * a[c][j]
    return det


def solve(m: Matrix, rhs: Matrix) -> tuple[Matrix | None, int]:
    """Solve ``m X = rhs``.

    Returns ``(X, nullity)`` where ``X`` is the particular solution with free
    variables set to zero (``None`` if inconsistent) and ``nullity`` is the
    dimension of the homogeneous solution space.
    """
    if m.rows != rhs.rows:
        raise DimensionError(f"system {m.shape} with right-hand side {rhs.shape}")
    n = m.cols
    aug = [r + list(rhs.row(i)) for i, r in enumerate(m.to_rows())]
    rows, pivots = _rref_rows(aug, n + rhs.cols)
    nullity = n - sum(1 for p in pivots if p < n)
    if any(p >= n for p in pivots):
        return None, nullity
    out = [[Fraction(0)] * rhs.cols for _ in range(n)]
    for r, p in zip(rows, pivots):
        out[p] = r[n:]
    return Matrix.from_rows(out, rhs.cols), nullity
