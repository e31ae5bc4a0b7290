from __future__ import annotations

import re
from fractions import Fraction

import sympy

from dtproj.linalg import Matrix

ACCEPTANCE = "test_acceptance.py"
_criteria: dict[int, list[str]] = {}


def to_sympy(m: Matrix) -> sympy.Matrix:
    return sympy.Matrix(m.rows, m.cols, [sympy.Rational(x.numerator, x.denominator) for x in m.entries])


def from_sympy(m: sympy.Matrix) -> Matrix:
    rows = [[Fraction(int(x.p), int(x.q)) for x in m.row(i)] for i in range(m.rows)]
    return Matrix.from_rows(rows, m.cols)


def sympy_rref_rows(vectors, n: int) -> list[tuple]:
    """Canonical basis of a span, computed by sympy."""
    if not vectors:
        return []
    r, piv = sympy.Matrix(vectors).rref()
    return [tuple(Fraction(int(x.p), int(x.q)) for x in r.row(i)) for i in range(len(piv))]


def pytest_runtest_logreport(report):
    if ACCEPTANCE not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcomes = _criteria[n]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status} ({len(outcomes)} test(s))")
