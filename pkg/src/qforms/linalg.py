"""Gaussian elimination over the fraction field of truncated q-series.

Pivots are chosen by lowest valuation among entries that are provably
nonzero below their truncation. Truncation loss from every division is
carried by the QSeries arithmetic itself, so the returned entries report
exactly how far they are certified.
"""

from fractions import Fraction

from .qseries import QSeries


class SingularSystem(ArithmeticError):
    pass


def _pick_pivot(rows, col, start):
    best = None
    for i in range(start, len(rows)):
        e = rows[i][col]
        if e.is_zero():
            continue
        v = e.valuation()
        if best is None or v < best[0]:
            best = (v, i)
    return None if best is None else best[1]


def _eliminate(matrix, rhs):
    a = [list(row) for row in matrix]
    b = list(rhs) if rhs is not None else None
    n = len(a)
    sign = 1
    pivots = []
    for col in range(n):
        p = _pick_pivot(a, col, col)
        if p is None:
            raise SingularSystem(f"no certified pivot in column {col}; raise the truncation order")
        if p != col:
            a[col], a[p] = a[p], a[col]
            if b is not None:
                b[col], b[p] = b[p], b[col]
            sign = -sign
        piv = a[col][col]
        pivots.append(piv)
        for i in range(col + 1, n):
            m = a[i][col] / piv
            for j in range(col, n):
                a[i][j] = a[i][j] - m * a[col][j]
            if b is not None:
                b[i] = b[i] - m * b[col]
    return a, b, pivots, sign


def solve(matrix, rhs):
    """Solve matrix * x = rhs; every entry is a QSeries."""
    a, b, _, _ = _eliminate(matrix, rhs)
    n = len(a)
    x = [None] * n
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s = s - a[i][j] * x[j]
        x[i] = s / a[i][i]
    return x


def determinant(matrix):
    n = len(matrix)
    if n == 0:
        return QSeries.one()
    _, _, pivots, sign = _eliminate(matrix, None)
    d = pivots[0]
    for p in pivots[1:]:
        d = d * p
    return d if sign > 0 else -d


def exact_det(matrix):
    """Determinant of a square matrix of rationals (Fraction elimination)."""
    a = [[Fraction(x) for x in row] for row in matrix]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
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


def rational_rank_basis(vectors):
    """Indices of a maximal linearly independent subset of rational vectors."""
    basis = []  # list of (pivot_index, reduced_vector)
    chosen = []
    for idx, vec in enumerate(vectors):
        v = [Fraction(x) for x in vec]
        for p, bv in basis:
            if v[p]:
                f = v[p] / bv[p]
                v = [x - f * y for x, y in zip(v, bv)]
        nz = next((i for i, x in enumerate(v) if x), None)
        if nz is not None:
            basis.append((nz, v))
            chosen.append(idx)
    return chosen
