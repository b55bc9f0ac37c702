"""Exact linear algebra over the rationals.

Everything here works on :class:`fractions.Fraction` entries so that ranks,
kernels and span-membership tests carry no floating tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Iterable, Sequence

import numpy as np

Number = int | Fraction | str


def as_fraction(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # floats are only accepted when they are exactly representable
        # small decimals; route through str to avoid binary noise
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class RationalMatrix:
    """Immutable dense matrix of exact rationals."""

    rows: tuple[tuple[Fraction, ...], ...]
    ncols: int

    def __init__(self, rows: Iterable[Iterable[Number]], ncols: int | None = None):
        data = tuple(tuple(as_fraction(v) for v in row) for row in rows)
        if ncols is None:
            if not data:
                raise ValueError("ncols must be given for a matrix with no rows")
            ncols = len(data[0])
        for row in data:
            if len(row) != ncols:
                raise ValueError("ragged rows in RationalMatrix")
        object.__setattr__(self, "rows", data)
        object.__setattr__(self, "ncols", ncols)

    # -- construction -----------------------------------------------------
    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "RationalMatrix":
        return cls([[0] * ncols for _ in range(nrows)], ncols)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Number]], nrows: int) -> "RationalMatrix":
        cols = [list(c) for c in columns]
        for c in cols:
            if len(c) != nrows:
                raise ValueError("column length mismatch")
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(nrows)], len(cols))

    # -- shape / access ---------------------------------------------------
    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def __getitem__(self, index: tuple[int, int]) -> Fraction:
        i, j = index
        return self.rows[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.rows[i]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [self.column(j) for j in range(self.ncols)]

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix([self.column(j) for j in range(self.ncols)], self.nrows)

    def select_rows(self, indices: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix([self.rows[i] for i in indices], self.ncols)

    def select_columns(self, indices: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix([[r[j] for j in indices] for r in self.rows], len(indices))

    def hstack(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.nrows != other.nrows:
            raise ValueError("row count mismatch in hstack")
        return RationalMatrix(
            [a + b for a, b in zip(self.rows, other.rows)], self.ncols + other.ncols
        )

    def vstack(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.ncols != other.ncols:
            raise ValueError("column count mismatch in vstack")
        return RationalMatrix(self.rows + other.rows, self.ncols)

    # -- arithmetic -------------------------------------------------------
    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = other.columns()
        return RationalMatrix(
            [[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols] for r in self.rows],
            other.ncols,
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([[-v for v in r] for r in self.rows], self.ncols)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RationalMatrix(
            [[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)], self.ncols
        )

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self - (-other)

    def apply(self, vector: Sequence[Number]) -> tuple[Fraction, ...]:
        vec = [as_fraction(v) for v in vector]
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        return tuple(sum((a * b for a, b in zip(r, vec)), Fraction(0)) for r in self.rows)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.rows for v in r)

    # -- exact elimination ------------------------------------------------
    def rank(self) -> int:
        """Rank by fraction-free (Bareiss) elimination on an integer scaling."""
        if self.nrows == 0 or self.ncols == 0:
            return 0
        m = [_integer_row(r) for r in self.rows]
        nrows, ncols = len(m), self.ncols
        rank = 0
        prev = 1
        for col in range(ncols):
            pivot = next((i for i in range(rank, nrows) if m[i][col] != 0), None)
            if pivot is None:
                continue
            m[rank], m[pivot] = m[pivot], m[rank]
            p = m[rank][col]
            for i in range(rank + 1, nrows):
                a = m[i][col]
                m[i] = [(p * m[i][j] - a * m[rank][j]) // prev for j in range(ncols)]
            prev = p
            rank += 1
            if rank == nrows:
                break
        return rank

    def rref(self) -> tuple["RationalMatrix", tuple[int, ...]]:
        """Reduced row echelon form and the pivot columns."""
        m = [list(r) for r in self.rows]
        pivots: list[int] = []
        row = 0
        for col in range(self.ncols):
            pivot = next((i for i in range(row, self.nrows) if m[i][col] != 0), None)
            if pivot is None:
                continue
            m[row], m[pivot] = m[pivot], m[row]
            p = m[row][col]
            m[row] = [v / p for v in m[row]]
            for i in range(self.nrows):
                if i != row and m[i][col] != 0:
                    f = m[i][col]
                    m[i] = [a - f * b for a, b in zip(m[i], m[row])]
            pivots.append(col)
            row += 1
            if row == self.nrows:
                break
        return RationalMatrix(m, self.ncols), tuple(pivots)

    def nullspace(self) -> list[tuple[Fraction, ...]]:
        """Basis of the right kernel {v : Mv = 0}, each vector scaled to integers."""
        reduced, pivots = self.rref()
        free = [j for j in range(self.ncols) if j not in pivots]
        basis = []
        for f in free:
            vec = [Fraction(0)] * self.ncols
            vec[f] = Fraction(1)
            for r, p in enumerate(pivots):
                vec[p] = -reduced[r, f]
            basis.append(_primitive(vec))
        return basis

    def left_nullspace(self) -> list[tuple[Fraction, ...]]:
        """Basis of {w : wM = 0}."""
        return self.T.nullspace()

    def inverse(self) -> "RationalMatrix":
        n = self.nrows
        if n != self.ncols:
            raise ValueError("inverse of a non-square matrix")
        aug = self.hstack(RationalMatrix.identity(n))
        reduced, pivots = aug.rref()
        if pivots[:n] != tuple(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return reduced.select_columns(range(n, 2 * n))

    def column_span_contains(self, vector: Sequence[Number]) -> bool:
        vec = RationalMatrix.from_columns([vector], self.nrows)
        return self.hstack(vec).rank() == self.rank()

    def independent_rows(self) -> tuple[int, ...]:
        """Lexicographically first set of row indices forming a row basis."""
        _, pivots = self.T.rref()
        return pivots

    # -- conversion -------------------------------------------------------
    def to_numpy(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=float)
        for i, r in enumerate(self.rows):
            for j, v in enumerate(r):
                out[i, j] = float(v)
        return out

    def to_strings(self) -> list[list[str]]:
        return [[str(v) for v in r] for r in self.rows]

    @classmethod
    def from_strings(cls, data: Sequence[Sequence[str]], ncols: int | None = None) -> "RationalMatrix":
        return cls([[Fraction(s) for s in r] for r in data], ncols)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(v) for v in r) for r in self.rows)
        return f"RationalMatrix({self.nrows}x{self.ncols}: [{body}])"


def _integer_row(row: Sequence[Fraction]) -> list[int]:
    den = reduce(lcm, (v.denominator for v in row), 1)
    return [int(v * den) for v in row]


def _primitive(vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Scale a vector to coprime integers with a positive leading entry."""
    ints = _integer_row(vec)
    g = reduce(_gcd, ints, 0)
    if g == 0:
        return tuple(Fraction(0) for _ in vec)
    lead = next(v for v in ints if v != 0)
    if lead < 0:
        g = -g
    return tuple(Fraction(v // g) for v in ints)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def format_vector(vec: Sequence[Fraction]) -> str:
    return "(" + ", ".join(str(v) for v in vec) + ")"
