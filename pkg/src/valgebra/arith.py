"""Kernel-wide arithmetic mode and the few exact primitives built on it.

Two modes exist: ``"exact"`` stores coordinates as :class:`fractions.Fraction`
and ``"float"`` stores Python floats.  The mode is a process-wide setting
read when bodies and maps are constructed; operations on values built
under different modes raise :class:`MixedArithmeticError`.
"""
from __future__ import annotations

import contextlib
import math
import threading
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

EXACT = "exact"
FLOAT = "float"

_state = threading.local()
_default_mode = FLOAT


class MixedArithmeticError(ValueError):
    pass


def get_mode() -> str:
    return getattr(_state, "mode", _default_mode)


def set_mode(mode: str) -> None:
    """Set the arithmetic mode for the calling thread (and the default for new threads)."""
    global _default_mode
    if mode not in (EXACT, FLOAT):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    _state.mode = mode
    _default_mode = mode


@contextlib.contextmanager
def arithmetic(mode: str) -> Iterator[str]:
    """Temporarily switch the arithmetic mode for the calling thread."""
    if mode not in (EXACT, FLOAT):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    previous = get_mode()
    _state.mode = mode
    try:
        yield mode
    finally:
        _state.mode = previous


def is_exact_mode() -> bool:
    return get_mode() == EXACT


def parse_number(x, exact: bool | None = None):
    """Convert ``x`` (int, float, Fraction or a ``"p/q"`` string) to the mode's number type."""
    if exact is None:
        exact = is_exact_mode()
    if exact:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ValueError(f"non-finite coordinate {x!r}")
            return Fraction(x)
        if isinstance(x, (np.floating,)):
            return Fraction(float(x))
        if isinstance(x, (np.integer,)):
            return Fraction(int(x))
        return Fraction(x)
    if isinstance(x, str):
        return float(Fraction(x))
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"non-finite coordinate {x!r}")
    return v


def format_number(x) -> float | str:
    """JSON-friendly form: exact values become ``"p/q"`` strings, floats stay floats."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return float(x)


def common_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, v.denominator)
    return d


def det_int(rows: Sequence[Sequence[int]]) -> int:
    """Determinant of an integer matrix by fraction-free (Bareiss) elimination."""
    n = len(rows)
    if n == 0:
        return 1
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            mik = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - mik * row_k[j]) // prev
        prev = pivot
    return sign * m[n - 1][n - 1]


def det_exact(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    d = common_denominator(v for r in rows for v in r)
    ints = [[int(v * d) for v in r] for r in rows]
    return Fraction(det_int(ints), d ** n)


def determinant(rows):
    """Determinant in the number type of the entries."""
    if rows and isinstance(rows[0][0], Fraction):
        return det_exact(rows)
    if len(rows) == 0:
        return 1.0
    return float(np.linalg.det(np.asarray(rows, dtype=float)))


def row_reduce_exact(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns (rref rows, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def solve_exact(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve a square nonsingular rational system ``a x = b``."""
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    red, piv = row_reduce_exact(aug)
    if piv[:n] != list(range(n)) or len(piv) > n:
        raise np.linalg.LinAlgError("singular system")
    return [red[i][n] for i in range(n)]


def pivot_columns(diffs, exact: bool, tol: float = 1e-10) -> list[int]:
    """Columns giving a coordinate projection injective on the span of ``diffs``.

    The number of returned columns is the rank of ``diffs``.
    """
    if len(diffs) == 0:
        return []
    if exact:
        n = len(diffs[0])
        if len(diffs) >= n:
            # certify full rank with n rows picked by a float pivoted QR
            import scipy.linalg

            a = np.asarray(diffs, dtype=float)
            _, _, perm = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
            rows = [diffs[int(i)] for i in perm[:n]]
            if det_exact(rows) != 0:
                return list(range(n))
        _, piv = row_reduce_exact(diffs)
        return piv
    import scipy.linalg

    a = np.asarray(diffs, dtype=float)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return []
    _, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(scale, diag[0] if diag.size else 0.0)))
    return sorted(int(p) for p in perm[:rank])
