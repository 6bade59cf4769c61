"""Effective-efficiency bound curves.

For a candidate competitive ratio ``c`` the adversary's one-slot bid sequence
is a_1 = 1, a_2 = 1/c and c*a_{k+1} = (1+c)*a_k - (1+alpha)*a_{k-1}. The upper
bound c_n is the smallest c in (0, 1) with a_n = (1+alpha)*a_{n-1}.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
DEFAULT_GRID = 10_000
GOLDEN = (math.sqrt(5) - 1) / 2
FIBONACCI_N = (2, 3, 5, 8, 13, 21, 34, 55, 89, 144)


def recursion_sequence(c: float, alpha: float, n: int) -> list[float]:
    if c == 0:
        raise ZeroDivisionError("c must be non-zero")
    if n < 1:
        raise ValueError("n must be >= 1")
    a = [1.0, 1.0 / c]
    while len(a) < n:
        a.append(((1 + c) * a[-1] - (1 + alpha) * a[-2]) / c)
    return a[:n]


def residual(c: float, alpha: float, n: int) -> float:
    a = recursion_sequence(c, alpha, n)
    return a[n - 1] - (1 + alpha) * a[n - 2]


def residual_sign_array(c: np.ndarray, alpha: float, n: int) -> np.ndarray:
    """Residual of the recurrence at many c at once, rescaled each step.

    The recurrence is linear, so dividing the running pair (a_{k-1}, a_k) by a
    positive number rescales the final residual by a positive factor and keeps
    its sign. Only the sign is meaningful in the result.
    """
    c = np.asarray(c, dtype=float)
    prev = np.ones_like(c)
    cur = 1.0 / c
    for _ in range(n - 2):
        nxt = ((1 + c) * cur - (1 + alpha) * prev) / c
        scale = np.maximum(np.abs(cur), np.abs(nxt))
        scale[scale == 0] = 1.0
        prev, cur = cur / scale, nxt / scale
    return cur - (1 + alpha) * prev


def root_brackets(alpha: float, n: int, grid: int = DEFAULT_GRID) -> list[tuple[float, float]]:
    """Grid cells of (0, 1) on which the residual changes sign (or hits zero)."""
    c = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    s = np.sign(residual_sign_array(c, alpha, n))
    out = []
    for k in range(len(c)):
        if s[k] == 0:
            out.append((float(c[k]), float(c[k])))
        elif k + 1 < len(c) and s[k] * s[k + 1] < 0:
            out.append((float(c[k]), float(c[k + 1])))
    return out


def _bisect(alpha: float, n: int, lo: float, hi: float, tol: float) -> float:
    s_lo = np.sign(residual_sign_array(np.array([lo]), alpha, n)[0])
    while hi - lo > tol:
        mid = (lo + hi) / 2
        s_mid = np.sign(residual_sign_array(np.array([mid]), alpha, n)[0])
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def solve_c_n(alpha: float, n: int, tol: float = DEFAULT_TOL, grid: int = DEFAULT_GRID) -> float | None:
    """Smallest root of the residual in (0, 1), or None when no sign change is found."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n < 2:
        raise ValueError("n must be >= 2")
    brackets = root_brackets(alpha, n, grid)
    if not brackets:
        return None
    lo, hi = brackets[0]
    return lo if lo == hi else _bisect(alpha, n, lo, hi, tol)


def c2(alpha: float) -> float:
    return 1 / (1 + alpha)


def c3(alpha: float) -> float:
    return 1 / (1 + 2 * alpha)


def c4(alpha: float) -> float:
    return 2 / (1 + 3 * alpha + math.sqrt((1 + 5 * alpha) * (1 + alpha)))


def limit_curve(alpha: float) -> float:
    """Ratio at which the recurrence's characteristic polynomial has a double root."""
    return 2 * alpha + 1 - 2 * math.sqrt(alpha * (alpha + 1))


def effective_efficiency_bound(alpha: float, gamma: float) -> float:
    return (1 - alpha / gamma) / (1 + gamma)


def lower_bound_curve(alpha: float) -> tuple[float, float]:
    """Best gamma for the mechanism's effective-efficiency guarantee and its value.

    Past the golden-ratio threshold the optimum sits on the boundary
    gamma = alpha/(1-alpha), which the parameter check itself excludes; the value
    is then a supremum over admissible gamma.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    gamma0 = max(alpha + math.sqrt(alpha * alpha + alpha), alpha / (1 - alpha))
    return gamma0, effective_efficiency_bound(alpha, gamma0)


@dataclass
class BoundCurvePoint:
    alpha: float
    c3: float
    cn_min: float
    n_argmin: int
    lower_bound: float
    gamma0: float
    limit: float


FIGURE_COLUMNS = ("alpha", "c3", "cn_min", "n_argmin", "lower_bound", "gamma0", "limit")


def emit_figure_data(
    alpha_grid: Iterable[float],
    n_list: Sequence[int] = FIBONACCI_N,
    tol: float = DEFAULT_TOL,
    grid: int = DEFAULT_GRID,
) -> list[BoundCurvePoint]:
    rows = []
    for alpha in alpha_grid:
        if not 0 < alpha < 1:
            raise ValueError(f"alpha {alpha} outside (0, 1)")
        best, best_n = math.inf, -1
        for n in n_list:
            c = solve_c_n(alpha, n, tol, grid)
            if c is not None and c < best:
                best, best_n = c, n
        gamma0, lb = lower_bound_curve(alpha)
        rows.append(BoundCurvePoint(alpha, c3(alpha), best, best_n, lb, gamma0, limit_curve(alpha)))
    return rows


def alpha_grid(start: float, stop: float, steps: int) -> list[float]:
    return [round(float(x), 12) for x in np.linspace(start, stop, steps)]


def figure_csv(rows: Iterable[BoundCurvePoint]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(FIGURE_COLUMNS)
    for r in rows:
        out.writerow([format(getattr(r, k), ".12g") if k != "n_argmin" else r.n_argmin for k in FIGURE_COLUMNS])
    return buf.getvalue()
