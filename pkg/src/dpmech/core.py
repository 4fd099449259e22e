"""Mechanism data model, validity/privacy predicates, structural properties,
objective functions and the symmetrization transform.

A mechanism over a group of ``n`` individuals is an ``(n+1) x (n+1)`` column
stochastic matrix ``P`` with ``P[i, j] = Pr[output i | true count j]``.
Everything here is pure and mechanisms are immutable, so values can be shared
freely across threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    ColumnSumError,
    DimensionMismatch,
    EntryOutOfRange,
    ParseError,
    UndefinedForN0,
)

#: Canonical names of the seven structural properties.
PROPERTIES = ("RH", "RM", "CH", "CM", "F", "WH", "S")

_DEFAULT_TOL = 1e-9


def tolerance() -> float:
    """Validation/predicate tolerance; DPMECH_TOL overrides the 1e-9 default."""
    raw = os.environ.get("DPMECH_TOL")
    return float(raw) if raw else _DEFAULT_TOL


def _check_alpha(alpha: float, *, open_top: bool = False) -> float:
    """Validate a privacy level; (0, 1] by default, (0, 1) with open_top."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0 or (open_top and alpha == 1.0):
        top = "1)" if open_top else "1]"
        raise AlphaOutOfRange(f"alpha must lie in (0, {top}, got {alpha}")
    return alpha


class Mechanism:
    """Validated, immutable column-stochastic mechanism matrix."""

    __slots__ = ("matrix", "n")

    def __init__(self, entries, *, tol: float | None = None):
        tol = tolerance() if tol is None else tol
        matrix = np.array(entries, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise DimensionMismatch(f"expected a square matrix, got shape {matrix.shape}")
        if matrix.min() < -tol or matrix.max() > 1.0 + tol:
            bad = np.unravel_index(
                np.argmax(np.maximum(-matrix, matrix - 1.0)), matrix.shape)
            raise EntryOutOfRange(
                f"entry {matrix[bad]} at {bad} outside [0, 1] (tol {tol})")
        sums = matrix.sum(axis=0)
        off = np.abs(sums - 1.0)
        if off.max() > tol:
            j = int(np.argmax(off))
            raise ColumnSumError(f"column {j} sums to {sums[j]}, not 1 (tol {tol})")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.n = matrix.shape[0] - 1

    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def __repr__(self) -> str:
        return f"Mechanism(n={self.n}, trace={self.trace():.6f})"


def new_mechanism(n: int, entries, tol: float | None = None) -> Mechanism:
    """Build a Mechanism after checking the entries match the stated group size."""
    entries = np.asarray(entries, dtype=np.float64)
    if entries.shape != (n + 1, n + 1):
        raise DimensionMismatch(
            f"expected shape {(n + 1, n + 1)} for n={n}, got {entries.shape}")
    return Mechanism(entries, tol=tol)


def is_dp(mech: Mechanism, alpha: float, tol: float | None = None) -> bool:
    """True when every pair of row-adjacent entries satisfies the ratio bound.

    Checked multiplicatively (``alpha*x - y <= tol`` in both directions) so
    zero entries are legal inputs; a zero next to a nonzero entry in a row
    fails for any alpha materially above tol.
    """
    alpha = _check_alpha(alpha)
    tol = tolerance() if tol is None else tol
    left = mech.matrix[:, :-1]
    right = mech.matrix[:, 1:]
    return bool(np.all(alpha * right - left <= tol)
                and np.all(alpha * left - right <= tol))


def check_property(mech: Mechanism, prop: str, tol: float | None = None) -> bool:
    """Evaluate one of the seven structural properties with additive slack."""
    tol = tolerance() if tol is None else tol
    m = mech.matrix
    n = mech.n
    diag = np.diagonal(m)
    if prop == "RH":
        return bool(np.all(m <= diag[:, None] + tol))
    if prop == "CH":
        return bool(np.all(m <= diag[None, :] + tol))
    if prop == "RM":
        # row entries non-increasing moving away from the diagonal
        i = np.arange(n + 1)[:, None]
        k = np.arange(n)[None, :]
        toward = m[:, :-1] <= m[:, 1:] + tol
        away = m[:, 1:] <= m[:, :-1] + tol
        return bool(np.all(np.where(k < i, toward, away)))
    if prop == "CM":
        k = np.arange(n)[:, None]
        j = np.arange(n + 1)[None, :]
        toward = m[:-1, :] <= m[1:, :] + tol
        away = m[1:, :] <= m[:-1, :] + tol
        return bool(np.all(np.where(k < j, toward, away)))
    if prop == "F":
        return bool(np.all(np.abs(diag - diag[0]) <= tol))
    if prop == "WH":
        return bool(np.all(diag >= 1.0 / (n + 1) - tol))
    if prop == "S":
        return bool(np.all(np.abs(m - m[::-1, ::-1]) <= tol))
    raise ValueError(f"unknown property {prop!r}; expected one of {PROPERTIES}")


def implied_properties(props) -> frozenset:
    """Close a property set under RM=>RH, CM=>CH and CH=>WH."""
    out = set(props)
    for p in out:
        if p not in PROPERTIES:
            raise ValueError(f"unknown property {p!r}")
    if "RM" in out:
        out.add("RH")
    if "CM" in out:
        out.add("CH")
    if "CH" in out:
        out.add("WH")
    return frozenset(out)


def uniform_weights(n: int) -> np.ndarray:
    w = np.full(n + 1, 1.0 / (n + 1))
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class Objective:
    """Parameters of the expected-distance loss.

    ``p`` is the distance exponent, ``weights`` a prior over true counts,
    ``d`` the tail offset (only cells with |i-j| >= d count, with d forced to
    at least 1 when p == 0 so the diagonal never contributes), ``rescale``
    multiplies by (n+1)/n so the input-blind uniform mechanism costs 1.
    """

    p: int
    weights: np.ndarray
    aggregator: str = "sum"
    d: int = 0
    rescale: bool = False

    def __post_init__(self):
        if self.p < 0 or int(self.p) != self.p:
            raise ValueError(f"p must be a non-negative integer, got {self.p}")
        if self.d < 0 or int(self.d) != self.d:
            raise ValueError(f"d must be a non-negative integer, got {self.d}")
        if self.aggregator not in ("sum", "max"):
            raise ValueError(f"aggregator must be 'sum' or 'max', got {self.aggregator!r}")
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise DimensionMismatch("weights must be a 1-D vector")
        if w.min() < 0.0:
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > tolerance():
            raise ValueError(f"weights must sum to 1, got {w.sum()}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def l0_objective(n: int) -> Objective:
    return Objective(p=0, weights=uniform_weights(n), d=0, rescale=True)


def l0d_objective(n: int, d: int) -> Objective:
    return Objective(p=0, weights=uniform_weights(n), d=d, rescale=True)


def l1_objective(n: int) -> Objective:
    return Objective(p=1, weights=uniform_weights(n))


def l2_objective(n: int) -> Objective:
    return Objective(p=2, weights=uniform_weights(n))


def _distance_mask(n: int, p: int, d: int):
    dist = np.abs(np.subtract.outer(np.arange(n + 1), np.arange(n + 1)))
    d_eff = max(d, 1) if p == 0 else d
    mask = dist >= d_eff
    factor = mask.astype(np.float64) if p == 0 else np.where(mask, dist.astype(np.float64) ** p, 0.0)
    return factor


def objective_value(mech: Mechanism, obj: Objective) -> float:
    """Evaluate the loss of a mechanism under the given objective."""
    n = mech.n
    if obj.weights.size != n + 1:
        raise DimensionMismatch(
            f"objective weights have length {obj.weights.size}, mechanism needs {n + 1}")
    if obj.d > n:
        raise DimensionMismatch(f"tail offset d={obj.d} exceeds group size n={n}")
    if obj.rescale and n == 0:
        raise UndefinedForN0("rescaled objectives are undefined for n=0")
    factor = _distance_mask(n, obj.p, obj.d)
    per_column = (mech.matrix * factor).sum(axis=0)
    if obj.aggregator == "sum":
        value = float(obj.weights @ per_column)
    else:
        value = float(per_column.max())
    if obj.rescale:
        value *= (n + 1) / n
    return value


def l0_score(mech: Mechanism) -> float:
    """Rescaled wrong-answer probability: (n+1)/n - trace/n."""
    if mech.n == 0:
        raise UndefinedForN0("l0 score is undefined for n=0")
    n = mech.n
    return (n + 1) / n - mech.trace() / n


def l0d_score(mech: Mechanism, d: int) -> float:
    """Rescaled probability mass at distance >= d from the truth (uniform prior)."""
    if d == 0:
        return l0_score(mech)
    return objective_value(mech, l0d_objective(mech.n, d))


def symmetrize(mech: Mechanism) -> Mechanism:
    """Average a mechanism with its 180-degree rotation.

    The result is centrosymmetric, the trace (and thus the rescaled
    wrong-answer cost) is preserved, and any of DP/RM/RH/CM/CH/F/WH that
    held before still holds.
    """
    m = mech.matrix
    return Mechanism((m + m[::-1, ::-1]) / 2.0)


# ---------------------------------------------------------------------------
# mechanism CSV format
# ---------------------------------------------------------------------------
# line 1: "n,alpha" with alpha = NA when unknown; then n+1 rows of n+1
# comma-separated probabilities, 17 significant digits (exact round trip).
# Row index = output i, column index = input j.

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_mechanism_csv(mech: Mechanism, path, alpha: float | None = None) -> None:
    lines = [f"{mech.n},{'NA' if alpha is None else _fmt(float(alpha))}"]
    for row in mech.matrix:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mechanism_csv(path) -> tuple[Mechanism, float | None]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty mechanism file")
    head = lines[0].split(",")
    if len(head) != 2:
        raise ParseError(f"{path}: line 1 must be 'n,alpha', got {lines[0]!r}")
    try:
        n = int(head[0])
    except ValueError:
        raise ParseError(f"{path}: line 1: bad group size {head[0]!r}") from None
    alpha: float | None
    if head[1] == "NA":
        alpha = None
    else:
        try:
            alpha = float(head[1])
        except ValueError:
            raise ParseError(f"{path}: line 1: bad alpha {head[1]!r}") from None
    if len(lines) != n + 2:
        raise ParseError(f"{path}: expected {n + 1} matrix rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != n + 1:
            raise ParseError(f"{path}: line {k}: expected {n + 1} values, found {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(f"{path}: line {k}: non-numeric entry") from None
    return new_mechanism(n, np.array(rows)), alpha
