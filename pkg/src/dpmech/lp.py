"""Linear-program construction and a dense two-phase primal simplex solver.

``build_lp`` encodes the feasible region of alpha-private mechanisms --
per-entry probability bounds, column-sum equalities and the adjacent-column
ratio inequalities -- plus one linear row per requested structural property,
over variables rho[i, j] flattened row-major as i*(n+1)+j.

``solve_lp`` is deliberately self-contained (dense tableau, Dantzig pricing
with a permanent switch to Bland's rule after a degenerate streak, pivot
magnitude threshold 1e-12, final basis re-solve for a clean vertex).  The
pivot loop runs on the numba backend when available; see ``_kernels``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Mechanism, Objective, _check_alpha, tolerance
from .errors import LpInternalError, NumericalInstability, UnsupportedObjective

REL_LE = -1
REL_EQ = 0
REL_GE = 1

_REL_TEXT = {REL_LE: "<=", REL_EQ: "==", REL_GE: ">="}

_FEAS_TOL = 1e-7
_RC_TOL = 1e-10
_PIVOT_TOL = 1e-12

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


@dataclass(eq=False)
class LinearProgram:
    """minimize c.x subject to a x {<=,==,>=} b and lo <= x <= hi."""

    c: np.ndarray
    a: np.ndarray
    rel: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64).reshape(-1, self.c.size)
        self.rel = np.asarray(self.rel, dtype=np.int8)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if not (self.a.shape[0] == self.rel.size == self.b.size):
            raise ValueError("constraint arrays disagree in length")
        if not (self.c.size == self.lo.size == self.hi.size):
            raise ValueError("bound arrays disagree with variable count")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_constraints(self) -> int:
        return self.b.size

    def dump(self, fh) -> None:
        """Plain-text dump, one constraint per line: coefficients, relation, rhs."""
        fh.write("minimize " + " ".join(f"{v:.12f}" for v in self.c) + "\n")
        for k in range(self.num_vars):
            fh.write(f"bound x{k} {self.lo[k]:.12f} {self.hi[k]:.12f}\n")
        for row, rel, rhs in zip(self.a, self.rel, self.b):
            coeffs = " ".join(f"{v:.12f}" for v in row)
            fh.write(f"{coeffs} {_REL_TEXT[int(rel)]} {rhs:.12f}\n")


@dataclass(eq=False)
class LpSolution:
    status: str
    values: np.ndarray | None = None
    objective_value: float | None = None


def max_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest amount by which x breaks any constraint row or bound."""
    worst = max(float(np.max(lp.lo - x, initial=0.0)),
                float(np.max(x - lp.hi, initial=0.0)))
    if lp.num_constraints:
        ax = lp.a @ x
        le = lp.rel == REL_LE
        ge = lp.rel == REL_GE
        eq = lp.rel == REL_EQ
        if le.any():
            worst = max(worst, float(np.max(ax[le] - lp.b[le])))
        if ge.any():
            worst = max(worst, float(np.max(lp.b[ge] - ax[ge])))
        if eq.any():
            worst = max(worst, float(np.max(np.abs(ax[eq] - lp.b[eq]))))
    return worst


# ---------------------------------------------------------------------------
# mechanism LP construction
# ---------------------------------------------------------------------------

def _var(n: int, i: int, j: int) -> int:
    return i * (n + 1) + j


def build_lp(n: int, alpha: float, props, obj: Objective) -> LinearProgram:
    """LP whose optimum is a minimal-cost private mechanism with the given properties."""
    if obj.aggregator != "sum":
        raise UnsupportedObjective("the LP route only supports the sum aggregator")
    alpha = _check_alpha(alpha)
    if n < 1 or int(n) != n:
        raise ValueError(f"group size must be an integer >= 1, got {n}")
    size = n + 1
    nv = size * size
    if obj.weights.size != size:
        raise ValueError(f"objective weights have length {obj.weights.size}, need {size}")
    if obj.d > n:
        raise ValueError(f"tail offset d={obj.d} exceeds n={n}")
    props = frozenset(props)
    from .core import PROPERTIES

    for p in props:
        if p not in PROPERTIES:
            raise ValueError(f"unknown property {p!r}")

    rows: list[np.ndarray] = []
    rels: list[int] = []
    rhs: list[float] = []

    def add(row, rel, value):
        rows.append(row)
        rels.append(rel)
        rhs.append(value)

    # column sums
    for j in range(size):
        row = np.zeros(nv)
        for i in range(size):
            row[_var(n, i, j)] = 1.0
        add(row, REL_EQ, 1.0)

    # privacy ratio constraints on row-adjacent entries, both directions
    for i in range(size):
        for j in range(n):
            row = np.zeros(nv)
            row[_var(n, i, j)] = 1.0
            row[_var(n, i, j + 1)] = -alpha
            add(row, REL_GE, 0.0)
            row = np.zeros(nv)
            row[_var(n, i, j + 1)] = 1.0
            row[_var(n, i, j)] = -alpha
            add(row, REL_GE, 0.0)

    if "RH" in props:
        for i in range(size):
            for j in range(size):
                if j == i:
                    continue
                row = np.zeros(nv)
                row[_var(n, i, i)] = 1.0
                row[_var(n, i, j)] = -1.0
                add(row, REL_GE, 0.0)
    if "RM" in props:
        for i in range(size):
            for j in range(1, i + 1):
                row = np.zeros(nv)
                row[_var(n, i, j)] = 1.0
                row[_var(n, i, j - 1)] = -1.0
                add(row, REL_GE, 0.0)
            for j in range(i, n):
                row = np.zeros(nv)
                row[_var(n, i, j)] = 1.0
                row[_var(n, i, j + 1)] = -1.0
                add(row, REL_GE, 0.0)
    if "CH" in props:
        for j in range(size):
            for i in range(size):
                if i == j:
                    continue
                row = np.zeros(nv)
                row[_var(n, j, j)] = 1.0
                row[_var(n, i, j)] = -1.0
                add(row, REL_GE, 0.0)
    if "CM" in props:
        for j in range(size):
            for i in range(1, j + 1):
                row = np.zeros(nv)
                row[_var(n, i, j)] = 1.0
                row[_var(n, i - 1, j)] = -1.0
                add(row, REL_GE, 0.0)
            for i in range(j, n):
                row = np.zeros(nv)
                row[_var(n, i, j)] = 1.0
                row[_var(n, i + 1, j)] = -1.0
                add(row, REL_GE, 0.0)
    if "F" in props:
        for i in range(1, size):
            row = np.zeros(nv)
            row[_var(n, i, i)] = 1.0
            row[_var(n, 0, 0)] = -1.0
            add(row, REL_EQ, 0.0)
    if "WH" in props:
        for i in range(size):
            row = np.zeros(nv)
            row[_var(n, i, i)] = 1.0
            add(row, REL_GE, 1.0 / size)
    if "S" in props:
        for i in range(size):
            for j in range(size):
                if _var(n, i, j) < _var(n, n - i, n - j):
                    row = np.zeros(nv)
                    row[_var(n, i, j)] = 1.0
                    row[_var(n, n - i, n - j)] = -1.0
                    add(row, REL_EQ, 0.0)

    # objective: w_j * |i-j|^p on cells with |i-j| >= d (>= max(d,1) for p=0,
    # so the diagonal never contributes); rescale folds into the coefficients
    dist = np.abs(np.subtract.outer(np.arange(size), np.arange(size)))
    d_eff = max(obj.d, 1) if obj.p == 0 else obj.d
    mask = dist >= d_eff
    per_cell = mask.astype(np.float64) if obj.p == 0 else np.where(
        mask, dist.astype(np.float64) ** obj.p, 0.0)
    c = (per_cell * obj.weights[None, :]).reshape(nv)
    if obj.rescale:
        c = c * (size / n)

    return LinearProgram(
        c=c,
        a=np.array(rows) if rows else np.zeros((0, nv)),
        rel=np.array(rels, dtype=np.int8),
        b=np.array(rhs),
        lo=np.zeros(nv),
        hi=np.ones(nv),
    )


# ---------------------------------------------------------------------------
# two-phase simplex
# ---------------------------------------------------------------------------

def _pivot(T, basis, r, j):
    T[r, :] /= T[r, j]
    T[r, j] = 1.0
    factors = T[:, j].copy()
    factors[r] = 0.0
    T -= np.outer(factors, T[r, :])
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve with two-phase primal simplex; never raises for infeasible/unbounded."""
    nv = lp.num_vars
    if not np.all(np.isfinite(lp.lo)):
        raise ValueError("solve_lp requires finite lower bounds")

    # shift to z = x - lo >= 0 and fold finite upper bounds in as rows
    a_rows = [lp.a] if lp.num_constraints else []
    rel = [lp.rel.astype(np.int64)] if lp.num_constraints else []
    b = [lp.b - lp.a @ lp.lo] if lp.num_constraints else []
    finite_hi = np.nonzero(np.isfinite(lp.hi))[0]
    if finite_hi.size:
        ub = np.zeros((finite_hi.size, nv))
        ub[np.arange(finite_hi.size), finite_hi] = 1.0
        a_rows.append(ub)
        rel.append(np.full(finite_hi.size, REL_LE, dtype=np.int64))
        b.append(lp.hi[finite_hi] - lp.lo[finite_hi])
    if a_rows:
        A = np.vstack(a_rows)
        rel = np.concatenate(rel)
        b = np.concatenate(b)
    else:
        A = np.zeros((0, nv))
        rel = np.zeros(0, dtype=np.int64)
        b = np.zeros(0)

    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    rel[neg] *= -1
    # a >= row with zero rhs starts feasible as a <= row; avoids an artificial
    zero_ge = (b == 0.0) & (rel == REL_GE)
    A[zero_ge] *= -1.0
    rel[zero_ge] = REL_LE

    m = A.shape[0]
    is_le = rel == REL_LE
    is_ge = rel == REL_GE
    is_eq = rel == REL_EQ
    n_slack = int(is_le.sum() + is_ge.sum())
    n_art = int(is_eq.sum() + is_ge.sum())
    art_start = nv + n_slack
    ncols = art_start + n_art

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nv] = A
    T[:m, -1] = b
    basis = np.full(m, -1, dtype=np.int64)
    s = nv
    art = art_start
    for i in range(m):
        if is_le[i]:
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        elif is_ge[i]:
            T[i, s] = -1.0
            s += 1
            T[i, art] = 1.0
            basis[i] = art
            art += 1
        else:
            T[i, art] = 1.0
            basis[i] = art
            art += 1

    A0 = T[:m, :ncols].copy()
    b0 = b.copy()

    if n_art:
        T[m, art_start:ncols] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                T[m, :] -= T[i, :]
        status = _kernels.simplex_iterate(T, basis, ncols, _RC_TOL, _PIVOT_TOL)
        if status == _kernels.SIMPLEX_TINY_PIVOT:
            raise NumericalInstability("phase-1 pivots fell below 1e-12")
        if status == _kernels.SIMPLEX_ITER_LIMIT:
            raise NumericalInstability("phase-1 iteration limit reached")
        if -T[m, -1] > _FEAS_TOL:
            return LpSolution(status=STATUS_INFEASIBLE)
        # drive leftover artificials out of the basis; rows where no
        # structural/slack pivot exists are redundant and get dropped
        drop = []
        for i in range(m):
            if basis[i] >= art_start:
                cand = np.abs(T[i, :art_start])
                j = int(np.argmax(cand))
                if cand[j] > _PIVOT_TOL:
                    _pivot(T, basis, i, j)
                else:
                    drop.append(i)
        if drop:
            keep = np.setdiff1d(np.arange(m), drop)
            T = np.vstack([T[keep], T[m:]])
            basis = basis[keep]
            A0 = A0[keep]
            b0 = b0[keep]
            m = len(keep)

    # phase 2
    T[m, :] = 0.0
    T[m, :nv] = lp.c
    for i in range(m):
        cb = T[m, basis[i]]
        if cb != 0.0:
            T[m, :] -= cb * T[i, :]
    status = _kernels.simplex_iterate(T, basis, art_start, _RC_TOL, _PIVOT_TOL)
    if status == _kernels.SIMPLEX_TINY_PIVOT:
        raise NumericalInstability("phase-2 pivots fell below 1e-12")
    if status == _kernels.SIMPLEX_ITER_LIMIT:
        raise NumericalInstability("phase-2 iteration limit reached")
    if status == _kernels.SIMPLEX_UNBOUNDED:
        return LpSolution(status=STATUS_UNBOUNDED)

    x_std = np.zeros(ncols)
    x_std[basis] = T[:m, -1]
    if m:
        # re-solve on the optimal basis to shed accumulated pivot roundoff
        try:
            xb = np.linalg.solve(A0[:, basis], b0)
            if np.all(np.isfinite(xb)):
                x_std[:] = 0.0
                x_std[basis] = xb
        except np.linalg.LinAlgError:
            pass
    x = x_std[:nv] + lp.lo
    return LpSolution(
        status=STATUS_OPTIMAL,
        values=x,
        objective_value=float(lp.c @ x),
    )


def design_mechanism(n: int, alpha: float, props, obj: Objective) -> Mechanism:
    """Solve the constrained-design LP and return the optimal mechanism.

    The feasible region always contains the uniform mechanism, so an
    infeasible/unbounded status can only mean a solver defect.
    """
    lp = build_lp(n, alpha, props, obj)
    sol = solve_lp(lp)
    if sol.status != STATUS_OPTIMAL:
        raise LpInternalError(
            f"design LP reported {sol.status}; the uniform mechanism is always feasible")
    matrix = sol.values.reshape(n + 1, n + 1)
    return Mechanism(matrix, tol=max(tolerance(), 1e-9))
