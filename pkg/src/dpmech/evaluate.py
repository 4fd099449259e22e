"""Sampling from mechanisms and the seeded empirical evaluation harness.

Randomness is built on numpy's PCG64.  Repetition ``r`` of an experiment
draws from a generator seeded with ``mix64(seed, r)`` -- a splitmix64
finalizer applied to ``seed + (r+1) * golden-gamma`` -- so results are
independent of execution order and bit-reproducible across platforms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._kernels import sample_counts
from .core import Mechanism
from .errors import (
    BadProbability,
    DimensionMismatch,
    InputOutOfRange,
    ParseError,
    UnknownColumn,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
#: substream index reserved for synthetic data generation (rep indices stay
#: far below it)
DATA_STREAM = 1 << 32


def mix64(seed: int, k: int) -> int:
    """Derive substream k from a 64-bit seed (splitmix64 finalizer)."""
    z = (int(seed) + (int(k) + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def substream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix64(seed, k)))


@dataclass(frozen=True, eq=False)
class GroupCounts:
    """True counts, one per group, each in [0, n]."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise DimensionMismatch("counts must be a 1-D vector")
        if counts.size and (counts.min() < 0 or counts.max() > self.n):
            raise ValueError(f"counts must lie in [0, {self.n}]")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_groups(self) -> int:
        return self.counts.size


@dataclass(frozen=True)
class EvalConfig:
    reps: int = 30
    seed: int = 0
    d: int = 0
    metric: str = "l0d"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if self.metric not in ("l0d", "rmse"):
            raise ValueError(f"metric must be 'l0d' or 'rmse', got {self.metric!r}")


@dataclass(frozen=True)
class EvalResult:
    mean: float
    std_error: float
    per_rep: list = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "mean": float(self.mean),
            "std_error": float(self.std_error),
            "per_rep": [float(v) for v in self.per_rep],
        }


def _column_cdfs(mech: Mechanism) -> np.ndarray:
    return np.cumsum(mech.matrix, axis=0)


def sample_output(mech: Mechanism, j: int, rng: np.random.Generator) -> int:
    """Draw one output for true count j by inverting the column CDF."""
    if not 0 <= j <= mech.n:
        raise InputOutOfRange(f"input {j} outside [0, {mech.n}]")
    cdf = np.cumsum(mech.matrix[:, j])
    u = rng.random()
    k = int(np.count_nonzero(cdf <= u))
    return min(k, mech.n)


def binomial_population(total: int, n: int, p: float,
                        rng: np.random.Generator) -> GroupCounts:
    """Split `total` individuals into groups of n with i.i.d. Bernoulli(p) bits.

    Leftover individuals that do not fill a group are dropped.
    """
    if not 0.0 <= p <= 1.0:
        raise BadProbability(f"p must lie in [0, 1], got {p}")
    if n < 1 or total < n:
        raise ValueError(f"need total >= n >= 1, got total={total}, n={n}")
    groups = total // n
    return GroupCounts(n=n, counts=rng.binomial(n, p, size=groups))


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

_PREDICATE_OPS = ("<=", ">=", "==", "<", ">")


def parse_predicate(spec: str):
    """Parse '<column><op><value>' into (column, value-predicate).

    Ordering ops compare numerically; '==' compares numerically when both
    sides parse as numbers, else as strings.
    """
    best = None
    for op in _PREDICATE_OPS:
        pos = spec.find(op)
        if pos > 0 and (best is None or pos < best[0]
                        or (pos == best[0] and len(op) > len(best[1]))):
            best = (pos, op)
    if best is None:
        raise ValueError(f"predicate {spec!r} must look like '<column><op><value>'")
    pos, op = best
    column = spec[:pos].strip()
    raw = spec[pos + len(op):].strip()
    if not column or not raw:
        raise ValueError(f"predicate {spec!r} is missing a column or value")

    if op == "==":
        try:
            target = float(raw)

            def pred(cell: str) -> bool:
                try:
                    return float(cell) == target
                except ValueError:
                    return cell.strip() == raw
        except ValueError:
            def pred(cell: str) -> bool:
                return cell.strip() == raw
        return column, pred

    target = float(raw)
    compare = {
        "<": lambda v: v < target,
        "<=": lambda v: v <= target,
        ">": lambda v: v > target,
        ">=": lambda v: v >= target,
    }[op]

    def pred(cell: str) -> bool:
        return compare(float(cell))

    return column, pred


def ingest_groups(csv_path, column: str, group_size: int,
                  predicate=None) -> GroupCounts:
    """Read per-row bits from a headed CSV and sum consecutive rows into groups.

    Without a predicate the column must hold literal 0/1 values; with one,
    the bit is predicate(cell).  Rows keep file order; a trailing incomplete
    group is dropped.
    """
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{csv_path}: empty file") from None
        names = [h.strip() for h in header]
        if column not in names:
            raise UnknownColumn(f"{csv_path}: no column {column!r} in header {names}")
        col = names.index(column)
        bits = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if col >= len(row):
                raise ParseError(f"{csv_path}: line {line_no}: too few fields")
            cell = row[col]
            if predicate is None:
                value = cell.strip()
                if value not in ("0", "1"):
                    raise ParseError(
                        f"{csv_path}: line {line_no}: expected a 0/1 bit, got {cell!r}")
                bits.append(int(value))
            else:
                try:
                    bits.append(1 if predicate(cell) else 0)
                except ValueError:
                    raise ParseError(
                        f"{csv_path}: line {line_no}: cannot evaluate predicate "
                        f"on {cell!r}") from None
    groups = len(bits) // group_size
    arr = np.asarray(bits[:groups * group_size], dtype=np.int64)
    counts = arr.reshape(groups, group_size).sum(axis=1) if groups else np.zeros(0, np.int64)
    return GroupCounts(n=group_size, counts=counts)


# ---------------------------------------------------------------------------
# empirical metrics
# ---------------------------------------------------------------------------

def _run_reps(mech: Mechanism, groups: GroupCounts, cfg: EvalConfig, stat) -> EvalResult:
    if mech.n != groups.n:
        raise DimensionMismatch(
            f"mechanism size {mech.n} does not match group size {groups.n}")
    cdf = _column_cdfs(mech)
    per_rep = []
    for r in range(cfg.reps):
        rng = substream(cfg.seed, r)
        u = rng.random(groups.num_groups)
        outputs = sample_counts(groups.counts, u, cdf, mech.n)
        per_rep.append(float(stat(outputs, groups.counts)))
    arr = np.asarray(per_rep)
    std_error = float(arr.std(ddof=1) / np.sqrt(cfg.reps)) if cfg.reps > 1 else 0.0
    return EvalResult(mean=float(arr.mean()), std_error=std_error, per_rep=per_rep)


def empirical_l0d(mech: Mechanism, groups: GroupCounts, cfg: EvalConfig) -> EvalResult:
    """Per repetition: fraction of groups whose output differs from the true
    count by strictly more than cfg.d (d=0 is the plain wrong-answer rate)."""
    d = cfg.d
    return _run_reps(mech, groups, cfg,
                     lambda out, true: np.mean(np.abs(out - true) > d))


def empirical_rmse(mech: Mechanism, groups: GroupCounts, cfg: EvalConfig) -> EvalResult:
    """Per repetition: sqrt of the mean squared output error over groups."""
    return _run_reps(mech, groups, cfg,
                     lambda out, true: np.sqrt(np.mean((out - true) ** 2.0)))
