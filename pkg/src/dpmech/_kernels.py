"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is picked per call from the ``DPMECH_BACKEND`` environment
variable: ``numba`` (require numba, fail loudly if missing), ``numpy``
(never JIT), or ``auto`` (default: numba when importable).  Both backends
implement the same pivot/tie-break rules, so a given input produces the
same result either way.

Status codes shared by the simplex kernels:
    0 optimal, 1 unbounded, 2 pivot magnitudes below threshold, 3 iteration cap.
"""

from __future__ import annotations

import os

import numpy as np

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_TINY_PIVOT = 2
SIMPLEX_ITER_LIMIT = 3

_numba_cache: dict = {}


def backend_name() -> str:
    """Resolve the active backend ('numba' or 'numpy') from the environment."""
    choice = os.environ.get("DPMECH_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"DPMECH_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    kernels = _numba_kernels()
    if kernels is None:
        if choice == "numba":
            raise RuntimeError("DPMECH_BACKEND=numba but numba is not importable")
        return "numpy"
    return "numba"


def _numba_kernels():
    """Import numba and JIT the loop kernels once; None when unavailable."""
    if "kernels" in _numba_cache:
        return _numba_cache["kernels"]
    try:
        import numba
    except ImportError:
        _numba_cache["kernels"] = None
        return None
    kernels = {
        "simplex": numba.njit(cache=True)(_simplex_iterate_loops),
        "sample": numba.njit(cache=True)(_sample_counts_loops),
    }
    _numba_cache["kernels"] = kernels
    return kernels


# ---------------------------------------------------------------------------
# simplex pivot loop
# ---------------------------------------------------------------------------

def _simplex_iterate_loops(T, basis, allowed, rc_tol, piv_tol, bland_after, max_iter):
    # Dantzig entering rule with a permanent switch to Bland's rule after a
    # run of degenerate pivots; leaving row = min ratio, ties broken by the
    # smallest basic-variable index.
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    bland = False
    streak = 0
    for _ in range(max_iter):
        j = -1
        if bland:
            for col in range(allowed):
                if T[m, col] < -rc_tol:
                    j = col
                    break
        else:
            best_rc = -rc_tol
            for col in range(allowed):
                if T[m, col] < best_rc:
                    best_rc = T[m, col]
                    j = col
        if j < 0:
            return SIMPLEX_OPTIMAL

        r = -1
        best = 0.0
        tiny = False
        for i in range(m):
            a = T[i, j]
            if a > piv_tol:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < best or (ratio == best and basis[i] < basis[r]):
                    r = i
                    best = ratio
            elif a > 0.0:
                tiny = True
        if r < 0:
            return SIMPLEX_TINY_PIVOT if tiny else SIMPLEX_UNBOUNDED

        if best <= 1e-12:
            streak += 1
            if streak > bland_after:
                bland = True
        else:
            streak = 0

        piv = T[r, j]
        for col in range(rhs + 1):
            T[r, col] /= piv
        T[r, j] = 1.0
        for i in range(m + 1):
            if i == r:
                continue
            f = T[i, j]
            if f != 0.0:
                for col in range(rhs + 1):
                    T[i, col] -= f * T[r, col]
                T[i, j] = 0.0
        basis[r] = j
    return SIMPLEX_ITER_LIMIT


def _simplex_iterate_numpy(T, basis, allowed, rc_tol, piv_tol, bland_after, max_iter):
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    bland = False
    streak = 0
    for _ in range(max_iter):
        seg = T[m, :allowed]
        if bland:
            negs = np.nonzero(seg < -rc_tol)[0]
            if negs.size == 0:
                return SIMPLEX_OPTIMAL
            j = int(negs[0])
        else:
            j = int(np.argmin(seg))
            if seg[j] >= -rc_tol:
                return SIMPLEX_OPTIMAL

        colv = T[:m, j]
        mask = colv > piv_tol
        if not mask.any():
            return SIMPLEX_TINY_PIVOT if (colv > 0.0).any() else SIMPLEX_UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[mask] = T[:m, rhs][mask] / colv[mask]
        best = ratios.min()
        ties = np.nonzero(ratios == best)[0]
        r = int(ties[np.argmin(basis[ties])])

        if best <= 1e-12:
            streak += 1
            if streak > bland_after:
                bland = True
        else:
            streak = 0

        T[r, :] /= T[r, j]
        T[r, j] = 1.0
        factors = T[:, j].copy()
        factors[r] = 0.0
        T -= np.outer(factors, T[r, :])
        T[:, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j
    return SIMPLEX_ITER_LIMIT


def simplex_iterate(T, basis, allowed, rc_tol, piv_tol, bland_after=100,
                    max_iter=200_000):
    """Run simplex pivots in place until optimal/unbounded; returns a status code."""
    if backend_name() == "numba":
        kernels = _numba_kernels()
        return int(kernels["simplex"](T, basis, allowed, rc_tol, piv_tol,
                                      bland_after, max_iter))
    return _simplex_iterate_numpy(T, basis, allowed, rc_tol, piv_tol,
                                  bland_after, max_iter)


# ---------------------------------------------------------------------------
# inverse-CDF sampling over mechanism columns
# ---------------------------------------------------------------------------

def _sample_counts_loops(counts, u, cdf, n):
    out = np.empty(counts.shape[0], dtype=np.int64)
    for g in range(counts.shape[0]):
        j = counts[g]
        x = u[g]
        k = 0
        for i in range(n + 1):
            if cdf[i, j] <= x:
                k += 1
        if k > n:
            k = n
        out[g] = k
    return out


def _sample_counts_numpy(counts, u, cdf, n):
    k = (cdf[:, counts] <= u[None, :]).sum(axis=0)
    return np.minimum(k, n).astype(np.int64)


def sample_counts(counts, u, cdf, n):
    """Map uniforms to outputs via each input's column CDF (last bucket absorbs slack)."""
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if backend_name() == "numba":
        kernels = _numba_kernels()
        return kernels["sample"](counts, u, np.ascontiguousarray(cdf), n)
    return _sample_counts_numpy(counts, u, cdf, n)
