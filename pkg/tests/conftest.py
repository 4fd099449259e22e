"""Shared fixtures and mechanism generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from dpmech import Mechanism, is_dp

# alpha grids used across modules: the 7-value closed-form grid and the
# 5-value grid used for the heavier LP reproductions
ALPHA_GRID7 = (1 / 3, 1 / 2, 0.62, 2 / 3, 0.76, 9 / 10, 10 / 11)
ALPHA_GRID5 = (0.3, 0.5, 0.62, 2 / 3, 0.9)


def random_mechanism(rng: np.random.Generator, n: int) -> Mechanism:
    """Arbitrary valid mechanism: positive entries, columns normalized."""
    m = rng.uniform(0.05, 1.0, size=(n + 1, n + 1))
    return Mechanism(m / m.sum(axis=0, keepdims=True))


def random_dp_mechanism(rng: np.random.Generator, n: int, alpha: float) -> Mechanism:
    """Random alpha-private mechanism: a perturbation of the uniform mechanism
    small enough that the ratio constraints keep slack."""
    u = 1.0 / (n + 1)
    r = rng.uniform(0.0, 1.0, size=(n + 1, n + 1))
    r /= r.sum(axis=0, keepdims=True)
    t = 0.5 * (1.0 - alpha) / (n + 2)
    mech = Mechanism((1.0 - t) * np.full((n + 1, n + 1), u) + t * r)
    assert is_dp(mech, alpha)
    return mech


def random_fair_mechanism(rng: np.random.Generator, n: int,
                          diagonal: float | None = None) -> Mechanism:
    """Valid mechanism with a constant diagonal and random off-diagonal mass."""
    if diagonal is None:
        diagonal = rng.uniform(1.0 / (n + 1), 0.9)
    m = rng.uniform(0.05, 1.0, size=(n + 1, n + 1))
    np.fill_diagonal(m, 0.0)
    col = m.sum(axis=0)
    m = m / col * (1.0 - diagonal)
    np.fill_diagonal(m, diagonal)
    return Mechanism(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
