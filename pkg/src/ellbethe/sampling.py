"""Seeded genericity-filtered sampling and residual helpers.

Every residual suite draws its sample points through the same filter: a point
is rejected and redrawn when a theta denominator falls under the guard or a
square-root radicand hugs the branch cut.  This keeps all suites on the same
genericity rules and makes runs reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np

from .errors import BranchSuspect, DenominatorNearZero, RootCollision


def rel_diff(lhs: complex, rhs: complex, zero_tol: float = 1e-300) -> float:
    """|lhs - rhs| relative to the larger side; 0/0 is reported as 0."""
    scale = max(abs(lhs), abs(rhs))
    if scale < zero_tol:
        return 0.0
    return abs(lhs - rhs) / scale


def mat_rel_diff(lhs: np.ndarray, rhs: np.ndarray, zero_tol: float = 1e-300) -> float:
    """Frobenius-norm difference relative to the larger side."""
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    if scale < zero_tol:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)


def vec_rel_diff(lhs: np.ndarray, rhs: np.ndarray, zero_tol: float = 1e-300) -> float:
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    if scale < zero_tol:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)


def draw_complex(rng: np.random.Generator, re: tuple[float, float],
                 im: tuple[float, float]) -> complex:
    return complex(rng.uniform(*re), rng.uniform(*im))


class GenericitySampler:
    """Rejection sampler over seeded draws.

    ``draw(make_point, evaluate)`` repeatedly builds a point and evaluates the
    target; guard exceptions and non-empty branch-flag collections trigger a
    redraw.  The generator stream is owned by this object, so identical seeds
    give identical accepted points.
    """

    rejectable = (DenominatorNearZero, BranchSuspect, RootCollision)

    def __init__(self, seed_or_rng, max_tries: int = 400):
        if isinstance(seed_or_rng, np.random.Generator):
            self.rng = seed_or_rng
        else:
            self.rng = np.random.default_rng(seed_or_rng)
        self.max_tries = max_tries
        self.rejections = 0

    def draw(self, make_point, evaluate):
        """Return (point, value) for the first accepted point."""
        for _ in range(self.max_tries):
            point = make_point(self.rng)
            flags: list[str] = []
            try:
                value = evaluate(point, flags)
            except self.rejectable:
                self.rejections += 1
                continue
            if flags:
                self.rejections += 1
                continue
            return point, value
        raise RuntimeError(
            f"sampler could not find a generic point in {self.max_tries} tries"
        )

    def sweep(self, n_samples: int, make_point, evaluate):
        """Accepted points and values for n_samples filtered draws."""
        points, values = [], []
        for _ in range(n_samples):
            pt, val = self.draw(make_point, evaluate)
            points.append(pt)
            values.append(val)
        return points, values
