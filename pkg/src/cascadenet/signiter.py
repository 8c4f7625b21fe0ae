"""Monotone sign-space iteration for worst- and best-case rest points.

Sign vectors live in {-1, +1}^n with sign(0) = +1. The map

    sigma -> sign(P Psi(sigma)),   Psi_i = r_i if sigma_i = +1 else r_i - beta_i

is monotone, so iterating from all-minus climbs to the worst fixed point
and iterating from all-plus descends to the best one. Every rest point of
the translated dynamics has a sign pattern between the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibria import TranslatedSystem, clamp_zero
from .errors import MonotoneViolation, NonMonotoneTrace
from .numerics import ZERO_CLAMP

WORST = "worst"
BEST = "best"

ALWAYS_NEGATIVE = "always_negative"
ALWAYS_POSITIVE = "always_positive"
UNDETERMINED = "undetermined"


def as_sign_vector(sigma) -> np.ndarray:
    s = np.asarray(sigma).astype(np.int8)
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("sign vector entries must be +1 or -1")
    return s


def sign(x) -> np.ndarray:
    """+1 where x >= 0 (after the 1e-12 zero clamp), -1 elsewhere."""
    return np.where(clamp_zero(x) >= 0, 1, -1).astype(np.int8)


def psi(ts: TranslatedSystem, sigma) -> np.ndarray:
    sigma = np.asarray(sigma)
    return ts.r - ts.beta * (sigma < 0)


def sign_step(ts: TranslatedSystem, sigma) -> np.ndarray:
    return sign(ts.P @ psi(ts, sigma))


def safe_set(sigma) -> frozenset[int]:
    return frozenset(np.flatnonzero(np.asarray(sigma) > 0).tolist())


@dataclass
class SignIterationTrace:
    direction: str
    sequence: list[np.ndarray]
    safe_sets: list[frozenset[int]]
    fixed_point: np.ndarray
    iterations: int
    marginal: set[int] = field(default_factory=set)


def _iterate(ts: TranslatedSystem, start: np.ndarray, direction: str) -> SignIterationTrace:
    n = ts.n
    sigma = start
    seq = [sigma]
    marginal: set[int] = set()
    for it in range(1, n + 3):
        y = ts.P @ psi(ts, sigma)
        marginal.update(np.flatnonzero((np.abs(y) < ZERO_CLAMP) & (y != 0)).tolist())
        nxt = sign(y)
        if direction == WORST and np.any(nxt < sigma):
            raise NonMonotoneTrace(f"worst-case iteration lost a safe node at step {it}")
        if direction == BEST and np.any(nxt > sigma):
            raise NonMonotoneTrace(f"best-case iteration gained a safe node at step {it}")
        seq.append(nxt)
        if np.array_equal(nxt, sigma):
            return SignIterationTrace(
                direction=direction,
                sequence=seq,
                safe_sets=[safe_set(s) for s in seq],
                fixed_point=nxt,
                iterations=it,
                marginal=marginal,
            )
        sigma = nxt
    raise NonMonotoneTrace(f"{direction}-case iteration did not settle within n + 2 = {n + 2} steps")


def iterate_worst(ts: TranslatedSystem) -> SignIterationTrace:
    """Iterate from all-minus; safe sets grow until the worst fixed point."""
    return _iterate(ts, -np.ones(ts.n, dtype=np.int8), WORST)


def iterate_best(ts: TranslatedSystem) -> SignIterationTrace:
    """Iterate from all-plus; safe sets shrink until the best fixed point."""
    return _iterate(ts, np.ones(ts.n, dtype=np.int8), BEST)


def is_fixed_point(ts: TranslatedSystem, sigma) -> bool:
    sigma = as_sign_vector(sigma)
    return bool(np.array_equal(sign_step(ts, sigma), sigma))


def fixed_sign_classification(ts: TranslatedSystem) -> list[str]:
    """Nodes whose sign at every rest point is known in advance.

    (P r)_i < 0 forces node i negative; (P (r - beta))_i >= 0 forces it
    nonnegative. Since P (r - beta) <= P r the two cases never overlap.
    """
    hi = clamp_zero(ts.Pr)
    lo = clamp_zero(ts.P_r_minus_beta)
    labels = []
    for a, b in zip(hi, lo):
        if a < 0:
            labels.append(ALWAYS_NEGATIVE)
        elif b >= 0:
            labels.append(ALWAYS_POSITIVE)
        else:
            labels.append(UNDETERMINED)
    return labels


def attractor_point(ts: TranslatedSystem, sigma) -> np.ndarray:
    return ts.P @ psi(ts, sigma)


@dataclass
class AttractorPair:
    x_worst: np.ndarray
    x_best: np.ndarray
    sigma_worst: np.ndarray
    sigma_best: np.ndarray
    worst_trace: SignIterationTrace
    best_trace: SignIterationTrace
    worst_steps: int
    best_steps: int

    def v_worst(self, ts: TranslatedSystem) -> np.ndarray:
        return ts.to_original(self.x_worst)

    def v_best(self, ts: TranslatedSystem) -> np.ndarray:
        return ts.to_original(self.x_best)


def translated_step(ts: TranslatedSystem, x) -> np.ndarray:
    return ts.C @ x + ts.r - ts.beta * (x < 0)


def monotone_run(ts: TranslatedSystem, x0, direction: str, max_steps: int = 100_000) -> tuple[np.ndarray, int]:
    """Run the translated dynamics from x0, asserting the monotone direction.

    Nondecreasing for ``worst`` (start at P Psi-), nonincreasing for
    ``best`` (start at P Psi+). Step differences below 1e-12 count as zero.
    Returns the last state and the number of steps taken.
    """
    x = np.array(x0, dtype=float)
    for t in range(1, max_steps + 1):
        nxt = translated_step(ts, x)
        d = clamp_zero(nxt - x)
        if direction == WORST and np.any(d < 0):
            raise MonotoneViolation(f"trajectory from P Psi- decreased at t={t}")
        if direction == BEST and np.any(d > 0):
            raise MonotoneViolation(f"trajectory from P Psi+ increased at t={t}")
        x = nxt
        if not np.any(d):
            return x, t
    return x, max_steps


def attractors(ts: TranslatedSystem, settle_tol: float = 1e-8) -> AttractorPair:
    """Worst and best rest points, cross-checked against the dynamics.

    The sign-iteration fixed points give x_W = P Psi(sigma_W) and
    x_B = P Psi(sigma_B). The trajectories started at P (r - beta) and at
    P r must move monotonically and settle at exactly those points.
    """
    wt = iterate_worst(ts)
    bt = iterate_best(ts)
    xw = attractor_point(ts, wt.fixed_point)
    xb = attractor_point(ts, bt.fixed_point)

    n = ts.n
    end_w, steps_w = monotone_run(ts, attractor_point(ts, -np.ones(n)), WORST)
    end_b, steps_b = monotone_run(ts, attractor_point(ts, np.ones(n)), BEST)
    for end, target, name in ((end_w, xw, WORST), (end_b, xb, BEST)):
        scale = max(1.0, float(np.max(np.abs(target))))
        if np.max(np.abs(end - target)) > settle_tol * scale:
            raise MonotoneViolation(f"{name}-case trajectory settled away from the sign-iteration rest point")
    if np.any(clamp_zero(xb - xw) < 0):
        raise MonotoneViolation("worst rest point exceeds best rest point")
    return AttractorPair(xw, xb, wt.fixed_point, bt.fixed_point, wt, bt, steps_w, steps_b)
