"""Forward simulation of the equity-value dynamics.

    V(t+1) = C V(t) + D p(t) - B phi(V(t) - V_threshold)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, ValidationFailure
from .model import FinancialNetwork, failure_indicator

DEFAULT_CONV_TOL = 1e-9
DEFAULT_CONFIRM_WINDOW = 5


@dataclass(frozen=True)
class PriceOverride:
    start: int
    end: int  # exclusive
    prices: tuple[float, ...]


@dataclass(frozen=True)
class PriceSignal:
    """Base price vector plus disjoint, sorted windows [start, end) that replace it."""

    base: tuple[float, ...]
    overrides: tuple[PriceOverride, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(x) for x in self.base))
        object.__setattr__(
            self,
            "overrides",
            tuple(
                PriceOverride(int(o.start), int(o.end), tuple(float(x) for x in o.prices))
                for o in self.overrides
            ),
        )
        problems = []
        m = len(self.base)
        if any(x < 0 for x in self.base) or not any(x != 0 for x in self.base):
            problems.append("price_signal.base: must be nonnegative and nonnull")
        prev_end = None
        for i, o in enumerate(self.overrides):
            if o.start < 0 or o.end <= o.start:
                problems.append(f"price_signal.overrides[{i}]: need 0 <= start < end, got [{o.start}, {o.end})")
            if prev_end is not None and o.start < prev_end:
                problems.append(f"price_signal.overrides[{i}]: overlaps or is out of order")
            prev_end = o.end
            if len(o.prices) != m:
                problems.append(f"price_signal.overrides[{i}]: expected {m} prices, got {len(o.prices)}")
            elif any(x < 0 for x in o.prices) or not any(x != 0 for x in o.prices):
                problems.append(f"price_signal.overrides[{i}]: prices must be nonnegative and nonnull")
        if problems:
            raise ValidationFailure(problems)

    @classmethod
    def constant(cls, p) -> "PriceSignal":
        return cls(tuple(np.asarray(p, dtype=float).tolist()))

    def at(self, t: int) -> np.ndarray:
        for o in self.overrides:
            if o.start <= t < o.end:
                return np.array(o.prices)
        return np.array(self.base)

    def last_change(self) -> int:
        """First time index from which prices stay at the base value."""
        return max((o.end for o in self.overrides), default=0)


@dataclass(frozen=True)
class EquityState:
    t: int
    V: np.ndarray


@dataclass(eq=False)
class Trajectory:
    """Full state history; ``states[t]`` is V(t) for t = 0..horizon."""

    states: np.ndarray
    indicators: np.ndarray
    prices: PriceSignal
    converged: bool
    settle_time: int | None
    conv_tol: float = DEFAULT_CONV_TOL
    confirm_window: int = DEFAULT_CONFIRM_WINDOW
    labels: list[str] | None = field(default=None)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state(self, t: int) -> EquityState:
        return EquityState(t, self.states[t].copy())

    def failed_set(self, t: int = -1) -> list[int]:
        return np.flatnonzero(self.indicators[t]).tolist()

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            np.array_equal(self.states, other.states)
            and np.array_equal(self.indicators, other.indicators)
            and self.prices == other.prices
            and self.converged == other.converged
            and self.settle_time == other.settle_time
            and self.conv_tol == other.conv_tol
            and self.confirm_window == other.confirm_window
        )


def step(net: FinancialNetwork, V, p_t) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    p_t = np.asarray(p_t, dtype=float)
    if V.shape != (net.n,):
        raise LengthMismatch(f"V has shape {V.shape}, expected ({net.n},)")
    if p_t.shape != (net.m,):
        raise LengthMismatch(f"p has shape {p_t.shape}, expected ({net.m},)")
    phi = failure_indicator(V, net.v_threshold)
    return net.C @ V + net.D @ p_t - net.beta * phi


def _settle(states: np.ndarray, phis: np.ndarray, conv_tol: float, window: int) -> int | None:
    """Start of the trailing run of small, sign-preserving steps, if long enough."""
    T = states.shape[0] - 1
    run_start = T
    for t in range(T - 1, -1, -1):
        small = np.max(np.abs(states[t + 1] - states[t])) < conv_tol
        if not small or not np.array_equal(phis[t + 1], phis[t]):
            break
        run_start = t
    if T - run_start >= window:
        return run_start
    return None


def simulate(
    net: FinancialNetwork,
    V0,
    prices: PriceSignal | None = None,
    horizon: int = 100,
    conv_tol: float = DEFAULT_CONV_TOL,
    confirm_window: int = DEFAULT_CONFIRM_WINDOW,
) -> Trajectory:
    """Iterate the step map for ``horizon`` steps.

    Convergence is judged on the tail of the run: the trajectory is
    converged when the last ``confirm_window`` (or more) steps each move
    less than ``conv_tol`` in the max-norm and keep the failure pattern.
    ``settle_time`` is the first time index of that trailing run.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if prices is None:
        prices = PriceSignal.constant(net.p)
    if len(prices.base) != net.m:
        raise LengthMismatch(f"price signal has {len(prices.base)} assets, network has {net.m}")
    V = np.asarray(V0, dtype=float)
    if V.shape != (net.n,):
        raise LengthMismatch(f"V0 has shape {V.shape}, expected ({net.n},)")

    states = np.empty((horizon + 1, net.n))
    states[0] = V
    for t in range(horizon):
        states[t + 1] = step(net, states[t], prices.at(t))
    phis = (states < net.v_threshold).astype(np.int8)
    settle = _settle(states, phis, conv_tol, confirm_window)
    return Trajectory(
        states=states,
        indicators=phis,
        prices=prices,
        converged=settle is not None,
        settle_time=settle,
        conv_tol=conv_tol,
        confirm_window=confirm_window,
        labels=net.node_ids(),
    )


def check_positivity_condition(net: FinancialNetwork) -> bool:
    """D p - beta >= 0 elementwise: nonnegative initial states stay nonnegative."""
    return bool(np.all(net.D @ net.p - net.beta >= 0))


def positivity_margin(net: FinancialNetwork) -> np.ndarray:
    return net.D @ net.p - net.beta
