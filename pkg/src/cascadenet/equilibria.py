"""Orthant equilibria, regime classification and stability.

Analysis happens in translated coordinates x = V - V_threshold, where the
dynamics read x(t+1) = C x(t) + r - B phi(x(t)) with
r = (C - I) V_threshold + D p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistentEquilibrium, TooLarge
from .model import FinancialNetwork, orthant_sign_pattern
from .numerics import ZERO_CLAMP, frobenius_eigenvalue, invert_i_minus_c, principal_submatrix

BOUNDARY_TOL = 1e-9
DEFAULT_MAX_N = 20
_CHUNK = 1 << 15


def clamp_zero(x) -> np.ndarray:
    x = np.array(x, dtype=float)
    x[np.abs(x) < ZERO_CLAMP] = 0.0
    return x


def negative_pattern(x) -> np.ndarray:
    """phi(x) after the zero clamp: 1 where x < 0, 0 elsewhere."""
    return (clamp_zero(x) < 0).astype(np.int8)


@dataclass(frozen=True, eq=False)
class TranslatedSystem:
    C: np.ndarray
    P: np.ndarray
    r: np.ndarray
    beta: np.ndarray
    v_threshold: np.ndarray

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def Pr(self) -> np.ndarray:
        return self.P @ self.r

    @property
    def P_r_minus_beta(self) -> np.ndarray:
        return self.P @ (self.r - self.beta)

    def to_original(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) + self.v_threshold

    def to_translated(self, V) -> np.ndarray:
        return np.asarray(V, dtype=float) - self.v_threshold


def translate(net: FinancialNetwork) -> TranslatedSystem:
    C = np.array(net.C)
    P = invert_i_minus_c(C)
    vt = np.array(net.v_threshold)
    r = (C - np.eye(net.n)) @ vt + net.D @ net.p
    return TranslatedSystem(C=C, P=P, r=r, beta=np.array(net.beta), v_threshold=vt)


def make_translated(C, r, beta, v_threshold=None) -> TranslatedSystem:
    """Build a translated system directly from (C, r, beta)."""
    C = np.array(C, dtype=float)
    r = np.asarray(r, dtype=float)
    vt = np.zeros_like(r) if v_threshold is None else np.asarray(v_threshold, dtype=float)
    return TranslatedSystem(C=C, P=invert_i_minus_c(C), r=r, beta=np.asarray(beta, dtype=float), v_threshold=vt)


@dataclass(frozen=True, eq=False)
class OrthantEquilibrium:
    k: int
    phi_k: np.ndarray
    v_bar: np.ndarray
    x_bar: np.ndarray
    consistent: bool
    on_boundary: bool

    @property
    def n_failed(self) -> int:
        return int(self.phi_k.sum())


def _candidate(ts: TranslatedSystem, k: int, phi: np.ndarray) -> OrthantEquilibrium:
    x_bar = ts.P @ (ts.r - ts.beta * phi)
    return OrthantEquilibrium(
        k=k,
        phi_k=phi,
        v_bar=x_bar + ts.v_threshold,
        x_bar=x_bar,
        consistent=bool(np.array_equal(negative_pattern(x_bar), phi)),
        on_boundary=bool(np.any(np.abs(x_bar) < BOUNDARY_TOL)),
    )


def orthant_equilibrium(ts: TranslatedSystem, k: int) -> OrthantEquilibrium:
    """Candidate rest point for failure pattern k, i.e. P (D p - B phi_k) in V-coordinates."""
    return _candidate(ts, k, orthant_sign_pattern(k, ts.n))


def _bits(ks: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return ((ks[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def enumerate_equilibria(ts: TranslatedSystem, max_n: int = DEFAULT_MAX_N) -> list[OrthantEquilibrium]:
    """All consistent candidates over the 2^n orthants, in increasing k.

    Boundary-sitting candidates are kept but flagged ``on_boundary``.
    """
    n = ts.n
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the enumeration cap {max_n}; use the sign iteration instead")
    total = 1 << n
    PB = ts.P * ts.beta[None, :]
    Pr = ts.Pr
    found = []
    for lo in range(0, total, _CHUNK):
        ks = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        phis = _bits(ks, n)
        X = Pr[None, :] - phis @ PB.T
        # screen loosely, then recompute exactly on the single-candidate path
        near = np.all(np.where(phis == 1, X < BOUNDARY_TOL, X > -BOUNDARY_TOL), axis=1)
        for k in ks[near]:
            eq = orthant_equilibrium(ts, int(k))
            if eq.consistent:
                found.append(eq)
    return found


def stable_equilibria(eqs: Iterable[OrthantEquilibrium]) -> list[OrthantEquilibrium]:
    return [e for e in eqs if e.consistent and not e.on_boundary]


@dataclass(frozen=True)
class RegimeReport:
    positivity_ok: bool
    pos_eq_exists: bool
    pos_eq_unique_overall: bool
    neg_eq_exists: bool
    neg_eq_unique_overall: bool
    n_f_lower: int
    n_f_upper: int


def classify_regime(ts: TranslatedSystem, net: FinancialNetwork | None = None) -> RegimeReport:
    """Existence and uniqueness of the all-healthy and all-failed rest points.

    Decided from the signs of P r and P (r - beta), so it scales to any n.
    ``n_f_lower``/``n_f_upper`` bound the number of failed organizations at
    any equilibrium.
    """
    hi = clamp_zero(ts.Pr)
    lo = clamp_zero(ts.P_r_minus_beta)
    positivity_ok = True
    if net is not None:
        positivity_ok = bool(np.all(net.D @ net.p - net.beta >= 0))
    return RegimeReport(
        positivity_ok=positivity_ok,
        pos_eq_exists=bool(np.all(hi >= 0)),
        pos_eq_unique_overall=bool(np.all(lo >= 0)),
        neg_eq_exists=bool(np.all(lo < 0)),
        neg_eq_unique_overall=bool(np.all(hi < 0)),
        n_f_lower=int(np.sum(hi < 0)),
        n_f_upper=int(np.sum(lo < 0)),
    )


def no_all_fail_certificate(
    net: FinancialNetwork, indices: Sequence[int] | None = None
) -> bool:
    """Sufficient condition that some organization stays healthy at every rest point.

    Checks V_threshold_i < (D p - beta)_i / (1 - lambda_F(C_sub)) for all i,
    with C_sub the principal submatrix on ``indices`` (all nodes if None).
    The margin D p - beta must also be positive: with a negative margin the
    bound points the wrong way and certifies nothing.
    """
    idx = list(range(net.n)) if indices is None else list(indices)
    sub = principal_submatrix(net.C, idx)
    lam = frobenius_eigenvalue(sub).radius
    margin = net.D @ net.p - net.beta
    if lam >= 1.0:
        return False
    return bool(np.all(margin > 0) and np.all(net.v_threshold < margin / (1.0 - lam)))


@dataclass(frozen=True)
class StabilityRecord:
    k: int
    stable: bool
    fragile: bool
    contraction: float  # max column sum of C, an upper bound on the error decay rate
    spectral_radius: float
    note: str


def stability_report(eq: OrthantEquilibrium, net: FinancialNetwork) -> StabilityRecord:
    """Local stability of a consistent equilibrium.

    Inside its orthant the error follows Y(t+1) = C Y(t), and C is Schur, so
    interior equilibria are locally asymptotically stable. Equilibria on an
    orthant boundary are reported as fragile.
    """
    if not eq.consistent:
        raise InconsistentEquilibrium(f"candidate for orthant {eq.k} is not self-consistent")
    C = np.asarray(net.C)
    contraction = float(C.sum(axis=0).max())
    rho = frobenius_eigenvalue(C).radius
    if eq.on_boundary:
        return StabilityRecord(eq.k, False, True, contraction, rho, "on a discontinuity boundary; fragile")
    return StabilityRecord(
        eq.k, True, False, contraction, rho, f"interior; error contracts by C (spectral radius {rho:.6g} < 1)"
    )
