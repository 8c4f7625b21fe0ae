"""Financial network definition, validation and failure indicators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch, ValidationFailure


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if ndim == 1:
        arr = np.atleast_1d(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FinancialNetwork:
    """Cross-holdings network (C, D, p, beta, v_threshold).

    ``C[i, j]`` is the fraction of organization j owned by organization i,
    ``D[i, k]`` the share of asset k held by i, ``p`` the asset prices,
    ``beta`` the failure costs and ``v_threshold`` the failure thresholds.
    Arrays are stored read-only. Construction does not validate; call
    :func:`validate`.
    """

    C: np.ndarray
    D: np.ndarray
    p: np.ndarray
    beta: np.ndarray
    v_threshold: np.ndarray
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "C", _frozen(self.C, 2))
        object.__setattr__(self, "D", _frozen(self.D, 2))
        object.__setattr__(self, "p", _frozen(self.p, 1))
        object.__setattr__(self, "beta", _frozen(self.beta, 1))
        object.__setattr__(self, "v_threshold", _frozen(self.v_threshold, 1))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1] if self.D.ndim == 2 else 0

    @property
    def B(self) -> np.ndarray:
        return np.diag(self.beta)

    @property
    def Dp(self) -> np.ndarray:
        return self.D @ self.p

    def node_ids(self) -> list[str]:
        if self.labels is not None:
            return list(self.labels)
        return [str(i + 1) for i in range(self.n)]

    def with_prices(self, p) -> "FinancialNetwork":
        return FinancialNetwork(self.C, self.D, p, self.beta, self.v_threshold, self.labels)

    def __eq__(self, other):
        if not isinstance(other, FinancialNetwork):
            return NotImplemented
        return (
            self.labels == other.labels
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("C", "D", "p", "beta", "v_threshold")
            )
        )

    __hash__ = None


def network_violations(net: FinancialNetwork) -> list[str]:
    """Every invariant violation of ``net``; empty when the network is valid."""
    out: list[str] = []
    C, D, p, beta, vt = net.C, net.D, net.p, net.beta, net.v_threshold

    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.size == 0:
        out.append(f"C: must be a nonempty square matrix, got shape {C.shape}")
        return out
    n = C.shape[0]
    if D.ndim != 2 or D.shape[0] != n or D.shape[1] < 1:
        out.append(f"D: must have shape ({n}, m) with m >= 1, got {D.shape}")
        return out
    m = D.shape[1]
    for name, vec, size in (("p", p, m), ("beta", beta, n), ("v_threshold", vt, n)):
        if vec.ndim != 1 or vec.shape[0] != size:
            out.append(f"{name}: expected length {size}, got shape {vec.shape}")
    if out:
        return out

    for name, arr in (("C", C), ("D", D), ("p", p), ("beta", beta), ("v_threshold", vt)):
        if not np.all(np.isfinite(arr)):
            out.append(f"{name}: non-finite entries")
    if out:
        return out

    neg = np.argwhere(C < 0)
    if neg.size:
        out.append(f"C: negative entries at {[tuple(map(int, ij)) for ij in neg[:5]]}")
    diag = np.flatnonzero(np.diag(C) != 0)
    if diag.size:
        out.append(f"C: nonzero diagonal at rows {diag.tolist()}")
    cols = np.flatnonzero(C.sum(axis=0) >= 1.0)
    if cols.size:
        out.append(f"C: column sums >= 1 at columns {cols.tolist()}")
    if np.any(D < 0):
        out.append("D: negative entries")
    if np.any(p < 0):
        out.append("p: negative entries")
    if not np.any(p != 0):
        out.append("p: must be nonnull")
    if np.any(beta <= 0):
        out.append(f"beta: entries must be > 0, bad at {np.flatnonzero(beta <= 0).tolist()}")
    dp = D @ p
    if np.any(dp <= 0):
        out.append(f"D p: must be > 0 elementwise, bad at rows {np.flatnonzero(dp <= 0).tolist()}")
    if net.labels is not None and len(net.labels) != n:
        out.append(f"labels: expected {n}, got {len(net.labels)}")
    return out


def validate(net: FinancialNetwork) -> FinancialNetwork:
    """Return ``net`` unchanged if valid, else raise with the full violation list."""
    problems = network_violations(net)
    if problems:
        raise ValidationFailure(problems)
    return net


def failure_indicator(V, v_threshold) -> np.ndarray:
    """1 where V_i < threshold_i, else 0. Equality counts as healthy."""
    V = np.asarray(V, dtype=float)
    vt = np.asarray(v_threshold, dtype=float)
    if V.shape != vt.shape:
        raise LengthMismatch(f"V has shape {V.shape}, threshold has shape {vt.shape}")
    return (V < vt).astype(np.int8)


def orthant_sign_pattern(k: int, n: int) -> np.ndarray:
    """Binary digits of k, most significant first (component 1 is the MSB)."""
    if n < 1 or not (0 <= k < 2**n):
        raise IndexOutOfRange(f"orthant index {k} outside 0..2^{n}-1")
    return np.array([(k >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def orthant_index(phi) -> int:
    k = 0
    for bit in np.asarray(phi).tolist():
        k = (k << 1) | int(bit)
    return k
