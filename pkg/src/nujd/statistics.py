"""Sample statistics that produce the matrices to be jointly diagonalized.

All expectations are time averages over a single realization (ergodic
surrogate) with 1/T normalization after mean removal.  Congruence kinds
follow the construction: plain/pseudo second-order statistics are Hermitian
resp. transpose kind, and a cumulant slice on axes (p, q) is Hermitian kind
iff exactly one of the two axis conjugation bits is set.

Cumulants use the full partition-sum formula

    cum(x_1, ..., x_k) = sum over partitions {J_1..J_p} of
        (-1)^(p-1) (p-1)! * prod_b E[prod_{q in J_b} x_q]

with conjugation applied per slot before multiplication.  Partitions are
enumerated exactly (Bell(6) = 203 at the order cap) and cached per order.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import CongruenceKind, TaggedMatrix, hermitian_skew_split
from .errors import DimensionMismatch, NonFiniteEntries, ZeroPowerChannel
from .errors import RankDeficiencyWarning

MAX_CUMULANT_ORDER = 6


@dataclass(frozen=True)
class SignalBlock:
    """Multichannel complex time series, shape (channels m, samples T)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.complex128)
        if d.ndim != 2:
            raise DimensionMismatch("signal data must be a 2-d (m, T) array")
        if not np.all(np.isfinite(d.real)) or not np.all(np.isfinite(d.imag)):
            raise NonFiniteEntries("signal contains NaN or infinite samples")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    def centered(self) -> np.ndarray:
        return self.data - self.data.mean(axis=1, keepdims=True)


@dataclass(frozen=True)
class ConjugationPattern:
    """Binary vector enabling complex conjugation per tensor slot."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not 2 <= len(bits) <= MAX_CUMULANT_ORDER:
            raise ValueError(
                f"pattern length must be 2..{MAX_CUMULANT_ORDER}, got {len(bits)}"
            )
        if any(b not in (0, 1) for b in bits):
            raise ValueError("pattern bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "ConjugationPattern":
        return cls(tuple(int(ch) for ch in s))

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)


def _as_pattern(pattern) -> ConjugationPattern:
    if isinstance(pattern, ConjugationPattern):
        return pattern
    if isinstance(pattern, str):
        return ConjugationPattern.from_string(pattern)
    return ConjugationPattern(tuple(pattern))


@dataclass(frozen=True)
class LaggedCorrelation:
    """Raw lagged correlation matrix with its Hermitian/skew split attached.

    The raw matrix E[w(t) w(t+lag)^H] is generally not Hermitian; ``raw`` =
    ``hermitian.matrix`` + i * ``skew.matrix`` and both parts are certified
    Hermitian-kind carriers.
    """

    raw: np.ndarray
    hermitian: TaggedMatrix
    skew: TaggedMatrix
    lag: int


@dataclass(frozen=True)
class CumulantSlice:
    """An (m x m) matrix cut from a cumulant tensor by varying two slots.

    ``matrix`` is the certified tagged carrier: the symmetrized raw slice
    for transpose kind, or the Hermitian part of the split for Hermitian
    kind (whose skew companion is then in ``skew``).  ``axes`` and
    ``fixed_indices`` are 0-based.
    """

    raw: np.ndarray
    order: int
    pattern: ConjugationPattern
    fixed_indices: tuple
    axes: tuple
    kind: CongruenceKind
    matrix: TaggedMatrix
    skew: Optional[TaggedMatrix]


@functools.lru_cache(maxsize=None)
def set_partitions(k: int) -> tuple:
    """All partitions of {0..k-1} as tuples of sorted index blocks."""
    if k == 0:
        return ((),)
    parts = []
    for smaller in set_partitions(k - 1):
        last = k - 1
        for i in range(len(smaller)):
            parts.append(smaller[:i] + (smaller[i] + (last,),) + smaller[i + 1:])
        parts.append(smaller + ((last,),))
    return tuple(parts)


def covariance(w: SignalBlock) -> TaggedMatrix:
    """Sample covariance (1/T) sum w(t) w(t)^H after mean removal."""
    if w.T < w.m:
        warnings.warn(
            f"T = {w.T} < m = {w.m}: covariance is rank deficient",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    xc = w.centered()
    c = xc @ xc.conj().T / w.T
    c = (c + c.conj().T) / 2.0
    return TaggedMatrix(c, CongruenceKind.HERMITIAN)


def pseudo_covariance(w: SignalBlock) -> TaggedMatrix:
    """Sample pseudo-covariance (1/T) sum w(t) w(t)^T, complex symmetric."""
    xc = w.centered()
    r = xc @ xc.T / w.T
    r = (r + r.T) / 2.0
    return TaggedMatrix(r, CongruenceKind.TRANSPOSE)


def autocorrelation(w: SignalBlock, lag: int) -> LaggedCorrelation:
    """Lagged correlation (1/(T-lag)) sum w(t) w(t+lag)^H with split parts.

    The raw matrix is not Hermitian in general; both Hermitian and skew
    parts are attached so callers can feed certified carriers downstream.
    """
    if not 0 <= lag < w.T:
        raise ValueError(f"lag must satisfy 0 <= lag < T, got {lag}")
    xc = w.centered()
    n = w.T - lag
    raw = xc[:, :n] @ xc[:, lag:].conj().T / n
    herm, skew = hermitian_skew_split(raw)
    return LaggedCorrelation(
        raw=raw,
        hermitian=TaggedMatrix(herm, CongruenceKind.HERMITIAN),
        skew=TaggedMatrix(skew, CongruenceKind.HERMITIAN),
        lag=lag,
    )


def pseudo_autocorrelation(w: SignalBlock, lag: int) -> TaggedMatrix:
    """Lagged pseudo-correlation (1/(T-lag)) sum w(t) w(t+lag)^T, symmetrized."""
    if not 0 <= lag < w.T:
        raise ValueError(f"lag must satisfy 0 <= lag < T, got {lag}")
    xc = w.centered()
    n = w.T - lag
    raw = xc[:, :n] @ xc[:, lag:].T / n
    return TaggedMatrix((raw + raw.T) / 2.0, CongruenceKind.TRANSPOSE)


def windowed_covariances(w: SignalBlock, windows: Sequence[tuple]) -> list:
    """One covariance per (start, length) window; empty list for no windows."""
    out = []
    for start, length in windows:
        if start < 0 or length < w.m or start + length > w.T:
            raise ValueError(f"bad window (start={start}, length={length})")
        out.append(covariance(SignalBlock(w.data[:, start : start + length])))
    return out


def circularity_coefficient(channel) -> float:
    """|E[s^2]| / E[|s|^2] of one channel, estimated by time averages."""
    x = np.asarray(channel, dtype=np.complex128).ravel()
    x = x - x.mean()
    power = float(np.mean(np.abs(x) ** 2))
    if power <= 0.0:
        raise ZeroPowerChannel("channel has zero power after centering")
    return float(np.abs(np.mean(x * x)) / power)


def cumulant(channels: Sequence, pattern) -> complex:
    """Joint cumulant of k channels with per-slot conjugation.

    Channels are centered, conjugated per the pattern, and combined through
    the exact partition sum; sample moments use 1/T normalization.
    """
    pat = _as_pattern(pattern)
    k = len(pat)
    if len(channels) != k:
        raise DimensionMismatch("need one channel per pattern slot")
    series = []
    length = None
    for x, bit in zip(channels, pat):
        a = np.asarray(x, dtype=np.complex128).ravel()
        if length is None:
            length = a.size
        elif a.size != length:
            raise DimensionMismatch("channels must have equal length")
        a = a - a.mean()
        series.append(np.conj(a) if bit else a)
    moments = {}

    def block_moment(block):
        if block not in moments:
            prod = series[block[0]].copy()
            for idx in block[1:]:
                prod *= series[idx]
            moments[block] = complex(prod.mean())
        return moments[block]

    total = 0.0 + 0.0j
    for partition in set_partitions(k):
        p = len(partition)
        coef = (-1) ** (p - 1) * math.factorial(p - 1)
        term = complex(coef)
        for block in partition:
            term *= block_moment(block)
        total += term
    return complex(total)


def _slice_from_series(series, p, q, m, length):
    """Partition-sum slice over axis slots (p, q) given per-slot series.

    ``series[r]`` is an (m, length) array for the axis slots and a
    (length,) array for fixed slots.
    """
    moments = {}

    def block_moment(block):
        if block in moments:
            return moments[block]
        fixed = [r for r in block if r != p and r != q]
        base = None
        for r in fixed:
            base = series[r] if base is None else base * series[r]
        has_p = p in block
        has_q = q in block
        if has_p and has_q:
            left = series[p] if base is None else series[p] * base
            val = left @ series[q].T / length
        elif has_p:
            left = series[p] if base is None else series[p] * base
            val = left.mean(axis=1)
        elif has_q:
            left = series[q] if base is None else series[q] * base
            val = left.mean(axis=1)
        else:
            val = complex(base.mean())
        moments[block] = val
        return val

    k = len(series)
    out = np.zeros((m, m), dtype=np.complex128)
    for partition in set_partitions(k):
        nblocks = len(partition)
        coef = complex((-1) ** (nblocks - 1) * math.factorial(nblocks - 1))
        scalars = coef
        vec_p = None
        vec_q = None
        mat = None
        for block in partition:
            val = block_moment(block)
            if np.isscalar(val) or isinstance(val, complex):
                scalars *= val
            elif val.ndim == 2:
                mat = val
            elif p in block:
                vec_p = val
            else:
                vec_q = val
        if mat is not None:
            out += scalars * mat
        else:
            out += scalars * np.outer(vec_p, vec_q)
    return out


def _finish_slice(raw, k, pat, fixed_indices, axes):
    p, q = axes
    kind = (
        CongruenceKind.HERMITIAN
        if (pat.bits[p] ^ pat.bits[q]) == 1
        else CongruenceKind.TRANSPOSE
    )
    if kind is CongruenceKind.TRANSPOSE:
        tagged = TaggedMatrix((raw + raw.T) / 2.0, kind)
        skew = None
    else:
        herm, skew_part = hermitian_skew_split(raw)
        tagged = TaggedMatrix(herm, kind)
        skew = TaggedMatrix(skew_part, kind)
    return CumulantSlice(
        raw=raw,
        order=k,
        pattern=pat,
        fixed_indices=tuple(fixed_indices),
        axes=tuple(axes),
        kind=kind,
        matrix=tagged,
        skew=skew,
    )


def _check_slice_args(w, pat, fixed_indices, axes):
    k = len(pat)
    p, q = axes
    if p == q:
        raise ValueError("slice axes must be distinct")
    if not (0 <= p < k and 0 <= q < k):
        raise ValueError(f"axes must be slot indices in 0..{k - 1}")
    if len(fixed_indices) != k - 2:
        raise ValueError(f"need {k - 2} fixed channel indices, got {len(fixed_indices)}")
    if any(not 0 <= c < w.m for c in fixed_indices):
        raise ValueError("fixed channel index out of range")
    return k, p, q


def cumulant_slice(w: SignalBlock, pattern, fixed_indices, axes) -> CumulantSlice:
    """Cumulant-tensor slice varying the two axis slots over all channels.

    Entry (a, b) is the order-k cumulant with channel a in slot ``axes[0]``,
    channel b in slot ``axes[1]``, and the remaining slots pinned to
    ``fixed_indices`` (in slot order).  All indices 0-based.
    """
    pat = _as_pattern(pattern)
    k, p, q = _check_slice_args(w, pat, fixed_indices, axes)
    xc = w.centered()
    fixed = list(fixed_indices)
    series = []
    it = iter(fixed)
    for r in range(k):
        if r == p or r == q:
            s = xc
        else:
            s = xc[next(it)]
        series.append(np.conj(s) if pat.bits[r] else s)
    raw = _slice_from_series(series, p, q, w.m, w.T)
    return _finish_slice(raw, k, pat, fixed_indices, axes)


def lagged_cumulant_slice(
    w: SignalBlock, pattern, offsets, axes, fixed_indices=()
) -> CumulantSlice:
    """Cumulant slice with one time offset per slot (lagged statistics).

    Slot r reads its channel at t + offsets[r]; averages run over the
    largest common window.  Uniform offsets on the two axis slots reproduce
    the lagged (pseudo-)correlation matrices at order two, up to the O(1/T)
    window-mean correction the cumulant subtracts.
    """
    pat = _as_pattern(pattern)
    k, p, q = _check_slice_args(w, pat, fixed_indices, axes)
    offs = [int(t) for t in offsets]
    if len(offs) != k:
        raise ValueError(f"need one offset per slot, got {len(offs)}")
    if any(t < 0 for t in offs):
        raise ValueError("offsets must be nonnegative")
    top = max(offs)
    if top >= w.T:
        raise ValueError("offsets leave no overlapping samples")
    n = w.T - top
    xc = w.centered()
    fixed = list(fixed_indices)
    series = []
    it = iter(fixed)
    for r in range(k):
        sl = slice(offs[r], offs[r] + n)
        if r == p or r == q:
            s = xc[:, sl]
        else:
            s = xc[next(it), sl]
        series.append(np.conj(s) if pat.bits[r] else s)
    raw = _slice_from_series(series, p, q, w.m, n)
    return _finish_slice(raw, k, pat, fixed_indices, axes)
