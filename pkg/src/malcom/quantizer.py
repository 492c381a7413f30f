"""Dithered uniform quantization of residual vectors with adaptive range.

The encoder normalizes a residual into [0, 1] by its min/max, applies
stochastic rounding onto one of ``levels_count`` levels, and the receiver
de-normalizes with an extra 1/tau shrink, tau = 1 + d/L**2. Exact-zero
entries are carried by a dedicated symbol so they survive the roundtrip
as exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng

# Symbol marking an exact-zero input entry. It sits outside [0, L) and is
# typically the most frequent symbol after soft-thresholding, which makes
# it free to encode.
ZERO_SYMBOL = -1


@dataclass(eq=False)
class QuantizedResidual:
    """Level indices plus the normalization metadata needed to dequantize."""

    levels: np.ndarray  # int32, each ZERO_SYMBOL or in [0, levels_count)
    min_val: float
    range: float
    levels_count: int

    def __post_init__(self) -> None:
        self.levels = np.asarray(self.levels, dtype=np.int32)
        if self.levels.ndim != 1 or self.levels.size < 1:
            raise ValueError("levels must be a non-empty 1-d sequence")
        if self.levels_count < 2:
            raise ValueError(f"levels_count must be >= 2, got {self.levels_count}")
        if not (np.isfinite(self.min_val) and np.isfinite(self.range)):
            raise ValueError("min_val and range must be finite")
        if self.range < 0:
            raise ValueError(f"range must be >= 0, got {self.range}")
        bad = (self.levels != ZERO_SYMBOL) & (
            (self.levels < 0) | (self.levels >= self.levels_count)
        )
        if bad.any():
            raise ValueError("level symbols outside {Z} | [0, levels_count)")
        if self.range == 0 and (self.levels > 0).any():
            raise ValueError("range 0 requires all non-zero symbols to be level 0")

    @property
    def dim(self) -> int:
        return self.levels.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizedResidual):
            return NotImplemented
        return (
            self.levels_count == other.levels_count
            and self.min_val == other.min_val
            and self.range == other.range
            and np.array_equal(self.levels, other.levels)
        )


@dataclass(frozen=True)
class ContractionParams:
    """Quantizer quality constants: tau = 1 + d/L**2, bound = 1 - 1/tau."""

    tau: float
    bound: float


def _dither_values(dither, d: int) -> np.ndarray:
    if isinstance(dither, np.random.Generator):
        return dither.random(d)
    u = np.asarray(dither, dtype=np.float64)
    if u.shape != (d,):
        raise ValueError(f"dither must provide {d} values, got shape {u.shape}")
    if (u < 0).any() or (u >= 1).any():
        raise ValueError("dither values must lie in [0, 1)")
    return u


def quantize(p, levels_count: int, dither) -> QuantizedResidual:
    """Quantize a residual vector onto levels_count levels with dithering.

    ``dither`` is either a numpy Generator or an array of d uniforms in
    [0, 1), one per entry. Exact-zero entries map to ZERO_SYMBOL; others
    to clamp(floor(phat*L + u), 0, L-1) with phat the min/max-normalized
    entry. The clamp folds the boundary level L back to L-1 so the
    alphabet has exactly L levels plus Z.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("input must be a non-empty 1-d vector")
    if levels_count < 2:
        raise ValueError(f"levels_count must be >= 2, got {levels_count}")
    if not np.isfinite(p).all():
        raise ValueError("input contains non-finite entries")
    u = _dither_values(dither, p.size)
    min_val = float(p.min())
    range_val = float(p.max() - min_val)
    if range_val > 0:
        phat = (p - min_val) / range_val
        levels = np.floor(phat * levels_count + u).astype(np.int32)
        np.clip(levels, 0, levels_count - 1, out=levels)
    else:
        levels = np.zeros(p.size, dtype=np.int32)
    levels[p == 0.0] = ZERO_SYMBOL
    return QuantizedResidual(levels, min_val, range_val, levels_count)


def dequantize(q: QuantizedResidual) -> np.ndarray:
    """Receiver-side de-normalization: (range*(level/L) + min)/tau, Z -> 0."""
    tau = 1.0 + q.dim / q.levels_count**2
    out = (q.range * (q.levels / q.levels_count) + q.min_val) / tau
    out[q.levels == ZERO_SYMBOL] = 0.0
    return out


def contraction_params(dim: int, levels_count: int) -> ContractionParams:
    """Compression error constants for dimension d and L levels."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if levels_count < 2:
        raise ValueError(f"levels_count must be >= 2, got {levels_count}")
    tau = 1.0 + dim / levels_count**2
    return ContractionParams(tau=tau, bound=1.0 - 1.0 / tau)


def empirical_contraction(p, levels_count: int, trials: int, seed: int) -> float:
    """Monte-Carlo mean of ||roundtrip(p) - p||^2 / ||p||^2 over fresh dithers.

    The trial loop broadcasts the quantize/dequantize formulas over a
    (trials, d) dither matrix; each row reproduces quantize(p, L, row).
    """
    p = np.asarray(p, dtype=np.float64)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    norm_sq = float(p @ p)
    if norm_sq == 0.0:
        raise ValueError("zero vector rejected: contraction ratio undefined")
    if levels_count < 2:
        raise ValueError(f"levels_count must be >= 2, got {levels_count}")
    if not np.isfinite(p).all():
        raise ValueError("input contains non-finite entries")
    d = p.size
    u = rng.stream(seed, rng.DITHER).random((trials, d))
    min_val = p.min()
    range_val = p.max() - min_val
    if range_val > 0:
        phat = (p - min_val) / range_val
        levels = np.floor(phat[None, :] * levels_count + u).astype(np.int64)
        np.clip(levels, 0, levels_count - 1, out=levels)
    else:
        levels = np.zeros((trials, d), dtype=np.int64)
    tau = 1.0 + d / levels_count**2
    recon = (range_val * (levels / levels_count) + min_val) / tau
    recon[:, p == 0.0] = 0.0
    err = recon - p[None, :]
    return float(np.mean(np.einsum("ij,ij->i", err, err)) / norm_sq)
