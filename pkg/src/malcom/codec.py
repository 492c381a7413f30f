"""Bit-exact source coding of quantized residuals.

Wire format per message: a 24-byte little-endian header
(dim u32, levels_count u16, implicit_symbol u16, min_val f64, range f64)
followed by the payload padded to a byte boundary, bits MSB-first.

The payload starts with Elias omega codes of (count + 1) for all L+1
alphabet symbols in fixed order (the zero symbol first, then levels
0..L-1). Then, for every symbol except the implicit one (the most
frequent, ties toward the lower index), the gaps between its occurrences
inside the not-yet-assigned index set are Golomb coded, one code per
occurrence; the run after the last occurrence is never sent because the
decoder knows the count. The implicit symbol's positions are the
leftover indices.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .bitio import BitReader, BitWriter, DecodeError
from .quantizer import ZERO_SYMBOL, QuantizedResidual

__all__ = [
    "DecodeError",
    "TypeVector",
    "EncodedMessage",
    "LaplaceRateModel",
    "HEADER_BYTES",
    "GOLOMB_OVERHEAD_BITS",
    "elias_omega_encode",
    "elias_omega_decode",
    "golomb_encode",
    "golomb_decode",
    "compute_type_vector",
    "encode",
    "decode",
    "baseline_per_entry_encode",
    "baseline_per_entry_decode",
    "bit_bound",
    "laplace_rate_bound",
    "adaptive_range_rule",
    "golomb_parameter",
]

HEADER_BYTES = 24
_HEADER = struct.Struct("<IHHdd")

# Per-occurrence Golomb overhead constant used by the analytic rate bound.
GOLOMB_OVERHEAD_BITS = 2.914


# ---------------------------------------------------------------------------
# Elias omega and Golomb primitives


def _write_elias_omega(w: BitWriter, n: int) -> None:
    if n < 1:
        raise ValueError(f"Elias omega requires n >= 1, got {n}")
    groups = []
    while n > 1:
        b = n.bit_length()
        groups.append((n, b))
        n = b - 1
    for value, b in reversed(groups):
        w.write(value, b)
    w.write(0, 1)


def _read_elias_omega(r: BitReader) -> int:
    n = 1
    while r.read(1):
        n = (1 << n) | r.read(n)
    return n


def elias_omega_encode(n: int) -> str:
    """Elias omega code of a positive integer, as a bit string."""
    w = BitWriter()
    _write_elias_omega(w, n)
    return _bits_to_str(w)


def elias_omega_decode(bits: str) -> tuple[int, int]:
    """Decode one Elias omega code; returns (value, bits consumed)."""
    r = _str_to_reader(bits)
    return _read_elias_omega(r), r.tell()


def golomb_parameter(remaining: int, count: int) -> int:
    """Golomb parameter for `count` occurrences in `remaining` slots."""
    return max(1, math.floor(math.log(2) * (remaining - count) / count + 0.5))


def _write_golomb(w: BitWriter, r_val: int, m: int) -> None:
    q, rem = divmod(r_val, m)
    w.write_unary(q)
    if m == 1:
        return
    b = (m - 1).bit_length()  # ceil(log2 m)
    cutoff = (1 << b) - m
    if rem < cutoff:
        w.write(rem, b - 1)
    else:
        w.write(rem + cutoff, b)


def _read_golomb(r: BitReader, m: int) -> int:
    q = r.read_unary()
    if m == 1:
        return q
    b = (m - 1).bit_length()
    cutoff = (1 << b) - m
    rem = r.read(b - 1) if b > 1 else 0
    if rem >= cutoff:
        rem = ((rem << 1) | r.read(1)) - cutoff
    return q * m + rem


def golomb_encode(r_val: int, m: int) -> str:
    """Golomb code of a nonnegative integer: unary quotient, truncated-binary
    remainder (b = ceil(log2 M), cutoff 2**b - M)."""
    if r_val < 0:
        raise ValueError(f"Golomb requires r >= 0, got {r_val}")
    if m < 1:
        raise ValueError(f"Golomb requires M >= 1, got {m}")
    w = BitWriter()
    _write_golomb(w, r_val, m)
    return _bits_to_str(w)


def golomb_decode(bits: str, m: int) -> tuple[int, int]:
    """Decode one Golomb code; returns (value, bits consumed)."""
    if m < 1:
        raise ValueError(f"Golomb requires M >= 1, got {m}")
    r = _str_to_reader(bits)
    return _read_golomb(r, m), r.tell()


def _bits_to_str(w: BitWriter) -> str:
    data = w.getvalue()
    return "".join(f"{byte:08b}" for byte in data)[: w.bit_len]


def _str_to_reader(bits: str) -> BitReader:
    padded = bits + "0" * (-len(bits) % 8)
    data = bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))
    return BitReader(data, bit_len=len(bits))


# ---------------------------------------------------------------------------
# Type vector and wire framing


@dataclass
class TypeVector:
    """Occurrence counts per alphabet symbol: index 0 is Z, index a is level a-1."""

    counts: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) != self.dim:
            raise ValueError("type vector counts must sum to dim")

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.dim


def compute_type_vector(q: QuantizedResidual) -> TypeVector:
    counts = np.bincount(q.levels + 1, minlength=q.levels_count + 1).astype(np.int64)
    return TypeVector(counts=counts, dim=q.dim)


def _alphabet_symbol(index: int) -> int:
    return ZERO_SYMBOL if index == 0 else index - 1


@dataclass
class EncodedMessage:
    """Self-describing bitstream exchanged per link per round."""

    dim: int
    levels_count: int
    implicit_symbol: int  # alphabet index: 0 is Z, a is level a-1
    min_val: float
    range: float
    payload: bytes
    payload_bit_len: int

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            self.dim, self.levels_count, self.implicit_symbol, self.min_val, self.range
        )
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedMessage":
        if len(data) < HEADER_BYTES:
            raise DecodeError(f"message shorter than {HEADER_BYTES}-byte header")
        dim, levels_count, implicit, min_val, range_val = _HEADER.unpack_from(data)
        payload = bytes(data[HEADER_BYTES:])
        # The wire does not carry the exact bit length; the padded length is
        # an upper bound and decoding consumes exactly what it needs.
        return cls(dim, levels_count, implicit, min_val, range_val, payload, 8 * len(payload))

    @property
    def wire_bits(self) -> int:
        """Bits on the wire: header plus byte-padded payload."""
        return 8 * HEADER_BYTES + 8 * len(self.payload)


# ---------------------------------------------------------------------------
# Main encode/decode


def encode(q: QuantizedResidual) -> EncodedMessage:
    """Source-code a quantized residual into a self-describing message."""
    tv = compute_type_vector(q)
    counts = tv.counts
    implicit = int(np.argmax(counts))  # ties resolve toward the lower index
    w = BitWriter()
    for t in counts:
        _write_elias_omega(w, int(t) + 1)
    unassigned = np.ones(q.dim, dtype=bool)
    for a_idx in range(q.levels_count + 1):
        t = int(counts[a_idx])
        if a_idx == implicit or t == 0:
            continue
        remaining = np.flatnonzero(unassigned)
        occ = np.flatnonzero(q.levels == _alphabet_symbol(a_idx))
        ranks = np.searchsorted(remaining, occ)
        m = golomb_parameter(remaining.size, t)
        prev = -1
        for rank in ranks.tolist():
            _write_golomb(w, rank - prev - 1, m)
            prev = rank
        unassigned[occ] = False
    return EncodedMessage(
        dim=q.dim,
        levels_count=q.levels_count,
        implicit_symbol=implicit,
        min_val=q.min_val,
        range=q.range,
        payload=w.getvalue(),
        payload_bit_len=w.bit_len,
    )


def decode(msg: EncodedMessage) -> QuantizedResidual:
    """Exact inverse of encode; raises DecodeError on malformed input."""
    if msg.dim == 0:
        raise DecodeError("header dim = 0")
    if msg.levels_count < 2:
        raise DecodeError(f"header levels_count = {msg.levels_count}, need >= 2")
    n_symbols = msg.levels_count + 1
    if not 0 <= msg.implicit_symbol < n_symbols:
        raise DecodeError(f"implicit symbol {msg.implicit_symbol} out of alphabet")
    r = BitReader(msg.payload, msg.payload_bit_len)
    counts = [_read_elias_omega(r) - 1 for _ in range(n_symbols)]
    total = sum(counts)
    if total != msg.dim:
        raise DecodeError(
            f"type vector sums to {total}, expected dim {msg.dim}"
            f" (bit offset {r.tell()})"
        )
    levels = np.full(msg.dim, _alphabet_symbol(msg.implicit_symbol), dtype=np.int32)
    unassigned = np.ones(msg.dim, dtype=bool)
    for a_idx in range(n_symbols):
        t = counts[a_idx]
        if a_idx == msg.implicit_symbol or t == 0:
            continue
        remaining = np.flatnonzero(unassigned)
        m = golomb_parameter(remaining.size, t)
        ranks = np.empty(t, dtype=np.int64)
        prev = -1
        for k in range(t):
            prev += _read_golomb(r, m) + 1
            if prev >= remaining.size:
                raise DecodeError(
                    f"run overruns remaining index set for symbol {a_idx}"
                    f" (bit offset {r.tell()})"
                )
            ranks[k] = prev
        idx = remaining[ranks]
        levels[idx] = _alphabet_symbol(a_idx)
        unassigned[idx] = False
    return QuantizedResidual(levels, msg.min_val, msg.range, msg.levels_count)


# ---------------------------------------------------------------------------
# Per-entry baseline codec (stand-in comparator)


def _baseline_codes(levels_count: int) -> list[tuple[int, int]]:
    codes = []
    for a_idx in range(levels_count + 1):
        w = BitWriter()
        _write_elias_omega(w, a_idx + 1)
        data = w.getvalue()
        codes.append((int.from_bytes(data, "big") >> (8 * len(data) - w.bit_len), w.bit_len))
    return codes


def baseline_per_entry_encode(q: QuantizedResidual) -> EncodedMessage:
    """Encode each symbol independently as Elias omega of (alphabet index + 1)."""
    codes = _baseline_codes(q.levels_count)
    w = BitWriter()
    for level in q.levels.tolist():
        value, nbits = codes[0 if level == ZERO_SYMBOL else level + 1]
        w.write(value, nbits)
    return EncodedMessage(
        dim=q.dim,
        levels_count=q.levels_count,
        implicit_symbol=0,
        min_val=q.min_val,
        range=q.range,
        payload=w.getvalue(),
        payload_bit_len=w.bit_len,
    )


def baseline_per_entry_decode(msg: EncodedMessage) -> QuantizedResidual:
    if msg.dim == 0:
        raise DecodeError("header dim = 0")
    if msg.levels_count < 2:
        raise DecodeError(f"header levels_count = {msg.levels_count}, need >= 2")
    r = BitReader(msg.payload, msg.payload_bit_len)
    levels = np.empty(msg.dim, dtype=np.int32)
    for i in range(msg.dim):
        a_idx = _read_elias_omega(r) - 1
        if a_idx > msg.levels_count:
            raise DecodeError(
                f"symbol index {a_idx} out of alphabet (bit offset {r.tell()})"
            )
        levels[i] = _alphabet_symbol(a_idx)
    return QuantizedResidual(levels, msg.min_val, msg.range, msg.levels_count)


# ---------------------------------------------------------------------------
# Rate calculators


def bit_bound(tv: TypeVector) -> float:
    """Analytic payload bound in bits per coordinate for a type vector.

    Evaluates H(f) + 2.914(1 - f0) + f0*log2(f0)
    + sum_{l>=1} f_l*log2(1 - sum_{m<l} f_m) on the descending-sorted
    frequencies; zero-frequency terms contribute 0.
    """
    f = np.sort(tv.frequencies)[::-1]
    f = f[f > 0]
    entropy = float(-(f * np.log2(f)).sum())
    total = entropy + GOLOMB_OVERHEAD_BITS * (1.0 - f[0]) + f[0] * math.log2(f[0])
    before = np.concatenate(([0.0], np.cumsum(f[:-1])))
    for l in range(1, f.size):
        rem = 1.0 - before[l]
        if rem > 0:
            total += f[l] * math.log2(rem)
    return total


@dataclass
class LaplaceRateModel:
    """Zero-mean Laplace residual model driving the analytic rate bound."""

    rho: float
    range_r: float
    levels_count: int

    def __post_init__(self) -> None:
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.range_r <= 0:
            raise ValueError(f"range_r must be > 0, got {self.range_r}")
        if self.levels_count < 2:
            raise ValueError(f"levels_count must be >= 2, got {self.levels_count}")

    @property
    def delta(self) -> float:
        return self.range_r / (2.0 * self.levels_count * self.rho)


def laplace_rate_bound(model: LaplaceRateModel) -> float:
    """Bits per coordinate under the Laplace residual model.

    2.914*exp(-D) + 2*sinh(D)*(1 - log2(1 - exp(-2D)))/(exp(2D) - 1)
    with D the model's delta; sinh(D)/(exp(2D)-1) = exp(-D)/2 exactly,
    which keeps large deltas finite.
    """
    delta = model.delta
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    tail = -math.expm1(-2.0 * delta)  # 1 - exp(-2*delta), accurate near 0
    return math.exp(-delta) * (GOLOMB_OVERHEAD_BITS + 1.0 - math.log2(tail))


def adaptive_range_rule(rho: float, d: int, epsilon: float) -> float:
    """Concentration-based quantizer range: 2*rho*ln(d/epsilon)."""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    return 2.0 * rho * math.log(d / epsilon)
