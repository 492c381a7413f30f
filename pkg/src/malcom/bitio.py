"""MSB-first bit stream writer/reader over byte buffers."""

from __future__ import annotations


class DecodeError(ValueError):
    """Raised when a bitstream cannot be decoded; message carries the bit offset."""


class BitWriter:
    """Accumulates bits most-significant-first, zero-padding the final byte."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_len = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        acc = (self._acc << nbits) | value
        n = self._nacc + nbits
        while n >= 8:
            n -= 8
            self._buf.append((acc >> n) & 0xFF)
        self._acc = acc & ((1 << n) - 1)
        self._nacc = n
        self.bit_len += nbits

    def write_unary(self, q: int) -> None:
        """q one-bits followed by a terminating zero."""
        while q >= 32:
            self.write(0xFFFFFFFF, 32)
            q -= 32
        self.write(((1 << q) - 1) << 1, q + 1)

    def getvalue(self) -> bytes:
        out = bytes(self._buf)
        if self._nacc:
            out += bytes(((self._acc << (8 - self._nacc)) & 0xFF,))
        return out


class BitReader:
    """Reads MSB-first bits; refuses to read past the declared bit length."""

    def __init__(self, data: bytes, bit_len: int | None = None) -> None:
        self._data = data
        self._bit_len = 8 * len(data) if bit_len is None else bit_len
        self._pos = 0

    def tell(self) -> int:
        return self._pos

    def read(self, nbits: int) -> int:
        pos = self._pos
        if pos + nbits > self._bit_len:
            raise DecodeError(
                f"truncated payload: needed {nbits} bits at bit offset {pos}"
            )
        self._pos = pos + nbits
        out = 0
        data = self._data
        while nbits > 0:
            byte = data[pos >> 3]
            avail = 8 - (pos & 7)
            take = avail if avail < nbits else nbits
            out = (out << take) | ((byte >> (avail - take)) & ((1 << take) - 1))
            pos += take
            nbits -= take
        return out

    def read_unary(self) -> int:
        q = 0
        while self.read(1):
            q += 1
        return q
