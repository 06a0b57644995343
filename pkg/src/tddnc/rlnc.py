"""Random linear network coding over GF(2**g): field tables, encoder, rank-tracking decoder."""

from __future__ import annotations

import math

import numpy as np

# Default reduction polynomials per coefficient width, written with the
# leading x**g term (0x11B = x^8+x^4+x^3+x+1).  Fixed here so decoders built
# independently agree on the field; callers may override.
DEFAULT_POLYNOMIALS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


class GaloisField:
    """GF(2**g) arithmetic for 1 <= g <= 16 via log/antilog tables.

    Addition is bitwise xor.  Multiplication maps through discrete logs of a
    multiplicative generator; the generator is searched for rather than
    assumed to be x, so non-primitive reduction polynomials (e.g. 0x11B)
    work.  Tables are immutable after construction and safe to share.
    """

    def __init__(self, g: int, polynomial: int | None = None):
        if not 1 <= g <= 16:
            raise ValueError("coefficient width g must lie in [1, 16]")
        if polynomial is None:
            polynomial = DEFAULT_POLYNOMIALS[g]
        if polynomial.bit_length() != g + 1:
            raise ValueError("reduction polynomial must have degree exactly g")
        self.g = g
        self.q = 1 << g
        self.polynomial = polynomial
        self._build_tables()

    def _mul_slow(self, a: int, b: int) -> int:
        # carry-less multiply with reduction, used only to build the tables
        acc = 0
        while b:
            if b & 1:
                acc ^= a
            b >>= 1
            a <<= 1
            if a & self.q:
                a ^= self.polynomial
        return acc

    def _order(self, a: int) -> int:
        x, k = a, 1
        while x != 1:
            x = self._mul_slow(x, a)
            k += 1
            if k > self.q:
                raise ValueError("reduction polynomial is not irreducible")
        return k

    def _build_tables(self):
        group = self.q - 1
        gen = 1
        for candidate in range(2, self.q):
            if self._order(candidate) == group:
                gen = candidate
                break
        self.generator = gen
        exp = np.zeros(2 * group, dtype=np.int64)
        log = np.zeros(self.q, dtype=np.int64)
        x = 1
        for k in range(group):
            exp[k] = x
            log[x] = k
            x = self._mul_slow(x, gen)
        if x != 1:
            raise ValueError("reduction polynomial is not irreducible")
        exp[group:] = exp[:group]  # doubled so products of logs need no modulo
        self._exp = exp
        self._log = log

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self._exp[self._log[a] + self._log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)])

    def scale(self, a: int, row: np.ndarray) -> np.ndarray:
        """Elementwise a * row over the field."""
        out = np.zeros_like(row)
        if a == 0:
            return out
        nz = row != 0
        out[nz] = self._exp[self._log[a] + self._log[row[nz]]]
        return out


class CodedPacket:
    """One coded packet: the M-long encoding vector and the coded payload symbols."""

    __slots__ = ("coefficients", "payload")

    def __init__(self, coefficients: np.ndarray, payload: np.ndarray):
        self.coefficients = np.asarray(coefficients, dtype=np.int64)
        self.payload = np.asarray(payload, dtype=np.int64)


def random_coefficients(field: GaloisField, M: int, rng: np.random.Generator) -> np.ndarray:
    """Draw M coefficients uniformly over the whole field; all-zero vectors are allowed."""
    return rng.integers(0, field.q, size=M, dtype=np.int64)


def encode(
    field: GaloisField,
    block: np.ndarray,
    coefficients: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> CodedPacket:
    """Linear combination of the block's M payload rows under random (or given) coefficients."""
    block = np.asarray(block, dtype=np.int64)
    if block.ndim != 2:
        raise ValueError("block must be an (M, symbols) array")
    if coefficients is None:
        if rng is None:
            raise ValueError("either coefficients or an rng must be supplied")
        coefficients = random_coefficients(field, block.shape[0], rng)
    coefficients = np.asarray(coefficients, dtype=np.int64)
    if coefficients.shape != (block.shape[0],):
        raise ValueError("coefficient vector length must equal the block size")
    payload = np.zeros(block.shape[1], dtype=np.int64)
    for c, row in zip(coefficients, block):
        if c:
            payload ^= field.scale(int(c), row)
    return CodedPacket(coefficients, payload)


class Decoder:
    """Incremental Gaussian elimination over received packets, tracking received dofs.

    Rows are kept fully reduced (pivots normalized to 1 and eliminated from
    every other row), so once rank reaches M the payload columns hold the
    decoded block directly.
    """

    def __init__(self, field: GaloisField, M: int, payload_symbols: int):
        if M < 1:
            raise ValueError("block size must be positive")
        if payload_symbols < 0:
            raise ValueError("payload length cannot be negative")
        self.field = field
        self.M = M
        self.payload_symbols = payload_symbols
        self._rows: list[np.ndarray] = []   # coefficient part + payload part
        self._pivots: list[int] = []        # pivot column of each row, ascending

    @property
    def rank(self) -> int:
        return len(self._rows)

    def absorb(self, packet: CodedPacket) -> int:
        """Fold one packet into the basis; returns 1 if it carried a new dof, else 0."""
        if packet.coefficients.shape != (self.M,):
            raise ValueError("packet block size mismatch")
        if packet.payload.shape != (self.payload_symbols,):
            raise ValueError("packet payload length mismatch")
        v = np.concatenate([packet.coefficients, packet.payload]).astype(np.int64)
        for pivot, row in zip(self._pivots, self._rows):
            a = int(v[pivot])
            if a:
                v ^= self.field.scale(a, row)
        nz = np.nonzero(v[: self.M])[0]
        if nz.size == 0:
            return 0
        pivot = int(nz[0])
        v = self.field.scale(self.field.inv(int(v[pivot])), v)
        for k, row in enumerate(self._rows):
            a = int(row[pivot])
            if a:
                self._rows[k] = row ^ self.field.scale(a, v)
        at = 0
        while at < len(self._pivots) and self._pivots[at] < pivot:
            at += 1
        self._pivots.insert(at, pivot)
        self._rows.insert(at, v)
        return 1

    def decode(self) -> np.ndarray:
        """The original (M, symbols) block; requires full rank."""
        if self.rank < self.M:
            raise ValueError("decoding requires rank M")
        out = np.zeros((self.M, self.payload_symbols), dtype=np.int64)
        for pivot, row in zip(self._pivots, self._rows):
            out[pivot] = row[self.M :]
        return out


def pack_bits(data: bytes, n_bits: int, g: int) -> np.ndarray:
    """First n_bits of `data` (MSB-first) as ceil(n_bits/g) field symbols, zero-padded."""
    if n_bits < 1:
        raise ValueError("n_bits must be positive")
    if n_bits > 8 * len(data):
        raise ValueError("data is shorter than n_bits")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n_bits]
    symbols = math.ceil(n_bits / g)
    padded = np.zeros(symbols * g, dtype=np.uint8)
    padded[:n_bits] = bits
    weights = 1 << np.arange(g - 1, -1, -1, dtype=np.int64)
    return padded.reshape(symbols, g) @ weights


def unpack_bits(symbols: np.ndarray, n_bits: int, g: int) -> bytes:
    """Inverse of pack_bits: strip the padding and rebuild the byte string."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size * g < n_bits:
        raise ValueError("not enough symbols for n_bits")
    shifts = np.arange(g - 1, -1, -1, dtype=np.int64)
    bits = ((symbols[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)[:n_bits]
    out = np.zeros(math.ceil(n_bits / 8) * 8, dtype=np.uint8)
    out[:n_bits] = bits
    return np.packbits(out).tobytes()
