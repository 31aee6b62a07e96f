"""Nested CRC family: one degree-16 generator serving CRC-6/11/16.

The degree-L generator is derived from the shared degree-16 polynomial by
keeping the terms of degree <= L (and forcing the degree-L term), so a single
shift-register bank can produce all three lengths. Register convention:
zero initial state, no final XOR, no bit reflection, MSB-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..bits import BitBlock, BitRole
from ..errors import BlockTooShort, UnsupportedLength

SUPPORTED_LENGTHS = frozenset((6, 11, 16))


class CrcVariant(Enum):
    NR_BASED = "nr_based"      # x^16 + x^11 + x^6 + x^5 + 1
    NEW_SEARCH = "new_search"  # x^16 + x^11 + x^6 + x^4 + x^3 + 1


def poly_from_degrees(degree: int, terms) -> np.ndarray:
    """Coefficient vector (degree-descending) with 1s at the given term degrees."""
    coeffs = np.zeros(degree + 1, dtype=np.uint8)
    for t in terms:
        coeffs[degree - t] = 1
    return coeffs


def poly_from_hex(text: str) -> np.ndarray:
    """Parse a degree-descending hex coefficient string, e.g. '0x10861'."""
    value = int(text, 16)
    if value <= 0:
        raise ValueError("polynomial must be non-zero")
    nbits = value.bit_length()
    return np.array([(value >> (nbits - 1 - i)) & 1 for i in range(nbits)], dtype=np.uint8)


def poly_to_int(coeffs: np.ndarray) -> int:
    out = 0
    for c in coeffs:
        out = (out << 1) | int(c)
    return out


_NESTED = {
    CrcVariant.NR_BASED: poly_from_degrees(16, (16, 11, 6, 5, 0)),
    CrcVariant.NEW_SEARCH: poly_from_degrees(16, (16, 11, 6, 4, 3, 0)),
}


@dataclass(frozen=True)
class CrcSpec:
    """Shared nested generator plus the CRC lengths it serves."""

    variant: CrcVariant = CrcVariant.NR_BASED
    nested_poly: np.ndarray = None
    lengths: frozenset = SUPPORTED_LENGTHS

    def __post_init__(self):
        poly = self.nested_poly
        if poly is None:
            poly = _NESTED[self.variant]
        poly = np.ascontiguousarray(poly, dtype=np.uint8)
        if poly.size != 17 or poly[0] != 1:
            raise ValueError("nested polynomial must have degree exactly 16")
        if poly[-1] != 1:
            raise ValueError("nested polynomial must have constant term 1")
        if not np.array_equal(poly, _NESTED[self.variant]):
            raise ValueError(f"polynomial does not match variant {self.variant.value}")
        object.__setattr__(self, "nested_poly", poly)
        object.__setattr__(self, "lengths", frozenset(self.lengths))
        for L in self.lengths:
            derived = crc_derive(self, L)
            assert derived[0] == 1 and derived[-1] == 1


def crc_derive(spec: CrcSpec, length: int) -> np.ndarray:
    """Degree-`length` generator: nested-poly terms of degree <= length.

    The degree-`length` term is forced to 1 (for the two nested variants it is
    already present, which is what makes the family nested).
    """
    if length not in spec.lengths or length not in SUPPORTED_LENGTHS:
        raise UnsupportedLength(f"CRC length {length} not in {sorted(SUPPORTED_LENGTHS)}")
    derived = spec.nested_poly[16 - length:].copy()
    derived[0] = 1
    return derived


def _remainder_int(bits: np.ndarray, poly_int: int, degree: int) -> int:
    """Remainder of bits * x^degree modulo the generator, zero initial register."""
    mask = (1 << degree) - 1
    top = 1 << (degree - 1)
    gen = poly_int & mask  # drop the x^degree term
    reg = 0
    for b in bits:
        fb = ((reg & top) != 0) ^ bool(b)
        reg = (reg << 1) & mask
        if fb:
            reg ^= gen
    return reg


def crc_remainder(bits: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """CRC parity bits (degree-descending) for a bit sequence."""
    degree = poly.size - 1
    reg = _remainder_int(np.asarray(bits, dtype=np.uint8), poly_to_int(poly), degree)
    return np.array([(reg >> (degree - 1 - i)) & 1 for i in range(degree)], dtype=np.uint8)


def crc_attach(msg: BitBlock, spec: CrcSpec, length: int) -> BitBlock:
    """Append the `length`-bit CRC of the message."""
    if msg.role is not BitRole.MESSAGE:
        raise ValueError("crc_attach expects a MESSAGE block")
    poly = crc_derive(spec, length)
    parity = crc_remainder(msg.bits, poly)
    return BitBlock(np.concatenate([msg.bits, parity]), BitRole.MESSAGE_WITH_CRC)


def crc_check(block: BitBlock, spec: CrcSpec, length: int) -> bool:
    """True iff the trailing `length` bits match the CRC of the leading part."""
    if block.role is not BitRole.MESSAGE_WITH_CRC:
        raise ValueError("crc_check expects a MESSAGE_WITH_CRC block")
    poly = crc_derive(spec, length)
    if len(block) <= length:
        raise BlockTooShort(f"block of {len(block)} bits cannot carry a CRC-{length}")
    parity = crc_remainder(block.bits[:-length], poly)
    return bool(np.array_equal(parity, block.bits[-length:]))


def crc16_table(poly: np.ndarray) -> np.ndarray:
    """Byte-indexed remainder-update table for a degree-16 generator."""
    degree = poly.size - 1
    if degree != 16:
        raise UnsupportedLength("table method is built for the degree-16 generator")
    gen = poly_to_int(poly) & 0xFFFF
    table = np.zeros(256, dtype=np.uint16)
    for v in range(256):
        reg = v << 8
        for _ in range(8):
            if reg & 0x8000:
                reg = ((reg << 1) ^ gen) & 0xFFFF
            else:
                reg = (reg << 1) & 0xFFFF
        table[v] = reg
    return table


def crc16_remainder_of_bytes(blocks: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Vectorized degree-16 remainders of many byte blocks.

    ``blocks`` is (n_blocks, n_bytes) uint8; returns (n_blocks,) uint16 with the
    remainder of each block interpreted as an MSB-first bit polynomial. A block
    whose remainder is zero passes the CRC check (code linearity).
    """
    rem = np.zeros(blocks.shape[0], dtype=np.uint16)
    for j in range(blocks.shape[1]):
        idx = ((rem >> 8).astype(np.uint8)) ^ blocks[:, j]
        rem = (rem << 8) ^ table[idx]
    return rem
