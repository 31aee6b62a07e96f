"""Nested convolutional encoders (K=6 and K=7 families, zero-tail and tail-biting).

Octal-to-taps convention: octal 133 with K=7 is binary 1011011; the leftmost
bit multiplies the newest input bit. Interlaced output order emits, per input
bit, the outputs of polynomials 1..n; swept order concatenates whole per-
polynomial streams instead (the memory-free interleaver).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..bits import BitBlock, BitRole
from ..errors import MessageTooShort

K7_BASE = (0o133, 0o171, 0o165)
K7_FOURTH = {"a": 0o117, "b": 0o127, "c": 0o137}
K6_SETS = {
    "a": (0o45, 0o73, 0o75, 0o67, 0o57, 0o55),
    "b": (0o55, 0o67, 0o77, 0o51, 0o53, 0o73),
    "c": (0o77, 0o73, 0o55, 0o45, 0o67, 0o65),
}


class Termination(Enum):
    ZERO_TAIL = "zero_tail"
    TAIL_BITING = "tail_biting"


def parse_octal(text) -> int:
    """Accept octal strings ('133') or already-octal ints (0o133)."""
    if isinstance(text, str):
        return int(text, 8)
    return int(text)


@dataclass(frozen=True)
class NestedCcConfig:
    constraint_length: int
    option_label: str
    rate_index: int
    termination: Termination = Termination.TAIL_BITING
    polys: tuple = None  # full nested set, octal ints

    def __post_init__(self):
        K = self.constraint_length
        if K not in (6, 7):
            raise ValueError("constraint length must be 6 or 7")
        if self.option_label not in ("a", "b", "c"):
            raise ValueError("option label must be one of a/b/c")
        polys = self.polys
        if polys is None:
            if K == 7:
                polys = K7_BASE + (K7_FOURTH[self.option_label],)
            else:
                polys = K6_SETS[self.option_label]
        polys = tuple(parse_octal(p) for p in polys)
        expected = (K7_BASE + (K7_FOURTH[self.option_label],)) if K == 7 else K6_SETS[self.option_label]
        if polys != expected:
            raise ValueError(f"polynomial set does not match K={K} option {self.option_label}")
        for p in polys:
            if p >> (K - 1) != 1:
                raise ValueError(f"polynomial {oct(p)} must have exactly {K} bits with the top bit set")
        if not 2 <= self.rate_index <= len(polys):
            raise ValueError(f"rate index must be in [2, {len(polys)}]")
        object.__setattr__(self, "polys", polys)

    @property
    def active_polys(self) -> tuple:
        return self.polys[: self.rate_index]

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    def codeword_length(self, msg_len: int) -> int:
        if self.termination is Termination.ZERO_TAIL:
            return self.rate_index * (msg_len + self.memory)
        return self.rate_index * msg_len


_TABLE_CACHE: dict = {}


def _output_tables(cfg: NestedCcConfig):
    """out[state, u, j] and next_state[state, u] for the register convention above."""
    key = (cfg.constraint_length, cfg.active_polys)
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        return cached
    m = cfg.memory
    S = cfg.n_states
    gens = cfg.active_polys
    out = np.zeros((S, 2, len(gens)), dtype=np.uint8)
    nxt = np.zeros((S, 2), dtype=np.int64)
    for s in range(S):
        for u in (0, 1):
            reg = (u << m) | s
            for j, g in enumerate(gens):
                out[s, u, j] = bin(reg & g).count("1") & 1
            nxt[s, u] = (u << (m - 1)) | (s >> 1)
    _TABLE_CACHE[key] = (out, nxt)
    return out, nxt


def _initial_state(bits: np.ndarray, cfg: NestedCcConfig) -> int:
    if cfg.termination is Termination.ZERO_TAIL:
        return 0
    m = cfg.memory
    if bits.size < m:
        raise MessageTooShort(f"tail-biting needs at least {m} message bits")
    s = 0
    for j in range(1, m + 1):  # most recent previous input in the top state bit
        s |= int(bits[-j]) << (m - j)
    return s


def _encode_stream(bits: np.ndarray, cfg: NestedCcConfig) -> np.ndarray:
    """(T, n) output bit matrix, T = len(bits) (+ memory for zero tail)."""
    out_tab, nxt_tab = _output_tables(cfg)
    if cfg.termination is Termination.ZERO_TAIL:
        stream = np.concatenate([bits, np.zeros(cfg.memory, dtype=np.uint8)])
    else:
        stream = bits
    s = _initial_state(bits, cfg)
    out = np.empty((stream.size, cfg.rate_index), dtype=np.uint8)
    for t, u in enumerate(stream):
        out[t] = out_tab[s, u]
        s = int(nxt_tab[s, u])
    if cfg.termination is Termination.TAIL_BITING:
        assert s == _initial_state(bits, cfg)
    return out


def cc_encode(msg: BitBlock, cfg: NestedCcConfig) -> BitBlock:
    """Encode in interlaced order: per input bit, polynomials 1..n."""
    if msg.role not in (BitRole.MESSAGE, BitRole.MESSAGE_WITH_CRC):
        raise ValueError("cc_encode expects a message block")
    out = _encode_stream(msg.bits, cfg)
    return BitBlock(out.reshape(-1), BitRole.CODED)


def cc_encode_swept(msg: BitBlock, cfg: NestedCcConfig) -> BitBlock:
    """Encode in polynomial-major order: n sweeps, one polynomial active each.

    A fixed permutation of cc_encode output, so it interleaves without a
    coded-bit buffer.
    """
    if msg.role not in (BitRole.MESSAGE, BitRole.MESSAGE_WITH_CRC):
        raise ValueError("cc_encode_swept expects a message block")
    out = _encode_stream(msg.bits, cfg)
    return BitBlock(out.T.reshape(-1), BitRole.CODED)


def swept_to_interlaced_perm(stream_len: int, n: int) -> np.ndarray:
    """Index map p with interlaced[j] = swept[p[j]].

    Bit j of per-polynomial stream i sits at swept position i*stream_len + j and
    at interlaced position j*n + i.
    """
    p = np.empty(stream_len * n, dtype=np.int64)
    for i in range(n):
        p[np.arange(stream_len) * n + i] = i * stream_len + np.arange(stream_len)
    return p


def deinterleave_swept(values: np.ndarray, stream_len: int, n: int) -> np.ndarray:
    """Reorder swept-order values (bits or LLRs) into interlaced order."""
    return np.asarray(values)[swept_to_interlaced_perm(stream_len, n)]


def encode_batch(msgs: np.ndarray, cfg: NestedCcConfig) -> np.ndarray:
    """Encode (B, L) messages to (B, T*n) interlaced codewords (harness fast path)."""
    out_tab, nxt_tab = _output_tables(cfg)
    B, L = msgs.shape
    m = cfg.memory
    if cfg.termination is Termination.ZERO_TAIL:
        stream = np.concatenate([msgs, np.zeros((B, m), dtype=np.uint8)], axis=1)
        state = np.zeros(B, dtype=np.int64)
    else:
        if L < m:
            raise MessageTooShort(f"tail-biting needs at least {m} message bits")
        stream = msgs
        state = np.zeros(B, dtype=np.int64)
        for j in range(1, m + 1):
            state |= msgs[:, -j].astype(np.int64) << (m - j)
    T = stream.shape[1]
    out = np.empty((B, T, cfg.rate_index), dtype=np.uint8)
    for t in range(T):
        u = stream[:, t].astype(np.int64)
        out[:, t, :] = out_tab[state, u]
        state = nxt_tab[state, u]
    return out.reshape(B, -1)
