"""Soft/hard Viterbi decoding for the nested convolutional codes.

One trellis implementation serves both terminations: zero-tail decoding pins
the start and end states to 0; tail-biting uses wrap-around Viterbi (two
passes, the second initialized from the first pass's final metrics), with an
exhaustive per-start-state reference available behind a flag. The decoder is
batched over blocks because the Monte-Carlo harness lives on it.
"""

from __future__ import annotations

import numpy as np

from ..bits import BitBlock, BitRole, LlrBlock
from ..errors import LengthMismatch
from .conv import NestedCcConfig, Termination, deinterleave_swept, _output_tables

_NEG = -1e30  # effective -inf that survives additions
_WAVA_MAX_PASSES = 4  # total forward passes for tail-biting decoding


class Trellis:
    """Precomputed transition tables for one code configuration."""

    def __init__(self, cfg: NestedCcConfig):
        self.cfg = cfg
        self.m = cfg.memory
        self.n_states = cfg.n_states
        self.n = cfg.rate_index
        out, nxt = _output_tables(cfg)
        self.out_bits = out
        self.next_state = nxt
        S = self.n_states
        states = np.arange(S)
        self.input_of = states >> (self.m - 1)          # input bit that leads INTO each state
        low = states & ((1 << (self.m - 1)) - 1)
        self.pred0 = low << 1                            # predecessor with LSB 0
        self.pred1 = (low << 1) | 1
        sign = 1.0 - 2.0 * out.astype(np.float64)        # +1 for coded bit 0
        self.exp0 = sign[self.pred0, self.input_of, :]   # (S, n) expected signs, pred0 branch
        self.exp1 = sign[self.pred1, self.input_of, :]


_TRELLIS_CACHE: dict = {}


def get_trellis(cfg: NestedCcConfig) -> Trellis:
    key = (cfg.constraint_length, cfg.option_label, cfg.rate_index, cfg.termination)
    if key not in _TRELLIS_CACHE:
        _TRELLIS_CACHE[key] = Trellis(cfg)
    return _TRELLIS_CACHE[key]


def _forward(llrs3: np.ndarray, init: np.ndarray, tr: Trellis):
    """Run add-compare-select over (B, T, n) LLRs from (B, S) initial metrics."""
    B, T, _ = llrs3.shape
    S = tr.n_states
    M = init
    choices = np.empty((T, B, S), dtype=bool)
    e0t = tr.exp0.T  # (n, S)
    e1t = tr.exp1.T
    for t in range(T):
        lt = llrs3[:, t, :]
        cand0 = M[:, tr.pred0] + lt @ e0t
        cand1 = M[:, tr.pred1] + lt @ e1t
        take1 = cand1 > cand0
        M = np.where(take1, cand1, cand0)
        choices[t] = take1
    return M, choices


def _traceback(choices: np.ndarray, end_states: np.ndarray, tr: Trellis) -> np.ndarray:
    T, B, _ = choices.shape
    bits = np.empty((B, T), dtype=np.uint8)
    s = end_states.copy()
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        bits[:, t] = tr.input_of[s]
        take1 = choices[t, rows, s]
        s = np.where(take1, tr.pred1[s], tr.pred0[s])
    return bits


def _start_states_of_all_paths(choices: np.ndarray, tr: Trellis) -> np.ndarray:
    """(B, S) start state of the survivor ending in each state."""
    T, B, S = choices.shape
    s = np.broadcast_to(np.arange(S), (B, S)).copy()
    rows = np.arange(B)[:, None]
    for t in range(T - 1, -1, -1):
        take1 = choices[t, rows, s]
        s = np.where(take1, tr.pred1[s], tr.pred0[s])
    return s


def decode_batch(llrs: np.ndarray, cfg: NestedCcConfig, tb_exhaustive: bool = False):
    """Decode (B, T*n) soft LLR blocks; returns ((B, L) bits, (B,) path metrics).

    Path metric is the accumulated sum of matched +/-LLR terms along the
    winning path (equals sum |LLR| on noiseless input).
    """
    tr = get_trellis(cfg)
    n = tr.n
    B, width = llrs.shape
    if width % n:
        raise LengthMismatch(f"codeword length {width} not a multiple of rate index {n}")
    T = width // n
    llrs3 = np.ascontiguousarray(llrs, dtype=np.float64).reshape(B, T, n)
    S = tr.n_states

    if cfg.termination is Termination.ZERO_TAIL:
        init = np.full((B, S), _NEG)
        init[:, 0] = 0.0
        M, choices = _forward(llrs3, init, tr)
        bits = _traceback(choices, np.zeros(B, dtype=np.int64), tr)
        return bits[:, : T - tr.m], M[:, 0]

    if tb_exhaustive:
        return _decode_tb_exhaustive(llrs3, tr)

    # wrap-around Viterbi: repeat passes, initialized from the previous pass's
    # normalized finals, and accept the best survivor whose start state equals
    # its end state (a valid tail-biting path). Nearly every block resolves on
    # pass 2; the rest almost always yield a consistent runner-up state.
    rows = np.arange(B)
    M, _ = _forward(llrs3, np.zeros((B, S)), tr)
    best_bits = None
    best_metric = np.full(B, _NEG)
    resolved = np.zeros(B, dtype=bool)
    for _pass in range(1, _WAVA_MAX_PASSES):
        init = M - M.max(axis=1, keepdims=True)
        M, choices = _forward(llrs3, init, tr)
        starts = _start_states_of_all_paths(choices, tr)
        consistent = starts == np.arange(S)
        any_ok = consistent.any(axis=1)
        masked = np.where(consistent, M, _NEG)
        end_ok = np.argmax(masked, axis=1)
        end_any = np.argmax(M, axis=1)  # fallback: best path even if open
        end = np.where(any_ok, end_ok, end_any)
        bits = _traceback(choices, end, tr)
        metric = M[rows, end]
        if best_bits is None:
            best_bits = bits
            best_metric = metric
            resolved = any_ok
        else:
            take = ~resolved & (any_ok | (metric > best_metric))
            best_bits[take] = bits[take]
            best_metric[take] = metric[take]
            resolved |= any_ok
        if resolved.all():
            break
    return best_bits, best_metric


def _decode_tb_exhaustive(llrs3: np.ndarray, tr: Trellis):
    """Reference ML tail-biting decode: one constrained run per start state."""
    B, T, n = llrs3.shape
    S = tr.n_states
    bits = np.empty((B, T), dtype=np.uint8)
    metrics = np.empty(B)
    eye_init = np.full((S, S), _NEG)
    np.fill_diagonal(eye_init, 0.0)
    for b in range(B):
        tiled = np.broadcast_to(llrs3[b], (S, T, n))
        M, choices = _forward(tiled, eye_init.copy(), tr)
        per_start = M[np.arange(S), np.arange(S)]  # start == end constraint
        best = int(np.argmax(per_start))
        row = _traceback(choices[:, best: best + 1, :], np.array([best]), tr)
        bits[b] = row[0]
        metrics[b] = per_start[best]
    return bits, metrics


def viterbi_decode(block, cfg: NestedCcConfig, interleaved: bool = False,
                   tb_exhaustive: bool = False):
    """Decode one codeword (LlrBlock soft input or BitBlock hard input).

    Returns (message BitBlock, path_metric). Hard input uses the Hamming
    branch metric (reported metric = total Hamming distance of the winning
    path); soft input maximizes the matched +/-LLR sum.
    """
    hard = isinstance(block, BitBlock)
    if hard:
        values = 1.0 - 2.0 * block.bits.astype(np.float64)
    else:
        values = np.asarray(block.llrs, dtype=np.float64)

    n = cfg.rate_index
    if values.size % n:
        raise LengthMismatch(f"input length {values.size} not a multiple of rate index {n}")
    T = values.size // n
    if cfg.termination is Termination.ZERO_TAIL and T <= cfg.memory:
        raise LengthMismatch("codeword too short for zero-tail termination")
    if interleaved:
        values = deinterleave_swept(values, T, n)

    bits, metric = decode_batch(values[None, :], cfg, tb_exhaustive=tb_exhaustive)
    path_metric = float(metric[0])
    if hard:
        path_metric = (T * n - path_metric) / 2.0
    return BitBlock(bits[0], BitRole.MESSAGE), path_metric
