"""M-PSK mapping and the encoder pipelines.

The ring-to-constellation map phi(v) = exp(j 2 pi v / M) carries Z_M
addition to X_M multiplication, so a codeword of the ring code maps to the
flattened Kronecker product of its per-mode M-PSK factor vectors.  Each
reference-symbol case has an encoder; ``mls_encode`` is the independent
signal-domain route used to cross-check them.
"""

from __future__ import annotations

import numpy as np

from .ring_code import CASES, RingMatrix, TensorShape, case_matrix, systematic_form


def validate_symbols(symbols: np.ndarray, modulation_order: int) -> np.ndarray:
    """Coerce to an int array and reject entries outside Z_M."""
    u = np.asarray(symbols)
    if u.size and not np.issubdtype(u.dtype, np.integer):
        if not np.all(u == np.floor(u)):
            raise ValueError("ring symbols must be integers")
    u = u.astype(np.int64)
    if u.size and (u.min() < 0 or u.max() >= modulation_order):
        raise ValueError(f"ring symbols must lie in [0, {modulation_order})")
    return u


def psk_map(symbols: np.ndarray, modulation_order: int) -> np.ndarray:
    """phi(v) = exp(j 2 pi v / M), elementwise."""
    u = validate_symbols(symbols, modulation_order)
    return np.exp(2j * np.pi * u / modulation_order)


def mls_encode(factors: list[np.ndarray]) -> np.ndarray:
    """Flattened rank-1 tensor of the given complex factor vectors,
    lexicographic (C) order: x_1 (x) x_2 (x) ... (x) x_d."""
    if not factors:
        raise ValueError("need at least one factor vector")
    s = np.asarray(factors[0], dtype=complex).ravel()
    for x in factors[1:]:
        s = np.kron(s, np.asarray(x, dtype=complex).ravel())
    return s


def factor_symbols(info: np.ndarray, shape: TensorShape, case: int) -> list[np.ndarray]:
    """Per-mode ring symbol vectors with reference entries pinned to 0.

    Case 2 uses all K entries of ``info``; case 3 pins the first entry of
    every mode after the first; case 1 additionally pins the first entry of
    mode 1.
    """
    u = validate_symbols(info, shape.modulation_order)
    if u.ndim != 1 or u.size != shape.info_length(case):
        raise ValueError(
            f"case {case} expects {shape.info_length(case)} info symbols, got {u.size}"
        )
    out = []
    pos = 0
    for i, t in enumerate(shape.dims):
        pinned = case == 1 or (case == 3 and i > 0)
        if pinned:
            vec = np.concatenate([[0], u[pos : pos + t - 1]])
            pos += t - 1
        else:
            vec = u[pos : pos + t].copy()
            pos += t
        out.append(vec.astype(np.int64))
    return out


def _encode(info: np.ndarray, generator: RingMatrix) -> np.ndarray:
    u = validate_symbols(info, generator.modulus)
    if u.shape[-1] != generator.rows:
        raise ValueError(f"expected {generator.rows} info symbols, got {u.shape[-1]}")
    return (u @ generator.entries) % generator.modulus


def encode_case2(info: np.ndarray, generator: RingMatrix) -> np.ndarray:
    """c = u G mod M over all K symbols (no reference pinning; the map to
    codewords is many-to-one)."""
    return _encode(info, generator)


def encode_case3(info: np.ndarray, reduced: RingMatrix) -> np.ndarray:
    """Coherent codeword c = u G_r mod M, length T."""
    return _encode(info, reduced)


def encode_case1(info: np.ndarray, shortened: RingMatrix) -> np.ndarray:
    """Non-coherent codeword: pilot 0 prepended to u G_s mod M, length T."""
    tail = _encode(info, shortened)
    zero = np.zeros(tail.shape[:-1] + (1,), dtype=np.int64)
    return np.concatenate([zero, tail], axis=-1)


def encode_systematic(info: np.ndarray, parity: RingMatrix, perm: np.ndarray) -> np.ndarray:
    """Case-1 codeword via the systematic route: c_sys = [u | u P], undone
    through ``perm`` back to transmit order, pilot prepended.

    Must agree symbol-for-symbol with :func:`encode_case1`.
    """
    u = validate_symbols(info, parity.modulus)
    if u.ndim != 1 or u.size != parity.rows:
        raise ValueError(f"expected {parity.rows} info symbols, got {u.size}")
    if len(perm) != parity.rows + parity.cols:
        raise ValueError("permutation length does not match [I | P] width")
    p = (u @ parity.entries) % parity.modulus
    c_sys = np.concatenate([u, p])
    tail = np.empty(len(perm), dtype=np.int64)
    tail[np.asarray(perm)] = c_sys
    return np.concatenate([[0], tail])


def encode(info: np.ndarray, shape: TensorShape, case: int) -> np.ndarray:
    """Codeword for any case, building the case's generator on the fly."""
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}, got {case}")
    g = case_matrix(shape, case)
    if case == 1:
        return encode_case1(info, g)
    return _encode(info, g)


def transmit_signal(codeword: np.ndarray, modulation_order: int) -> np.ndarray:
    """Baseband samples phi(c) for a ring codeword."""
    return psk_map(codeword, modulation_order)


def systematic_parts(shape: TensorShape) -> tuple[RingMatrix, np.ndarray]:
    """(P, perm) for the systematic case-1 encoder: P is the parity block of
    G_sys = [I | P], perm maps G_sys columns back to G_s columns."""
    gs = case_matrix(shape, 1)
    gsys, perm = systematic_form(gs, shape)
    p = RingMatrix(gsys.entries[:, gsys.rows :], gsys.modulus)
    return p, perm
