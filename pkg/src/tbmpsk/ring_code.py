"""Generator matrices for multi-linear spreading codes over the ring Z_M.

A rank-1 tensor of M-PSK factor vectors, flattened in lexicographic order,
is the image of a linear block code over Z_M under the componentwise
exponential map.  This module builds that code's generator matrix G for a
given tensor shape, plus the derived forms used by the receivers:

* ``G`` (K x T, K = sum T_i): one binary row per factor-vector entry; full
  G is rank deficient by d - 1 because each mode's rows sum to the all-ones
  row.
* ``G_r`` (K_r x T, K_r = K - d + 1): first row of every mode but the first
  removed.  Full-rank; the coherent (known-gain) code.
* ``G_s`` (K_s x (T - 1), K_s = K - d): row 1 and column 1 of G_r removed.
  The non-coherent code with one pilot position fixed to the ring zero.
* ``G_sys = [I | P]``: column permutation of G_s exposing a systematic
  prefix, available because G_s keeps K_s weight-1 columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CASES = (1, 2, 3)


@dataclass(frozen=True)
class TensorShape:
    """Tensor dimensions plus the PSK modulation order.

    Dimensions are canonicalized to non-increasing order (required by the
    Kronecker recursion and assumed everywhere downstream); the order as
    given is kept in ``input_dims`` so callers can report it.
    """

    dims: tuple[int, ...]
    modulation_order: int
    input_dims: tuple[int, ...] = field(default=None, compare=False)

    def __post_init__(self):
        dims = tuple(int(t) for t in self.dims)
        if not dims:
            raise ValueError("tensor shape needs at least one dimension")
        if any(t < 2 for t in dims):
            raise ValueError(f"every tensor dimension must be >= 2, got {dims}")
        m = int(self.modulation_order)
        if m < 2:
            raise ValueError(f"modulation order must be >= 2, got {m}")
        object.__setattr__(self, "input_dims", dims)
        object.__setattr__(self, "dims", tuple(sorted(dims, reverse=True)))
        object.__setattr__(self, "modulation_order", m)

    @property
    def num_modes(self) -> int:
        return len(self.dims)

    @property
    def blocklength(self) -> int:
        """T = prod(T_i), the number of tensor entries."""
        return math.prod(self.dims)

    @property
    def k_full(self) -> int:
        """K = sum(T_i), rows of the full generator."""
        return sum(self.dims)

    @property
    def k_coherent(self) -> int:
        """K_r = K - d + 1, rows of the reduced (full-rank) generator."""
        return self.k_full - self.num_modes + 1

    @property
    def k_shortened(self) -> int:
        """K_s = K - d, rows of the shortened non-coherent generator."""
        return self.k_full - self.num_modes

    @property
    def mode_offsets(self) -> tuple[int, ...]:
        """Row index where each mode's block starts inside G."""
        offs = np.concatenate([[0], np.cumsum(self.dims[:-1])])
        return tuple(int(o) for o in offs)

    def info_length(self, case: int) -> int:
        """Number of free ring symbols for a reference-symbol case.

        Case 1 pins one factor entry per mode (non-coherent), case 2 pins
        none (non-identifiable), case 3 pins one entry in every mode but
        the first (coherent).
        """
        if case == 1:
            return self.k_shortened
        if case == 2:
            return self.k_full
        if case == 3:
            return self.k_coherent
        raise ValueError(f"case must be one of {CASES}, got {case}")


@dataclass(frozen=True, eq=False)
class RingMatrix:
    """Dense matrix with entries in Z_modulus."""

    entries: np.ndarray
    modulus: int

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.int64)
        if a.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got ndim={a.ndim}")
        if self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        if a.size and (a.min() < 0 or a.max() >= self.modulus):
            raise ValueError(f"entries must lie in [0, {self.modulus})")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.entries.shape == other.entries.shape
            and bool(np.array_equal(self.entries, other.entries))
        )

    def to_text(self) -> str:
        """Render as 'rows cols modulus' header plus one space-separated row per line."""
        lines = [f"{self.rows} {self.cols} {self.modulus}"]
        for row in self.entries:
            lines.append(" ".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RingMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        header = lines[0].split()
        if len(header) != 3:
            raise ValueError(f"matrix header must be 'rows cols modulus', got {lines[0]!r}")
        r, c, m = (int(v) for v in header)
        if len(lines) - 1 != r:
            raise ValueError(f"expected {r} matrix rows, got {len(lines) - 1}")
        body = [[int(v) for v in ln.split()] for ln in lines[1:]]
        a = np.array(body, dtype=np.int64).reshape(r, c if r else 0)
        if r and a.shape != (r, c):
            raise ValueError(f"row width mismatch: header says {c} columns")
        return cls(a, m)


def index_to_tuple(p: int, dims: tuple[int, ...]) -> tuple[int, ...]:
    """Flat lexicographic position -> per-mode indices (all 0-based, C order)."""
    total = math.prod(dims)
    if not 0 <= p < total:
        raise ValueError(f"position {p} outside [0, {total})")
    return tuple(int(i) for i in np.unravel_index(p, dims))


def tuple_to_index(idx: tuple[int, ...], dims: tuple[int, ...]) -> int:
    """Per-mode indices -> flat lexicographic position (all 0-based, C order)."""
    if len(idx) != len(dims):
        raise ValueError(f"index tuple has {len(idx)} entries for {len(dims)} modes")
    return int(np.ravel_multi_index(idx, dims))


def build_generator(shape: TensorShape) -> RingMatrix:
    """Full K x T generator: column p has a 1 in row (offset_i + m_i) for each
    mode i, where (m_1, ..., m_d) is the index tuple of position p."""
    dims = shape.dims
    T = shape.blocklength
    G = np.zeros((shape.k_full, T), dtype=np.int64)
    tuples = np.stack(np.unravel_index(np.arange(T), dims))
    for i, off in enumerate(shape.mode_offsets):
        G[off + tuples[i], np.arange(T)] = 1
    return RingMatrix(G, shape.modulation_order)


def build_generator_kronecker(shape: TensorShape) -> RingMatrix:
    """Full generator via the Kronecker recursion (independent of
    :func:`build_generator`; the two must agree entrywise).

    Start from the identity on the last mode and grow leftwards: adding a
    mode of size t to a suffix generator g with w columns gives
    vstack(I_t (x) 1_w, 1_t (x) g).
    """
    dims = shape.dims
    g = np.eye(dims[-1], dtype=np.int64)
    width = dims[-1]
    for t in reversed(dims[:-1]):
        top = np.kron(np.eye(t, dtype=np.int64), np.ones((1, width), dtype=np.int64))
        bottom = np.kron(np.ones((1, t), dtype=np.int64), g)
        g = np.vstack([top, bottom])
        width *= t
    return RingMatrix(g, shape.modulation_order)


def mode_row_sum(generator: RingMatrix, mode: int, shape: TensorShape) -> np.ndarray:
    """Sum (mod M) of one mode's block of rows; equals the all-ones row for
    the full generator, for every mode."""
    if not 0 <= mode < shape.num_modes:
        raise ValueError(f"mode {mode} outside [0, {shape.num_modes})")
    off = shape.mode_offsets[mode]
    block = generator.entries[off : off + shape.dims[mode]]
    return np.asarray(block.sum(axis=0) % generator.modulus)


def reference_row_residuals(generator: RingMatrix, shape: TensorShape) -> np.ndarray:
    """Row-elimination witness: (mode-j row sum) - (mode-1 row sum) mod M for
    each j >= 2; all-zero rows certify the rank deficiency of d - 1."""
    base = mode_row_sum(generator, 0, shape)
    rows = [
        (mode_row_sum(generator, j, shape) - base) % generator.modulus
        for j in range(1, shape.num_modes)
    ]
    return np.array(rows, dtype=np.int64).reshape(shape.num_modes - 1, generator.cols)


def reduce_coherent(generator: RingMatrix, shape: TensorShape) -> RingMatrix:
    """G_r: drop the first row of every mode except mode 1 (those rows are
    linearly dependent on the rest); K_r x T and full rank."""
    if generator.rows != shape.k_full or generator.cols != shape.blocklength:
        raise ValueError("generator dimensions do not match the shape")
    drop = set(shape.mode_offsets[1:])
    keep = [r for r in range(shape.k_full) if r not in drop]
    return RingMatrix(generator.entries[keep], generator.modulus)


def shorten_noncoherent(reduced: RingMatrix, shape: TensorShape) -> tuple[RingMatrix, int]:
    """G_s plus the pilot position: drop row 1 of G_r and the single column
    where it was the only participant (position 0, the all-reference entry)."""
    if reduced.rows != shape.k_coherent or reduced.cols != shape.blocklength:
        raise ValueError("reduced generator dimensions do not match the shape")
    pilot = 0
    col = reduced.entries[:, pilot]
    if col[0] == 0 or np.any(col[1:]):
        raise ValueError("column 0 is not supported by row 0 alone; not a reduced generator")
    body = np.delete(np.delete(reduced.entries, 0, axis=0), pilot, axis=1)
    return RingMatrix(body, reduced.modulus), pilot


def systematic_form(shortened: RingMatrix, shape: TensorShape) -> tuple[RingMatrix, np.ndarray]:
    """Permute G_s columns into [I | P].

    G_s keeps exactly K_s weight-1 columns, one per row; moving them to the
    front (ordered by their row) gives the identity block.  Returns the
    permuted matrix and ``perm`` with ``G_sys[:, q] = G_s[:, perm[q]]``.
    """
    a = shortened.entries
    k = shortened.rows
    weight1 = [q for q in range(shortened.cols) if np.count_nonzero(a[:, q]) == 1]
    col_of_row = {}
    for q in weight1:
        r = int(np.nonzero(a[:, q])[0][0])
        if a[r, q] == 1 and r not in col_of_row:
            col_of_row[r] = q
    if len(col_of_row) != k:
        raise ValueError("no systematic column set: some row lacks a weight-1 column")
    front = [col_of_row[r] for r in range(k)]
    rest = [q for q in range(shortened.cols) if q not in set(front)]
    perm = np.array(front + rest, dtype=np.int64)
    return RingMatrix(a[:, perm], shortened.modulus), perm


def generalized_parity_check(reduced: RingMatrix, shape: TensorShape) -> RingMatrix:
    """H = [G_r^T | (M-1) I_T]; satisfies [u | c] H^T = 0 mod M for any
    info word u and its codeword c = u G_r."""
    if reduced.rows != shape.k_coherent or reduced.cols != shape.blocklength:
        raise ValueError("reduced generator dimensions do not match the shape")
    m = reduced.modulus
    T = reduced.cols
    h = np.hstack([reduced.entries.T, (m - 1) * np.eye(T, dtype=np.int64)]) % m
    return RingMatrix(h, m)


def case_matrix(shape: TensorShape, case: int) -> RingMatrix:
    """Generator actually used by a reference-symbol case: G (case 2),
    G_r (case 3), or G_s (case 1)."""
    g = build_generator(shape)
    if case == 2:
        return g
    gr = reduce_coherent(g, shape)
    if case == 3:
        return gr
    if case == 1:
        gs, _ = shorten_noncoherent(gr, shape)
        return gs
    raise ValueError(f"case must be one of {CASES}, got {case}")
