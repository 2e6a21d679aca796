"""Tanner graph of the tensor code, built from the generator's support.

One constraint node per transmit position p enforces c_p = sum of its
participating info symbols mod M; every info (variable) node for a mode-i
entry participates in T / T_i constraints.  In the non-coherent case the
pilot position's node touches no info symbol and stays isolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring_code import TensorShape, case_matrix


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Bipartite info-symbol / position-constraint graph.

    ``edge_check`` and ``edge_var`` list endpoint ids per edge, sorted by
    (check, var); ``var_labels[v]`` is the (mode, entry) pair of info node v,
    0-based, entry indexed within the mode's factor vector.
    """

    shape: TensorShape
    case: int
    num_checks: int
    var_labels: tuple[tuple[int, int], ...]
    edge_check: np.ndarray
    edge_var: np.ndarray
    pilot_check: int | None

    @property
    def num_vars(self) -> int:
        return len(self.var_labels)

    @property
    def num_edges(self) -> int:
        return len(self.edge_check)

    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.num_vars)

    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.num_checks)


def _row_labels(shape: TensorShape, case: int) -> list[tuple[int, int]]:
    labels = []
    for i, t in enumerate(shape.dims):
        start = 0 if (case == 3 and i == 0) else 1
        labels.extend((i, m) for m in range(start, t))
    return labels


def build_graph(shape: TensorShape, case: int) -> FactorGraph:
    """Graph of the case-1 (from G_s) or case-3 (from G_r) code.

    Case 2 has no identifiable graph semantics here and is rejected.
    """
    if case not in (1, 3):
        raise ValueError(f"factor graph is defined for cases 1 and 3, got case {case}")
    g = case_matrix(shape, case)
    # column q of G_s feeds transmit position q + 1 (position 0 is the pilot)
    check_shift = 1 if case == 1 else 0
    col_idx, row_idx = np.nonzero(g.entries.T)  # sorted by column, then row
    edge_check = (col_idx + check_shift).astype(np.int64)
    edge_var = row_idx.astype(np.int64)
    labels = _row_labels(shape, case)
    if len(labels) != g.rows:
        raise ValueError("row labeling does not match the generator")
    return FactorGraph(
        shape=shape,
        case=case,
        num_checks=shape.blocklength,
        var_labels=tuple(labels),
        edge_check=edge_check,
        edge_var=edge_var,
        pilot_check=0 if case == 1 else None,
    )


def degree_distribution(shape: TensorShape) -> np.ndarray:
    """Constraint-degree counts for the case-1 graph as polynomial
    coefficients: coeffs[k] = number of positions touching k info symbols;
    equals the expansion of prod_i (1 + (T_i - 1) z)."""
    coeffs = np.array([1], dtype=np.int64)
    for t in shape.dims:
        coeffs = np.convolve(coeffs, np.array([1, t - 1], dtype=np.int64))
    return coeffs


def export_edges(graph: FactorGraph) -> str:
    """Edge list, one line per edge: 'u <mode> <entry> c <position>', all
    1-based, ordered by position then variable id."""
    lines = []
    for c, v in zip(graph.edge_check, graph.edge_var):
        mode, entry = graph.var_labels[v]
        lines.append(f"u {mode + 1} {entry + 1} c {c + 1}")
    return "\n".join(lines) + "\n" if lines else ""
