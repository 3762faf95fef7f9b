"""Second-smallest eigenpair of the normalized cut problem.

Solves (D - W) x = lambda D x on the unexcluded subgraph through the
symmetric form L_sym = D^{-1/2} (D - W) D^{-1/2}, then back-substitutes
x = D^{-1/2} u. The eigenvector is unit-norm with its largest-magnitude
entry positive (first such entry on exact ties), which pins the sign even
in near-degenerate spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from cutlabel.maskcut.config import DiscoveryConfig
from cutlabel.maskcut.graph import AffinityGraph

_DENSE_FALLBACK_NODES = 8


@dataclass
class CutResult:
    """One cut: eigenpair plus (once selected) the foreground mask."""

    eigenvalue: float
    x: np.ndarray
    active: np.ndarray
    mask: np.ndarray | None = None
    flipped: bool = False
    flip_reason: str | None = None


def _solve_dense(l_sym: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = scipy.linalg.eigh(l_sym, subset_by_index=[0, 1])
    return float(vals[1]), vecs[:, 1]


def _solve_lanczos(l_sym: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    # The two smallest eigenvalues of L_sym are the two largest of
    # 2 I - L_sym (the spectrum lives in [0, 2]), and extreme-end Lanczos
    # converges far faster than chasing the smallest end directly.
    n = l_sym.shape[0]
    flipped = 2.0 * np.eye(n) - l_sym
    v0 = np.random.default_rng(0x5EED ^ n).standard_normal(n)
    vals, vecs = scipy.sparse.linalg.eigsh(
        flipped, k=2, which="LA", tol=tol, maxiter=max_iter, v0=v0
    )
    order = np.argsort(vals)  # ascending: [2 - lam2, 2 - lam1]
    return float(2.0 - vals[order[0]]), vecs[:, order[0]]


def second_eigvec(graph: AffinityGraph, cfg: DiscoveryConfig) -> CutResult | None:
    """Return the second eigenpair on the active subgraph, or None.

    None signals that no cut exists: fewer than two usable nodes remain.
    """
    active = graph.active & (graph.degrees > 0)
    idx = np.flatnonzero(active)
    if idx.size < 2:
        return None
    W = graph.W[np.ix_(idx, idx)]
    d = W.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    l_sym = np.eye(idx.size) - (inv_sqrt[:, None] * W * inv_sqrt[None, :])
    l_sym = 0.5 * (l_sym + l_sym.T)
    if cfg.eigensolver == "dense" or idx.size < _DENSE_FALLBACK_NODES:
        lam, u = _solve_dense(l_sym)
    else:
        lam, u = _solve_lanczos(l_sym, cfg.lanczos_tol, cfg.lanczos_max_iter)
    x_sub = u * inv_sqrt
    x_sub = x_sub / np.linalg.norm(x_sub)
    peak = int(np.argmax(np.abs(x_sub)))
    if x_sub[peak] < 0:
        x_sub = -x_sub
    x = np.zeros(graph.n_nodes)
    x[idx] = x_sub
    return CutResult(eigenvalue=lam, x=x, active=active)
