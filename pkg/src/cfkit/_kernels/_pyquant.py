"""Numpy reference implementation of the nearest-codeword search.

Given the shifted codeword table S (one row per codeword, already scaled by
gamma/p), the lattice is the union of the cosets S[k] + gamma * Z^n.  The
nearest point to x is found per coset by componentwise rounding, then across
cosets by squared distance.  Ties break to the lexicographically smallest
coordinate vector: within a coset, rounding halves downward achieves this;
across cosets, candidates within TIE_REL of the best distance are compared
lexicographically.
"""

import numpy as np

TIE_REL = 1e-12


def nearest_codeword_point(shifts: np.ndarray, x: np.ndarray, gamma: float) -> np.ndarray:
    shifts = np.ascontiguousarray(shifts, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    resid = (x[None, :] - shifts) / gamma
    steps = np.ceil(resid - 0.5)  # round half down -> smaller coordinate wins
    cands = shifts + gamma * steps
    diffs = cands - x[None, :]
    d2 = np.einsum("ij,ij->i", diffs, diffs)
    best = float(np.min(d2))
    tol = TIE_REL * max(1.0, gamma * gamma)
    tied = np.flatnonzero(d2 <= best + tol)
    if tied.size == 1:
        return cands[tied[0]].copy()
    rows = cands[tied]
    order = np.lexsort(tuple(rows[:, k] for k in reversed(range(rows.shape[1]))))
    return rows[order[0]].copy()
