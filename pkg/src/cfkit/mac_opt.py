"""Multiple-access rate assignments built on parallel / successive computation.

Two strategies: (a) decode a full-rank set of shortest integer combinations in
parallel, cancel algebraically, and assign users to rows via a permutation --
lands within (L/2) log2 L bits of sum capacity; (b) chain successively with a
unimodular coefficient matrix -- hits sum capacity exactly whenever the
per-user noise conditions hold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import intsearch, regions
from .core import (ChannelInstance, achievable_rate, effective_matrix,
                   log2_plus, sum_capacity)
from .regions import AdmissibleMapping


@dataclass
class MacAssignment:
    A: np.ndarray
    mapping: AdmissibleMapping
    pi: tuple[int, ...]  # pi[l-1] = decoding step assigned to user l
    rates: tuple[float, ...]
    sum_rate: float
    gap_to_capacity: float


@dataclass
class SuccessiveOutcome:
    """Successive assignment, or the reason the conditions failed."""

    assignment: MacAssignment | None
    declined_reason: str | None = None

    def __bool__(self) -> bool:
        return self.assignment is not None


def mac_mapping(A, pivot_order=None) -> tuple[AdmissibleMapping, tuple[int, ...]]:
    """Admissible mapping + user permutation from row-swap-free elimination.

    Pivots greedily on the leftmost usable column unless pivot_order forces
    the column sequence.  The mapping is the support of L @ A, so it is the
    tightest pair set the elimination certifies.
    """
    A = np.atleast_2d(np.asarray(A, dtype=int))
    if intsearch._exact.int_rank(A.tolist()) != A.shape[0]:
        raise ValueError("coefficient matrix must have full rank")
    res = regions.lu_mapping(A, pivot_order=pivot_order)
    if res is None:
        raise ValueError("forced pivot order requires a row swap; not admissible")
    return res


def mac_mappings_all(A) -> list[tuple[AdmissibleMapping, tuple[int, ...]]]:
    return regions.lu_mappings_all(A)


def parallel_mac_assignment(ch: ChannelInstance, pivot_order=None) -> MacAssignment:
    """Rate tuple R_l = 1/2 log+ (P_l / sigma2_para(a*_pi(l))) for the shortest
    independent combinations a*.  Defaults to the assignment with the best sum
    rate over the available pivot orders (deterministic tie handling)."""
    ch.require_positive_powers()
    if pivot_order is not None:
        dom = intsearch.dominant_solution(effective_matrix(ch))
        res = mac_mapping(dom.A_star, pivot_order=pivot_order)
        return _assemble_parallel(ch, dom, *res)
    best = None
    for cand in parallel_mac_assignments(ch):
        if best is None or cand.sum_rate > best.sum_rate + 1e-12:
            best = cand
    return best


def parallel_mac_assignments(ch: ChannelInstance) -> list[MacAssignment]:
    """One assignment per distinct elimination permutation of the dominant
    solution (deterministic order)."""
    ch.require_positive_powers()
    dom = intsearch.dominant_solution(effective_matrix(ch))
    out = []
    seen = set()
    for mapping, pi in mac_mappings_all(dom.A_star):
        asg = _assemble_parallel(ch, dom, mapping, pi)
        key = tuple(round(r, 12) for r in asg.rates)
        if key not in seen:
            seen.add(key)
            out.append(asg)
    return out


def _assemble_parallel(ch, dom, mapping, pi) -> MacAssignment:
    variances = [float(n) ** 2 for n in dom.norms]
    rates = tuple(achievable_rate(ch.P[l], variances[pi[l] - 1])
                  for l in range(ch.num_users))
    total = float(sum(rates))
    cap = sum_capacity(ch)
    asg = MacAssignment(A=dom.A_star, mapping=mapping, pi=pi, rates=rates,
                        sum_rate=total, gap_to_capacity=cap - total)
    box = regions.asc_region(ch, dom.A_star, mapping)
    if not box.contains(rates, tol=1e-9):
        raise AssertionError("assignment fell outside its own cancellation region")
    L = ch.num_users
    if asg.gap_to_capacity > 0.5 * L * log2_plus(L) + 1e-9:
        raise AssertionError("sum-rate gap exceeded the (L/2) log2 L bound")
    return asg


def successive_mac_assignment(ch: ChannelInstance, A, mapping, pi) -> SuccessiveOutcome:
    """Exact sum-capacity assignment via successive computation, when valid.

    Requires unimodular A and an admissible mapping allowing permutation pi.
    Declines (with the reason) when some user's worst mapped noise is not the
    one pi assigns it, or when its power cannot cover that noise.
    """
    A = np.atleast_2d(np.asarray(A, dtype=int))
    if not intsearch.is_unimodular(A):
        raise ValueError("coefficient matrix must be unimodular")
    ch.require_positive_powers()
    L = ch.num_users
    pairs = mapping.pairs if isinstance(mapping, AdmissibleMapping) else mapping
    mapping = regions._coerce_mapping(A, pairs)
    pi = tuple(int(v) for v in pi)
    if sorted(pi) != list(range(1, L + 1)):
        raise ValueError("pi must be a permutation of decoding steps 1..L")
    for (m, l) in mapping.pairs:
        if m > pi[l - 1]:
            return SuccessiveOutcome(
                None,
                f"mapping pair ({m},{l}) sits below user {l}'s pivot step "
                f"{pi[l - 1]}; pi is not allowed by this mapping")
    variances = regions.row_variances(ch, A, chained=True)
    rates = []
    for l in range(L):
        rows = mapping.rows_for_user(l + 1)
        if pi[l] not in rows:
            return SuccessiveOutcome(None, f"user {l + 1} is not mapped to its assigned step {pi[l]}")
        worst = max(variances[m - 1] for m in rows)
        assigned = variances[pi[l] - 1]
        if worst > assigned * (1 + 1e-9) + 1e-12:
            return SuccessiveOutcome(
                None,
                f"user {l + 1}: worst mapped noise {worst:.6g} exceeds assigned "
                f"step {pi[l]} noise {assigned:.6g}")
        if ch.P[l] < assigned - 1e-12:
            return SuccessiveOutcome(
                None,
                f"user {l + 1}: power {ch.P[l]:.6g} below required noise "
                f"tolerance {assigned:.6g}")
        rates.append(0.5 * np.log2(ch.P[l] / assigned))
    total = float(sum(rates))
    cap = sum_capacity(ch)
    if abs(total - cap) > 1e-8:
        raise AssertionError("sum rate failed to match the sum capacity identity")
    asg = MacAssignment(A=A, mapping=mapping, pi=pi, rates=tuple(float(r) for r in rates),
                        sum_rate=total, gap_to_capacity=cap - total)
    return SuccessiveOutcome(asg)


def successive_mac_assignments(ch: ChannelInstance) -> list[MacAssignment]:
    """Valid successive assignments over the natural candidates: all user
    permutation matrices plus the dominant solution (when unimodular)."""
    L = ch.num_users
    candidates: list[np.ndarray] = []
    for perm in itertools.permutations(range(L)):
        P = np.zeros((L, L), dtype=int)
        for m, u in enumerate(perm):
            P[m, u] = 1
        candidates.append(P)
    dom = intsearch.dominant_solution(effective_matrix(ch))
    if intsearch.is_unimodular(dom.A_star):
        candidates.append(dom.A_star)
    out = []
    seen = set()
    for A in candidates:
        for mapping, pi in mac_mappings_all(A):
            outcome = successive_mac_assignment(ch, A, mapping, pi)
            if outcome:
                key = tuple(round(r, 10) for r in outcome.assignment.rates)
                if key not in seen:
                    seen.add(key)
                    out.append(outcome.assignment)
    return out


def successive_sum_identity(ch: ChannelInstance, A, pi) -> tuple[float, float]:
    """(sum of per-step log rates under pi, sum capacity); equal for any
    unimodular A up to numerical error."""
    A = np.atleast_2d(np.asarray(A, dtype=int))
    if not intsearch.is_unimodular(A):
        raise ValueError("coefficient matrix must be unimodular")
    ch.require_positive_powers()
    L = ch.num_users
    pi = tuple(int(v) for v in pi)
    variances = regions.row_variances(ch, A, chained=True)
    lhs = float(sum(0.5 * np.log2(ch.P[l] / variances[pi[l] - 1]) for l in range(L)))
    return lhs, sum_capacity(ch)


def random_unimodular(L: int, rng: np.random.Generator, steps: int = 12,
                      entry_cap: int = 50) -> np.ndarray:
    """Product of random elementary integer row operations applied to I.

    Bounded entries keep the matrices well conditioned for numerical tests.
    """
    A = np.eye(L, dtype=int)
    for _ in range(steps):
        i, j = rng.integers(0, L, size=2)
        if i == j:
            A[i] = -A[i]
            continue
        f = int(rng.integers(-2, 3))
        trial = A.copy()
        trial[i] = trial[i] + f * trial[j]
        if np.max(np.abs(trial)) <= entry_cap:
            A = trial
    return A
