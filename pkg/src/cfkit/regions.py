"""Achievable rate regions: per-combination boxes for parallel/successive
computation, multiple-access capacity constraint sets, SIC rate tuples,
membership search, and exact 2D region geometry (intersections and hulls).

Index pairs in mappings are 1-indexed, matching the (combination, user)
naming used throughout: (m, l) means user l must tolerate the noise of
decoding step m.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _exact, intsearch
from .core import (UNBOUNDED, ChannelInstance, achievable_rate, sigma_para_opt,
                   sigma_succ_opt, sum_capacity)

_TOL = 1e-9


@dataclass(frozen=True)
class AdmissibleMapping:
    """Set of (combination, user) pairs with a lower-unitriangular witness.

    The witness L satisfies (L @ A)[m, l] == 0 for every pair outside the
    mapping, which is what makes the cancellation order realizable.
    """

    pairs: frozenset[tuple[int, int]]
    L_real: np.ndarray | None = None

    def rows_for_user(self, user: int) -> list[int]:
        return sorted(m for (m, l) in self.pairs if l == user)


@dataclass
class Box:
    caps: tuple[float, ...]  # per-user rate caps; math.inf marks "unbounded"
    provenance: dict | str | None = None

    def contains(self, rates, tol: float = _TOL) -> bool:
        rates = np.asarray(rates, dtype=float).ravel()
        return all(r <= c + tol for r, c in zip(rates, self.caps))


@dataclass
class RateRegionSpec:
    """Union of axis-aligned boxes and/or a list of subset-sum constraints."""

    L: int
    boxes: list[Box] = field(default_factory=list)
    constraint_sets: list[tuple[frozenset, float]] | None = None

    def contains(self, rates, tol: float = _TOL) -> bool:
        rates = np.asarray(rates, dtype=float).ravel()
        if self.boxes and any(b.contains(rates, tol) for b in self.boxes):
            return True
        if self.constraint_sets is not None:
            return all(sum(rates[u - 1] for u in users) <= bound + tol
                       for users, bound in self.constraint_sets)
        return False


def all_pairs_mapping(L: int) -> AdmissibleMapping:
    pairs = frozenset((m, l) for m in range(1, L + 1) for l in range(1, L + 1))
    return AdmissibleMapping(pairs=pairs, L_real=np.eye(L))


def participation_mapping(Atilde) -> AdmissibleMapping:
    """Pairs where the coefficient is nonzero; always admissible (witness I)."""
    A = np.atleast_2d(np.asarray(Atilde, dtype=int))
    pairs = frozenset((m + 1, l + 1) for m in range(A.shape[0])
                      for l in range(A.shape[1]) if A[m, l] != 0)
    return AdmissibleMapping(pairs=pairs, L_real=np.eye(A.shape[0]))


def is_admissible(Atilde, pairs) -> AdmissibleMapping | None:
    """Return a lower-unitriangular witness for the pair set, or None.

    Row by row, solves for coefficients on the earlier rows that zero out
    every column not in the mapping (least squares with a residual check).
    """
    A = np.atleast_2d(np.asarray(Atilde, dtype=float))
    L = A.shape[0]
    pairs = frozenset((int(m), int(l)) for (m, l) in pairs)
    W = np.eye(L)
    scale = max(1.0, float(np.max(np.abs(A))))
    for m in range(1, L + 1):
        cols = [l - 1 for l in range(1, L + 1) if (m, l) not in pairs]
        if not cols:
            continue
        target = -A[m - 1, cols]
        if m == 1:
            if np.max(np.abs(target)) > _TOL * scale:
                return None
            continue
        block = A[: m - 1, cols]
        x, *_ = np.linalg.lstsq(block.T, target, rcond=None)
        if np.max(np.abs(block.T @ x - target)) > _TOL * scale:
            return None
        W[m - 1, : m - 1] = x
    return AdmissibleMapping(pairs=pairs, L_real=W)


def lu_mapping(A, pivot_order=None) -> tuple[AdmissibleMapping, tuple[int, ...]] | None:
    """Eliminate below each pivot without row swaps; returns (mapping, pi).

    pivot_order optionally forces the column (0-indexed) pivoted at each step;
    by default the leftmost unused nonzero column is taken.  pi[l-1] is the
    step at which user l's column was pivoted (1-indexed), so L @ A is upper
    triangular once columns are permuted into pivot order.  Returns None when
    a forced pivot is zero (that order needs a row swap).
    """
    A = np.atleast_2d(np.asarray(A, dtype=int))
    L = A.shape[0]
    work = [[Fraction(int(v)) for v in row] for row in A.tolist()]
    lower = [[Fraction(int(i == j)) for j in range(L)] for i in range(L)]
    pi = [0] * L
    used: list[int] = []
    for step in range(L):
        if pivot_order is not None:
            col = int(pivot_order[step])
            if col in used or work[step][col] == 0:
                return None
        else:
            col = next((c for c in range(L) if c not in used and work[step][c] != 0), None)
            if col is None:
                raise ValueError("matrix is rank deficient")
        used.append(col)
        pi[col] = step + 1
        for i in range(step + 1, L):
            if work[i][col] != 0:
                f = work[i][col] / work[step][col]
                work[i] = [wi - f * ws for wi, ws in zip(work[i], work[step])]
                lower[i] = [li - f * ls for li, ls in zip(lower[i], lower[step])]
    pairs = frozenset((m + 1, l + 1) for m in range(L) for l in range(L)
                      if work[m][l] != 0)
    witness = np.array([[float(v) for v in row] for row in lower])
    return AdmissibleMapping(pairs=pairs, L_real=witness), tuple(pi)


def lu_mappings_all(A) -> list[tuple[AdmissibleMapping, tuple[int, ...]]]:
    """All distinct (mapping, permutation) pairs over forced pivot orders."""
    A = np.atleast_2d(np.asarray(A, dtype=int))
    out = []
    seen = set()
    for order in itertools.permutations(range(A.shape[0])):
        res = lu_mapping(A, pivot_order=order)
        if res is not None and (res[0].pairs, res[1]) not in seen:
            seen.add((res[0].pairs, res[1]))
            out.append(res)
    return out


def _independent_prefix(A: np.ndarray, m: int) -> np.ndarray:
    """Rows before m (0-indexed exclusive) with dependent rows dropped."""
    kept: list[list[int]] = []
    for i in range(m):
        row = [int(v) for v in A[i]]
        if any(row) and _exact.rows_independent(kept, row):
            kept.append(row)
    return np.array(kept, dtype=int) if kept else np.zeros((0, A.shape[1]), dtype=int)


def row_variances(ch: ChannelInstance, Atilde, chained: bool) -> list[float]:
    """Per-row effective noise variance, chained (successive) or not."""
    A = np.atleast_2d(np.asarray(Atilde, dtype=int))
    out = []
    for m in range(A.shape[0]):
        if chained:
            prev = _independent_prefix(A, m)
            out.append(sigma_succ_opt(ch, A[m], prev).variance)
        else:
            out.append(sigma_para_opt(ch, A[m]).variance)
    return out


def _caps_from_rows(ch: ChannelInstance, variances, rows_per_user) -> tuple[float, ...]:
    caps = []
    for l in range(ch.num_users):
        rows = rows_per_user(l + 1)
        if not rows:
            caps.append(UNBOUNDED)
        else:
            caps.append(min(achievable_rate(ch.P[l], variances[m - 1]) for m in rows))
    return tuple(caps)


def para_region(ch: ChannelInstance, Atilde) -> RateRegionSpec:
    """One box: user l is capped by the worst row in which it participates."""
    A = np.atleast_2d(np.asarray(Atilde, dtype=int))
    variances = row_variances(ch, A, chained=False)
    caps = _caps_from_rows(
        ch, variances,
        lambda user: [m + 1 for m in range(A.shape[0]) if A[m, user - 1] != 0])
    box = Box(caps=caps, provenance={"Atilde": A.tolist(), "mapping": "participation"})
    return RateRegionSpec(L=ch.num_users, boxes=[box])


def succ_region(ch: ChannelInstance, Atilde, mapping) -> RateRegionSpec:
    """One box from chained variances; caps follow the admissible mapping."""
    A = np.atleast_2d(np.asarray(Atilde, dtype=int))
    mapping = _coerce_mapping(A, mapping)
    variances = row_variances(ch, A, chained=True)
    caps = _caps_from_rows(ch, variances, mapping.rows_for_user)
    box = Box(caps=caps, provenance={"Atilde": A.tolist(),
                                     "mapping": sorted(mapping.pairs)})
    return RateRegionSpec(L=ch.num_users, boxes=[box])


def asc_region(ch: ChannelInstance, Atilde, mapping) -> RateRegionSpec:
    """Like succ_region but with unchained per-row variances (side-information
    equalizers set to zero: only the cancellation order is exploited)."""
    A = np.atleast_2d(np.asarray(Atilde, dtype=int))
    mapping = _coerce_mapping(A, mapping)
    variances = row_variances(ch, A, chained=False)
    caps = _caps_from_rows(ch, variances, mapping.rows_for_user)
    box = Box(caps=caps, provenance={"Atilde": A.tolist(),
                                     "mapping": sorted(mapping.pairs),
                                     "chained": False})
    return RateRegionSpec(L=ch.num_users, boxes=[box])


def _coerce_mapping(A: np.ndarray, mapping) -> AdmissibleMapping:
    if isinstance(mapping, AdmissibleMapping):
        pairs = mapping.pairs
    else:
        pairs = frozenset((int(m), int(l)) for (m, l) in mapping)
    witness = is_admissible(A, pairs)
    if witness is None:
        raise ValueError("mapping is not admissible for this coefficient matrix")
    return witness


def mac_region(ch: ChannelInstance) -> RateRegionSpec:
    """Multiple-access capacity region as 2^L - 1 subset-sum constraints."""
    L = ch.num_users
    constraints = []
    for r in range(1, L + 1):
        for subset in itertools.combinations(range(L), r):
            sub = ChannelInstance(H=ch.H[:, list(subset)], P=ch.P[list(subset)])
            constraints.append((frozenset(u + 1 for u in subset), sum_capacity(sub)))
    return RateRegionSpec(L=L, boxes=[], constraint_sets=constraints)


def sic_rates(ch: ChannelInstance, order) -> tuple[float, ...]:
    """Rate tuple of successive interference cancellation in the given
    decoding order (1-indexed users, first decoded first)."""
    order = [int(u) for u in order]
    if sorted(order) != list(range(1, ch.num_users + 1)):
        raise ValueError("order must be a permutation of the users")
    H, P = ch.H, ch.P
    rates = [0.0] * ch.num_users
    for pos, user in enumerate(order):
        later = [u - 1 for u in order[pos + 1:]]
        G = np.eye(ch.num_antennas)
        for i in later:
            hi = H[:, i:i + 1]
            G = G + P[i] * (hi @ hi.T)
        h = H[:, user - 1]
        snr = P[user - 1] * float(h @ np.linalg.solve(G, h))
        rates[user - 1] = 0.5 * math.log2(1.0 + snr)
    return tuple(rates)


@dataclass
class MembershipResult:
    status: str  # "member", "not_member", or "inconclusive"
    witness_Atilde: np.ndarray | None = None
    witness_mapping: AdmissibleMapping | None = None

    def __bool__(self) -> bool:
        return self.status == "member"


def membership(ch: ChannelInstance, A, rates, mode: str = "parallel",
               search_bound: int | None = None,
               max_candidates: int = 500_000) -> MembershipResult:
    """Search bounded integer matrices whose rowspan contains rowspan(A) for a
    box covering the rate tuple.

    Definite rejection uses the capacity-region outer bound; otherwise a
    failed search is reported as "inconclusive" because the achievable union
    ranges over all integer matrices, not just the searched box.
    """
    if mode not in ("parallel", "successive"):
        raise ValueError("mode must be 'parallel' or 'successive'")
    A = np.atleast_2d(np.asarray(A, dtype=int))
    L = ch.num_users
    rates = np.asarray(rates, dtype=float).ravel()
    if np.all(rates <= _TOL):
        pad = np.vstack([A, np.zeros((max(0, L - A.shape[0]), L), dtype=int)])
        return MembershipResult("member", pad, all_pairs_mapping(L))
    if not mac_region(ch).contains(rates):
        return MembershipResult("not_member")
    if search_bound is None:
        search_bound = int(math.ceil(math.sqrt(intsearch.entry_bound(ch))))
    count = (2 * search_bound + 1) ** (L * L)
    if count > max_candidates:
        raise ValueError(
            f"{count} candidate matrices exceed max_candidates={max_candidates}")
    entries = range(-search_bound, search_bound + 1)
    nonzero_users = [l for l in range(L) if rates[l] > _TOL]
    for flat in itertools.product(entries, repeat=L * L):
        cand = np.array(flat, dtype=int).reshape(L, L)
        # participation prefilter: every positive-rate user needs a box cap
        if any(not np.any(cand[:, l]) for l in nonzero_users):
            continue
        if not intsearch.rowspan_contains_real(cand, A):
            continue
        if mode == "parallel":
            if para_region(ch, cand).contains(rates):
                return MembershipResult("member", cand, None)
        else:
            if _exact.int_rank(cand.tolist()) == L:
                for mapping, _pi in lu_mappings_all(cand):
                    if succ_region(ch, cand, mapping).contains(rates):
                        return MembershipResult("member", cand, mapping)
            mapping = all_pairs_mapping(L)
            if succ_region(ch, cand, mapping).contains(rates):
                return MembershipResult("member", cand, mapping)
    return MembershipResult("inconclusive")


# ---------------------------------------------------------------------------
# exact 2D geometry
# ---------------------------------------------------------------------------

def _frac(x) -> Fraction | None:
    return None if x == UNBOUNDED else Fraction(float(x))


class _Region2D:
    """Upper boundary y = f(x) of a two-user region, evaluated exactly."""

    def __init__(self, spec: RateRegionSpec):
        if spec.L != 2:
            raise ValueError("2D geometry requires exactly two users")
        self.boxes: list[tuple[Fraction | None, Fraction | None]] = []
        self.poly: tuple[Fraction, Fraction, Fraction] | None = None
        if spec.constraint_sets is not None:
            c1 = c2 = c12 = None
            for users, bound in spec.constraint_sets:
                b = Fraction(float(bound))
                if users == frozenset({1}):
                    c1 = b
                elif users == frozenset({2}):
                    c2 = b
                elif users == frozenset({1, 2}):
                    c12 = b
            if None in (c1, c2, c12):
                raise ValueError("constraint sets must cover {1}, {2}, {1,2}")
            self.poly = (c1, c2, min(c12, c1 + c2))
        for box in spec.boxes:
            self.boxes.append((_frac(box.caps[0]), _frac(box.caps[1])))
        if not self.boxes and self.poly is None:
            raise ValueError("empty region spec")

    def xmax(self) -> Fraction | None:
        vals = []
        if self.poly is not None:
            c1, _, c12 = self.poly
            vals.append(min(c1, c12))
        if self.boxes:
            caps1 = [b[0] for b in self.boxes]
            vals.append(None if any(c is None for c in caps1) else max(caps1))
        if any(v is None for v in vals):
            return None
        return max(vals)

    def value(self, x: Fraction, strict: bool = False) -> Fraction | None:
        """f(x) = sup{y : (x, y) in region}; None means unbounded, negative
        means x lies beyond the region.  strict=True gives the right limit
        (box edges excluded), which is what staircase jumps need."""
        candidates = []
        for c1, c2 in self.boxes:
            covers = True if c1 is None else (c1 > x if strict else c1 >= x)
            if covers:
                if c2 is None:
                    return None
                candidates.append(c2)
        if self.poly is not None:
            c1, c2, c12 = self.poly
            if x <= min(c1, c12):
                candidates.append(min(c2, c12 - x))
        if not candidates:
            return Fraction(-1)
        return max(candidates)

    def breakpoints(self) -> tuple[set, set, set]:
        """(x-candidates, horizontal levels, diagonal offsets c12)."""
        xs, levels, diags = set(), set(), set()
        for c1, c2 in self.boxes:
            if c1 is not None:
                xs.add(c1)
            if c2 is not None:
                levels.add(c2)
        if self.poly is not None:
            c1, c2, c12 = self.poly
            xs.update([min(c1, c12), c12 - c2 if c12 - c2 >= 0 else Fraction(0)])
            levels.add(c2)
            diags.add(c12)
        return xs, levels, diags


def _min_over(regions: list[_Region2D], x: Fraction, strict: bool) -> Fraction | None:
    vals = [reg.value(x, strict) for reg in regions]
    if any(v is not None and v < 0 for v in vals):
        return Fraction(-1)
    finite = [v for v in vals if v is not None]
    if not finite:
        return None  # unbounded everywhere
    return min(finite)


def region_2d(specs: list[RateRegionSpec], operation: str = "intersect"):
    """Vertices of the intersection of two-user regions, optionally convexified.

    Returns a list of (R1, R2) floats tracing the outer boundary from the
    R2 axis down to the R1 axis, sorted by R1.  An empty intersection yields
    an empty list.
    """
    if operation not in ("intersect", "hull"):
        raise ValueError("operation must be 'intersect' or 'hull'")
    regions = [_Region2D(s) for s in specs]
    xmaxes = [r.xmax() for r in regions]
    if any(x is None for x in xmaxes):
        finite = [x for x in xmaxes if x is not None]
        if not finite:
            raise ValueError("intersection is unbounded in R1")
        X = min(finite)
    else:
        X = min(xmaxes)
    if X < 0:
        return []
    all_x, all_levels, all_diags = set(), set(), set()
    for reg in regions:
        xs, levels, diags = reg.breakpoints()
        all_x |= xs
        all_levels |= levels
        all_diags |= diags
    for c12 in all_diags:
        for y in all_levels:
            all_x.add(c12 - y)
    xs = sorted({x for x in all_x if 0 <= x <= X} | {Fraction(0), X})

    y0 = _min_over(regions, Fraction(0), strict=False)
    if y0 is None:
        raise ValueError("intersection is unbounded in R2")
    if y0 < 0:
        return []
    verts: list[tuple[Fraction, Fraction]] = [(Fraction(0), y0)]
    for xa, xb in zip(xs, xs[1:]):
        right = _min_over(regions, xa, strict=True)
        if right is None:
            raise ValueError("intersection is unbounded in R2")
        if right != verts[-1][1]:
            verts.append((xa, max(right, Fraction(0))))
        left_b = _min_over(regions, xb, strict=False)
        if left_b is None:
            raise ValueError("intersection is unbounded in R2")
        verts.append((xb, max(left_b, Fraction(0))))
    if verts[-1][1] != 0:
        verts.append((X, Fraction(0)))
    verts = _merge_collinear(verts)
    if operation == "hull":
        verts = _upper_hull(verts)
    return [(float(x), float(y)) for x, y in verts]


def _merge_collinear(verts):
    out = [verts[0]]
    for p in verts[1:]:
        if p == out[-1]:
            continue
        if len(out) >= 2:
            (x1, y1), (x2, y2) = out[-2], out[-1]
            if (x2 - x1) * (p[1] - y2) == (p[0] - x2) * (y2 - y1):
                out[-1] = p
                continue
        out.append(p)
    return out


def _upper_hull(verts):
    pts = sorted(set(verts), key=lambda p: (p[0], -p[1]))
    hull: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (p[0] - x1) * (y2 - y1)
            if cross >= 0:  # hull turns clockwise going right
                hull.pop()
            else:
                break
        hull.append(p)
    if hull and hull[-1][1] != 0:
        hull.append((hull[-1][0], Fraction(0)))
    return _merge_collinear(hull)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def boundary_to_csv(vertices) -> str:
    lines = ["R1,R2"]
    lines += [f"{x:.6f},{y:.6f}" for x, y in vertices]
    return "\n".join(lines) + "\n"


def _cap_json(c: float):
    return "unbounded" if c == UNBOUNDED else round(float(c), 6)


def spec_to_json(spec: RateRegionSpec) -> str:
    payload: dict = {"L": spec.L, "boxes": [
        {"caps": [_cap_json(c) for c in b.caps], "provenance": b.provenance}
        for b in spec.boxes]}
    if spec.constraint_sets is not None:
        payload["constraint_sets"] = [
            {"users": sorted(users), "bound": round(float(bound), 6)}
            for users, bound in spec.constraint_sets]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
