"""Desk-scale nested lattice ensembles from length-n linear codes over Z_p.

A generator matrix G (k_F x n over Z_p) defines a chain of codes via its row
prefixes; lifting each code c -> (gamma/p) * (c + p Z^n) gives a chain of
nested lattices.  User l's coarse/fine pair is the prefix pair
(k_C,l, k_F,l).  Quantization enumerates the p^k codewords of the underlying
code, which caps the usable sizes (enforced below) but keeps everything exact.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _zp
from ._kernels import nearest_codeword_point

MAX_N = 10
MAX_P = 13
MAX_KF = 6
MAX_CODEWORDS = 20000


@dataclass
class NestedLatticeEnsemble:
    n: int
    p: int
    gamma: float
    levels: tuple[tuple[int, int], ...]  # (k_C,l , k_F,l) per user
    G: np.ndarray                        # k_F x n over Z_p
    _tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _zp.require_prime(self.p)
        self.levels = tuple((int(a), int(b)) for a, b in self.levels)
        G = np.array(self.G, dtype=np.int64) % self.p
        self.G = G
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        kf = self.k_F
        if not (1 <= self.n <= MAX_N and self.p <= MAX_P and kf <= MAX_KF):
            raise ValueError(
                f"desk scale caps: n <= {MAX_N}, p <= {MAX_P}, k_F <= {MAX_KF}")
        if self.p ** kf > MAX_CODEWORDS:
            raise ValueError(f"p^k_F = {self.p ** kf} exceeds {MAX_CODEWORDS}")
        if kf > self.n:
            raise ValueError("k_F must not exceed the blocklength")
        if G.shape != (kf, self.n):
            raise ValueError(f"G must be {kf} x {self.n}")
        for kc, kfl in self.levels:
            if not 0 <= kc <= kfl <= kf:
                raise ValueError("levels must satisfy 0 <= k_C,l <= k_F,l <= k_F")
        for k in self.required_prefixes():
            if _zp.rank_mod_p(G[:k].tolist(), self.p) != k:
                raise ValueError(f"prefix of {k} rows of G is rank deficient mod p")

    @property
    def num_users(self) -> int:
        return len(self.levels)

    @property
    def k_C(self) -> int:
        return min(kc for kc, _ in self.levels)

    @property
    def k_F(self) -> int:
        return max(kf for _, kf in self.levels)

    @property
    def k(self) -> int:
        return self.k_F - self.k_C

    def required_prefixes(self) -> list[int]:
        sizes = {kc for kc, _ in self.levels} | {kf for _, kf in self.levels}
        return sorted(s for s in sizes if s > 0)

    def prefix_len(self, which) -> int:
        """Prefix size of the chain lattice named by `which`.

        "C"/"F" are the coarsest/finest lattices; ("C", l) and ("F", l) are
        user l's coarse and fine lattices (1-indexed).
        """
        if which == "C":
            return self.k_C
        if which == "F":
            return self.k_F
        kind, user = which
        if not 1 <= user <= self.num_users:
            raise ValueError(f"user index {user} out of range")
        kc, kf = self.levels[user - 1]
        if kind == "C":
            return kc
        if kind == "F":
            return kf
        raise ValueError(f"unknown lattice id {which!r}")

    def codeword_shifts(self, prefix: int) -> np.ndarray:
        """All p^prefix codewords scaled by gamma/p (rows, float64)."""
        if prefix not in self._tables:
            if prefix == 0:
                table = np.zeros((1, self.n))
            else:
                V = np.array(list(itertools.product(range(self.p), repeat=prefix)),
                             dtype=np.int64)
                C = (V @ self.G[:prefix]) % self.p
                table = (self.gamma / self.p) * C.astype(np.float64)
            table.setflags(write=False)
            self._tables[prefix] = table
        return self._tables[prefix]

    def to_json(self) -> str:
        payload = {"n": self.n, "p": self.p, "gamma": self.gamma,
                   "levels": [list(lv) for lv in self.levels],
                   "G": self.G.ravel().tolist()}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NestedLatticeEnsemble":
        d = json.loads(text)
        kf = max(b for _, b in d["levels"])
        G = np.array(d["G"], dtype=np.int64).reshape(kf, d["n"])
        return cls(n=d["n"], p=d["p"], gamma=d["gamma"],
                   levels=tuple(tuple(lv) for lv in d["levels"]), G=G)


def ball_volume(n: int) -> float:
    """Volume of the unit n-ball."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def largest_prime_for(n: int) -> int:
    """Largest prime in [n^(3/2)/2, n^(3/2)], the asymptotic field-size rule."""
    hi = int(math.floor(n ** 1.5))
    lo = max(2, int(math.ceil(n ** 1.5 / 2)))
    for q in range(hi, lo - 1, -1):
        if _zp.is_prime(q):
            return q
    raise ValueError(f"no prime between {lo} and {hi}")


def nominal_levels(powers, noise_tolerances, n: int, alpha: float,
                   p: int | None = None) -> dict:
    """Real-valued prefix sizes from the asymptotic parameter formulas.

    Returns the per-user (k_C, k_F) reals, rounded integer suggestions, the
    nominal rates (k_F - k_C)/n * log2 p, and the suggested scale
    gamma = 2 sqrt(n P_max 2^alpha).  Reference only: desk-scale builds pick
    their own small p and gamma.
    """
    powers = np.asarray(powers, dtype=float).ravel()
    tols = np.asarray(noise_tolerances, dtype=float).ravel()
    if powers.shape != tols.shape:
        raise ValueError("powers and noise tolerances must align")
    if np.any(tols <= 0) or np.any(tols >= powers):
        raise ValueError("need 0 < noise tolerance < power for every user")
    if p is None:
        p = largest_prime_for(n)
    _zp.require_prime(p)
    p_max = float(np.max(powers))
    vn = ball_volume(n)
    common = math.log2(4.0 / vn ** (2.0 / n)) + alpha
    scale = n / (2.0 * math.log2(p))
    k_c = scale * (np.log2(p_max / powers) + common)
    k_f = scale * (np.log2(p_max / tols) + common)
    rates = (k_f - k_c) / n * math.log2(p)
    return {
        "p": p,
        "gamma": 2.0 * math.sqrt(n * p_max * 2.0 ** alpha),
        "k_C": k_c.tolist(),
        "k_F": k_f.tolist(),
        "k_C_rounded": [int(round(v)) for v in k_c],
        "k_F_rounded": [int(round(v)) for v in k_f],
        "rates": rates.tolist(),
    }


def build_ensemble(n: int, p: int, gamma: float, levels, seed: int,
                   G=None, max_retries: int = 200) -> NestedLatticeEnsemble:
    """Draw G uniformly (seeded) until every needed prefix is full rank.

    An explicit G skips sampling but is still validated.
    """
    levels = tuple((int(a), int(b)) for a, b in levels)
    kf = max(b for _, b in levels)
    if G is not None:
        return NestedLatticeEnsemble(n=n, p=p, gamma=gamma, levels=levels,
                                     G=np.array(G, dtype=np.int64))
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_retries):
        cand = rng.integers(0, p, size=(kf, n), dtype=np.int64)
        try:
            return NestedLatticeEnsemble(n=n, p=p, gamma=gamma, levels=levels, G=cand)
        except ValueError as err:
            if "rank deficient" not in str(err):
                raise
    raise RuntimeError(f"no full-rank generator found in {max_retries} draws")


def nearest_point(ens: NestedLatticeEnsemble, which, x) -> np.ndarray:
    """Exact nearest lattice point (deterministic lexicographic tie-break)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != ens.n:
        raise ValueError(f"point must have dimension {ens.n}")
    table = ens.codeword_shifts(ens.prefix_len(which))
    return nearest_codeword_point(table, x, float(ens.gamma))


def mod_lattice(ens: NestedLatticeEnsemble, which, x) -> np.ndarray:
    """Quantization error x - Q(x); always lands in the Voronoi region."""
    x = np.asarray(x, dtype=float).ravel()
    return x - nearest_point(ens, which, x)


def _field_coords(ens: NestedLatticeEnsemble, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).ravel()
    scaled = lam * ens.p / ens.gamma
    rounded = np.rint(scaled)
    if np.max(np.abs(scaled - rounded)) > 1e-6:
        raise ValueError("point is not on the gamma/p integer grid")
    return rounded.astype(np.int64) % ens.p


def linear_label(ens: NestedLatticeEnsemble, lam) -> np.ndarray:
    """Label in Z_p^k: the trailing k coordinates of the unique message vector
    whose codeword matches the point's mod-p reduction."""
    c = _field_coords(ens, lam)
    v = _zp.solve_mod_p(ens.G.T.tolist(), c.tolist(), ens.p)
    if v is None:
        raise ValueError("point is not in the finest lattice of the ensemble")
    return np.array(v[ens.k_C:], dtype=np.int64)


def label_inverse(ens: NestedLatticeEnsemble, w) -> np.ndarray:
    """Lattice point with the given label: lift of G^T [0_{k_C}; w]."""
    w = np.asarray(w, dtype=np.int64).ravel() % ens.p
    if w.shape[0] != ens.k:
        raise ValueError(f"label must have length {ens.k}")
    v = np.concatenate([np.zeros(ens.k_C, dtype=np.int64), w])
    c = (v @ ens.G) % ens.p
    return (ens.gamma / ens.p) * c.astype(np.float64)


def label_add(ens: NestedLatticeEnsemble, labels, coeffs) -> np.ndarray:
    """Mod-p combination sum_l coeffs[l] * labels[l]."""
    acc = np.zeros(ens.k, dtype=np.int64)
    for lab, a in zip(labels, coeffs):
        acc = (acc + (int(a) % ens.p) * np.asarray(lab, dtype=np.int64)) % ens.p
    return acc


def coset_contains(ens: NestedLatticeEnsemble, user: int, candidate, message) -> bool:
    """Does the candidate label sit in user `user`'s coset of the message?

    Leading k_C,l - k_C symbols are free ("don't care"), the middle block
    must equal the message, and the trailing k_F - k_F,l symbols must be 0.
    """
    kc, kf = ens.levels[user - 1]
    candidate = np.asarray(candidate, dtype=np.int64).ravel() % ens.p
    message = np.asarray(message, dtype=np.int64).ravel() % ens.p
    if message.shape[0] != kf - kc:
        raise ValueError(f"message for user {user} must have length {kf - kc}")
    if candidate.shape[0] != ens.k:
        raise ValueError(f"label must have length {ens.k}")
    lead = kc - ens.k_C
    mid = candidate[lead:lead + (kf - kc)]
    tail = candidate[ens.k - (ens.k_F - kf):] if ens.k_F > kf else candidate[:0]
    return bool(np.array_equal(mid, message) and not np.any(tail))


def zero_padded_label(ens: NestedLatticeEnsemble, user: int, message) -> np.ndarray:
    """Message embedded at user `user`'s signal levels (zeros elsewhere)."""
    kc, kf = ens.levels[user - 1]
    message = np.asarray(message, dtype=np.int64).ravel() % ens.p
    if message.shape[0] != kf - kc:
        raise ValueError(f"message for user {user} must have length {kf - kc}")
    lead = kc - ens.k_C
    out = np.zeros(ens.k, dtype=np.int64)
    out[lead:lead + message.shape[0]] = message
    return out


def sample_voronoi(ens: NestedLatticeEnsemble, which, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the Voronoi region of a coarse-chain lattice.

    A uniform draw from the cube [0, gamma)^n is uniform over a fundamental
    domain of gamma Z^n, which is a sublattice of every chain lattice, so its
    mod-lattice image is exactly uniform over the Voronoi region.
    """
    cube = rng.random(ens.n) * ens.gamma
    return mod_lattice(ens, which, cube)


def second_moment(ens: NestedLatticeEnsemble, which, samples: int,
                  seed: int) -> tuple[float, float]:
    """Monte-Carlo (estimate, standard error) of the per-dimension second
    moment of the named lattice's Voronoi region."""
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = np.empty(samples)
    for i in range(samples):
        v = sample_voronoi(ens, which, rng)
        vals[i] = float(v @ v) / ens.n
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(samples))
