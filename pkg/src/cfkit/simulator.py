"""Monte-Carlo harness for the nested-lattice encoding and decoding chains.

Every trial keeps exact ground truth: the dithered lattice points, the
integer combinations they induce (via the linear labeling), and the real
combinations of channel inputs.  Decoders are checked symbol-exactly against
that truth.  Per-trial randomness comes from a counter-based generator keyed
by (master_seed, trial_index), so reports are reproducible and independent of
how trials are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from . import _zp, lattice, regions
from .core import ChannelInstance
from .lattice import NestedLatticeEnsemble


@dataclass
class TrialConfig:
    ensemble: NestedLatticeEnsemble
    ch: ChannelInstance
    A: np.ndarray
    mode: str  # "parallel" or "successive"
    mapping: frozenset | None = None
    noise_std: float = 1.0
    equalizers: str | dict = "optimal"
    master_seed: int = 0

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=int))
        if self.mode not in ("parallel", "successive"):
            raise ValueError("mode must be 'parallel' or 'successive'")
        if self.mode == "successive" and self.mapping is None:
            raise ValueError("successive mode needs an admissible mapping")
        if not (math.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ValueError("noise_std must be finite and nonnegative")
        if self.A.shape[1] != self.ch.num_users:
            raise ValueError("coefficient matrix width must match user count")
        if self.ensemble.num_users != self.ch.num_users:
            raise ValueError("ensemble and channel disagree on user count")


@dataclass
class TrialRecord:
    messages: list
    dithers: list
    codewords: list
    inputs: np.ndarray       # L x n
    shifted_points: list     # lattice points in the codeword cosets
    true_labels: list
    decoded_labels: list
    decoded_real: list | None
    success: list[bool]
    real_success: list[bool] | None


def encode(ens: NestedLatticeEnsemble, user: int, message, dither) -> tuple[np.ndarray, np.ndarray]:
    """Map a message to its lattice codeword and dithered channel input."""
    dither = np.asarray(dither, dtype=float).ravel()
    back = lattice.mod_lattice(ens, ("C", user), dither)
    if not np.allclose(back, dither, atol=1e-9):
        raise ValueError("dither must lie in the user's coarse Voronoi region")
    padded = lattice.zero_padded_label(ens, user, message)
    point = lattice.label_inverse(ens, padded)
    lam = lattice.mod_lattice(ens, ("C", user), point)
    x = lattice.mod_lattice(ens, ("C", user), lam + dither)
    return lam, x


def shifted_point(ens: NestedLatticeEnsemble, user: int, lam, dither) -> np.ndarray:
    """The coset representative the decoder actually recovers: the codeword
    shifted by the coarse point absorbed during dithering."""
    lam = np.asarray(lam, dtype=float).ravel()
    dither = np.asarray(dither, dtype=float).ravel()
    return lam - lattice.nearest_point(ens, ("C", user), lam + dither)


def true_combinations(ens: NestedLatticeEnsemble, A, shifted_points,
                      messages=None) -> list[np.ndarray]:
    """Ground-truth labels u_m of the integer combinations of shifted points."""
    A = np.atleast_2d(np.asarray(A, dtype=int))
    labels = [lattice.linear_label(ens, pt) for pt in shifted_points]
    if messages is not None:
        for user, (lab, msg) in enumerate(zip(labels, messages), start=1):
            if not lattice.coset_contains(ens, user, lab, msg):
                raise AssertionError(f"user {user}'s shifted point left its message coset")
    return [lattice.label_add(ens, labels, A[m]) for m in range(A.shape[0])]


def _theta_user(ens: NestedLatticeEnsemble, coeffs, p: int) -> int | None:
    """User with the finest lattice among mod-p participants (1-indexed)."""
    best = None
    for user in range(1, ens.num_users + 1):
        if int(coeffs[user - 1]) % p != 0:
            kf = ens.levels[user - 1][1]
            if best is None or kf > ens.levels[best - 1][1]:
                best = user
    return best


def _vartheta_user(ens: NestedLatticeEnsemble, mapping, m: int) -> int | None:
    users = [l for (row, l) in mapping if row == m]
    if not users:
        return None
    return max(users, key=lambda l: (ens.levels[l - 1][1], -l))


def parallel_equalizers(ch: ChannelInstance, A, noise_std: float) -> list[np.ndarray]:
    """Per-row MMSE equalizers for channel noise of the given deviation."""
    A = np.atleast_2d(np.asarray(A, dtype=int))
    if noise_std == 0.0:
        P = ch.P_matrix()
        G = ch.H @ P @ ch.H.T
        return [np.linalg.pinv(G) @ (ch.H @ P @ A[m]) for m in range(A.shape[0])]
    scaled = ChannelInstance(H=ch.H / noise_std, P=ch.P)
    out = []
    for m in range(A.shape[0]):
        from .core import sigma_para_opt

        out.append(sigma_para_opt(scaled, A[m]).b_opt / noise_std)
    return out


def successive_equalizers(ch: ChannelInstance, A, noise_std: float
                          ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-row (b, c) pairs; c entries for dropped (dependent) rows are zero."""
    from .core import sigma_succ_opt

    A = np.atleast_2d(np.asarray(A, dtype=int))
    scaled = None
    if noise_std > 0.0:
        scaled = ch if noise_std == 1.0 else ChannelInstance(H=ch.H / noise_std, P=ch.P)
    out = []
    for m in range(A.shape[0]):
        keep = [i for i in range(m)
                if regions._independent_prefix(A, i + 1).shape[0] >
                regions._independent_prefix(A, i).shape[0]]
        prev = A[keep] if keep else np.zeros((0, ch.num_users), dtype=int)
        c_full = np.zeros(m)
        if noise_std == 0.0:
            P12 = np.sqrt(ch.P)
            D = np.hstack([ch.H.T * 1.0, prev.T]) * P12[:, None]
            target = A[m] * P12
            z, *_ = np.linalg.lstsq(D, target, rcond=None)
            b = z[: ch.num_antennas]
            c = z[ch.num_antennas:]
        else:
            rep = sigma_succ_opt(scaled, A[m], prev)
            b = rep.b_opt / noise_std
            c = rep.c_opt if rep.c_opt is not None else np.zeros(0)
        for idx, row in enumerate(keep):
            c_full[row] = c[idx]
        out.append((np.asarray(b, dtype=float), c_full))
    return out


def decode_parallel(ens: NestedLatticeEnsemble, Y, ch: ChannelInstance, A,
                    dithers, equalizers="optimal", noise_std: float = 1.0):
    """Independent per-row decoding; returns (labels, flags) where a False
    flag marks a row whose coefficients all vanish mod p."""
    A = np.atleast_2d(np.asarray(A, dtype=int))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if equalizers == "optimal":
        equalizers = parallel_equalizers(ch, A, noise_std)
    labels = []
    live = []
    for m in range(A.shape[0]):
        theta = _theta_user(ens, A[m], ens.p)
        if theta is None:
            labels.append(np.zeros(ens.k, dtype=np.int64))
            live.append(False)
            continue
        ytilde = np.asarray(equalizers[m], dtype=float) @ Y
        t = ytilde - sum(int(A[m, l]) * np.asarray(dithers[l], dtype=float)
                         for l in range(ens.num_users))
        mu_hat = lattice.mod_lattice(ens, "C", lattice.nearest_point(ens, ("F", theta), t))
        labels.append(lattice.linear_label(ens, mu_hat))
        live.append(True)
    return labels, live


def zp_asc_matrix(A, mapping, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower-unitriangular cancellation matrix over Z_p and its inverse.

    Built by exact rational elimination, then reduced mod p.  Raises when a
    denominator vanishes mod p ("p too small" for this mapping).
    """
    _zp.require_prime(p)
    A = np.atleast_2d(np.asarray(A, dtype=int))
    L = A.shape[0]
    pairs = mapping.pairs if isinstance(mapping, regions.AdmissibleMapping) else frozenset(
        (int(m), int(l)) for (m, l) in mapping)
    rows = [[Fraction(int(v)) for v in row] for row in A.tolist()]
    Lbar = np.eye(L, dtype=np.int64)
    for m in range(1, L + 1):
        cols = [l - 1 for l in range(1, L + 1) if (m, l) not in pairs]
        if not cols:
            continue
        if m == 1:
            if any(rows[0][c] != 0 for c in cols):
                raise ValueError("mapping is not admissible (row 1)")
            continue
        sol = _solve_rational([[rows[i][c] for i in range(m - 1)] for c in cols],
                              [-rows[m - 1][c] for c in cols])
        if sol is None:
            raise ValueError(f"mapping is not admissible (row {m})")
        for i, frac in enumerate(sol):
            if frac.denominator % p == 0:
                raise ValueError(
                    f"p = {p} too small: cancellation coefficient {frac} has no mod-p image")
            Lbar[m - 1, i] = (frac.numerator * pow(frac.denominator, -1, p)) % p
    reduced = np.array(_zp.matmul_mod_p(Lbar.tolist(), A.tolist(), p), dtype=np.int64)
    for (m, l) in ((m, l) for m in range(1, L + 1) for l in range(1, L + 1)):
        if (m, l) not in pairs and reduced[m - 1, l - 1] % p != 0:
            raise AssertionError("mod-p cancellation failed to match the mapping")
    Lbar_inv = np.array(_zp.inv_mod_p(Lbar.tolist(), p), dtype=np.int64)
    return Lbar, Lbar_inv


def _solve_rational(M, t) -> list[Fraction] | None:
    """Solve M x = t exactly over the rationals (free variables -> 0)."""
    rows = [list(r) + [tv] for r, tv in zip(M, t)]
    m = len(rows)
    n = len(rows[0]) - 1 if m else 0
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    for i in range(r, m):
        if rows[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for row_idx, c in enumerate(pivots):
        x[c] = rows[row_idx][n]
    return x


def recover_real_combo(ens: NestedLatticeEnsemble, ytilde, mu, dithers, a) -> np.ndarray:
    """Rebuild the real combination a^T X from its mod-coarse residue.

    Exact whenever the effective noise of ytilde stays inside the coarsest
    Voronoi region; silently wrong otherwise (trial bookkeeping flags it).
    """
    a = np.asarray(a, dtype=int).ravel()
    acc = np.asarray(mu, dtype=float).ravel() + sum(
        int(a[l]) * np.asarray(dithers[l], dtype=float) for l in range(len(dithers)))
    chi = lattice.mod_lattice(ens, "C", acc)
    ytilde = np.asarray(ytilde, dtype=float).ravel()
    return lattice.nearest_point(ens, "C", ytilde - chi) + chi


def decode_successive(ens: NestedLatticeEnsemble, Y, ch: ChannelInstance, A,
                      mapping, dithers, equalizers="optimal",
                      noise_std: float = 1.0, with_internals: bool = False):
    """Full successive chain: equalize with decoded real combinations,
    cancel algebraically over Z_p, quantize, then invert the cancellation.

    Returns (labels, real_combos, live_flags); with_internals adds a dict of
    intermediate quantities (reduced combinations, cancellation matrices).
    """
    A = np.atleast_2d(np.asarray(A, dtype=int))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    L = A.shape[0]
    pairs = mapping.pairs if isinstance(mapping, regions.AdmissibleMapping) else frozenset(
        (int(m), int(l)) for (m, l) in mapping)
    Lbar, Lbar_inv = zp_asc_matrix(A, pairs, ens.p)
    if equalizers == "optimal":
        equalizers = successive_equalizers(ch, A, noise_std)
    labels, reals, nus, mus, live = [], [], [], [], []
    for m in range(L):
        b, c = equalizers[m]
        ytilde = np.asarray(b, dtype=float) @ Y
        for i in range(m):
            coef = float(np.asarray(c, dtype=float)[i]) if np.size(c) > i else 0.0
            if coef != 0.0:
                ytilde = ytilde + coef * reals[i]
        target_user = _vartheta_user(ens, pairs, m + 1)
        t = ytilde.copy()
        for i in range(m):
            if Lbar[m, i]:
                t = t + int(Lbar[m, i]) * mus[i]
        t = t - sum(int(A[m, l]) * np.asarray(dithers[l], dtype=float)
                    for l in range(ens.num_users))
        if target_user is None:
            nu = np.zeros(ens.n)
            live.append(False)
        else:
            nu = lattice.mod_lattice(
                ens, "C", lattice.nearest_point(ens, ("F", target_user), t))
            live.append(True)
        nus.append(nu)
        acc = nu
        for i in range(m):
            if Lbar_inv[m, i]:
                acc = acc + int(Lbar_inv[m, i]) * nus[i]
        mu = lattice.mod_lattice(ens, "C", acc)
        mus.append(mu)
        labels.append(lattice.linear_label(ens, mu))
        reals.append(recover_real_combo(ens, ytilde, mu, dithers, A[m]))
    if with_internals:
        return labels, reals, live, {"nu": nus, "mu": mus,
                                     "Lbar": Lbar, "Lbar_inv": Lbar_inv}
    return labels, reals, live


def run_single_trial(config: TrialConfig, index: int, equalizers=None) -> TrialRecord:
    ens, ch, A = config.ensemble, config.ch, config.A
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [config.master_seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64)))
    messages, dithers, codewords, inputs = [], [], [], []
    for user in range(1, ens.num_users + 1):
        kc, kf = ens.levels[user - 1]
        messages.append(rng.integers(0, ens.p, size=kf - kc, dtype=np.int64))
    for user in range(1, ens.num_users + 1):
        dithers.append(lattice.sample_voronoi(ens, ("C", user), rng))
    for user in range(1, ens.num_users + 1):
        lam, x = encode(ens, user, messages[user - 1], dithers[user - 1])
        codewords.append(lam)
        inputs.append(x)
    X = np.vstack(inputs)
    noise = rng.standard_normal((ch.num_antennas, ens.n)) * config.noise_std
    Y = ch.H @ X + noise
    shifted = [shifted_point(ens, u + 1, codewords[u], dithers[u])
               for u in range(ens.num_users)]
    truth = true_combinations(ens, A, shifted, messages)
    eq = equalizers if equalizers is not None else config.equalizers
    if config.mode == "parallel":
        decoded, _live = decode_parallel(ens, Y, ch, A, dithers, eq, config.noise_std)
        reals = None
        real_ok = None
    else:
        decoded, reals, _live = decode_successive(
            ens, Y, ch, A, config.mapping, dithers, eq, config.noise_std)
        real_ok = [bool(np.allclose(r, A[m] @ X, atol=1e-6 * max(1.0, ens.gamma)))
                   for m, r in enumerate(reals)]
    success = [bool(np.array_equal(u, v)) for u, v in zip(decoded, truth)]
    return TrialRecord(messages=messages, dithers=dithers, codewords=codewords,
                       inputs=X, shifted_points=shifted, true_labels=truth,
                       decoded_labels=decoded, decoded_real=reals,
                       success=success, real_success=real_ok)


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def run_trials(config: TrialConfig, trials: int, workers: int = 1,
               ci_level: float = 0.95) -> dict:
    """Deterministic report: per-combination error counts and confidence
    intervals plus per-user empirical power.  Identical for any worker count
    because trial i depends only on (master_seed, i)."""
    if config.equalizers == "optimal":
        if config.mode == "parallel":
            eq = parallel_equalizers(config.ch, config.A, config.noise_std)
        else:
            eq = successive_equalizers(config.ch, config.A, config.noise_std)
    else:
        eq = config.equalizers
    if workers <= 1:
        records = [run_single_trial(config, i, eq) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: run_single_trial(config, i, eq),
                                    range(trials)))
    L = config.A.shape[0]
    combos = []
    for m in range(L):
        errs = sum(0 if rec.success[m] else 1 for rec in records)
        lo, hi = wilson_interval(errs, trials, ci_level)
        entry = {"combination_index": m + 1, "errors": errs, "trials": trials,
                 "rate_estimate": errs / trials if trials else 0.0,
                 "ci_low": lo, "ci_high": hi}
        if config.mode == "successive":
            entry["real_errors"] = sum(
                0 if rec.real_success[m] else 1 for rec in records)
        combos.append(entry)
    n = config.ensemble.n
    power = [float(np.mean([rec.inputs[u] @ rec.inputs[u] / n for rec in records]))
             for u in range(config.ensemble.num_users)]
    return {"noise_std": config.noise_std, "trials": trials,
            "combinations": combos, "mean_power_per_user": power}
