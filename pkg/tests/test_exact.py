import numpy as np
import pytest

from cfkit import _exact


def brute_det(M):
    return round(float(np.linalg.det(np.array(M, dtype=float))))


def test_det_matches_float_determinant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        M = rng.integers(-6, 7, size=(n, n)).tolist()
        assert _exact.int_det(M) == brute_det(M)


def test_det_singular():
    assert _exact.int_det([[1, 2], [2, 4]]) == 0


def test_rank_examples():
    assert _exact.int_rank([[1, 1], [2, 2]]) == 1
    assert _exact.int_rank([[1, 0], [0, 1]]) == 2
    assert _exact.int_rank([[0, 0], [0, 0]]) == 0


def test_rows_independent():
    assert _exact.rows_independent([], [1, 2, 3])
    assert not _exact.rows_independent([[1, 2, 3]], [2, 4, 6])
    assert _exact.rows_independent([[1, 2, 3]], [1, 0, 0])


def test_unimodular():
    assert _exact.is_unimodular([[1, 1], [1, 2]])
    assert not _exact.is_unimodular([[2, 0], [0, 1]])
    assert not _exact.is_unimodular([[1, 2, 3]])


def test_smith_form_reconstructs_input():
    rng = np.random.default_rng(1)
    for _ in range(60):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        A = rng.integers(-8, 9, size=(m, n))
        S, U, V = _exact.smith_normal_form(A.tolist())
        S, U, V = np.array(S), np.array(U), np.array(V)
        assert np.array_equal(U @ A @ V, S)
        assert _exact.int_det(U.tolist()) in (1, -1)
        assert _exact.int_det(V.tolist()) in (1, -1)
        diag = [S[i, i] for i in range(min(m, n))]
        # off-diagonal zero, nonnegative divisibility chain
        assert np.count_nonzero(S) == np.count_nonzero(diag)
        for a, b in zip(diag, diag[1:]):
            assert a >= 0 and b >= 0
            if a and b:
                assert b % a == 0
            if a == 0:
                assert b == 0


def test_smith_known_case():
    S, _, _ = _exact.smith_normal_form([[2, 4, 4], [-6, 6, 12], [10, 4, 16]])
    assert [S[i][i] for i in range(3)] == [2, 2, 156]


def test_int_inverse_unimodular():
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        A = np.eye(n, dtype=int)
        for _ in range(6):
            i, j = rng.integers(0, n, size=2)
            if i != j:
                A[i] += int(rng.integers(-3, 4)) * A[j]
        inv = np.array(_exact.int_inverse_unimodular(A.tolist()))
        assert np.array_equal(A @ inv, np.eye(n, dtype=int))


def test_int_inverse_rejects_non_unimodular():
    with pytest.raises(ValueError):
        _exact.int_inverse_unimodular([[2, 0], [0, 1]])


def test_column_hnf_lower():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        while True:
            T = rng.integers(-6, 7, size=(n, n))
            if _exact.int_det(T.tolist()) != 0:
                break
        Tlow, W = _exact.column_hnf_lower(T.tolist())
        Tlow, W = np.array(Tlow), np.array(W)
        assert _exact.int_det(W.tolist()) in (1, -1)
        assert np.array_equal(T @ W, Tlow)
        assert np.array_equal(Tlow, np.tril(Tlow))
        assert all(Tlow[i, i] > 0 for i in range(n))
        for i in range(n):
            for j in range(i):
                assert 0 <= Tlow[i, j] < Tlow[i, i]


def test_column_hnf_of_unimodular_is_identity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        A = np.eye(n, dtype=int)
        for _ in range(8):
            i, j = rng.integers(0, n, size=2)
            if i != j:
                A[i] += int(rng.integers(-2, 3)) * A[j]
        Tlow, _ = _exact.column_hnf_lower(A.tolist())
        assert np.array_equal(np.array(Tlow), np.eye(n, dtype=int))
