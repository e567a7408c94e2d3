import itertools
import math

import numpy as np
import pytest

from cfkit.core import (UNBOUNDED, ChannelInstance, achievable_rate,
                        sigma_para_opt, sigma_succ_opt, sum_capacity)
from cfkit.regions import (AdmissibleMapping, Box, RateRegionSpec, asc_region,
                           all_pairs_mapping, boundary_to_csv, is_admissible,
                           lu_mapping, mac_region, membership, para_region,
                           participation_mapping, region_2d, sic_rates,
                           spec_to_json, succ_region)

FIG7 = ChannelInstance(H=[[1.0, 1.5]], P=[7.0, 4.0])
COMPSUCC = ChannelInstance(H=[[2.0, 1.0, 1.0]], P=[1.0, 1.0, 1.0])
COMPSUCC_A = np.array([[1, 1, 1], [1, -1, -1], [0, 0, 0]])


class TestParaRegion:
    def test_identity_matches_interference_as_noise(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            L = int(rng.integers(2, 5))
            ch = ChannelInstance(H=rng.normal(size=(2, L)),
                                 P=rng.uniform(0.5, 8.0, size=L))
            caps = para_region(ch, np.eye(L, dtype=int)).boxes[0].caps
            for l in range(L):
                others = [i for i in range(L) if i != l]
                G = np.eye(2)
                for i in others:
                    hi = ch.H[:, i:i + 1]
                    G = G + ch.P[i] * (hi @ hi.T)
                h = ch.H[:, l]
                tin = 0.5 * math.log2(1 + ch.P[l] * float(h @ np.linalg.solve(G, h)))
                assert caps[l] == pytest.approx(tin, abs=1e-9)

    def test_zero_row_contributes_nothing(self):
        spec = para_region(FIG7, [[1, 1], [0, 0]])
        only = para_region(FIG7, [[1, 1]])
        assert spec.boxes[0].caps == only.boxes[0].caps

    def test_absent_user_is_unbounded(self):
        spec = para_region(FIG7, [[1, 0]])
        assert spec.boxes[0].caps[1] == UNBOUNDED

    def test_fig7_worst_row_binds(self):
        caps = para_region(FIG7, [[1, 1], [1, 2]]).boxes[0].caps
        # oracle: sigma2 of the worst participating row
        s1 = sigma_para_opt(FIG7, [1, 1]).variance
        s2 = sigma_para_opt(FIG7, [1, 2]).variance
        assert caps[0] == pytest.approx(0.5 * math.log2(7 / max(s1, s2)), abs=1e-12)
        assert caps[0] == pytest.approx(0.9940, abs=5e-5)
        assert caps[1] == pytest.approx(0.5903, abs=5e-5)


class TestAdmissibility:
    def test_first_mapping_witness(self):
        pairs = {(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)}
        wit = is_admissible(COMPSUCC_A, pairs)
        assert wit is not None
        assert np.allclose(wit.L_real[1], [-1, 1, 0], atol=1e-9)

    def test_second_mapping_witness(self):
        pairs = {(1, 1), (1, 2), (1, 3), (2, 1)}
        wit = is_admissible(COMPSUCC_A, pairs)
        assert wit is not None
        assert np.allclose(wit.L_real[1], [1, 1, 0], atol=1e-9)

    def test_all_pairs_always_admissible(self):
        rng = np.random.default_rng(22)
        A = rng.integers(-4, 5, size=(3, 3))
        wit = is_admissible(A, all_pairs_mapping(3).pairs)
        assert wit is not None
        assert np.allclose(wit.L_real, np.eye(3))

    def test_non_admissible_returns_none(self):
        assert is_admissible([[1, 1], [1, 2]], {(1, 1), (2, 2)}) is None

    def test_witness_zeroes_mapped_out_entries(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            A = rng.integers(-3, 4, size=(3, 3))
            res = lu_mapping(A)
            if res is None:
                continue
            mapping, _ = res
            prod = mapping.L_real @ A
            for m in range(3):
                for l in range(3):
                    if (m + 1, l + 1) not in mapping.pairs:
                        assert abs(prod[m, l]) < 1e-9


class TestSuccRegion:
    def test_compsucc_chain_caps(self):
        # noise chain: 5/7 then 8/5 (minimized over both equalizers)
        mapping = {(1, 1), (1, 2), (1, 3), (2, 1)}
        caps = succ_region(COMPSUCC, COMPSUCC_A, mapping).boxes[0].caps
        r1 = achievable_rate(1.0, 5 / 7)
        r2 = achievable_rate(1.0, 8 / 5)
        assert caps[0] == pytest.approx(min(r1, r2), abs=1e-9)
        assert caps[1] == pytest.approx(r1, abs=1e-9)
        assert caps[2] == pytest.approx(r1, abs=1e-9)
        assert r1 == pytest.approx(0.5 * math.log2(7 / 5), abs=1e-12)

    def test_identity_mapping_reproduces_sic(self):
        rng = np.random.default_rng(24)
        for _ in range(20):
            L = int(rng.integers(2, 5))
            ch = ChannelInstance(H=rng.normal(size=(1, L)) * 2,
                                 P=rng.uniform(0.5, 8.0, size=L))
            diag = {(m, m) for m in range(1, L + 1)}
            caps = succ_region(ch, np.eye(L, dtype=int), diag).boxes[0].caps
            sic = sic_rates(ch, tuple(range(1, L + 1)))
            assert np.allclose(caps, sic, atol=1e-9)

    def test_permuted_identity_reproduces_any_sic_order(self):
        rng = np.random.default_rng(25)
        ch = ChannelInstance(H=rng.normal(size=(1, 3)), P=[1.0, 2.0, 3.0])
        for order in itertools.permutations((1, 2, 3)):
            A = np.zeros((3, 3), dtype=int)
            for step, user in enumerate(order):
                A[step, user - 1] = 1
            mapping = {(step + 1, user) for step, user in enumerate(order)}
            caps = succ_region(ch, A, mapping).boxes[0].caps
            assert np.allclose(caps, sic_rates(ch, order), atol=1e-9)

    def test_dominates_parallel_box(self):
        rng = np.random.default_rng(26)
        from cfkit.mac_opt import random_unimodular

        for _ in range(20):
            L = int(rng.integers(2, 4))
            ch = ChannelInstance(H=rng.normal(size=(2, L)),
                                 P=rng.uniform(0.5, 8.0, size=L))
            A = random_unimodular(L, rng)
            para = para_region(ch, A).boxes[0].caps
            succ = succ_region(ch, A, participation_mapping(A)).boxes[0].caps
            assert all(p <= s + 1e-9 for p, s in zip(para, succ))

    def test_rejects_non_admissible_mapping(self):
        with pytest.raises(ValueError, match="admissible"):
            succ_region(FIG7, [[1, 1], [1, 2]], {(1, 1), (2, 2)})


class TestAscRegion:
    def test_all_pairs_equals_para_for_dense_matrix(self):
        A = [[1, 1], [1, 2]]
        asc = asc_region(FIG7, A, all_pairs_mapping(2)).boxes[0].caps
        para = para_region(FIG7, A).boxes[0].caps
        assert np.allclose(asc, para, atol=1e-12)

    def test_fig7_vertices_from_dominant_mappings(self):
        A = np.array([[1, 1], [1, 2]])
        m1, _ = lu_mapping(A)
        m2, _ = lu_mapping(A, pivot_order=(1, 0))
        caps1 = asc_region(FIG7, A, m1).boxes[0].caps
        caps2 = asc_region(FIG7, A, m2).boxes[0].caps
        got = {tuple(round(c, 4) for c in caps1), tuple(round(c, 4) for c in caps2)}
        assert got == {(1.3624, 0.5903), (0.994, 0.9588)}

    def test_contained_in_succ_region(self):
        rng = np.random.default_rng(27)
        from cfkit.mac_opt import random_unimodular

        for _ in range(20):
            L = int(rng.integers(2, 4))
            ch = ChannelInstance(H=rng.normal(size=(1, L)) * 2,
                                 P=rng.uniform(0.5, 8.0, size=L))
            A = random_unimodular(L, rng)
            res = lu_mapping(A)
            if res is None:
                continue
            asc = asc_region(ch, A, res[0]).boxes[0].caps
            succ = succ_region(ch, A, res[0]).boxes[0].caps
            assert all(a <= s + 1e-9 for a, s in zip(asc, succ))


class TestMacRegion:
    def test_single_user(self):
        ch = ChannelInstance(H=[[2.0]], P=[3.0])
        spec = mac_region(ch)
        assert len(spec.constraint_sets) == 1
        users, bound = spec.constraint_sets[0]
        assert users == frozenset({1})
        assert bound == pytest.approx(0.5 * math.log2(1 + 4 * 3), abs=1e-12)

    def test_fig8_receiver1_bounds(self):
        ch = ChannelInstance(H=[[3.3, 2.1]], P=[4.0, 3.0])
        bounds = dict(mac_region(ch).constraint_sets)
        assert bounds[frozenset({1})] == pytest.approx(2.7388, abs=5e-4)
        assert bounds[frozenset({2})] == pytest.approx(1.9154, abs=5e-4)
        assert bounds[frozenset({1, 2})] == pytest.approx(2.9263, abs=5e-4)

    def test_submodularity(self):
        rng = np.random.default_rng(28)
        for _ in range(10):
            L = int(rng.integers(2, 5))
            ch = ChannelInstance(H=rng.normal(size=(2, L)),
                                 P=rng.uniform(0.5, 6.0, size=L))
            bounds = dict(mac_region(ch).constraint_sets)
            bounds[frozenset()] = 0.0
            users = list(range(1, L + 1))
            for r in range(1, L + 1):
                for S in itertools.combinations(users, r):
                    for T_ in itertools.combinations(users, r):
                        S_, T__ = frozenset(S), frozenset(T_)
                        lhs = bounds[S_ | T__] + bounds[S_ & T__]
                        rhs = bounds[S_] + bounds[T__]
                        assert lhs <= rhs + 1e-9

    def test_vertices_satisfy_constraints(self):
        ch = ChannelInstance(H=[[3.3, 2.1]], P=[4.0, 3.0])
        spec = mac_region(ch)
        verts = region_2d([spec], "intersect")
        bounds = dict(spec.constraint_sets)
        for (r1, r2) in verts:
            assert r1 <= bounds[frozenset({1})] + 1e-9
            assert r2 <= bounds[frozenset({2})] + 1e-9
            assert r1 + r2 <= bounds[frozenset({1, 2})] + 1e-9


class TestSicRates:
    def test_fig7_orders(self):
        assert np.allclose(sic_rates(FIG7, (1, 2)), (0.3828, 1.6610), atol=5e-5)
        assert np.allclose(sic_rates(FIG7, (2, 1)), (1.5000, 0.5437), atol=5e-5)

    def test_sum_equals_capacity(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            L = int(rng.integers(2, 5))
            ch = ChannelInstance(H=rng.normal(size=(2, L)),
                                 P=rng.uniform(0.5, 8.0, size=L))
            order = tuple(rng.permutation(L) + 1)
            assert sum(sic_rates(ch, order)) == pytest.approx(sum_capacity(ch),
                                                              abs=1e-9)


class TestMembership:
    def test_zero_rates_member(self):
        res = membership(FIG7, np.eye(2, dtype=int), [0.0, 0.0])
        assert res.status == "member"

    def _extra_successive_point(self):
        """Exact value of the quoted (1.0850, 0.9588) sum-capacity point."""
        s1 = sigma_succ_opt(FIG7, [1, 1], np.zeros((0, 2))).variance
        s2 = sigma_succ_opt(FIG7, [1, 2], [[1, 1]]).variance
        return [0.5 * math.log2(7.0 / s2), 0.5 * math.log2(4.0 / s1)]

    def test_fig7_successive_point(self):
        point = self._extra_successive_point()
        assert np.allclose(point, [1.0850, 0.9588], atol=5e-5)
        res = membership(FIG7, np.eye(2, dtype=int), point,
                         mode="successive", search_bound=2)
        assert res.status == "member"
        # the witness's own box must cover the point
        box = succ_region(FIG7, res.witness_Atilde, res.witness_mapping).boxes[0]
        assert box.contains(point)

    def test_above_capacity_rejected(self):
        res = membership(FIG7, np.eye(2, dtype=int), [1.5, 1.5], mode="successive",
                         search_bound=2)
        assert res.status == "not_member"

    def test_monotone(self):
        base = self._extra_successive_point()
        for scale in (0.9, 0.5, 0.1):
            res = membership(FIG7, np.eye(2, dtype=int),
                             [scale * r for r in base], mode="successive",
                             search_bound=2)
            assert res.status == "member"

    def test_inconclusive_when_no_bounded_witness_exists(self):
        # the cancellation-order point (0.9940, 0.9588) is below capacity but
        # no single parallel box covers it, so the search cannot conclude
        res = membership(FIG7, np.eye(2, dtype=int), [0.9940, 0.9588],
                         mode="parallel", search_bound=2)
        assert res.status == "inconclusive"


class TestRegion2D:
    def test_intersection_of_identical_boxes(self):
        spec = RateRegionSpec(L=2, boxes=[Box(caps=(1.0, 2.0))])
        verts = region_2d([spec, spec], "intersect")
        assert verts == [(0.0, 2.0), (1.0, 2.0), (1.0, 0.0)]

    def test_union_staircase(self):
        spec = RateRegionSpec(L=2, boxes=[Box(caps=(1.0, 2.0)), Box(caps=(2.0, 1.0))])
        verts = region_2d([spec], "intersect")
        assert verts == [(0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]

    def test_hull_of_two_corner_points(self):
        spec = RateRegionSpec(L=2, boxes=[Box(caps=(0.3828, 1.6610)),
                                          Box(caps=(1.5, 0.5437))])
        verts = region_2d([spec], "hull")
        assert verts[0] == (0.0, 1.6610)
        assert (0.3828, 1.6610) in verts
        assert (1.5, 0.5437) in verts
        assert verts[-1] == (1.5, 0.0)
        assert len(verts) == 4

    def test_fig8_capacity_intersection(self):
        ch1 = ChannelInstance(H=[[3.3, 2.1]], P=[4.0, 3.0])
        ch2 = ChannelInstance(H=[[2.4, 4.2]], P=[4.0, 3.0])
        verts = region_2d([mac_region(ch1), mac_region(ch2)], "intersect")
        assert any(abs(x - 1.0109) < 5e-4 and abs(y - 1.9154) < 5e-4
                   for x, y in verts)
        assert any(abs(x - 2.2937) < 5e-4 and abs(y - 0.6327) < 5e-4
                   for x, y in verts)
        # receiver 2's own boundary carries the quoted corner (2.2937, 0.8393)
        rx2 = region_2d([mac_region(ch2)], "intersect")
        assert any(abs(x - 2.2937) < 5e-4 and abs(y - 0.8393) < 5e-4
                   for x, y in rx2)

    def test_empty_intersection(self):
        a = RateRegionSpec(L=2, boxes=[Box(caps=(0.0, 0.0))])
        verts = region_2d([a], "intersect")
        assert verts == [(0.0, 0.0)]

    def test_requires_two_users(self):
        with pytest.raises(ValueError):
            region_2d([RateRegionSpec(L=3, boxes=[Box(caps=(1, 1, 1))])])


class TestExports:
    def test_boundary_csv_format(self):
        text = boundary_to_csv([(0.0, 1.5), (1.234567891, 0.0)])
        assert text == "R1,R2\n0.000000,1.500000\n1.234568,0.000000\n"

    def test_spec_json_roundtrip_fields(self):
        import json

        spec = para_region(FIG7, [[1, 0]])
        doc = json.loads(spec_to_json(spec))
        assert doc["L"] == 2
        assert doc["boxes"][0]["caps"][1] == "unbounded"
        mac = json.loads(spec_to_json(mac_region(FIG7)))
        assert {tuple(c["users"]) for c in mac["constraint_sets"]} == {
            (1,), (2,), (1, 2)}
