import math

import numpy as np
import pytest
import scipy.stats as st

from invclt import _kernels, rng as rngmod
from invclt.bounds import gap_bound
from invclt.coupling import (
    alpha_compose,
    classify,
    cn,
    estimate_gap,
    exact_gap,
    exact_pi_dagger_marginal,
    exact_wstar_cdf,
    exact_zero_bias_moments,
    exchangeability_counts,
    exhaustive_sweep,
    index_image_law,
    index_set,
    pair_statistics,
    pi_dagger,
    sample_quadruple,
    sample_quadruples_rejection,
    square_bias_table,
    stein_pair_draw,
    zero_bias_draw,
    zero_bias_gap_samples,
)
from invclt.errors import CapExceeded, EqualIndices, InputError
from invclt.involutions import Involution, enumerate_involutions, y_value

from conftest import assert_involution, rand_centered


class TestAlphaCompose:
    def test_documented_example(self):
        pi = Involution.from_cycles(4, [(1, 2), (3, 4)])
        out = alpha_compose(pi, 0, 2)  # 1-based (1, 3)
        assert out.to_list_1based() == [3, 4, 1, 2]  # (13)(24)

    def test_existing_cycle_is_noop(self):
        pi = Involution.from_cycles(4, [(1, 2), (3, 4)])
        out = alpha_compose(pi, 0, 1)
        assert np.array_equal(out.images, pi.images)

    def test_equal_indices(self):
        pi = Involution.from_cycles(4, [(1, 2), (3, 4)])
        with pytest.raises(EqualIndices):
            alpha_compose(pi, 1, 1)

    def test_plants_cycles_and_preserves_rest(self):
        gen = rngmod.derive_stream(1, 10)
        for _ in range(50):
            n = 10
            from invclt.involutions import sample_involution

            pi = sample_involution(n, gen)
            i, j = 2, 7
            out = alpha_compose(pi, i, j)
            assert_involution(out.images)
            assert out.images[i] == j
            pi_i, pi_j = pi.images[i], pi.images[j]
            assert out.images[pi_i] == pi_j
            untouched = [
                x for x in range(n) if x not in (i, j, pi_i, pi_j)
            ]
            assert np.array_equal(out.images[untouched], pi.images[untouched])


class TestSteinPair:
    def test_difference_formula_definitional(self, gen):
        D = rand_centered(8, seed=21)
        d = D.entries
        for _ in range(100):
            s = stein_pair_draw(D, gen)
            pi_i, pi_j = s.pi.images[s.i], s.pi.images[s.j]
            formula = 2.0 * (d[s.i, pi_i] + d[s.j, pi_j] - (d[s.i, s.j] + d[pi_i, pi_j]))
            assert s.diff == formula  # exact by construction
            # and consistent with the direct sum over the rewired involution
            assert abs(s.w_prime - y_value(D, s.pi_prime)) <= 1e-12
            assert s.i != s.j
            assert_involution(s.pi_prime.images)

    def test_pair_indices_cover_all_ordered_pairs(self, gen):
        D = rand_centered(6, seed=22)
        seen = set()
        for _ in range(2000):
            s = stein_pair_draw(D, gen)
            seen.add((s.i, s.j))
        assert len(seen) == 30

    @pytest.mark.parametrize("n", [6, 8])
    def test_linearity_and_second_moment(self, n):
        D = rand_centered(n, seed=23 + n)
        lin_err, m2 = pair_statistics(D)
        assert lin_err <= 1e-12
        assert abs(m2 - 8.0 / n) <= 1e-12

    def test_exchangeability_exact_counts(self):
        D = rand_centered(6, seed=25)
        assert exchangeability_counts(D) == 0


class TestSquareBiasTable:
    def test_c6(self):
        assert cn(6) == pytest.approx(1.0 / 150.0, rel=1e-15)

    def test_repeated_index_weight_zero(self):
        D = rand_centered(6, seed=26)
        table = square_bias_table(D)
        assert table.weight(0, 0, 1, 2) == 0.0
        assert table.weight(3, 1, 3, 2) == 0.0

    @pytest.mark.parametrize("n", [6, 8, 10, 12])
    def test_normalization(self, n):
        for rep in range(3):
            D = rand_centered(n, seed=1000 + 10 * n + rep)
            assert abs(square_bias_table(D).raw_total - 1.0) <= 1e-10

    def test_swap_symmetries_exact(self):
        D = rand_centered(8, seed=27)
        table = square_bias_table(D)
        quads = [(0, 1, 2, 3), (4, 2, 7, 5), (1, 6, 0, 3)]
        for i, j, k, l in quads:
            w = table.weight(i, j, k, l)
            assert table.weight(i, k, j, l) == w
            assert table.weight(j, i, l, k) == w

    def test_support_probs_sum_to_one(self):
        D = rand_centered(8, seed=28)
        _, probs = square_bias_table(D).support()
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


class TestQuadrupleSampling:
    def test_deterministic(self):
        D = rand_centered(8, seed=29)
        table = square_bias_table(D)
        g1 = rngmod.derive_stream(3, 3)
        g2 = rngmod.derive_stream(3, 3)
        assert sample_quadruple(table, g1) == sample_quadruple(table, g2)

    def test_table_frequencies_n6(self):
        D = rand_centered(6, seed=30)
        table = square_bias_table(D)
        quads, probs = table.support()
        m = 1_000_000
        gen = rngmod.derive_stream(4, 4)
        draws = table.sample(gen.random(m))
        codes = ((draws[:, 0] * 6 + draws[:, 1]) * 6 + draws[:, 2]) * 6 + draws[:, 3]
        ref = ((quads[:, 0] * 6 + quads[:, 1]) * 6 + quads[:, 2]) * 6 + quads[:, 3]
        counts = np.bincount(np.searchsorted(ref, codes), minlength=len(ref))
        sigma = np.sqrt(m * probs * (1 - probs))
        assert np.all(np.abs(counts - m * probs) <= 4.0 * sigma + 1.0)

    def test_rejection_matches_table_n40(self):
        # the table is exact ground truth; bin the rejection draws and
        # compare with a one-sample chi-square at the 0.999 level
        D = rand_centered(40, seed=31)
        table = square_bias_table(D)
        quads, probs = table.support()
        bins = 128
        ref_codes = (
            ((quads[:, 0] * 40 + quads[:, 1]) * 40 + quads[:, 2]) * 40 + quads[:, 3]
        ) % bins
        bin_probs = np.bincount(ref_codes, weights=probs, minlength=bins)
        m = 200_000
        gen = rngmod.derive_stream(5, 5)
        draws = sample_quadruples_rejection(D, m, gen)
        codes = (
            ((draws[:, 0] * 40 + draws[:, 1]) * 40 + draws[:, 2]) * 40 + draws[:, 3]
        ) % bins
        counts = np.bincount(codes, minlength=bins)
        expected = m * bin_probs
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < st.chi2.ppf(0.999, bins - 1)

    def test_rejection_only_support(self):
        D = rand_centered(10, seed=32)
        gen = rngmod.derive_stream(6, 6)
        draws = sample_quadruples_rejection(D, 500, gen)
        assert np.all(
            np.array([len({*q}) for q in draws.tolist()]) == 4
        )


class TestClassifyAndDagger:
    def test_case7(self):
        pi = Involution.from_cycles(6, [(1, 2), (3, 4), (5, 6)])
        r1, r2, case = classify(pi, (0, 2, 1, 3))  # pi(1)=2, pi(3)=4 in 1-based
        assert (r1, r2, case) == (2, 0, 7)
        dag, case2 = pi_dagger(pi, (0, 2, 1, 3))
        assert case2 == 7
        assert np.array_equal(dag.images, pi.images)

    def test_case1_documented_example(self):
        pi = Involution.from_cycles(6, [(1, 2), (3, 4), (5, 6)])
        quad = (0, 2, 1, 4)  # 1-based (1, 3, 2, 5)
        r1, r2, case = classify(pi, quad)
        assert (r1, r2, case) == (1, 0, 1)
        dag, _ = pi_dagger(pi, quad)
        assert dag.to_list_1based() == [2, 1, 5, 6, 3, 4]  # cycles (12)(35)(46)

    def test_case10_all_distinct(self):
        pi = Involution.from_cycles(8, [(1, 2), (3, 4), (5, 6), (7, 8)])
        quad = (0, 2, 4, 6)  # images 2,4,6,8 all off the quad
        r1, r2, case = classify(pi, quad)
        assert (r1, r2, case) == (0, 0, 10)
        dag, _ = pi_dagger(pi, quad)
        assert dag.images[0] == 4 and dag.images[2] == 6

    def test_repeated_quad_rejected(self):
        pi = Involution.from_cycles(6, [(1, 2), (3, 4), (5, 6)])
        with pytest.raises(InputError):
            classify(pi, (0, 0, 1, 2))

    def test_random_closure(self, gen):
        from invclt.involutions import sample_involution

        n = 12
        for _ in range(200):
            pi = sample_involution(n, gen)
            quad = []
            while len(quad) < 4:
                c = int(gen.integers(0, n))
                if c not in quad:
                    quad.append(c)
            dag, case = pi_dagger(pi, quad)
            assert_involution(dag.images)
            assert dag.images[quad[0]] == quad[2]
            assert dag.images[quad[1]] == quad[3]
            assert 1 <= case <= 10

    def test_case_terms_kernel_agrees_with_object_route(self, gen):
        from invclt.involutions import sample_involution

        n = 10
        D = rand_centered(n, seed=33)
        d = D.entries
        images = []
        quads = []
        for _ in range(300):
            pi = sample_involution(n, gen)
            quad = []
            while len(quad) < 4:
                c = int(gen.integers(0, n))
                if c not in quad:
                    quad.append(c)
            images.append(pi.images)
            quads.append(quad)
        images = np.array(images)
        quads = np.array(quads)
        case_k, t_k, tdag_k, delta_k = _kernels.case_terms(d, images, quads)
        case_f, t_f, tdag_f, delta_f = _kernels.case_terms_fallback(d, images, quads)
        assert np.array_equal(case_k, case_f)
        np.testing.assert_allclose(t_k, t_f, rtol=1e-14, atol=1e-15)
        for r in range(images.shape[0]):
            pi = Involution(n=n, images=images[r])
            quad = tuple(quads[r].tolist())
            _, _, case = classify(pi, quad)
            assert case == case_k[r]
            dag, _ = pi_dagger(pi, quad)
            inside = np.fromiter(sorted(index_set(pi, quad)), dtype=np.int64)
            t_obj = float(d[inside, pi.images[inside]].sum())
            tdag_obj = float(d[inside, dag.images[inside]].sum())
            assert abs(t_obj - t_k[r]) <= 1e-12
            assert abs(tdag_obj - tdag_k[r]) <= 1e-12
            i, j, k, l = quad
            delta = 2.0 * (d[i, k] + d[j, l] - (d[i, j] + d[k, l]))
            assert abs(delta - delta_k[r]) <= 1e-15


class TestZeroBiasDraw:
    def test_draw_invariants(self, gen):
        D = rand_centered(10, seed=34)
        table = square_bias_table(D)
        d = D.entries
        for _ in range(300):
            zb = zero_bias_draw(D, gen, table=table)
            assert zb.w_star == zb.u * zb.w_dagger + (1.0 - zb.u) * zb.w_ddagger
            assert zb.w == zb.s + zb.t
            assert zb.w_dagger == zb.s + zb.t_dagger
            assert zb.w_ddagger == zb.s + zb.t_ddagger
            i, j, k, l = zb.quad
            delta = 2.0 * (d[i, k] + d[j, l] - (d[i, j] + d[k, l]))
            assert delta != 0.0
            assert abs((zb.w_dagger - zb.w_ddagger) - delta) <= 1e-12
            gap = zb.t - (zb.u * zb.t_dagger + (1.0 - zb.u) * zb.t_ddagger)
            assert abs((zb.w - zb.w_star) - gap) <= 1e-12
            assert (zb.r1, zb.r2) not in ((2, 1), (1, 2))
            assert zb.pi_dagger.images[i] == k and zb.pi_dagger.images[j] == l
            assert zb.pi_ddagger.images[i] == j and zb.pi_ddagger.images[k] == l
            # pi, dagger and ddagger agree off the touched set
            outside = np.setdiff1d(np.arange(10), np.fromiter(zb.index_set, dtype=np.int64))
            assert np.array_equal(zb.pi.images[outside], zb.pi_dagger.images[outside])
            assert np.array_equal(zb.pi.images[outside], zb.pi_ddagger.images[outside])

    def test_minimum_dimension(self, gen):
        D = rand_centered(6, seed=35)
        zb = zero_bias_draw(D, gen, table=square_bias_table(D))
        assert zb.case_id in range(1, 11)
        with pytest.raises(InputError):
            zero_bias_draw(rand_centered(4, seed=35), gen)

    def test_json_dump(self, gen):
        D = rand_centered(8, seed=36)
        zb = zero_bias_draw(D, gen, table=square_bias_table(D))
        obj = zb.to_json()
        assert set(obj) >= {
            "pi",
            "quad",
            "case_id",
            "u",
            "w",
            "w_star",
            "s",
            "t",
            "index_set",
        }
        assert sorted(obj["pi"]) == list(range(1, 9))


class TestIndexImageLaw:
    def test_tables_sum_to_one(self):
        law = index_image_law(rand_centered(6, seed=47))
        assert abs(law.p2.sum() - 1.0) <= 1e-10
        assert abs(law.p3.sum() - 1.0) <= 1e-10

    def test_structural_zeros(self):
        law = index_image_law(rand_centered(8, seed=48))
        # s = i (a fixed point), t = j, s = t, and s = j without t = i are
        # impossible for an involution image pair
        assert np.all(law.p2[0, :, :, :, 0, :] == 0.0)  # s == i == 0
        assert np.all(law.p2[:, 1, :, :, :, 1] == 0.0)  # t == j == 1
        assert np.all(np.diagonal(law.p2, axis1=4, axis2=5) == 0.0)  # s == t
        assert np.all(law.p2[0, 1, 2, 3, 1, 2:] == 0.0)  # s == j, t != i
        # triple law: fixed points and broken pairings carry zero (r = i and
        # r = j are legal only through the cycles (i,l) and (j,l))
        assert np.all(law.p3[0, 1, 2, 3, :, :, 3] == 0.0)  # r == l
        assert np.all(law.p3[0, 1, 2, 3, 0, :, :] == 0.0)  # s == i
        assert np.all(law.p3[0, 1, 2, 3, :, 1, :] == 0.0)  # t == j
        s_not_l = [s for s in range(8) if s != 3]
        assert np.all(law.p3[0, 1, 2, 3, s_not_l, :, 0] == 0.0)  # r == i needs s == l
        t_not_l = [t for t in range(8) if t != 3]
        assert np.all(law.p3[0, 1, 2, 3, :, t_not_l, 1] == 0.0)  # r == j needs t == l
        assert law.p3[0, 1, 2, 3, 3, 4, 0].item() > 0.0  # cycle (i, l): s=l, r=i

    def test_matches_enumeration_counts_n6(self):
        # the dense tables must reproduce the exact enumeration frequencies
        D = rand_centered(6, seed=49)
        law = index_image_law(D)
        quads, probs = square_bias_table(D).support()
        n_inv = 15
        emp2 = np.zeros_like(law.p2)
        emp3 = np.zeros_like(law.p3)
        invs = list(enumerate_involutions(6))
        for (i, j, k, l), pq in zip(map(tuple, quads.tolist()), probs):
            for inv in invs:
                s, t, r = inv.images[i], inv.images[j], inv.images[l]
                emp2[i, j, k, l, s, t] += pq / n_inv
                emp3[i, j, k, l, s, t, r] += pq / n_inv
        np.testing.assert_allclose(emp2, law.p2, atol=1e-14)
        np.testing.assert_allclose(emp3, law.p3, atol=1e-14)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            index_image_law(rand_centered(10, seed=50))


class TestZeroBiasLaw:
    def test_construction_cdf_matches_definition(self):
        # the mixture-of-segments law produced by the construction must agree
        # with the CDF derived purely from E[W 1(W > t)] / Var(W)
        for n, seed in ((6, 54), (8, 55)):
            D = rand_centered(n, seed=seed)
            grid, f_con, f_def = exact_wstar_cdf(D)
            assert np.abs(f_con - f_def).max() < 1e-10
            assert f_con[0] == 0.0 and abs(f_con[-1] - 1.0) < 1e-12

    def test_sampled_wstar_matches_exact_law(self, gen):
        D = rand_centered(8, seed=56)
        grid, _, f_def = exact_wstar_cdf(D)
        table = square_bias_table(D)
        m = 20_000
        samples = np.empty(m)
        cases = np.zeros(11, dtype=np.int64)
        for idx in range(m):
            zb = zero_bias_draw(D, gen, table=table)
            samples[idx] = zb.w_star
            cases[zb.case_id] += 1
        # KS against the exact zero-bias CDF, DKW slack at confidence 0.999
        ecdf_vals = np.searchsorted(np.sort(samples), grid, side="right") / m
        ks = np.abs(ecdf_vals - f_def).max()
        slack = math.sqrt(math.log(2.0 / 0.001) / (2.0 * m))
        assert ks <= slack + 0.002
        # every rewiring case occurs at n = 8
        assert np.all(cases[1:] > 0)


class TestExactOracles:
    def test_marginal_uniformity_n6(self):
        rep = exact_pi_dagger_marginal(rand_centered(6, seed=37))
        assert rep["pass"] and rep["max_abs_error"] == 0.0
        assert rep["expected_count"] == 15

    def test_marginal_uniformity_n8(self):
        rep = exact_pi_dagger_marginal(rand_centered(8, seed=38))
        assert rep["pass"] and rep["max_abs_error"] == 0.0
        assert rep["expected_count"] == 35
        assert rep["p2_max_dev"] == 0

    def test_sweep_caps(self):
        with pytest.raises(CapExceeded):
            exhaustive_sweep(rand_centered(10, seed=39))

    def test_zero_bias_moments_identities(self):
        D = rand_centered(8, seed=40)
        rows = exact_zero_bias_moments(D, k_max=4)
        k1 = rows[0]
        assert k1[0] == 1 and abs(k1[1] - 1.0) <= 1e-10 and abs(k1[2] - 1.0) <= 1e-10
        assert abs(rows[1][1] - rows[1][2]) < 1e-9  # E[W^3] = 2 E[W*]
        assert abs(rows[3][1] - rows[3][2]) < 1e-8  # E[W^5] = 4 E[(W*)^3]

    def test_exact_gap_backends_agree(self):
        D = rand_centered(8, seed=41)
        g = exact_gap(D)
        quads, probs = square_bias_table(D).support()
        from invclt.involutions import involution_matrix

        g_np = _kernels.exact_gap_fallback(D.entries, involution_matrix(8), quads, probs)
        assert abs(g - g_np) <= 1e-12


class TestEstimateGap:
    def test_matches_exact_within_4_stderr(self):
        D = rand_centered(8, seed=42)
        exact = exact_gap(D)
        mean, se = estimate_gap(D, 100_000, master_seed=4242)
        assert abs(mean - exact) <= 4.0 * se

    def test_deterministic(self):
        D = rand_centered(10, seed=43)
        a = estimate_gap(D, 20_000, master_seed=77)
        b = estimate_gap(D, 20_000, master_seed=77)
        assert a == b

    def test_thread_invariance(self):
        D = rand_centered(10, seed=44)
        a = zero_bias_gap_samples(D, 30_000, master_seed=88, threads=1)
        b = zero_bias_gap_samples(D, 30_000, master_seed=88, threads=3)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("n", [10, 20, 50])
    def test_below_gap_bound(self, n):
        # the mean coupling gap honors the explicit rate bound
        D = rand_centered(n, seed=45 + n)
        mean, se = estimate_gap(D, 30_000, master_seed=99 + n)
        assert mean - 4.0 * se <= gap_bound(n, D.beta)

    def test_rejection_path_used_above_cap(self):
        D = rand_centered(50, seed=46)
        gaps = zero_bias_gap_samples(D, 2_000, master_seed=111)
        assert gaps.shape == (2_000,)
        assert np.all(gaps >= 0.0)

    def test_single_draw_rejection_and_full_object_above_cap(self, gen):
        D = rand_centered(50, seed=47)
        quad = sample_quadruple(D, gen)  # rejection path, no table
        assert len(set(quad)) == 4
        zb = zero_bias_draw(D, gen)  # table=None -> rejection
        assert zb.case_id in range(1, 11)
        assert zb.pi_dagger.images[zb.quad[0]] == zb.quad[2]
