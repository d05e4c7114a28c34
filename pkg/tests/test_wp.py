from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from smlab.chaos import ChaosVector, contract, product_expand, random_kernel, sample
from smlab.chaos.sampling import derivative_fields, evaluate_with_table
from smlab.errors import CapExceeded, InvalidParams, RankError
from smlab.parallel import block_rng
from smlab.wp import (
    LevyGrid,
    WPKernel,
    brownian_block_kernel,
    contract_ws,
    contraction_norm_ws,
    contraction_norms_wp,
    dx_norm_wp,
    exact_fourth_moment,
    flagged_pairs,
    jump_block_kernel,
    jump_term_estimate,
    product_expand_wp,
    sample_wp,
    sample_wp_many,
    sample_wp_with_gradient,
    shrinking_atom_kernel,
    single_atom_wp_kernel,
    standard_sequence,
    wp_fourth_moment_report,
    wp_table,
    wp_third_moment_check,
)

MIXED = LevyGrid((1.0, 0.5), ((1.5, 0.7), (-0.8, 1.2)), sigma=1.0)
BROWNIAN = LevyGrid((0.5, 1.0, 1.5), sigma=1.0)


def _rng(stream: int) -> np.random.Generator:
    return block_rng(11, (stream,), 0)


def _kernel(levy: LevyGrid, q: int, stream: int) -> WPKernel:
    return WPKernel.wrap(random_kernel(_rng(stream), levy.measure, q), levy)


def _within(values: np.ndarray, target: float, bands: float = 4.0) -> bool:
    se = np.std(values, ddof=1) / math.sqrt(len(values))
    return abs(float(np.mean(values)) - target) <= bands * se


def test_grid_cells_and_masses() -> None:
    assert MIXED.dimension == 6
    np.testing.assert_allclose(MIXED.measure.mu[:3], [1.0, 1.5 ** 2 * 0.7, 0.8 ** 2 * 1.2])
    np.testing.assert_array_equal(MIXED.jumps[:3], [0.0, 1.5, -0.8])
    assert LevyGrid.from_record(MIXED.to_record()) == MIXED
    with pytest.raises(InvalidParams):
        LevyGrid((1.0,), (), sigma=0.0)
    with pytest.raises(InvalidParams):
        LevyGrid((1.0,), ((0.0, 1.0),))


def test_contract_ws_without_sharing_is_gaussian_contraction() -> None:
    f, g = _kernel(MIXED, 2, 1), _kernel(MIXED, 3, 2)
    for r in range(3):
        np.testing.assert_allclose(contract_ws(f, g, r, 0, MIXED).coeffs, contract(f, g, r).coeffs, atol=1e-12)


def test_contract_ws_single_shared_jump() -> None:
    levy = LevyGrid((1.0,), ((2.0, 0.5),))
    f = WPKernel(np.array([3.0]), levy)
    g = WPKernel(np.array([-1.5]), levy)
    np.testing.assert_allclose(contract_ws(f, g, 0, 1, levy).coeffs, [2.0 * 3.0 * -1.5])


def test_contract_ws_matches_brute_force_loop() -> None:
    f, g = _kernel(MIXED, 3, 3), _kernel(MIXED, 2, 4)
    mu, x, n = MIXED.measure.mu, MIXED.jumps, MIXED.dimension
    expected = np.zeros((n, n))
    for z in range(n):
        for a in range(n):
            expected[z, a] = x[z] * sum(f.coeffs[a, z, c] * g.coeffs[c, z] * mu[c] for c in range(n))
    np.testing.assert_allclose(contract_ws(f, g, 1, 1, MIXED).coeffs, expected, atol=1e-12)


def test_contract_ws_shared_variables_vanish_on_brownian_cells() -> None:
    f = _kernel(BROWNIAN, 2, 5)
    assert contract_ws(f, f, 0, 1, BROWNIAN).norm() == 0.0
    assert contract_ws(f, f, 1, 1, BROWNIAN).norm() == 0.0


def test_contract_ws_rank_errors() -> None:
    f = _kernel(MIXED, 2, 6)
    with pytest.raises(RankError):
        contract_ws(f, f, 3, 0, MIXED)
    with pytest.raises(RankError):
        contract_ws(f, f, 1, 2, MIXED)


def test_product_of_single_atom_first_chaos() -> None:
    x, lam = 1.5, 0.8
    levy = LevyGrid((1.0,), ((x, lam),))
    f = WPKernel(np.array([1.0]), levy)
    expansion = product_expand_wp(1, f, 1, f, levy)
    # x²(N − λ)² = x²C₂(N; λ) + x²(N − λ) + x²λ
    assert expansion.kernels[2].coeffs[0, 0] == pytest.approx(1.0)
    assert expansion.kernels[1].coeffs[0] == pytest.approx(x)
    assert float(expansion.kernels[0].coeffs) == pytest.approx(x * x * lam)


def test_product_formula_reduces_to_wiener_on_brownian_grid() -> None:
    f, g = _kernel(BROWNIAN, 2, 7), _kernel(BROWNIAN, 2, 8)
    wp = product_expand_wp(2, f, 2, g, BROWNIAN)
    wiener = product_expand(2, f, 2, g)
    for order, kernel in wiener.kernels.items():
        np.testing.assert_allclose(wp.kernels[order].coeffs, kernel.coeffs, atol=1e-12)


@pytest.mark.parametrize("q,p", [(1, 1), (1, 2), (2, 2)])
def test_product_formula_holds_pathwise(q: int, p: int) -> None:
    f, g = _kernel(MIXED, q, 10 + q), _kernel(MIXED, p, 20 + p)
    table = wp_table(_rng(30 + q + p), 4000, MIXED, q + p)
    lhs = evaluate_with_table(ChaosVector.single(f), table) * evaluate_with_table(ChaosVector.single(g), table)
    rhs = evaluate_with_table(product_expand_wp(q, f, p, g, MIXED), table)
    scale = float(np.max(np.abs(lhs))) + 1.0
    np.testing.assert_allclose(rhs, lhs, rtol=0, atol=1e-9 * scale)


def test_empty_jump_grid_reproduces_wiener_samples() -> None:
    F = ChaosVector({1: _kernel(BROWNIAN, 1, 40), 2: _kernel(BROWNIAN, 2, 41)}, BROWNIAN.measure)
    np.testing.assert_array_equal(sample_wp(F, BROWNIAN, 5000, seed=3), sample(F, 5000, seed=3))


def test_brownian_first_chaos_is_standard_normal() -> None:
    levy = LevyGrid((1.0,), sigma=1.0)
    x = sample_wp(ChaosVector.single(WPKernel(np.array([1.0]), levy)), levy, 20_000, seed=4)
    assert stats.kstest(x, "norm").pvalue > 1e-3


def test_compensated_poisson_moments() -> None:
    lam = 2.0
    f = single_atom_wp_kernel(1, x=1.0, nu=lam)
    x = sample_wp(ChaosVector.single(f), f.levy, 200_000, seed=5)
    assert _within(x ** 2, 1.0)
    assert _within(x ** 4, 3.0 + 1.0 / lam)
    assert exact_fourth_moment(f) == pytest.approx(3.0 + 1.0 / lam)


def test_isometry_and_orthogonality_on_mixed_grid() -> None:
    f1, f2 = _kernel(MIXED, 1, 50), _kernel(MIXED, 2, 51)
    draws = sample_wp_many([ChaosVector.single(f1), ChaosVector.single(f2)], MIXED, 200_000, seed=6)
    assert _within(draws[:, 1] ** 2, 2.0 * f2.norm_sq())
    assert _within(draws[:, 0] * draws[:, 1], 0.0)


def test_thread_count_does_not_change_samples() -> None:
    F = ChaosVector.single(_kernel(MIXED, 2, 52))
    one = sample_wp(F, MIXED, 10_000, seed=7, threads=1)
    four = sample_wp(F, MIXED, 10_000, seed=7, threads=4)
    np.testing.assert_array_equal(one, four)


def test_caps() -> None:
    with pytest.raises(CapExceeded):
        wide = LevyGrid.uniform(65, sigma=1.0)
        sample_wp(ChaosVector.single(WPKernel(np.ones(65), wide)), wide, 10, seed=0)
    levy = LevyGrid((1.0,), ((1.0, 1.0),))
    with pytest.raises(CapExceeded):
        sample_wp(ChaosVector.single(WPKernel(np.ones((1,) * 5), levy)), levy, 10, seed=0)


def test_dx_norm_expansion_matches_sampled_gradient() -> None:
    f = _kernel(MIXED, 2, 60)
    F = ChaosVector.single(f)
    table = wp_table(_rng(61), 3000, MIXED, 2)
    fields = derivative_fields(F)
    grad = np.column_stack([evaluate_with_table(fields[c], table) for c in range(MIXED.dimension)])
    sampled = (grad ** 2) @ MIXED.measure.mu
    expanded = evaluate_with_table(dx_norm_wp(f, 2, MIXED), table)
    np.testing.assert_allclose(expanded, sampled, rtol=0, atol=1e-9 * (1.0 + float(np.max(sampled))))


def test_jump_term_is_zero_without_jumps() -> None:
    f = brownian_block_kernel(4)
    draws = sample_wp_with_gradient(ChaosVector.single(f), f.levy, 2000, seed=8)
    assert jump_term_estimate(f, draws)["value"] == 0.0


def test_jump_term_for_deterministic_derivative() -> None:
    x, nu, c = -1.5, 0.4, 0.7
    levy = LevyGrid((1.0,), ((x, nu),))
    f = WPKernel(np.array([c]), levy)
    draws = sample_wp_with_gradient(ChaosVector.single(f), levy, 2000, seed=9)
    expected = abs(x) * c ** 3 * levy.measure.mu[0]
    assert jump_term_estimate(f, draws)["value"] == pytest.approx(expected, rel=1e-12)


def test_jump_term_shrinks_with_atom_size() -> None:
    values = []
    for n in (4, 16, 64):
        f = shrinking_atom_kernel(n)
        draws = sample_wp_with_gradient(ChaosVector.single(f), f.levy, 2000, seed=10)
        values.append(jump_term_estimate(f, draws)["value"])
    # the term scales like n^{-1/2} along the ladder
    assert values[1] / values[0] == pytest.approx(0.5, rel=0.05)
    assert values[2] / values[1] == pytest.approx(0.5, rel=0.05)


def test_third_moment_is_the_jump_correction() -> None:
    out = wp_third_moment_check(single_atom_wp_kernel(1, x=1.0, nu=1.0), n_paths=200_000, seed=11)
    assert out["jump_term"] == pytest.approx(1.0)
    assert out["within_band"]
    assert out["gaussian_part_mc"] == pytest.approx(0.0, abs=5 * out["gaussian_part_se"])


def test_flagged_pairs() -> None:
    assert flagged_pairs(1) == [(0, 1)]
    assert sorted(flagged_pairs(2)) == [(0, 1), (0, 2), (1, 0)]


def test_exact_fourth_moment_of_brownian_blocks() -> None:
    for n in (2, 4, 8):
        assert exact_fourth_moment(brownian_block_kernel(n)) == pytest.approx(3.0 + 12.0 / n)


def test_jump_block_excess_and_gradient_variance_decrease() -> None:
    excess = [exact_fourth_moment(jump_block_kernel(n)) - 3.0 for n in (4, 8, 16)]
    assert excess[0] > excess[1] > excess[2] > 0.0
    var_dx = [dx_norm_wp(f, 2, f.levy).variance() for f in (jump_block_kernel(n) for n in (4, 8, 16))]
    assert var_dx[0] > var_dx[1] > var_dx[2]


def test_shrinking_atom_kernel_norms_and_fourth_moment() -> None:
    # per-cell excess kurtosis of a normalized second-chaos Charlier term with Poisson mean 16
    charlier_excess = 12.0 + 36.0 / 16.0 + 2.0 / 16.0 ** 2
    for n in (4, 16, 64):
        f = shrinking_atom_kernel(n)
        levy = f.levy
        assert f.order == 2
        assert levy.dimension == 5 * n
        assert len(levy.jump_atoms) == 4
        assert np.max(np.abs(levy.jumps)) == pytest.approx(1.0 / math.sqrt(n))
        np.testing.assert_allclose(levy.intensities[~levy.brownian_mask], 16.0)
        assert 2.0 * f.norm_sq() == pytest.approx(1.0)
        norms = contraction_norms_wp(f, levy)
        assert norms["r1s0"] == pytest.approx(0.5 / math.sqrt(5.0 * n))
        assert norms["r0s1"] == pytest.approx(1.0 / (20.0 * math.sqrt(n)))
        assert norms["r0s2"] == pytest.approx(1.0 / (80.0 * math.sqrt(n)))
        expected = 3.0 + (12.0 + 4.0 * charlier_excess) / (25.0 * n)
        assert exact_fourth_moment(f) == pytest.approx(expected, rel=1e-9)


def test_diagonal_fourth_moment_matches_product_expansion() -> None:
    f = WPKernel(np.diag(_rng(80).normal(size=MIXED.dimension)), MIXED)
    dense = product_expand_wp(2, f, 2, f, MIXED).second_moment()
    assert exact_fourth_moment(f) == pytest.approx(dense, rel=1e-10)


def test_contraction_norms_match_explicit_contractions() -> None:
    for q, stream in ((2, 81), (3, 82)):
        f = _kernel(MIXED, q, stream)
        for r, s in flagged_pairs(q):
            explicit = contract_ws(f, f, r, s, MIXED).norm()
            assert contraction_norm_ws(f, r, s, MIXED) == pytest.approx(explicit, rel=1e-10)
    with pytest.raises(RankError):
        contraction_norm_ws(_kernel(MIXED, 2, 83), 1, 2, MIXED)


def test_fourth_moment_report_on_shrinking_atoms() -> None:
    report = wp_fourth_moment_report(standard_sequence("shrinking_atom", [4, 16, 64]), n_paths=20_000, seed=12)
    rows, verdicts = report["rows"], report["verdicts"]
    assert [r["q"] for r in rows] == [2, 2, 2]
    assert [r["cells"] for r in rows] == [20, 80, 320]
    assert verdicts["normalized"]
    assert verdicts["fourth_moment_mc"]
    assert verdicts["flagged_norms_decreasing"]
    assert verdicts["excess_decreasing"]
    for name in ("flagged_r1s0", "flagged_r0s1", "flagged_r0s2"):
        values = [r[name] for r in rows]
        assert values[0] > values[1] > values[2] > 0.0
    last = rows[-1]
    assert abs(last["fourth_moment_mc"] - 3.0) <= 3.0 * last["fourth_moment_se"]
    assert verdicts["last_within_band"]
    assert last["dx_norm_fourth_mc"] == pytest.approx(4.0, rel=0.05)
    assert last["dx_norm_variance"] < 0.05


def test_fourth_moment_report_needs_second_chaos() -> None:
    with pytest.raises(InvalidParams):
        wp_fourth_moment_report([("first", single_atom_wp_kernel(1))], n_paths=1000)


def test_fourth_moment_report_single_atom_negative_control() -> None:
    report = wp_fourth_moment_report(standard_sequence("single_atom", [1, 2]), n_paths=100_000, seed=13)
    last = report["rows"][-1]
    assert last["fourth_moment"] > 10.0
    assert abs(last["fourth_moment_mc"] - 3.0) > 5.0 * last["fourth_moment_se"]
    assert not report["verdicts"]["flagged_norms_decreasing"]
    assert not report["verdicts"]["last_within_band"]


def test_kernel_record_round_trip() -> None:
    f = _kernel(MIXED, 2, 70)
    back = WPKernel.from_record(f.to_record())
    assert back.levy == MIXED
    np.testing.assert_allclose(back.coeffs, f.coeffs)
