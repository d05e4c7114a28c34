from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy import stats

from smlab.chaos import (
    ChaosCaps,
    ChaosVector,
    GridMeasure,
    SymmetricKernel,
    L_inverse,
    L_operator,
    block_kernel,
    chain_identity_gap,
    contract,
    contraction_norms,
    dx_norm_expansion,
    export_samples,
    fourth_cumulant,
    fourth_moment_report,
    inner_derivatives,
    malliavin_D,
    moment_via_formula,
    product_expand,
    random_kernel,
    sample,
    sample_many,
    second_chaos_spectrum,
    single_atom_kernel,
    symmetrize,
    unit_cell_kernel,
)
from smlab.errors import CapExceeded, NonCentered, OrderMismatch, RankError
from smlab.parallel import block_rng
from smlab.reports import load_arrays

GRID3 = GridMeasure((0.5, 1.0, 1.5))


def _rng(stream: int) -> np.random.Generator:
    return block_rng(7, (stream,), 0)


def _within(values: np.ndarray, target: float, bands: float = 4.0) -> bool:
    se = np.std(values, ddof=1) / math.sqrt(len(values))
    return abs(float(np.mean(values)) - target) <= bands * se


def test_symmetrize_two_permutations() -> None:
    grid = GridMeasure.uniform(2)
    raw = np.zeros((2, 2))
    raw[0, 1] = 1.0
    sym = symmetrize(raw, 2, grid)
    np.testing.assert_allclose(sym.coeffs, [[0.0, 0.5], [0.5, 0.0]])
    np.testing.assert_array_equal(symmetrize(sym, 2).coeffs, sym.coeffs)


def test_symmetrize_contracts_norm_and_is_idempotent() -> None:
    raw = _rng(1).normal(size=(3, 3, 3))
    once = symmetrize(raw, 3, GRID3)
    twice = symmetrize(once, 3)
    assert once.norm() <= SymmetricKernel(raw, GRID3, check=False).norm() + 1e-12
    np.testing.assert_allclose(twice.coeffs, once.coeffs, atol=1e-14)


def test_symmetrize_rejects_wrong_order() -> None:
    with pytest.raises(OrderMismatch):
        symmetrize(np.zeros((3, 3)), 3, GRID3)


def test_contract_extremes() -> None:
    grid = GridMeasure((0.5, 2.0))
    e = unit_cell_kernel(grid, 0, 1)
    assert float(contract(e, e, 1).coeffs) == pytest.approx(1.0)
    outer = contract(e, e, 0)
    np.testing.assert_allclose(outer.coeffs, np.multiply.outer(e.coeffs, e.coeffs))
    with pytest.raises(RankError):
        contract(e, e, 2)


def test_contract_matches_brute_force_sum() -> None:
    rng = _rng(2)
    f = random_kernel(rng, GRID3, 2)
    g = random_kernel(rng, GRID3, 2)
    got = contract(f, g, 1).coeffs
    mu = GRID3.mu
    expected = np.zeros((3, 3))
    for a, b, c in itertools.product(range(3), repeat=3):
        expected[a, b] += f.coeffs[a, c] * g.coeffs[c, b] * mu[c]
    np.testing.assert_allclose(got, expected, atol=1e-13)


def test_product_of_first_chaos_is_xi_squared() -> None:
    e = single_atom_kernel(1)
    prod = product_expand(1, e, 1, e)
    assert prod.orders == [0, 2]
    assert prod.mean == pytest.approx(1.0)
    np.testing.assert_allclose(prod.kernels[2].coeffs, [[1.0]])


def test_product_of_second_and_first_chaos() -> None:
    f = single_atom_kernel(2)
    e = single_atom_kernel(1)
    prod = product_expand(2, f, 1, e)
    assert prod.orders == [1, 3]
    np.testing.assert_allclose(prod.kernels[3].coeffs, np.ones((1, 1, 1)))
    np.testing.assert_allclose(prod.kernels[1].coeffs, [2.0])


@pytest.mark.parametrize("q,p", [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])
def test_product_formula_holds_pathwise(q: int, p: int) -> None:
    rng = _rng(10 + 3 * q + p)
    f = random_kernel(rng, GRID3, q)
    g = random_kernel(rng, GRID3, p)
    expansion = product_expand(q, f, p, g)
    draws = sample_many([ChaosVector.single(f), ChaosVector.single(g), expansion], 2000, seed=5)
    residual = draws[:, 0] * draws[:, 1] - draws[:, 2]
    scale = 1.0 + np.max(np.abs(draws[:, 2]))
    assert np.max(np.abs(residual)) < 1e-9 * scale


def test_first_chaos_samples_are_standard_normal() -> None:
    x = sample(ChaosVector.single(single_atom_kernel(1)), 100_000, seed=3)
    assert stats.kstest(x, "norm").pvalue > 1e-3


def test_second_chaos_single_atom_moments() -> None:
    x = sample(ChaosVector.single(single_atom_kernel(2)), 100_000, seed=4)
    assert _within(x, 0.0)
    assert _within(x ** 2, 2.0)
    assert np.min(x) >= -1.0 - 1e-12


@pytest.mark.parametrize("q", [1, 2, 3])
def test_isometry_for_random_kernels(q: int) -> None:
    rng = _rng(30 + q)
    kernels = [random_kernel(rng, GRID3, q, scale=0.5) for _ in range(10)]
    draws = sample_many([ChaosVector.single(k) for k in kernels], 40_000, seed=q)
    for col, k in enumerate(kernels):
        assert _within(draws[:, col] ** 2, math.factorial(q) * k.norm_sq())


def test_orthogonality_of_different_chaoses() -> None:
    rng = _rng(40)
    f1 = random_kernel(rng, GRID3, 1)
    f2 = random_kernel(rng, GRID3, 2)
    draws = sample_many([ChaosVector.single(f1), ChaosVector.single(f2)], 40_000, seed=9)
    assert _within(draws[:, 0] * draws[:, 1], 0.0)


def test_sampling_is_thread_independent() -> None:
    F = ChaosVector.single(block_kernel(8))
    n = 3 * 4096 + 5
    np.testing.assert_array_equal(sample(F, n, seed=11, threads=1), sample(F, n, seed=11, threads=4))


def test_caps_are_enforced() -> None:
    wide = GridMeasure.uniform(65)
    with pytest.raises(CapExceeded):
        sample(ChaosVector.single(unit_cell_kernel(wide, 0, 1)), 10, seed=0)
    with pytest.raises(CapExceeded):
        sample(ChaosVector.single(single_atom_kernel(3)), 10, seed=0, caps=ChaosCaps(max_order=2))


def test_derivative_of_first_and_second_chaos() -> None:
    f = random_kernel(_rng(50), GRID3, 1)
    fields = malliavin_D(ChaosVector.single(f))
    for cell in range(3):
        assert fields[cell].orders == [0]
        assert fields[cell].mean == pytest.approx(f.coeffs[cell])

    d = malliavin_D(ChaosVector.single(single_atom_kernel(2)))
    np.testing.assert_allclose(d[0].kernels[1].coeffs, [2.0])


@pytest.mark.parametrize("q", [2, 3])
def test_dx_norm_expansion_matches_product_formula(q: int) -> None:
    f = random_kernel(_rng(60 + q), GRID3, q)
    closed = dx_norm_expansion(f, q)
    brute = inner_derivatives(ChaosVector.single(f), ChaosVector.single(f))
    assert closed.orders == brute.orders
    for order in closed.orders:
        np.testing.assert_allclose(closed.kernels[order].coeffs, brute.kernels[order].coeffs, atol=1e-11)
    assert closed.mean == pytest.approx(q * math.factorial(q) * f.norm_sq())


def test_L_inverse_scales_and_inverts_L() -> None:
    rng = _rng(70)
    F = ChaosVector(
        {
            0: SymmetricKernel.constant(2.0, GRID3),
            1: random_kernel(rng, GRID3, 1),
            2: random_kernel(rng, GRID3, 2),
        },
        GRID3,
    )
    back = L_inverse(L_operator(F))
    assert back.orders == [1, 2]
    for q in (1, 2):
        np.testing.assert_allclose(back.kernels[q].coeffs, F.kernels[q].coeffs, atol=1e-14)
    single = L_inverse(ChaosVector.single(F.kernels[2]))
    np.testing.assert_allclose(single.kernels[2].coeffs, -0.5 * F.kernels[2].coeffs)
    with pytest.raises(NonCentered):
        L_inverse(F)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_chain_identity_for_single_chaos(q: int) -> None:
    F = ChaosVector.single(random_kernel(_rng(80 + q), GRID3, q))
    assert chain_identity_gap(F) < 1e-12


def test_moments_formula_on_chi_square() -> None:
    out = moment_via_formula(ChaosVector.single(single_atom_kernel(2)), 2, n_paths=200_000, seed=1)
    assert abs(out["lhs"] - 8.0) <= 4 * out["lhs_se"]
    assert abs(out["rhs"] - 8.0) <= 4 * out["rhs_se"]
    assert abs(out["diff"]) <= 4 * out["diff_se"]


def test_moments_formula_on_gaussian() -> None:
    out = moment_via_formula(ChaosVector.single(single_atom_kernel(1)), 3, n_paths=100_000, seed=2)
    assert abs(out["lhs"] - 3.0) <= 4 * out["lhs_se"]
    assert out["rhs_se"] == pytest.approx(3.0 * np.sqrt(2.0 / 100_000), rel=0.05)
    assert abs(out["diff"]) <= 4 * out["diff_se"]


def test_moments_formula_random_second_chaos() -> None:
    F = ChaosVector.single(random_kernel(_rng(90), GRID3, 2, scale=0.5))
    out = moment_via_formula(F, 3, n_paths=100_000, seed=3)
    assert abs(out["diff"]) <= 4 * out["diff_se"]


def test_contraction_norms() -> None:
    assert contraction_norms(single_atom_kernel(2)) == {1: pytest.approx(1.0)}
    for n in (4, 16, 64):
        assert contraction_norms(block_kernel(n))[1] == pytest.approx(0.5 / math.sqrt(n))
    assert contraction_norms(single_atom_kernel(1)) == {}


def test_contraction_norms_high_order_stay_small() -> None:
    grid = GridMeasure((1.0 / 12,) * 12)
    atom = unit_cell_kernel(grid, 3, 6)
    assert contraction_norms(atom) == {r: pytest.approx(1.0) for r in range(1, 6)}

    f = random_kernel(_rng(21), grid, 6)
    norms = contraction_norms(f)
    for r in range(1, 6):
        assert norms[r] == pytest.approx(norms[6 - r], rel=1e-10)
        assert norms[r] <= f.norm_sq() * (1 + 1e-10)


def test_contraction_norms_match_explicit_contraction() -> None:
    f = random_kernel(_rng(22), GRID3, 3)
    for r, value in contraction_norms(f).items():
        assert value == pytest.approx(math.sqrt(contract(f, f, r).norm_sq()), rel=1e-10)


def test_fourth_cumulant_closed_forms() -> None:
    assert fourth_cumulant(single_atom_kernel(2)) == pytest.approx(48.0)
    assert fourth_cumulant(single_atom_kernel(3)) == pytest.approx(3240.0)
    assert fourth_cumulant(block_kernel(16)) == pytest.approx(12.0 / 16)
    f = random_kernel(_rng(100), GRID3, 2)
    lam = second_chaos_spectrum(f)
    assert fourth_cumulant(f) == pytest.approx(48.0 * np.sum(lam ** 4), rel=1e-10)
    assert 2.0 * np.sum(lam ** 2) == pytest.approx(2.0 * f.norm_sq(), rel=1e-10)


def test_fourth_moment_report_block_sequence() -> None:
    sequence = [(f"n={n}", block_kernel(n)) for n in (4, 16, 64)]
    report = fourth_moment_report(sequence, sigma2=1.0, n_paths=40_000, seed=4)
    rows = report["rows"]
    assert report["verdicts"]["normalized"]
    assert report["verdicts"]["variance_cap"]
    assert report["verdicts"]["decreasing_excess"]
    for row, n in zip(rows, (4, 16, 64)):
        assert row["fourth_moment"] == pytest.approx(3.0 + 12.0 / n)
        assert row["var_dx_over_q"] == pytest.approx(2.0 / n)
        assert row["variance_cap"] == pytest.approx(2.0 / n)
    assert rows[-1]["max_contraction_norm"] < rows[0]["max_contraction_norm"]


def test_fourth_moment_report_single_atom_does_not_converge() -> None:
    report = fourth_moment_report([("a", single_atom_kernel(2)), ("b", single_atom_kernel(2))], n_paths=20_000)
    for row in report["rows"]:
        assert row["fourth_moment"] == pytest.approx(60.0)
        assert row["contraction_norm_1"] == pytest.approx(1.0)
    assert not report["verdicts"]["decreasing_excess"]


def test_kernel_records_and_sample_export(tmp_path) -> None:
    f = random_kernel(_rng(110), GRID3, 3)
    back = SymmetricKernel.from_records(f.to_records(), GRID3, 3)
    np.testing.assert_allclose(back.coeffs, f.coeffs)

    x = sample(ChaosVector.single(f), 100, seed=1)
    manifest = export_samples(str(tmp_path), "chaos", {"x": x}, seed=1, n_paths=100)
    np.testing.assert_array_equal(load_arrays(manifest)["x"], x)
