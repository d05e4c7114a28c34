from __future__ import annotations

import math

import numpy as np
import pytest

from smlab.chaos import ChaosVector, GridMeasure, block_kernel, diagonal_kernel, single_atom_kernel
from smlab.errors import MomentUndefined, TooFewSamples
from smlab.laws import PearsonParams, catalog
from smlab.malliavin import from_chaos, gamma_draw, linear
from smlab.npbound import (
    characterize,
    chaos_gstar_moment_check,
    gamma_chaos_check,
    moment_bound,
    np_estimate,
    pearson_chaos_check,
    pearson_convergence_check,
    polynomial_gstar_check,
    trend_verdict,
    wasserstein1_empirical,
    wasserstein1_floor,
    wasserstein1_two_sample,
    z_side_moments,
)
from smlab.chaos.sampling import sample_with_gradient
from smlab.parallel import block_rng

CHI2 = PearsonParams(0.0, 2.0, 2.0)


def _rng(stream: int) -> np.random.Generator:
    return block_rng(17, (stream,), 0)


def _chi2_gamma(n_paths: int, seed: int):
    return gamma_draw(from_chaos(ChaosVector.single(single_atom_kernel(2))), n_paths, seed)


def test_w1_point_mass_against_normal() -> None:
    assert wasserstein1_empirical(np.zeros(1000), catalog("normal")) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-9)


def test_w1_of_own_samples_is_small() -> None:
    law = catalog("normal")
    x = _rng(1).standard_normal(100_000)
    assert wasserstein1_empirical(x, law) < 5 * wasserstein1_floor(law, len(x))


def test_w1_matches_dense_grid_integral() -> None:
    law = catalog("uniform", {"u": 1.0})
    x = np.sort(_rng(2).uniform(-1.0, 1.0, 1000))
    grid = np.linspace(-1.0, 1.0, 400_001)
    ecdf = np.searchsorted(x, grid, side="right") / len(x)
    diff = np.abs(ecdf - law.cdf(grid))
    dense = float(np.sum(0.5 * (diff[1:] + diff[:-1]) * np.diff(grid)))
    assert wasserstein1_empirical(x, law) == pytest.approx(dense, abs=2e-5)


def test_w1_needs_enough_samples_and_two_sample_zero() -> None:
    with pytest.raises(TooFewSamples):
        wasserstein1_empirical(np.zeros(999), catalog("normal"))
    x = _rng(3).standard_normal(500)
    assert wasserstein1_two_sample(x, x) == 0.0


def test_np_l1_is_zero_for_chi_square_chaos() -> None:
    report = np_estimate(catalog("chi2_centered", {"v": 1.0}), _chi2_gamma(20_000, 1), k=1.0)
    assert report.np_l1 < 1e-12
    assert report.k_source == "caller"
    assert report.sandwich_ok
    assert report.jensen_ok
    assert report.moment_bound is not None


def test_np_l1_is_zero_for_first_chaos_against_normal() -> None:
    report = np_estimate(catalog("normal"), gamma_draw(linear([1.0]), 20_000, 2))
    assert report.np_l1 < 1e-12
    assert report.k_used == pytest.approx(1.0)
    assert report.k_source == "normal_closed_form"
    assert report.sandwich_ok


def test_two_atom_second_chaos_against_normal() -> None:
    kernel = diagonal_kernel(GridMeasure.uniform(2), [0.5, 0.5])
    gamma = gamma_draw(from_chaos(ChaosVector.single(kernel)), 50_000, 3)
    report = np_estimate(catalog("normal"), gamma)
    # ‖DX‖²/2 = (ξ₁² + ξ₂²)/2 is Exp(1), so E|1 − Y| = 2/e
    assert abs(report.np_l1 - 2.0 / math.e) <= 4 * report.np_l1_se
    assert report.sandwich_ok
    assert report.jensen_ok


def test_block_sequence_sandwich() -> None:
    gamma = gamma_draw(from_chaos(ChaosVector.single(block_kernel(16))), 40_000, 4)
    report = np_estimate(catalog("normal"), gamma)
    assert report.np_l1 > 0.0
    assert report.sandwich_ok
    assert report.to_dict()["bound"] == pytest.approx(report.np_l1)


def test_moment_bound_vanishes_for_matched_moments() -> None:
    z = _rng(4).standard_normal(10_000)
    x = z / math.sqrt(np.mean(z ** 2))
    out = moment_bound(catalog("normal"), x, np.ones_like(x))
    assert out["bound"] == pytest.approx(0.0, abs=1e-6)


def test_moment_bound_normal_collapses_to_var_g() -> None:
    rng = _rng(5)
    z = rng.standard_normal(10_000)
    x = z / math.sqrt(np.mean(z ** 2))
    w = rng.standard_normal(10_000)
    g = 1.0 + 0.3 * (w - np.mean(w))
    out = moment_bound(catalog("normal"), x, g, k=1.0)
    assert out["terms"]["gstar_sq"] == pytest.approx(0.0, abs=1e-12)
    assert out["bound"] == pytest.approx(math.sqrt(np.var(g)), rel=1e-6)


def test_z_side_moments_for_chi_square_all_twelve() -> None:
    z = z_side_moments(catalog("chi2_centered", {"v": 1.0}))
    assert z["gstar_sq"] == pytest.approx(12.0)
    assert z["x_Gstar"] == pytest.approx(12.0)


def test_characterization_accepts_exact_law_and_rejects_wrong_one() -> None:
    gamma = _chi2_gamma(200_000, 6)
    law = catalog("chi2_centered", {"v": 1.0})
    se = lambda v: np.std(v, ddof=1) / math.sqrt(len(v))  # noqa: E731
    tol = {
        "cond1": 5 * se(law.gstar(gamma.x) ** 2),
        "cond2": 5 * se(gamma.x * law.Gstar(gamma.x)),
        "cond3": 5 * se(gamma.y ** 2),
    }
    assert characterize(law, gamma.x, gamma.y, tol).verdict

    normal = gamma_draw(linear([1.0]), 20_000, 7)
    assert not characterize(law, normal.x, normal.y).verdict


def test_trend_verdict() -> None:
    ns = [4, 16, 64, 256]
    assert trend_verdict(ns, [1 / n for n in ns])["converging"]
    assert not trend_verdict(ns, [1.0, 1.0, 1.0, 1.0])["converging"]
    assert trend_verdict(ns, [0.5, 0.0, 0.0, 0.0])["converging"]


def test_pearson_convergence_normal_and_gamma_cases() -> None:
    rows = [{"n": n, "m2": 1.0, "m2_se": 0.01, "var_g": 2.0 / n, "var_g_se": 1e-3} for n in (4, 16, 64)]
    normal = pearson_convergence_check(PearsonParams(0.0, 0.0, 1.0), rows)
    assert normal["case"] == "normal"
    assert all(normal["verdicts"].values())

    rows = [
        {"n": n, "m2": 2.0, "m2_se": 0.02, "m3": 8.0 - 4.0 / n, "m3_se": 0.05, "var_g": 8.0 - 2.0 / n, "var_g_se": 0.05}
        for n in (4, 16, 64)
    ]
    gamma = pearson_convergence_check(CHI2, rows)
    assert gamma["case"] == "gamma"
    assert gamma["targets"]["m3"] == pytest.approx(8.0)
    assert gamma["targets"]["var_g"] == pytest.approx(8.0)
    assert all(gamma["verdicts"].values())


def test_pearson_convergence_flags_wrong_variance() -> None:
    rows = [{"n": n, "m2": 1.5, "m2_se": 0.01, "var_g": 1.0, "var_g_se": 0.01} for n in (4, 16, 64)]
    out = pearson_convergence_check(PearsonParams(0.0, 0.0, 1.0), rows)
    assert not out["verdicts"]["variance"]
    assert not out["verdicts"]["var_g"]


def test_polynomial_gstar_orders() -> None:
    assert polynomial_gstar_check([1.0], {1: {"value": 0.0}, 2: {"value": 1.0}})["orders"] == 2
    gamma = polynomial_gstar_check([2.0, 2.0], {1: {"value": 0.0}, 2: {"value": 2.0}, 3: {"value": 8.0}})
    assert gamma["orders"] == 3 and gamma["verdict"]
    moments = {k: {"value": v, "stderr": 0.1} for k, v in {1: 0.0, 2: 2.0, 3: 8.0, 4: 60.0}.items()}
    assert polynomial_gstar_check([2.0, 2.0, 0.0], moments)["orders"] == 3
    assert polynomial_gstar_check([1.0, 0.0, 0.25], {k: {"value": 0.0, "stderr": 1e3} for k in range(1, 5)})["orders"] == 4
    with pytest.raises(MomentUndefined):
        polynomial_gstar_check([2.0, 2.0], {1: {"value": 0.0}})
    with pytest.raises(MomentUndefined):
        polynomial_gstar_check([1.0, 0.0, 0.0, 1.0], moments)


def test_fixed_chaos_criteria_on_single_atom() -> None:
    kernel = single_atom_kernel(2)
    assert gamma_chaos_check(2, kernel, v=1.0, n_paths=5000)["l1"] < 1e-10

    draws = sample_with_gradient(ChaosVector.single(kernel), 100_000, seed=8)
    assert pearson_chaos_check(2, CHI2, draws["x"], draws["dx_norm_sq"])["l1"] < 1e-10
    moment = chaos_gstar_moment_check(2, CHI2, draws["dx_norm_sq"])
    assert moment["target"] == pytest.approx(48.0)
    assert abs(moment["value"] - 48.0) <= 4 * moment["stderr"]
