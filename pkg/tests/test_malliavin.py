from __future__ import annotations

import numpy as np
import pytest

from smlab.chaos import ChaosVector, random_kernel, GridMeasure, single_atom_kernel
from smlab.errors import GradientUnavailable, TooFewSamples
from smlab.malliavin import (
    GammaSamples,
    SmoothFunctional,
    absolute_value,
    conditional_regress,
    from_chaos,
    gamma_draw,
    hermite_coordinate,
    linear,
    minus_DL_inv,
    random_cubic,
)
from smlab.parallel import block_rng


def _rng(stream: int) -> np.random.Generator:
    return block_rng(3, (stream,), 0)


def test_linear_functional_is_its_own_projection() -> None:
    a = np.array([0.3, -1.2, 2.0])
    xi = _rng(1).standard_normal((50, 3))
    out = minus_DL_inv(linear(a), xi, _rng(2))
    np.testing.assert_allclose(out, np.broadcast_to(a, out.shape), rtol=1e-12)


def test_second_hermite_returns_half_gradient() -> None:
    F = hermite_coordinate(2, dim=2)
    xi = _rng(3).standard_normal((40, 2))
    out = minus_DL_inv(F, xi, _rng(4))
    np.testing.assert_allclose(out[:, 0], xi[:, 0], atol=1e-10)
    np.testing.assert_allclose(out[:, 1], 0.0, atol=1e-12)


def test_third_hermite_returns_third_of_gradient() -> None:
    F = hermite_coordinate(3)
    xi = _rng(5).standard_normal((200, 1))
    out = minus_DL_inv(F, xi, _rng(6))
    expected = F.gradient(xi) / 3.0
    np.testing.assert_allclose(out, expected, rtol=1e-3, atol=1e-9)


def test_numeric_gradient_fallback_matches_analytic() -> None:
    F = random_cubic(_rng(7))
    bare = SmoothFunctional(dim=F.dim, eval=F.eval, name="bare")
    assert bare.numeric_gradient
    xi = _rng(8).standard_normal((20, F.dim))
    np.testing.assert_allclose(bare.gradient(xi), F.gradient(xi), rtol=1e-6, atol=1e-6)
    assert F.gradient_check(_rng(9))
    with pytest.raises(GradientUnavailable):
        minus_DL_inv(bare, xi, _rng(10), allow_numeric=False)


def test_gamma_fast_path_for_second_chaos() -> None:
    F = from_chaos(ChaosVector.single(single_atom_kernel(2)))
    samples = gamma_draw(F, 5000, seed=1)
    assert samples.meta["fast_path"]
    np.testing.assert_allclose(samples.y, 2.0 * (samples.x + 1.0), rtol=1e-12, atol=1e-12)


def test_gamma_linear_unit_norm_is_one() -> None:
    samples = gamma_draw(linear([0.6, 0.8]), 2000, seed=2)
    np.testing.assert_allclose(samples.y, 1.0, rtol=1e-12)


def test_mean_identity_for_random_cubic() -> None:
    samples = gamma_draw(random_cubic(_rng(11)), 20_000, seed=3)
    assert not samples.meta["fast_path"]
    check = samples.mean_identity()
    assert abs(check["diff"]) <= 4 * check["diff_se"]


def test_fast_and_numeric_paths_agree_on_single_chaos() -> None:
    grid = GridMeasure((0.5, 1.0, 1.5))
    F = from_chaos(ChaosVector.single(random_kernel(_rng(12), grid, 2)))
    fast = gamma_draw(F, 2000, seed=4)
    slow = gamma_draw(F, 2000, seed=4, spec={"fast_path": False})
    np.testing.assert_array_equal(fast.x, slow.x)
    rel = np.abs(fast.y - slow.y) / np.maximum(np.abs(fast.y), 1e-12)
    assert np.mean(rel <= 1e-3) >= 0.95


def test_gamma_draw_is_thread_independent() -> None:
    F = random_cubic(_rng(13))
    one = gamma_draw(F, 4096 + 100, seed=5, spec={"threads": 1})
    many = gamma_draw(F, 4096 + 100, seed=5, spec={"threads": 3})
    np.testing.assert_array_equal(one.y, many.y)


def test_absolute_value_is_accepted() -> None:
    samples = gamma_draw(absolute_value(), 4000, seed=6)
    assert np.all(np.isfinite(samples.y))
    assert samples.mean_identity()["mean_y"] == pytest.approx(1.0 - 2.0 / np.pi, abs=0.05)


def test_regression_recovers_chi_square_gx() -> None:
    F = from_chaos(ChaosVector.single(single_atom_kernel(2)))
    samples = gamma_draw(F, 50_000, seed=7)
    fit = conditional_regress(samples)
    assert len(fit.g_hat) == 50
    np.testing.assert_allclose(fit.g_hat, 2.0 * (fit.centers + 1.0), rtol=1e-9)
    assert fit(0.0) == pytest.approx(2.0, abs=0.1)


def test_regression_flat_for_linear_functional() -> None:
    samples = gamma_draw(linear([1.0]), 5000, seed=8)
    for method in ("bins", "knn"):
        fit = conditional_regress(samples, method)
        np.testing.assert_allclose(fit.g_hat, 1.0, rtol=1e-12)


def test_regression_recovers_parabola() -> None:
    rng = _rng(14)
    x = rng.standard_normal(100_000)
    y = x ** 2 + rng.normal(0.0, 0.5, x.size)
    fit = conditional_regress(GammaSamples(x=x, y=y))
    inner = slice(5, 45)
    err = np.abs(fit.g_hat[inner] - fit.centers[inner] ** 2)
    assert np.all(err <= 4 * fit.stderr[inner] + 0.01)


def test_regression_needs_enough_samples() -> None:
    with pytest.raises(TooFewSamples):
        conditional_regress(GammaSamples(x=np.zeros(999), y=np.zeros(999)))


def test_gamma_samples_round_trip(tmp_path) -> None:
    samples = gamma_draw(hermite_coordinate(3), 1500, seed=9)
    manifest = samples.save(str(tmp_path))
    back = GammaSamples.load(manifest)
    np.testing.assert_array_equal(back.x, samples.x)
    np.testing.assert_array_equal(back.y, samples.y)
    assert back.meta["seed"] == 9

    fit = conditional_regress(back)
    path = fit.export_csv(str(tmp_path / "g_hat.csv"))
    header = open(path, encoding="utf-8").readline().strip()
    assert header == "bin_center,g_hat,stderr,count"
