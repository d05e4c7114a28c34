from __future__ import annotations

import numpy as np
import pytest

from smlab.errors import UnsupportedSupport
from smlab.laws import catalog
from smlab.parallel import block_rng
from smlab.stein import (
    bound_constant,
    bound_stability,
    clip,
    f_prime_repr,
    f_second_repr,
    identity,
    piecewise_linear,
    random_family,
    sign_property,
    sine,
    smoothed_indicator,
    solve,
)
from smlab.stein.bounds import NORMAL_K_FM, NORMAL_K_W

RESIDUAL_LAWS = [
    ("normal", {}),
    ("chi2_centered", {"v": 1.0}),
    ("gamma", {"s": 1.0, "r": 2.0}),
    ("student_t", {"v": 5.0}),
    ("laplace", {"c": 1.0}),
]


def test_normal_identity_solution_is_constant() -> None:
    sol = solve(catalog("normal"), identity(), 80)
    np.testing.assert_allclose(sol.f, -1.0, atol=1e-8)
    np.testing.assert_allclose(sol.f_prime, 0.0, atol=1e-7)
    assert sol.m_h == pytest.approx(0.0, abs=1e-12)


def test_residual_for_ramp_and_clip() -> None:
    assert solve(catalog("normal"), smoothed_indicator(0.0, 0.05), 120).max_residual < 1e-8
    assert solve(catalog("chi2_centered", {"v": 1}), clip(1.0), 120).max_residual < 1e-8


@pytest.mark.parametrize("name, params", RESIDUAL_LAWS)
def test_residual_random_lipschitz_family(name: str, params: dict) -> None:
    law = catalog(name, params)
    family = random_family(block_rng(3, (1,), 0), 4, "W", scale=float(np.sqrt(law.variance)))
    for h in family:
        assert solve(law, h, 60).max_residual < 1e-6


def test_random_family_is_lipschitz() -> None:
    rng = block_rng(5, (2,), 0)
    for h in random_family(rng, 10, "W"):
        assert h.lipschitz_const <= 1.0
        assert h.spot_check(rng)
    for h in random_family(rng, 10, "FM"):
        assert h.lipschitz_const + h.sup_norm <= 1.0 + 1e-12
        assert h.spot_check(rng)


def test_piecewise_linear_derivative_is_zero_at_kinks() -> None:
    h = piecewise_linear([0.0, 1.0], [0.0, 2.0], left_slope=0.5, right_slope=-1.0)
    np.testing.assert_allclose(h.h_prime(np.array([-1.0, 0.0, 0.5, 1.0, 3.0])), [0.5, 0.0, 2.0, 0.0, -1.0])
    assert h.lipschitz_const == 2.0


def test_f_prime_repr_vanishes_for_linear_h() -> None:
    law = catalog("normal")
    for x in (-1.5, 0.0, 0.8):
        assert f_prime_repr(law, identity(), x) == pytest.approx(0.0, abs=1e-9)


def test_f_prime_repr_matches_finite_difference() -> None:
    law = catalog("normal")
    step = 1e-3
    sol = solve(law, sine(), [-step, 0.0, step])
    fd = (sol.f[2] - sol.f[0]) / (2 * step)
    assert f_prime_repr(law, sine(), 0.0) == pytest.approx(fd, abs=1e-5)
    assert sol.f_prime[1] == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("name, params", RESIDUAL_LAWS[1:])
def test_f_prime_matches_finite_difference_of_f(name: str, params: dict) -> None:
    law = catalog(name, params)
    step = 1e-3
    h = sine()
    for p in (0.2, 0.4, 0.7):
        x = float(law.ppf(p))
        sol = solve(law, h, [x - step, x, x + step])
        fd = (sol.f[2] - sol.f[0]) / (2 * step)
        assert f_prime_repr(law, h, x) == pytest.approx(fd, rel=1e-4, abs=1e-5)
        assert sol.f_prime[1] == pytest.approx(fd, rel=1e-4, abs=1e-5)


def test_f_prime_repr_on_gamma_respects_bound() -> None:
    law = catalog("gamma", {"s": 1.0, "r": 1.0})
    spec = {"family": "W", "n_functions": 6, "grid_n": 50, "seed": 1}
    k1 = bound_constant(law, spec)["k1_hat"]
    # first member of the swept family
    h = random_family(block_rng(1, (11,), 0), 6, "W", scale=float(np.sqrt(law.variance)))[0]
    for x in law.interior_grid(50)[::5]:
        assert abs(f_prime_repr(law, h, float(x))) <= k1 * h.derivative_sup * (1 + 1e-6) + 1e-8


def test_f_second_repr_matches_finite_difference() -> None:
    law = catalog("normal")
    step = 1e-2
    x = 0.7
    sol = solve(law, sine(), [x - step, x, x + step])
    fd2 = (sol.f[2] - 2 * sol.f[1] + sol.f[0]) / step ** 2
    assert f_second_repr(law, sine(), x) == pytest.approx(fd2, abs=1e-4)
    assert f_second_repr(law, identity(), x) == pytest.approx(0.0, abs=1e-8)


def test_f_second_repr_pointwise_bound_normal() -> None:
    law = catalog("normal")
    h = clip(0.5)
    for x in np.linspace(-3, 3, 13):
        assert abs(f_second_repr(law, h, float(x))) <= 2.0 * h.derivative_sup / float(law.gstar(x)) + 1e-9


def test_f_second_repr_rejects_half_line() -> None:
    with pytest.raises(UnsupportedSupport):
        f_second_repr(catalog("gamma"), identity(), 0.3)


@pytest.mark.parametrize("name", ["normal", "student_t", "pearson4", "laplace"])
def test_sign_property_full_line(name: str) -> None:
    report = sign_property(catalog(name))
    assert report["ok"], report["violations"][:5]


def test_bound_constants_normal() -> None:
    law = catalog("normal")
    w = bound_constant(law, {"family": "W", "n_functions": 12, "grid_n": 80, "seed": 2})
    fm = bound_constant(law, {"family": "FM", "n_functions": 12, "grid_n": 80, "seed": 2})
    assert w["k1_hat"] <= NORMAL_K_W
    assert fm["k1_hat"] <= NORMAL_K_FM
    assert w["k2_hat"] is not None and w["k2_hat"] <= 2.0 + 1e-6
    assert w["max_residual"] < 1e-6


def test_bound_constant_is_thread_independent() -> None:
    law = catalog("gamma", {"s": 1.0, "r": 2.0})
    spec = {"family": "W", "n_functions": 6, "grid_n": 40, "seed": 4}
    one = bound_constant(law, {**spec, "threads": 1})
    three = bound_constant(law, {**spec, "threads": 3})
    assert one == three
    assert np.isfinite(one["k1_hat"]) and one["k2_hat"] is None


def test_bound_stability_doubles_the_grid() -> None:
    out = bound_stability(catalog("normal"), {"family": "W", "n_functions": 8, "grid_n": 60, "seed": 3})
    assert out["fine"]["grid_n"] == 2 * out["coarse"]["grid_n"] == 120
    assert abs(out["drift"]) < 0.05
    assert out["fine"]["k1_hat"] <= NORMAL_K_W
