from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from smlab.errors import DomainError, InvalidParams, MomentUndefined, UnknownLaw
from smlab.laws import (
    LAW_NAMES,
    PearsonParams,
    Support,
    catalog,
    check_assumptions,
    check_growth,
    density_from_gstar,
    export_law_csv,
    gstar_from_density,
    gstar_polynomial_moments,
    gstar_two_sided,
    law_from_record,
    law_to_record,
    pearson_gz_stats,
    pearson_moment,
)


def _trapezoid(law, z: float) -> float:
    xs = np.linspace(law.anchor, z, 20001)
    return float(integrate.trapezoid(law.gstar(xs), xs))


def test_catalog_has_twelve_laws() -> None:
    assert len(LAW_NAMES) == 12


def test_catalog_examples() -> None:
    chi2 = catalog("chi2_centered", {"v": 1})
    assert chi2.support.lower == -1.0 and math.isinf(chi2.support.upper)
    assert chi2.gstar(0.5) == pytest.approx(2.0 * 1.5)

    laplace = catalog("laplace", {"c": 1})
    z = np.array([-2.0, -0.3, 0.0, 1.7])
    np.testing.assert_allclose(laplace.gstar(z), 1.0 + np.abs(z))

    uniform = catalog("uniform", {"u": 1})
    np.testing.assert_allclose(uniform.density(np.array([-0.9, 0.0, 0.4])), 0.5)
    assert uniform.gstar(2.0) == 0.0


def test_catalog_rejects_bad_input() -> None:
    with pytest.raises(UnknownLaw):
        catalog("cauchy")
    with pytest.raises(InvalidParams):
        catalog("student_t", {"v": 2})
    with pytest.raises(InvalidParams):
        catalog("inverse_gamma", {"r": 3})
    with pytest.raises(InvalidParams):
        catalog("pareto", {"c": 2})
    with pytest.raises(InvalidParams):
        catalog("normal", {"scale": 1.0})


@pytest.mark.parametrize("name", LAW_NAMES)
def test_laws_are_centered_with_positive_gstar(name: str) -> None:
    law = catalog(name)
    grid = law.interior_grid(50)
    assert np.all(law.gstar(grid) > 0)
    mean = law.expect(lambda y: y)
    assert abs(mean) < 1e-7


@pytest.mark.parametrize("name", LAW_NAMES)
def test_gstar_quadrature_matches_closed_form(name: str) -> None:
    law = catalog(name)
    for z in law.interior_grid(200):
        numeric = gstar_from_density(law.density, law.support, float(z), law.breakpoints)
        closed = law.gstar(float(z))
        assert abs(numeric - closed) <= 1e-6 * (1.0 + abs(closed))


@pytest.mark.parametrize("name", LAW_NAMES)
def test_density_inversion_matches_density(name: str) -> None:
    law = catalog(name)
    grid = law.interior_grid(200)
    recovered = np.array(
        [density_from_gstar(law.gstar, law.abs_mean, float(z), law.support, law.breakpoints) for z in grid]
    )
    assert np.max(np.abs(recovered - law.density(grid))) < 1e-6


def test_density_from_gstar_examples() -> None:
    abs_mean = math.sqrt(2.0 / math.pi)
    assert density_from_gstar(lambda y: 1.0, abs_mean, 0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi))
    assert density_from_gstar(lambda y: 1.0, abs_mean, 1.0) == pytest.approx(stats.norm.pdf(1.0), abs=1e-8)


def test_density_round_trip_through_quadrature_gstar() -> None:
    law = catalog("gamma", {"s": 1.0, "r": 2.0})

    def gstar(y):
        return gstar_from_density(law.density, law.support, float(y))

    for z in (-1.2, -0.4, 0.0, 0.8, 2.5):
        assert density_from_gstar(gstar, law.abs_mean, z, law.support) == pytest.approx(
            float(law.density(z)), abs=1e-6
        )


def test_gstar_from_density_examples() -> None:
    normal = catalog("normal")
    assert gstar_from_density(normal.density, normal.support, 0.0) == pytest.approx(1.0)
    uniform = catalog("uniform", {"u": 1.0})
    assert gstar_from_density(uniform.density, uniform.support, 0.0) == pytest.approx(0.5)
    expo = catalog("exponential", {"lam": 1.0})
    assert gstar_from_density(expo.density, expo.support, 0.37) == pytest.approx(1.37)


def test_gstar_from_density_domain_error() -> None:
    law = catalog("uniform")
    with pytest.raises(DomainError):
        gstar_from_density(law.density, law.support, 1.5)


@pytest.mark.parametrize("name", ["uniform", "beta"])
def test_two_representations_agree_on_finite_support(name: str) -> None:
    law = catalog(name)
    for z in law.interior_grid(50):
        both = gstar_two_sided(law.density, law.support, float(z))
        assert both["left"] == pytest.approx(both["right"], abs=1e-8)


@pytest.mark.parametrize("p, left, right", [(0.5, False, True), (1.0, True, True), (1.5, True, True), (2.0, True, True), (2.5, True, False)])
def test_growth_thresholds(p: float, left: bool, right: bool) -> None:
    result = check_growth(lambda x: (x + 1.0) ** p, Support(-1.0, math.inf))
    assert result["left_ok"] is left
    assert result["right_ok"] is right


@pytest.mark.parametrize("name", LAW_NAMES)
def test_growth_passes_for_catalog(name: str) -> None:
    law = catalog(name)
    result = check_growth(law.gstar, law.support)
    assert result["left_ok"] and result["right_ok"]


def test_assumptions_student_t() -> None:
    report = check_assumptions(catalog("student_t", {"v": 5}))
    assert report["A"] and report["B"] and report["Bprime"]


def test_assumptions_gamma_half_line() -> None:
    report = check_assumptions(catalog("gamma", {"s": 1, "r": 2}))
    assert report["A"] and report["B"]
    assert report["Bprime"] is None


def test_assumptions_laplace_uses_smoothing() -> None:
    report = check_assumptions(catalog("laplace"))
    assert report["A"] and report["B"]


def test_pearson_moment_recursion() -> None:
    params = PearsonParams(0.0, 2.0, 2.0)
    assert pearson_moment(params, 2) == pytest.approx(2.0)
    assert pearson_moment(params, 3) == pytest.approx(8.0)
    assert pearson_moment(params, 4) == pytest.approx(60.0)


def test_pearson_moment_undefined_for_heavy_tail() -> None:
    # Student T with v = 3: alpha = 1/2, the fourth moment is infinite
    with pytest.raises(MomentUndefined):
        pearson_moment(PearsonParams(0.5, 0.0, 1.5), 4)


@pytest.mark.parametrize(
    "name, params",
    [
        ("normal", {"sigma": 1.3}),
        ("gamma", {"s": 1.0, "r": 2.0}),
        ("chi2_centered", {"v": 3.0}),
        ("beta", {"r": 2.0, "s": 3.0}),
        ("uniform", {"u": 2.0}),
        ("student_t", {"v": 7.0}),
        ("inverse_gamma", {"r": 8.0, "s": 2.0}),
        ("pareto", {"c": 6.0, "l": -1.0}),
    ],
)
def test_pearson_moments_match_scipy(name: str, params: dict) -> None:
    law = catalog(name, params)
    for k in (2, 3, 4):
        assert pearson_moment(law.pearson, k) == pytest.approx(float(law.dist.moment(k)), rel=1e-8, abs=1e-10)


def test_gz_stats() -> None:
    chi = pearson_gz_stats(PearsonParams(0.0, 2.0, 2.0))
    assert chi["e_gz_sq"] == pytest.approx(12.0)
    assert chi["var_gz"] == pytest.approx(8.0)
    assert pearson_gz_stats(PearsonParams(0.0, 0.0, 1.0))["var_gz"] == pytest.approx(0.0)


def test_gz_stats_student_t_against_quadrature() -> None:
    law = catalog("student_t", {"v": 5})
    expected = law.expect(lambda y: law.gstar(y) ** 2)
    assert pearson_gz_stats(law.pearson)["e_gz_sq"] == pytest.approx(expected, rel=1e-7)


def test_characterization_moments_coincide() -> None:
    moments = gstar_polynomial_moments(PearsonParams(0.0, 2.0, 2.0))
    assert moments["e_gstar_sq"] == pytest.approx(12.0)
    assert moments["e_z_Gstar"] == pytest.approx(12.0)


def test_gstar_antiderivative_against_quadrature() -> None:
    law = catalog("lognormal")
    pearson_like = catalog("beta")
    for candidate in (law, pearson_like):
        z = 0.1
        assert float(candidate.Gstar(z)) == pytest.approx(
            _trapezoid(candidate, z),
            rel=1e-5,
        )


def test_abs_mean_normal() -> None:
    assert catalog("normal").abs_mean == pytest.approx(math.sqrt(2.0 / math.pi))


def test_record_round_trip_and_csv(tmp_path) -> None:
    law = catalog("pareto", {"c": 4.0, "l": -2.0})
    rebuilt = law_from_record(law_to_record(law))
    assert rebuilt.law_id == law.law_id
    path = export_law_csv(law, str(tmp_path / "pareto.csv"), n=20)
    lines = (tmp_path / "pareto.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "z,rho,Phi,gstar,Gstar"
    assert len(lines) == 21
    assert path.endswith("pareto.csv")
