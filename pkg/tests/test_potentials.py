
import numpy as np
import pytest

from spherical_dpw import laurent as lm
from spherical_dpw import potentials as pt
from spherical_dpw.errors import ValidationError

XS = np.linspace(-1, 1, 7)


def _coeffs(pot, z):
    return pot.evaluate(np.asarray(z, dtype=complex))


def test_normalized_coefficient():
    pot = pt.normalized("1 + z^2", "1")
    c = _coeffs(pot, 0.0)
    assert pot.lo == -1 and pot.hi == -1
    np.testing.assert_allclose(c[0], [[0, 1], [1, 0]])


def test_normalized_twisted():
    assert pt.normalized("z", "10 z").check_twisted(XS + 0.2j)[0]


def test_normalized_zero_potential():
    pot = pt.normalized(0, 0)
    assert np.max(np.abs(_coeffs(pot, XS))) == 0


def test_geodesic_coefficients_by_hand():
    pot = pt.geodesic_gcp(2, 0)
    c = _coeffs(pot, 0.3)                     # exponents -1, 0, 1
    np.testing.assert_allclose(c[2], [[0, -0.75], [0.25, 0]], atol=1e-15)
    np.testing.assert_allclose(c[1], 0, atol=1e-15)
    np.testing.assert_allclose(c[0], [[0, -0.25], [0.75, 0]], atol=1e-15)


@pytest.mark.parametrize("pot", [
    pt.geodesic_gcp("1 - s^4", "s"), pt.singular_gcp("s", 1),
    pt.singular_gcp_general("s", "1 + s^2"),
    pt.general_gcp(pt.cauchy_data("general", kappa_n="1", kappa_g="s", mu="0.5")),
    pt.cmc_gcp(pt.cauchy_data("cmc", kappa_n="s", kappa_g="0", mu="0")),
])
def test_twisting_and_su2(pot):
    assert pot.check_twisted(XS + 0.2j)[0]
    # coefficients combine into su(2) on the unit circle for real z
    for lam in lm.circle_samples(8):
        A = lm.evaluate(lm.LaurentMatrix(_coeffs(pot, XS), pot.lo), lam)
        assert lm.su2_defect(A).max() < 1e-12


@pytest.mark.filterwarnings("ignore::spherical_dpw.potentials.AdmissibilityWarning")
def test_general_reduces_to_geodesic():
    k, t = "1 - s^4", "s^2"
    a = pt.geodesic_gcp(k, t)
    b = pt.general_gcp(pt.cauchy_data("general", kappa_n=k, kappa_g=0, mu=t))
    np.testing.assert_allclose(_coeffs(a, XS), _coeffs(b, XS), atol=1e-15)


def test_cmc_geodesic_substitution():
    pot = pt.cmc_gcp(pt.cauchy_data("cmc", kappa_n="s", kappa_g="0", mu="0"))
    assert pot.kind == "cmc_gcp" and pot.reflected_split


def test_nonorientable_curve_data():
    f0 = ("cos(s)", "sin(s)", "0")
    N0 = ("sin(s/2) cos(s)", "sin(s/2) sin(s)", "cos(s/2)")
    cd = pt.gcp_data_from_curve(f0, N0, (0, 4 * np.pi))
    x = np.linspace(0, 4 * np.pi, 9)
    np.testing.assert_allclose(cd["kappa_n"](x), -np.sin(x / 2), atol=1e-12)
    np.testing.assert_allclose(cd["kappa_g"](x), np.cos(x / 2), atol=1e-12)
    np.testing.assert_allclose(cd["mu"](x), 0.5, atol=1e-12)


def test_planar_curve_with_curve_normal():
    # unit circle, N0 the inward principal normal
    cd = pt.gcp_data_from_curve(("cos(s)", "sin(s)", "0"), ("-cos(s)", "-sin(s)", "0"))
    np.testing.assert_allclose(cd["kappa_n"](XS), 1, atol=1e-13)
    np.testing.assert_allclose(cd["kappa_g"](XS), 0, atol=1e-13)
    np.testing.assert_allclose(cd["mu"](XS), 0, atol=1e-13)


def test_curve_data_finite_difference():
    f0 = ("cos(s) / sqrt(2)", "sin(s) / sqrt(2)", "s / sqrt(2)")            # unit-speed helix
    N0 = ("-cos(s)", "-sin(s)", "0")
    cd = pt.gcp_data_from_curve(f0, N0)
    fs = [pt.as_fn(c) for c in f0]
    Ns = [pt.as_fn(c) for c in N0]
    h = 1e-4
    for x in np.linspace(-0.9, 0.9, 5):
        d1 = np.array([(f(x + h) - f(x - h)) / (2 * h) for f in fs]).real
        d2 = np.array([(f(x + h) - 2 * f(x) + f(x - h)) / h ** 2 for f in fs]).real
        N = np.array([g(x) for g in Ns]).real
        dN = np.array([(g(x + h) - g(x - h)) / (2 * h) for g in Ns]).real
        assert abs(cd["kappa_n"](x) - d2 @ N) < 1e-7
        assert abs(cd["kappa_g"](x) - d2 @ np.cross(N, d1)) < 1e-7
        assert abs(cd["mu"](x) - np.cross(d1, N) @ dN) < 1e-7


def test_curve_data_rejects_non_unit_speed():
    with pytest.raises(ValidationError) as exc:
        pt.gcp_data_from_curve(("2 s", "0", "0"), ("0", "0", "1"))
    assert exc.value.defect == pytest.approx(1.0)


def test_singular_gcp_examples():
    pot = pt.singular_gcp(1, 1)
    c = _coeffs(pot, 0.4)
    np.testing.assert_allclose(c[1], lm.E3, atol=1e-15)
    with pytest.raises(ValidationError):
        pt.singular_gcp(0, 1)


def test_general_gcp_warns_when_kappa_n_vanishes():
    with pytest.warns(pt.AdmissibilityWarning):
        pt.general_gcp(pt.cauchy_data("general", kappa_n="s", kappa_g=0, mu=0))


def test_singular_general_warns_when_c_vanishes():
    with pytest.warns(pt.AdmissibilityWarning):
        pt.singular_gcp_general("s", "s")


@pytest.mark.parametrize("R", [0.5, 1 / np.sqrt(2), 0.9])
def test_normal_circle_geodesic_curvature(R):
    R = float(R)
    N = (f"{R!r} cos(s / {R!r})", f"{R!r} sin(s / {R!r})", f"{float(np.sqrt(1 - R * R))!r}")
    c = pt.normal_curve_geodesic_curvature(N)
    np.testing.assert_allclose(c(XS).real, np.sqrt(1 - R * R) / R, atol=1e-12)


def test_cone_with_unit_curvature_closes():
    period = 2 * np.pi / np.sqrt(2)
    pot, rep = pt.cone_potential_from_normal_curve(1, period, (0, period))
    assert rep.one_signed and rep.closes and rep.closing_defect < 1e-10
    # normal curve is a circle of latitude 1/sqrt(2)
    _, F = pt.boundary_frame(pot, 0, period, n=9)
    N = pt.ad_e3(F)[:-1]                      # 8 equally spaced points on one turn
    r = np.linalg.norm(N - N.mean(axis=0), axis=1)
    np.testing.assert_allclose(r, 1 / np.sqrt(2), atol=1e-8)


def test_cone_sign_change_warns():
    with pytest.warns(pt.AdmissibilityWarning):
        _, rep = pt.cone_potential_from_normal_curve("cos(s)")
    assert not rep.one_signed and not rep.embedded_precondition


SYMMETRIC_PAIRS = [("1 + z^2", "1", 2), ("1 + z^3", "z", 3), ("1 + z^4", "z^2", 4), ("1 + z^5", "z^3", 5),
                ("z^4", "z^2", 4), ("1", "z^3", 5), ("1 + z^5", "z^3 + z^8", 5),
                ("cos(z^2)", "sin(z^2)", 4)]


@pytest.mark.parametrize("a, b, n", SYMMETRIC_PAIRS)
def test_symmetry_accepts(a, b, n):
    assert pt.check_symmetry_order(pt.as_fn(a, "z"), pt.as_fn(b, "z"), n)


def test_symmetry_rejects():
    rep = pt.check_symmetry_order(pt.as_fn("1 + z^3", "z"), pt.as_fn("z", "z"), 4)
    assert not rep and rep.max_violation > 1e-3


def test_symmetry_order_validated():
    with pytest.raises(ValidationError):
        pt.check_symmetry_order(1, 1, 1)


def test_taylor_by_quadrature():
    c = pt.taylor_by_quadrature(pt.as_fn("exp(z)", "z"))
    np.testing.assert_allclose(c[:5], [1, 1, 0.5, 1 / 6, 1 / 24], atol=1e-13)


def test_inverted_reverses_exponents():
    pot = pt.geodesic_gcp(2, 0)
    inv = pot.inverted()
    np.testing.assert_allclose(_coeffs(inv, 0.1), _coeffs(pot, 0.1)[::-1])
