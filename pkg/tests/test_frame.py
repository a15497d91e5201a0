import numpy as np
import pytest

from spherical_dpw import laurent as lm
from spherical_dpw import potentials as pt
from spherical_dpw.errors import InputError
from spherical_dpw.frame import (GridSpec, extract_Up, integrate_frame, integrate_phi, maurer_cartan_dz,
                                 path_independence_check, regularity_margin)

SMALL = GridSpec((-0.5, 0.5), (-0.5, 0.5), 21, 21)


def test_gridspec_defaults_and_validation():
    g = GridSpec((-1, 1), (0.5, 1.5), 5, 5)
    assert g.z0 == complex(0, 0.5)
    assert g.z().shape == (5, 5) and g.z()[1, 2] == complex(g.x[1], g.y[2])
    with pytest.raises(InputError):
        GridSpec((-1, 1), (-1, 1), 1, 5)
    with pytest.raises(InputError):
        GridSpec((-1, 1), (-1, 1), 5, 5, basepoint=3.0)


def test_zero_potential_gives_identity():
    ff = integrate_frame(pt.normalized(0, 0), SMALL)
    F = ff.F_lambda1()
    np.testing.assert_allclose(F, np.broadcast_to(np.eye(2), F.shape), atol=1e-15)
    assert path_independence_check(pt.normalized(0, 0), SMALL) == 0


def test_nilpotent_potential_is_exact():
    pot = pt.normalized(1, 0)
    phi, _ = integrate_phi(pot, SMALL)
    z = SMALL.z() - SMALL.z0
    np.testing.assert_allclose(phi.coeff(-1)[..., 0, 1], z, atol=1e-13)
    np.testing.assert_allclose(phi.coeff(0), np.broadcast_to(np.eye(2), z.shape + (2, 2)), atol=1e-13)
    assert np.abs(phi.coeff(-1)[..., 1, 0]).max() < 1e-13


def test_basepoint_is_identity():
    g = GridSpec((-0.5, 0.5), (-0.5, 0.5), 11, 11, basepoint=complex(0.1, -0.2))
    ff = integrate_frame(pt.geodesic_gcp(2, 0), g)
    i, j = int(np.argmin(abs(g.x - 0.1))), int(np.argmin(abs(g.y + 0.2)))
    np.testing.assert_allclose(ff.phi.coeffs[i, j].sum(axis=0), np.eye(2), atol=1e-14)


def test_frame_invariants():
    ff = integrate_frame(pt.geodesic_gcp("1 - s^4", "s"), SMALL)
    assert ff.ok.all() and ff.residual.max() < 1e-8
    assert ff.diagnostics["max_det_defect"] < 1e-8
    F = lm.evaluate(ff.unitary[3, 4], lm.circle_samples(16))
    np.testing.assert_allclose(F @ np.conj(np.swapaxes(F, -1, -2)), np.broadcast_to(np.eye(2), F.shape), atol=1e-9)


def test_flatness_defect_is_fourth_order():
    pot = pt.geodesic_gcp("1 - s^4", "0")
    g = GridSpec((-1, 1), (-1, 1), 11, 11)
    d1 = path_independence_check(pot, g, step=0.05, refine=2)
    d2 = path_independence_check(pot, g, step=0.05, refine=4)
    # RK4 in the asymptotic regime: exact step halving gains 2^4
    assert 14 < d1 / d2 < 18 and d2 < 1e-9


def test_substeps_reduce_det_drift():
    pot = pt.geodesic_gcp("1 - s^4", "0")
    g = GridSpec((-1, 1), (-1, 1), 11, 11)
    a = integrate_frame(pot, g, substeps=1).diagnostics["max_det_defect"]
    b = integrate_frame(pot, g, substeps=4).diagnostics["max_det_defect"]
    assert b < a / 50


def test_auto_substeps():
    pot = pt.geodesic_gcp("1 - s^4", "0")
    g = GridSpec((-1, 1), (-1, 1), 11, 11)
    ff = integrate_frame(pot, g, max_substeps=16)
    assert ff.diagnostics["substeps"] > 1
    assert ff.diagnostics["max_det_defect"] <= 1e-9 or ff.diagnostics["substeps"] == 16


@pytest.mark.parametrize("kappa, tau", [("2", "0"), ("1 - s^4", "s"), ("s", "1")])
def test_geodesic_Up_along_curve(kappa, tau):
    g = GridSpec((-0.5, 0.5), (-0.2, 0.2), 41, 41)
    ff = integrate_frame(pt.geodesic_gcp(kappa, tau), g)
    k, t = pt.as_fn(kappa), pt.as_fn(tau)
    j = 20
    for i in (5, 20, 33):
        x = g.x[i]
        expect = (t(x) - 1j) / 2 * lm.E1 - k(x) / 2 * lm.E2
        np.testing.assert_allclose(extract_Up(ff, (i, j)).Up, expect, atol=5e-4)


def test_singular_Up_along_curve():
    g = GridSpec((-0.5, 0.5), (-0.2, 0.2), 41, 41)
    ff = integrate_frame(pt.singular_gcp("1 + s", "s"), g)
    for i in (5, 20, 33):
        x = g.x[i]
        r = extract_Up(ff, (i, 20))
        np.testing.assert_allclose(r.Up, (x - 1j) / 2 * lm.E1, atol=5e-4)
        assert r.margin < 1e-3


def test_zero_potential_Up():
    ff = integrate_frame(pt.normalized(0, 0), SMALL)
    assert np.abs(extract_Up(ff, (5, 5)).Up).max() == 0


def test_Up_needs_interior_point():
    ff = integrate_frame(pt.normalized(0, 0), SMALL)
    with pytest.raises(InputError):
        maurer_cartan_dz(ff, 0, 3)


def test_regularity_margin_field():
    ff = integrate_frame(pt.normalized(1, 3), SMALL)
    m = regularity_margin(ff)
    assert np.isnan(m[0]).all() and np.isnan(m[:, -1]).all()
    # F = I at the basepoint, so U_p = off-diag(1, 3) there and the margin is |1 - 3|
    assert m[10, 10] == pytest.approx(2.0, rel=2e-2)
    fine = GridSpec((-0.5, 0.5), (-0.5, 0.5), 41, 41)
    assert abs(regularity_margin(integrate_frame(pt.normalized(1, 3), fine))[20, 20] - 2) < 1e-2


def test_degree_exceeding_truncation_rejected():
    with pytest.raises(InputError):
        integrate_phi(pt.normalized(1, 1), SMALL, n_trunc=0)
