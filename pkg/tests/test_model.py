import numpy as np
import pytest

import viscobeam as vb
from viscobeam.config import (feedback_linear, feedback_linear_arctan,
                              kernel_exponential, kirchhoff_affine)
from viscobeam.model import EvaluationError, legendre_inequality_check


def test_default_scenario_validates(default_cfg):
    report = vb.validate_assumptions(default_cfg.spec)
    assert report.passed, report.format_table()
    # every margin respects the tolerance with headroom on the strict checks
    names = {c.name: c for c in report.checks}
    assert names["kernel: beta1 = 1 - int h > 0"].margin == pytest.approx(0.6)


def test_gain_condition_violation_detected(default_cfg):
    import dataclasses
    bad = dataclasses.replace(default_cfg.spec, mu2=2.0 * default_cfg.spec.mu1)
    report = vb.validate_assumptions(bad)
    assert not report.passed
    assert any("alpha2*mu2 <= alpha1*mu1" in n for n in report.failed_names())
    assert vb.xi_window(bad).empty


def test_validation_compatibility_with_modes(default_cfg, modes8):
    report = vb.validate_assumptions(default_cfg.spec, modes=modes8)
    assert report.passed


def test_xi_window_linear_closed_form(default_cfg):
    spec = default_cfg.spec
    win = vb.xi_window(spec)
    assert win.lo == spec.tau * spec.mu2
    assert win.hi == spec.tau * (2.0 * spec.mu1 - spec.mu2)
    assert win.midpoint == pytest.approx(0.5)
    assert not win.empty


def test_theta_constants_printed_and_corrected(default_cfg):
    import dataclasses
    spec = default_cfg.spec
    t1, t2 = vb.theta_constants(spec, xi=0.5)
    # printed form: both coefficients coincide
    assert t1 == t2 == pytest.approx(0.3)
    alt = dataclasses.replace(spec, corrected_theta2=True)
    t1c, t2c = vb.theta_constants(alt, xi=0.5)
    assert t1c == t1
    a1 = spec.feedback.alpha1
    expect = 0.5 * a1 / spec.tau - spec.mu2 * (1.0 - a1)
    assert t2c == pytest.approx(expect)


def test_legendre_inequality_linear():
    fb = feedback_linear(1.0)
    worst = legendre_inequality_check(fb, np.linspace(-3, 3, 61),
                                      np.linspace(-3, 3, 61))
    assert worst >= -1e-10


def test_legendre_inequality_arctan():
    fb = feedback_linear_arctan(a=1.0, b=0.5)
    worst = legendre_inequality_check(fb, np.linspace(-2, 2, 41),
                                      np.linspace(-2, 2, 41))
    assert worst >= -1e-8


def test_feedback_conjugate_linear_closed_form():
    # for g(s) = s the antiderivative is s^2/2 and its conjugate is y^2/2
    fb = feedback_linear(1.0)
    for y in (-1.5, 0.0, 0.3, 2.0):
        assert fb.conjugate(y) == pytest.approx(0.5 * y * y, abs=1e-8)


def test_feedback_inverse_roundtrip():
    fb = feedback_linear_arctan(a=1.0, b=0.5)
    for s in (-2.0, -0.1, 0.0, 0.7, 3.0):
        assert fb.g_inverse(float(fb.g(s))) == pytest.approx(s, abs=1e-9)


def test_arctan_sector_constants():
    fb = feedback_linear_arctan(a=1.0, b=0.5)
    s = np.linspace(1e-6, 4.0, 400)
    g, G = np.asarray(fb.g(s)), np.asarray(fb.G(s))
    assert np.all(fb.alpha1 * s * g <= G + 1e-12)
    assert np.all(G <= fb.alpha2 * s * g + 1e-12)


def test_kernel_spec_mass_and_rate():
    kern = kernel_exponential(0.4, 1.0)
    assert kern.total_mass == pytest.approx(0.4)
    assert kern.beta1 == pytest.approx(0.6)
    t = np.linspace(0.0, 5.0, 11)
    assert np.allclose(kern.derivative(t), -kern.evaluate(t))


def test_kirchhoff_affine_antiderivative():
    law = kirchhoff_affine(m0=1.0, slope=1.0)
    for lam in (0.0, 0.3, 2.0):
        assert law.antiderivative(lam) == pytest.approx(lam + 0.5 * lam ** 2)


def test_nonfinite_coefficient_rejected(default_cfg):
    import dataclasses
    bad_kern = kernel_exponential(0.4, 1.0)
    bad_kern = dataclasses.replace(
        bad_kern, evaluate=lambda t: np.where(np.asarray(t) > 1.0, np.nan,
                                              0.4 * np.exp(-np.asarray(t))))
    spec = dataclasses.replace(default_cfg.spec, kernel=bad_kern)
    with pytest.raises(EvaluationError):
        vb.validate_assumptions(spec)
