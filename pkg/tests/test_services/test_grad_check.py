"""Tests for finite-difference gradient verification."""

import math

import numpy as np

from selfclassifier.core import ops
from selfclassifier.core.loss import ViewKind
from selfclassifier.services.grad_check import grad_check, numerical_gradient, relative_error


def test_default_pipeline_passes():
    """Test the toy model + loss gradient within 1e-3."""
    report = grad_check()
    assert report.passed
    assert report.max_rel_error < 1e-3
    assert {block.name for block in report.blocks} >= {"encoder.0.weight", "heads.0.weight", "heads.1.weight"}


def test_global_views_only():
    """Test the check with two global views."""
    report = grad_check(kinds=(ViewKind.GLOBAL, ViewKind.GLOBAL), seed=3)
    assert report.passed


def test_infinite_tolerance_always_passes(monkeypatch):
    """Test that tolerance = inf passes even with a broken backward."""
    monkeypatch.setattr(ops, "_softmax_backward", lambda out, g, np_axis, temperature: (np.zeros_like(g),))
    report = grad_check(tolerance=math.inf)
    assert report.passed


def test_broken_softmax_backward_is_detected(monkeypatch):
    """Test that a wrong softmax gradient fails the check."""
    original = ops._softmax_backward

    def doubled(out, g, np_axis, temperature):
        return (2.0 * original(out, g, np_axis, temperature)[0],)

    monkeypatch.setattr(ops, "_softmax_backward", doubled)
    report = grad_check(tolerance=1e-3)
    assert not report.passed
    assert report.max_rel_error > 1e-3


def test_numerical_gradient_of_quadratic():
    """Test central differences on sum(x²) and that the array is restored."""
    x = np.array([[1.0, -2.0], [0.5, 3.0]])
    before = x.copy()
    grad = numerical_gradient(lambda: float(np.sum(x**2)), x)
    np.testing.assert_allclose(grad, 2.0 * before, atol=1e-8)
    np.testing.assert_array_equal(x, before)


def test_relative_error_floor():
    """Test that two zero gradients give zero error."""
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
