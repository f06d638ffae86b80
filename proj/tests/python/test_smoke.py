"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import sinefm


def test_channel_plan():
    plan = sinefm.channel_plan(64, 16, 5)
    assert plan == {"c_g": 48, "combine_in": 80, "combine_out": 48}
    with pytest.raises(Exception):
        sinefm.channel_plan(8, 16, 5)


def test_sample_hyperparams_deterministic():
    a = sinefm.sample_hyperparams(42, "sinusoidal", 2)
    b = sinefm.sample_hyperparams(42, "sinusoidal", 2)
    assert a == b
    params = a.params()
    assert len(params) == 2
    assert params[0]["omega"] == pytest.approx(1.0838629710598822, rel=0, abs=0)
    assert all(1.0 <= p["omega"] <= 2.0 for p in params)
    assert all(1.0 <= p["psi"] <= 5.0 for p in params)


def test_transform_eval():
    spec = sinefm.sample_hyperparams(7, "gaussian", 3)
    x = np.linspace(-2.0, 2.0, 11)
    y = spec.eval(1, x)
    assert y.shape == x.shape
    assert np.all(y > 0.0) and np.all(y <= 1.0)
    assert y[5] == pytest.approx(1.0)  # x = 0


def test_polynomials():
    assert sinefm.eval_polynomial_recurrence("legendre", 2, 0.0) == pytest.approx(-0.5)
    assert sinefm.eval_polynomial_recurrence("chebyshev", 3, 0.5) == pytest.approx(-1.0)
    assert sinefm.eval_polynomial_recurrence("hermite", 2, 1.0) == pytest.approx(2.0)


def test_flop_counts():
    assert sinefm.conv_flops(3, 3, 32, 32, 16) == 442368
    assert sinefm.sinefm_flops(256, 256, 16, 3, 5, 32, 32) == 57819136


def test_descriptor_tools_and_cost():
    text = sinefm.builtin_arch("tiny-vgg")
    assert text.startswith("input 3 32 32")
    converted = sinefm.convert_to_sinefm(text, seed=9)
    assert "sinefm" in converted
    assert sinefm.standardize(converted) == text

    cost = sinefm.model_cost(text, 32, 32)
    assert cost["total_params"] == 287076
    assert cost["total_flops"] == 38633984

    ratio = sinefm.size_report(converted)["ratio"]
    assert ratio >= 3.0


def test_normalize_maps():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 3, 8, 8)).astype(np.float32)
    y = sinefm.normalize_maps(x)
    means = y.mean(axis=(2, 3))
    assert np.all(np.abs(means) < 1e-6)
    norms = np.sqrt(((y - means[..., None, None]) ** 2).sum(axis=(2, 3)))
    assert np.allclose(norms, 1.0, atol=1e-3)


def test_model_predict_and_pack_roundtrip():
    text = sinefm.convert_to_sinefm(sinefm.builtin_arch("tiny-unet"), seed=11)
    model = sinefm.Model.build(text, 12)
    x = np.random.default_rng(13).normal(size=(1, 3, 32, 32)).astype(np.float32)
    y = model.predict(x)
    assert y.shape == (1, 2, 32, 32)

    blob = model.pack()
    restored = sinefm.Model.unpack(blob)
    assert np.array_equal(restored.predict(x), y)
    assert restored.descriptor == model.descriptor
    assert restored.parameter_count == model.parameter_count

    corrupted = bytearray(blob)
    corrupted[len(corrupted) // 2] ^= 1
    with pytest.raises(sinefm.SineFMError):
        sinefm.Model.unpack(bytes(corrupted))


def test_grad_check_layer():
    assert sinefm.grad_check_layer("sinusoidal") < 1e-4


def test_fit_alpha_identity():
    spec = sinefm.sample_hyperparams(3, "sinusoidal", 4)
    rng = np.random.default_rng(7)
    seed_filter = rng.normal(size=9)
    patches = rng.normal(size=(64, 9))
    alpha, residual, degenerate = sinefm.fit_alpha(spec, seed_filter, np.zeros(9), patches)
    assert residual == pytest.approx(0.0, abs=1e-9)
    assert not degenerate
    assert len(alpha) == 4


def test_families_list():
    assert len(sinefm.families) == 9
    assert "sinusoidal" in sinefm.families
