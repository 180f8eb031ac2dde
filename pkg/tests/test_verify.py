import collections

import numpy as np
import pytest

from equinorm.norm import PASS_THROUGH, PRESETS, NormConfig, init_params, preset
from equinorm.tensor import Axis
from equinorm.transform import translate1d, translation_kernel
from equinorm.verify import (
    EquivarianceClass,
    all_configs,
    appendixb_shift_counterexample,
    appendixb_translation_counterexample,
    classify_config,
    classify_measured,
    measure_row,
    shift_equivariance_exhaustive,
    theorem_sweep,
    translate_naive,
    unitarity_check,
)

T, S, N = EquivarianceClass.TRANSLATION, EquivarianceClass.SHIFT, EquivarianceClass.NEITHER


@pytest.mark.parametrize(
    "name, expected",
    [("BatchNorm", T), ("InstanceNorm", T), ("LayerNorm-CHW", N), ("LayerNorm-C", S), ("LayerNorm-AF", T)],
)
def test_classify_presets(name, expected):
    assert classify_config(preset(name)) is expected


def test_classify_rules():
    assert classify_config(NormConfig(Axis.B, Axis.C, Axis.H)) is N
    assert classify_config(NormConfig(Axis.none(), Axis.none(), None)) is T
    assert classify_config(NormConfig(Axis.none(), Axis.H, Axis.C)) is S
    assert classify_config(NormConfig(Axis.C, Axis.parse("BHW"), Axis.none())) is T


def test_exhaustive_shift(rng):
    x = rng.standard_normal((2, 3, 6, 5))
    assert shift_equivariance_exhaustive(preset("InstanceNorm", eps=0.0), None, x) <= 1e-11
    chw = preset("LayerNorm-CHW", eps=0.0)
    assert shift_equivariance_exhaustive(chw, init_params(chw, x.shape, "gaussian", 1), x) >= 1e-3
    assert shift_equivariance_exhaustive(PASS_THROUGH, None, x) == 0.0


def test_translate_naive(rng):
    v = rng.standard_normal((7, 3))
    assert np.array_equal(translate_naive(v, 3).real, np.roll(v, 3, axis=0))
    for _ in range(20):
        K = int(rng.integers(1, 33))
        g = float(rng.uniform(-40, 40))
        v = rng.standard_normal((K, 2))
        np.testing.assert_allclose(translate_naive(v, g), translate1d(v, g, complex_output=True), atol=1e-12)
        np.testing.assert_allclose(translate_naive(v, g), translate_naive(v, g + K), atol=1e-12)


def test_unitarity(rng):
    x = rng.standard_normal((9, 4))
    assert unitarity_check(x, 4) == 0.0
    assert unitarity_check(x, -13) == 0.0
    assert unitarity_check(rng.standard_normal((10, 3)), 0.37) <= 1e-11
    assert unitarity_check(np.zeros((5, 2)), 0.37) == 0.0


def test_shift_counterexample_k4_d3():
    ce = appendixb_shift_counterexample(4, 3, seed=0)
    assert ce.g != 0
    assert ce.support == {0, ce.g}
    assert np.all(ce.y != 0)
    np.testing.assert_allclose(ce.error[0], ce.y[0], atol=1e-12)
    np.testing.assert_allclose(ce.error[ce.g], -ce.y[ce.g], atol=1e-12)
    for row in ce.x:
        assert set(row) == {-1.0, 1.0}


def test_shift_counterexample_zero_displacement():
    assert appendixb_shift_counterexample(4, 3, seed=0, g=0).magnitude == 0.0


def test_translation_counterexample():
    ce = appendixb_translation_counterexample(5, 4, 0.5, seed=0)
    mag = np.abs(ce.phi)
    assert np.all((mag > 0) & (np.abs(mag - 1) > 1e-6))
    np.testing.assert_allclose(ce.measured, ce.closed_form, atol=1e-10)
    assert np.max(np.abs(ce.measured)) > 1e-3
    np.testing.assert_allclose(ce.phi, translation_kernel(0.5, 5))


def test_translation_counterexample_integer_shift():
    ce = appendixb_translation_counterexample(5, 4, 2.0, seed=0)
    assert np.max(np.abs(ce.measured)) <= 1e-11


def test_config_enumeration():
    configs = list(all_configs())
    assert len(configs) == 4352
    keys = {(c.center_axes, c.scale_axes, c.affine_axes) for c in configs}
    assert len(keys) == 4352


def test_classify_measured():
    assert classify_measured(1e-15, 1e-15, 1e-8, 1e-4) is T
    assert classify_measured(1e-15, 1e-2, 1e-8, 1e-4) is S
    assert classify_measured(1e-1, 1e-1, 1e-8, 1e-4) is N
    assert classify_measured(1e-6, 1e-1, 1e-8, 1e-4) is None
    assert classify_measured(1e-1, 1e-15, 1e-8, 1e-4) is None


def test_identity_row():
    err = measure_row(NormConfig(Axis.none(), Axis.none(), None, eps=0.0), (2, 3, 8, 8), np.random.default_rng(0))
    assert max(err) <= 1e-11


def test_mixed_config_row():
    cfg = NormConfig(Axis.B, Axis.C, Axis.H, eps=0.0)
    assert classify_config(cfg) is N
    shift_err, trans_err = measure_row(cfg, (2, 3, 8, 8), np.random.default_rng(1))
    assert shift_err >= 1e-4 and trans_err >= 1e-4


def test_sweep_rejects_bad_thresholds():
    with pytest.raises(ValueError):
        theorem_sweep(t_lo=1e-3, t_hi=1e-4)


@pytest.fixture(scope="module")
def sweep_rows():
    return theorem_sweep((2, 3, 8, 8), seed=5)


def test_sweep_agrees(sweep_rows):
    assert len(sweep_rows) == 4352
    assert all(r.agreement for r in sweep_rows)
    for name, (c, s, a) in PRESETS.items():
        key = (Axis.parse(c), Axis.parse(s), None if a is None else Axis.parse(a))
        (row,) = [r for r in sweep_rows if (r.center_axes, r.scale_axes, r.affine_axes) == key]
        assert row.agreement and row.predicted is classify_config(preset(name))


def test_sweep_centering_irrelevant(sweep_rows):
    groups = collections.defaultdict(set)
    for r in sweep_rows:
        groups[(r.scale_axes, r.affine_axes)].add(r.measured)
    assert len(groups) == 272
    assert all(len(classes) == 1 for classes in groups.values())


def test_degenerate_dims_are_indeterminate():
    cfg = NormConfig(Axis.B, Axis.B, None, eps=0.0)
    s, t = measure_row(cfg, (1, 2, 4, 4), np.random.default_rng(0))
    assert np.isnan(s) and np.isnan(t)
    assert classify_measured(s, t, 1e-8, 1e-4) is None
