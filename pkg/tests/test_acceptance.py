"""Exit criteria, one test per criterion; each prints a PASS/FAIL line."""

import collections
import csv
import json
import time

import numpy as np
import pytest

from equinorm.cli import main
from equinorm.norm import init_params, preset
from equinorm.spectral import aliasing_energy, aliasing_probe, radial_psd
from equinorm.synthetic import gen_maps
from equinorm.transform import shift2d, translate1d, translate2d, upsample2x_sinc
from equinorm.verify import (
    EquivarianceClass,
    appendixb_shift_counterexample,
    appendixb_translation_counterexample,
    classify_config,
    theorem_sweep,
    translate_naive,
    unitarity_check,
)

PRESET_ORDER = ["BatchNorm", "InstanceNorm", "LayerNorm-CHW", "LayerNorm-C", "LayerNorm-AF"]
SWEEP_SEEDS = (0, 1, 2)


@pytest.fixture
def gate(capsys):
    def check(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return check


def read_json_rows(csv_path):
    return json.loads(csv_path.with_suffix(".json").read_text())["rows"]


def test_c01_preset_classification(gate):
    configs = [preset(n) for n in PRESET_ORDER]
    t0 = time.perf_counter()
    got = [classify_config(c) for c in configs]
    elapsed = time.perf_counter() - t0
    expected = [EquivarianceClass(v) for v in ("Translation", "Translation", "Neither", "Shift", "Translation")]
    gate(1, got == expected and elapsed < 1e-3,
         f"classes {[str(g) for g in got]} in {elapsed * 1e3:.3f} ms")


def test_c02_preset_error_clusters(tmp_path, gate):
    out = tmp_path / "presets.csv"
    t0 = time.perf_counter()
    code = main(["measure", "--layers", "all", "--synthetic", "8,16,32,32", "--trials", "256",
                 "--seed", "0", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    e = {(r["layer"], r["group"]): r["mean"] for r in read_json_rows(out)}
    ok = (
        code == 0
        and all(e[(n, "shift")] <= 1e-10 for n in ("BatchNorm", "InstanceNorm", "LayerNorm-C", "LayerNorm-AF"))
        and e[("LayerNorm-CHW", "shift")] >= 1e-2
        and all(e[(n, "translation")] <= 1e-9 for n in ("BatchNorm", "InstanceNorm", "LayerNorm-AF"))
        and e[("LayerNorm-C", "translation")] >= 1e-4
        and e[("LayerNorm-CHW", "translation")] >= 1e-2
        and elapsed <= 120
    )
    detail = ", ".join(f"{l}/{g[0]}={v:.2e}" for (l, g), v in e.items())
    gate(2, ok, f"{detail}; {elapsed:.1f} s")


def test_c03_batchnorm_modes(tmp_path, gate):
    t0 = time.perf_counter()
    errors = {}
    for mode in ("training", "evaluation"):
        out = tmp_path / f"{mode}.csv"
        assert main(["measure", "--layers", "BatchNorm", "--synthetic", "8,16,32,32", "--trials", "1000",
                     "--bn-modes", mode, "--seed", "0", "--out", str(out)]) == 0
        for row in read_json_rows(out):
            errors[(mode, row["group"])] = row["mean"]
    elapsed = time.perf_counter() - t0
    ok = (
        errors[("evaluation", "translation")] <= 1e-10
        and np.isfinite(errors[("training", "translation")])
        and errors[("training", "translation")] <= 1e-6
        and errors[("training", "shift")] <= 1e-10
        and errors[("evaluation", "shift")] <= 1e-10
        and errors[("evaluation", "translation")] <= errors[("training", "translation")]
        and elapsed <= 60
    )
    detail = ", ".join(f"{m}/{g}={v:.2e}" for (m, g), v in errors.items())
    gate(3, ok, f"{detail}; {elapsed:.1f} s")


@pytest.fixture(scope="module")
def sweeps():
    t0 = time.perf_counter()
    rows = {seed: theorem_sweep((2, 3, 8, 8), seed, 1e-8, 1e-4) for seed in SWEEP_SEEDS}
    return rows, time.perf_counter() - t0


def test_c04_configuration_sweep(sweeps, tmp_path, gate):
    rows, elapsed = sweeps
    out = tmp_path / "sweep.csv"
    t0 = time.perf_counter()
    code = main(["sweep", "--dims", "2,3,8,8", "--t-lo", "1e-8", "--t-hi", "1e-4", "--seed", "0",
                 "--out", str(out)])
    elapsed += time.perf_counter() - t0
    csv_rows = list(csv.DictReader(out.open()))
    counts = {s: len(r) for s, r in rows.items()}
    disagree = {s: sum(not x.agreement for x in r) for s, r in rows.items()}
    indeterminate = {s: sum(x.measured is None for x in r) for s, r in rows.items()}
    ok = (
        code == 0
        and len(csv_rows) == 4352
        and all(r["agreement"] == "true" for r in csv_rows)
        and all(c == 4352 for c in counts.values())
        and not any(disagree.values())
        and not any(indeterminate.values())
        and elapsed <= 600
    )
    gate(4, ok, f"rows {counts}, disagreements {disagree}, indeterminate {indeterminate}; {elapsed:.1f} s")


def test_c05_aliasing_probe(gate):
    t0 = time.perf_counter()
    maps = gen_maps((8, 16, 32, 32), 4, "white", 0)
    up_dims = (8, 16, 64, 64)
    raw = radial_psd([upsample2x_sinc(x) for x in maps])
    raw_energy = aliasing_energy(raw)
    ratios = {}
    for i, name in enumerate(("BatchNorm", "InstanceNorm", "LayerNorm-AF", "LayerNorm-C")):
        cfg = preset(name)
        params = init_params(cfg, up_dims, "gaussian", i)
        ratios[name] = aliasing_probe(cfg, params, maps).ratio
    elapsed = time.perf_counter() - t0
    ok = (
        all(ratios[n] <= 1e-10 for n in ("BatchNorm", "InstanceNorm", "LayerNorm-AF"))
        and ratios["LayerNorm-C"] >= 1e-6
        and raw_energy <= 1e-18
        and raw_energy / raw.total_energy <= 1e-18
        and elapsed <= 60
    )
    detail = ", ".join(f"{n}={r:.2e}" for n, r in ratios.items())
    gate(5, ok, f"{detail}, raw upsampled={raw_energy:.2e}; {elapsed:.1f} s")


def test_c06_integer_translation_is_shift(gate):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(200):
        x = rng.standard_normal((1, 1, 16, 16))
        g = (int(rng.integers(-64, 64)), int(rng.integers(-64, 64)))
        worst = max(worst, float(np.max(np.abs(translate2d(x, g) - shift2d(x, g)))))
    gate(6, worst <= 1e-12, f"max |translate2d - shift2d| = {worst:.2e} over 200 displacements")


def test_c07_kernel_oracle(gate):
    rng = np.random.default_rng(7)
    worst_conv = worst_unit = 0.0
    for _ in range(100):
        K = int(rng.integers(1, 33))
        g = float(rng.uniform(-2 * K, 2 * K))
        v = rng.standard_normal((K, int(rng.integers(1, 5))))
        diff = translate1d(v, g, complex_output=True) - translate_naive(v, g)
        worst_conv = max(worst_conv, float(np.max(np.abs(diff))))
        worst_unit = max(worst_unit, unitarity_check(v, g))
    gate(7, worst_conv <= 1e-12 and worst_unit <= 1e-11,
         f"FFT vs kernel {worst_conv:.2e}, unitarity {worst_unit:.2e} over 100 pairs")


def test_c08_counterexamples(gate):
    rng = np.random.default_rng(8)
    shift_ok = trans_ok = 0
    worst_shift = worst_trans = 0.0
    for i in range(50):
        K, D = int(rng.integers(2, 17)), int(rng.integers(2, 9))
        ce = appendixb_shift_counterexample(K, D, seed=i)
        dev = max(float(np.max(np.abs(ce.error[0] - ce.y[0]))),
                  float(np.max(np.abs(ce.error[ce.g] + ce.y[ce.g]))))
        worst_shift = max(worst_shift, dev)
        shift_ok += ce.support == {0, ce.g} and dev <= 1e-12 and ce.magnitude > 0

        K, D = int(rng.integers(2, 33)), int(rng.integers(2, 9))
        g = float(rng.uniform(-K, K))
        tc = appendixb_translation_counterexample(K, D, g, seed=i)
        mag = np.abs(tc.phi)
        dev = float(np.max(np.abs(tc.measured - tc.closed_form)))
        worst_trans = max(worst_trans, dev)
        trans_ok += bool(np.all((mag > 0) & (mag != 1))) and dev <= 1e-10 and np.max(np.abs(tc.measured)) > 0
    gate(8, shift_ok == 50 and trans_ok == 50,
         f"shift {shift_ok}/50 (worst {worst_shift:.1e}), translation {trans_ok}/50 (worst {worst_trans:.1e})")


def test_c09_centering_irrelevant(sweeps, gate):
    rows, _ = sweeps
    violations = 0
    for seed_rows in rows.values():
        groups = collections.defaultdict(list)
        for r in seed_rows:
            groups[(r.scale_axes, r.affine_axes)].append(r.measured)
        assert all(len(v) == 16 for v in groups.values())
        violations += sum(len(set(v)) != 1 for v in groups.values())
    gate(9, violations == 0, f"{violations} groups of 16 center variants with mixed classes")


def test_c10_determinism(tmp_path, gate):
    commands = {
        "gen": ["gen", "--dims", "2,3,8,8", "--n", "3", "--spectrum", "lowpass:0.3", "--seed", "4"],
        "measure": ["measure", "--synthetic", "2,4,8,8", "--trials", "16", "--seed", "4"],
        "spectrum": ["spectrum", "--synthetic", "2,4,8,8", "--n-maps", "2", "--seed", "4"],
        "sweep": ["sweep", "--dims", "2,3,8,8", "--seed", "4"],
    }
    mismatched = []
    for name, argv in commands.items():
        outputs = []
        for run in ("a", "b"):
            target = tmp_path / run / name
            if name == "gen":
                main(argv + ["--out", str(target)])
                files = sorted(target.iterdir())
            else:
                target.mkdir(parents=True)
                main(argv + ["--out", str(target / "out.csv")])
                files = [target / "out.csv", target / "out.json"]
            outputs.append([(f.name, f.read_bytes()) for f in files])
        if outputs[0] != outputs[1] or not outputs[0]:
            mismatched.append(name)
    gate(10, not mismatched, f"byte-identical reruns for {list(commands)}; mismatched {mismatched}")
