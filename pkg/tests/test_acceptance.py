"""Acceptance gate: one test per numbered criterion, each printing a
single PASS/FAIL line with the measured quantities.

Criteria 6 and 7 share one synthetic 4-class dataset (100 train / 100 test
per class, seed 0) through module-scoped fixtures; expect a few minutes.
"""

import os
import re
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

import scatterkit as sk
from scatterkit.cli import load_and_resize, main, scan_dataset, split_dataset
from scatterkit.conv_engine import subsample_filter
from scatterkit.scattering import stride_log2
from scatterkit.synthetic import generate_dataset

DESK = sk.ScatteringConfig(N=64)


def _report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_frame_health(capsys):
    t0 = time.perf_counter()
    rc = main(["frame-check"])
    dt = time.perf_counter() - t0
    out = capsys.readouterr().out
    vals = {m.group(1): (float(m.group(2)), float(m.group(3)))
            for m in re.finditer(r"(layer-\d) bank: A = ([\d.]+)\s+B = ([\d.]+)", out)}
    (A1, B1), (A2, B2) = vals["layer-1"], vals["layer-2"]
    ok = (rc == 0 and dt < 2.0
          and abs(B1 - 1) <= 1e-6 and abs(B2 - 1) <= 1e-6
          and A1 >= 0.5 and A2 >= 0.5)
    _report(capsys, 1, ok,
            f"A1={A1:.4f} A2={A2:.4f} B1={B1:.9f} B2={B2:.9f} "
            f"(need B in 1+-1e-6, A >= 0.5) in {dt:.2f}s (< 2s)")


def test_criterion_2_conv_oracles(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for size in (8, 16, 32):
        for t in range(20):
            rng = np.random.default_rng(size * 100 + t)
            x = sk.Plane(rng.standard_normal((size, size)))
            F = (rng.standard_normal((size, size))
                 + 1j * rng.standard_normal((size, size)))
            stride = int(rng.integers(0, 3))
            got = sk.conv2d_fft(x, F, stride).data
            want = sk.conv2d_direct(x, np.fft.ifft2(F), stride).data
            worst = max(worst, np.abs(got - want).max() / np.abs(want).max())

    # layer-2 single-path brute force on a 16x16, K1=8 instance
    cfg = sk.ScatteringConfig(N=16, J=2)
    tr = sk.get_transform(cfg)
    rng = np.random.default_rng(99)
    U1 = tr.layer1(sk.Plane(rng.random((16, 16))))
    U2 = tr.layer2(U1)
    j1, j2, k2 = 0, 1, 5
    s_in, s_out = U1.strides[j1], stride_log2(j2)
    kernel = np.fft.ifft2(subsample_filter(tr.bank2.psi[(j2, k2)], 1 << s_in))
    W = [sk.conv2d_direct(sk.Plane(U1.slices[j1][p]), kernel,
                          s_out - s_in).data for p in range(8)]
    worst2 = 0.0
    for band in (0, 1, 2, "avg"):
        filt = tr.angular.phi_b if band == "avg" else tr.angular.psi_b[band]
        Z = np.abs(np.stack([sum(W[p] * filt[(t1 - p) % 8] for p in range(8))
                             for t1 in range(8)]))
        got = U2.maps[(j1, j2, k2, band)]
        worst2 = max(worst2, np.abs(got - Z).max() / Z.max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and worst2 <= 1e-9 and dt < 30
    _report(capsys, 2, ok,
            f"fft-vs-direct max rel {worst:.2e} (<= 1e-10); layer-2 path "
            f"oracle {worst2:.2e} (<= 1e-9) in {dt:.1f}s (< 30s)")


def test_criterion_3_nonexpansive(capsys):
    t0 = time.perf_counter()
    tr = sk.get_transform(DESK)
    worst_lip, worst_en = 0.0, 0.0
    for t in range(50):
        rng = np.random.default_rng(3000 + t)
        x, y = rng.random((64, 64)), rng.random((64, 64))
        Sx = tr.scatter(sk.Plane(x)).values
        Sy = tr.scatter(sk.Plane(y)).values
        worst_lip = max(worst_lip,
                        np.linalg.norm(Sx - Sy) / np.linalg.norm(x - y))
        worst_en = max(worst_en,
                       np.linalg.norm(Sx) ** 2 / np.linalg.norm(x) ** 2)
    dt = time.perf_counter() - t0
    ok = worst_lip <= 1 + 1e-6 and worst_en <= 1 + 1e-6 and dt < 120
    _report(capsys, 3, ok,
            f"50 pairs: max ||Sx-Sy||/||x-y|| {worst_lip:.4f}, max "
            f"||Sx||^2/||x||^2 {worst_en:.4f} (<= 1+1e-6) in {dt:.1f}s (< 2min)")


def test_criterion_4_covariance(capsys):
    from scatterkit.conv_engine import rot90_periodic
    t0 = time.perf_counter()
    cfg = sk.ScatteringConfig()
    tr = sk.get_transform(cfg)
    rng = np.random.default_rng(44)
    x = rng.random((128, 128))

    f0 = tr.scatter(sk.Plane(x)).values.reshape(-1, 8, 8)
    worst = 0.0
    for cells in ((1, 0), (1, 2)):
        shift = (16 * cells[0], 16 * cells[1])
        f1 = tr.scatter(sk.Plane(np.roll(x, shift, (0, 1)))).values.reshape(-1, 8, 8)
        want = np.roll(f0, cells, axis=(1, 2))
        worst = max(worst, np.abs(f1 - want).max() / np.abs(f0).max())

    U1 = tr.layer1(sk.Plane(x))
    U1r = tr.layer1(sk.Plane(rot90_periodic(x)))
    worst_rot = 0.0
    for j1 in cfg.j1_set:
        for k in range(cfg.K1):
            want = rot90_periodic(U1.slices[j1][(k - 2) % cfg.K1])
            err = np.abs(U1r.slices[j1][k] - want).max() / want.max()
            worst_rot = max(worst_rot, err)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and worst_rot <= 1e-8 and dt < 60
    _report(capsys, 4, ok,
            f"shift permutation max rel {worst:.2e}, rot90 U1 permutation "
            f"max rel {worst_rot:.2e} (<= 1e-8) in {dt:.1f}s (< 1min)")


def test_criterion_5_invariance_trend(capsys):
    t0 = time.perf_counter()
    med = {}
    for J in (5, 3):
        tr = sk.get_transform(sk.ScatteringConfig(N=64, J=J))
        rels = []
        for i in range(20):
            rng = np.random.default_rng(5000 + i)
            x = rng.random((64, 64))
            S = tr.scatter(sk.Plane(x)).values
            Ss = tr.scatter(sk.Plane(np.roll(x, 8, axis=1))).values
            rels.append(np.linalg.norm(Ss - S) / np.linalg.norm(S))
        med[J] = float(np.median(rels))
    dt = time.perf_counter() - t0
    ok = med[5] <= 0.05 and med[5] < med[3]
    _report(capsys, 5, ok,
            f"median rel change under 8px shift: {med[5]:.4f} at 2^J=32 "
            f"(<= 0.05) vs {med[3]:.4f} at 2^J=8 (must be larger) in {dt:.1f}s")


# ---- shared desk dataset for criteria 6 and 7 ----

@pytest.fixture(scope="module")
def desk_sets(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    generate_dataset(root, n_per_class=200, N=64, seed=0)
    classes, files = scan_dataset(root)
    return split_dataset(classes, files, 100, seed=0)


def _extract(pairs, cfg):
    tr = sk.get_transform(cfg)

    def worker(item):
        return tr.scatter(load_and_resize(item[0], cfg)).values.astype(np.float32)

    with ThreadPoolExecutor(max_workers=4) as ex:
        rows = list(ex.map(worker, pairs))
    labels = np.array([l for _, l in pairs], dtype=np.uint32)
    return np.stack(rows), labels


def _accuracy(Xtr, ytr, Xte, yte):
    std = sk.fit_standardizer(Xtr)
    model = sk.train(sk.apply_standardizer(std, Xtr), ytr, C=1.0, seed=0)
    return sk.evaluate(model, sk.apply_standardizer(std, Xte), yte).accuracy


@pytest.fixture(scope="module")
def desk_avg_accuracy(desk_sets):
    train_set, test_set = desk_sets
    Xtr, ytr = _extract(train_set, DESK)
    Xte, yte = _extract(test_set, DESK)
    return _accuracy(Xtr, ytr, Xte, yte)


def test_criterion_6_desk_classification(capsys, desk_sets, desk_avg_accuracy):
    t0 = time.perf_counter()
    train_set, test_set = desk_sets

    def raw(pairs):
        X = np.stack([load_and_resize(p, DESK).data.ravel().astype(np.float32)
                      for p, _ in pairs])
        return X, np.array([l for _, l in pairs], dtype=np.uint32)

    Xtr, ytr = raw(train_set)
    Xte, yte = raw(test_set)
    acc_raw = _accuracy(Xtr, ytr, Xte, yte)
    acc_scatter = desk_avg_accuracy
    dt = time.perf_counter() - t0
    ok = acc_scatter >= acc_raw + 0.10
    _report(capsys, 6, ok,
            f"scattering {acc_scatter:.4f} vs raw pixels {acc_raw:.4f} "
            f"(need >= raw + 0.10); raw baseline took {dt:.1f}s")


def test_criterion_7_pooling_ablation(capsys, desk_sets, desk_avg_accuracy):
    t0 = time.perf_counter()
    train_set, test_set = desk_sets
    cfg = sk.ScatteringConfig(N=64, pooling="max", pool_window_log2=5)
    Xtr, ytr = _extract(train_set, cfg)
    Xte, yte = _extract(test_set, cfg)
    acc_max = _accuracy(Xtr, ytr, Xte, yte)
    dt = time.perf_counter() - t0
    ok = desk_avg_accuracy >= acc_max - 0.01
    _report(capsys, 7, ok,
            f"average pooling {desk_avg_accuracy:.4f} >= max pooling "
            f"{acc_max:.4f} - 0.01 in {dt:.1f}s")


def test_criterion_8_determinism_and_formats(capsys, tiny_dataset, tmp_path):
    t0 = time.perf_counter()
    cfg_file = tmp_path / "cfg.txt"
    cfg_file.write_text("N = 32\nJ = 3\n")

    blobs = {}
    for tag, threads in (("a", "1"), ("b", "8")):
        out = tmp_path / f"{tag}.scf1"
        assert main(["extract", str(tiny_dataset), "-o", str(out),
                     "--config", str(cfg_file), "--threads", threads]) == 0
        blobs[tag] = out.read_bytes()
    extract_ok = blobs["a"] == blobs["b"]

    fits, evals = [], []
    for run in range(2):
        model = tmp_path / f"m{run}.scm1"
        std = tmp_path / f"s{run}.scs1"
        assert main(["fit", str(tmp_path / "a.scf1"), "--model", str(model),
                     "--standardizer", str(std)]) == 0
        capsys.readouterr()
        assert main(["eval", str(tmp_path / "a.scf1"), "--model", str(model),
                     "--standardizer", str(std)]) == 0
        evals.append(capsys.readouterr().out)
        fits.append(model.read_bytes() + std.read_bytes())
    fit_ok = fits[0] == fits[1] and evals[0] == evals[1]

    roundtrip_ok = True
    for t in range(100):
        rng = np.random.default_rng(8000 + t)
        rows, width = int(rng.integers(0, 12)), int(rng.integers(1, 16))
        X = (rng.standard_normal((rows, width)) *
             10.0 ** rng.integers(-30, 31)).astype(np.float32)
        labels = (rng.integers(0, 4, rows).astype(np.uint32)
                  if rng.integers(0, 2) else None)
        p = tmp_path / "r.scf1"
        sk.write_features(p, f"t{t}\n", X, labels)
        _, X2, l2 = sk.read_features(p)
        roundtrip_ok &= np.array_equal(X, X2)
        roundtrip_ok &= (l2 is None) if labels is None else np.array_equal(labels, l2)

        k = int(rng.integers(2, 6))
        model = sk.LinearModel(
            weights=rng.standard_normal((k, width)),
            biases=rng.standard_normal(k),
            classes=np.arange(k, dtype=np.uint32),
            C=float(rng.uniform(0.01, 10)), seed=int(rng.integers(0, 100)))
        pm = tmp_path / "r.scm1"
        sk.write_model(pm, model)
        m2 = sk.read_model(pm)
        roundtrip_ok &= np.array_equal(model.weights, m2.weights)
        roundtrip_ok &= np.array_equal(model.biases, m2.biases)
        roundtrip_ok &= model.C == m2.C and model.seed == m2.seed
    dt = time.perf_counter() - t0
    ok = extract_ok and fit_ok and roundtrip_ok
    _report(capsys, 8, ok,
            f"extract threads 1/8 bit-identical: {extract_ok}; fit/eval "
            f"rerun identical: {fit_ok}; 100 SCF1/SCM1 round-trips bit-exact: "
            f"{roundtrip_ok} in {dt:.1f}s")


def test_criterion_9_fullscale_recipe_documented(capsys):
    readme = os.path.join(os.path.dirname(__file__), "..", "README.md")
    text = open(readme, encoding="utf-8").read()
    ok = ("Caltech-101" in text and "30" in text and "60" in text
          and "N = 128" in text)
    _report(capsys, 9, ok,
            "full-scale recipe (Caltech-101, 30/60 train per class, N=128 "
            "config) documented in README; not an accuracy gate")
