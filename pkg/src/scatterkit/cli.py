"""Command-line pipeline: image ingestion, batch feature extraction,
training, evaluation, and filter-bank diagnostics.

Exit codes: 0 success, 2 usage/parameter error, 3 data error, 4 format
error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .classifier import evaluate, read_model, train, write_model
from .conv_engine import Plane
from .errors import (DataError, FormatError, IngestionError, ParameterError)
from .features import (apply_standardizer, fit_standardizer, read_features,
                       read_standardizer, write_features, write_standardizer)
from .filterbank import littlewood_paley_scan, build_filter_bank
from .scattering import (ScatteringConfig, count_features, enumerate_paths,
                         get_transform, path_line)
from . import synthetic

IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff",
              ".ppm", ".pgm"}

_INT_KEYS = {"N", "J", "K1", "K2", "Q", "pool_window_log2",
             "output_stride_log2"}
_FLOAT_KEYS = {"sigma_phi"}
_STR_KEYS = {"j2_rule", "family", "pooling", "color"}
_SET_KEYS = {"j1_set", "l2_set"}
_MORLET_KEYS = {"sigma", "xi", "slant"}
_BOOL_KEYS = {"reflect_pad"}


def parse_config_text(text: str):
    """Flat `key = value` lines; `#` starts a comment; unknown keys are
    errors.  Returns (ScatteringConfig, ingestion options dict)."""
    from .filterbank import MorletParams

    kwargs, morlet, ingest = {}, {}, {"reflect_pad": False}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _STR_KEYS:
                kwargs[key] = value
            elif key in _SET_KEYS:
                items = [float(v) for v in value.split(",") if v.strip()]
                kwargs[key] = tuple(int(v) if v == int(v) else v for v in items)
            elif key in _MORLET_KEYS:
                morlet[key] = float(value)
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                ingest[key] = value.lower() in ("true", "1", "yes")
            else:
                raise ParameterError(
                    f"config line {lineno}: unknown key {key!r}")
        except ValueError:
            raise ParameterError(
                f"config line {lineno}: bad value {value!r} for {key!r}")
    if morlet:
        kwargs["morlet"] = MorletParams(**morlet)
    return ScatteringConfig(**kwargs), ingest


def load_config(path):
    if path is None:
        return ScatteringConfig(), {"reflect_pad": False}
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


# ---- ingestion ----

def bilinear_resize(img: np.ndarray, n: int) -> np.ndarray:
    """Separable bilinear resample to n x n; aspect ratio is not preserved.
    Sample positions follow the half-pixel convention, so equal sizes pass
    through unchanged."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[0] == n and img.shape[1] == n:
        return img

    def axis_coords(S):
        src = (np.arange(n) + 0.5) * (S / n) - 0.5
        src = np.clip(src, 0.0, S - 1.0)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, S - 1)
        return i0, i1, src - i0

    r0, r1, fr = axis_coords(img.shape[0])
    c0, c1, fc = axis_coords(img.shape[1])
    frw = fr.reshape(-1, *([1] * (img.ndim - 1)))
    tmp = img[r0] * (1 - frw) + img[r1] * frw
    fcw = fc.reshape(-1, *([1] * (img.ndim - 2)))
    return tmp[:, c0] * (1 - fcw) + tmp[:, c1] * fcw


def rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    """BT.601 full-range: stacks (..., 3) RGB into (..., 3) YUV."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 0.492 * (b - y)
    v = 0.877 * (r - y)
    return np.stack([y, u, v], axis=-1)


def _reflect_tile(a: np.ndarray) -> np.ndarray:
    return np.block([[a, a[:, ::-1]], [a[::-1, :], a[::-1, ::-1]]])


def load_and_resize(path, config: ScatteringConfig, reflect_pad: bool = False):
    """Decode, resize to the configured grid, map to [0, 1], and convert
    color.  With reflect_pad the image is resized to N/2 and mirror-tiled,
    which removes the wrap-around seam of periodic convolution."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise IngestionError(f"cannot decode {path}: {e}", filename=str(path))
    target = config.N // 2 if reflect_pad else config.N
    rgb = bilinear_resize(rgb, target)
    if config.color == "yuv":
        yuv = rgb_to_yuv(rgb)
        planes = [yuv[..., c] for c in range(3)]
    else:
        planes = [rgb_to_yuv(rgb)[..., 0]]
    if reflect_pad:
        planes = [_reflect_tile(p) for p in planes]
    planes = [Plane(p) for p in planes]
    return tuple(planes) if config.color == "yuv" else planes[0]


# ---- dataset handling ----

def scan_dataset(root):
    """Class subdirectories sorted lexicographically -> class indices;
    files sorted by name within each class."""
    classes = sorted(d for d in os.listdir(root)
                     if os.path.isdir(os.path.join(root, d)))
    if not classes:
        raise DataError(f"no class subdirectories under {root}")
    files = {}
    for c in classes:
        entries = sorted(
            f for f in os.listdir(os.path.join(root, c))
            if os.path.splitext(f)[1].lower() in IMAGE_EXTS)
        if not entries:
            raise DataError(f"class directory {c!r} contains no images")
        files[c] = [os.path.join(root, c, f) for f in entries]
    return classes, files


def split_dataset(classes, files, n_train, seed):
    """Per-class seeded shuffle; first n_train files train, the rest test.
    Depends only on (seed, sorted file names)."""
    rng = np.random.default_rng(seed)
    train_set, test_set = [], []
    for label, c in enumerate(classes):
        lst = files[c]
        if len(lst) < n_train + 1:
            raise DataError(
                f"class {c!r} has {len(lst)} images, needs >= {n_train + 1}")
        perm = rng.permutation(len(lst))
        train_set += [(lst[i], label) for i in perm[:n_train]]
        test_set += [(lst[i], label) for i in perm[n_train:]]
    return train_set, test_set


# ---- subcommands ----

def _extract_rows(pairs, config, ingest, threads, skip_bad):
    transform = get_transform(config)
    width = count_features(config)

    def worker(item):
        path, label = item
        try:
            x = load_and_resize(path, config, ingest["reflect_pad"])
        except IngestionError as e:
            return None, label, str(e)
        feats = transform.scatter(x)
        assert feats.values.shape[0] == width
        return feats.values.astype(np.float32), label, None

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        results = list(ex.map(worker, pairs))
    failures = [(pairs[i][0], msg) for i, (row, _, msg) in enumerate(results)
                if msg is not None]
    kept = [(row, label) for row, label, msg in results if msg is None]
    if failures:
        for path, msg in failures:
            print(f"ingestion failure: {msg}", file=sys.stderr)
        if not skip_bad:
            raise DataError(f"{len(failures)} input(s) failed to ingest "
                            f"(use --skip-bad to drop them)")
    matrix = np.zeros((len(kept), width), dtype=np.float32) if not kept else \
        np.stack([row for row, _ in kept])
    labels = np.array([label for _, label in kept], dtype=np.uint32)
    dt = time.perf_counter() - t0
    print(f"[extract] {matrix.shape[0]} rows x {width} features "
          f"in {dt:.1f} s ({max(1, threads)} threads)", file=sys.stderr)
    return matrix, labels


def cmd_extract(args):
    config, ingest = load_config(args.config)
    table = "\n".join(path_line(e) for e in enumerate_paths(config)) + "\n"
    if len(args.inputs) == 1 and os.path.isdir(args.inputs[0]):
        classes, files = scan_dataset(args.inputs[0])
        print(f"[extract] classes: {', '.join(classes)}", file=sys.stderr)
        if args.train_per_class is not None:
            train_set, test_set = split_dataset(classes, files,
                                                args.train_per_class, args.seed)
            stem, ext = os.path.splitext(args.output)
            for name, pairs in (("train", train_set), ("test", test_set)):
                matrix, labels = _extract_rows(pairs, config, ingest,
                                               args.threads, args.skip_bad)
                out = f"{stem}-{name}{ext or '.scf1'}"
                write_features(out, table, matrix, labels)
                print(f"[extract] wrote {out}", file=sys.stderr)
            return 0
        pairs = [(p, label) for label, c in enumerate(classes)
                 for p in files[c]]
        matrix, labels = _extract_rows(pairs, config, ingest, args.threads,
                                       args.skip_bad)
        write_features(args.output, table, matrix, labels)
    else:
        for p in args.inputs:
            if os.path.isdir(p):
                raise ParameterError(
                    "mixing directories and files is not supported")
        pairs = [(p, 0) for p in args.inputs]
        matrix, _ = _extract_rows(pairs, config, ingest, args.threads,
                                  args.skip_bad)
        write_features(args.output, table, matrix, None)
    print(f"[extract] wrote {args.output}", file=sys.stderr)
    return 0


def cmd_fit(args):
    _, X, labels = read_features(args.train)
    if labels is None:
        raise DataError(f"{args.train} carries no labels; cannot fit")
    std = fit_standardizer(X)
    if std.constant_columns.size:
        print(f"[fit] {std.constant_columns.size} constant feature(s) zeroed",
              file=sys.stderr)
    model = train(apply_standardizer(std, X), labels, C=args.C, seed=args.seed)
    write_standardizer(args.standardizer, std)
    write_model(args.model, model)
    print(f"[fit] {len(model.classes)} classes, dim {model.weights.shape[1]}, "
          f"C={model.C:g}, seed={model.seed}", file=sys.stderr)
    return 0


def cmd_eval(args):
    _, X, labels = read_features(args.test)
    if labels is None:
        raise DataError(f"{args.test} carries no labels; cannot evaluate")
    std = read_standardizer(args.standardizer)
    model = read_model(args.model)
    if std.mean.shape[0] != X.shape[1]:
        raise FormatError(f"feature width {X.shape[1]} != standardizer "
                          f"width {std.mean.shape[0]}")
    if model.weights.shape[1] != X.shape[1]:
        raise FormatError(f"feature width {X.shape[1]} != model "
                          f"width {model.weights.shape[1]}")
    ev = evaluate(model, apply_standardizer(std, X), labels)
    print(f"accuracy: {ev.accuracy:.4f}")
    print(f"mean per-class accuracy: {ev.mean_per_class_accuracy:.4f}")
    print("confusion matrix (rows = true, cols = predicted):")
    head = "      " + " ".join(f"{c:>6d}" for c in ev.classes)
    print(head)
    for i, c in enumerate(ev.classes):
        print(f"{c:>6d}" + " ".join(f"{v:>6d}" for v in ev.confusion[i]))
    return 0


def _fmt_freq(LP, flat_index):
    N = LP.shape[0]
    w = 2 * np.pi * np.fft.fftfreq(N)
    i, j = np.unravel_index(flat_index, LP.shape)
    return f"({w[i]:+.4f}, {w[j]:+.4f})"


def cmd_frame_check(args):
    config, _ = load_config(args.config)
    t0 = time.perf_counter()
    bank1, angular, bank2 = build_filter_bank(config)
    lines = []
    for name, bank in (("layer-1", bank1), ("layer-2", bank2)):
        A, B, LP = littlewood_paley_scan(bank)
        lines.append(f"{name} bank: A = {A:.6f}  B = {B:.12f}")
        lines.append(f"  min LP at omega = {_fmt_freq(LP, LP.argmin())}; "
                     f"max LP at omega = {_fmt_freq(LP, LP.argmax())}")
    if angular.psi_b:
        acc = np.abs(np.fft.fft(angular.phi_b)) ** 2
        for v in angular.psi_b.values():
            acc = acc + np.abs(np.fft.fft(v)) ** 2
        lines.append(f"angular bank: min = {acc.min():.6f}  "
                     f"max = {acc.max():.12f}")
    lines.append(f"build + scan time: {time.perf_counter() - t0:.2f} s")
    text = "\n".join(lines)
    print(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    if args.lp_image:
        from PIL import Image
        grids = []
        for bank in (bank1, bank2):
            _, _, LP = littlewood_paley_scan(bank)
            grids.append(np.fft.fftshift(LP))
        img = np.concatenate(grids, axis=1)
        img = np.round(255 * img / max(img.max(), 1e-30)).astype(np.uint8)
        Image.fromarray(img, mode="L").save(args.lp_image)
    return 0


def _save_gray(path, arr):
    from PIL import Image
    arr = np.asarray(arr, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    scaled = (arr - lo) / (hi - lo) if hi > lo else np.zeros_like(arr)
    Image.fromarray(np.round(255 * scaled).astype(np.uint8), mode="L").save(path)


def cmd_dump_filters(args):
    config, _ = load_config(args.config)
    bank1, angular, bank2 = build_filter_bank(config)
    os.makedirs(args.outdir, exist_ok=True)
    for name, bank in (("bank1", bank1), ("bank2", bank2)):
        for (j, k), psi in bank.psi.items():
            base = os.path.join(args.outdir, f"{name}_j{j:g}_k{k}")
            _save_gray(base + "_freq.png", np.fft.fftshift(np.abs(psi)))
            _save_gray(base + "_spatial.png",
                       np.fft.fftshift(np.fft.ifft2(psi).real))
        _save_gray(os.path.join(args.outdir, f"{name}_phi_freq.png"),
                   np.fft.fftshift(bank.phi))
    with open(os.path.join(args.outdir, "angular.txt"), "w",
              encoding="utf-8") as f:
        f.write(f"phi_b: {np.array2string(angular.phi_b, precision=8)}\n")
        for l2, v in angular.psi_b.items():
            f.write(f"psi_b[l2={l2}]: {np.array2string(v, precision=8)}\n")
    print(f"[dump-filters] wrote {args.outdir}", file=sys.stderr)
    return 0


def cmd_synth(args):
    classes = synthetic.generate_dataset(args.outdir, args.per_class,
                                         args.size, args.seed)
    print(f"[synth] {args.per_class} images per class under {args.outdir} "
          f"({', '.join(classes)})", file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="scatterkit",
        description="Wavelet-scattering feature extraction and linear "
                    "classification.")
    sub = p.add_subparsers(dest="command", required=True)

    px = sub.add_parser("extract", help="scatter images into an SCF1 file")
    px.add_argument("inputs", nargs="+",
                    help="a dataset directory (class subdirs) or image files")
    px.add_argument("--output", "-o", default="features.scf1")
    px.add_argument("--config", default=None)
    px.add_argument("--threads", type=int, default=1)
    px.add_argument("--seed", type=int, default=0, help="split seed")
    px.add_argument("--train-per-class", type=int, default=None,
                    help="write <output>-train/-test split instead")
    px.add_argument("--skip-bad", action="store_true",
                    help="drop undecodable images instead of failing")
    px.set_defaults(func=cmd_extract)

    pf = sub.add_parser("fit", help="fit standardizer + linear SVM")
    pf.add_argument("train", help="labeled SCF1 file")
    pf.add_argument("--model", required=True)
    pf.add_argument("--standardizer", required=True)
    pf.add_argument("--C", type=float, default=1.0)
    pf.add_argument("--seed", type=int, default=0)
    pf.set_defaults(func=cmd_fit)

    pe = sub.add_parser("eval", help="evaluate a model on a labeled SCF1 file")
    pe.add_argument("test")
    pe.add_argument("--model", required=True)
    pe.add_argument("--standardizer", required=True)
    pe.set_defaults(func=cmd_eval)

    pc = sub.add_parser("frame-check", help="Littlewood-Paley frame report")
    pc.add_argument("--config", default=None)
    pc.add_argument("--report", default=None)
    pc.add_argument("--lp-image", default=None)
    pc.set_defaults(func=cmd_frame_check)

    pd = sub.add_parser("dump-filters", help="write filters as images")
    pd.add_argument("outdir")
    pd.add_argument("--config", default=None)
    pd.set_defaults(func=cmd_dump_filters)

    ps = sub.add_parser("synth", help="generate the synthetic 4-class dataset")
    ps.add_argument("outdir")
    ps.add_argument("--per-class", type=int, default=200)
    ps.add_argument("--size", type=int, default=64)
    ps.add_argument("--seed", type=int, default=0)
    ps.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
