"""Command-line interface: ``schrotex <command> [flags]``.

Every flag may also come from a JSON file given with ``--config``; flags on
the command line take precedence over the file.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .classify import cross_validate
from .data import (
    GAUSSIAN_LEVELS,
    SALT_PEPPER_LEVELS,
    add_noise,
    load_dataset,
    scan_dataset,
    synth_texture_dataset,
    write_dataset,
)
from .features import DEFAULT_BINS, GRID_STEPS, build_descriptor, t_grid
from .imageio import ImageReadError, clip_to_byte, load_grey_image, scale_to_byte, write_pgm
from .transform import InvalidParameterError, transform_1d, transform_2d, transform_frequency

DEFAULT_R = 6
DEFAULT_M = 5
DEFAULT_FOLDS = 10
DEFAULT_SEED = 0
DEFAULT_PCA_VARIANCE = 0.95
DEFAULT_R_LIST = (2, 4, 6, 8, 10, 12, 14, 16, 18, 20)
DEFAULT_M_LIST = (5, 10, 15, 20)


class CliError(Exception):
    pass


# -- helpers -----------------------------------------------------------------

@contextlib.contextmanager
def atomic_output(path):
    """Yield a temporary path that replaces ``path`` only if the block succeeds."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    os.close(fd)
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp, 0o666 & ~umask)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _int_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def demo_signal(length: int = 600, seed: int = 0) -> np.ndarray:
    """Test profile: a smooth sinusoid, then a random stretch, then a square wave."""
    rng = np.random.default_rng(seed)
    third = length // 3
    x = np.arange(third)
    sinusoid = 128 + 100 * np.sin(2 * np.pi * x / 50)
    noise = rng.uniform(0, 255, size=third)
    rest = length - 2 * third
    square = np.where((np.arange(rest) // 25) % 2 == 0, 200.0, 50.0)
    return np.concatenate([sinusoid, noise, square])


def _read_signal_csv(path) -> np.ndarray:
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            for cell in row:
                cell = cell.strip()
                if cell:
                    values.append(float(cell))
    if not values:
        raise CliError(f"{path}: no samples found")
    return np.array(values)


def _write_column_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        for v in np.ravel(values):
            fh.write(_fmt(v) + "\n")


def _write_matrix_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        for row in np.atleast_2d(values):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _descriptor_job(args):
    image, r, moments, ts, bins = args
    if isinstance(image, str):
        image = load_grey_image(image)
    return build_descriptor(image, r, moments, ts, bins)


def extract_features(images, r, moments, ts, bins=DEFAULT_BINS, jobs=1) -> np.ndarray:
    """Descriptors for a list of images or image paths, in input order."""
    tasks = [(im, r, moments, ts, bins) for im in images]
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_descriptor_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_descriptor_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return np.array(rows).reshape(len(tasks), -1)


def _t_values(args) -> np.ndarray:
    return t_grid(args.t_step, args.t_count)


def _dataset(root):
    index = scan_dataset(root)
    if len(index) == 0:
        raise CliError(f"no images found under {root}")
    return index


def write_features_csv(path, index, features) -> None:
    with atomic_output(path) as tmp, open(tmp, "w", newline="") as fh:
        n = features.shape[1]
        fh.write(",".join(["path", "label"] + [f"v{i}" for i in range(1, n + 1)]) + "\n")
        for (rel, label), row in zip(index.entries, features):
            fh.write(",".join([rel, label] + [_fmt(v) for v in row]) + "\n")


def read_features_csv(path):
    """Return ``(paths, labels, X)`` sorted by (label, path)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["path", "label"]:
            raise CliError(f"{path}: expected a header starting with path,label")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CliError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise CliError(f"{path}:{lineno}: {exc}") from exc
            rows.append((row[1], row[0], values))
    if not rows:
        raise CliError(f"{path}: no feature rows")
    rows.sort(key=lambda r: (r[0], r[1]))
    labels = np.array([r[0] for r in rows])
    paths = [r[1] for r in rows]
    return paths, labels, np.array([r[2] for r in rows], dtype=np.float64)


def _confusion_pgm(confusion) -> np.ndarray:
    conf = np.asarray(confusion, dtype=np.float64)
    totals = conf.sum(axis=1, keepdims=True)
    norm = np.divide(conf, totals, out=np.zeros_like(conf), where=totals > 0)
    return clip_to_byte(norm * 255.0)


def write_report(path, report) -> None:
    """Write the JSON report plus ``<stem>.confusion.csv`` and ``<stem>.confusion.pgm``.

    Nothing is replaced unless all three files were written.
    """
    path = Path(path)
    stem = path.with_suffix("")
    with contextlib.ExitStack() as stack:
        tmp_json = stack.enter_context(atomic_output(path))
        tmp_csv = stack.enter_context(atomic_output(f"{stem}.confusion.csv"))
        tmp_pgm = stack.enter_context(atomic_output(f"{stem}.confusion.pgm"))
        Path(tmp_json).write_text(report.to_json() + "\n")
        with open(tmp_csv, "w", newline="") as fh:
            fh.write(",".join(["true\\predicted"] + report.classes) + "\n")
            for label, row in zip(report.classes, report.confusion):
                fh.write(",".join([label] + [str(int(v)) for v in row]) + "\n")
        write_pgm(tmp_pgm, _confusion_pgm(report.confusion))


def _classify(X, labels, args, extra=None):
    report = cross_validate(
        X, labels, k=args.folds, seed=args.seed, variance_target=args.pca_variance
    )
    if extra:
        report.params.update(extra)
    return report


def noise_level_seed(seed: int, index: int) -> int:
    """Seed for the ``index``-th noise level: ``seed XOR index``."""
    return int(seed) ^ int(index)


def noisy_copies(images, kind, level, level_seed):
    # image j of a level draws from SeedSequence([level_seed, j])
    return [
        add_noise(im, kind, level, np.random.SeedSequence([level_seed, j]))
        for j, im in enumerate(images)
    ]


# -- commands ----------------------------------------------------------------

def cmd_transform(args) -> int:
    if args.demo:
        data = demo_signal(seed=args.seed)
    elif args.input is None:
        raise CliError("give an input image/CSV signal or --demo")
    elif str(args.input).lower().endswith(".csv"):
        data = _read_signal_csv(args.input)
    else:
        data = load_grey_image(args.input)

    if data.ndim == 1:
        if args.mode == "spatial":
            field = transform_1d(data, args.t, args.r)
        else:
            field = transform_frequency(data[None, :], args.t, args.k)[0]
    elif args.mode == "spatial":
        field = transform_2d(data, args.t, args.r)
    else:
        field = transform_frequency(data, args.t, args.k)

    out = args.out
    with atomic_output(out) as tmp:
        if field.ndim == 1:
            _write_column_csv(tmp, field)
        elif str(out).lower().endswith(".csv"):
            _write_matrix_csv(tmp, field)
        else:
            scaled = scale_to_byte(field) if args.scaling == "minmax" else clip_to_byte(field)
            write_pgm(tmp, scaled)
    return 0


def cmd_features(args) -> int:
    index = _dataset(args.dataset)
    paths = [index.full_path(i) for i in range(len(index))]
    X = extract_features(paths, args.r, args.moments, _t_values(args), args.bins, args.jobs)
    write_features_csv(args.out, index, X)
    print(f"wrote {X.shape[0]} descriptors of length {X.shape[1]} to {args.out}")
    return 0


def cmd_classify(args) -> int:
    _, labels, X = read_features_csv(args.features)
    report = _classify(X, labels, args, {"features": os.path.basename(args.features)})
    write_report(args.out, report)
    print(f"success rate {report.summary()}")
    return 0


def cmd_grid(args) -> int:
    index = _dataset(args.dataset)
    images = load_dataset(index)
    labels = np.array([label for _, label in index.entries])
    r_list = sorted(set(_int_list(args.r_list)))
    m_list = sorted(set(_int_list(args.m_list)))
    ts = _t_values(args)
    m_max = max(m_list)
    table = []
    for r in r_list:
        full = extract_features(images, r, m_max, ts, args.bins, args.jobs)
        per_t = full.reshape(len(images), ts.size, m_max)
        row = []
        for m in m_list:
            X = per_t[:, :, :m].reshape(len(images), -1)
            rate = _classify(X, labels, args).success_rate
            row.append(rate)
            print(f"r={r} M={m}: {rate:.2f}")
        table.append(row)
    with atomic_output(args.out) as tmp, open(tmp, "w", newline="") as fh:
        fh.write(",".join(["r"] + [f"M={m}" for m in m_list]) + "\n")
        for r, row in zip(r_list, table):
            fh.write(",".join([str(r)] + [_fmt(v) for v in row]) + "\n")
    return 0


def cmd_noise_sweep(args) -> int:
    index = _dataset(args.dataset)
    images = load_dataset(index)
    labels = np.array([label for _, label in index.entries])
    levels = _float_list(args.levels) if args.levels is not None else (
        list(GAUSSIAN_LEVELS) if args.noise == "gaussian" else list(SALT_PEPPER_LEVELS)
    )
    ts = _t_values(args)
    rows = []
    for i, level in enumerate(levels):
        level_seed = noise_level_seed(args.seed, i)
        noisy = noisy_copies(images, args.noise, level, level_seed)
        X = extract_features(noisy, args.r, args.moments, ts, args.bins, args.jobs)
        report = _classify(X, labels, args)
        rows.append((level, report.success_rate, report.deviation, level_seed))
        print(f"{args.noise} level {level:g}: {report.summary()}")
    with atomic_output(args.out) as tmp, open(tmp, "w", newline="") as fh:
        fh.write("level,success_rate,deviation,noise_seed\n")
        for level, rate, dev, s in rows:
            fh.write(f"{_fmt(level)},{_fmt(rate)},{_fmt(dev)},{s}\n")
    return 0


def cmd_synth(args) -> int:
    index, images = synth_texture_dataset(args.classes, args.per_class, args.size, args.seed)
    index = write_dataset(args.out, index, images)
    index.to_csv(Path(args.out) / "index.csv")
    print(f"wrote {len(index)} images in {len(index.classes)} classes to {args.out}")
    return 0


# -- parser ------------------------------------------------------------------

def _add_descriptor_flags(p):
    p.add_argument("--r", type=int, default=DEFAULT_R, help="kernel radius r in pixels (default %(default)s)")
    p.add_argument("--moments", type=int, default=DEFAULT_M, help="number M of central moments per t (default %(default)s)")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins per transform (default %(default)s)")
    p.add_argument("--t-step", type=float, default=1e-6, help="t-grid spacing; t_i = i * step (dimensionless, default %(default)s)")
    p.add_argument("--t-count", type=int, default=GRID_STEPS, help="number of t values (default %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for feature extraction (default %(default)s)")


def _add_classify_flags(p):
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS, help="cross-validation folds k (default %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed for fold shuffling and noise (default %(default)s)")
    p.add_argument("--pca-variance", type=float, default=DEFAULT_PCA_VARIANCE,
                   help="cumulative explained-variance fraction kept by PCA, in (0, 1] (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schrotex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON file supplying default values for any flag")
        p.set_defaults(func=func)
        return p

    p = add("transform", cmd_transform, "transform an image (PGM/PNG) or a 1D CSV signal")
    p.add_argument("input", nargs="?", help="input image or CSV signal")
    p.add_argument("--demo", action="store_true", help="use the built-in sinusoid/random/square test signal")
    p.add_argument("--t", type=float, default=1e-5, help="transform parameter t (dimensionless, >= 0, default %(default)s)")
    p.add_argument("--r", type=int, default=DEFAULT_R, help="kernel radius r in pixels/samples (spatial mode, default %(default)s)")
    p.add_argument("--k", type=float, default=1.0, help="frequency-mode constant k (dimensionless, default %(default)s)")
    p.add_argument("--mode", choices=("spatial", "frequency"), default="spatial", help="transform route (default %(default)s)")
    p.add_argument("--scaling", choices=("minmax", "clip"), default="minmax",
                   help="PGM output: min-max stretch to 0..255 or round and clip raw values (default %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the demo signal's random stretch (default %(default)s)")
    p.add_argument("--out", required=True, help="output path: .pgm image, or .csv raw values")

    p = add("features", cmd_features, "extract descriptors for a <root>/<class>/<image> dataset")
    p.add_argument("dataset", help="dataset root directory")
    _add_descriptor_flags(p)
    p.add_argument("--out", required=True, help="output CSV: path,label,v1..v(100*M)")

    p = add("classify", cmd_classify, "PCA + LDA k-fold cross-validation of a features CSV")
    p.add_argument("features", help="features CSV written by 'features'")
    _add_classify_flags(p)
    p.add_argument("--out", required=True, help="report JSON; confusion CSV/PGM are written next to it")

    p = add("grid", cmd_grid, "success rates over an (r, M) grid")
    p.add_argument("dataset", help="dataset root directory")
    _add_descriptor_flags(p)
    _add_classify_flags(p)
    p.add_argument("--r-list", default=",".join(map(str, DEFAULT_R_LIST)), help="comma-separated kernel radii in pixels")
    p.add_argument("--m-list", default=",".join(map(str, DEFAULT_M_LIST)), help="comma-separated moment counts")
    p.add_argument("--out", required=True, help="output CSV with one row per r")

    p = add("noise-sweep", cmd_noise_sweep, "success rate as noise increases")
    p.add_argument("dataset", help="dataset root directory")
    _add_descriptor_flags(p)
    _add_classify_flags(p)
    p.add_argument("--noise", choices=("gaussian", "salt_pepper"), default="salt_pepper",
                   help="noise kind (default %(default)s)")
    p.add_argument("--levels", default=None,
                   help="comma-separated levels: gaussian sigma in grey levels, or salt_pepper pixel probability in [0, 1]")
    p.add_argument("--out", required=True, help="output CSV: level,success_rate,deviation,noise_seed")

    p = add("synth", cmd_synth, "write a synthetic texture dataset as PGM files")
    p.add_argument("--classes", type=int, default=4, help="number of classes (default %(default)s)")
    p.add_argument("--per-class", type=int, default=25, help="images per class (default %(default)s)")
    p.add_argument("--size", type=int, default=128, help="image side in pixels (default %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="generator seed (default %(default)s)")
    p.add_argument("--out", required=True, help="output dataset root directory")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    # required options are checked after merging the config file
    required = {}
    for name, sp in subparsers.items():
        required[name] = [a for a in sp._actions if a.option_strings and a.required]
        for action in required[name]:
            action.required = False
            action.help = f"{action.help} (required; may come from --config)"
    args = parser.parse_args(argv)
    subparser = subparsers[args.command]
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise CliError(f"{args.config}: expected a JSON object")
        known = {a.dest for a in subparser._actions}
        defaults = {}
        for key, value in config.items():
            dest = key.lstrip("-").replace("-", "_")
            if dest not in known or dest in ("config", "help", "func"):
                raise CliError(f"{args.config}: unknown option {key!r} for '{args.command}'")
            defaults[dest] = value
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    missing = [a.option_strings[0] for a in required[args.command] if getattr(args, a.dest) is None]
    if missing:
        subparser.error(f"the following arguments are required: {', '.join(missing)}")
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except (CliError, InvalidParameterError, ImageReadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
