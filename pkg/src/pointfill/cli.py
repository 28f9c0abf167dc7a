"""Command-line interface.

Every command prints one result block of ``key=value`` lines on stdout;
diagnostics go to stderr. Exit codes: 0 success, 1 usage error, 2 data or
parse error, 3 numeric/validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from pointfill import emd as _emd
from pointfill import metrics, parallel
from pointfill.config import ConfigError, ModelConfig, default_config, load_config
from pointfill.io import FormatError, format_pcf, read_cloud, read_weights, write_cloud, write_weights
from pointfill.nn import ssm
from pointfill.nn.weights import init_weights
from pointfill.pca import decompose
from pointfill.pipeline import complete, dump_stages
from pointfill.synth import SHAPES, crop_viewpoint, synth_shape

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVALID = 3

CLOUD_SUFFIXES = (".xyz", ".pcf", ".txt")

OUTPUT_NOTE = (
    "Output: one block of key=value lines on stdout, diagnostics on stderr. "
    "Exit codes: 0 ok, 1 usage, 2 data/parse error, 3 numeric/validation failure. "
    "Clouds are read and written as .xyz (text) or .pcf (PCF1 binary) by suffix."
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        print(f"{key}={value}")


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _config_arg(text: str) -> ModelConfig:
    if text in ("desk", "full"):
        return default_config(text)
    return load_config(text)


def _cloud_files(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"{d}: not a directory")
    return sorted((p for p in d.iterdir() if p.suffix.lower() in CLOUD_SUFFIXES), key=lambda p: p.name)


def cmd_decompose(args) -> list:
    cloud = read_cloud(args.input)
    dec = decompose(cloud, args.subsets, "random" if args.strategy == "random" else "pca_uniform", args.seed)
    suffix = "." + args.format if args.format else Path(args.input).suffix
    out = [("strategy", dec.strategy), ("subsets", len(dec.subsets)), ("points", len(cloud))]
    for i, sub in enumerate(dec.subsets, start=1):
        path = Path(f"{args.out_prefix}_{i}{suffix}")
        write_cloud(path, sub)
        out += [(f"size_{i}", len(sub)), (f"file_{i}", str(path))]
    return out


def cmd_metrics(args) -> list:
    pred = read_cloud(args.pred)
    gt = read_cloud(args.gt)
    if args.normalize == "unit-sphere":
        gt_n = metrics.as_cloud(gt, "gt")
        center = gt_n.mean(axis=0)
        radius = float(np.sqrt(((gt_n - center) ** 2).sum(axis=1)).max()) or 1.0
        pred = (metrics.as_cloud(pred, "pred") - center) / radius
        gt = (gt_n - center) / radius
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    report = metrics.evaluate(pred, gt, which, tau=args.tau, alpha=args.alpha)
    out = [(v.name, v.value) for v in report.values]
    for v in report.values:
        out.append((f"convention.{v.name}", v.convention))
        out.extend((f"param.{v.name}.{k}", p) for k, p in v.params.items())
    out.append(("normalize", args.normalize))
    return out


def cmd_complete(args) -> list:
    cfg = _config_arg(args.config)
    weights = read_weights(args.weights, cfg)
    cloud = read_cloud(args.input)
    result = complete(cloud, cfg, weights, keep_stages=bool(args.dump_stages))
    write_cloud(args.out, result.output)
    out = [("points", len(result.output)), ("seeds", len(result.seeds)), ("heads", len(result.parts)),
           ("out", args.out), ("output_sha256", _sha256(format_pcf(result.output)))]
    if args.dump_stages:
        files = dump_stages(result, args.dump_stages)
        out += [("stages_dir", args.dump_stages), ("stage_files", len(files))]
    return out


def cmd_synth(args) -> list:
    cloud = synth_shape(args.shape, args.points, args.seed)
    out = [("shape", args.shape), ("seed", args.seed)]
    if args.crop_fraction is not None:
        vp = _floats(args.viewpoint, 3) if args.viewpoint else None
        cloud, missing = crop_viewpoint(cloud, args.crop_fraction, args.seed, viewpoint=vp)
        out += [("crop_fraction", args.crop_fraction), ("removed", len(missing))]
        if args.missing_out:
            write_cloud(args.missing_out, missing)
            out.append(("missing_out", args.missing_out))
    elif args.viewpoint:
        raise UsageError("--viewpoint requires --crop-fraction")
    write_cloud(args.out, cloud)
    out += [("points", len(cloud)), ("out", args.out)]
    return out


def cmd_uniformity(args) -> list:
    cloud = read_cloud(args.input)
    if args.normalize == "unit-sphere":
        cloud = metrics.normalize_unit_sphere(cloud)
    out = [("points", len(cloud)), ("seeds", args.seeds), ("normalize", args.normalize)]
    for p in _floats(args.p):
        out.append((f"uniformity_p{p!r}", metrics.uniformity(cloud, p, args.seeds)))
    return out


def cmd_sequence_metrics(args) -> list:
    files = _cloud_files(args.dir)
    frames = [read_cloud(f) for f in files]
    return [("frames", len(frames)), ("consistency", metrics.consistency(frames))]


def cmd_mmd(args) -> list:
    output = read_cloud(args.output)
    files = _cloud_files(args.reference_dir)
    if not files:
        raise ValueError("empty reference set")
    values = [metrics.chamfer(output, read_cloud(f)).cd_l1 for f in files]
    best = int(np.argmin(values))
    return [("references", len(files)), ("mmd", float(values[best])), ("best_reference", files[best].name)]


def cmd_bench_scan(args) -> list:
    if args.length < 1 or args.channels < 1 or args.runs < 1 or args.state < 1:
        raise UsageError("--length, --channels, --runs and --state must be >= 1")
    rng = np.random.default_rng(args.seed)
    times = {"sequential": [], "parallel": []}
    worst = 0.0
    for _ in range(args.runs):
        params = ssm.random_params(args.length, args.channels, args.state, rng)
        x = rng.normal(size=(args.length, args.channels))
        res = {}
        for mode in ("sequential", "parallel"):
            t0 = time.perf_counter()
            res[mode] = ssm.ssm_scan(params, x, mode)
            times[mode].append(time.perf_counter() - t0)
        ref = res["sequential"]
        rel = np.abs(res["parallel"] - ref) / np.maximum(np.abs(ref), np.finfo(float).tiny)
        worst = max(worst, float(rel.max()))
    out = [("length", args.length), ("channels", args.channels), ("state", args.state), ("runs", args.runs)]
    for mode, ts in times.items():
        out += [(f"{mode}_mean_s", float(np.mean(ts))), (f"{mode}_min_s", float(np.min(ts)))]
    out += [("max_rel_diff", worst), ("tolerance", 1e-5), ("within_tolerance", worst <= 1e-5)]
    if worst > 1e-5:
        raise ArithmeticError(f"parallel scan deviates from sequential oracle: {worst:.3e}", out)
    return out


def cmd_init_weights(args) -> list:
    cfg = _config_arg(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    store = init_weights(cfg, seed)
    write_weights(args.out, store)
    data = Path(args.out).read_bytes()
    return [("tensors", len(store)), ("parameters", int(sum(v.size for v in store.values()))),
            ("seed", seed), ("out", args.out), ("sha256", _sha256(data))]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pointfill", description="Point cloud completion toolkit.", epilog=OUTPUT_NOTE)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("decompose", help="split a cloud into U interleaved subsets", epilog=OUTPUT_NOTE)
    p.add_argument("--input", required=True)
    p.add_argument("--subsets", type=int, required=True)
    p.add_argument("--strategy", choices=["pca", "random"], default="pca")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--format", choices=["xyz", "pcf"], help="output format (default: input's)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("metrics", help="paired metrics between prediction and ground truth", epilog=OUTPUT_NOTE)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--which", default="cd,dcd,emd,fscore")
    p.add_argument("--tau", type=float, default=metrics.DEFAULT_TAU)
    p.add_argument("--alpha", type=float, default=metrics.DEFAULT_ALPHA)
    p.add_argument("--normalize", choices=["unit-sphere", "none"], default="none",
                   help="unit-sphere: centre/scale both clouds by the GT's centroid and radius")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("complete", help="run the forward pass", epilog=OUTPUT_NOTE)
    p.add_argument("--input", required=True)
    p.add_argument("--config", required=True, help="JSON config file, or 'desk' / 'full'")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-stages", metavar="DIR")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("synth", help="sample a synthetic shape, optionally cropped", epilog=OUTPUT_NOTE)
    p.add_argument("--shape", choices=SHAPES, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--crop-fraction", type=float)
    p.add_argument("--viewpoint", help="x,y,z; default is a seeded random direction")
    p.add_argument("--missing-out", help="also write the removed points here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("uniformity", help="Uniformity metric at one or more p", epilog=OUTPUT_NOTE)
    p.add_argument("--input", required=True)
    p.add_argument("--p", required=True, help="comma-separated list, e.g. 0.004,0.006,0.008")
    p.add_argument("--seeds", type=int, default=1000, help="number of FPS seeds M")
    p.add_argument("--normalize", choices=["unit-sphere", "none"], default="none")
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("sequence-metrics", help="Consistency over files in a directory", epilog=OUTPUT_NOTE)
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_sequence_metrics)

    p = sub.add_parser("mmd", help="minimal matching distance to a reference set", epilog=OUTPUT_NOTE)
    p.add_argument("--output", required=True)
    p.add_argument("--reference-dir", required=True)
    p.set_defaults(func=cmd_mmd)

    p = sub.add_parser("bench", help="micro-benchmarks", epilog=OUTPUT_NOTE)
    bench = p.add_subparsers(dest="bench_command", parser_class=_Parser)
    b = bench.add_parser("scan", help="parallel vs sequential SSM scan", epilog=OUTPUT_NOTE)
    b.add_argument("--length", type=int, default=4096)
    b.add_argument("--channels", type=int, default=64)
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--state", type=int, default=8)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench_scan)

    p = sub.add_parser("init-weights", help="write seeded initial weights", epilog=OUTPUT_NOTE)
    p.add_argument("--config", required=True, help="JSON config file, or 'desk' / 'full'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_weights)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser.format_usage().strip())
        parallel.thread_count()
        _emit(args.func(args))
        return EXIT_OK
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except (FormatError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArithmeticError as exc:
        msg, *rest = exc.args
        if rest:
            _emit(rest[0])
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
