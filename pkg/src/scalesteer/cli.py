"""Command-line entry point: ``scalesteer <command> [options]``.

Commands
--------
synth      generate disk scenes with ground truth
detect     run the detector (or the LoG baseline) on images
eval       match detections to ground truth and report metrics
quality    sweep the pseudo-dilation quality metric over one period
calibrate  fit radius tables on a noiseless sweep and report closed-loop error
steer      compare steered coefficients with direct re-analysis

Options may also come from a key=value file given with ``--config``; names
are the long flag names without dashes (``bg_std = 2``). Flags on the
command line win over the file, the file over built-in defaults. The
default thread count is read from ``SCALESTEER_THREADS``.

Exit status: 0 on success, 2 on bad input or usage, 1 on internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as sio
from .complex_channel import ComplexWaveletSpec, calibrate_phase_radius, phase_radius
from .detector import DetectorConfig, calibrate_steered_radius, detect, steered_radius
from .evalkit import evaluate, log_baseline, rows_to_csv, summarize, svg_line_plot
from .frame import MeyerProfile, analyze, build_filter_bank, max_scales
from .multipliers import (DEFAULT_EPS_PRIME, MultiplierBank, bspline_spec, quality_sweep,
                          steer_pyramid)
from .simdata import GroundTruthScene, gen_scene, radius_sweep

THREADS_ENV = "SCALESTEER_THREADS"
CORPUS_FIELDS = ("image", "truth", "bg_std")


class UsageError(Exception):
    """Bad input: reported with exit status 2."""


# ---------------------------------------------------------------------------
# helpers


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _range_spec(text):
    """``start:stop:step`` inclusive of stop, or a comma list."""
    if ":" not in str(text):
        return _float_list(text)
    try:
        a, b, h = (float(v) for v in str(text).split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    if h <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    n = int(np.floor((b - a) / h + 1e-9)) + 1
    return [round(a + i * h, 10) for i in range(n)]


def _opt_int(text):
    return None if str(text).lower() in ("", "none") else int(text)


def _threads(args) -> int:
    n = args.threads
    if n is None:
        n = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(n))


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_manifest(out_dir: Path, command: str, args, extra=None) -> Path:
    """Record the resolved configuration; rerunning from it reproduces the outputs."""
    cfg = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func",)}
    man = {"tool": "scalesteer", "version": __version__, "command": command, "config": cfg}
    if extra:
        man.update(extra)
    path = Path(out_dir) / f"manifest_{command}.json"
    path.write_text(json.dumps(man, indent=1, sort_keys=True) + "\n")
    return path


def _log(args, msg):
    if args.verbose:
        print(msg, file=sys.stderr)


def _read_corpus(path: Path):
    if not path.is_file():
        raise UsageError(f"corpus file not found: {path}")
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    base = path.parent
    return [(base / r["image"], base / r["truth"], float(r["bg_std"])) for r in rows]


def _load_scene(path: Path) -> GroundTruthScene:
    if not path.is_file():
        raise UsageError(f"ground-truth file not found: {path}")
    try:
        return GroundTruthScene.from_dict(json.loads(path.read_text()))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: malformed ground truth ({exc})") from exc


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for bg in args.bg_std:
        for k in range(args.count):
            seed = args.seed + k
            scene, img = gen_scene(seed, args.size, args.disks, (args.radius_min, args.radius_max),
                                   args.overlap, bg, args.bg_exponent, args.amplitude)
            stem = f"scene_bg{bg:g}_seed{seed}"
            sio.write_image(out / f"{stem}.{args.format}", img)
            (out / f"{stem}.json").write_text(json.dumps(scene.to_dict(), indent=1) + "\n")
            rows.append((f"{stem}.{args.format}", f"{stem}.json", f"{bg:g}"))
            _log(args, f"wrote {stem}")
    with open(out / "corpus.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CORPUS_FIELDS)
        w.writerows(rows)
    write_manifest(out, "synth", args)
    print(f"{len(rows)} scene(s) in {out}")
    return 0


# ---------------------------------------------------------------------------
# detect


def detector_config(args) -> DetectorConfig:
    rr = None
    if args.radius_min is not None or args.radius_max is not None:
        rr = (args.radius_min or 1e-9, args.radius_max or float("inf"))
    scales = None if args.scales is None else tuple(int(v) for v in args.scales.split(":"))
    try:
        return DetectorConfig(scales=scales, n_scales=args.n_scales, threshold=args.threshold,
                              threshold_mode=args.threshold_mode, nms_radius=args.nms_radius,
                              max_detections=args.max_detections, ranking=args.ranking,
                              epsilon=args.epsilon, verify_level=args.verify_level,
                              edge_width=args.edge_width, radius_range=rr)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _inputs(args):
    paths = []
    for p in map(Path, args.inputs):
        if p.suffix == ".csv":
            paths += [img for img, _, _ in _read_corpus(p)]
        else:
            paths.append(p)
    for p in paths:
        if not p.is_file():
            raise UsageError(f"input image not found: {p}")
        if p.stat().st_size == 0:
            raise UsageError(f"input image is empty: {p}")
    return paths


def cmd_detect(args) -> int:
    paths = _inputs(args)
    config = detector_config(args) if args.method == "scalesteer" else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    calib = None
    if args.calibration:
        from .calibration import ScaleCalibration
        calib = ScaleCalibration.from_csv(Path(args.calibration).read_text())

    def run(p):
        try:
            img = sio.read_image(p)
        except ValueError as exc:
            raise UsageError(f"{p}: {exc}") from exc
        t0 = time.perf_counter()
        if args.method == "log":
            sig = None if args.log_sigmas is None else args.log_sigmas
            dets = log_baseline(img, sig, args.threshold, args.nms_radius, args.max_detections)
        else:
            if img.shape[0] != img.shape[1]:
                raise UsageError(f"{p}: detector needs a square image, got {img.shape}")
            dets = detect(img, config, calib)
        return p, dets, 1e3 * (time.perf_counter() - t0)

    with ThreadPoolExecutor(_threads(args)) as pool:
        results = list(pool.map(run, paths))
    timings = {}
    for p, dets, ms in results:
        stem = f"{p.stem}.{args.method}"
        (out / f"{stem}.csv").write_text(sio.detections_to_csv(dets))
        (out / f"{stem}.json").write_text(sio.detections_to_json(dets))
        timings[p.name] = ms
        _log(args, f"{p.name}: {len(dets)} detection(s), {ms:.0f} ms")
    if not args.no_timing:
        (out / f"timings.{args.method}.json").write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n")
    write_manifest(out, f"detect_{args.method}", args)
    print(f"{len(results)} image(s) -> {out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    corpus = _read_corpus(Path(args.corpus))
    det_dir = Path(args.detections)
    timings = {}
    tpath = det_dir / f"timings.{args.method}.json"
    if tpath.is_file():
        timings = json.loads(tpath.read_text())
    rows = []
    for img, truth, bg in corpus:
        scene = _load_scene(truth)
        dpath = det_dir / f"{img.stem}.{args.method}.csv"
        if not dpath.is_file():
            raise UsageError(f"detections not found: {dpath}")
        dets = sio.detections_from_csv(dpath.read_text())
        rows.append(evaluate(dets, scene.disks, img.name, args.method,
                             timings.get(img.name), args.gate, bg))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"report.{args.method}.csv").write_text(rows_to_csv(rows))
    summ = summarize(rows)
    (out / f"summary.{args.method}.json").write_text(json.dumps(summ, indent=1, sort_keys=True) + "\n")
    groups = summ["groups"]
    if args.svg:
        series = {args.method: ([g["bg_std"] for g in groups], [g["jaccard"] for g in groups])}
        Path(args.svg).write_text(svg_line_plot(series, xlabel="background std",
                                                ylabel="mean Jaccard"))
    write_manifest(out, f"eval_{args.method}", args)
    for g in groups:
        print(f"bg_std={g['bg_std']:g}: jaccard {g['jaccard']:.3f} over {g['n_images']} image(s)")
    return 0


# ---------------------------------------------------------------------------
# quality


def cmd_quality(args) -> int:
    spec = bspline_spec()
    a = 2.0 ** (args.start + np.linspace(0.0, spec.sigma, args.points))
    a, q = quality_sweep(spec, MeyerProfile(args.epsilon), a, args.eps_prime)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "rho"])
        w.writerows([repr(float(x)), repr(float(y))] for x, y in zip(a, q))
    write_manifest(out.parent, "quality", args, {"minimum": float(q.min())})
    print(f"minimum quality {q.min():.6f} at a = {a[np.argmin(q)]:.6f}")
    return 0


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    radii = list(args.radii)
    if args.size < 4 * max(radii):
        raise UsageError(f"grid {args.size} too small for radius {max(radii)}")
    _, images = radius_sweep(args.seed, radii, args.size)
    J = args.n_scales or max_scales(args.size)
    bank = build_filter_bank(args.size, J, MeyerProfile(args.epsilon))
    spec = bspline_spec()
    cspec = ComplexWaveletSpec()
    try:
        mc = calibrate_steered_radius(images, radii, bank, spec, min_rel_energy=args.min_rel_energy)
        cx = calibrate_phase_radius(images, radii, bank, cspec)
    except ValueError as exc:
        raise UsageError(f"calibration failed: {exc}") from exc
    (out / "calibration_multichannel.csv").write_text(mc.to_csv())
    (out / "calibration_complex.csv").write_text(cx.to_csv())
    est_mc = [steered_radius(im, bank, mc, spec)[0] for im in images]
    est_cx = [phase_radius(im, bank, cx, cspec)[0] for im in images]
    with open(out / "closed_loop.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true_radius", "est_complex", "est_multichannel"])
        for r, c, m in zip(radii, est_cx, est_mc):
            w.writerow([repr(float(r)), repr(c), repr(m)])
    err_mc = float(np.max(np.abs(np.subtract(est_mc, radii))))
    err_cx = float(np.max(np.abs(np.subtract(est_cx, radii))))
    write_manifest(out, "calibrate", args, {"max_error_multichannel": err_mc,
                                            "max_error_complex": err_cx})
    print(f"closed-loop max |error|: multichannel {err_mc:.4f} px, complex {err_cx:.4f} px")
    return 0


# ---------------------------------------------------------------------------
# steer


def cmd_steer(args) -> int:
    rng = np.random.default_rng(args.seed)
    img = rng.standard_normal((args.size, args.size))
    spec = bspline_spec()
    J = args.n_scales or max_scales(args.size)
    bank = build_filter_bank(args.size, J, MeyerProfile(args.epsilon))
    ref = analyze(img, bank, MultiplierBank(spec, args.a))
    steered = steer_pyramid(ref, spec, args.a, args.a_prime)
    direct = analyze(img, bank, MultiplierBank(spec, args.a_prime))
    err = np.linalg.norm(steered.channels - direct.channels) / np.linalg.norm(direct.channels)
    print(f"steering {args.a:g} -> {args.a_prime:g}: relative error {err:.3e}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _detector_flags(p):
    g = p.add_argument_group("detector")
    g.add_argument("--method", choices=("scalesteer", "log"), default="scalesteer")
    g.add_argument("--threshold", type=float, default=0.1)
    g.add_argument("--threshold-mode", choices=("relative", "global", "absolute"), default="relative")
    g.add_argument("--nms-radius", type=int, default=5)
    g.add_argument("--max-detections", type=_opt_int, default=None)
    g.add_argument("--ranking", choices=("response", "contrast", "snr"), default="response")
    g.add_argument("--epsilon", type=float, default=0.125)
    g.add_argument("--verify-level", type=float, default=0.6)
    g.add_argument("--edge-width", type=float, default=3.0)
    g.add_argument("--radius-min", type=float, default=None)
    g.add_argument("--radius-max", type=float, default=None)
    g.add_argument("--scales", default=None, help="inclusive scale range lo:hi")
    g.add_argument("--n-scales", type=_opt_int, default=None)
    g.add_argument("--calibration", default=None, help="multichannel table CSV from 'calibrate'")
    g.add_argument("--log-sigmas", type=_float_list, default=None,
                   help="LoG scales (comma list); default covers radii 8-40")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key=value file of option defaults")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="scalesteer", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate disk scenes")
    s.add_argument("--out", default="corpus")
    s.add_argument("--size", type=int, default=512)
    s.add_argument("--disks", type=int, default=20)
    s.add_argument("--bg-std", type=_float_list, default=[0.0])
    s.add_argument("--bg-exponent", type=float, default=3.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1, help="scenes per bg-std; seeds seed..seed+count-1")
    s.add_argument("--radius-min", type=float, default=8.0)
    s.add_argument("--radius-max", type=float, default=40.0)
    s.add_argument("--overlap", type=float, default=10.0)
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--format", choices=("png", "pgm"), default="png")
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("detect", parents=[common], help="detect spots")
    d.add_argument("inputs", nargs="+", help="images, or corpus.csv files")
    d.add_argument("--out", default="detections")
    d.add_argument("--no-timing", action="store_true", help="omit the timing file")
    _detector_flags(d)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", parents=[common], help="score detections")
    e.add_argument("corpus", help="corpus.csv written by synth")
    e.add_argument("--detections", default="detections")
    e.add_argument("--method", default="scalesteer")
    e.add_argument("--out", default="report")
    e.add_argument("--gate", type=float, default=5.0)
    e.add_argument("--svg", default=None, help="write a Jaccard-vs-background plot")
    e.set_defaults(func=cmd_eval)

    q = sub.add_parser("quality", parents=[common], help="pseudo-dilation quality sweep")
    q.add_argument("--out", default="quality.csv")
    q.add_argument("--points", type=int, default=513)
    q.add_argument("--start", type=float, default=0.0, help="log2 of the first dilation")
    q.add_argument("--epsilon", type=float, default=0.125)
    q.add_argument("--eps-prime", type=float, default=DEFAULT_EPS_PRIME)
    q.set_defaults(func=cmd_quality)

    c = sub.add_parser("calibrate", parents=[common], help="fit radius tables")
    c.add_argument("--out", default="calibration")
    c.add_argument("--radii", type=_range_spec, default=_range_spec("8:11:0.2"),
                   help="start:stop:step or comma list")
    c.add_argument("--size", type=int, default=128)
    c.add_argument("--n-scales", type=_opt_int, default=None)
    c.add_argument("--epsilon", type=float, default=0.125)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--min-rel-energy", type=float, default=0.5,
                   help="scales within this fraction of the best also enter the table")
    c.set_defaults(func=cmd_calibrate)

    t = sub.add_parser("steer", parents=[common], help="steering consistency check")
    t.add_argument("--size", type=int, default=64)
    t.add_argument("--a", type=float, default=1.0)
    t.add_argument("--a-prime", type=float, default=2.0 ** 0.7)
    t.add_argument("--n-scales", type=_opt_int, default=None)
    t.add_argument("--epsilon", type=float, default=0.125)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_steer)
    return p


def _apply_config_file(parser, argv):
    # flags > file > defaults: file values become the subparser's defaults
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    values = sio.read_keyvalue(path)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((a for a in argv if a in sub.choices), None)
    if cmd is None:
        return
    sp = sub.choices[cmd]
    dests = {a.dest: a for a in sp._actions}
    for k, v in values.items():
        dest = k.replace("-", "_")
        if dest not in dests or dest in ("config", "help", "inputs", "corpus"):
            raise UsageError(f"{path}: unknown option {k!r} for '{cmd}'")
        act = dests[dest]
        if isinstance(act, argparse._StoreTrueAction):
            sp.set_defaults(**{dest: v.lower() in ("1", "true", "yes", "on")})
        else:
            act.default = v   # string defaults go through the flag's type


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"scalesteer: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:   # argparse usage errors and --help
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"scalesteer: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"scalesteer: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
