"""Command-line front-end: end-to-end detection, confidence, evaluation,
parameter sweeps, scene synthesis, and map rendering.

Every detect run drops a run.json capturing the complete configuration
(method, paths, smoothing parameters, both extractor specs with their derived
weight seeds); replaying that file reproduces all artifacts byte-for-byte,
which is the only audit trail an unsupervised pipeline has.

Exit codes: 0 success, 1 a runtime invariant was violated, 2 usage or I/O
errors (one-line diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import (
    RcvaConfig,
    rcva_labeler,
    run_conf_rcva,
    run_deep_magnitude,
    run_unified,
)
from .dcva import detect_pair
from .errors import ChangeDetectionError, InvariantViolation, RejectedValue
from .features import (
    ExtractorKind,
    ExtractorSpec,
    default_primary_spec,
    default_secondary_spec,
)
from .metrics import (
    MetricsReport,
    aggregate_mean,
    aggregate_pooled,
    confusion,
    format_table,
    metrics,
)
from .raster import (
    Raster,
    _write_pnm,
    load_confidence_map,
    load_label_map,
    load_raster,
    normalize_bands,
    normalize_pair,
    render_change,
    render_confidence,
    save_raster,
)
from .smoothing import (
    SmoothingConfig,
    ensemble_counts,
    ensemble_counts_with,
    fuse_confidence,
    run_proposed,
)
from .synth import SceneSpec, generate

_METHODS = ("none", "proposed", "unified", "conf-rcva", "deep-magnitude")
_ENSEMBLE_METHODS = ("proposed", "unified", "conf-rcva")


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _write_json(path: Path, obj) -> None:
    path.write_text(_canonical_json(obj), encoding="ascii")


# ---------------------------------------------------------------------------
# run configuration


_KIND_NAMES = {
    ExtractorKind.IDENTITY: "identity",
    ExtractorKind.RANDOM_CONV: "conv",
    ExtractorKind.PRECOMPUTED: "precomputed",
}
_KINDS_BY_NAME = {v: k for k, v in _KIND_NAMES.items()}


def _spec_to_dict(spec: ExtractorSpec | None):
    if spec is None:
        return None
    return {
        "kind": _KIND_NAMES[spec.kind],
        "depth": spec.depth,
        "taps": list(spec.taps),
        "channels": spec.channels,
        "kernel_size": spec.kernel_size,
        "seed": spec.seed,
        "feature_dir": spec.feature_dir,
    }


def _spec_from_dict(d) -> ExtractorSpec | None:
    if d is None:
        return None
    return ExtractorSpec(
        kind=_KINDS_BY_NAME[d["kind"]],
        depth=d["depth"],
        taps=tuple(d["taps"]),
        channels=d["channels"],
        kernel_size=d["kernel_size"],
        seed=d["seed"],
        feature_dir=d["feature_dir"],
    )


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one detection run; serialized as run.json."""

    method: str
    t1: str
    t2: str
    f1: ExtractorSpec
    f2: ExtractorSpec | None
    smoothing: SmoothingConfig
    rcva: RcvaConfig
    aggregate: str = "pooled"

    def __post_init__(self):
        if self.method not in _METHODS:
            raise RejectedValue(f"unknown method {self.method!r}")
        if self.aggregate not in ("pooled", "mean"):
            raise RejectedValue(f"unknown aggregate {self.aggregate!r}")
        if self.method == "proposed" and self.f2 is None:
            raise RejectedValue("method 'proposed' needs a secondary extractor")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "t1": self.t1,
            "t2": self.t2,
            "sigma": self.smoothing.sigma,
            "iterations": self.smoothing.iterations,
            "conf_threshold": self.smoothing.conf_threshold,
            "seed": self.smoothing.master_seed,
            "f1": _spec_to_dict(self.f1),
            "f2": _spec_to_dict(self.f2),
            "rcva_window": self.rcva.window_radius,
            "aggregate": self.aggregate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            method=d["method"],
            t1=d["t1"],
            t2=d["t2"],
            f1=_spec_from_dict(d["f1"]),
            f2=_spec_from_dict(d["f2"]),
            smoothing=SmoothingConfig(
                sigma=d["sigma"],
                iterations=d["iterations"],
                conf_threshold=d["conf_threshold"],
                master_seed=d["seed"],
            ),
            rcva=RcvaConfig(window_radius=d["rcva_window"]),
            aggregate=d["aggregate"],
        )


def _load_pair(cfg: RunConfig) -> tuple[Raster, Raster]:
    # pooled per-band scaling: a change-shifted band range must not turn into
    # a whole-image radiometric offset between the two acquisitions
    return normalize_pair(load_raster(cfg.t1), load_raster(cfg.t2))


def _execute(cfg: RunConfig, threads: int):
    """Run the configured method; returns (primary, counts | None, confidence | None)."""
    x1, x2 = _load_pair(cfg)
    if cfg.method == "none":
        return detect_pair(x1, x2, cfg.f1), None, None
    if cfg.method == "proposed":
        det = run_proposed(x1, x2, cfg.f1, cfg.f2, cfg.smoothing, threads=threads)
    elif cfg.method == "unified":
        det = run_unified(x1, x2, cfg.f1, cfg.smoothing, threads=threads)
    elif cfg.method == "conf-rcva":
        det = run_conf_rcva(x1, x2, cfg.f1, cfg.smoothing, cfg.rcva, threads=threads)
    else:
        det = run_deep_magnitude(x1, x2, cfg.f1)
    return det.primary, det.counts, det.confidence


# ---------------------------------------------------------------------------
# flag plumbing


def _taps(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"taps must be comma-separated integers, got {text!r}")


def _values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"values must be comma-separated numbers, got {text!r}")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t1", help="pre-change raster (CDR/PGM/PPM)")
    p.add_argument("--t2", help="post-change raster")
    p.add_argument("--method", choices=_METHODS, default=None)
    p.add_argument("--sigma", type=float, default=None, help="perturbation std dev")
    p.add_argument("--iterations", type=int, default=None, help="ensemble size K")
    p.add_argument("--conf-threshold", type=float, default=None, help="vote fraction in (0,1]")
    p.add_argument("--seed", type=int, default=None, help="master seed for all randomness")
    p.add_argument("--f1-depth", type=int, default=None)
    p.add_argument("--f1-taps", type=_taps, default=None)
    p.add_argument("--f1-channels", type=int, default=None)
    p.add_argument("--f2-depth", type=int, default=None)
    p.add_argument("--f2-taps", type=_taps, default=None)
    p.add_argument("--f2-channels", type=int, default=None)
    p.add_argument("--rcva-window", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)


_CONFIDENCE_FLAGS = ("sigma", "iterations", "conf_threshold")
_CONFIG_FLAGS = _CONFIDENCE_FLAGS + (
    "t1",
    "t2",
    "method",
    "seed",
    "f1_depth",
    "f1_taps",
    "f1_channels",
    "f2_depth",
    "f2_taps",
    "f2_channels",
    "rcva_window",
)


def _config_from_flags(args) -> RunConfig:
    if args.t1 is None or args.t2 is None:
        raise RejectedValue("--t1 and --t2 are required")
    method = args.method or "proposed"
    if method == "none":
        given = [f for f in _CONFIDENCE_FLAGS if getattr(args, f) is not None]
        if given:
            flags = ", ".join("--" + f.replace("_", "-") for f in given)
            raise RejectedValue(f"method 'none' takes no confidence flags ({flags})")
    seed = args.seed if args.seed is not None else 0
    sm = SmoothingConfig(
        sigma=args.sigma if args.sigma is not None else 0.1,
        iterations=args.iterations if args.iterations is not None else 10,
        conf_threshold=args.conf_threshold if args.conf_threshold is not None else 1.0,
        master_seed=seed,
    )
    f1_kw = {}
    if args.f1_depth is not None:
        f1_kw["depth"] = args.f1_depth
    if args.f1_taps is not None:
        f1_kw["taps"] = args.f1_taps
    if args.f1_channels is not None:
        f1_kw["channels"] = args.f1_channels
    f1 = default_primary_spec(seed, **f1_kw)
    f2 = None
    if method in ("proposed",):
        f2_kw = {}
        if args.f2_depth is not None:
            f2_kw["depth"] = args.f2_depth
        if args.f2_taps is not None:
            f2_kw["taps"] = args.f2_taps
        if args.f2_channels is not None:
            f2_kw["channels"] = args.f2_channels
        f2 = default_secondary_spec(seed, **f2_kw)
    rcva = RcvaConfig(window_radius=args.rcva_window if args.rcva_window is not None else 1)
    return RunConfig(
        method=method,
        t1=str(Path(args.t1).resolve()),
        t2=str(Path(args.t2).resolve()),
        f1=f1,
        f2=f2,
        smoothing=sm,
        rcva=rcva,
        aggregate=getattr(args, "aggregate", None) or "pooled",
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_detect(args) -> int:
    if args.replay is not None:
        given = [f for f in _CONFIG_FLAGS if getattr(args, f) is not None]
        if given:
            raise RejectedValue("--replay takes its configuration from the file; "
                                "drop " + ", ".join("--" + f.replace("_", "-") for f in given))
        try:
            cfg = RunConfig.from_dict(json.loads(Path(args.replay).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise RejectedValue(f"cannot replay {args.replay}: {exc}")
    else:
        cfg = _config_from_flags(args)
    primary, counts, conf = _execute(cfg, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render_change(primary.labels, out / "change.pgm")
    save_raster(Raster(primary.magnitude.rho[None, ...]), out / "magnitude.cdr")
    _write_json(out / "tau.json", {"tau": primary.tau})
    _write_json(out / "run.json", cfg.to_dict())
    if conf is not None:
        render_confidence(conf, out / "confidence.ppm")
    if counts is not None:
        save_raster(Raster(counts.k_prime.astype(np.float32)[None, ...]), out / "counts.cdr")
    return 0


def _report_pair(pred_dir: Path, ref_path: str):
    """(all-pixels report, confident-only report | None, pixel count)."""
    change = pred_dir / "change.pgm"
    if not change.is_file():
        raise RejectedValue(f"missing prediction artifact {change}")
    pred = load_label_map(change)
    ref = load_label_map(ref_path)
    total = ref.changed.size
    full = metrics(confusion(pred, ref), total)
    conf_path = pred_dir / "confidence.ppm"
    if not conf_path.is_file():
        return full, None, total
    conf = load_confidence_map(conf_path)
    return full, metrics(confusion(pred, ref, conf), total), total


def cmd_evaluate(args) -> int:
    refs = list(args.reference)
    dirs = [Path(d) for d in args.pred]
    if len(refs) == 1:
        refs = refs * len(dirs)
    if len(refs) != len(dirs):
        raise RejectedValue(f"{len(dirs)} prediction dirs but {len(refs)} references")
    rows: list[tuple[str, MetricsReport]] = []
    shown: list[MetricsReport] = []
    totals = 0
    for d, ref in zip(dirs, refs):
        full, sel, total = _report_pair(d, ref)
        _write_json(d / "metrics.json", {
            "all_pixels": full.to_dict(),
            "confident": None if sel is None else sel.to_dict(),
        })
        shown.append(sel if sel is not None else full)
        totals += total
        rows.append((d.name, shown[-1]))
    if len(dirs) > 1:
        if args.aggregate == "mean":
            rows.append(("mean", aggregate_mean(shown)))
        else:
            rows.append(("pooled", aggregate_pooled([r.counts for r in shown], totals)))
    print(format_table(rows))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_flags(args)
    if cfg.method not in _ENSEMBLE_METHODS:
        raise RejectedValue(f"sweep needs an ensemble method, not {cfg.method!r}")
    if args.sweep == "conf-threshold":
        values = args.values
        for v in values:
            if not 0.0 < v <= 1.0:
                raise RejectedValue(f"conf-threshold sweep value {v} outside (0, 1]")
    else:
        values = args.values
        for v in values:
            if v < 0:
                raise RejectedValue(f"sigma sweep value {v} negative")
    if len(values) < 2:
        raise RejectedValue("sweep needs at least two values")
    ref = load_label_map(args.reference)
    x1, x2 = _load_pair(cfg)
    primary = detect_pair(x1, x2, cfg.f1)

    def counts_for(sm: SmoothingConfig):
        if cfg.method == "proposed":
            return ensemble_counts(x1, x2, cfg.f2, sm, threads=args.threads)
        if cfg.method == "unified":
            return ensemble_counts(x1, x2, cfg.f1, sm, threads=args.threads)
        return ensemble_counts_with(x1, x2, rcva_labeler(cfg.rcva), sm, threads=args.threads)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    shared_counts = counts_for(cfg.smoothing) if args.sweep == "conf-threshold" else None
    total = ref.changed.size
    curve = []
    for i, v in enumerate(values):
        if args.sweep == "conf-threshold":
            counts = shared_counts
            conf = fuse_confidence(primary, counts, v)
        else:
            counts = counts_for(dataclasses.replace(cfg.smoothing, sigma=v))
            conf = fuse_confidence(primary, counts, cfg.smoothing.conf_threshold)
        sel = metrics(confusion(primary.labels, ref, conf), total)
        point = out / f"point_{i:02d}"
        point.mkdir(exist_ok=True)
        render_confidence(conf, point / "confidence.ppm")
        save_raster(Raster(counts.k_prime.astype(np.float32)[None, ...]), point / "counts.cdr")
        _write_json(point / "metrics.json", {"value": v, "confident": sel.to_dict()})
        curve.append((v, sel.f1_macro, sel.pixel_pct))
    lines = ["value,f1_macro,pixel_pct"]
    lines += [f"{v},{f1:.6f},{pct:.6f}" for v, f1, pct in curve]
    (out / "curve.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    return 0


def cmd_synth(args) -> int:
    spec = SceneSpec(
        width=args.width,
        height=args.height,
        bands=args.bands,
        change_fraction=args.change_fraction,
        change_contrast=args.change_contrast,
        texture_scale=args.texture_scale,
        sensor_noise=args.sensor_noise,
        misregistration_shift=args.shift,
        seed=args.seed,
    )
    t1, t2, ref = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_raster(t1, out / "t1.cdr")
    save_raster(t2, out / "t2.cdr")
    render_change(ref, out / "reference.pgm")
    _write_json(out / "spec.json", dataclasses.asdict(spec))
    return 0


def cmd_render(args) -> int:
    r = normalize_bands(load_raster(args.input))
    gray = (r.data * 255.0).round().astype(np.uint8)
    if r.bands == 1:
        _write_pnm(b"P5", r.width, r.height, gray[0].tobytes(), args.out)
    elif r.bands == 3:
        _write_pnm(b"P6", r.width, r.height,
                   gray.transpose(1, 2, 0).tobytes(), args.out)
    else:
        raise RejectedValue(f"can only render 1- or 3-band rasters, got {r.bands}")
    return 0


# ---------------------------------------------------------------------------
# entry


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cdconf",
        description="Bi-temporal change detection with per-pixel confidence maps.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("detect", help="detect changes and write map artifacts")
    _add_config_flags(d)
    d.add_argument("--out", required=True, help="output directory")
    d.add_argument("--replay", default=None, help="re-run a stored run.json")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="score stored predictions against a reference")
    e.add_argument("--pred", nargs="+", required=True, help="detect output dir(s)")
    e.add_argument("--reference", nargs="+", required=True, help="reference map(s)")
    e.add_argument("--aggregate", choices=("pooled", "mean"), default="pooled")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="evaluate one parameter over several values")
    _add_config_flags(s)
    s.add_argument("--sweep", choices=("conf-threshold", "sigma"), required=True)
    s.add_argument("--values", type=_values, required=True, help="comma-separated")
    s.add_argument("--reference", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("synth", help="generate a synthetic bi-temporal scene")
    g.add_argument("--out", required=True)
    g.add_argument("--width", type=int, default=128)
    g.add_argument("--height", type=int, default=128)
    g.add_argument("--bands", type=int, default=4)
    g.add_argument("--change-fraction", type=float, default=0.08)
    g.add_argument("--change-contrast", type=float, default=0.35)
    g.add_argument("--texture-scale", type=int, default=16)
    g.add_argument("--sensor-noise", type=float, default=0.05)
    g.add_argument("--shift", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_synth)

    r = sub.add_parser("render", help="convert a stored CDR raster to PGM/PPM")
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ChangeDetectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
