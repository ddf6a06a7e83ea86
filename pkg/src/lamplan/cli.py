"""Command-line interface chaining the planning pipeline.

Every subcommand wraps exactly one library operation, reads/writes the
documented file formats, and is deterministic given its inputs. On failure
a machine-readable error JSON is printed to stderr and the exit code is
nonzero; output files are written atomically so failures leave nothing
behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import formats, frame, grading, heatmap, net, phantom, volume
from .errors import ConfigError, LamplanError

DEFAULTS = {
    "wmin": -200.0,
    "wmax": 600.0,
    "dims": (72, 128, 128),
    "sigma": 3.0,
    "tau": 5.0,
    "mode": "partial",
    "seed": 0,
}


@dataclasses.dataclass
class PipelineConfig:
    """Defaults shared by the subcommands; flags override per invocation."""

    wmin: float = DEFAULTS["wmin"]
    wmax: float = DEFAULTS["wmax"]
    dims: tuple[int, int, int] = DEFAULTS["dims"]
    sigma: float = DEFAULTS["sigma"]
    tau: float = DEFAULTS["tau"]
    mode: str = DEFAULTS["mode"]
    seed: int = DEFAULTS["seed"]

    def __post_init__(self):
        if self.mode not in ("total", "partial"):
            raise ConfigError(f"mode must be 'total' or 'partial', got {self.mode!r}")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ConfigError(f"dims must be 3 positive integers, got {self.dims}")
        if not (float(self.wmin) < float(self.wmax)):
            raise ConfigError(f"need wmin < wmax, got ({self.wmin}, {self.wmax})")
        if float(self.sigma) <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if float(self.tau) <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        obj = formats.load_json(path)
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config fields {sorted(unknown)}")
        if "dims" in obj:
            obj["dims"] = tuple(obj["dims"])
        return cls(**obj)


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in ("wmin", "wmax", "dims", "sigma", "tau", "mode", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = tuple(value) if name == "dims" else value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def cmd_synth(args) -> int:
    cfg = _config(args)
    if args.params:
        params = formats.read_phantom_params(args.params)
    else:
        params = phantom.random_params(cfg.seed, dims=cfg.dims)
    vol, lm = phantom.generate_phantom(params)
    if args.noise_hu:
        vol = phantom.add_noise(vol, args.noise_hu, params.seed + 1)
    formats.write_rvol(vol, args.out)
    if args.landmarks_out:
        formats.write_landmarks(lm, args.landmarks_out)
    if args.params_out:
        formats.write_phantom_params(params, args.params_out)
    return 0


def cmd_window(args) -> int:
    cfg = _config(args)
    vol = formats.read_rvol(args.infile)
    formats.write_rvol(volume.apply_window(vol, cfg.wmin, cfg.wmax), args.out)
    return 0


def cmd_crop(args) -> int:
    vol = formats.read_rvol(args.infile)
    box = volume.BoundingBox(lo=tuple(args.box[:3]), hi=tuple(args.box[3:]))
    formats.write_rvol(volume.crop(vol, box), args.out)
    return 0


def cmd_resample(args) -> int:
    cfg = _config(args)
    vol = formats.read_rvol(args.infile)
    formats.write_rvol(volume.resample(vol, cfg.dims), args.out)
    return 0


def cmd_heatmap(args) -> int:
    cfg = _config(args)
    lm = formats.read_landmarks(args.landmarks)
    ref = formats.read_rvol(args.ref)
    formats.write_heatmap(heatmap.make_target_stack(lm, ref, cfg.sigma), args.out)
    return 0


def cmd_localize(args) -> int:
    stack = formats.read_heatmap(args.infile)
    ref = formats.read_rvol(args.ref)
    formats.write_landmarks(heatmap.localize_landmarks(stack, ref), args.out)
    return 0


def cmd_infer(args) -> int:
    vol = formats.read_rvol(args.infile)
    store = formats.read_spuw(args.weights)
    formats.write_heatmap(net.forward(vol, store), args.out)
    return 0


def cmd_plan(args) -> int:
    cfg = _config(args)
    lm = formats.read_landmarks(args.landmarks)
    planes = frame.plan_planes(lm, frame.PlanMode(cfg.mode))
    formats.write_planes(planes, args.out)
    if args.frame_out:
        formats.write_frame(frame.fit_frame(lm), args.frame_out)
    return 0


def cmd_grade(args) -> int:
    cfg = _config(args)
    planes = formats.read_planes(args.planes)
    truth = formats.read_landmarks(args.truth)
    results = [grading.grade_plane(p, truth, cfg.tau) for p in planes]
    formats.write_grades(results, args.out)
    return 0


def cmd_report(args) -> int:
    results = []
    for path in args.inputs:
        results.extend(formats.read_grades(path))
    formats.dump_json(grading.aggregate(results).as_dict(), args.out)
    return 0


def cmd_eval_landmarks(args) -> int:
    pred = formats.read_landmarks(args.pred)
    truth = formats.read_landmarks(args.truth)
    formats.dump_json(heatmap.evaluate_landmarks(pred, truth).as_dict(), args.out)
    return 0


def cmd_manifest(args) -> int:
    if args.weights:
        manifest = formats.read_spuw(args.weights).manifest()
        title = args.weights
    else:
        config = net.CONFIGS[args.arch]
        manifest = net.param_manifest(config)
        title = f"architecture {config.name} (input {config.input_dims})"
    print(f"# manifest: {title}")
    total = 0
    for name, shape in manifest:
        count = 1
        for d in shape:
            count *= d
        total += count
        print(f"{name}  {tuple(shape)}")
    print(f"# {len(manifest)} parameters, {total} values")
    return 0


def cmd_init_weights(args) -> int:
    cfg = _config(args)
    config = net.CONFIGS[args.arch]
    formats.write_spuw(net.init_weights(config, cfg.seed), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamplan",
        description="Laminectomy cutting-plane planning from vertebral landmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="pipeline config JSON", default=None)
        return p

    p = add("synth", cmd_synth, "generate a synthetic vertebra volume + landmarks")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dims", type=int, nargs=3, metavar=("Z", "Y", "X"), default=None)
    p.add_argument("--params", help="phantom params JSON (overrides --seed)")
    p.add_argument("--noise-hu", type=float, default=0.0, help="additive noise sigma")
    p.add_argument("--out", required=True, help="output RVOL path")
    p.add_argument("--landmarks-out", help="output landmark JSON path")
    p.add_argument("--params-out", help="write the effective params JSON")

    p = add("window", cmd_window, "intensity windowing onto [0, 1]")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wmin", type=float, default=None)
    p.add_argument("--wmax", type=float, default=None)

    p = add("crop", cmd_crop, "crop to an inclusive voxel bounding box")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--box", type=int, nargs=6, required=True,
        metavar=("Z0", "Y0", "X0", "Z1", "Y1", "X1"),
    )

    p = add("resample", cmd_resample, "trilinear resample to target dims")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=int, nargs=3, metavar=("Z", "Y", "X"), default=None)

    p = add("heatmap", cmd_heatmap, "Gaussian target heatmaps from landmarks")
    p.add_argument("--landmarks", required=True)
    p.add_argument("--ref", required=True, help="volume providing the grid geometry")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=None)

    p = add("localize", cmd_localize, "argmax landmarks from a heatmap stack")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ref", required=True, help="volume providing the grid geometry")
    p.add_argument("--out", required=True)

    p = add("infer", cmd_infer, "network forward pass on a volume")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)

    p = add("plan", cmd_plan, "fit the frame and generate cutting planes")
    p.add_argument("--landmarks", required=True)
    p.add_argument("--mode", choices=("total", "partial"), default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-out", help="also write the fitted frame JSON")

    p = add("grade", cmd_grade, "grade planes against ground-truth landmarks")
    p.add_argument("--planes", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, "aggregate grade files into a table report")
    p.add_argument("inputs", nargs="+", help="grade JSON files")
    p.add_argument("--out", required=True)

    p = add("eval-landmarks", cmd_eval_landmarks, "localization error statistics")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)

    p = add("manifest", cmd_manifest, "print a weight-file or architecture manifest")
    p.add_argument("--weights", default=None)
    p.add_argument("--arch", choices=tuple(net.CONFIGS), default="standard")

    p = add("init-weights", cmd_init_weights, "write random weights for testing")
    p.add_argument("--arch", choices=tuple(net.CONFIGS), default="standard")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except LamplanError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(
            json.dumps({"error": "missing-file", "message": str(e), "path": e.filename}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
