"""Command-line front door for the scan/reconstruct/postprocess/export loop.

Every CLI path is a thin wrapper over the library, so outputs are
byte-identical to direct calls.  Failures map to distinct exit codes and a
single machine-parsable JSON line on stderr; stdout carries data only.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, project as prj, stages
from .errors import (
    AmbiguousReference,
    BrickForgeError,
    MeshContractError,
    NoModelFound,
    ParseError,
    ProfileMismatch,
    ReferenceBrickNotFound,
    StateConflict,
    ValidationError,
    VersionError,
)
from .grid import BrickBitmask, CellDimensions, Profile, Side, connected_components
from .mesh import analyze, balance_report, export_obj, import_obj, obj_bytes
from .vision import PipelineConfig, RawImage, scan_profile, synth_render

EXIT_USAGE = 64
EXIT_CODES = [
    (NoModelFound, 2),
    (ReferenceBrickNotFound, 3),
    (AmbiguousReference, 4),
    (ProfileMismatch, 6),
    (StateConflict, 6),
    (VersionError, 8),
    (ParseError, 7),
    (ValidationError, 5),
    (MeshContractError, 5),
    (BrickForgeError, 1),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(
            json.dumps({"code": "usage", "stage": "cli", "message": message}),
            file=sys.stderr,
        )
        raise SystemExit(EXIT_USAGE)


def _emit_error(exc: BrickForgeError) -> int:
    line = {"code": exc.code, "stage": exc.stage or "library", "message": exc.message}
    print(json.dumps(line), file=sys.stderr)
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def _emit_warnings(warnings):
    for w in warnings:
        print(json.dumps({"warning": w}), file=sys.stderr)


def _load_config(path: str | None) -> PipelineConfig:
    """Flat key = value config text mirroring PipelineConfig field names."""
    if path is None:
        return PipelineConfig()
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", location=f"{path}:{lineno}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip('"')
        if value.lower() in ("true", "false"):
            values[key] = value.lower() == "true"
        else:
            try:
                values[key] = int(value)
            except ValueError:
                try:
                    values[key] = float(value)
                except ValueError:
                    values[key] = value
    return PipelineConfig.from_mapping(values)


def _read_profile_file(path: str, side: str) -> Profile:
    mask = BrickBitmask.from_text(Path(path).read_text())
    return Profile(mask, Side.parse(side))


def _load_project(path: str) -> prj.ProjectState:
    return prj.load(path)


def _new_project(path: str) -> prj.ProjectState:
    # ids derive from the file name so runs with identical inputs produce
    # byte-identical project files
    pid = hashlib.sha256(Path(path).name.encode("utf-8")).hexdigest()[:12]
    return prj.ProjectState(id=pid)


def _save_project(state: prj.ProjectState, path: str) -> None:
    prj.save(state, path)


# -- subcommands ----------------------------------------------------------------


def _cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    img = RawImage.open(args.image)
    if args.debug_dir:
        _write_debug_bundle(img, cfg, args.debug_dir)
    profile = scan_profile(img, args.side, cfg)
    _emit_warnings(profile.warnings)
    out = args.output or str(Path(args.image).with_suffix(f".{args.side}.txt"))
    Path(out).write_text(profile.mask.to_text())
    if args.project:
        state = _load_project(args.project) if Path(args.project).exists() else _new_project(args.project)
        state.set_profile(profile)
        _save_project(state, args.project)
    print(out)
    return 0


def _write_debug_bundle(img: RawImage, cfg: PipelineConfig, debug_dir: str) -> None:
    from .vision import detect_edges, extract_foreground, preprocess, quantize_colors

    d = Path(debug_dir)
    d.mkdir(parents=True, exist_ok=True)
    pre = preprocess(img, cfg)
    pre.save(d / "00-preprocessed.png")
    quant = quantize_colors(pre, cfg)
    quant.save(d / "01-quantized.png")
    edges = detect_edges(quant, cfg)
    RawImage(np.repeat(edges[:, :, None].astype(np.uint8) * 255, 3, axis=2)).save(
        d / "02-edges.png"
    )
    try:
        fg = extract_foreground(quant, edges, cfg)
    except BrickForgeError:
        return
    RawImage(np.repeat(fg[:, :, None].astype(np.uint8) * 255, 3, axis=2)).save(
        d / "03-foreground.png"
    )


def _cmd_synth(args) -> int:
    mask = BrickBitmask.from_text(Path(args.mask).read_text())
    px, py = (int(v) for v in args.px_per_cell.split(","))
    img, truth = synth_render(
        mask, palette_seed=args.seed, noise_sigma=args.noise, px_per_cell=(px, py)
    )
    img.save(args.output)
    sidecar = {
        "mask": ["".join("#" if v else "." for v in row) for row in truth.mask.cells],
        "white_cell": list(truth.white_cell),
        "origin_px": list(truth.origin_px),
        "px_per_cell": list(truth.px_per_cell),
    }
    Path(args.output + ".truth.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(args.output)
    return 0


def _profiles_from_args(args) -> dict[Side, Profile]:
    profiles: dict[Side, Profile] = {}
    for side in ("front", "right", "top"):
        path = getattr(args, side, None)
        if path:
            profiles[Side(side)] = _read_profile_file(path, side)
    return profiles


def _method_params(args) -> tuple[str, dict]:
    if args.method == "extrude":
        params: dict = {"side": args.side, "direction": args.direction}
        if args.depth_mm is not None:
            params["depth_mm"] = args.depth_mm
        else:
            params["depth_cells"] = args.depth if args.depth is not None else 1
        return "extrude", params
    if args.method == "lathe":
        return "lathe", {"side": args.side, "axis": args.axis, "segments": args.segments}
    sides = [s for s in ("front", "right", "top") if getattr(args, s, None)]
    return "triplanar", {"sides": sides}


def _cmd_reconstruct(args) -> int:
    name, params = _method_params(args)
    if name in ("extrude", "lathe"):
        if not args.profile:
            raise ValidationError(f"{name} requires --profile")
        profiles = {Side.parse(args.side): _read_profile_file(args.profile, args.side)}
    else:
        profiles = _profiles_from_args(args)
        if not profiles:
            raise ValidationError("triplanar requires at least one of --front/--right/--top")
    result = stages.run_method(profiles, name, params)
    _emit_warnings(result.mesh.warnings)
    export_obj(result.mesh, args.output)
    if args.project:
        state = _load_project(args.project) if Path(args.project).exists() else _new_project(args.project)
        for p in profiles.values():
            state.set_profile(p)
        state.set_method(name, params)
        data = obj_bytes(result.mesh)
        state.mesh_stages.clear()
        state.append_stage(name, params, prj.profiles_digest(state.profiles), prj.mesh_digest(data))
        _save_project(state, args.project)
    print(args.output)
    return 0


def _post_params(args) -> tuple[str, dict]:
    if args.operation == "smooth":
        return "smooth", {"iterations": args.iterations, "lam": args.lam, "mu": args.mu}
    if args.operation == "scale":
        if args.factor is None:
            raise ValidationError("scale requires --factor")
        return "scale", {"factor": args.factor}
    if args.operation == "lattice":
        return "lattice", {"thickness_mm": args.thickness}
    if args.kind is None:
        raise ValidationError("merge requires --kind cube|sphere")
    center = tuple(float(v) for v in args.center.split(",")) if args.center else (0.0, 0.0, 0.0)
    if len(center) != 3:
        raise ValidationError("--center must be X,Y,Z")
    return "merge", {
        "kind": args.kind,
        "center": list(center),
        "scale": args.size,
        "resolution": args.sphere_resolution,
        "resolution_mm": args.resolution_mm,
    }


def _cmd_post(args) -> int:
    op, params = _post_params(args)
    if args.project:
        state = _load_project(args.project)
        results = _run_recorded(state)
        current = results[-1][1]
        nxt = stages.run_post(op, params, current)
        data = obj_bytes(nxt.mesh)
        state.append_stage(op, params, state.mesh_stages[-1].digest, prj.mesh_digest(data))
        _save_project(state, args.project)
    else:
        if not args.input:
            raise ValidationError("post requires -i mesh.obj or --project")
        mesh = import_obj(args.input)
        nxt = stages.run_post(op, params, stages.StageResult(mesh, None))
    _emit_warnings(nxt.mesh.warnings)
    export_obj(nxt.mesh, args.output)
    print(args.output)
    return 0


def _cmd_analyze(args) -> int:
    mesh = import_obj(args.mesh)
    report = analyze(mesh).to_dict()
    if report["watertight"]:
        report["balance"] = balance_report(mesh, args.balance_axis).to_dict()
    report["warnings"] = list(mesh.warnings)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _run_recorded(state: prj.ProjectState) -> list[tuple[prj.StageRecord, stages.StageResult]]:
    """Re-run every recorded stage from the stored profiles and parameters."""
    if state.method is None or not state.mesh_stages:
        raise StateConflict("project has no recorded reconstruction to run")
    out: list[tuple[prj.StageRecord, stages.StageResult]] = []
    current: stages.StageResult | None = None
    for i, rec in enumerate(state.mesh_stages):
        if i == 0:
            if rec.op != state.method[0]:
                raise StateConflict(
                    f"first stage {rec.op!r} does not match method {state.method[0]!r}"
                )
            current = stages.run_method(state.profiles, rec.op, rec.params)
        else:
            current = stages.run_post(rec.op, rec.params, current)
        out.append((rec, current))
    return out


def _cmd_pipeline(args) -> int:
    state = _load_project(args.project)
    results = _run_recorded(state)
    out_dir = Path(args.out_dir or Path(args.project).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.project).name.replace(prj.FILE_EXTENSION, "") or "project"
    changed = False
    prev_digest = prj.profiles_digest(state.profiles)
    new_stages: list[prj.StageRecord] = []
    for i, (rec, result) in enumerate(results, start=1):
        data = obj_bytes(result.mesh)
        digest = prj.mesh_digest(data)
        path = out_dir / f"{stem}.stage{i:02d}-{rec.op}.obj"
        if not (path.exists() and path.read_bytes() == data):
            path.write_bytes(data)
        if digest != rec.digest or prev_digest != rec.input_digest:
            changed = True
        new_stages.append(
            prj.StageRecord(op=rec.op, params=rec.params, input_digest=prev_digest, digest=digest)
        )
        prev_digest = digest
        print(path)
    if changed:
        state.mesh_stages = new_stages
        state.touch()
        _save_project(state, args.project)
    return 0


def _cmd_export(args) -> int:
    source = Path(args.source)
    if source.name.endswith(prj.FILE_EXTENSION):
        state = _load_project(args.source)
        results = _run_recorded(state)
        mesh = results[-1][1].mesh
    else:
        mesh = import_obj(args.source)
    export_obj(mesh, args.output)
    print(args.output)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="brickforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"brickforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="photograph to profile bitmask")
    p.add_argument("image")
    p.add_argument("--side", required=True, choices=["front", "right", "top"])
    p.add_argument("--config")
    p.add_argument("--debug-dir")
    p.add_argument("-o", "--output")
    p.add_argument("--project")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("synth", help="render a bitmask to a synthetic photo")
    p.add_argument("mask")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--px-per-cell", default="12,12")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("reconstruct", help="profile(s) to 3D mesh")
    p.add_argument("method", choices=["extrude", "lathe", "triplanar"])
    p.add_argument("--profile", help="bitmask text file (extrude/lathe)")
    p.add_argument("--side", default="front", choices=["front", "right", "top"])
    p.add_argument("--depth", type=int, help="extrusion depth in cells")
    p.add_argument("--depth-mm", type=float, help="extrusion depth in millimeters")
    p.add_argument("--direction", default="+depth", choices=["+depth", "-depth"])
    p.add_argument("--axis", default="left", choices=["left", "right"])
    p.add_argument("--segments", type=int, default=64)
    p.add_argument("--front")
    p.add_argument("--right")
    p.add_argument("--top")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--project")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("post", help="postprocess a staged mesh")
    p.add_argument("operation", choices=["smooth", "lattice", "scale", "merge"])
    p.add_argument("-i", "--input", help="input mesh (file mode)")
    p.add_argument("--project", help="project file (stage mode)")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--mu", type=float, default=-0.53)
    p.add_argument("--factor", type=float)
    p.add_argument("--thickness", type=float, default=2.0)
    p.add_argument("--kind", choices=["cube", "sphere"])
    p.add_argument("--center")
    p.add_argument("--size", type=float, default=10.0)
    p.add_argument("--sphere-resolution", type=int, default=32)
    p.add_argument("--resolution-mm", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_post)

    p = sub.add_parser("analyze", help="mesh report as JSON on stdout")
    p.add_argument("mesh")
    p.add_argument("--balance-axis", default="y", choices=["x", "y", "z"])
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("export", help="project or mesh to OBJ")
    p.add_argument("source")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("pipeline", help="re-run all recorded project stages")
    p.add_argument("project")
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrickForgeError as exc:
        return _emit_error(exc)
    except OSError as exc:
        print(
            json.dumps({"code": "io-error", "stage": "io", "message": str(exc)}),
            file=sys.stderr,
        )
        return 10


if __name__ == "__main__":
    sys.exit(main())
