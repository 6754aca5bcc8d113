"""Command-line entry point.

Subcommands: compile, eval, serve, inspect, preset.
Exit codes: 0 ok, 1 usage, 2 input error, 3 internal.
Set CAMCOND_LOG=debug|info|warning to control verbosity.
"""
from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import io_formats, metrics
from .errors import InputError
from .pipeline import compile_bundle, prepare_scene
from .trajectory import DEFAULT_PRESETS, PresetSpec, TrajectorySpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

log = logging.getLogger("camcond")


def _setup_logging():
    level = os.environ.get("CAMCOND_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
def cli():
    """Camera-aligned conditioning toolchain."""
    _setup_logging()


def _bundle_from_options(bundle_path, overrides) -> io_formats.ProjectBundle:
    bundle = io_formats.read_bundle(bundle_path)
    for key, value in overrides.items():
        if value is not None:
            setattr(bundle, key, value)
    bundle.validate()
    return bundle


@cli.command("compile")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Override the bundle's output directory.")
@click.option("--num-steps", type=int, default=None,
              help="Denoising step count for the schedule manifest.")
@click.option("--depth-fraction", type=float, default=None,
              help="Fraction of early steps conditioned on depth+pose.")
@click.option("--threads", type=int, default=None,
              help="Frame-level render parallelism (output bits unchanged).")
def cmd_compile(bundle, output_dir, num_steps, depth_fraction, threads):
    """Compile a project bundle into condition frames and a manifest."""
    b = _bundle_from_options(bundle, {
        "output_dir": Path(output_dir) if output_dir else None,
        "num_steps": num_steps,
        "depth_fraction": depth_fraction,
        "threads": threads,
    })
    result = compile_bundle(b)
    click.echo(f"manifest: {result['manifest']}")
    for name, d in result["frame_dirs"].items():
        click.echo(f"{name}: {d}")


@cli.command("eval")
@click.argument("kind", type=click.Choice(["mpjpe", "sampson"]))
@click.option("--motion-a", type=click.Path(exists=True, dir_okay=False),
              help="First motion file (mpjpe).")
@click.option("--motion-b", type=click.Path(exists=True, dir_okay=False),
              help="Second motion file (mpjpe).")
@click.option("--align-root", is_flag=True, help="Root-align each frame (mpjpe).")
@click.option("--trajectory", type=click.Path(exists=True, dir_okay=False),
              help="Trajectory file supplying the two cameras (sampson).")
@click.option("--frame-a", type=int, default=0, help="First camera index (sampson).")
@click.option("--frame-b", type=int, default=-1, help="Second camera index (sampson).")
@click.option("--matches", type=click.Path(exists=True, dir_okay=False),
              help="JSON list of [[x,y,w],[x',y',w']] correspondences (sampson).")
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Write the structured report here.")
def cmd_eval(kind, motion_a, motion_b, align_root, trajectory, frame_a, frame_b,
             matches, report):
    """Geometric evaluation: MPJPE between motions, or Sampson error."""
    if kind == "mpjpe":
        if not (motion_a and motion_b):
            raise click.UsageError("mpjpe requires --motion-a and --motion-b")
        a = io_formats.read_motion(motion_a)
        b = io_formats.read_motion(motion_b)
        value = metrics.mpjpe(a, b, align_root=align_root)
        doc = {"metric": "mpjpe", "align_root": align_root, "value": value,
               "num_frames": a.num_frames, "num_joints": a.num_joints,
               "inputs": [str(motion_a), str(motion_b)]}
    else:
        if not (trajectory and matches):
            raise click.UsageError("sampson requires --trajectory and --matches")
        from .trajectory import expand
        spec, base = io_formats.read_trajectory(trajectory)
        traj = expand(spec, base)
        pairs = json.loads(Path(matches).read_text())
        F = metrics.fundamental_from_cameras(traj[frame_a], traj[frame_b])
        value = metrics.sampson_error(F, [(np.asarray(m[0]), np.asarray(m[1]))
                                          for m in pairs])
        doc = {"metric": "sampson", "value": value, "num_matches": len(pairs),
               "frames": [frame_a, frame_b],
               "inputs": [str(trajectory), str(matches)]}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if report:
        Path(report).write_text(text + "\n")
    click.echo(text)


@cli.command("serve")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(bundle, host, port):
    """Run the interactive trajectory preview service."""
    import uvicorn

    from .service import create_app

    b = io_formats.read_bundle(bundle)
    app = create_app(prepare_scene(b))
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as e:
        raise InputError(f"cannot bind {host}:{port}: {e}") from e


@cli.command("inspect")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False))
def cmd_inspect(bundle):
    """Dump the parsed bundle and derived scene statistics."""
    b = io_formats.read_bundle(bundle)
    scene = prepare_scene(b)
    doc = {
        "bundle": {k: str(v) if isinstance(v, Path) else v
                   for k, v in vars(b).items()},
        "num_frames": scene.num_frames,
        "image_size": [scene.base_cam.width, scene.base_cam.height],
        "mesh_triangles": scene.mesh.num_triangles,
        "mesh_vertices": int(len(scene.mesh.vertices)),
        "skeleton_joints": list(scene.motion.skeleton.joints),
        "transfer_centroids": {
            "p_ref": scene.transfer.p_ref.tolist(),
            "p_bg": scene.transfer.p_bg.tolist(),
        },
    }
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@cli.command("preset")
@click.argument("name", type=click.Choice(sorted(DEFAULT_PRESETS)))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--frames", type=int, default=33, show_default=True)
@click.option("--width", type=int, default=512, show_default=True)
@click.option("--height", type=int, default=512, show_default=True)
@click.option("--focal", type=float, default=512.0, show_default=True)
@click.option("--anchor", nargs=3, type=float, default=(0.0, 0.0, 2.0),
              show_default=True, help="Orbit anchor (world meters).")
def cmd_preset(name, out, frames, width, height, focal, anchor):
    """Emit a preset trajectory file with an identity base camera."""
    from .geom import CameraFrame, Extrinsics, Intrinsics

    kind, magnitude = DEFAULT_PRESETS[name]
    spec = TrajectorySpec("preset", preset=PresetSpec(
        kind=kind, magnitude=magnitude, frames=frames,
        anchor=np.asarray(anchor)))
    base = CameraFrame(Intrinsics(focal, focal, width / 2, height / 2),
                       Extrinsics.identity(), width, height)
    io_formats.write_trajectory(spec, base, out)
    click.echo(f"wrote {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except InputError as e:
        click.echo(f"input error: {e}", err=True)
        return EXIT_INPUT
    except Exception as e:  # internal
        log.exception("internal error")
        click.echo(f"internal error: {e}", err=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
