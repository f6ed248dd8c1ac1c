""" Docstring for the main.py file

Command line entry point: run, evaluate, ig-oracle, compare and export-scene.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from analyzer.coverage import default_threshold, point_cloud_coverage
from controller.episode_config import load_episode_config
from controller.episode_controller import run_episode
from errors import ActiveMappingError, ConfigError
from log import setup_logging
from mapping.info_gain import IgRayParams, ViKind, information_gain
from mapping.occupancy_map import OccupancyOctree
from simulator.geometry import BoundingBox, Pose
from simulator.point_cloud_io import read_ply
from simulator.scene import export_scene_mesh
from simulator.scenes import BUILTIN_SCENES, builtin_scene

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """
    Argument parser whose usage errors also print a machine readable error record.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message, "step": None}), file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _numbers(count: int):
    def parse(text: str) -> List[float]:
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"expected {count} comma separated numbers, got {text!r}") from e
        if len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma separated numbers, got {len(values)}")
        return values
    return parse


def _vi_kind(text: str) -> ViKind:
    try:
        return ViKind.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> CliArgumentParser:
    """
    Builds the command line parser.

    :return: The parser.
    """
    parser = CliArgumentParser(prog="active-mapping", description="Next best view active mapping simulator")
    parser.add_argument("--stage", choices=["dev", "prod"], default=None, help="logging configuration")
    parser.add_argument("--log-dir", default="./logs", help="directory of the log files")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one episode")
    run.add_argument("--config", required=True, help="episode INI file")
    run.add_argument("--seed", type=int, default=None, help="override [episode] rng_seed")
    run.add_argument("--vi", type=_vi_kind, default=None, help="volumetric information: oa or rse")
    run.add_argument("--out", default=None, help="artifact directory")
    run.add_argument("--plots", action="store_true", help="also write PNG figures")

    evaluate = commands.add_parser("evaluate", help="point cloud coverage of a cloud against a ground truth")
    evaluate.add_argument("--ground-truth", required=True, help="ground truth PLY")
    evaluate.add_argument("--cloud", required=True, help="reconstructed PLY")
    evaluate.add_argument("--threshold", type=float, default=default_threshold(0.05), help="distance in meters")

    oracle = commands.add_parser("ig-oracle", help="information gain of one pose against an octree dump")
    oracle.add_argument("--octree", required=True, help="octree dump written by run")
    oracle.add_argument("--pose", type=_numbers(4), required=True, help="x,y,z,yaw")
    oracle.add_argument("--vi", type=_vi_kind, default=None, help="oa or rse (default: both)")
    oracle.add_argument("--bbox", type=_numbers(6), default=None,
                        help="object box min_x,min_y,min_z,max_x,max_y,max_z (default: the map bounds)")
    oracle.add_argument("--max-range", type=float, default=IgRayParams.max_range, help="ray length in meters")

    compare = commands.add_parser("compare", help="run oa and rse on the same config and seeds")
    compare.add_argument("--config", required=True, help="episode INI file")
    compare.add_argument("--seeds", type=int, nargs="+", default=[0], help="episode seeds")
    compare.add_argument("--out", required=True, help="output directory")

    export = commands.add_parser("export-scene", help="write a builtin scene as OBJ")
    export.add_argument("--name", required=True, choices=sorted(BUILTIN_SCENES), help="builtin scene")
    export.add_argument("--out", required=True, help="OBJ path")
    return parser


def command_run(args) -> dict:
    """ Runs one episode and summarises it. """
    overrides = {"episode": {"rng_seed": args.seed, "vi": args.vi.value if args.vi else None}}
    config = load_episode_config(args.config, overrides)
    log = run_episode(config, args.out, args.plots)
    metrics = log.metrics
    return {"termination_reason": log.termination_reason, "vi_kind": config.vi_kind.value, "n_s": metrics.n_s,
            "c_p": metrics.coverage_per_step[-1] if metrics.coverage_per_step else 0.0,
            "c_p_observable": metrics.observable_coverage_per_step[-1] if metrics.n_s else 0.0,
            "d_t": metrics.d_t, "t_all": metrics.t_all, "t_nbv": metrics.t_nbv}


def command_evaluate(args) -> dict:
    """ Coverage of one cloud against a ground truth cloud. """
    report = point_cloud_coverage(read_ply(args.ground_truth), read_ply(args.cloud), args.threshold)
    return report.to_dict()


def command_ig_oracle(args) -> dict:
    """ Information gain of one pose against a dumped octree. """
    octree = OccupancyOctree.load_dump(args.octree)
    bbox = BoundingBox.from_list(args.bbox) if args.bbox else octree.bounds
    pose = Pose.from_list(args.pose)
    params = IgRayParams(max_range=args.max_range)
    kinds = [args.vi] if args.vi else list(ViKind)
    gains = {kind.value: information_gain(octree, pose, params, kind, bbox) for kind in kinds}
    return {"pose": pose.to_list(), "gains": gains}


def command_compare(args) -> dict:
    """ Runs both volumetric information kinds over the seeds and writes compare.csv. """
    rows = []
    for kind in ViKind:
        for seed in args.seeds:
            config = load_episode_config(args.config, {"episode": {"rng_seed": seed, "vi": kind.value}})
            log = run_episode(config, os.path.join(args.out, f"{kind.value}_{seed}"))
            metrics = log.metrics
            rows.append({"vi": kind.value, "seed": seed,
                         "c_p": metrics.coverage_per_step[-1] if metrics.n_s else 0.0,
                         "c_p_observable": metrics.observable_coverage_per_step[-1] if metrics.n_s else 0.0,
                         "d_t": metrics.d_t, "n_s": metrics.n_s, "t_all": metrics.t_all, "t_nbv": metrics.t_nbv,
                         "termination_reason": log.termination_reason})
    frame = pd.DataFrame(rows)
    os.makedirs(args.out, exist_ok=True)
    output_file_path = os.path.join(args.out, "compare.csv")
    frame.to_csv(output_file_path, index=False)
    logger.info("Comparison of %d episodes written to %s", len(frame), output_file_path)
    summary = frame.groupby("vi")[["c_p", "d_t", "n_s", "t_nbv"]].mean()
    return {"table": output_file_path, "mean": json.loads(summary.to_json(orient="index"))}


def command_export_scene(args) -> dict:
    """ Writes a builtin scene as OBJ. """
    directory = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(directory, exist_ok=True)
    scene = builtin_scene(args.name)
    export_scene_mesh(scene, args.out)
    return {"scene": args.name, "path": args.out, "object_bbox": scene.object_bbox.to_list()}


COMMANDS = {
    "run": command_run,
    "evaluate": command_evaluate,
    "ig-oracle": command_ig_oracle,
    "compare": command_compare,
    "export-scene": command_export_scene,
}


def _fail(record: dict, code: int) -> int:
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses the arguments and runs a subcommand. Results go to stdout as JSON; failures print a JSON error record to
    stderr.

    :param argv: Arguments without the program name; defaults to sys.argv[1:].
    :return: Exit status: 0 on success, 1 on a runtime failure, 2 on a usage or configuration error.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.stage, args.log_dir)
    try:
        result = COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e.message)
        return _fail(e.to_record(), EXIT_USAGE)
    except ActiveMappingError as e:
        logger.error("%s failed: %s", args.command, e.message)
        return _fail(e.to_record(), EXIT_FAILURE)
    except (OSError, ValueError, IndexError) as e:
        logger.error("%s failed: %s", args.command, e)
        return _fail({"error": "invalid_input", "message": str(e), "step": None}, EXIT_FAILURE)
    print(json.dumps(result, indent=4, default=_json_default))
    return EXIT_OK


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


if __name__ == "__main__":
    sys.exit(main())
