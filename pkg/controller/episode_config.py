""" Docstring for the episode_config.py file.

Episode configuration read from INI files. An episode file may name a preset in [episode] preset; the preset is read
first from the config directory and the episode file overrides it key by key.
"""
import configparser
import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

from errors import ConfigError
from mapping.info_gain import IgRayParams, ViKind
from mapping.occupancy_map import OctreeParams
from planner.costs_utility import PositionCostParams, TraversalCostParams
from planner.rrt import PlannerParams
from simulator.geometry import BoundingBox, Pose
from simulator.scenes import BUILTIN_PREFIX
from simulator.sensor_sim import LidarModel, ScanActionModel
from terrain.traversability import TerrainParams

logger = logging.getLogger(__name__)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config")

SECTIONS = ("episode", "scene", "sensor", "octree", "info_gain", "costs", "terrain", "planner")

# Keys given in degrees in the files and held in radians by the parameter types.
DEGREE_KEYS = {("costs", "behind_angle"), ("terrain", "slope_max")}


@dataclass(frozen=True)
class FilterParams:
    """ Sweep downsampling and outlier removal settings. """
    leaf_size: float = 0.05
    outlier_k: int = 10
    outlier_stddev: float = 1.0


@dataclass
class EpisodeConfig:
    """
    Everything an episode needs. Parameter groups are the types of the modules that consume them.
    """
    scene_path: str
    start_pose: Pose
    object_bbox: Optional[BoundingBox] = None
    name: str = "episode"
    lidar: LidarModel = field(default_factory=LidarModel)
    action: ScanActionModel = field(default_factory=ScanActionModel)
    sweep_filter: FilterParams = field(default_factory=FilterParams)
    octree: OctreeParams = field(default_factory=OctreeParams)
    info_gain: IgRayParams = field(default_factory=IgRayParams)
    position_cost: PositionCostParams = field(default_factory=PositionCostParams)
    traversal_cost: TraversalCostParams = field(default_factory=TraversalCostParams)
    terrain: TerrainParams = field(default_factory=TerrainParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    vi_kind: ViKind = ViKind.OCCLUSION_AWARE
    max_scans: int = 12
    rng_seed: int = 0
    ground_truth_spacing: float = 0.05
    coverage_threshold: Optional[float] = None

    def __post_init__(self):
        if self.max_scans < 1:
            raise ConfigError(f"max_scans must be at least 1, got {self.max_scans}")
        if not self.scene_path.startswith(BUILTIN_PREFIX) and not os.path.isfile(self.scene_path):
            raise ConfigError(f"scene file {self.scene_path} does not exist")

    def to_dict(self) -> dict:
        """
        JSON-serialisable view of the configuration, recorded with the episode metrics.

        :return: Nested dictionary.
        """
        def group(params) -> dict:
            return {key: list(value) if isinstance(value, tuple) else value
                    for key, value in dataclasses.asdict(params).items()}

        return {
            "name": self.name,
            "scene_path": self.scene_path,
            "object_bbox": self.object_bbox.to_list() if self.object_bbox else None,
            "start_pose": self.start_pose.to_list(),
            "vi_kind": self.vi_kind.value,
            "max_scans": self.max_scans,
            "rng_seed": self.rng_seed,
            "ground_truth_spacing": self.ground_truth_spacing,
            "coverage_threshold": self.coverage_threshold,
            "sensor": group(self.lidar),
            "action": group(self.action),
            "filter": group(self.sweep_filter),
            "octree": group(self.octree),
            "info_gain": group(self.info_gain),
            "position_cost": group(self.position_cost),
            "traversal_cost": group(self.traversal_cost),
            "terrain": group(self.terrain),
            "planner": group(self.planner),
        }


def _floats(text: str, count: int, key: str) -> list:
    try:
        values = [float(part) for part in text.replace(";", ",").split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"{key}: expected {count} comma separated numbers, got {text!r}") from e
    if len(values) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {len(values)}")
    return values


def _convert(section: str, key: str, text: str, default):
    """
    Converts one INI value to the type of the parameter default.

    :param section: Section name, for messages.
    :param key: Key name.
    :param text: Raw value.
    :param default: Default value of the parameter.
    :return: Converted value.
    """
    name = f"[{section}] {key}"
    try:
        if isinstance(default, bool):
            return configparser.ConfigParser.BOOLEAN_STATES[text.strip().lower()]
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            value = float(text)
            return math.radians(value) if (section, key) in DEGREE_KEYS else value
        if isinstance(default, tuple):
            return tuple(_floats(text, len(default), name))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{name}: cannot parse {text!r}") from e
    return text


def _build(params_type, section: str, values: Dict[str, str], extra: Optional[dict] = None):
    """
    Builds a parameter dataclass from the keys of one section. Keys consumed here are removed from values.

    :param params_type: Frozen parameter dataclass.
    :param section: Section name.
    :param values: Remaining raw keys of the section.
    :param extra: Values set by the loader itself (shared settings).
    :return: The parameter instance.
    """
    defaults = params_type()
    kwargs = dict(extra or {})
    for params_field in dataclasses.fields(params_type):
        if params_field.name in values:
            kwargs[params_field.name] = _convert(section, params_field.name, values.pop(params_field.name),
                                                 getattr(defaults, params_field.name))
    try:
        return params_type(**kwargs)
    except ValueError as e:
        raise ConfigError(f"[{section}]: {e}") from e


def read_config_files(path: str) -> configparser.ConfigParser:
    """
    Reads an episode file on top of its preset.

    :param path: Episode INI file.
    :return: The merged parser.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser()
    try:
        episode = configparser.ConfigParser()
        episode.read(path, encoding="utf-8")
        preset = episode.get("episode", "preset", fallback=None)
        if preset:
            preset_path = os.path.join(CONFIG_DIR, f"{preset}.ini")
            if not os.path.isfile(preset_path):
                raise ConfigError(f"unknown preset {preset!r}: {preset_path} does not exist")
            parser.read(preset_path, encoding="utf-8")
            logger.info("Loaded preset %s", preset_path)
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        logger.error("Error reading config %s: %s", path, e)
        raise ConfigError(f"malformed config {path}: {e}") from e
    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown} in {path}")
    return parser


# pylint: disable-msg=too-many-locals
def load_episode_config(path: str, overrides: Optional[Dict[str, Dict[str, str]]] = None) -> EpisodeConfig:
    """
    Loads an episode configuration.

    :param path: Episode INI file.
    :param overrides: Raw values applied on top of the files, as {section: {key: value}}.
    :return: The configuration.
    """
    parser = read_config_files(path)
    for section, values in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        for key, value in values.items():
            if value is not None:
                parser.set(section, key, str(value))

    raw = {section: dict(parser.items(section)) if parser.has_section(section) else {} for section in SECTIONS}
    base_dir = os.path.dirname(os.path.abspath(path))
    episode, scene = raw["episode"], raw["scene"]
    episode.pop("preset", None)

    if "path" not in scene:
        raise ConfigError(f"[scene] path is required in {path}")
    scene_path = scene.pop("path")
    if not scene_path.startswith(BUILTIN_PREFIX) and not os.path.isabs(scene_path):
        scene_path = os.path.normpath(os.path.join(base_dir, scene_path))
    object_bbox = None
    if "object_bbox" in scene:
        try:
            object_bbox = BoundingBox.from_list(_floats(scene.pop("object_bbox"), 6, "[scene] object_bbox"))
        except ValueError as e:
            raise ConfigError(f"[scene] object_bbox: {e}") from e
    try:
        ground_truth_spacing = float(scene.pop("ground_truth_spacing", 0.05))
    except ValueError as e:
        raise ConfigError(f"[scene] ground_truth_spacing: {e}") from e

    if "start_pose" not in episode:
        raise ConfigError(f"[episode] start_pose is required in {path}")
    start_pose = Pose.from_list(_floats(episode.pop("start_pose"), 4, "[episode] start_pose"))
    try:
        vi_kind = ViKind.parse(episode.pop("vi", "oa"))
        rng_seed = int(episode.pop("rng_seed", 0))
        max_scans = int(episode.pop("max_scans", 12))
        threshold = episode.pop("coverage_threshold", None)
        coverage_threshold = float(threshold) if threshold else None
    except ValueError as e:
        raise ConfigError(f"[episode]: {e}") from e
    name = episode.pop("name", os.path.splitext(os.path.basename(path))[0])

    sensor = raw["sensor"]
    lidar = _build(LidarModel, "sensor", sensor)
    action = _build(ScanActionModel, "sensor", sensor)
    filter_params = _build(FilterParams, "sensor", sensor)
    ig_values = raw["info_gain"]
    if "elevation_half_fov" not in ig_values:
        ig_values["elevation_half_fov"] = str(action.effective_vertical_fov(lidar))
    info_gain = _build(IgRayParams, "info_gain", ig_values, {"sensor_height": lidar.sensor_height})
    costs = raw["costs"]
    position = _build(PositionCostParams, "costs", costs)
    traversal = _build(TraversalCostParams, "costs", costs)
    terrain = _build(TerrainParams, "terrain", raw["terrain"])
    planner = _build(PlannerParams, "planner", raw["planner"],
                     {"rng_seed": rng_seed, "footprint_radius": terrain.footprint_radius})
    octree = _build(OctreeParams, "octree", raw["octree"])

    leftover = {section: sorted(values) for section, values in raw.items() if values}
    if leftover:
        raise ConfigError(f"unknown config keys {leftover} in {path}")

    config = EpisodeConfig(scene_path=scene_path, start_pose=start_pose, object_bbox=object_bbox, name=name,
                           lidar=lidar, action=action, sweep_filter=filter_params, octree=octree, info_gain=info_gain,
                           position_cost=position, traversal_cost=traversal, terrain=terrain, planner=planner,
                           vi_kind=vi_kind, max_scans=max_scans, rng_seed=rng_seed,
                           ground_truth_spacing=ground_truth_spacing, coverage_threshold=coverage_threshold)
    logger.info("Episode config %s: scene %s, vi %s, seed %d, max scans %d", name, scene_path, vi_kind.value,
                rng_seed, max_scans)
    return config
