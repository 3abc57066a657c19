import copy
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional
import yaml

from posemosaic.core import SynthConfig, CameraSampling
from posemosaic.clustering.scorers import DEFAULT_TAU_3D, DEFAULT_TAU_2D

SUBSAMPLE_CRITERIA = ('max', 'mean')


@dataclass(frozen=True)
class RunConfig:
    """
    The configuration of a batch run.
    Values come from the defaults below, overridden by an optional YAML file, overridden by command-line flags.

    Attributes
    ----------
    corpus : Optional[str]
        the corpus manifest path
    mocap : Optional[str]
        the MoCap pose file path
    output : Optional[str]
        the output directory
    synth : SynthConfig
        the synthesis parameters
    cameras : CameraSampling
        the virtual camera sampling parameters
    workers : int
        the number of worker threads, at least 1
    seed : int
        the global seed
    min_dist : float
        the MoCap subsampling threshold (mm)
    criterion : str
        the MoCap subsampling criterion, 'max' or 'mean'
    keep_intermediates : bool
        if True, the synthesis intermediates are stored for the preview
    k : int
        the number of pose classes
    tau_3d : float
        the bandwidth (mm) of the 3D baseline class scores
    tau_2d : float
        the bandwidth (px) of the 2D baseline class scores
    """
    corpus: Optional[str] = None
    mocap: Optional[str] = None
    output: Optional[str] = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    cameras: CameraSampling = field(default_factory=CameraSampling)
    workers: int = 1
    seed: int = 0
    min_dist: float = 50.0
    criterion: str = 'max'
    keep_intermediates: bool = False
    k: int = 5000
    tau_3d: float = DEFAULT_TAU_3D
    tau_2d: float = DEFAULT_TAU_2D

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f'The worker count must be at least 1, got {self.workers}.')
        if not self.min_dist > 0:
            raise ValueError(f'min_dist must be positive, got {self.min_dist}.')
        if self.criterion not in SUBSAMPLE_CRITERIA:
            raise ValueError(f'Unknown subsampling criterion {self.criterion!r}.')
        if self.k < 1:
            raise ValueError(f'The number of classes must be positive, got {self.k}.')
        if not (self.tau_3d > 0 and self.tau_2d > 0):
            raise ValueError(f'Score bandwidths must be positive, got {self.tau_3d}, {self.tau_2d}.')

    def check_paths(self, *names: str):
        """
        Checks that the given input paths are set and exist.

        :raises ValueError: if a path is not set
        :raises FileNotFoundError: if a path does not exist
        """
        for name in names:
            path = getattr(self, name)
            if not path:
                raise ValueError(f'No {name} path given.')
            if not os.path.exists(path):
                raise FileNotFoundError(f'The {name} path {path} does not exist.')


# Command-line flags overriding a nested configuration entry.
FLAG_KEYS = {
    'corpus': ('corpus',), 'mocap': ('mocap',), 'output': ('output',),
    'workers': ('workers',), 'seed': ('seed',), 'min_dist': ('min_dist',), 'criterion': ('criterion',),
    'keep_intermediates': ('keep_intermediates',), 'k': ('k',), 'tau_3d': ('tau_3d',), 'tau_2d': ('tau_2d',),
    'canvas': ('synth', 'canvas'), 'margin': ('synth', 'margin'), 'sigma': ('synth', 'sigma'),
    's_min': ('synth', 'blend', 's_min'), 's_max': ('synth', 'blend', 's_max'), 'alpha': ('synth', 'blend', 'alpha'),
    'cameras_per_pose': ('cameras', 'count'), 'azimuth': ('cameras', 'azimuth_range'),
    'elevation': ('cameras', 'elevation_range'), 'distance': ('cameras', 'distance'), 'focal': ('cameras', 'focal'),
}


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    result = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _merge(result[key], value)
        else:
            result[key] = value
    return result


def run_config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """
    Builds a run configuration from nested dictionaries; the global seed is also the synthesis seed.
    """
    data = dict(data)
    synth = data.pop('synth', None) or dict()
    cameras = data.pop('cameras', None) or dict()
    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f'Unknown configuration keys: {", ".join(sorted(unknown))}.')
    seed = int(data.get('seed', 0))
    synth_config = SynthConfig.from_dict({**synth, 'seed': seed})
    return RunConfig(synth=synth_config, cameras=CameraSampling.from_dict(cameras), **data)


def load_run_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Loads a run configuration from an optional YAML file whose keys mirror the :class:`RunConfig` fields, with
    nested ``synth``, ``synth.blend`` and ``cameras`` sections, then applies the flag overrides.

    :param config_path: the YAML file path
    :param overrides: flag values by flag name (see ``FLAG_KEYS``); None values are ignored
    :return: the run configuration
    """
    data: Dict[str, Any] = dict()
    if config_path:
        with open(config_path, encoding='utf-8') as f:
            loaded = yaml.safe_load(f) or dict()
        if not isinstance(loaded, dict):
            raise ValueError(f'The configuration file {config_path} must contain a mapping.')
        data = _merge(data, loaded)
    for flag, value in (overrides or dict()).items():
        if value is None or flag not in FLAG_KEYS:
            continue
        *parents, leaf = FLAG_KEYS[flag]
        node = data
        for parent in parents:
            node = node.setdefault(parent, dict())
        node[leaf] = list(value) if isinstance(value, tuple) else value
    return run_config_from_dict(data)
