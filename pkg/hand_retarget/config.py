"""
Run configuration

JSON config files are loaded through marshmallow schemas that apply the
default constants, range-check every value and build the frozen config
dataclasses the modules consume.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from marshmallow import Schema, ValidationError, fields, post_load, pre_load, validate

from .energy import EnergyWeights, default_joint_weights
from .errors import ConfigurationError
from .evaluator import EvaluationConfig
from .hand_kinematics import N_GLOBAL, N_JOINTS, HandModelSpec
from .ik_baseline import IkConfig
from .optimizer import DEFAULT_GLOBAL_SPAN, SwarmConfig
from .scene import ContactConfig, SceneState
from .synth import SynthConfig

logger = logging.getLogger(__name__)

MODES = ('ik', 'hybrid', 'hybrid+refine', 'pose')
REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_HAND_SPEC = REPO_ROOT / 'hand_model.json'
DEFAULT_SCENE = REPO_ROOT / 'scene_default.json'

CONFIG_ENV = 'HAND_RETARGET_CONFIG'
WORKERS_ENV = 'HAND_RETARGET_WORKERS'

NonNegative = validate.Range(min=0)
Positive = validate.Range(min=0, min_inclusive=False)


class WeightsSchema(Schema):
    omega_pose = fields.Float(load_default=0.2, validate=NonNegative)
    omega_task = fields.Float(load_default=0.8, validate=NonNegative)
    omega_p = fields.Float(load_default=0.5, validate=NonNegative)
    omega_a = fields.Float(load_default=0.5, validate=NonNegative)
    omega_joint = fields.List(fields.Float(validate=NonNegative), validate=validate.Length(equal=N_JOINTS))
    omega_palm = fields.Float(load_default=3.0, validate=NonNegative)
    omega_ee = fields.Float(load_default=1.0, validate=NonNegative)
    omega_cost = fields.Float(load_default=2.0, validate=validate.Range(min=1))
    d_max = fields.Float(load_default=0.04, validate=Positive)

    @post_load
    def make(self, data, **kwargs) -> EnergyWeights:
        data.setdefault('omega_joint', default_joint_weights().tolist())
        return EnergyWeights(**data).normalized()


class SwarmSchema(Schema):
    swarm_size = fields.Integer(load_default=25, validate=validate.Range(min=1))
    iterations = fields.Integer(load_default=50, validate=NonNegative)
    c1 = fields.Float(load_default=1.5, validate=NonNegative)
    c2 = fields.Float(load_default=1.5, validate=NonNegative)
    inertia = fields.Float(load_default=0.7, validate=NonNegative)
    v_max_fraction = fields.Float(load_default=0.10, validate=NonNegative)
    init_noise_fraction = fields.Float(load_default=0.05, validate=NonNegative)
    min_fitness_step = fields.Float(load_default=1e-4, validate=Positive)
    stall_patience = fields.Integer(load_default=1, validate=validate.Range(min=1))
    global_span = fields.List(fields.Float(validate=NonNegative), validate=validate.Length(equal=N_GLOBAL),
                              load_default=list(DEFAULT_GLOBAL_SPAN))
    rng_seed = fields.Integer(load_default=None, allow_none=True)

    @post_load
    def make(self, data, **kwargs) -> SwarmConfig:
        return SwarmConfig(**data)


class IkSchema(Schema):
    max_passes = fields.Integer(load_default=3, validate=validate.Range(min=1))
    clamp = fields.Boolean(load_default=True)
    warm_start = fields.Boolean(load_default=True)
    singular_tolerance = fields.Float(load_default=0.05, validate=validate.Range(min=0, max=1, min_inclusive=False,
                                                                                 max_inclusive=False))

    @post_load
    def make(self, data, **kwargs) -> IkConfig:
        return IkConfig(**data)


class ContactSchema(Schema):
    contact_epsilon = fields.Float(load_default=0.005, validate=NonNegative)
    opposition_angle_deg = fields.Float(load_default=90.0, validate=validate.Range(min=0, max=180))
    min_touching = fields.Integer(load_default=2, validate=validate.Range(min=1, max=6))
    gravity = fields.Float(load_default=9.81, validate=NonNegative)

    @post_load
    def make(self, data, **kwargs) -> ContactConfig:
        return ContactConfig(**data)


class EvaluationSchema(Schema):
    contact_epsilon = fields.Float(load_default=0.005, validate=NonNegative)
    lift_margin = fields.Float(load_default=0.005, validate=NonNegative)
    palm_distance = fields.Float(load_default=0.2, validate=Positive)
    success_lift = fields.Float(load_default=0.17, validate=Positive)
    min_touching = fields.Integer(load_default=2, validate=validate.Range(min=1, max=6))

    @post_load
    def make(self, data, **kwargs) -> EvaluationConfig:
        return EvaluationConfig(**data)


class SynthSchema(Schema):
    fps = fields.Float(load_default=60.0, validate=Positive)
    human_scale = fields.Float(load_default=1.1, validate=Positive)
    approach_frames = fields.Integer(load_default=40, validate=validate.Range(min=1))
    close_frames = fields.Integer(load_default=30, validate=validate.Range(min=1))
    hold_frames = fields.Integer(load_default=10, validate=validate.Range(min=1))
    lift_frames = fields.Integer(load_default=60, validate=validate.Range(min=1))
    final_hold_frames = fields.Integer(load_default=20, validate=validate.Range(min=1))
    approach_height = fields.Float(load_default=0.12, validate=NonNegative)
    lift_height = fields.Float(load_default=0.25, validate=NonNegative)
    palm_clearance = fields.Float(load_default=0.002, validate=NonNegative)
    contact_inset = fields.Float(load_default=0.001, validate=NonNegative)
    start_jitter = fields.Float(load_default=0.02, validate=NonNegative)
    lateral_jitter = fields.Float(load_default=0.005, validate=NonNegative)
    timing_jitter = fields.Float(load_default=0.2, validate=validate.Range(min=0, max=1, max_inclusive=False))
    lift_jitter = fields.Float(load_default=0.03, validate=NonNegative)

    @post_load
    def make(self, data, **kwargs) -> SynthConfig:
        return SynthConfig(**data)


SECTIONS = {
    'weights': WeightsSchema,
    'swarm': SwarmSchema,
    'ik': IkSchema,
    'contact': ContactSchema,
    'evaluation': EvaluationSchema,
    'synth': SynthSchema,
}


class RunConfigSchema(Schema):
    hand_spec = fields.String(load_default=str(DEFAULT_HAND_SPEC))
    scene = fields.String(load_default=str(DEFAULT_SCENE))
    mode = fields.String(load_default='hybrid', validate=validate.OneOf(MODES))
    fps = fields.Float(load_default=60.0, validate=Positive)
    refine_rate = fields.Integer(load_default=2, validate=validate.Range(min=1))
    seed = fields.Integer(load_default=0)
    output_dir = fields.String(load_default='runs')
    weights = fields.Nested(WeightsSchema)
    swarm = fields.Nested(SwarmSchema)
    ik = fields.Nested(IkSchema)
    contact = fields.Nested(ContactSchema)
    evaluation = fields.Nested(EvaluationSchema)
    synth = fields.Nested(SynthSchema)

    @pre_load
    def fill_sections(self, data, **kwargs):
        data = dict(data)
        for name in SECTIONS:
            data.setdefault(name, {})
        return data


@dataclass(frozen=True, eq=False)
class RunConfig:
    hand_spec: Path = DEFAULT_HAND_SPEC
    scene: Path = DEFAULT_SCENE
    mode: str = 'hybrid'
    fps: float = 60.0
    refine_rate: int = 2
    seed: int = 0
    output_dir: Path = Path('runs')
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    ik: IkConfig = field(default_factory=IkConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def load_spec(self) -> HandModelSpec:
        return HandModelSpec.load(self.hand_spec)

    def load_scene(self) -> SceneState:
        return SceneState.load(self.scene)

    def with_overrides(self, mode: Optional[str] = None, seed: Optional[int] = None,
                       omega_task: Optional[float] = None, swarm_size: Optional[int] = None,
                       iterations: Optional[int] = None) -> 'RunConfig':
        """Command-line overrides on top of the file values"""
        if mode is not None and mode not in MODES:
            raise ConfigurationError(f"Unknown mode {mode!r}", {'modes': list(MODES)})
        swarm = self.swarm
        if swarm_size is not None:
            swarm = replace(swarm, swarm_size=swarm_size)
        if iterations is not None:
            swarm = replace(swarm, iterations=iterations)
        # a swarm seed that follows the run seed moves with it
        if seed is not None and swarm.rng_seed in (None, self.seed):
            swarm = replace(swarm, rng_seed=seed)
        return replace(
            self,
            mode=mode if mode is not None else self.mode,
            seed=seed if seed is not None else self.seed,
            weights=self.weights if omega_task is None else self.weights.with_task_weight(omega_task),
            swarm=swarm,
        )

    def run_header(self) -> Dict[str, Any]:
        """Identity of a run as written into records and metrics files"""
        return {
            'mode': self.mode,
            'omega_task': self.weights.omega_task,
            'swarm': self.swarm.swarm_size,
            'iterations': self.swarm.iterations,
            'seed': self.seed,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'hand_spec': str(self.hand_spec),
            'scene': str(self.scene),
            'mode': self.mode,
            'fps': self.fps,
            'refine_rate': self.refine_rate,
            'seed': self.seed,
            'output_dir': str(self.output_dir),
            'weights': self.weights.to_dict(),
            'swarm': self.swarm.to_dict(),
            'ik': asdict(self.ik),
            'contact': asdict(self.contact),
            'evaluation': asdict(self.evaluation),
            'synth': asdict(self.synth),
        }


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def run_config_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    """Validate a config document; relative paths resolve against base_dir"""
    try:
        loaded = RunConfigSchema().load(data)
    except ValidationError as e:
        raise ConfigurationError("Invalid run config", {'fields': e.messages})
    base = base_dir or Path.cwd()
    swarm = loaded['swarm']
    if swarm.rng_seed is None:
        swarm = replace(swarm, rng_seed=loaded['seed'])
    return RunConfig(
        hand_spec=_resolve(base, loaded['hand_spec']),
        scene=_resolve(base, loaded['scene']),
        mode=loaded['mode'],
        fps=loaded['fps'],
        refine_rate=loaded['refine_rate'],
        seed=loaded['seed'],
        output_dir=_resolve(base, loaded['output_dir']),
        weights=loaded['weights'],
        swarm=swarm,
        ik=loaded['ik'],
        contact=loaded['contact'],
        evaluation=loaded['evaluation'],
        synth=loaded['synth'],
    )


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load a run config file.

    Without a path, HAND_RETARGET_CONFIG is consulted; with neither the
    built-in defaults are used.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        logger.debug("No run config given, using defaults")
        return run_config_from_dict({}, REPO_ROOT)

    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read run config {path}: {e}")
    config = run_config_from_dict(data, path.resolve().parent)
    logger.debug(f"Loaded run config from {path} (mode={config.mode})")
    return config


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, '1')))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer")
