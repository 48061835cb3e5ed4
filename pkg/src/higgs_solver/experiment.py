"""
Experiment configuration files

YAML text naming a preset and/or giving explicit keys:

    preset: example3
    n: 128
    t_end: 0.5
    output_dir: runs/example3
    initial:
      phi0:
        - weight: 1.0
          sin_x: false
          bumps:
            - {center: [0.5, 0.5, 0.5], radius: 0.3, amplitude: 1.0}
      phi1: []

Explicit keys override the preset. Validation errors name the key path and
the 1-based line and column of the offending value.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import structlog
import yaml

from .config import (
    CFL_POLICIES,
    DEFAULT_BLOWUP_THRESHOLD,
    DEFAULT_HALO_TOLERANCE,
    DEFAULT_RESOLVED_FRACTION,
    DEFAULT_SCALING,
    DEFAULT_ZERO_FRACTION,
    GEOMETRIES,
    LINE_CHOICES,
    MIN_RESOLUTION,
    PRECISIONS,
)
from .core.field import (
    BumpSpec,
    Geometry,
    GridSpec,
    InitialData,
    Precision,
    Term,
    check_initial_data,
)
from .core.integrator import SimParams, default_dt
from .presets import PRESET_NAMES, preset_mapping
from .utils import SupportTouchesBoundaryError, ValidationError, validate_non_negative_float

logger = structlog.get_logger(__name__)

KeyPath = Tuple[Union[str, int], ...]

KNOWN_KEYS = {
    "preset",
    "description",
    "geometry",
    "n",
    "L",
    "mu2",
    "lambda",
    "dt",
    "t_end",
    "sample_every",
    "precision",
    "cfl_policy",
    "blowup_threshold",
    "halo_tolerance",
    "zero_fraction",
    "resolved_fraction",
    "initial",
    "output_dir",
    "lines",
    "line_times",
    "volume_times",
    "checkpoint_every",
}
TERM_KEYS = {"weight", "bumps", "sin_x"}
BUMP_KEYS = {"center", "radius", "amplitude"}
SIM_KEYS = (
    "dt",
    "t_end",
    "sample_every",
    "blowup_threshold",
    "halo_tolerance",
    "zero_fraction",
    "resolved_fraction",
)


class ConfigParseError(Exception):
    """Raised when config text is not valid YAML"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class ConfigValidationError(ValidationError):
    """Raised when a config value is invalid; carries the key path and position"""

    def __init__(
        self,
        key_path: str,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{key_path}{location}: {message}")
        self.key_path = key_path
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment"""

    n: int
    mu2: float
    lam: float
    t_end: float
    initial: InitialData
    geometry: Geometry = Geometry.CUBE3D
    scaling: float = DEFAULT_SCALING
    dt: Optional[float] = None
    sample_every: int = 20
    precision: Precision = Precision.DOUBLE
    cfl_policy: str = "stop"
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    halo_tolerance: float = DEFAULT_HALO_TOLERANCE
    zero_fraction: float = DEFAULT_ZERO_FRACTION
    resolved_fraction: float = DEFAULT_RESOLVED_FRACTION
    output_dir: Optional[str] = None
    lines: Tuple[str, ...] = ("midline_x",)
    line_times: Tuple[float, ...] = ()
    volume_times: Tuple[float, ...] = ()
    checkpoint_every: int = 0
    preset: Optional[str] = None
    description: str = ""

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.scaling, self.geometry)

    def params(self) -> SimParams:
        grid = self.grid()
        return SimParams(
            mu2=self.mu2,
            lam=self.lam,
            dt=default_dt(grid) if self.dt is None else self.dt,
            t_end=self.t_end,
            sample_every=self.sample_every,
            precision=self.precision,
            cfl_policy=self.cfl_policy,
            blowup_threshold=self.blowup_threshold,
            halo_tolerance=self.halo_tolerance,
            zero_fraction=self.zero_fraction,
            resolved_fraction=self.resolved_fraction,
        )

    def snapshot_times(self) -> List[float]:
        return sorted(set(self.line_times) | set(self.volume_times))

    def to_mapping(self) -> Dict[str, Any]:
        """Explicit config-file mapping (no preset expansion needed to reload)"""
        mapping: Dict[str, Any] = {}
        if self.preset:
            mapping["preset"] = self.preset
        mapping.update(
            {
                "description": self.description,
                "geometry": self.geometry.value,
                "n": self.n,
                "L": self.scaling,
                "mu2": self.mu2,
                "lambda": self.lam,
                "dt": self.dt,
                "t_end": self.t_end,
                "sample_every": self.sample_every,
                "precision": self.precision.value,
                "cfl_policy": self.cfl_policy,
                "blowup_threshold": self.blowup_threshold,
                "halo_tolerance": self.halo_tolerance,
                "zero_fraction": self.zero_fraction,
                "resolved_fraction": self.resolved_fraction,
                "initial": {
                    "phi0": [_term_mapping(t) for t in self.initial.phi0_terms],
                    "phi1": [_term_mapping(t) for t in self.initial.phi1_terms],
                },
                "output_dir": self.output_dir,
                "lines": list(self.lines),
                "line_times": list(self.line_times),
                "volume_times": list(self.volume_times),
                "checkpoint_every": self.checkpoint_every,
            }
        )
        return mapping


def _term_mapping(term: Term) -> Dict[str, Any]:
    return {
        "weight": term.weight,
        "sin_x": term.modulate_sin,
        "bumps": [
            {"center": list(b.center), "radius": b.radius, "amplitude": b.amplitude}
            for b in term.bumps
        ],
    }


def _format_path(path: KeyPath) -> str:
    text = ""
    for part in path:
        text += f"[{part}]" if isinstance(part, int) else (f".{part}" if text else part)
    return text or "<root>"


class _ConfigReader:
    """Typed access to a merged mapping with positions from the YAML node tree"""

    def __init__(self, root: Optional[yaml.Node]):
        self.root = root

    def _node(self, path: KeyPath) -> Optional[yaml.Node]:
        node = self.root
        for part in path:
            if isinstance(node, yaml.MappingNode) and isinstance(part, str):
                node = next((v for k, v in node.value if k.value == part), None)
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
                node = node.value[part] if part < len(node.value) else None
            else:
                return None
            if node is None:
                return None
        return node

    def error(self, path: KeyPath, message: str) -> ConfigValidationError:
        node = self._node(path)
        if node is None:
            return ConfigValidationError(_format_path(path), message)
        mark = node.start_mark
        return ConfigValidationError(_format_path(path), message, mark.line + 1, mark.column + 1)

    def number(self, value: Any, path: KeyPath) -> float:
        # YAML 1.1 reads 1e6 (no dot) as a string
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(path, f"expected a number, got {value!r}")
        return float(value)

    def integer(self, value: Any, path: KeyPath) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(path, f"expected an integer, got {value!r}")
        return value

    def boolean(self, value: Any, path: KeyPath) -> bool:
        if not isinstance(value, bool):
            raise self.error(path, f"expected true or false, got {value!r}")
        return value

    def choice(self, value: Any, path: KeyPath, choices: Sequence[str]) -> str:
        if not isinstance(value, str) or value.lower() not in choices:
            raise self.error(path, f"expected one of {', '.join(choices)}, got {value!r}")
        return value.lower()

    def sequence(self, value: Any, path: KeyPath) -> list:
        if not isinstance(value, list):
            raise self.error(path, f"expected a list, got {value!r}")
        return value

    def mapping(self, value: Any, path: KeyPath, allowed: set) -> dict:
        if not isinstance(value, dict):
            raise self.error(path, f"expected a mapping, got {value!r}")
        for key in value:
            if key not in allowed:
                raise self.error(path + (str(key),), "unknown key")
        return value

    def times(self, value: Any, path: KeyPath) -> Tuple[float, ...]:
        result = []
        for i, item in enumerate(self.sequence(value, path)):
            t = self.number(item, path + (i,))
            try:
                result.append(validate_non_negative_float(t, "time"))
            except ValidationError as e:
                raise self.error(path + (i,), str(e)) from e
        return tuple(sorted(result))

    def bump(self, value: Any, path: KeyPath) -> BumpSpec:
        value = self.mapping(value, path, BUMP_KEYS)
        if "center" not in value or "radius" not in value:
            raise self.error(path, "a bump needs center and radius")
        center = tuple(
            self.number(c, path + ("center", i))
            for i, c in enumerate(self.sequence(value["center"], path + ("center",)))
        )
        radius = self.number(value["radius"], path + ("radius",))
        amplitude = self.number(value.get("amplitude", 1.0), path + ("amplitude",))
        try:
            return BumpSpec(center, radius, amplitude)
        except ValidationError as e:
            raise self.error(path, str(e)) from e

    def term(self, value: Any, path: KeyPath) -> Term:
        value = self.mapping(value, path, TERM_KEYS)
        bumps = tuple(
            self.bump(b, path + ("bumps", i))
            for i, b in enumerate(self.sequence(value.get("bumps"), path + ("bumps",)))
        )
        weight = self.number(value.get("weight", 1.0), path + ("weight",))
        sin_x = self.boolean(value.get("sin_x", False), path + ("sin_x",))
        try:
            return Term(weight, bumps, sin_x)
        except ValidationError as e:
            raise self.error(path, str(e)) from e

    def initial(self, value: Any, path: KeyPath) -> InitialData:
        value = self.mapping(value, path, {"phi0", "phi1"})
        terms = {}
        for key in ("phi0", "phi1"):
            items = self.sequence(value.get(key, []), path + (key,))
            terms[key] = tuple(self.term(t, path + (key, i)) for i, t in enumerate(items))
        return InitialData(terms["phi0"], terms["phi1"])


def _compose(text: str) -> Tuple[Any, Optional[yaml.Node]]:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            problem = getattr(e, "problem", None) or str(e)
            line, column = mark.line + 1, mark.column + 1
            raise ConfigParseError(f"Invalid config: {problem}", line, column) from e
        raise ConfigParseError(f"Invalid config: {e}") from e
    return data, node


def load_config(text: str, default_n: int = 128) -> ExperimentConfig:
    """
    Parse and validate experiment config text

    Args:
        text: YAML text
        default_n: Resolution when neither the file nor the preset sets n

    Returns:
        ExperimentConfig

    Raises:
        ConfigParseError: If the text is not YAML or not a mapping
        ConfigValidationError: If a key is unknown or a value invalid
    """
    data, node = _compose(text)
    if data is None:
        data = {}
    reader = _ConfigReader(node)
    if not isinstance(data, dict):
        raise ConfigParseError("Config must be a mapping of keys to values")
    reader.mapping(data, (), KNOWN_KEYS)

    preset = data.get("preset")
    merged: Dict[str, Any] = {}
    if preset is not None:
        preset = reader.choice(preset, ("preset",), PRESET_NAMES)
        merged.update(preset_mapping(preset))
    merged.update(data)

    for key in ("mu2", "lambda", "t_end", "initial"):
        if key not in merged:
            raise reader.error((key,), "missing (set it or name a preset)")

    def number(key: str, default: float) -> float:
        return reader.number(merged.get(key, default), (key,))

    def choice(key: str, default: str, choices: Sequence[str]) -> str:
        return reader.choice(merged.get(key, default), (key,), choices)

    geometry = Geometry(choice("geometry", "cube3d", GEOMETRIES))
    if preset is not None:
        # Preset output times follow an overridden t_end or geometry.
        t_end = number("t_end", 0.0)
        for key in ("line_times", "volume_times"):
            if key not in data:
                merged[key] = [t for t in merged.get(key, []) if t <= t_end]
        if geometry is Geometry.RADIAL1D and "volume_times" not in data:
            merged["volume_times"] = []

    n = reader.integer(merged.get("n", default_n), ("n",))
    scaling = number("L", DEFAULT_SCALING)
    lines = tuple(
        reader.choice(v, ("lines", i), LINE_CHOICES)
        for i, v in enumerate(reader.sequence(merged.get("lines", ["midline_x"]), ("lines",)))
    )

    if n < MIN_RESOLUTION:
        raise reader.error(("n",), f"resolution must be at least {MIN_RESOLUTION}, got {n}")
    if not scaling > 0.0:
        raise reader.error(("L",), f"scaling must be positive, got {scaling}")
    grid = GridSpec(n, scaling, geometry)

    initial = reader.initial(merged["initial"], ("initial",))
    if geometry is Geometry.RADIAL1D and any(t.dimension == 3 for t in initial.terms()):
        try:
            initial = initial.to_radial()
        except ValidationError as e:
            raise reader.error(("initial",), str(e)) from e

    output_dir = merged.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise reader.error(("output_dir",), f"expected a path, got {output_dir!r}")

    config = ExperimentConfig(
        n=n,
        mu2=number("mu2", 0.0),
        lam=number("lambda", 0.0),
        t_end=number("t_end", 0.0),
        initial=initial,
        geometry=geometry,
        scaling=scaling,
        dt=None if merged.get("dt") is None else number("dt", 0.0),
        sample_every=reader.integer(merged.get("sample_every", 20), ("sample_every",)),
        precision=Precision(choice("precision", "double", PRECISIONS)),
        cfl_policy=choice("cfl_policy", "stop", CFL_POLICIES),
        blowup_threshold=number("blowup_threshold", DEFAULT_BLOWUP_THRESHOLD),
        halo_tolerance=number("halo_tolerance", DEFAULT_HALO_TOLERANCE),
        zero_fraction=number("zero_fraction", DEFAULT_ZERO_FRACTION),
        resolved_fraction=number("resolved_fraction", DEFAULT_RESOLVED_FRACTION),
        output_dir=output_dir,
        lines=lines,
        line_times=reader.times(merged.get("line_times", []), ("line_times",)),
        volume_times=reader.times(merged.get("volume_times", []), ("volume_times",)),
        checkpoint_every=reader.integer(merged.get("checkpoint_every", 0), ("checkpoint_every",)),
        preset=preset,
        description=str(merged.get("description", "")),
    )

    _validate_runtime(config, grid, reader)
    logger.debug("config_loaded", preset=preset, n=n, geometry=geometry.value)
    return config


def _validate_runtime(config: ExperimentConfig, grid: GridSpec, reader: _ConfigReader) -> None:
    """Check the invariants the solver would otherwise reject mid-run"""
    try:
        params = config.params()
    except ValidationError as e:
        message = str(e)
        for key in SIM_KEYS:
            if message.startswith(f"{key} "):
                raise reader.error((key,), message) from e
        raise reader.error((), message) from e

    if config.checkpoint_every < 0:
        raise reader.error(("checkpoint_every",), "must be 0 (off) or positive")
    for key, times in (("line_times", config.line_times), ("volume_times", config.volume_times)):
        late = [t for t in times if t > params.t_end]
        if late:
            raise reader.error((key,), f"times {late} are after t_end = {params.t_end}")
    if config.volume_times and grid.is_radial:
        raise reader.error(("volume_times",), "volumes are only written on the cube")

    try:
        check_initial_data(config.initial, grid)
    except (SupportTouchesBoundaryError, ValidationError) as e:
        raise reader.error(("initial",), str(e)) from e


def dump_config(config: ExperimentConfig) -> str:
    """YAML text that load_config parses back to an equal config"""
    return yaml.safe_dump(config.to_mapping(), sort_keys=False, default_flow_style=None)
