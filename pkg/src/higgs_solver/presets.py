"""
The seven experiment presets

Each preset is stored in the same key layout as an experiment config file,
so a config naming a preset is the preset merged with the file's keys.
"""

import copy
from typing import Any, Dict, List

CENTER = [0.5, 0.5, 0.5]

# Dead zones for long runs: the continuum support creeps toward r = 0.5 and
# stencil dust is amplified by the unstable zero equilibrium.
LONG_RUN_HALO_TOLERANCE = 1.0e-3
PRESET_ZERO_FRACTION = 1.0e-6


def _bump(center: List[float], radius: float, amplitude: float = 1.0) -> Dict[str, Any]:
    return {"center": list(center), "radius": radius, "amplitude": amplitude}


def _term(weight: float, *bumps: Dict[str, Any], sin_x: bool = False) -> Dict[str, Any]:
    return {"weight": weight, "bumps": list(bumps), "sin_x": sin_x}


def _base(description: str, mu2: float, lam: float, t_end: float) -> Dict[str, Any]:
    return {
        "description": description,
        "geometry": "cube3d",
        "L": 5.0,
        "mu2": mu2,
        "lambda": lam,
        "t_end": t_end,
        "sample_every": 20,
        "precision": "double",
        "cfl_policy": "stop",
        "zero_fraction": PRESET_ZERO_FRACTION,
        "lines": ["midline_x"],
        "line_times": [],
        "volume_times": [],
    }


def _example1() -> Dict[str, Any]:
    config = _base("convergence and precision study", 9.0, 2.0, 2.0)
    config["initial"] = {"phi0": [_term(3.0, _bump(CENTER, 0.3))], "phi1": []}
    config["line_times"] = [1.0, 2.0]
    return config


def _example2() -> Dict[str, Any]:
    config = _base("finite-time blow-up", 1.0, -1.0, 16.0)
    config["initial"] = {
        "phi0": [_term(2.0, _bump(CENTER, 0.2))],
        "phi1": [_term(10.0, _bump(CENTER, 0.2))],
    }
    # The bound is exceeded on the way to blow-up.
    config["cfl_policy"] = "warn"
    # The bump disperses by t = 0.5; tachyonic growth takes over afterwards.
    config["line_times"] = [0.25, 1.0, 2.0, 3.0, 8.0]
    return config


def _bubble_data() -> Dict[str, Any]:
    return {
        "phi0": [_term(1.0, _bump(CENTER, 0.3))],
        "phi1": [_term(-5.0, _bump(CENTER, 0.3))],
    }


def _example3() -> Dict[str, Any]:
    config = _base("short-time bubble formation", 9.0, 2.0, 1.0)
    config["initial"] = _bubble_data()
    config["line_times"] = [0.21, 0.22, 0.23, 0.4]
    config["volume_times"] = [0.4]
    return config


def _example4() -> Dict[str, Any]:
    config = _base("long-time bubble and smoothness monitor", 9.0, 2.0, 7.0)
    config["initial"] = _bubble_data()
    config["halo_tolerance"] = LONG_RUN_HALO_TOLERANCE
    config["line_times"] = [0.22, 0.5, 2.0, 5.0, 7.0]
    return config


def _example5() -> Dict[str, Any]:
    config = _base("no bubble, positive plateau", 9.0, 2.0, 7.0)
    config["initial"] = {"phi0": [_term(3.0, _bump(CENTER, 0.3))], "phi1": []}
    config["halo_tolerance"] = LONG_RUN_HALO_TOLERANCE
    config["line_times"] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    return config


def _example6() -> Dict[str, Any]:
    config = _base("modulated data in the positive Duffing basin", 9.0, 2.0, 4.0)
    config["initial"] = {
        "phi0": [_term(-10.0, _bump(CENTER, 0.3), _bump([0.55, 0.55, 0.55], 0.3), sin_x=True)],
        "phi1": [_term(5.0, _bump(CENTER, 0.3))],
    }
    config["line_times"] = [1.0, 2.0, 3.0, 4.0]
    return config


def _example7() -> Dict[str, Any]:
    config = _base("two bubbles merging", 0.1, 0.1, 3.0)
    low, high = [0.4, 0.4, 0.4], [0.6, 0.6, 0.6]
    config["initial"] = {
        "phi0": [_term(1.0, _bump(low, 0.2)), _term(1.0, _bump(high, 0.2))],
        "phi1": [_term(-5.0, _bump(low, 0.2)), _term(-5.0, _bump(high, 0.2))],
    }
    config["halo_tolerance"] = LONG_RUN_HALO_TOLERANCE
    config["lines"] = ["main_diagonal"]
    times = [0.08, 0.2, 0.69, 0.8, 1.0, 2.0, 2.15, 3.0]
    config["line_times"] = list(times)
    config["volume_times"] = list(times)
    return config


_BUILDERS = {
    "example1": _example1,
    "example2": _example2,
    "example3": _example3,
    "example4": _example4,
    "example5": _example5,
    "example6": _example6,
    "example7": _example7,
}

PRESET_NAMES = list(_BUILDERS)


def preset_mapping(name: str) -> Dict[str, Any]:
    """
    Config-file mapping of a preset (a fresh copy)

    Raises:
        KeyError: If the preset is unknown
    """
    return copy.deepcopy(_BUILDERS[name]())
