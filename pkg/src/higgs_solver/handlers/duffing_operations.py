"""
Duffing reference handlers: equilibria, trajectories, portraits, predicate
"""

from typing import Any, Dict, List

import structlog

from ..analysis.duffing import (
    BubblePredicateInput,
    DuffingParams,
    PhasePortrait,
    bubble_predicate,
    curve_classification,
    equilibria,
    integrate_duffing,
    phase_portrait,
    portrait_grid,
)
from ..config import DUFFING_T_MAX, RuntimeConfig
from ..formats import write_portrait_csv
from ..utils import ValidationError, validate_finite, validate_positive_int
from .common import EXIT_OK, CommandResult, resolve_experiment

logger = structlog.get_logger(__name__)

DEFAULT_MU2 = 9.0
DEFAULT_LAMBDA = 2.0
DEFAULT_RANGE = (-3.0, 3.0)
DEFAULT_SAMPLES = 41


def _counts(portrait: PhasePortrait) -> str:
    return ", ".join(f"{label}={count}" for label, count in portrait.counts().items())


def handle_duffing(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    Query the damped, unforced Duffing system

    Args:
        arguments: {
            "mu2": float (optional, default 9),
            "lambda": float (optional, default 2),
            "equilibria": bool (optional),
            "trajectory": [phi, phi_t] (optional),
            "portrait": str (CSV path, optional),
            "range": [low, high] (optional, default [-3, 3]),
            "samples": int (per axis, optional, default 41),
            "t_max": float (optional, default 50),
            "curve": str (preset whose mid-line curve is classified, optional),
            "predicate": str (preset whose initial data is checked, optional)
        }
        config: Runtime configuration

    Returns:
        Report text (equilibria when nothing else is requested)
    """
    mu2 = float(arguments["mu2"]) if arguments.get("mu2") is not None else DEFAULT_MU2
    lam = float(arguments["lambda"]) if arguments.get("lambda") is not None else DEFAULT_LAMBDA
    params = DuffingParams(validate_finite(mu2, "mu2"), validate_finite(lam, "lambda"))
    t_max = float(arguments.get("t_max") or DUFFING_T_MAX)

    texts: List[str] = []
    requested = [
        key
        for key in ("trajectory", "portrait", "curve", "predicate")
        if arguments.get(key) is not None
    ]
    if arguments.get("equilibria") or not requested:
        eq = equilibria(params)
        texts.append(
            f"Equilibria for mu2={params.mu2:g}, lambda={params.lam:g}: "
            f"stable {eq.stable_pos:.4f}, {eq.stable_neg:.4f}; unstable {eq.unstable_zero:.4f}"
        )

    if arguments.get("trajectory") is not None:
        y0 = [validate_finite(float(v), "trajectory") for v in arguments["trajectory"]]
        if len(y0) != 2:
            raise ValidationError(f"trajectory needs (phi, phi_t), got {len(y0)} values")
        trajectory = integrate_duffing(y0, params, t_max=t_max)
        phi, phi_t = trajectory.final
        texts.append(
            f"Trajectory from ({y0[0]:g}, {y0[1]:g}): {trajectory.label.value} "
            f"at t = {trajectory.times[-1]:.4g} (phi = {phi:.6g}, phi_t = {phi_t:.3g})"
        )

    if arguments.get("portrait") is not None:
        low, high = (float(v) for v in (arguments.get("range") or DEFAULT_RANGE))
        if not low < high:
            raise ValidationError(f"range must be increasing, got [{low}, {high}]")
        count = validate_positive_int(arguments.get("samples") or DEFAULT_SAMPLES, "samples", 2)
        portrait = phase_portrait(params, portrait_grid(low, high, count), t_max=t_max)
        write_portrait_csv(portrait, arguments["portrait"])
        texts.append(f"✅ Portrait of {count}x{count} samples written to {arguments['portrait']}")
        texts.append(f"Labels: {_counts(portrait)}")

    if arguments.get("curve") is not None:
        experiment = resolve_experiment({"preset": arguments["curve"]}, config)
        portrait = curve_classification(experiment.initial, experiment.grid(), params, t_max=t_max)
        texts.append(f"Mid-line curve of {arguments['curve']}: {_counts(portrait)}")

    if arguments.get("predicate") is not None:
        experiment = resolve_experiment({"preset": arguments["predicate"]}, config)
        result = bubble_predicate(
            BubblePredicateInput(experiment.initial, experiment.mu2), experiment.grid()
        )
        if result.satisfied:
            verdict = f"holds on all {result.support_nodes} support nodes"
        elif result.witness is None:
            verdict = "not applicable: the data has empty support"
        else:
            point = ", ".join(f"{x:.4f}" for x in result.witness_point or ())
            verdict = f"fails at node {result.witness} (x = ({point}))"
        texts.append(
            f"Bubble condition for {arguments['predicate']} "
            f"(coefficient {result.coefficient:.6g}): {verdict}"
        )
        texts.append(f"Integral of phi^3 at t = 0: {result.integral_phi_cubed:.6g}")

    logger.info("duffing_report", mu2=params.mu2, lam=params.lam, requested=requested)
    return CommandResult("\n".join(texts), EXIT_OK)
