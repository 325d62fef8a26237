"""The measurement loop: check a policy, prune it, check again, compare.

Everything here returns SafetyReports or CSV text built only from the
inputs and declared seeds, so repeated runs are byte-identical. Wall-clock
timings are collected on the report objects but serialized as zero unless
explicitly requested, because emitting them would break that contract.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from fractions import Fraction

from .checking import CheckResult, check
from .errors import PruneSpecError
from .induced import BuildLimits, BuildResult, build_induced_dtmc
from .model import EnvironmentModel
from .policy import NeuralPolicy
from .properties import Prob, parse_property
from .pruning import PruneSpec, feature_prune, prune

# ===== Constants =====

# |delta| at or below this counts as "unchanged". Identical inputs rerun
# bit-identically, so this slack only matters for genuinely re-solved
# chains that happen to land on the same value.
UNCHANGED_TOLERANCE = 1e-12

CSV_HEADER = ("method", "layer", "fraction", "seed", "property", "m", "m_hat", "delta", "states", "transitions", "time_ms")

SWEEP_METHODS = ("l1", "random")


# ===== Reports =====


@dataclass(frozen=True)
class ChainStats:
    """Size and build time of one induced chain."""

    states: int
    transitions: int
    time_ms: float


@dataclass(frozen=True)
class SafetyReport:
    """One measurement, optionally paired with a pruned re-measurement.

    ``m`` is the original policy's checked value, ``m_hat`` the pruned
    policy's, ``delta = m_hat - m``. ``verdict`` summarizes the comparison:
    violation (threshold comparator present and m_hat fails it), unchanged,
    improved, or degraded by the declared safety polarity; None when there
    is no pruned measurement. ``satisfied`` is the comparator verdict on
    the original measurement, when the property carries one.
    """

    property_text: str
    m: float
    satisfied: bool | None
    original: ChainStats
    m_hat: float | None = None
    delta: float | None = None
    verdict: str | None = None
    prune_spec: PruneSpec | None = None
    mask_size: int | None = None
    pruned: ChainStats | None = None
    model_id: str = ""
    policy_id: str = ""


def report_to_dict(report: SafetyReport, include_timings: bool = False) -> dict:
    """Flatten a report for JSON output; timings are zeroed by default."""

    def stats(chain: ChainStats | None) -> dict | None:
        if chain is None:
            return None
        return {
            "states": chain.states,
            "transitions": chain.transitions,
            "time_ms": chain.time_ms if include_timings else 0,
        }

    return {
        "property": report.property_text,
        "m": report.m,
        "satisfied": report.satisfied,
        "m_hat": report.m_hat,
        "delta": report.delta,
        "verdict": report.verdict,
        "prune_spec": report.prune_spec.to_dict() if report.prune_spec else None,
        "mask_size": report.mask_size,
        "dtmc": stats(report.original),
        "dtmc_pruned": stats(report.pruned),
        "model": report.model_id,
        "policy": report.policy_id,
    }


# ===== Polarity and verdicts =====


def _higher_is_safer(comparator: str | None, lower_is_safer: bool) -> bool:
    if comparator in (">", ">="):
        return True
    if comparator in ("<", "<="):
        return False
    return not lower_is_safer


def _verdict(prop: Prob, pruned: CheckResult, delta: float, lower_is_safer: bool) -> str:
    if prop.comparator is not None and pruned.satisfied is False:
        return "violation"
    if abs(delta) <= UNCHANGED_TOLERANCE:
        return "unchanged"
    improved = (delta > 0) == _higher_is_safer(prop.comparator, lower_is_safer)
    return "improved" if improved else "degraded"


# ===== Measurement =====


def _measure_once(
    env: EnvironmentModel, policy: NeuralPolicy, prop: Prob, limits: BuildLimits | None
) -> tuple[CheckResult, ChainStats, BuildResult]:
    build = build_induced_dtmc(env, policy, limits)
    result = check(build.dtmc, prop)
    stats = ChainStats(
        states=build.stats.states,
        transitions=build.stats.transitions,
        time_ms=build.stats.duration_ms,
    )
    return result, stats, build


def measure(
    env: EnvironmentModel,
    policy: NeuralPolicy,
    property_text: str,
    limits: BuildLimits | None = None,
    *,
    model_id: str = "",
    policy_id: str = "",
) -> SafetyReport:
    """Build the induced chain and check one property: the value ``m``."""
    prop = parse_property(property_text)
    result, stats, _ = _measure_once(env, policy, prop, limits)
    return SafetyReport(
        property_text=property_text,
        m=result.value,
        satisfied=result.satisfied,
        original=stats,
        model_id=model_id,
        policy_id=policy_id,
    )


def prune_and_measure(
    env: EnvironmentModel,
    policy: NeuralPolicy,
    property_text: str,
    spec: PruneSpec,
    limits: BuildLimits | None = None,
    *,
    lower_is_safer: bool = False,
    model_id: str = "",
    policy_id: str = "",
) -> SafetyReport:
    """Measure, prune per ``spec``, re-measure, and compare.

    The verdict follows the property's own polarity when it carries a
    comparator (>= means higher is safer, <= the opposite); plain queries
    default to higher-is-safer unless ``lower_is_safer`` is set.
    """
    prop = parse_property(property_text)
    original, stats, _ = _measure_once(env, policy, prop, limits)
    pruned_policy, mask = prune(policy, spec)
    pruned, pruned_stats, _ = _measure_once(env, pruned_policy, prop, limits)
    delta = pruned.value - original.value
    return SafetyReport(
        property_text=property_text,
        m=original.value,
        satisfied=original.satisfied,
        original=stats,
        m_hat=pruned.value,
        delta=delta,
        verdict=_verdict(prop, pruned, delta, lower_is_safer),
        prune_spec=spec,
        mask_size=mask.size,
        pruned=pruned_stats,
        model_id=model_id,
        policy_id=policy_id,
    )


def feature_importance(
    env: EnvironmentModel,
    policy: NeuralPolicy,
    property_text: str,
    limits: BuildLimits | None = None,
    *,
    lower_is_safer: bool = False,
    model_id: str = "",
    policy_id: str = "",
) -> list[SafetyReport]:
    """Prune each input feature in schema order and re-measure.

    The original measurement is computed once and shared across rows; each
    report's prune_spec names the feature it describes.
    """
    prop = parse_property(property_text)
    original, stats, _ = _measure_once(env, policy, prop, limits)
    reports = []
    for feature in policy.feature_names:
        pruned_policy, mask = feature_prune(policy, feature)
        pruned, pruned_stats, _ = _measure_once(env, pruned_policy, prop, limits)
        delta = pruned.value - original.value
        reports.append(
            SafetyReport(
                property_text=property_text,
                m=original.value,
                satisfied=original.satisfied,
                original=stats,
                m_hat=pruned.value,
                delta=delta,
                verdict=_verdict(prop, pruned, delta, lower_is_safer),
                prune_spec=PruneSpec(method="feature", feature=feature),
                mask_size=mask.size,
                pruned=pruned_stats,
                model_id=model_id,
                policy_id=policy_id,
            )
        )
    return reports


# ===== Sweeps =====


def parse_fraction_grid(text: str) -> list[Fraction]:
    """Parse ``start:stop:step`` into exact grid points within [0, 1].

    The grid is start, start+step, ... up to and including stop when the
    step lands on it. Exact rational arithmetic keeps points like 0.6 from
    wandering into 0.6000000000000001 territory.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise PruneSpecError(f"fraction grid {text!r} must look like start:stop:step")
    try:
        start, stop, step = (Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise PruneSpecError(f"fraction grid {text!r} has a non-numeric part") from None
    if not (0 <= start <= stop <= 1):
        raise PruneSpecError(f"fraction grid {text!r} must satisfy 0 <= start <= stop <= 1")
    if step <= 0:
        raise PruneSpecError(f"fraction grid {text!r} needs a positive step")
    count = int((stop - start) / step) + 1
    return [start + i * step for i in range(count)]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return str(value)


def sweep(
    env: EnvironmentModel,
    policy: NeuralPolicy,
    property_text: str,
    method: str,
    layer: int,
    fraction_grid: str,
    seeds: tuple[int, ...] = (),
    limits: BuildLimits | None = None,
    out_path: str | None = None,
    *,
    lower_is_safer: bool = False,
    include_timings: bool = False,
    model_id: str = "",
    policy_id: str = "",
) -> str:
    """Run prune_and_measure over a fraction grid and emit CSV.

    l1 yields one row per fraction; random yields one row per (fraction,
    seed) plus a per-fraction mean row (seed column "mean"). Rows are
    ordered by (fraction, seed). The returned text is also written to
    ``out_path`` when given; a failed write removes the partial file.
    """
    if method not in SWEEP_METHODS:
        raise PruneSpecError(f"sweep method must be one of {list(SWEEP_METHODS)}")
    if method == "random" and not seeds:
        raise PruneSpecError("random sweeps need at least one seed")
    if method == "l1" and seeds:
        raise PruneSpecError("l1 sweeps take no seeds")
    fractions = parse_fraction_grid(fraction_grid)
    ordered_seeds = tuple(sorted(seeds))

    rows: list[list[str]] = []
    for fraction in fractions:
        fraction_value = float(fraction)
        if method == "l1":
            report = prune_and_measure(
                env,
                policy,
                property_text,
                PruneSpec(method="l1", layer=layer, fraction=fraction_value),
                limits,
                lower_is_safer=lower_is_safer,
            )
            rows.append(_sweep_row(report, fraction_value, seed="", include_timings=include_timings))
        else:
            batch = []
            for seed in ordered_seeds:
                report = prune_and_measure(
                    env,
                    policy,
                    property_text,
                    PruneSpec(method="random", layer=layer, fraction=fraction_value, seed=seed),
                    limits,
                    lower_is_safer=lower_is_safer,
                )
                batch.append(report)
                rows.append(_sweep_row(report, fraction_value, seed=seed, include_timings=include_timings))
            mean_m_hat = sum(r.m_hat for r in batch) / len(batch)
            mean_delta = sum(r.delta for r in batch) / len(batch)
            rows.append(
                [
                    "random",
                    _csv_cell(layer),
                    _csv_cell(fraction_value),
                    "mean",
                    property_text,
                    _csv_cell(batch[0].m),
                    _csv_cell(mean_m_hat),
                    _csv_cell(mean_delta),
                    "",
                    "",
                    _csv_cell(0),
                ]
            )

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    text = buffer.getvalue()

    if out_path is not None:
        try:
            with open(out_path, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        except BaseException:
            if os.path.exists(out_path):
                os.remove(out_path)
            raise
    return text


def _sweep_row(report: SafetyReport, fraction: float, seed, include_timings: bool) -> list[str]:
    spec = report.prune_spec
    time_ms = 0
    if include_timings:
        time_ms = round(report.original.time_ms + (report.pruned.time_ms if report.pruned else 0.0), 3)
    return [
        spec.method,
        _csv_cell(spec.layer),
        _csv_cell(fraction),
        _csv_cell(seed),
        report.property_text,
        _csv_cell(report.m),
        _csv_cell(report.m_hat),
        _csv_cell(report.delta),
        _csv_cell(report.pruned.states if report.pruned else None),
        _csv_cell(report.pruned.transitions if report.pruned else None),
        _csv_cell(time_ms),
    ]
