"""The degraded reporting path from ground truth to the planners.

Each source adds its own bias and seeded Gaussian noise, drops readings at
its missing probability, and reports with a fixed delay. Fusion is a
reliability-weighted trimmed mean per variable (single min and max dropped
once four or more readings are present), robust to individually distorted
sources, with a confidence score that grows with report count and
agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ObservationSource, PmesiiState, Scenario, _readonly
from .errors import EmptyInputError, UnknownSourceError


@dataclass(frozen=True, eq=False)
class ObservationReport:
    """One source's (possibly stale, possibly gappy) readings.

    Missing readings are NaN in ``readings``; present ones are truncated to
    [0, 1]. ``week_measured`` is the week the readings describe, which lags
    ``week_reported`` by the source delay.
    """

    source_id: str
    week_reported: int
    week_measured: int
    readings: np.ndarray
    reliability: float

    def __post_init__(self):
        object.__setattr__(self, "readings", _readonly(self.readings))

    def present(self) -> np.ndarray:
        return ~np.isnan(self.readings)


@dataclass(frozen=True, eq=False)
class EstimatedState:
    """Fused situation estimate with per-variable confidence.

    ``confidence`` is 0 exactly where no report covered the variable, in
    which case the previous estimate (or the roster value) is carried
    forward and ``carried_forward`` flags it.
    """

    week: int
    values: np.ndarray
    confidence: np.ndarray
    report_counts: np.ndarray
    carried_forward: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "confidence", _readonly(self.confidence))
        object.__setattr__(self, "report_counts", _readonly(np.asarray(self.report_counts)))
        object.__setattr__(self, "carried_forward", _readonly(np.asarray(self.carried_forward)))

    def as_state(self) -> PmesiiState:
        return PmesiiState(week=self.week, values=self.values)


def _find_source(channel, source_id: str) -> ObservationSource:
    sources = channel.sources if isinstance(channel, Scenario) else channel
    for s in sources:
        if s.id == source_id:
            return s
    raise UnknownSourceError(f"no observation source with id {source_id!r}")


def observe(truth: PmesiiState, channel, source_id: str, seed) -> ObservationReport:
    """Generate one source's report on the given ground-truth state.

    The reading is truncate_[0,1](truth + bias + noise) per variable, with
    each variable independently missing at the source's missing
    probability. The report is issued ``delay_weeks`` after the measured
    week.
    """
    src = _find_source(channel, source_id)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = truth.values.shape[0]
    noise = rng.normal(0.0, 1.0, size=n) * src.noise_std
    missing = rng.random(n) < src.missing_prob
    readings = np.clip(truth.values + src.bias + noise, 0.0, 1.0)
    readings[missing] = np.nan
    return ObservationReport(
        source_id=src.id,
        week_reported=truth.week + src.delay_weeks,
        week_measured=truth.week,
        readings=readings,
        reliability=src.reliability,
    )


def fuse(reports, roster_values, previous: EstimatedState | None = None) -> EstimatedState:
    """Fuse reports into a best estimate per variable.

    Per variable: readings are sorted by (value, source id); with four or
    more present the single lowest and highest are dropped; the rest are
    averaged with reliability weights. Agreement is 1 minus the spread of
    the kept readings (floor 0) and confidence is agreement * k/(k+1) for k
    contributing reports. Variables no report covered carry the previous
    estimate (or the roster value) forward at confidence 0.
    """
    reports = list(reports)
    if not reports:
        raise EmptyInputError("fuse requires at least one report")
    roster_values = np.asarray(roster_values, dtype=float)
    n = roster_values.shape[0]
    fallback = previous.values if previous is not None else roster_values

    values = np.empty(n)
    confidence = np.zeros(n)
    counts = np.zeros(n, dtype=int)
    carried = np.zeros(n, dtype=bool)
    for i in range(n):
        triples = sorted(
            (float(r.readings[i]), r.source_id, r.reliability)
            for r in reports
            if not np.isnan(r.readings[i])
        )
        counts[i] = len(triples)
        if not triples:
            values[i] = fallback[i]
            carried[i] = True
            continue
        kept = triples[1:-1] if len(triples) >= 4 else triples
        low, high = kept[0][0], kept[-1][0]
        if low == high:
            values[i] = low
        else:
            wsum = sum(rel for _, _, rel in kept)
            values[i] = sum(v * rel for v, _, rel in kept) / wsum
        agreement = max(0.0, 1.0 - (high - low))
        confidence[i] = agreement * counts[i] / (counts[i] + 1)

    week = max(r.week_reported for r in reports)
    return EstimatedState(
        week=week,
        values=values,
        confidence=confidence,
        report_counts=counts,
        carried_forward=carried,
    )
