"""PatientCard assembly: risk tiers, plain-language factors, care plans.

A card is the glanceable clinician-facing record for one encounter: the
predicted readmission probability, a color-coded tier, up to five
attributed factors rendered as plain language, and a short templated care
plan. Tiers come from validation-score quantiles rather than fixed cuts
because class weighting shifts raw probabilities upward; absolute
boundaries would label nearly every patient high.

Export format is NDJSON: one card object per line, keys sorted, ordered
by ascending encounter_id, so re-exports are byte-identical. The schema
is documented in docs/card-schema-v1.md and enforced by
docs/card.schema.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CalibrationError, ConfigError, ContractError, DataError
from .explain import path_contributions, top_contributors
from .features import FeatureConfig, engineer, registry
from .gbdt import Ensemble
from .ingest import Encounter

CARD_SCHEMA_VERSION = "1"

TIER_COLORS = {"low": "green", "medium": "yellow", "high": "red"}
TIER_ORDER = {"low": 0, "medium": 1, "high": 2}


@dataclass(frozen=True)
class RiskTier:
    tier: str
    color: str

    def __post_init__(self):
        if TIER_COLORS.get(self.tier) != self.color:
            raise ContractError(f"tier {self.tier!r} cannot be {self.color!r}")


def make_tier(name: str) -> RiskTier:
    if name not in TIER_COLORS:
        raise ContractError(f"unknown tier {name!r}")
    return RiskTier(tier=name, color=TIER_COLORS[name])


@dataclass(frozen=True)
class TierThresholds:
    """Score cut points: high at/above high_cut, medium at/above medium_cut."""

    high_cut: float
    medium_cut: float
    provenance: str  # "quantile-based" or "fixed"

    def __post_init__(self):
        if not (0.0 < self.medium_cut < self.high_cut < 1.0):
            raise CalibrationError(
                f"need 0 < medium_cut < high_cut < 1, got "
                f"medium={self.medium_cut} high={self.high_cut}")
        if self.provenance not in ("quantile-based", "fixed"):
            raise ConfigError(f"unknown provenance {self.provenance!r}")


def calibrate_tiers(validation_scores: Sequence[float]) -> TierThresholds:
    """P90/P70 of validation predicted probabilities as tier boundaries.

    Needs at least 100 scores for the quantiles to mean anything; with
    fewer, or with degenerate (near-constant) scores, use
    fixed_thresholds() instead.
    """
    scores = np.asarray(validation_scores, dtype=np.float64)
    if scores.size < 100:
        raise ConfigError(
            f"{scores.size} validation scores is too few to calibrate "
            "quantile tiers; use fixed_thresholds(high, medium)")
    high = float(np.quantile(scores, 0.90))
    medium = float(np.quantile(scores, 0.70))
    if not medium < high:
        raise CalibrationError(
            "degenerate validation scores: P70 and P90 coincide; "
            "use fixed_thresholds(high, medium)")
    return TierThresholds(high_cut=high, medium_cut=medium, provenance="quantile-based")


def fixed_thresholds(high: float, medium: float) -> TierThresholds:
    return TierThresholds(high_cut=high, medium_cut=medium, provenance="fixed")


def tier(score: float, thresholds: TierThresholds) -> RiskTier:
    """Boundary scores take the higher tier (inclusive cuts)."""
    if score >= thresholds.high_cut:
        return make_tier("high")
    if score >= thresholds.medium_cut:
        return make_tier("medium")
    return make_tier("low")


# Plain-language base phrases for registry features. Direction suffixes
# are appended from the contribution sign; unknown names fall back to the
# bare feature name with no suffix.
DEFAULT_PHRASES: dict[str, str] = {
    "number_inpatient": "Hospital stays in the past year",
    "inpatient_ge_2": "Two or more hospital stays in the past year",
    "number_outpatient": "Outpatient visits in the past year",
    "number_emergency": "Emergency department visits in the past year",
    "prior_util_sum": "Total care visits in the past year",
    "discharge_disposition_id": "Discharge destination code",
    "discharge_home": "Discharged to home",
    "discharge_snf_rehab": "Discharged to skilled nursing or rehab",
    "admission_type_id": "Admission type code",
    "admission_source_id": "Admission source code",
    "time_in_hospital": "Length of this hospital stay",
    "num_lab_procedures": "Lab tests during this stay",
    "num_procedures": "Procedures during this stay",
    "num_medications": "Medications during this stay",
    "a1c_high": "A1C result above 7 percent",
    "any_diabetes_med": "On diabetes medication",
    "age_mid": "Patient age",
    "gender_Male": "Male sex on record",
    "race_AfricanAmerican": "Race recorded as African American",
    "race_Asian": "Race recorded as Asian",
    "race_Caucasian": "Race recorded as Caucasian",
    "race_Hispanic": "Race recorded as Hispanic",
    "race_Other": "Race recorded as other",
    "max_glu_serum_Norm": "Normal glucose serum result",
    "max_glu_serum_gt200": "Glucose serum above 200",
    "max_glu_serum_gt300": "Glucose serum above 300",
    "change_Ch": "Diabetes medication changed this stay",
}


def phrase(feature_name: str, contribution: float,
           table: Mapping[str, str] = DEFAULT_PHRASES) -> str:
    """Plain-language factor text with a (raises/lowers risk) suffix."""
    base = table.get(feature_name)
    if base is None:
        return feature_name
    if contribution > 0:
        return f"{base} (raises risk)"
    if contribution < 0:
        return f"{base} (lowers risk)"
    return base


# Care-plan template lines. Placeholder text keyed on tier and factors,
# not clinical guidance.
_TIER_PLANS: dict[str, tuple[str, ...]] = {
    "high": (
        "Schedule a follow-up call within 48 hours of discharge.",
        "Arrange a clinic visit within 7 days.",
        "Complete medication reconciliation before discharge.",
    ),
    "medium": (
        "Schedule a follow-up call within 7 days of discharge.",
        "Confirm a primary-care appointment within 14 days.",
    ),
    "low": (
        "Provide standard discharge instructions.",
    ),
}

# (feature, only_when_raising, extra line) checked in factor order.
_FACTOR_PLANS: tuple[tuple[str, bool, str], ...] = (
    ("discharge_snf_rehab", True,
     "Coordinate follow-up scheduling with the receiving facility."),
    ("inpatient_ge_2", True,
     "Flag for case-management review of recent admissions."),
    ("number_inpatient", True,
     "Flag for case-management review of recent admissions."),
    ("a1c_high", True,
     "Review the glycemic control plan before discharge."),
    ("number_emergency", True,
     "Discuss emergency-visit triggers and urgent-care alternatives."),
)


@dataclass(frozen=True)
class Factor:
    feature: str
    contribution: float
    phrase: str


@dataclass(frozen=True)
class ModelMeta:
    """Provenance block stamped into every card."""

    model_fingerprint: str
    trained_at: str
    test_auroc: float
    test_auprc: float
    thresholds: TierThresholds
    schema_version: str = CARD_SCHEMA_VERSION


@dataclass(frozen=True)
class PatientCard:
    encounter_id: int
    risk_score: float
    tier: RiskTier
    factors: tuple[Factor, ...]
    care_plan: tuple[str, ...]
    model_meta: ModelMeta

    def to_dict(self) -> dict:
        return {
            "encounter_id": self.encounter_id,
            "risk_score": self.risk_score,
            "tier": {"tier": self.tier.tier, "color": self.tier.color},
            "factors": [
                {"feature": f.feature, "contribution": f.contribution,
                 "phrase": f.phrase}
                for f in self.factors
            ],
            "care_plan": list(self.care_plan),
            "model_meta": {
                "schema_version": self.model_meta.schema_version,
                "model_fingerprint": self.model_meta.model_fingerprint,
                "trained_at": self.model_meta.trained_at,
                "test_auroc": self.model_meta.test_auroc,
                "test_auprc": self.model_meta.test_auprc,
                "thresholds": {
                    "high_cut": self.model_meta.thresholds.high_cut,
                    "medium_cut": self.model_meta.thresholds.medium_cut,
                    "provenance": self.model_meta.thresholds.provenance,
                },
            },
        }


def care_plan(risk: RiskTier, factors: Sequence[Factor]) -> tuple[str, ...]:
    lines = list(_TIER_PLANS[risk.tier])
    seen = set(lines)
    for f in factors:
        for name, raising_only, line in _FACTOR_PLANS:
            if f.feature != name or line in seen:
                continue
            if raising_only and not f.contribution > 0:
                continue
            lines.append(line)
            seen.add(line)
    return tuple(lines)


def build_card(encounter: Encounter, model: Ensemble,
               thresholds: TierThresholds, meta: ModelMeta,
               config: FeatureConfig = FeatureConfig(),
               phrases: Mapping[str, str] = DEFAULT_PHRASES,
               k: int = 5) -> PatientCard:
    """Score one encounter and assemble its card.

    Pure given (model, thresholds, tables): identical encounters yield
    identical cards.
    """
    x = engineer(encounter, config)
    names = registry(config).names
    score = float(model.predict_proba(x))
    attribution = path_contributions(model, x)
    top = top_contributors(attribution, names, k=k)
    factors = tuple(
        Factor(feature=name, contribution=value,
               phrase=phrase(name, value, phrases))
        for name, value in top
    )
    risk = tier(score, thresholds)
    return PatientCard(
        encounter_id=encounter.encounter_id,
        risk_score=score,
        tier=risk,
        factors=factors,
        care_plan=care_plan(risk, factors),
        model_meta=meta,
    )


def export_cards(encounters: Iterable[Encounter], model: Ensemble,
                 thresholds: TierThresholds, meta: ModelMeta,
                 dest: str | Path,
                 config: FeatureConfig = FeatureConfig(),
                 phrases: Mapping[str, str] = DEFAULT_PHRASES) -> list[PatientCard]:
    """Write one card per encounter as NDJSON ordered by encounter_id."""
    ordered = sorted(encounters, key=lambda e: e.encounter_id)
    cards = [build_card(e, model, thresholds, meta, config, phrases)
             for e in ordered]
    dest = Path(dest)
    try:
        with open(dest, "w") as fh:
            for c in cards:
                fh.write(json.dumps(c.to_dict(), sort_keys=True) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write cards to {dest}: {exc}") from exc
    return cards


def load_cards(source: str | Path) -> list[dict]:
    """Parse an NDJSON card file back into raw dicts (served verbatim)."""
    source = Path(source)
    try:
        text = source.read_text()
    except OSError as exc:
        raise DataError(f"cannot read cards from {source}: {exc}") from exc
    cards = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            cards.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DataError(f"{source}:{lineno}: bad card record: {exc}") from exc
    return cards
