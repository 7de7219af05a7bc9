"""PatientCard construction, tier calibration, phrasing, and NDJSON export."""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from jsonschema import Draft202012Validator

from readmit.card import (
    CARD_SCHEMA_VERSION,
    DEFAULT_PHRASES,
    Factor,
    ModelMeta,
    RiskTier,
    TierThresholds,
    build_card,
    calibrate_tiers,
    care_plan,
    export_cards,
    fixed_thresholds,
    load_cards,
    make_tier,
    phrase,
    tier,
)
from readmit.errors import CalibrationError, ConfigError, ContractError, DataError
from readmit.features import registry
from readmit.gbdt import sigmoid
from readmit.ingest import labels_array
from tests.conftest import REPO_ROOT

TIER_RANK = {"low": 0, "medium": 1, "high": 2}


@pytest.fixture(scope="module")
def thresholds(small_model, cohort_matrix, cohort_split):
    ensemble, _ = small_model
    X, _, _ = cohort_matrix
    scores = ensemble.predict_proba(X[cohort_split.valid_idx])
    return calibrate_tiers(scores)


@pytest.fixture(scope="module")
def meta(small_model, thresholds):
    ensemble, _ = small_model
    return ModelMeta(model_fingerprint=ensemble.fingerprint(),
                     trained_at="2026-08-17T00:00:00Z",
                     test_auroc=0.71, test_auprc=0.12,
                     thresholds=thresholds)


# -- tiers ------------------------------------------------------------------

def test_tier_color_bijection():
    assert make_tier("low").color == "green"
    assert make_tier("medium").color == "yellow"
    assert make_tier("high").color == "red"
    with pytest.raises(ContractError):
        RiskTier(tier="low", color="red")
    with pytest.raises(ContractError):
        make_tier("extreme")


def test_calibrate_uniform_scores():
    scores = np.linspace(0.001, 0.999, 1000)
    t = calibrate_tiers(scores)
    assert t.high_cut == pytest.approx(0.9, abs=0.01)
    assert t.medium_cut == pytest.approx(0.7, abs=0.01)
    assert t.provenance == "quantile-based"


def test_calibrate_constant_scores_degenerate():
    with pytest.raises(CalibrationError):
        calibrate_tiers(np.full(200, 0.4))


def test_calibrate_too_few_scores():
    with pytest.raises(ConfigError, match="fixed_thresholds"):
        calibrate_tiers(np.linspace(0, 1, 99))


def test_threshold_validation():
    with pytest.raises(CalibrationError):
        fixed_thresholds(high=0.3, medium=0.5)
    with pytest.raises(CalibrationError):
        fixed_thresholds(high=1.0, medium=0.5)
    with pytest.raises(ConfigError):
        TierThresholds(high_cut=0.6, medium_cut=0.3, provenance="guessed")


def test_tier_boundaries_inclusive():
    t = fixed_thresholds(high=0.6, medium=0.3)
    assert tier(0.6, t).tier == "high"
    assert tier(0.3, t).tier == "medium"
    assert tier(0.0, t).tier == "low"
    assert tier(1.0, t).tier == "high"
    assert tier(0.29999, t).tier == "low"


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
       st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
@settings(max_examples=100)
def test_tier_monotone_in_score(a, b):
    t = fixed_thresholds(high=0.62, medium=0.31)
    lo, hi = sorted((a, b))
    assert TIER_RANK[tier(lo, t).tier] <= TIER_RANK[tier(hi, t).tier]


# -- phrases ----------------------------------------------------------------

def test_phrase_stated_examples():
    assert phrase("inpatient_ge_2", 0.8) == \
        "Two or more hospital stays in the past year (raises risk)"
    assert phrase("discharge_home", -0.2) == "Discharged to home (lowers risk)"
    assert phrase("zzz", 0.5) == "zzz"


def test_phrase_zero_contribution_is_bare():
    assert phrase("a1c_high", 0.0) == "A1C result above 7 percent"


def test_phrase_table_covers_default_registry():
    for name in registry().names:
        assert name in DEFAULT_PHRASES, name


# -- care plans ---------------------------------------------------------------

def _factor(name, value):
    return Factor(feature=name, contribution=value,
                  phrase=phrase(name, value))


def test_care_plan_tier_lines():
    assert len(care_plan(make_tier("high"), [])) == 3
    assert len(care_plan(make_tier("medium"), [])) == 2
    assert len(care_plan(make_tier("low"), [])) == 1


def test_care_plan_factor_lines_only_when_raising():
    raising = care_plan(make_tier("high"), [_factor("discharge_snf_rehab", 0.4)])
    assert any("receiving facility" in line for line in raising)
    lowering = care_plan(make_tier("high"), [_factor("discharge_snf_rehab", -0.4)])
    assert not any("receiving facility" in line for line in lowering)


def test_care_plan_deduplicates_equivalent_factors():
    plan = care_plan(make_tier("high"), [_factor("inpatient_ge_2", 0.4),
                                         _factor("number_inpatient", 0.3)])
    assert len([l for l in plan if "case-management" in l]) == 1


# -- build_card ---------------------------------------------------------------

def test_card_shape_and_consistency(cohort, small_model, thresholds, meta):
    ensemble, _ = small_model
    names = set(registry().names)
    for e in cohort[:40]:
        card = build_card(e, ensemble, thresholds, meta)
        assert card.encounter_id == e.encounter_id
        assert 0.0 <= card.risk_score <= 1.0
        assert len(card.factors) <= 5
        assert card.tier == tier(card.risk_score, thresholds)
        mags = [abs(f.contribution) for f in card.factors]
        assert mags == sorted(mags, reverse=True)
        for f in card.factors:
            assert f.feature in names
            assert f.phrase
    assert card.model_meta.schema_version == CARD_SCHEMA_VERSION


def test_identical_encounters_identical_cards(cohort, small_model, thresholds, meta):
    ensemble, _ = small_model
    a = build_card(cohort[5], ensemble, thresholds, meta)
    b = build_card(cohort[5], ensemble, thresholds, meta)
    assert a == b


def test_heavy_utilization_surfaces_in_factors(cohort, small_model, thresholds, meta):
    # the synthetic cohort plants its strongest signal on prior inpatient
    # stays, so a 5-admission patient must show a utilization factor
    ensemble, _ = small_model
    e = dataclasses.replace(cohort[0], number_inpatient=5)
    card = build_card(e, ensemble, thresholds, meta)
    utilization = {"number_inpatient", "inpatient_ge_2", "prior_util_sum"}
    named = {f.feature for f in card.factors}
    assert named & utilization


def test_build_card_score_matches_model(cohort, small_model, thresholds, meta, cohort_matrix):
    ensemble, _ = small_model
    X, _, _ = cohort_matrix
    card = build_card(cohort[7], ensemble, thresholds, meta)
    assert card.risk_score == float(sigmoid(np.array(
        ensemble.predict_margin(X[7]))))


# -- export -------------------------------------------------------------------

@pytest.fixture(scope="module")
def exported(cohort, cohort_split, small_model, thresholds, meta, tmp_path_factory):
    ensemble, _ = small_model
    dest = tmp_path_factory.mktemp("cards") / "cards.ndjson"
    test_encounters = [cohort[i] for i in cohort_split.test_idx]
    cards = export_cards(test_encounters, ensemble, thresholds, meta, dest)
    return dest, cards, test_encounters


def test_export_count_matches_test_split(exported):
    dest, cards, test_encounters = exported
    lines = dest.read_text().splitlines()
    assert len(lines) == len(cards) == len(test_encounters)


def test_export_sorted_and_loadable(exported):
    dest, cards, _ = exported
    ids = [c.encounter_id for c in cards]
    assert ids == sorted(ids)
    raw = load_cards(dest)
    assert [r["encounter_id"] for r in raw] == ids
    assert raw[0] == cards[0].to_dict()


def test_every_exported_card_validates_against_schema(exported):
    dest, _, _ = exported
    schema = json.loads((REPO_ROOT / "docs" / "card.schema.json").read_text())
    validator = Draft202012Validator(schema)
    for record in load_cards(dest):
        validator.validate(record)


def test_reexport_is_byte_identical(exported, small_model, thresholds, meta, tmp_path):
    dest, _, test_encounters = exported
    ensemble, _ = small_model
    again = tmp_path / "cards2.ndjson"
    export_cards(test_encounters, ensemble, thresholds, meta, again)
    assert again.read_bytes() == dest.read_bytes()


def test_export_io_error_carries_path(cohort, small_model, thresholds, meta, tmp_path):
    ensemble, _ = small_model
    bad = tmp_path / "missing-dir" / "cards.ndjson"
    with pytest.raises(DataError, match="missing-dir"):
        export_cards(cohort[:2], ensemble, thresholds, meta, bad)


def test_load_cards_rejects_bad_json(tmp_path):
    bad = tmp_path / "cards.ndjson"
    bad.write_text('{"encounter_id": 1}\nnot json\n')
    with pytest.raises(DataError, match=":2"):
        load_cards(bad)


def test_thresholds_recorded_in_model_meta(exported, thresholds):
    _, cards, _ = exported
    block = cards[0].to_dict()["model_meta"]["thresholds"]
    assert block == {"high_cut": thresholds.high_cut,
                     "medium_cut": thresholds.medium_cut,
                     "provenance": "quantile-based"}
