"""Shared fixtures: synthetic cohort, small trained model, dataset gating.

The public dataset file is not bundled. Tests that need it look for
``data/diabetic_data.csv`` under the repo root (or the READMIT_DATA
environment variable) and skip with a clear reason when absent; the rest
of the suite runs on the deterministic synthetic cohort.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from readmit import gbdt, ingest
from readmit.card import ModelMeta, calibrate_tiers, export_cards
from readmit.features import matrixize
from readmit.metrics import evaluate_scores, write_report
from readmit.service import ServiceConfig
from readmit.split import SplitConfig, class_weight, stratified_split
from readmit.synthetic import synthetic_cohort, synthetic_csv

REPO_ROOT = Path(__file__).resolve().parent.parent


def dataset_path() -> Path | None:
    env = os.environ.get("READMIT_DATA")
    candidates = [Path(env)] if env else []
    candidates.append(REPO_ROOT / "data" / "diabetic_data.csv")
    for p in candidates:
        if p.is_file():
            return p
    return None


requires_dataset = pytest.mark.skipif(
    dataset_path() is None,
    reason="public dataset not present; place diabetic_data.csv under data/ "
           "or set READMIT_DATA",
)


@pytest.fixture(scope="session")
def cohort():
    return synthetic_cohort(1500, seed=7)


@pytest.fixture(scope="session")
def cohort_matrix(cohort):
    X, reg = matrixize(cohort)
    y = ingest.labels_array(cohort)
    return X, y, reg


@pytest.fixture(scope="session")
def cohort_split(cohort_matrix):
    _, y, _ = cohort_matrix
    return stratified_split(y, SplitConfig())


@pytest.fixture(scope="session")
def small_model(cohort_matrix, cohort_split):
    """One modest model shared by explain/card/service tests."""
    X, y, reg = cohort_matrix
    weight = class_weight(y[cohort_split.train_idx])
    cfg = gbdt.TrainConfig(
        max_depth=4, learning_rate=0.1, n_estimators=80,
        early_stopping_rounds=20, scale_pos_weight=weight, seed=42)
    ensemble, history = gbdt.train(X, y, cohort_split, cfg,
                                   registry_fingerprint=reg.fingerprint())
    return ensemble, history


@pytest.fixture(scope="session")
def service_artifacts(tmp_path_factory):
    """Full artifact set (dataset CSV, model, report, cards) on disk.

    Built once from the synthetic generator so the service tests and the
    acceptance gate exercise the same startup path as production: parse
    the dataset, load the saved model, serve the exported cards verbatim.
    """
    root = tmp_path_factory.mktemp("service")
    data_csv = root / "data.csv"
    synthetic_csv(data_csv, n=800, seed=11)

    parsed = ingest.parse_dataset(data_csv)
    encounters = parsed.encounters
    y = ingest.labels_array(encounters)
    X, reg = matrixize(encounters)
    split = stratified_split(y, SplitConfig())

    cfg = gbdt.TrainConfig(max_depth=3, learning_rate=0.1, n_estimators=40,
                           early_stopping_rounds=15,
                           scale_pos_weight=class_weight(y[split.train_idx]),
                           seed=42, stamp="2026-08-17T00:00:00Z")
    ensemble, _ = gbdt.train(X, y, split, cfg,
                             registry_fingerprint=reg.fingerprint())
    model_path = root / "model.txt"
    ensemble.save(model_path)

    thresholds = calibrate_tiers(ensemble.predict_proba(X[split.valid_idx]))
    report = evaluate_scores(ensemble.predict_proba(X[split.test_idx]),
                             y[split.test_idx])
    report_dir = root / "report"
    write_report(report, report_dir)

    meta = ModelMeta(model_fingerprint=ensemble.fingerprint(),
                     trained_at=cfg.stamp,
                     test_auroc=report.auroc, test_auprc=report.auprc,
                     thresholds=thresholds)
    cards_path = root / "cards.ndjson"
    test_encounters = [encounters[i] for i in split.test_idx]
    cards = export_cards(test_encounters, ensemble, thresholds, meta,
                         cards_path)

    service_cfg = ServiceConfig(
        model_path=str(model_path),
        cards_path=str(cards_path),
        dataset_path=str(data_csv),
        report_path=str(report_dir / "report.json"),
    )
    return service_cfg, cards, report


@pytest.fixture()
def rng():
    return np.random.default_rng(20260817)
