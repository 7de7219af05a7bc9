"""
Stand up the card service
=========================

Builds every artifact the HTTP service needs (dataset CSV, trained
model, evaluation report, exported cards), writes a service.json
pointing at them, then starts the server. The UI at /ui and tools like
curl talk to the same endpoints:

    curl localhost:8077/patients
    curl localhost:8077/patients/<id>/card
    curl -X POST localhost:8077/whatif \
         -H 'content-type: application/json' \
         -d '{"encounter_id": <id>, "overrides": {"number_inpatient": 3}}'

Run with: python3 demos/serve_cards.py [--no-serve]
"""

import json
import sys
import tempfile
from pathlib import Path

from readmit.card import ModelMeta, calibrate_tiers, export_cards
from readmit.features import matrixize
from readmit.gbdt import TrainConfig, train
from readmit.ingest import labels_array, parse_dataset
from readmit.metrics import evaluate_scores, write_report
from readmit.split import SplitConfig, class_weight, stratified_split
from readmit.synthetic import synthetic_csv

work = Path(tempfile.mkdtemp(prefix="readmit-serve-"))

# Cohort, features, split, model: the same pipeline the CLI drives.
csv_path = work / "cohort.csv"
synthetic_csv(csv_path, n=4000, seed=7)
parsed = parse_dataset(csv_path)
y = labels_array(parsed.encounters)
X, registry = matrixize(parsed.encounters)
split = stratified_split(y, SplitConfig())
cfg = TrainConfig(max_depth=4, learning_rate=0.1, n_estimators=120,
                  early_stopping_rounds=20,
                  scale_pos_weight=class_weight(y[split.train_idx]),
                  seed=42, stamp="demo")
ensemble, _ = train(X, y, split, cfg,
                    registry_fingerprint=registry.fingerprint())
ensemble.save(work / "model.txt")

# Evaluation report for /model/metrics.
report = evaluate_scores(ensemble.predict_proba(X[split.test_idx]),
                         y[split.test_idx])
write_report(report, work / "report")

# Tier thresholds from validation quantiles, then one card per test
# encounter. The service serves these verbatim; it never re-scores.
thresholds = calibrate_tiers(ensemble.predict_proba(X[split.valid_idx]))
meta = ModelMeta(model_fingerprint=ensemble.fingerprint(),
                 trained_at=cfg.stamp, test_auroc=report.auroc,
                 test_auprc=report.auprc, thresholds=thresholds)
cards = export_cards([parsed.encounters[i] for i in split.test_idx],
                     ensemble, thresholds, meta, work / "cards.ndjson")
print(f"exported {len(cards)} cards "
      f"(high >= {thresholds.high_cut:.3f}, "
      f"medium >= {thresholds.medium_cut:.3f})")

# Service config file, also usable as `readmit serve --config ...`.
ui_dir = Path(__file__).resolve().parent.parent / "frontend" / "dist"
config = {
    "model_path": str(work / "model.txt"),
    "cards_path": str(work / "cards.ndjson"),
    "dataset_path": str(csv_path),
    "report_path": str(work / "report" / "report.json"),
}
if ui_dir.is_dir():
    config["ui_dir"] = str(ui_dir)
config_path = work / "service.json"
config_path.write_text(json.dumps(config, indent=2) + "\n")
print(f"service config written to {config_path}")

if "--no-serve" in sys.argv:
    print(f"start later with: readmit serve --config {config_path}")
else:
    import uvicorn

    from readmit.service import ServiceConfig, create_app

    service_cfg = ServiceConfig.from_file(config_path)
    print(f"serving on http://{service_cfg.host}:{service_cfg.port} (Ctrl-C to stop)")
    uvicorn.run(create_app(service_cfg), host=service_cfg.host,
                port=service_cfg.port, log_level="warning")
