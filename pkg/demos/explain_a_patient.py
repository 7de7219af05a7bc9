"""
From prediction to patient card
===============================

Trains a small model on the synthetic cohort, then unpacks a single
high-risk prediction three ways: global gain importance, per-encounter
path attributions, and the plain-language patient card a clinician
would see.

Run with: python3 demos/explain_a_patient.py
"""

import numpy as np

from readmit.card import ModelMeta, build_card, calibrate_tiers
from readmit.explain import path_contributions, ranked_importance, top_contributors
from readmit.features import matrixize
from readmit.gbdt import TrainConfig, train
from readmit.ingest import labels_array
from readmit.split import SplitConfig, class_weight, stratified_split
from readmit.synthetic import synthetic_cohort

# Train on the synthetic cohort (same recipe as train_and_evaluate.py).
encounters = synthetic_cohort(4000, seed=7)
y = labels_array(encounters)
X, registry = matrixize(encounters)
split = stratified_split(y, SplitConfig())
cfg = TrainConfig(max_depth=4, learning_rate=0.1, n_estimators=120,
                  early_stopping_rounds=20,
                  scale_pos_weight=class_weight(y[split.train_idx]), seed=42)
ensemble, _ = train(X, y, split, cfg,
                    registry_fingerprint=registry.fingerprint())

# Global view: which features the ensemble actually split on, ranked by
# total gain across all used trees.
print("top gain features:")
for name, gain in ranked_importance(ensemble, registry.names)[:5]:
    print(f"  {name:28s} {gain:10.2f}")

# Pick the scariest test encounter.
test_scores = ensemble.predict_proba(X[split.test_idx])
hot = split.test_idx[int(np.argmax(test_scores))]
x = X[hot]
print(f"\nencounter {encounters[hot].encounter_id}: "
      f"risk {ensemble.predict_proba(x[None, :])[0]:.3f}")

# Local view: path attributions decompose this one margin into a bias
# plus one number per feature; they sum back to the margin exactly.
att = path_contributions(ensemble, x)
gap = abs(att.bias + att.contributions.sum() - att.margin)
print(f"bias {att.bias:+.4f}, margin {att.margin:+.4f}, "
      f"completeness gap {gap:.1e}")
for name, value in top_contributors(att, registry.names, k=5):
    print(f"  {name:28s} {value:+.4f}")

# Clinician view: tier thresholds come from validation-score quantiles,
# and the card turns the attributions into plain-language factors.
thresholds = calibrate_tiers(ensemble.predict_proba(X[split.valid_idx]))
meta = ModelMeta(model_fingerprint=ensemble.fingerprint(),
                 trained_at="demo", test_auroc=0.0, test_auprc=0.0,
                 thresholds=thresholds)
card = build_card(encounters[hot], ensemble, thresholds, meta)
print(f"\ncard: tier {card.tier.tier} ({card.tier.color}), "
      f"score {card.risk_score:.3f}")
for factor in card.factors:
    print(f"  {factor.phrase}")
print("care plan:")
for line in card.care_plan:
    print(f"  - {line}")
