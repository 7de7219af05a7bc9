"""30-day readmission risk pipeline for the Diabetes 130-US Hospitals cohort.

Library layout mirrors the pipeline stages:

- ``ingest``: CSV -> typed encounter records with a binary target
- ``features``: engineered feature vectors with a stable registry
- ``split``: deterministic stratified train/validation/test partitioning
- ``gbdt``: second-order gradient-boosted trees (the core learner)
- ``metrics``: ranking metrics, threshold metrics, and cohort statistics
- ``explain``: gain importance and per-patient path attributions
- ``card``: clinician-facing PatientCard records
- ``service``: local HTTP service exposing cards and what-if rescoring

Each stage is importable on its own; the ``readmit`` CLI chains them.
"""

__version__ = "0.1.0"
