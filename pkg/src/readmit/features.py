"""Feature engineering from raw encounters.

Feature definitions reconstruct the themes behind the model's inputs:
prior utilization, discharge planning, and chronic disease control. The
registry fixes name order for the lifetime of a trained model and is
persisted beside it; absent inputs become NaN so the tree learner's
default directions can route them.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DomainError
from .ingest import MED_COLUMNS, Encounter

# Skilled-nursing / intermediate-care / rehab / swing-bed discharge codes
# from the dataset's IDs_mapping.
SNF_REHAB_DISPOSITIONS = frozenset({3, 4, 5, 15, 22, 23, 24})

RACE_LEVELS = ("AfricanAmerican", "Asian", "Caucasian", "Hispanic", "Other")
GLU_LEVELS = (("Norm", "Norm"), (">200", "gt200"), (">300", "gt300"))

# Coarse ICD-9 chapter groups for the optional diagnosis feature.
_DIAG_GROUPS = (
    ("circulatory", 390, 460), ("respiratory", 460, 520),
    ("digestive", 520, 580), ("injury", 800, 1000),
    ("musculoskeletal", 710, 740), ("genitourinary", 580, 630),
    ("neoplasms", 140, 240),
)


@dataclass(frozen=True)
class FeatureConfig:
    """Optional feature families, both off by default."""

    include_diag_groups: bool = False
    include_med_onehot: bool = False


@dataclass(frozen=True)
class FeatureRegistry:
    """Ordered feature names with per-feature kinds."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]  # numeric | binary | ordinal-code

    def __post_init__(self):
        if len(self.names) != len(set(self.names)):
            raise DomainError("registry names must be unique")
        if len(self.names) != len(self.kinds):
            raise DomainError("names and kinds must align")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def fingerprint(self) -> str:
        text = "\n".join(f"{n}\t{k}" for n, k in zip(self.names, self.kinds))
        return hashlib.sha256(text.encode()).hexdigest()

    def to_text(self) -> str:
        lines = [f"{n}\t{k}" for n, k in zip(self.names, self.kinds)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FeatureRegistry":
        names, kinds = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            name, kind = line.split("\t")
            names.append(name)
            kinds.append(kind)
        return cls(tuple(names), tuple(kinds))

    def save(self, dest: str | Path) -> None:
        Path(dest).write_text(self.to_text())

    @classmethod
    def load(cls, source: str | Path) -> "FeatureRegistry":
        return cls.from_text(Path(source).read_text())


def registry(config: FeatureConfig = FeatureConfig()) -> FeatureRegistry:
    """The deterministic feature ordering for a configuration."""
    entries: list[tuple[str, str]] = [
        ("number_inpatient", "numeric"),
        ("inpatient_ge_2", "binary"),
        ("number_outpatient", "numeric"),
        ("number_emergency", "numeric"),
        ("prior_util_sum", "numeric"),
        ("discharge_disposition_id", "ordinal-code"),
        ("discharge_home", "binary"),
        ("discharge_snf_rehab", "binary"),
        ("admission_type_id", "ordinal-code"),
        ("admission_source_id", "ordinal-code"),
        ("time_in_hospital", "numeric"),
        ("num_lab_procedures", "numeric"),
        ("num_procedures", "numeric"),
        ("num_medications", "numeric"),
        ("a1c_high", "binary"),
        ("any_diabetes_med", "binary"),
        ("age_mid", "numeric"),
        ("gender_Male", "binary"),
    ]
    entries += [(f"race_{level}", "binary") for level in RACE_LEVELS]
    entries += [(f"max_glu_serum_{tag}", "binary") for _, tag in GLU_LEVELS]
    entries.append(("change_Ch", "binary"))
    if config.include_diag_groups:
        entries += [(f"diag1_{name}", "binary") for name, _, _ in _DIAG_GROUPS]
        entries.append(("diag1_diabetes", "binary"))
    if config.include_med_onehot:
        for med in MED_COLUMNS:
            entries += [(f"med_{med}_{lvl}", "binary") for lvl in ("Steady", "Up", "Down")]
    names, kinds = zip(*entries)
    return FeatureRegistry(names, kinds)


def config_matching(n_features: int) -> FeatureConfig | None:
    """Recover the FeatureConfig whose registry has this width, if any.

    The four on/off combinations all have distinct widths, so a trained
    model's feature count identifies its configuration.
    """
    for cfg in (FeatureConfig(),
                FeatureConfig(include_diag_groups=True),
                FeatureConfig(include_med_onehot=True),
                FeatureConfig(include_diag_groups=True, include_med_onehot=True)):
        if len(registry(cfg)) == n_features:
            return cfg
    return None


def age_midpoint(bracket: str) -> float:
    """Midpoint of a ten-year age bracket like ``[70-80)``; NaN if malformed."""
    try:
        lo, hi = bracket.strip("[)").split("-")
        return (int(lo) + int(hi)) / 2.0
    except (ValueError, AttributeError):
        return math.nan


def _diag_group_flags(diag: str | None) -> list[float]:
    flags = [0.0] * (len(_DIAG_GROUPS) + 1)
    if diag is None:
        return [math.nan] * len(flags)
    if diag.startswith(("E", "V")):
        return flags
    try:
        code = float(diag)
    except ValueError:
        return flags
    if 250 <= code < 251:
        flags[-1] = 1.0
        return flags
    for i, (_, lo, hi) in enumerate(_DIAG_GROUPS):
        if lo <= code < hi:
            flags[i] = 1.0
            break
    return flags


def engineer(e: Encounter, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Feature vector for one encounter, ordered per ``registry(config)``."""
    values = [
        float(e.number_inpatient),
        1.0 if e.number_inpatient >= 2 else 0.0,
        float(e.number_outpatient),
        float(e.number_emergency),
        float(e.number_outpatient + e.number_emergency + e.number_inpatient),
        float(e.discharge_disposition_id),
        1.0 if e.discharge_disposition_id == 1 else 0.0,
        1.0 if e.discharge_disposition_id in SNF_REHAB_DISPOSITIONS else 0.0,
        float(e.admission_type_id),
        float(e.admission_source_id),
        float(e.time_in_hospital),
        float(e.num_lab_procedures),
        float(e.num_procedures),
        float(e.num_medications),
        1.0 if e.A1Cresult in (">7", ">8") else 0.0,
        1.0 if e.diabetesMed == "Yes" else 0.0,
        age_midpoint(e.age_bracket),
    ]
    if e.gender == "Male":
        values.append(1.0)
    elif e.gender == "Female":
        values.append(0.0)
    else:
        values.append(math.nan)
    if e.race is None:
        values += [math.nan] * len(RACE_LEVELS)
    else:
        values += [1.0 if e.race == level else 0.0 for level in RACE_LEVELS]
    values += [1.0 if e.max_glu_serum == raw else 0.0 for raw, _ in GLU_LEVELS]
    values.append(1.0 if e.change == "Ch" else 0.0)
    if config.include_diag_groups:
        values += _diag_group_flags(e.diag_1)
    if config.include_med_onehot:
        for med in MED_COLUMNS:
            status = e.meds.get(med, "No")
            values += [1.0 if status == lvl else 0.0 for lvl in ("Steady", "Up", "Down")]
    return np.array(values, dtype=np.float64)


def matrixize(encounters: Sequence[Encounter],
              config: FeatureConfig = FeatureConfig()) -> tuple[np.ndarray, FeatureRegistry]:
    """Stack encounter feature vectors into an (n, F) float matrix."""
    if len(encounters) == 0:
        raise DomainError("cannot build a feature matrix from zero encounters")
    reg = registry(config)
    X = np.empty((len(encounters), len(reg)), dtype=np.float64)
    for i, e in enumerate(encounters):
        X[i] = engineer(e, config)
    return X, reg


def write_matrix_csv(X: np.ndarray, reg: FeatureRegistry, dest: TextIO | str | Path) -> None:
    """Numeric CSV with the registry as header; NaN cells left empty."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w") as fh:
            write_matrix_csv(X, reg, fh)
            return
    dest.write(",".join(reg.names) + "\n")
    for row in X:
        dest.write(",".join("" if math.isnan(v) else repr(v) for v in row) + "\n")
