"""Deterministic synthetic cohort in the exact source-file schema.

Stands in for the public dataset wherever the real file is not present:
demos, service fixtures, and the dataset-free part of the test suite. The
generator plants a known risk structure (prior inpatient stays, non-home
discharge, long stays, emergency visits, and poor glycemic control raise
the readmission probability) so trained models recover sensible
directions, while everything stays reproducible from a single seed.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from .ingest import MED_COLUMNS, Encounter, encounters_to_csv
from .rng import SplitMix64

_AGE_BRACKETS = tuple(f"[{lo}-{lo + 10})" for lo in range(0, 100, 10))
_AGE_WEIGHTS = (1, 1, 2, 4, 8, 14, 20, 24, 18, 8)

_RACES = (("Caucasian", 72), ("AfricanAmerican", 18), ("Hispanic", 3),
          ("Asian", 1), ("Other", 2), (None, 4))

# (code, weight); 1 = home, 3/22 = SNF/rehab, 6 = home health
_DISPOSITIONS = ((1, 60), (3, 12), (6, 12), (2, 5), (22, 4), (5, 3),
                 (25, 2), (11, 1), (18, 1))

_DIAG_CODES = ("250.83", "250.6", "428", "414", "410.71", "486", "491",
               "574", "577", "599", "682", "715", "820", "996", "V45",
               "V58", "E909", "780", "38", "162")


def _uniform(rng: SplitMix64) -> float:
    return (rng.next_u64() >> 11) * 2.0 ** -53


def _pick(rng: SplitMix64, pairs: Sequence[tuple]):
    total = sum(w for _, w in pairs)
    u = _uniform(rng) * total
    acc = 0.0
    for value, w in pairs:
        acc += w
        if u < acc:
            return value
    return pairs[-1][0]


def _count(rng: SplitMix64, weights: Sequence[float]) -> int:
    return _pick(rng, tuple((i, w) for i, w in enumerate(weights)))


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def _med_state(rng: SplitMix64, med: str) -> str:
    if med == "insulin":
        return _pick(rng, (("No", 45), ("Steady", 35), ("Up", 11), ("Down", 9)))
    if med == "metformin":
        return _pick(rng, (("No", 75), ("Steady", 20), ("Up", 3), ("Down", 2)))
    if med in ("glipizide", "glyburide", "pioglitazone", "rosiglitazone",
               "glimepiride"):
        return _pick(rng, (("No", 90), ("Steady", 9), ("Up", 1)))
    return _pick(rng, (("No", 99), ("Steady", 1)))


def synthetic_cohort(n: int, seed: int = 7) -> list[Encounter]:
    """n schema-exact encounters with a planted readmission signal."""
    rng = SplitMix64(seed)
    out: list[Encounter] = []
    for i in range(n):
        race = _pick(rng, _RACES)
        gender = _pick(rng, (("Female", 54), ("Male", 46)))
        age = _pick(rng, tuple(zip(_AGE_BRACKETS, _AGE_WEIGHTS)))
        disposition = _pick(rng, _DISPOSITIONS)
        inpatient = _count(rng, (62, 20, 9, 5, 2.5, 1, 0.5))
        emergency = _count(rng, (78, 13, 5, 2.5, 1.5))
        outpatient = _count(rng, (70, 12, 8, 5, 3, 2))
        los = 1 + int(13 * _uniform(rng) ** 2.2)
        labs = 1 + int(119 * _uniform(rng) ** 1.3)
        procedures = _count(rng, (45, 20, 13, 10, 6, 4, 2))
        medications = 1 + int(15 + 20 * _uniform(rng) + 2 * procedures)
        n_diag = min(16, 3 + _count(rng, (10, 20, 25, 20, 15, 10)))
        a1c = _pick(rng, (("None", 83), ("Norm", 5), (">7", 4), (">8", 8)))
        glu = _pick(rng, (("None", 95), ("Norm", 2), (">200", 1.5), (">300", 1.5)))
        meds = {med: _med_state(rng, med) for med in MED_COLUMNS}
        any_dose_change = any(s in ("Up", "Down") for s in meds.values())
        change = "Ch" if any_dose_change else "No"
        diabetes_med = "Yes" if any(s != "No" for s in meds.values()) else "No"
        diag_1 = _pick(rng, tuple((c, 1) for c in _DIAG_CODES) + ((None, 1),))
        diag_2 = _pick(rng, tuple((c, 1) for c in _DIAG_CODES) + ((None, 3),))
        diag_3 = _pick(rng, tuple((c, 1) for c in _DIAG_CODES) + ((None, 6),))

        z = (-3.35
             + 0.62 * min(inpatient, 6)
             + 0.45 * (disposition != 1)
             + 0.10 * (los - 4)
             + 0.18 * min(emergency, 4)
             + 0.22 * (a1c in (">7", ">8"))
             + 0.12 * (change == "Ch"))
        readmitted_30 = _uniform(rng) < _sigmoid(z)
        if readmitted_30:
            readmitted = "<30"
        else:
            readmitted = _pick(rng, ((">30", 38), ("NO", 62)))

        out.append(Encounter(
            encounter_id=100000 + 2 * i,
            patient_nbr=5000000 + 3 * i,
            race=race,
            gender=gender,
            age_bracket=age,
            weight=None,
            admission_type_id=_pick(rng, ((1, 55), (2, 20), (3, 18), (5, 4), (6, 3))),
            discharge_disposition_id=disposition,
            admission_source_id=_pick(rng, ((7, 57), (1, 30), (17, 7), (4, 3), (6, 3))),
            time_in_hospital=los,
            payer_code=_pick(rng, (("MC", 40), ("HM", 10), ("SP", 8), (None, 42))),
            medical_specialty=_pick(rng, (("InternalMedicine", 15),
                                          ("Emergency/Trauma", 8),
                                          ("Family/GeneralPractice", 7),
                                          ("Cardiology", 6), (None, 64))),
            num_lab_procedures=labs,
            num_procedures=procedures,
            num_medications=medications,
            number_outpatient=outpatient,
            number_emergency=emergency,
            number_inpatient=inpatient,
            diag_1=diag_1,
            diag_2=diag_2,
            diag_3=diag_3,
            number_diagnoses=n_diag,
            max_glu_serum=glu,
            A1Cresult=a1c,
            meds=meds,
            change=change,
            diabetesMed=diabetes_med,
            readmitted_raw=readmitted,
        ))
    return out


def synthetic_csv(dest: str | Path, n: int, seed: int = 7) -> list[Encounter]:
    """Write a synthetic cohort as a dataset-schema CSV; returns the cohort."""
    cohort = synthetic_cohort(n, seed)
    encounters_to_csv(cohort, dest)
    return cohort
