"""Parsing of the Diabetes 130-US Hospitals CSV into typed encounter records.

The file convention: comma-separated, quoted strings, one header row, and
the literal ``?`` as the missing-value sentinel. Rows with malformed
numeric cells are skipped with a positional diagnostic instead of aborting
the whole parse; a renamed or missing column aborts immediately.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import DataError, DomainError, SchemaError

MISSING = "?"

MED_COLUMNS = (
    "metformin", "repaglinide", "nateglinide", "chlorpropamide",
    "glimepiride", "acetohexamide", "glipizide", "glyburide",
    "tolbutamide", "pioglitazone", "rosiglitazone", "acarbose",
    "miglitol", "troglitazone", "tolazamide", "examide", "citoglipton",
    "insulin", "glyburide-metformin", "glipizide-metformin",
    "glimepiride-pioglitazone", "metformin-rosiglitazone",
    "metformin-pioglitazone",
)

# Published column order of diabetic_data.csv (50 columns).
COLUMNS = (
    "encounter_id", "patient_nbr", "race", "gender", "age", "weight",
    "admission_type_id", "discharge_disposition_id", "admission_source_id",
    "time_in_hospital", "payer_code", "medical_specialty",
    "num_lab_procedures", "num_procedures", "num_medications",
    "number_outpatient", "number_emergency", "number_inpatient",
    "diag_1", "diag_2", "diag_3", "number_diagnoses",
    "max_glu_serum", "A1Cresult",
) + MED_COLUMNS + ("change", "diabetesMed", "readmitted")

GENDERS = ("Female", "Male", "Unknown/Invalid")
READMIT_VALUES = ("<30", ">30", "NO")

# Discharge dispositions for expired/hospice patients (IDs_mapping codes);
# optional exclusion filter, off by default.
EXPIRED_HOSPICE_DISPOSITIONS = frozenset({11, 13, 14, 19, 20, 21})

# Integer columns that must parse and be >= 0 (ids are small positive codes,
# counts and days are nonnegative).
_INT_FIELDS = (
    "encounter_id", "patient_nbr", "admission_type_id",
    "discharge_disposition_id", "admission_source_id", "time_in_hospital",
    "num_lab_procedures", "num_procedures", "num_medications",
    "number_outpatient", "number_emergency", "number_inpatient",
    "number_diagnoses",
)
_OPTIONAL_FIELDS = ("race", "weight", "payer_code", "medical_specialty",
                    "diag_1", "diag_2", "diag_3")


@dataclass(frozen=True)
class Encounter:
    """One raw hospital admission record (all 50 source attributes)."""

    encounter_id: int
    patient_nbr: int
    race: str | None
    gender: str
    age_bracket: str
    weight: str | None
    admission_type_id: int
    discharge_disposition_id: int
    admission_source_id: int
    time_in_hospital: int
    payer_code: str | None
    medical_specialty: str | None
    num_lab_procedures: int
    num_procedures: int
    num_medications: int
    number_outpatient: int
    number_emergency: int
    number_inpatient: int
    diag_1: str | None
    diag_2: str | None
    diag_3: str | None
    number_diagnoses: int
    max_glu_serum: str
    A1Cresult: str
    meds: dict[str, str] = field(repr=False)
    change: str = "No"
    diabetesMed: str = "No"
    readmitted_raw: str = "NO"


@dataclass(frozen=True)
class LabeledEncounter:
    encounter: Encounter
    label: int


@dataclass
class RowError:
    """Positional diagnostic for a skipped row (row 1 = header)."""

    row: int
    column: str
    message: str


@dataclass
class ParseResult:
    encounters: list[Encounter]
    errors: list[RowError]
    rows_seen: int = 0


def _norm_test_result(value: str) -> str:
    # Newer dataset exports leave the test columns empty where the
    # original wrote the literal "None" (test not taken).
    return "None" if value in ("", MISSING) else value


def _parse_row(row_num: int, raw: dict[str, str], errors: list[RowError]) -> Encounter | None:
    ints: dict[str, int] = {}
    for name in _INT_FIELDS:
        cell = raw[name].strip()
        try:
            value = int(cell)
        except ValueError:
            errors.append(RowError(row_num, name, f"not an integer: {cell!r}"))
            return None
        if value < 0:
            errors.append(RowError(row_num, name, f"negative value: {value}"))
            return None
        ints[name] = value

    gender = raw["gender"]
    if gender not in GENDERS:
        gender = "Unknown/Invalid"

    readmitted = raw["readmitted"]
    if readmitted not in READMIT_VALUES:
        errors.append(RowError(row_num, "readmitted", f"unknown target: {readmitted!r}"))
        return None

    opt = {name: (None if raw[name] in (MISSING, "") else raw[name])
           for name in _OPTIONAL_FIELDS}

    return Encounter(
        encounter_id=ints["encounter_id"],
        patient_nbr=ints["patient_nbr"],
        race=opt["race"],
        gender=gender,
        age_bracket=raw["age"],
        weight=opt["weight"],
        admission_type_id=ints["admission_type_id"],
        discharge_disposition_id=ints["discharge_disposition_id"],
        admission_source_id=ints["admission_source_id"],
        time_in_hospital=ints["time_in_hospital"],
        payer_code=opt["payer_code"],
        medical_specialty=opt["medical_specialty"],
        num_lab_procedures=ints["num_lab_procedures"],
        num_procedures=ints["num_procedures"],
        num_medications=ints["num_medications"],
        number_outpatient=ints["number_outpatient"],
        number_emergency=ints["number_emergency"],
        number_inpatient=ints["number_inpatient"],
        diag_1=opt["diag_1"],
        diag_2=opt["diag_2"],
        diag_3=opt["diag_3"],
        number_diagnoses=ints["number_diagnoses"],
        max_glu_serum=_norm_test_result(raw["max_glu_serum"]),
        A1Cresult=_norm_test_result(raw["A1Cresult"]),
        meds={m: raw[m] for m in MED_COLUMNS},
        change=raw["change"],
        diabetesMed=raw["diabetesMed"],
        readmitted_raw=readmitted,
    )


def parse_dataset(source: TextIO | str | Path) -> ParseResult:
    """Parse the dataset CSV, collecting row-level errors.

    ``source`` may be an open text stream, a path, or the CSV content
    itself (anything containing a newline is treated as content). Output
    order matches file order; skipped rows leave a RowError behind.
    """
    if isinstance(source, Path):
        with open(source, newline="") as fh:
            return parse_dataset(fh)
    if isinstance(source, str):
        if "\n" in source or "," in source:
            return parse_dataset(io.StringIO(source))
        with open(source, newline="") as fh:
            return parse_dataset(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None

    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required columns: {', '.join(missing)}")
    pos = {name: header.index(name) for name in COLUMNS}

    encounters: list[Encounter] = []
    errors: list[RowError] = []
    seen_ids: set[int] = set()
    rows_seen = 0
    for row_num, cells in enumerate(reader, start=2):
        if not cells:
            continue
        rows_seen += 1
        if len(cells) < len(header):
            errors.append(RowError(row_num, "", f"expected {len(header)} cells, got {len(cells)}"))
            continue
        raw = {name: cells[pos[name]] for name in COLUMNS}
        enc = _parse_row(row_num, raw, errors)
        if enc is None:
            continue
        if enc.encounter_id in seen_ids:
            errors.append(RowError(row_num, "encounter_id", f"duplicate id {enc.encounter_id}"))
            continue
        seen_ids.add(enc.encounter_id)
        encounters.append(enc)
    return ParseResult(encounters=encounters, errors=errors, rows_seen=rows_seen)


def encounter_to_row(e: Encounter) -> list[str]:
    def opt(v: str | None) -> str:
        return MISSING if v is None else v

    row = [
        str(e.encounter_id), str(e.patient_nbr), opt(e.race), e.gender,
        e.age_bracket, opt(e.weight), str(e.admission_type_id),
        str(e.discharge_disposition_id), str(e.admission_source_id),
        str(e.time_in_hospital), opt(e.payer_code), opt(e.medical_specialty),
        str(e.num_lab_procedures), str(e.num_procedures),
        str(e.num_medications), str(e.number_outpatient),
        str(e.number_emergency), str(e.number_inpatient),
        opt(e.diag_1), opt(e.diag_2), opt(e.diag_3),
        str(e.number_diagnoses), e.max_glu_serum, e.A1Cresult,
    ]
    row.extend(e.meds[m] for m in MED_COLUMNS)
    row.extend([e.change, e.diabetesMed, e.readmitted_raw])
    return row


def encounters_to_csv(encounters: Iterable[Encounter], dest: TextIO | str | Path) -> None:
    """Serialize records back to the dataset's CSV layout (round-trips)."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            encounters_to_csv(encounters, fh)
            return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(COLUMNS)
    for e in encounters:
        writer.writerow(encounter_to_row(e))


def binarize_target(e: Encounter) -> int:
    """Binary 30-day readmission label: ``<30`` is 1, ``>30``/``NO`` are 0."""
    raw = e.readmitted_raw
    if raw == "<30":
        return 1
    if raw in (">30", "NO"):
        return 0
    raise DataError(f"unknown readmission target: {raw!r}")


def label_encounters(encounters: Iterable[Encounter]) -> list[LabeledEncounter]:
    return [LabeledEncounter(e, binarize_target(e)) for e in encounters]


def labels_array(encounters: Iterable[Encounter]) -> np.ndarray:
    return np.array([binarize_target(e) for e in encounters], dtype=np.int8)


def prevalence(labels: Iterable[int]) -> float:
    """Positive-class fraction of a label list."""
    arr = np.asarray(list(labels), dtype=np.float64)
    if arr.size == 0:
        raise DomainError("prevalence of an empty label list is undefined")
    return float(arr.mean())


def exclude_dispositions(encounters: Iterable[Encounter],
                         codes: frozenset[int] = EXPIRED_HOSPICE_DISPOSITIONS) -> list[Encounter]:
    """Optional cohort filter dropping expired/hospice discharges."""
    return [e for e in encounters if e.discharge_disposition_id not in codes]
