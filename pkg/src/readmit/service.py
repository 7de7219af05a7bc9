"""Local HTTP service for cards, model metadata, and what-if rescoring.

Everything is loopback-only and self-contained: the service reads the
trained model, the exported card file, and the dataset once at startup,
then answers from memory. Cards are served verbatim from the export; the
only live-inference path is POST /whatif, which is pure per request.
Plain HTTP, no auth: this mirrors a single-user bedside device and is not
a production deployment posture.

Endpoint bodies are JSON and validate against the schemas shipped in
docs/. Every endpoint returns 503 until the startup load completes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .card import TierThresholds, load_cards, make_tier, phrase, tier
from .errors import ConfigError, ReadmitError
from .explain import path_contributions, top_contributors
from .features import config_matching, engineer, registry
from .gbdt import Ensemble
from .ingest import parse_dataset

# Registry names that are also raw integer fields on Encounter. Overriding
# one of these re-engineers the whole vector so dependent features
# (inpatient_ge_2, prior_util_sum, discharge_home, ...) stay consistent.
RAW_COUNT_FEATURES = (
    "number_outpatient", "number_emergency", "number_inpatient",
    "time_in_hospital", "num_lab_procedures", "num_procedures",
    "num_medications", "admission_type_id", "discharge_disposition_id",
    "admission_source_id",
)

DEFAULT_PAGE_SIZE = 20


@dataclass
class ServiceConfig:
    """Paths and bind address for one service instance."""

    model_path: str
    cards_path: str
    dataset_path: str
    report_path: str | None = None
    ui_dir: str | None = None
    host: str = "127.0.0.1"
    port: int = 8077
    read_only: bool = True

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read service config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown service config keys: {sorted(unknown)}")
        missing = {"model_path", "cards_path", "dataset_path"} - set(raw)
        if missing:
            raise ConfigError(f"service config missing keys: {sorted(missing)}")
        return cls(**raw)


class Store:
    """Immutable-after-load state shared by all requests."""

    def __init__(self, cfg: ServiceConfig):
        for label, p in (("model", cfg.model_path), ("cards", cfg.cards_path),
                         ("dataset", cfg.dataset_path)):
            if not Path(p).exists():
                raise ConfigError(f"{label} file not found: {p}")
        if cfg.report_path is not None and not Path(cfg.report_path).exists():
            raise ConfigError(f"report file not found: {cfg.report_path}")

        self.model = Ensemble.load(cfg.model_path)
        self.cards = load_cards(cfg.cards_path)
        self.by_id = {c["encounter_id"]: c for c in self.cards}

        matched = config_matching(self.model.n_features)
        if matched is None:
            raise ConfigError(
                f"model expects {self.model.n_features} features; no "
                "feature configuration produces that registry")
        self.feature_config = matched
        reg = registry(self.feature_config)
        if self.model.registry_fingerprint and \
                self.model.registry_fingerprint != reg.fingerprint():
            raise ConfigError("model was trained against a different feature registry")
        self.names = reg.names

        parsed = parse_dataset(cfg.dataset_path)
        self.encounters = {e.encounter_id: e for e in parsed.encounters}

        self.thresholds: TierThresholds | None = None
        if self.cards:
            t = self.cards[0]["model_meta"]["thresholds"]
            self.thresholds = TierThresholds(
                high_cut=t["high_cut"], medium_cut=t["medium_cut"],
                provenance=t["provenance"])

        self.report: dict | None = None
        if cfg.report_path is not None:
            self.report = json.loads(Path(cfg.report_path).read_text())

        by_score = sorted(
            self.cards, key=lambda c: (-c["risk_score"], c["encounter_id"]))
        self.listing_by_score = [_listing_row(c) for c in by_score]
        by_ident = sorted(self.cards, key=lambda c: c["encounter_id"])
        self.listing_by_id = [_listing_row(c) for c in by_ident]


def _listing_row(card: dict) -> dict:
    return {
        "encounter_id": card["encounter_id"],
        "risk_score": card["risk_score"],
        "tier": card["tier"]["tier"],
        "color": card["tier"]["color"],
    }


class WhatIfRequest(BaseModel):
    encounter_id: int
    overrides: dict[str, float] = {}


def create_app(cfg: ServiceConfig, eager: bool = True) -> FastAPI:
    """Build the app; with eager=False endpoints answer 503 until
    app.state.load() is called (mirrors a slow startup)."""
    app = FastAPI(title="readmit service", docs_url=None, redoc_url=None)
    app.state.store = None

    def load() -> None:
        app.state.store = Store(cfg)

    app.state.load = load
    if eager:
        load()

    def store_or_none() -> Store | None:
        return app.state.store

    @app.exception_handler(ReadmitError)
    async def domain_error(request: Request, exc: ReadmitError):
        return JSONResponse(status_code=500,
                            content={"detail": str(exc), "code": exc.code})

    @app.get("/patients")
    def patients(page: int = Query(default=1, ge=1),
                 page_size: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=500),
                 sort: str = Query(default="score", pattern="^(score|id)$")):
        store = store_or_none()
        if store is None:
            return _loading()
        listing = store.listing_by_score if sort == "score" else store.listing_by_id
        start = (page - 1) * page_size
        return {
            "page": page,
            "page_size": page_size,
            "total": len(listing),
            "items": listing[start: start + page_size],
        }

    @app.get("/patients/{encounter_id}/card")
    def patient_card(encounter_id: int):
        store = store_or_none()
        if store is None:
            return _loading()
        card = store.by_id.get(encounter_id)
        if card is None:
            return JSONResponse(status_code=404,
                                content={"detail": f"no card for encounter {encounter_id}"})
        return card

    @app.post("/whatif")
    def whatif(req: WhatIfRequest):
        store = store_or_none()
        if store is None:
            return _loading()
        if req.encounter_id not in store.by_id:
            return JSONResponse(status_code=404,
                                content={"detail": f"unknown encounter {req.encounter_id}"})
        unknown = [n for n in req.overrides if n not in store.names]
        if unknown:
            return JSONResponse(status_code=422,
                                content={"detail": f"unknown feature names: {sorted(unknown)}"})
        encounter = store.encounters.get(req.encounter_id)
        if encounter is None:
            return JSONResponse(
                status_code=404,
                content={"detail": f"encounter {req.encounter_id} not in the dataset file"})

        raw_overrides = {n: v for n, v in req.overrides.items()
                         if n in RAW_COUNT_FEATURES}
        direct = sorted(set(req.overrides) - set(raw_overrides))
        bad = [n for n, v in raw_overrides.items() if v < 0 or v != int(v)]
        if bad:
            return JSONResponse(
                status_code=422,
                content={"detail": f"raw counts must be nonnegative integers: {sorted(bad)}"})
        if raw_overrides:
            encounter = dataclasses.replace(
                encounter, **{n: int(v) for n, v in raw_overrides.items()})

        x = engineer(encounter, store.feature_config)
        for name in direct:
            x[store.names.index(name)] = req.overrides[name]

        score = float(store.model.predict_proba(x))
        attribution = path_contributions(store.model, x)
        top = top_contributors(attribution, store.names, k=5)
        factors = [{"feature": n, "contribution": v, "phrase": phrase(n, v)}
                   for n, v in top]
        risk = (tier(score, store.thresholds) if store.thresholds is not None
                else make_tier("low"))
        return {
            "encounter_id": req.encounter_id,
            "new_score": score,
            "new_tier": {"tier": risk.tier, "color": risk.color},
            "new_factors": factors,
            "direct_overrides": direct,
        }

    @app.get("/model/metrics")
    def model_metrics():
        store = store_or_none()
        if store is None:
            return _loading()
        if store.report is None:
            return JSONResponse(status_code=404,
                                content={"detail": "model has not been evaluated"})
        cfg_dict = {f.name: getattr(store.model.config, f.name)
                    for f in dataclasses.fields(store.model.config)}
        return {"report": store.report, "config": cfg_dict}

    if cfg.ui_dir is not None and Path(cfg.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=cfg.ui_dir, html=True), name="ui")

    return app


def _loading() -> JSONResponse:
    return JSONResponse(status_code=503,
                        content={"detail": "model and cards are still loading"})
