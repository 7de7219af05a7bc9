"""Umbrella command line for the readmission pipeline.

Subcommands mirror the pipeline stages: ingest, features, split, train,
evaluate, eda, explain, export-cards, serve. Every command exits 0 on
success; failures print exactly one machine-parsable line to stderr,
``error=<code> detail="..."``, and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import card as card_mod
from . import features as features_mod
from . import gbdt, ingest, metrics
from . import split as split_mod
from .errors import ConfigError, ContractError, ReadmitError
from .explain import path_contributions, ranked_importance, top_contributors


def _feature_config(args) -> features_mod.FeatureConfig:
    return features_mod.FeatureConfig(
        include_diag_groups=getattr(args, "diag_groups", False),
        include_med_onehot=getattr(args, "med_onehot", False),
    )


def _load_encounters(path: str, exclude_expired_hospice: bool = False):
    result = ingest.parse_dataset(path)
    encounters = result.encounters
    if exclude_expired_hospice:
        encounters = ingest.exclude_dispositions(
            encounters, ingest.EXPIRED_HOSPICE_DISPOSITIONS)
    return result, encounters


def cmd_ingest(args) -> int:
    result, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    labels = ingest.labels_array(encounters)
    if args.out:
        ingest.encounters_to_csv(encounters, args.out)
    if args.errors_out and result.errors:
        with open(args.errors_out, "w") as fh:
            for err in result.errors:
                fh.write(f"{err.row},{err.column},{err.message}\n")
    prev = ingest.prevalence(labels) if len(labels) else float("nan")
    print(f"rows={result.rows_seen} encounters={len(encounters)} "
          f"errors={len(result.errors)} prevalence={prev:.4f}")
    return 0


def cmd_features(args) -> int:
    _, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    config = _feature_config(args)
    X, reg = features_mod.matrixize(encounters, config)
    features_mod.write_matrix_csv(X, reg, args.out_matrix)
    if args.out_registry:
        reg.save(args.out_registry)
    if args.out_labels:
        labels = ingest.labels_array(encounters)
        with open(args.out_labels, "w") as fh:
            fh.write("encounter_id,label\n")
            for e, y in zip(encounters, labels):
                fh.write(f"{e.encounter_id},{int(y)}\n")
    print(f"rows={X.shape[0]} features={X.shape[1]} "
          f"registry_fingerprint={reg.fingerprint()[:16]}")
    return 0


def cmd_split(args) -> int:
    _, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    labels = ingest.labels_array(encounters)
    cfg = split_mod.SplitConfig(test_fraction=args.test_fraction,
                                valid_fraction_of_pool=args.valid_fraction,
                                seed=args.seed)
    result = split_mod.stratified_split(labels, cfg)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    result.save(args.out)
    weight = split_mod.class_weight(labels[result.train_idx])
    print(f"train={len(result.train_idx)} valid={len(result.valid_idx)} "
          f"test={len(result.test_idx)} class_weight={weight:.4f}")
    return 0


def _matrix_and_labels(args):
    _, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    config = _feature_config(args)
    X, reg = features_mod.matrixize(encounters, config)
    labels = ingest.labels_array(encounters)
    return encounters, X, reg, labels


def cmd_train(args) -> int:
    encounters, X, reg, labels = _matrix_and_labels(args)
    split_data = split_mod.DatasetSplit.load(args.split)
    weight = (args.scale_pos_weight if args.scale_pos_weight is not None
              else split_mod.class_weight(labels[split_data.train_idx]))
    cfg = gbdt.TrainConfig(
        max_depth=args.max_depth,
        learning_rate=args.learning_rate,
        n_estimators=args.n_estimators,
        subsample=args.subsample,
        colsample_bytree=args.colsample_bytree,
        min_child_weight=args.min_child_weight,
        scale_pos_weight=weight,
        early_stopping_rounds=args.early_stopping_rounds,
        seed=args.seed,
        stamp=args.stamp,
    )
    ensemble, history = gbdt.train(X, labels, split_data, cfg,
                                   registry_fingerprint=reg.fingerprint())
    ensemble.save(args.out)
    best = history.val_auprc[history.best_round]
    print(f"rounds={len(history.val_auprc)} best_round={history.best_round} "
          f"best_val_auprc={best:.4f} stopped_early={history.stopped_early} "
          f"model={args.out}")
    return 0


def cmd_evaluate(args) -> int:
    encounters, X, reg, labels = _matrix_and_labels(args)
    split_data = split_mod.DatasetSplit.load(args.split)
    ensemble = gbdt.Ensemble.load(args.model)
    if ensemble.n_features != X.shape[1]:
        raise ContractError(
            f"model expects {ensemble.n_features} features, matrix has {X.shape[1]}")
    idx = {"test": split_data.test_idx, "valid": split_data.valid_idx,
           "train": split_data.train_idx}[args.subset]
    scores = ensemble.predict_proba(X[idx])
    report = metrics.evaluate_scores(scores, labels[idx], threshold=args.threshold)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    metrics.write_report(report, args.out)
    s = report.scalars()
    print(f"subset={args.subset} auroc={s['auroc']:.4f} auprc={s['auprc']:.4f} "
          f"recall={s['recall']:.4f} precision={s['precision']:.4f} "
          f"balanced_accuracy={s['balanced_accuracy']:.4f}")
    return 0


def cmd_eda(args) -> int:
    _, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    labels = ingest.labels_array(encounters)
    report = metrics.eda_report(encounters, labels)
    if args.out:
        metrics.write_eda_csv(report, args.out)
    b = report.readmit_rate_by_prior_inpatient
    los = report.los_median_by_outcome
    print(f"rate_0={b['0'][1]:.4f} rate_3plus={b['3+'][1]:.4f} "
          f"los_readmitted={los['readmitted']} los_not={los['not_readmitted']}")
    return 0


def cmd_explain(args) -> int:
    ensemble = gbdt.Ensemble.load(args.model)
    config = features_mod.config_matching(ensemble.n_features)
    if config is None:
        raise ConfigError(
            f"no feature configuration matches {ensemble.n_features} features")
    names = features_mod.registry(config).names
    if args.row is None:
        table = ranked_importance(ensemble, names)[: args.top]
        for rank, (name, gain) in enumerate(table, start=1):
            print(f"{rank}\t{name}\t{gain:.4f}")
        return 0
    if args.data is None:
        raise ConfigError("--row needs --data to engineer the row's features")
    _, encounters = _load_encounters(args.data, args.exclude_expired_hospice)
    if not 0 <= args.row < len(encounters):
        raise ConfigError(f"--row {args.row} outside 0..{len(encounters) - 1}")
    x = features_mod.engineer(encounters[args.row], config)
    attribution = path_contributions(ensemble, x)
    margin = float(ensemble.predict_margin(x))
    print(f"row={args.row} margin={margin:.6f} bias={attribution.bias:.6f}")
    for name, value in top_contributors(attribution, names, k=args.top):
        print(f"{name}\t{value:+.6f}")
    return 0


def cmd_export_cards(args) -> int:
    encounters, X, reg, labels = _matrix_and_labels(args)
    split_data = split_mod.DatasetSplit.load(args.split)
    ensemble = gbdt.Ensemble.load(args.model)
    if ensemble.n_features != X.shape[1]:
        raise ContractError(
            f"model expects {ensemble.n_features} features, matrix has {X.shape[1]}")
    report = metrics.load_report(args.report)
    thresholds = card_mod.calibrate_tiers(ensemble.predict_proba(X[split_data.valid_idx]))
    meta = card_mod.ModelMeta(
        model_fingerprint=ensemble.fingerprint(),
        trained_at=ensemble.config.stamp,
        test_auroc=report["auroc"],
        test_auprc=report["auprc"],
        thresholds=thresholds,
    )
    config = _feature_config(args)
    test_encounters = [encounters[i] for i in split_data.test_idx]
    cards = card_mod.export_cards(test_encounters, ensemble, thresholds, meta,
                                  args.out, config)
    print(f"cards={len(cards)} high_cut={thresholds.high_cut:.4f} "
          f"medium_cut={thresholds.medium_cut:.4f} out={args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    cfg = ServiceConfig.from_file(args.config)
    if args.port is not None:
        cfg.port = args.port
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return 0


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--exclude-expired-hospice", action="store_true",
                   help="drop encounters discharged to hospice or expired")


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--diag-groups", action="store_true",
                   help="include coarse primary-diagnosis group features")
    p.add_argument("--med-onehot", action="store_true",
                   help="include per-medication one-hot features")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="readmit",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate the dataset CSV")
    _add_data_flags(p)
    p.add_argument("--out", help="write the normalized CSV here")
    p.add_argument("--errors-out", help="write row errors as CSV here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="engineer the feature matrix")
    _add_data_flags(p)
    _add_feature_flags(p)
    p.add_argument("--out-matrix", required=True)
    p.add_argument("--out-registry")
    p.add_argument("--out-labels")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("split", help="stratified train/valid/test split")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="directory for the .idx files")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-fraction", type=float, default=0.20)
    p.add_argument("--valid-fraction", type=float, default=0.20,
                   help="fraction of the non-test pool")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the boosted model")
    _add_data_flags(p)
    _add_feature_flags(p)
    p.add_argument("--split", required=True, help="split directory")
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--n-estimators", type=int, default=600)
    p.add_argument("--subsample", type=float, default=0.9)
    p.add_argument("--colsample-bytree", type=float, default=0.9)
    p.add_argument("--min-child-weight", type=float, default=1.0)
    p.add_argument("--early-stopping-rounds", type=int, default=50)
    p.add_argument("--scale-pos-weight", type=float, default=None,
                   help="default: negatives/positives on the training split")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--stamp", default="",
                   help="trained-at stamp recorded in model metadata")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a split and write the report")
    _add_data_flags(p)
    _add_feature_flags(p)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--subset", choices=("test", "valid", "train"), default="test")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("eda", help="exploratory statistics tables")
    _add_data_flags(p)
    p.add_argument("--out", help="CSV path for the tables")
    p.set_defaults(func=cmd_eda)

    p = sub.add_parser("explain", help="feature importance and row attributions")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--row", type=int, default=None,
                   help="print per-instance contributions for this data row")
    p.add_argument("--data", help="dataset CSV (needed with --row)")
    p.add_argument("--exclude-expired-hospice", action="store_true")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("export-cards", help="write PatientCards for the test split")
    _add_data_flags(p)
    _add_feature_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--report", required=True,
                   help="report directory written by evaluate")
    p.add_argument("--out", required=True, help="NDJSON output path")
    p.set_defaults(func=cmd_export_cards)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.add_argument("--port", type=int, default=None, help="override config port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ReadmitError as exc:
        print(f'error={exc.code} detail="{exc}"', file=sys.stderr)
        return 2
    except OSError as exc:
        print(f'error=io_error detail="{exc}"', file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
