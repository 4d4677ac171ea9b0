"""``poi-xaudit`` command line.

Every command works inside one run directory (``--out``)::

    synth        write synthetic check-ins to <out>/checkins.txt
    ingest       raw check-ins -> <out>/dataset.pxd
    train        dataset -> <out>/recommender.pxck (+ .json sidecar)
    compress     recommender -> <out>/compressor.pxck
    explain      explanation JSON for one user on stdout
    synth-clone  <out>/clone_dataset.pxd + clone_manifest.json
    audit N      <out>/reports/expN.json and expN.md
    report       <out>/reports/report.md from the available audits

Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 data error,
5 numeric error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import audit as audits
from .artifacts import (
    RunPaths,
    dataset_hash,
    load_compressor,
    load_dataset,
    load_recommender,
    save_compressor,
    save_recommender,
    write_json,
)
from .compressor import SimilarityIndex, train_compressor
from .config import RunConfig, load_config
from .errors import ConfigError, MissingDataset, PoiXauditError, UnknownId
from .explain import explain
from .ingest import build_dataset, read_checkins, split_last, write_dataset
from .recommender import train
from .rng import derive
from .synth import generate, write_checkins

log = logging.getLogger("poi_xaudit")


def _stamp(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.hash(), "seed": cfg.seed, "config": cfg.results_dict()}


def cmd_synth(cfg: RunConfig, paths: RunPaths, args) -> int:
    records = generate(cfg.synth_config())
    paths.root.mkdir(parents=True, exist_ok=True)
    target = Path(cfg.data) if cfg.data else paths.checkins
    write_checkins(records, target)
    log.info("wrote %d synthetic check-ins to %s", len(records), target)
    return 0


def cmd_ingest(cfg: RunConfig, paths: RunPaths, args) -> int:
    source = Path(cfg.data) if cfg.data else paths.checkins
    if not source.exists():
        raise MissingDataset(f"check-in file {source} not found")
    dataset = build_dataset(read_checkins(source), cfg.bbox, cfg.min_len)
    paths.root.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, paths.dataset)
    write_json(paths.root / "ingest.json", dict(_stamp(cfg), n_users=len(dataset), n_pois=len(dataset.registry), dataset_sha256=dataset_hash(dataset)))
    log.info("%d users, %d POIs", len(dataset), len(dataset.registry))
    return 0


def cmd_train(cfg: RunConfig, paths: RunPaths, args) -> int:
    dataset = load_dataset(paths.dataset)
    state, report = train(cfg.model_config(), dataset)
    digest = save_recommender(paths.recommender, state, dict(_stamp(cfg), dataset_sha256=dataset_hash(dataset)))
    write_json(paths.root / "train.json", dict(_stamp(cfg), checkpoint_sha256=digest, chance=1 / len(dataset.registry), **report.to_dict()))
    log.info("held-out top-1 accuracy %.4f (chance %.5f)", report.heldout_accuracy, 1 / len(dataset.registry))
    return 0


def cmd_compress(cfg: RunConfig, paths: RunPaths, args) -> int:
    dataset = load_dataset(paths.dataset)
    model, _, rec_hash = load_recommender(paths.recommender, dataset)
    state, report = train_compressor(model, dataset, cfg.compressor_config())
    digest = save_compressor(paths.compressor, state, dict(_stamp(cfg), recommender_sha256=rec_hash))
    write_json(paths.root / "compress.json", dict(_stamp(cfg), checkpoint_sha256=digest, recommender_sha256=rec_hash, **report.to_dict()))
    log.info("compressor self-classification accuracy %.4f", report.accuracy)
    return 0


def cmd_explain(cfg: RunConfig, paths: RunPaths, args) -> int:
    dataset = load_dataset(paths.dataset)
    model, _, rec_hash = load_recommender(paths.recommender, dataset)
    comp, _, comp_hash = load_compressor(paths.compressor)
    if args.user not in dataset:
        raise UnknownId(f"unknown user {args.user}")
    steps = split_last(dataset.trajectory(args.user), model.config.t_max).input_steps
    exp = explain(model, comp, args.user, steps, args.k_steps, args.k_users)
    doc = exp.to_dict(model)
    for item in doc["timesteps"]:
        s = steps[item["index"]]
        lat, lon = dataset.registry.coords(s.poi_id)
        item.update(poi=s.poi_id, hour_of_week=s.hour_of_week, lat=lat, lon=lon)
    doc.update(_stamp(cfg), checkpoints={"recommender": rec_hash, "compressor": comp_hash})
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.save:
        write_json(paths.reports / f"explain_{args.user}.json", doc)
    return 0


def cmd_synth_clone(cfg: RunConfig, paths: RunPaths, args) -> int:
    dataset = load_dataset(paths.dataset)
    clone, manifest = audits.build_clone_dataset(dataset, cfg.seed)
    write_dataset(clone, paths.clone_dataset)
    write_json(paths.clone_manifest, dict(_stamp(cfg), source_dataset_sha256=dataset_hash(dataset), clones=[m.to_dict() for m in manifest]))
    return 0


def _load_manifest(path: Path) -> list[audits.CloneRecord]:
    if not path.exists():
        raise MissingDataset(f"clone manifest {path} not found; run `synth-clone` first")
    doc = json.loads(path.read_text(encoding="utf-8"))
    return [audits.CloneRecord(**m) for m in doc["clones"]]


def cmd_audit(cfg: RunConfig, paths: RunPaths, args) -> int:
    exp = args.experiment
    checkpoints: dict[str, str] = {}
    if exp == 4:
        clone = load_dataset(paths.clone_dataset)
        manifest = _load_manifest(paths.clone_manifest)
        fresh = int(derive(cfg.seed, "exp4-retrain").integers(2**31))
        report = audits.run_exp4(clone, manifest, cfg.model_config(fresh), cfg.compressor_config(fresh))
        oracle = audits.run_exp4(clone, manifest, cfg.model_config(fresh), cfg.compressor_config(fresh), audits.edit_similarity(clone))
        model, comp = report.models
        clone_hash = dataset_hash(clone)
        checkpoints["recommender"] = save_recommender(paths.clone_recommender, model, dict(_stamp(cfg), dataset_sha256=clone_hash))
        checkpoints["compressor"] = save_compressor(paths.clone_compressor, comp, dict(_stamp(cfg), recommender_sha256=checkpoints["recommender"]))
        payload = report.to_dict()
        payload["oracle_edit_similarity_count"] = oracle.hits
        payload["dataset_sha256"] = clone_hash
    else:
        dataset = load_dataset(paths.dataset)
        model, _, rec_hash = load_recommender(paths.recommender, dataset)
        checkpoints["recommender"] = rec_hash
        similarity = None
        if exp in (2, 3):
            comp, _, comp_hash = load_compressor(paths.compressor)
            checkpoints["compressor"] = comp_hash
            similarity = SimilarityIndex(model, comp, dataset).neighbours
        if exp == 1:
            report = audits.run_exp1(model, dataset, cfg.trials, cfg.seed, cfg.threshold, cfg.workers)
        elif exp == 2:
            report = audits.run_exp2(model, similarity, dataset, cfg.random_trials, cfg.seed, cfg.threshold, cfg.workers)
        else:
            report = audits.run_exp3(similarity, dataset, cfg.n_random, cfg.seed, cfg.threshold, cfg.closest_k, cfg.workers)
        payload = report.to_dict()
        payload["dataset_sha256"] = dataset_hash(dataset)
    payload.update(_stamp(cfg), checkpoints=checkpoints)
    write_json(paths.report(f"exp{exp}", "json"), payload)
    md = report.to_markdown()
    if exp == 4:
        md += f"\nWith the plug-in edit-distance similarity the count is {payload['oracle_edit_similarity_count']}.\n"
    md += f"\nconfig {cfg.hash()} | seed {cfg.seed}" + "".join(f" | {k} {v[:16]}" for k, v in sorted(checkpoints.items())) + "\n"
    paths.report(f"exp{exp}", "md").write_text(md, encoding="utf-8")
    log.info("wrote %s", paths.report(f"exp{exp}", "md"))
    return 0


def cmd_report(cfg: RunConfig, paths: RunPaths, args) -> int:
    parts = [f"# Explanation audit report\n\nconfig {cfg.hash()} | seed {cfg.seed}\n"]
    found = False
    for n in (1, 2, 3, 4):
        md = paths.report(f"exp{n}", "md")
        if md.exists():
            found = True
            parts.append(md.read_text(encoding="utf-8"))
    if not found:
        raise MissingDataset(f"no audit reports under {paths.reports}; run `audit` first")
    (paths.reports / "report.md").write_text("\n".join(parts), encoding="utf-8")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "compress": cmd_compress,
    "explain": cmd_explain,
    "synth-clone": cmd_synth_clone,
    "audit": cmd_audit,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--data", help="input check-in file (synth: output path)")
    common.add_argument("--out", help="run directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="poi-xaudit", description="Explainable next-POI recommender and explanation audits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "ingest", "train", "compress", "synth-clone", "report"):
        sub.add_parser(name, parents=[common])
    p = sub.add_parser("explain", parents=[common])
    p.add_argument("--user", type=int, required=True)
    p.add_argument("--k-steps", type=int, default=2)
    p.add_argument("--k-users", type=int, default=2)
    p.add_argument("--save", action="store_true", help="also write reports/explain_<user>.json")
    p = sub.add_parser("audit", parents=[common])
    p.add_argument("experiment", type=int, choices=(1, 2, 3, 4))
    return parser


def _overrides(args) -> dict:
    values = {"seed": args.seed, "data": args.data, "out": args.out}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip().replace("-", "_")] = value
    return values


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, RunPaths(cfg.out), args)
    except PoiXauditError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
