"""Command line: simulate, gen-dataset, train, evaluate, sweep.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from . import classifier as clf
from .errors import ConfigError, DimensionMismatch, EmptyDataset, EmptyGrid, PRContactError
from .sim.dataset import build_matrix, generate_dataset, load_matrix, read_dataset, write_dataset
from .sim.harness import run_scenario, sweep, write_table
from .sim.scenario import load_scenario
from .sim.units import to_si

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
CONTACT_FILE, CHAIN_FILE, REPORT_FILE = "contact.fnn", "chain.fnn", "report.json"


def _load_models(path):
    """Classifier pair from a directory written by ``train`` (or a single model file)."""
    try:
        if os.path.isdir(path):
            chain = os.path.join(path, CHAIN_FILE)
            return (clf.load_model(os.path.join(path, CONTACT_FILE)),
                    clf.load_model(chain) if os.path.exists(chain) else None)
        return clf.load_model(path), None
    except (OSError, ValueError, IndexError, KeyError) as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc


def cmd_simulate(args):
    s = load_scenario(args.scenario)
    if args.seed is not None:
        s.seed = args.seed
    models = _load_models(args.model) if args.model else None
    res = run_scenario(s, classifiers=models)
    res.trace.write_csv(args.out)
    print(json.dumps(res.summary.as_dict()))


def cmd_gen_dataset(args):
    entries = load_matrix(args.matrix) if args.matrix else build_matrix()
    ds = generate_dataset(entries, workers=args.workers)
    write_dataset(ds, args.out)
    print(json.dumps({"samples": len(ds), "scenarios": len(entries), "class_counts": ds.counts()}))


def _load_grid(path):
    if path is None:
        return dict(clf.DEFAULT_GRID)
    try:
        with open(path) as fh:
            g = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return {"layers": [int(v) for v in g.get("layers", clf.DEFAULT_GRID["layers"])],
                "neurons": [int(v) for v in g.get("neurons", clf.DEFAULT_GRID["neurons"])],
                "l2": [float(v) for v in g.get("l2", clf.DEFAULT_GRID["l2"])],
                "epochs": int(g.get("epochs", 50))}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def fit_pair(ds, grid, test_config=None, seed=0):
    """Grid-search and fit both classifiers.

    Validation uses the highest training configuration id, then the selected
    architecture is refit on all training configurations.
    """
    epochs = grid.pop("epochs", 50)
    cfg = clf.TrainConfig(epochs=epochs, seed=seed)
    train = ds if test_config is None else ds.subset(ds.config_id != test_config)
    configs = np.unique(train.config_id)
    if len(configs) < 2:
        raise ConfigError("training needs at least two robot configurations")
    val_id = configs[-1]
    report = {}
    models = []
    for name, feats, target, classes, mask in (
        ("contact", slice(0, 3), lambda d: d.is_clamping, [0, 1], lambda d: np.ones(len(d), bool)),
        ("chain", slice(0, 6), lambda d: d.label, [1, 2, 3], lambda d: d.label > 0),
    ):
        sub = train.subset(mask(train))
        fit = sub.subset(sub.config_id != val_id)
        val = sub.subset(sub.config_id == val_id)
        Xf, yf = clf.balance(fit.X[:, feats], target(fit), seed)
        gs = clf.grid_search(Xf, yf, val.X[:, feats], target(val), grid, classes, cfg)
        best = gs.model
        Xa, ya = clf.balance(sub.X[:, feats], target(sub), seed)
        init = clf.FnnModel.init(Xa.shape[1], best.hidden, len(classes), best.l2, seed, classes)
        model, hist = clf.train(init, Xa, ya, clf.TrainConfig(**{**cfg.__dict__, "l2": best.l2}))
        models.append(model)
        report[name] = {"grid": gs.report, "selected": {"hidden": best.hidden, "l2": best.l2},
                        "final_loss": hist[-1]}
    return models[0], models[1], report


def evaluate_pair(contact, chain, ds):
    yc = ds.is_clamping
    pc = clf.predict(contact, ds.X[:, :3])
    Cc = clf.confusion_matrix(yc, pc, [0, 1])
    out = {"contact_accuracy": float(np.mean(pc == yc)), "contact_balanced_accuracy": float(np.mean(np.diag(Cc))),
           "contact_confusion": Cc.tolist()}
    if chain is not None and np.any(ds.label > 0):
        m = ds.label > 0
        pk = clf.predict(chain, ds.X[m])
        Ck = clf.confusion_matrix(ds.label[m], pk, [1, 2, 3])
        out.update({"chain_accuracy": float(np.mean(pk == ds.label[m])), "chain_confusion": Ck.tolist()})
    return out


def cmd_train(args):
    ds = read_dataset(args.data)
    grid = _load_grid(args.grid)
    contact, chain, report = fit_pair(ds, grid, args.test_config, args.seed)
    os.makedirs(args.out, exist_ok=True)
    clf.save_model(contact, os.path.join(args.out, CONTACT_FILE))
    clf.save_model(chain, os.path.join(args.out, CHAIN_FILE))
    if args.test_config is not None:
        report["test"] = evaluate_pair(contact, chain, ds.subset(ds.config_id == args.test_config))
    with open(os.path.join(args.out, REPORT_FILE), "w") as fh:
        json.dump(report, fh, indent=2)
    if "test" in report:
        print(json.dumps(report["test"]))
    else:
        print(json.dumps({"selected": {k: v["selected"] for k, v in report.items()}}))


def cmd_evaluate(args):
    contact, chain = _load_models(args.model)
    ds = read_dataset(args.data)
    res = evaluate_pair(contact, chain, ds)
    if args.confusion:
        with open(args.confusion, "w") as fh:
            fh.write("table,true,pred,rate\n")
            for name, classes in (("contact", ["collision", "clamping"]), ("chain", [1, 2, 3])):
                C = res.get(f"{name}_confusion")
                if C is None:
                    continue
                for i, ti in enumerate(classes):
                    for j, pj in enumerate(classes):
                        fh.write(f"{name},{ti},{pj},{C[i][j]!r}\n")
    print(json.dumps({k: v for k, v in res.items() if not k.endswith("confusion")}))


def cmd_sweep(args):
    s = load_scenario(args.scenario)
    values = None
    if args.values:
        values = [to_si(v.strip(), "sweep value") for v in args.values.split(",")]
    rows = sweep(s, args.axis, values, workers=args.workers)
    if args.out:
        write_table(rows, args.out)
    for r in rows:
        print(json.dumps(r))


def build_parser():
    p = argparse.ArgumentParser(prog="prcontact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("simulate", help="run one scenario and write its trace")
    a.add_argument("scenario")
    a.add_argument("--out", default="trace.csv")
    a.add_argument("--seed", type=int)
    a.add_argument("--model", help="trained model directory for the auto strategy")
    a.set_defaults(func=cmd_simulate)

    a = sub.add_parser("gen-dataset", help="run the contact matrix and write gated samples")
    a.add_argument("matrix", nargs="?")
    a.add_argument("--out", default="data.csv")
    a.add_argument("--workers", type=int, default=1)
    a.set_defaults(func=cmd_gen_dataset)

    a = sub.add_parser("train", help="grid-search and fit both classifiers")
    a.add_argument("--data", required=True)
    a.add_argument("--grid")
    a.add_argument("--out", default="model")
    a.add_argument("--test-config", type=int, help="configuration id held out for testing")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_train)

    a = sub.add_parser("evaluate", help="accuracy and confusion matrices on a dataset")
    a.add_argument("--model", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--confusion")
    a.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("sweep", help="one run per velocity or reaction stiffness value")
    a.add_argument("scenario")
    a.add_argument("--axis", choices=("velocity", "stiffness"), required=True)
    a.add_argument("--values", help="comma separated, units allowed (e.g. '0.1 N/mm,2 N/mm')")
    a.add_argument("--out")
    a.add_argument("--workers", type=int, default=1)
    a.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, EmptyDataset, EmptyGrid, DimensionMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PRContactError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
