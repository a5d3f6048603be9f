"""Command-line front end: data generation, training, evaluation,
gradient checking, and the coefficient sensitivity sweep.

Exit codes are a stable scripting contract: 0 success, 1 check failure,
2 usage or configuration error, 3 numerical failure during training.
Every command is deterministic given its flags; rerunning writes
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .coefficients import PolyCoefficients, validate_coefficients
from .data import (
    FeaturePairSet,
    SyntheticSpec,
    generate_synthetic,
    load_features,
    save_features,
)
from .encoder import NumericalError, load_model, save_model
from .gradcheck import run_grad_check
from .losses import LOSS_KINDS, LossSpec
from .training import evaluate_pairs, train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    """Configuration or input problem; maps to exit code 2."""


@dataclasses.dataclass
class RunConfig:
    """Training configuration; JSON config files mirror these field names."""

    loss: str = "max_poly"
    a: tuple = (0.5, -0.7, 0.2)
    b: tuple = (0.03, -0.3, 1.2)
    mining_margin: float = 0.2
    triplet_margin: float = 0.2
    mining: bool = True
    sim_domain: tuple = (0.0, 1.0)
    embed_dim: int = 16
    epochs: int = 30
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: float = 1.0
    seed: int = 0
    ks: tuple = (1, 5, 10)
    data: str = ""
    out_dir: str = "runs"

    def loss_spec(self) -> LossSpec:
        coeffs = PolyCoefficients(
            pos=tuple(self.a),
            neg=tuple(self.b),
            mining_margin=self.mining_margin,
            sim_domain=tuple(self.sim_domain),
        )
        return LossSpec(
            kind=self.loss,
            coefficients=coeffs,
            triplet_margin=self.triplet_margin,
            mining_enabled=self.mining,
        )


def _parse_float_list(text: str, flag: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated list of numbers, got {text!r}") from None


def _parse_int_list(text: str, flag: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated list of integers, got {text!r}") from None


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"config file {path} has unknown fields: {sorted(unknown)}")
    return raw


def _resolve_config(args) -> RunConfig:
    """Defaults, then config file values, then explicit flags."""
    values = {}
    if args.config:
        values.update(_load_config_file(args.config))
    overrides = {
        "loss": args.loss,
        "a": _parse_float_list(args.a, "--a") if args.a is not None else None,
        "b": _parse_float_list(args.b, "--b") if args.b is not None else None,
        "mining_margin": args.mining_margin,
        "triplet_margin": args.margin,
        "mining": args.mining,
        "sim_domain": _parse_float_list(args.sim_domain, "--sim-domain")
        if args.sim_domain is not None
        else None,
        "embed_dim": args.embed_dim,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "lr_decay": args.lr_decay,
        "seed": args.seed,
        "ks": _parse_int_list(args.ks, "--ks") if args.ks is not None else None,
        "data": args.data,
        "out_dir": args.out_dir,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("a", "b", "sim_domain", "ks"):
        if key in values:
            values[key] = tuple(values[key])
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    if len(config.sim_domain) != 2:
        raise UsageError(f"sim_domain must have exactly two entries, got {config.sim_domain}")
    return config


def _validated_spec(config: RunConfig) -> LossSpec:
    if config.loss not in LOSS_KINDS:
        raise UsageError(f"unknown loss {config.loss!r}, expected one of {LOSS_KINDS}")
    if config.loss != "triplet":
        report = validate_coefficients(config.loss_spec().coefficients)
        if not report.ok:
            raise UsageError("invalid coefficients: " + "; ".join(report.violations))
    if config.loss == "triplet" and config.triplet_margin < 0:
        raise UsageError(f"triplet margin must be >= 0, got {config.triplet_margin}")
    return config.loss_spec()


def _load_dataset(path: str) -> FeaturePairSet:
    if not path:
        raise UsageError("no dataset given; pass --data or set \"data\" in the config file")
    if not Path(path).exists():
        raise UsageError(f"dataset file not found: {path}")
    try:
        return load_features(path)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen_data(args) -> int:
    spec = SyntheticSpec(
        num_classes=args.classes,
        pairs_per_class=args.per_class,
        latent_dim=args.latent_dim,
        d1=args.d1,
        d2=args.d2,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pairs = generate_synthetic(spec)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_features(pairs, out)
    print(
        json.dumps(
            {
                "path": str(out),
                "n": pairs.n,
                "d1": pairs.d1,
                "d2": pairs.d2,
                "splits": pairs.split_counts(),
            }
        )
    )
    return EXIT_OK


def cmd_train(args) -> int:
    config = _resolve_config(args)
    spec = _validated_spec(config)
    dataset = _load_dataset(config.data)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    model_path = out_dir / "model.xmd"

    with open(log_path, "w") as log_file:
        result = train(
            dataset,
            spec,
            epochs=config.epochs,
            batch_size=config.batch_size,
            lr=config.lr,
            seed=config.seed,
            embed_dim=config.embed_dim,
            lr_decay=config.lr_decay,
            ks=config.ks,
            on_epoch=lambda rec: print(json.dumps(rec), file=log_file),
        )
    save_model(result.params, model_path)

    if dataset.indices("val").size >= 2:
        report = evaluate_pairs(result.params, dataset, "val", config.ks)
        print(json.dumps(report.as_dict()))
    else:
        print(json.dumps({}))
    return EXIT_OK


def cmd_eval(args) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        raise UsageError(f"model file not found: {args.model}")
    try:
        params = load_model(model_path)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset = _load_dataset(args.data)
    ks = _parse_int_list(args.ks, "--ks") if args.ks is not None else (1, 5, 10)
    try:
        report = evaluate_pairs(params, dataset, args.split, ks)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps(report.as_dict()))
    return EXIT_OK


def cmd_grad_check(args) -> int:
    kinds = list(LOSS_KINDS) if args.loss == "all" else [args.loss]
    failed = False
    for kind in kinds:
        report = run_grad_check(
            kind, trials=args.trials, seed=args.seed, step=args.step, inject_bug=args.inject_bug
        )
        for comp in report.components:
            status = "PASS" if comp.passed else "FAIL"
            print(
                f"{kind} {comp.name}: max_rel_err={comp.max_rel_err:.3e} "
                f"tol={comp.tolerance:.0e} trials={comp.trials} {status}"
            )
        failed = failed or not report.passed
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    if config.loss == "triplet":
        raise UsageError("sweep varies polynomial coefficients; pick a polynomial loss")
    b1_grid = _parse_float_list(args.b1, "--b1")
    b2_grid = _parse_float_list(args.b2, "--b2")
    if len(config.b) < 3:
        raise UsageError("sweep needs a base negative polynomial with at least 3 coefficients")
    dataset = _load_dataset(config.data)
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)

    rows = []
    best = None
    for b1 in b1_grid:
        for b2 in b2_grid:
            neg = (config.b[0], b1, b2) + tuple(config.b[3:])
            cell = dataclasses.replace(config, b=neg)
            report = validate_coefficients(cell.loss_spec().coefficients)
            if not report.ok:
                rows.append((b1, b2, "", "", "invalid"))
                continue
            result = train(
                dataset,
                cell.loss_spec(),
                epochs=cell.epochs,
                batch_size=cell.batch_size,
                lr=cell.lr,
                seed=cell.seed,
                embed_dim=cell.embed_dim,
                lr_decay=cell.lr_decay,
                ks=(1,),
            )
            recall = evaluate_pairs(result.params, dataset, "val", (1,))
            r1_i2t, r1_t2i = recall.i2t[1], recall.t2i[1]
            rows.append((b1, b2, repr(r1_i2t), repr(r1_t2i), "ok"))
            mean_r1 = (r1_i2t + r1_t2i) / 2.0
            if best is None or mean_r1 > best[0]:
                best = (mean_r1, b1, b2, r1_i2t, r1_t2i)

    with open(out_path, "w") as fh:
        fh.write("b1,b2,r1_i2t,r1_t2i,status\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")

    if best is not None:
        print(
            json.dumps(
                {"b1": best[1], "b2": best[2], "r1_i2t": best[3], "r1_t2i": best[4]}
            )
        )
    else:
        print(json.dumps({"note": "no valid grid cell"}))
    return EXIT_OK


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--data", help="feature file (XMF1 binary or CSV)")
    parser.add_argument("--loss", choices=LOSS_KINDS, help="loss kind")
    parser.add_argument("--a", help="positive polynomial coefficients, ascending powers (e.g. 0.5,-0.7,0.2)")
    parser.add_argument("--b", help="negative polynomial coefficients, ascending powers")
    parser.add_argument("--mining-margin", type=float, dest="mining_margin")
    parser.add_argument("--margin", type=float, help="triplet hinge margin")
    parser.add_argument("--no-mining", dest="mining", action="store_const", const=False,
                        help="use every negative instead of mined ones")
    parser.add_argument("--sim-domain", dest="sim_domain", help="score interval for coefficient validation, e.g. 0,1")
    parser.add_argument("--embed-dim", type=int, dest="embed_dim")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--lr", type=float)
    parser.add_argument("--lr-decay", type=float, dest="lr_decay", help="per-epoch learning-rate factor")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--ks", help="Recall@K values to log, e.g. 1,5,10")
    parser.add_argument("--out-dir", dest="out_dir", help="directory for model and training log")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairweight",
        description="Pair-weighting metric learning for cross-modal retrieval",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a synthetic paired-feature file")
    gen.add_argument("--classes", type=int, default=32)
    gen.add_argument("--per-class", type=int, dest="per_class", default=64)
    gen.add_argument("--latent-dim", type=int, dest="latent_dim", default=16)
    gen.add_argument("--d1", type=int, default=64)
    gen.add_argument("--d2", type=int, default=48)
    gen.add_argument("--noise-sigma", type=float, dest="noise_sigma", default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen_data)

    tr = sub.add_parser("train", help="train a dual encoder and write model + log")
    _add_train_flags(tr)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="Recall@K of a saved model on a dataset split")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", choices=("train", "val", "test"), default="test")
    ev.add_argument("--ks")
    ev.set_defaults(func=cmd_eval)

    gc = sub.add_parser("grad-check", help="verify analytic gradients against finite differences")
    gc.add_argument("--loss", choices=LOSS_KINDS + ("all",), default="all")
    gc.add_argument("--trials", type=int, default=100)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--step", type=float, default=1e-5)
    gc.add_argument("--inject-bug", dest="inject_bug", action="store_true",
                    help="test-only: corrupt one analytic gradient to prove the harness fails")
    gc.set_defaults(func=cmd_grad_check)

    sw = sub.add_parser("sweep", help="grid search over negative coefficients b1, b2")
    _add_train_flags(sw)
    sw.add_argument("--b1", required=True, help="comma-separated b1 grid")
    sw.add_argument("--b2", required=True, help="comma-separated b2 grid")
    sw.add_argument("--out", required=True, help="CSV output path")
    sw.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
