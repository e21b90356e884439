"""Command-line surface.

Every stochastic command requires an explicit ``--seed``; identical
(inputs, config, seed) produce byte-identical output bodies. Each command
that writes an output file also writes a ``<out>.manifest.json`` sidecar
recording the command line, config echo, seed, and package version.

Exit codes: 0 success, 1 for data errors (missing or malformed inputs),
2 for violated model invariants.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .cat2vec import Cat2VecModel, TrainingConfig, train
from .decision import choice_distribution, decide, replicate_rng
from .domain import RDMP, IndividualDifferences
from .errors import CdmError, DataError
from .evaluation import (
    evaluate_group_dataset,
    evaluate_individual_dataset,
    sweep_parameter,
)
from .inference import FitConfig, fit_group, fit_individual
from .io import (
    RunManifest,
    load_group_dataset,
    load_individual_dataset,
    packaged_dataset,
    save_json,
    utc_now,
)
from .lexicon import LexiconCategorizer
from .parsing import extract_outcomes, expected_value, load_rules, quantity_count

CONFIG_ENV_VAR = "GISTCDM_CONFIG"

FIT_CONFIG_KEYS = {
    "nfc_points", "num_points", "rs_points", "refinement", "max_refine_iter",
    "n_samples", "ambiguous_policy",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {p}")
    return json.loads(p.read_text())


def _fit_config(config: dict, seed: int) -> FitConfig:
    kwargs = {k: v for k, v in config.items() if k in FIT_CONFIG_KEYS}
    return FitConfig(seed=seed, **kwargs)


def _categorizer(args, config: dict):
    if getattr(args, "model", None):
        return Cat2VecModel.load(args.model)
    return LexiconCategorizer()


def _ivd_from_args(args) -> IndividualDifferences:
    return IndividualDifferences.clamped(args.nfc, args.num, args.rs)


def _load_rdmp(path: str, rules=None) -> RDMP:
    from .io import _parse_rdmp

    blob = json.loads(Path(path).read_text())
    return _parse_rdmp(blob, record=path, rules=rules)


def _emit(args, body: str, command: str, seed: int | None, config: dict,
          default_name: str):
    out = getattr(args, "out", None)
    if out:
        path = Path(out)
        path.write_text(body)
        manifest = RunManifest(
            command=command,
            argv=sys.argv[1:],
            seed=seed,
            config=config,
            outputs=[str(path)],
            package_version=__version__,
            started=_emit.started,
            finished=utc_now(),
        )
        manifest.write(path.with_suffix(path.suffix + ".manifest.json"))
    else:
        sys.stdout.write(body)
        if not body.endswith("\n"):
            sys.stdout.write("\n")


_emit.started = ""


def _json_body(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


# --- command handlers -------------------------------------------------------

def cmd_parse_choice(args, config):
    rules = load_rules(args.rules) if args.rules else None
    outcomes = extract_outcomes(args.text, rules=rules,
                                infer_complement=args.infer_complement)
    payload = {
        "text": args.text,
        "outcomes": [
            {
                "probability": float(o.probability),
                "probability_exact": str(o.probability),
                "quantity": o.quantity,
            }
            for o in outcomes
        ],
        "expected_value": expected_value(outcomes),
        "quantity_count": quantity_count(outcomes),
    }
    _emit(args, _json_body(payload), "parse-choice", None, config, "parse.json")


def cmd_categorize(args, config):
    categorizer = _categorizer(args, config)
    category, scores = categorizer.predict_category(args.text)
    p_pos, p_neg = categorizer.category_sentiment(category)
    payload = {
        "text": args.text,
        "category": category,
        "scores": scores,
        "sentiment": {"pos": p_pos, "neg": p_neg},
    }
    _emit(args, _json_body(payload), "categorize", None, config, "categorize.json")


def cmd_train_cat2vec(args, config):
    corpus = []
    with open(args.corpus) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                corpus.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{args.corpus}:{lineno}: bad JSON record: {exc}")
    tc_keys = {"dim", "hidden", "k_negatives", "epochs", "learning_rate",
               "batch_size", "min_token_freq"}
    tc = TrainingConfig(seed=args.seed,
                        **{k: v for k, v in config.items() if k in tc_keys})
    model, losses = train(corpus, tc)
    model.save(args.out)
    payload = {"epochs": len(losses), "loss_trace": losses, "model": args.out,
               "seed": args.seed}
    manifest = RunManifest(
        command="train-cat2vec", argv=sys.argv[1:], seed=args.seed,
        config=config, outputs=[args.out], package_version=__version__,
        started=_emit.started, finished=utc_now())
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    sys.stdout.write(_json_body(payload))


def cmd_decide(args, config):
    categorizer = _categorizer(args, config)
    rdmp = _load_rdmp(args.rdmp)
    ivd = _ivd_from_args(args)
    rng = replicate_rng(args.seed, 0)
    decision = decide(rdmp, ivd, categorizer, rng,
                      ambiguous_policy=args.ambiguous_policy)
    n = args.n_samples
    payload = {
        "rdmp": rdmp.id,
        "seed": args.seed,
        "ivd": {"nfc": ivd.nfc, "num": ivd.num, "rs": ivd.rs},
        "chosen": decision.chosen,
        "path": decision.path.value,
        "pref_cat": decision.pref_cat,
        "pref_int": decision.pref_int,
        "utilities": [
            {"choice": u.choice_id, "cu": u.cu, "iu": u.iu}
            for u in decision.utilities
        ],
    }
    if n:
        dist = choice_distribution(rdmp, ivd, categorizer, n, args.seed,
                                   ambiguous_policy=args.ambiguous_policy)
        payload["distribution"] = {
            "n_samples": n,
            "probabilities": dict(zip(dist.choice_ids, dist.probabilities)),
            "p_risky": dist.p_risky,
            "consensus_rate": dist.consensus_rate,
        }
    _emit(args, _json_body(payload), "decide", args.seed, config, "decision.json")


def cmd_sweep(args, config):
    categorizer = _categorizer(args, config)
    rdmp = _load_rdmp(args.rdmp)
    try:
        lo, hi, step = (float(x) for x in args.range.split(":"))
    except ValueError:
        raise DataError(f"bad --range {args.range!r}; expected lo:hi:step")
    if step <= 0 or hi < lo:
        raise DataError(f"bad --range {args.range!r}")
    values = []
    v = lo
    while v <= hi + 1e-12:
        values.append(round(v, 12))
        v += step
    bounds = {"nfc": (0.0, 1.0), "num": (0.0, 1.0), "rs": (-3.0, 3.0)}
    lo_b, hi_b = bounds[args.param]
    margin = 1e-6
    values = [min(max(x, lo_b + margin), hi_b - margin) for x in values]
    base = _ivd_from_args(args)
    rows = sweep_parameter(rdmp, categorizer, base, args.param, values,
                           args.n_samples, args.seed,
                           ambiguous_policy=args.ambiguous_policy)
    lines = [f"# seed={args.seed} n_samples={args.n_samples}",
             "param,value,p_risky,consensus_rate,mean_cu_deviation,mean_iu_deviation"]
    for r in rows:
        lines.append(
            f"{r['param']},{r['value']:.6f},{r['p_risky']:.6f},"
            f"{r['consensus_rate']:.6f},{r['mean_cu_deviation']:.6g},"
            f"{r['mean_iu_deviation']:.6g}"
        )
    _emit(args, "\n".join(lines) + "\n", "sweep", args.seed, config, "sweep.csv")


def cmd_fit_group(args, config):
    categorizer = _categorizer(args, config)
    dataset = load_group_dataset(args.data or packaged_dataset("group_experiments"))
    fit_config = _fit_config(config, args.seed)
    by_category = dataset.by_category()
    if args.category:
        if args.category not in by_category:
            raise DataError(f"unknown category {args.category!r}")
        by_category = {args.category: by_category[args.category]}
    payload = {"seed": args.seed, "fits": {}}
    for category, records in by_category.items():
        fit = fit_group(records, categorizer, fit_config)
        payload["fits"][category] = {
            "ivd": {"nfc": fit.ivd.nfc, "num": fit.ivd.num, "rs": fit.ivd.rs},
            "objective": fit.objective,
            "n_samples": fit.n_samples,
            "refined": fit.refined,
            "predictions": [
                {"record_id": rid, "p_risky_gain": pg, "p_risky_loss": pl}
                for rid, pg, pl in fit.predictions
            ],
        }
    _emit(args, _json_body(payload), "fit-group", args.seed, config, "group_fit.json")


def cmd_eval_group(args, config):
    categorizer = _categorizer(args, config)
    dataset = load_group_dataset(args.data or packaged_dataset("group_experiments"))
    fit_config = _fit_config(config, args.seed)
    categories = [args.category] if args.category else None
    result = evaluate_group_dataset(dataset, categorizer, fit_config,
                                    eval_n_samples=args.eval_samples,
                                    categories=categories)
    _emit(args, result.to_csv(), "eval-group", args.seed, config, "report.csv")
    if args.summary:
        save_json(result.summary(), args.summary)


def cmd_fit_individual(args, config):
    categorizer = _categorizer(args, config)
    dataset = load_individual_dataset(args.data or packaged_dataset("questionnaire"))
    fit_config = replace(_fit_config(config, args.seed), ambiguous_policy="first")
    by_individual = dataset.responses_by_individual()
    if not by_individual:
        raise DataError("dataset has no responses to fit")
    ids = [args.individual] if args.individual else sorted(by_individual)
    payload = {"seed": args.seed, "individuals": {}}
    for ind in ids:
        if ind not in by_individual:
            raise DataError(f"unknown individual {ind!r}")
        fit = fit_individual(by_individual[ind], dataset.rdps, categorizer,
                             fit_config, individual_id=ind)
        payload["individuals"][ind] = {
            "ivd": {"nfc": fit.ivd.nfc, "num": fit.ivd.num, "rs": fit.ivd.rs},
            "accuracy": fit.accuracy,
            "n_samples": fit.n_samples,
            "refined": fit.refined,
        }
    _emit(args, _json_body(payload), "fit-individual", args.seed, config,
          "individual_fit.json")


def cmd_eval_individual(args, config):
    categorizer = _categorizer(args, config)
    dataset = load_individual_dataset(args.data or packaged_dataset("questionnaire"))
    if not dataset.responses:
        raise DataError(
            "dataset has no responses; generate a synthetic cohort first")
    fit_config = replace(_fit_config(config, args.seed), ambiguous_policy="first")
    report = evaluate_individual_dataset(dataset, categorizer, k=args.k,
                                         config=fit_config)
    payload = {
        "seed": args.seed,
        "k": args.k,
        "mean_accuracy": report.mean_accuracy,
        "min_accuracy": report.min_accuracy,
        "max_accuracy": report.max_accuracy,
        "per_question": report.per_question,
        "per_individual": [
            {
                "individual_id": r.individual_id,
                "mean_accuracy": r.mean_accuracy,
                "fold_accuracies": list(r.fold_accuracies),
            }
            for r in report.individuals
        ],
    }
    _emit(args, _json_body(payload), "eval-individual", args.seed, config,
          "individual_eval.json")


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gistcdm",
        description="Gist-based computational model of risky decision-making",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=True):
        p.add_argument("--config", help="JSON config file overriding defaults "
                ', also read from the environment variable '
                f"{CONFIG_ENV_VAR}")
        if seed:
            p.add_argument("--seed", type=int, required=True,
                           help="master seed (required: command is stochastic)")
        if out:
            p.add_argument("--out", help="output file (stdout when omitted)")

    p = sub.add_parser("parse-choice", help="extract outcomes from choice text")
    p.add_argument("--text", required=True)
    p.add_argument("--rules", help="custom extraction rule table")
    p.add_argument("--infer-complement", action="store_true", default=None,
                   dest="infer_complement")
    common(p, seed=False)
    p.set_defaults(handler=cmd_parse_choice)

    p = sub.add_parser("categorize", help="category and sentiment of a text")
    p.add_argument("--text", required=True)
    p.add_argument("--model", help="trained embedding model (default: lexicon)")
    common(p, seed=False)
    p.set_defaults(handler=cmd_categorize)

    p = sub.add_parser("train-cat2vec", help="train the category embedding model")
    p.add_argument("--corpus", required=True,
                   help="JSONL file of {text, category, sentiment} records")
    p.add_argument("--out", required=True, help="model output path")
    common(p, out=False)
    p.set_defaults(handler=cmd_train_cat2vec)

    p = sub.add_parser("decide", help="run one decision on a problem file")
    p.add_argument("--rdmp", required=True, help="problem JSON file")
    p.add_argument("--model")
    p.add_argument("--nfc", type=float, default=0.5)
    p.add_argument("--num", type=float, default=0.5)
    p.add_argument("--rs", type=float, default=0.0)
    p.add_argument("--n-samples", type=int, default=0,
                   help="also estimate the choice distribution")
    p.add_argument("--ambiguous-policy", choices=("raise", "first"), default="raise")
    common(p)
    p.set_defaults(handler=cmd_decide)

    p = sub.add_parser("sweep", help="sweep one parameter, report P(risky)")
    p.add_argument("--rdmp", required=True)
    p.add_argument("--model")
    p.add_argument("--param", required=True, choices=("nfc", "num", "rs"))
    p.add_argument("--range", required=True, help="lo:hi:step")
    p.add_argument("--nfc", type=float, default=0.5)
    p.add_argument("--num", type=float, default=0.5)
    p.add_argument("--rs", type=float, default=0.0)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--ambiguous-policy", choices=("raise", "first"), default="raise")
    common(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("fit-group", help="fit group-level parameters per category")
    p.add_argument("--data", help="group dataset (default: packaged table)")
    p.add_argument("--model")
    p.add_argument("--category", help="restrict to one category")
    common(p)
    p.set_defaults(handler=cmd_fit_group)

    p = sub.add_parser("eval-group",
                       help="leave-one-out evaluation with the metric table")
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--category")
    p.add_argument("--eval-samples", type=int, default=100_000)
    p.add_argument("--summary", help="also write a JSON summary (AIC/BIC)")
    common(p)
    p.set_defaults(handler=cmd_eval_group)

    p = sub.add_parser("fit-individual", help="fit per-individual parameters")
    p.add_argument("--data", help="questionnaire dataset with responses")
    p.add_argument("--model")
    p.add_argument("--individual", help="restrict to one individual id")
    common(p)
    p.set_defaults(handler=cmd_fit_individual)

    p = sub.add_parser("eval-individual",
                       help="k-fold cross-validated individual prediction")
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--k", type=int, default=5)
    common(p)
    p.set_defaults(handler=cmd_eval_individual)

    return parser


def _merge_range_values(argv: list[str]) -> list[str]:
    # "--range -3:3:0.1" would be read as a missing argument because the
    # value starts with a dash; fold it into one --range=... token
    out = []
    i = 0
    while i < len(argv):
        if (argv[i] == "--range" and i + 1 < len(argv)
                and re.match(r"^-[\d.]+:", argv[i + 1])):
            out.append(f"--range={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(_merge_range_values(argv))
    _emit.started = utc_now()
    try:
        config = _load_config(args.config)
        args.handler(args, config)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CdmError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON input: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
