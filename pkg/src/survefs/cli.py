"""Command-line interface.

Subcommands: ``run`` (full sweep), ``cluster`` (emit dendrogram and
assignment), ``select`` (one ensemble configuration), ``synth`` (generate
synthetic data) and ``report`` (regenerate summaries from a results
directory).  Exit codes: 0 success, 1 configuration error, 2 data error,
3 run completed with recorded partial failures.
"""

import argparse
import csv
import json
import sys

from .errors import ConfigError, DataError


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", help="output directory or file")
    p.add_argument("--seed", type=int, help="override the config seed")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="survefs",
        description="clustering-guided ensemble feature selection for survival data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a full sweep")
    _add_common(run_p)
    run_p.add_argument("--threads", type=int, default=1,
                       help="worker threads (affects speed only)")

    cluster_p = sub.add_parser("cluster", help="emit dendrogram and cluster assignment")
    _add_common(cluster_p)

    select_p = sub.add_parser("select", help="run one ensemble configuration")
    _add_common(select_p)

    synth_p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(synth_p)

    report_p = sub.add_parser("report", help="regenerate summaries for a results directory")
    report_p.add_argument("--out", required=True, help="results directory")
    return parser


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _cmd_run(args):
    from .pipeline import load_run_config, run_experiment

    cfg = load_run_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.threads:
        cfg.threads = args.threads
    result = run_experiment(cfg)
    print(f"wrote {result.n_configs} configurations to {result.out_dir}")
    if result.n_failures:
        print(f"{result.n_failures} configurations failed; see errors.log")
        return 3
    return 0


def _cmd_cluster(args):
    from .data import load_csv, load_schema
    from .pipeline import cluster_features

    raw = _load_json(args.config)
    data = load_csv(raw["dataset_path"], load_schema(raw["schema_path"]))
    rep_names, dendro, assignment, scores = cluster_features(
        data,
        raw.get("cluster_tau", 0.99),
        raw.get("cluster_min_size", 3),
        raw.get("cluster_distance_variant", "rows"),
        raw.get("cluster_gap", 0.7),
    )
    out = {
        "dendrogram": dendro.to_dict(),
        "assignment": assignment.to_dict(data.feature_names),
        "representatives": rep_names,
        "univariate_scores": {
            nm: float(s) for nm, s in zip(data.feature_names, scores)
        },
    }
    target = args.out or "clusters.json"
    with open(target, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
    print(f"wrote {target}")
    return 0


def _cmd_select(args):
    from .data import default_probe_count, impute, load_csv, load_schema, make_probes, normalize
    from .ensemble import EnsembleConfig, run_ensemble

    raw = _load_json(args.config)
    data = load_csv(raw["dataset_path"], load_schema(raw["schema_path"]))
    seed = args.seed if args.seed is not None else raw.get("seed", 0)
    imputed, _ = impute(data)
    normalized, _ = normalize(imputed)
    q = raw.get("probe_count") or default_probe_count(normalized.p)
    probes = make_probes(normalized, q, seed)
    cfg = EnsembleConfig(
        selector_id=raw["selector"],
        selector_params=raw.get("selector_params", {}),
        n_bootstraps=raw.get("n_bootstraps", 50),
        aggregator=raw.get("aggregator", "MEAN_SCORE"),
        threshold=raw.get("threshold", "FREQ_HALF"),
        seed=seed,
    )
    result = run_ensemble(normalized, probes, cfg)
    target = args.out or "selection.json"
    with open(target, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
    print(f"selected {len(result.final_subset)} features -> {target}")
    return 0


def _cmd_synth(args):
    import os

    from .syndata import SynthSpec, generate

    raw = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    raw["groups"] = [tuple(g) for g in raw.get("groups", [])]
    raw["relevant"] = {int(k): float(v) for k, v in raw.get("relevant", {}).items()}
    spec = SynthSpec(**raw)
    data, truth = generate(spec)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "data.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "event", *data.feature_names])
        for i in range(data.n):
            w.writerow(
                [repr(float(data.time[i])), int(data.event[i])]
                + [repr(float(v)) for v in data.features[i]]
            )
    schema_path = os.path.join(out_dir, "schema.json")
    with open(schema_path, "w") as fh:
        json.dump(
            {
                "time_col": "time",
                "event_col": "event",
                "features": [
                    {"name": nm, "kind": kind}
                    for nm, kind in zip(data.feature_names, data.feature_kinds)
                ],
            },
            fh, indent=2,
        )
    truth_path = os.path.join(out_dir, "truth.json")
    with open(truth_path, "w") as fh:
        json.dump(
            {
                "relevant": truth.relevant,
                "group_members": truth.group_members,
                "censor_rate": truth.censor_rate,
                "realized_censoring": truth.realized_censoring,
            },
            fh, indent=2, sort_keys=True,
        )
    print(f"wrote {csv_path}, {schema_path}, {truth_path}")
    return 0


def _cmd_report(args):
    from .pipeline import report

    paths = report(args.out)
    print(f"wrote {len(paths)} report artifacts under {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "cluster": _cmd_cluster,
        "select": _cmd_select,
        "synth": _cmd_synth,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
