"""End-to-end experiment driver.

One run sweeps {selector x aggregator x threshold x clustering mode} under
5x5 stratified cross-validation.  Per training fold: impute and normalize
with fold statistics, generate probes, run the bootstrap ensemble of each
selector once, derive every (aggregator, threshold) subset from that shared
collection, and score each subset with a ridge survival model on the test
fold.  Per configuration: 25 subsets + 25 C-indices -> stability, mean
C-index and distance from the origin.  When clustering is on, the feature
space is first reduced to one representative per correlated cluster,
computed once on the whole imputed dataset, and the reduced columns are
re-extracted from the raw unimputed data.

Outputs: append-only results.jsonl, summary.csv, threshold_summary.csv,
best_configs.csv, consensus.json, report.md and per-selector SVG scatters.
All CSV output is byte-deterministic for a fixed config and master seed.
"""

import csv
import hashlib
import json
import os
import traceback
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import (
    agglomerate_complete,
    dynamic_tree_cut,
    feature_distance_matrix,
    pick_representatives,
    spearman_matrix,
)
from .cox import concordance_index, fit_ridge_cox_cv
from .data import (
    SurvivalDataset,
    default_probe_count,
    impute,
    load_csv,
    load_schema,
    make_cv_plan,
    make_probes,
    normalize,
)
from .ensemble import (
    AGGREGATORS,
    THRESHOLDS,
    EnsembleConfig,
    apply_threshold,
    collect_bootstrap_runs,
    summarize_runs,
)
from .errors import ConfigError, DataError
from .seeding import ROLE_ENSEMBLE, ROLE_PROBES, child_seed
from .selectors import SELECTOR_IDS, is_sparse, run_selector, univariate_newton_many
from .stability import consensus_features, evaluate_configuration

MODE_CODES = {"raw": 0, "clust": 1}
INDIVIDUAL = "INDIVIDUAL"


@dataclass
class RunConfig:
    """Sweep definition; serializable to/from JSON."""

    out_dir: str
    dataset_path: str = None
    schema_path: str = None
    selectors: list = field(default_factory=lambda: ["UNI"])
    aggregators: list = field(default_factory=lambda: list(AGGREGATORS))
    thresholds: list = field(default_factory=lambda: list(THRESHOLDS))
    clustering: str = "off"  # off | on | both
    cluster_tau: float = 0.99
    cluster_min_size: int = 3
    cluster_gap: float = 0.7
    cluster_distance_variant: str = "rows"
    n_bootstraps: int = 50
    probe_count: int = 0  # 0 = max(10, ceil(0.1 p))
    include_individual: bool = True
    master_seed: int = 0
    threads: int = 1

    def selector_specs(self):
        specs = []
        for s in self.selectors:
            if isinstance(s, str):
                specs.append((s, {}))
            else:
                specs.append((s["id"], dict(s.get("params", {}))))
        return specs

    def validate(self):
        for sid, _ in self.selector_specs():
            if sid not in SELECTOR_IDS:
                raise ConfigError(f"unknown selector id {sid!r}")
        for a in self.aggregators:
            if a not in AGGREGATORS:
                raise ConfigError(f"unknown aggregator {a!r}")
        for t in self.thresholds:
            if t not in THRESHOLDS:
                raise ConfigError(f"unknown threshold {t!r}")
        if self.clustering not in ("off", "on", "both"):
            raise ConfigError(f"clustering must be off/on/both, got {self.clustering!r}")
        if not self.selectors or not self.aggregators or not self.thresholds:
            raise ConfigError("sweep lists must be nonempty")
        if self.n_bootstraps < 2:
            raise ConfigError("n_bootstraps must be >= 2")

    def modes(self):
        return {"off": ["raw"], "on": ["clust"], "both": ["raw", "clust"]}[self.clustering]

    def to_dict(self):
        return {
            "out_dir": self.out_dir,
            "dataset_path": self.dataset_path,
            "schema_path": self.schema_path,
            "selectors": self.selectors,
            "aggregators": list(self.aggregators),
            "thresholds": list(self.thresholds),
            "clustering": self.clustering,
            "cluster_tau": self.cluster_tau,
            "cluster_min_size": self.cluster_min_size,
            "cluster_gap": self.cluster_gap,
            "cluster_distance_variant": self.cluster_distance_variant,
            "n_bootstraps": self.n_bootstraps,
            "probe_count": self.probe_count,
            "include_individual": self.include_individual,
            "master_seed": self.master_seed,
        }


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        raw = json.load(fh)
    known = set(RunConfig.__dataclass_fields__)
    extra = set(raw) - known - {"threads"}
    if extra:
        raise ConfigError(f"unknown run-config keys: {sorted(extra)}")
    if "out_dir" not in raw:
        raise ConfigError("run config needs an out_dir")
    cfg = RunConfig(**raw)
    cfg.validate()
    return cfg


def config_id(mode, selector, aggregator, threshold):
    return f"{mode}|{selector}|{aggregator}|{threshold}"


# ---------------------------------------------------------------------------
# clustering pre-step
# ---------------------------------------------------------------------------


def cluster_features(raw: SurvivalDataset, tau, min_size, variant="rows", gap=0.7):
    """Whole-data clustering pass: representatives of correlated clusters.

    Imputation runs on the full data (statistics from all rows), the
    dendrogram and cut operate on the imputed values, univariate scores
    pick the representatives, and the caller re-extracts the chosen columns
    from the raw unimputed dataset.

    Returns (representative names, dendrogram, assignment, uni scores).
    """
    imputed, _ = impute(raw)
    normalized, _ = normalize(imputed)
    corr, _ = spearman_matrix(imputed.features)
    dist = feature_distance_matrix(corr, variant)
    dendro = agglomerate_complete(dist)
    assignment = dynamic_tree_cut(dendro, min_size=min_size, tau=tau, gap=gap)
    beta, degen = univariate_newton_many(normalized.features, normalized.outcome)
    scores = np.empty(raw.p)
    for j in range(raw.p):
        if degen[j] and beta[j] == 0.0:
            scores[j] = 0.5
        else:
            scores[j] = concordance_index(
                beta[j] * normalized.features[:, j], normalized.outcome
            )
    assignment = pick_representatives(assignment, scores, raw.feature_names)
    rep_idx = sorted(assignment.representatives.values())
    rep_names = [raw.feature_names[j] for j in rep_idx]
    return rep_names, dendro, assignment, scores


# ---------------------------------------------------------------------------
# per-fold work
# ---------------------------------------------------------------------------


def _prepare_fold(base, plan, repeat, fold):
    train_idx, test_idx = plan.train_test(repeat, fold + 1)
    train = base.rows(train_idx)
    test = base.rows(test_idx)
    train_imp, imp_stats = impute(train)
    test_imp, _ = impute(test, imp_stats)
    train_norm, norm_stats = normalize(train_imp)
    test_norm, _ = normalize(test_imp, norm_stats)
    cand = [
        nm
        for nm, const in zip(base.feature_names, norm_stats.constant)
        if not const
    ]
    return train_norm.restrict(cand), test_norm, test.outcome


def _subset_from_individual(run, p_real):
    order = np.argsort(-run.scores[:p_real], kind="stable")
    return [run.names[i] for i in order if run.selected[i]]


def _fold_task(base, plan, cfg, mode, repeat, fold):
    """All configurations for one (mode, repeat, fold); returns records."""
    records = []
    failures = []
    train_sel, test_norm, test_outcome = _prepare_fold(base, plan, repeat, fold)
    p_real = train_sel.p
    mode_code = MODE_CODES[mode]
    fold_seed = child_seed(cfg.master_seed, mode_code, repeat, fold)
    q = cfg.probe_count or default_probe_count(p_real)
    probes = make_probes(train_sel, q, child_seed(fold_seed, ROLE_PROBES))

    eval_cache = {}

    def evaluate_subset(subset):
        key = frozenset(subset)
        if key not in eval_cache:
            X_train = train_sel.restrict(subset).features if subset else np.zeros((train_sel.n, 0))
            model = fit_ridge_cox_cv(X_train, train_sel.outcome, tuple(subset))
            X_test = test_norm.restrict(subset).features if subset else np.zeros((test_norm.n, 0))
            risk = model.predict_risk(X_test)
            eval_cache[key] = concordance_index(risk, test_outcome)
        return eval_cache[key]

    def emit(cid, selector, aggregator, threshold, individual, subset, value):
        cindex = evaluate_subset(subset)
        records.append(
            {
                "config_id": cid,
                "selector": selector,
                "aggregator": aggregator,
                "threshold": threshold,
                "clustering": mode,
                "individual": individual,
                "repeat": repeat,
                "fold": fold,
                "subset": list(subset),
                "subset_size": len(subset),
                "threshold_value": None if value is None else float(value),
                "cindex": float(cindex),
            }
        )

    for s_idx, (selector, params) in enumerate(cfg.selector_specs()):
        ens_seed = child_seed(fold_seed, ROLE_ENSEMBLE, s_idx)
        try:
            runs = collect_bootstrap_runs(
                train_sel, probes, selector, params, cfg.n_bootstraps, ens_seed
            )
        except Exception:
            for aggregator in cfg.aggregators:
                for threshold in cfg.thresholds:
                    failures.append(
                        (config_id(mode, selector, aggregator, threshold),
                         traceback.format_exc(limit=2))
                    )
            continue
        for aggregator in cfg.aggregators:
            stats = summarize_runs(runs, aggregator, p_real)
            for threshold in cfg.thresholds:
                cid = config_id(mode, selector, aggregator, threshold)
                try:
                    subset, value, _ = apply_threshold(stats, threshold, p_real)
                    emit(cid, selector, aggregator, threshold, False, subset, value)
                except Exception:
                    failures.append((cid, traceback.format_exc(limit=2)))

        if not cfg.include_individual:
            continue
        ind_seed = child_seed(fold_seed, ROLE_ENSEMBLE, s_idx, 10_000)
        try:
            run = run_selector(selector, train_sel, probes, params, ind_seed)
            if is_sparse(selector):
                cid = config_id(mode, selector, INDIVIDUAL, "NONE")
                subset = _subset_from_individual(run, p_real)
                emit(cid, selector, INDIVIDUAL, "NONE", True, subset, None)
            else:
                stats = summarize_runs([run], "MEAN_SCORE", p_real)
                for threshold in cfg.thresholds:
                    cid = config_id(mode, selector, INDIVIDUAL, threshold)
                    subset, value, _ = apply_threshold(stats, threshold, p_real)
                    emit(cid, selector, INDIVIDUAL, threshold, True, subset, value)
        except Exception:
            failures.append(
                (config_id(mode, selector, INDIVIDUAL, "*"),
                 traceback.format_exc(limit=2))
            )
    return records, failures


# ---------------------------------------------------------------------------
# run driver
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    out_dir: str
    n_configs: int
    n_records: int
    n_failures: int
    paths: dict


def _config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(x) -> str:
    return repr(float(x))


def run_experiment(cfg: RunConfig, dataset: SurvivalDataset = None) -> RunResult:
    """Execute the sweep; returns output locations and failure count."""
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    if dataset is None:
        if not cfg.dataset_path or not cfg.schema_path:
            raise ConfigError("run config needs dataset_path and schema_path")
        dataset = load_csv(cfg.dataset_path, load_schema(cfg.schema_path))

    plan = make_cv_plan(dataset, cfg.master_seed)
    bases = {}
    cluster_meta = {}
    for mode in cfg.modes():
        if mode == "raw":
            bases[mode] = dataset
        else:
            rep_names, _, assignment, _ = cluster_features(
                dataset, cfg.cluster_tau, cfg.cluster_min_size,
                cfg.cluster_distance_variant, cfg.cluster_gap,
            )
            bases[mode] = dataset.restrict(rep_names)
            cluster_meta = {
                "n_clusters": assignment.n_clusters,
                "promoted_singletons": int(assignment.promoted.sum()),
                "representatives": rep_names,
            }

    # resume: skip fold tasks already present in a matching results file
    run_hash = _config_hash(cfg)
    results_path = os.path.join(cfg.out_dir, "results.jsonl")
    meta_path = os.path.join(cfg.out_dir, "run_meta.json")
    existing = []
    done_tasks = set()
    if os.path.exists(results_path) and os.path.exists(meta_path):
        with open(meta_path) as fh:
            old_meta = json.load(fh)
        if old_meta.get("config_hash") == run_hash:
            with open(results_path) as fh:
                existing = [json.loads(line) for line in fh if line.strip()]
            done_tasks = {
                (r["clustering"], r["repeat"], r["fold"]) for r in existing
            }
        else:
            os.remove(results_path)

    tasks = [
        (mode, repeat, fold)
        for mode in cfg.modes()
        for repeat in range(plan.repeats)
        for fold in range(plan.folds)
        if (mode, repeat, fold) not in done_tasks
    ]
    all_records = list(existing)
    failures = []
    with open(results_path, "a") as sink:
        def finish(result):
            records, fails = result
            for r in records:
                sink.write(json.dumps(r, sort_keys=True) + "\n")
            sink.flush()
            all_records.extend(records)
            failures.extend(fails)

        if cfg.threads > 1 and tasks:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                futures = [
                    pool.submit(_fold_task, bases[m], plan, cfg, m, r, f)
                    for (m, r, f) in tasks
                ]
                for fut in futures:
                    finish(fut.result())
        else:
            for m, r, f in tasks:
                finish(_fold_task(bases[m], plan, cfg, m, r, f))

    # configuration-level evaluation
    by_config = {}
    for rec in all_records:
        by_config.setdefault(rec["config_id"], []).append(rec)
    points = []
    config_subsets = {}
    expected = plan.repeats * plan.folds
    for cid in sorted(by_config):
        recs = sorted(by_config[cid], key=lambda r: (r["repeat"], r["fold"]))
        if len(recs) != expected:
            failures.append((cid, f"incomplete: {len(recs)}/{expected} folds"))
            continue
        universe = bases[recs[0]["clustering"]].p
        subsets = [r["subset"] for r in recs]
        cindices = [r["cindex"] for r in recs]
        try:
            point = evaluate_configuration(cid, subsets, cindices, universe)
        except DataError as exc:
            failures.append((cid, str(exc)))
            continue
        point.extra.update(
            selector=recs[0]["selector"],
            aggregator=recs[0]["aggregator"],
            threshold=recs[0]["threshold"],
            clustering=recs[0]["clustering"],
            individual=recs[0]["individual"],
        )
        points.append(point)
        config_subsets[cid] = [frozenset(s) for s in subsets]

    paths = _write_outputs(cfg, points, config_subsets, cluster_meta, failures,
                           run_hash)
    return RunResult(cfg.out_dir, len(points), len(all_records), len(failures), paths)


def _write_outputs(cfg, points, config_subsets, cluster_meta, failures, run_hash):
    paths = {}

    summary_path = os.path.join(cfg.out_dir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["config_id", "selector", "aggregator", "threshold", "clustering",
             "stability", "mean_cindex", "distance", "mean_subset_size"]
        )
        for pt in sorted(points, key=lambda p: p.config_id):
            w.writerow(
                [pt.config_id, pt.extra["selector"], pt.extra["aggregator"],
                 pt.extra["threshold"], pt.extra["clustering"],
                 _fmt(pt.stability), _fmt(pt.mean_cindex), _fmt(pt.distance),
                 _fmt(pt.mean_subset_size)]
            )
    paths["summary"] = summary_path

    paths.update(_write_report(cfg.out_dir, points, config_subsets))

    if failures:
        errors_path = os.path.join(cfg.out_dir, "errors.log")
        with open(errors_path, "w") as fh:
            for cid, msg in failures:
                fh.write(f"{cid}: {msg}\n")
        paths["errors"] = errors_path

    meta = {
        "config": cfg.to_dict(),
        "config_hash": run_hash,
        "clustering": cluster_meta,
        "n_points": len(points),
        "n_failures": len(failures),
        "notes": FIDELITY_NOTES,
    }
    meta_path = os.path.join(cfg.out_dir, "run_meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    paths["meta"] = meta_path
    return paths


FIDELITY_NOTES = {
    "imputation": "single median/mode imputation inside the CV loop "
    "(chained-equation multiple imputation intentionally not used)",
    "sd_convention": "sample standard deviation (ddof=1)",
    "ties": "Breslow tie handling in all partial likelihoods; Harrell "
    "C-index with 0.5 for risk ties; tied times incomparable",
    "tree_cut": "simplified height-guided recursive cut, not the full "
    "dynamic tree cut heuristics",
    "rsf_splitting": "log-rank split statistic, not maximally selected "
    "rank statistics",
    "freq_half": "the Threshold rule keeps features selected in >= 50% of "
    "bootstraps (top-half ranks for filters)",
    "lambda_rule": "deviance-minimizing penalty, not one-standard-error",
    "whole_data_clustering": "clustering sees all rows before the CV loop; "
    "fold models only ever train on training rows",
}


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _load_points(results_dir):
    """Rebuild evaluation points and fold subsets from results.jsonl."""
    results_path = os.path.join(results_dir, "results.jsonl")
    if not os.path.exists(results_path):
        raise DataError(f"no results.jsonl under {results_dir}")
    with open(results_path) as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records:
        raise DataError("results file is empty")
    meta_path = os.path.join(results_dir, "run_meta.json")
    universes = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        reps = meta.get("clustering", {}).get("representatives")
        if reps:
            universes["clust"] = len(reps)
    by_config = {}
    for rec in records:
        by_config.setdefault(rec["config_id"], []).append(rec)
    points = []
    config_subsets = {}
    for cid in sorted(by_config):
        recs = sorted(by_config[cid], key=lambda r: (r["repeat"], r["fold"]))
        universe = universes.get(recs[0]["clustering"])
        if universe is None:
            universe = max(
                1, len(set().union(*[frozenset(r["subset"]) for r in recs]))
            )
        point = evaluate_configuration(
            cid, [r["subset"] for r in recs], [r["cindex"] for r in recs], universe
        )
        point.extra.update(
            selector=recs[0]["selector"],
            aggregator=recs[0]["aggregator"],
            threshold=recs[0]["threshold"],
            clustering=recs[0]["clustering"],
            individual=recs[0]["individual"],
        )
        points.append(point)
        config_subsets[cid] = [frozenset(r["subset"]) for r in recs]
    return points, config_subsets


def threshold_summary(points):
    """Mean distance per threshold, split by clustering mode.

    Averages cover every configuration that applied the threshold,
    individual filter runs included.
    """
    table = {}
    for pt in points:
        thr = pt.extra["threshold"]
        if thr == "NONE":
            continue
        cell = table.setdefault(thr, {})
        cell.setdefault(pt.extra["clustering"], []).append(pt.distance)
    out = {}
    for thr, cell in table.items():
        out[thr] = {mode: float(np.mean(vals)) for mode, vals in cell.items()}
    return out


def best_configurations(points):
    """Best ensemble configuration per selector and its gain over the
    individual form (absolute and percent distance delta)."""
    rows = []
    selectors = sorted({pt.extra["selector"] for pt in points})
    for sel in selectors:
        ens = [p for p in points if p.extra["selector"] == sel and not p.extra["individual"]]
        ind = [p for p in points if p.extra["selector"] == sel and p.extra["individual"]]
        if not ens:
            continue
        best = max(ens, key=lambda p: (p.distance, p.config_id))
        row = {"selector": sel, "best_config": best.config_id,
               "best_distance": best.distance}
        if ind:
            base = max(ind, key=lambda p: (p.distance, p.config_id))
            delta = best.distance - base.distance
            row.update(
                individual_config=base.config_id,
                individual_distance=base.distance,
                delta=delta,
                percent=100.0 * delta / base.distance if base.distance else float("nan"),
            )
        rows.append(row)
    return rows


def _plot_scatters(out_dir, points):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "survefs"
    markers = {"MEAN_SCORE": "o", "MEDIAN_RANK": "s", "FREQ": "^", "RRA": "D",
               INDIVIDUAL: "*"}
    palette = plt.get_cmap("tab10")
    colors = {thr: palette(i % 10) for i, thr in enumerate(THRESHOLDS)}
    colors["NONE"] = (0.3, 0.3, 0.3, 1.0)
    paths = {}
    for sel in sorted({pt.extra["selector"] for pt in points}):
        fig, ax = plt.subplots(figsize=(5, 4))
        for pt in points:
            if pt.extra["selector"] != sel:
                continue
            ax.scatter(
                pt.stability,
                pt.mean_cindex,
                marker=markers.get(pt.extra["aggregator"], "x"),
                facecolor=colors.get(pt.extra["threshold"], "k"),
                edgecolor="k" if pt.extra["clustering"] == "clust" else "none",
                s=90 if pt.extra["individual"] else 45,
                linewidths=0.8,
            )
        ax.set_xlabel("stability (relative weighted consistency)")
        ax.set_ylabel("mean C-index")
        ax.set_xlim(-0.02, 1.02)
        ax.set_ylim(0.0, 1.02)
        ax.set_title(sel)
        path = os.path.join(out_dir, f"scatter_{sel}.svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths[f"scatter_{sel}"] = path
    return paths


def _write_report(out_dir, points, config_subsets):
    paths = {}
    thr_table = threshold_summary(points)
    modes_present = sorted({pt.extra["clustering"] for pt in points})

    thr_path = os.path.join(out_dir, "threshold_summary.csv")
    with open(thr_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["threshold"] + [f"mean_distance_{m}" for m in modes_present]
        w.writerow(header)
        for thr in THRESHOLDS:
            if thr not in thr_table:
                continue
            row = [thr]
            for m in modes_present:
                row.append(_fmt(thr_table[thr][m]) if m in thr_table[thr] else "")
            w.writerow(row)
    paths["threshold_summary"] = thr_path

    best_path = os.path.join(out_dir, "best_configs.csv")
    best_rows = best_configurations(points)
    with open(best_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["selector", "best_config", "best_distance",
                    "individual_config", "individual_distance", "delta", "percent"])
        for r in best_rows:
            w.writerow([
                r["selector"], r["best_config"], _fmt(r["best_distance"]),
                r.get("individual_config", ""),
                _fmt(r["individual_distance"]) if "individual_distance" in r else "",
                _fmt(r["delta"]) if "delta" in r else "",
                _fmt(r["percent"]) if "percent" in r else "",
            ])
    paths["best_configs"] = best_path

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        consensus, top_ids, short = consensus_features(points, config_subsets)
    consensus_path = os.path.join(out_dir, "consensus.json")
    with open(consensus_path, "w") as fh:
        json.dump(
            {"features": consensus, "top_configs": top_ids,
             "fewer_than_requested": short},
            fh, indent=2, sort_keys=True,
        )
    paths["consensus"] = consensus_path

    lines = ["# Run report", "", "## Mean distance from origin per threshold", ""]
    lines.append("| threshold | " + " | ".join(modes_present) + " |")
    lines.append("|---" * (1 + len(modes_present)) + "|")
    for thr in THRESHOLDS:
        if thr not in thr_table:
            continue
        cells = [
            f"{thr_table[thr][m]:.4f}" if m in thr_table[thr] else "-"
            for m in modes_present
        ]
        lines.append(f"| {thr} | " + " | ".join(cells) + " |")
    if len(modes_present) == 1:
        lines.append("")
        lines.append(f"(only the {modes_present[0]} mode was run)")
    lines += ["", "## Best configuration per selector", ""]
    for r in best_rows:
        if "delta" in r:
            lines.append(
                f"- {r['selector']}: {r['best_config']} at distance "
                f"{r['best_distance']:.4f}; individual form {r['individual_distance']:.4f} "
                f"(delta {r['delta']:+.4f}, {r['percent']:+.1f}%)"
            )
        else:
            lines.append(
                f"- {r['selector']}: {r['best_config']} at distance "
                f"{r['best_distance']:.4f}; no individual form in this run"
            )
    lines += ["", "## Consensus features (top 10 configurations)", ""]
    lines += [f"- {f}" for f in consensus] or ["- (none)"]
    report_path = os.path.join(out_dir, "report.md")
    with open(report_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    paths["report"] = report_path

    try:
        paths.update(_plot_scatters(out_dir, points))
    except Exception as exc:  # plotting failure downgrades to CSV-only
        warnings.warn(f"SVG emission failed, outputs are CSV-only: {exc}")
    return paths


def report(results_dir) -> dict:
    """Regenerate the summary document from a completed results directory."""
    points, config_subsets = _load_points(results_dir)
    return _write_report(results_dir, points, config_subsets)
