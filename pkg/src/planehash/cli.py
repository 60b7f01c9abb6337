"""Command-line entry point.

Subcommands: gen, ingest, bench-collision, rho-curve, train-lbh,
build-index, query, run-al, replay. Every command takes --out (output
directory), most take --seed and --config (a JSON file whose keys match
the command's long flag names; explicit flags win). Each run writes its
delimited outputs plus a manifest.json capturing the resolved parameters;
`replay manifest.json --out DIR` re-executes the run bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .active import ALConfig, SelectorConfig, run_al_experiment
from .datasets import gen_synthetic, normalize_rows, read_dataset, write_dataset
from .errors import InvalidConfigurationError, InvalidParametersError, PlanehashError
from .evaluation import brute_force_search, evaluate_scheme
from .families import estimate_collision, collision_prob, lsh_params, random_family
from .geometry import hyperplane_angles
from .index import HammingIndex, theoretical_table_plan
from .learning import (
    LearnedHashFamily,
    OptConfig,
    learn_family,
    sample_training_set,
    select_thresholds,
)

DEFAULT_ALPHAS = "0,pi/8,pi/4,3pi/8,pi/2"


def _seed_for(base: int, *tags: str) -> int:
    entropy = [base] + [int.from_bytes(tag.encode(), "little") % (2**32) for tag in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _parse_angle(token: str) -> float:
    token = token.strip().replace(" ", "")
    if "pi" in token:
        num, _, den = token.partition("pi")
        value = math.pi
        if num and num != "+":
            value *= float(num) if num != "-" else -1.0
        if den.startswith("/"):
            value /= float(den[1:])
        elif den:
            raise InvalidParametersError(f"cannot parse angle {token!r}")
        return value
    return float(token)


def _as_list(value, conv):
    if value is None:
        return None
    if isinstance(value, str):
        return [conv(tok) for tok in value.split(",") if tok.strip() != ""]
    return [conv(tok) for tok in value]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(row[col]) for col in header))
    _write_text(path, "\n".join(lines) + "\n")


def _write_manifest(outdir: str, command: str, params: dict, outputs: list) -> None:
    payload = {
        "format": "planehash-manifest",
        "version": 1,
        "tool_version": __version__,
        "command": command,
        "params": params,
        "outputs": outputs,
    }
    _write_text(
        os.path.join(outdir, "manifest.json"),
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )


def _load_data(params: dict):
    data = read_dataset(params["data"], params.get("format", "csv"))
    features = data.features
    if params.get("normalize"):
        features = normalize_rows(features)
    return features, data.labels


# ---------------------------------------------------------------- commands


def run_gen(params: dict, outdir: str) -> list:
    dataset = gen_synthetic(
        kind=params["kind"],
        n=params["n"],
        dim=params["dim"],
        classes=params.get("classes", 2),
        seed=params.get("seed", 0),
        normalize=params.get("normalize", False),
        blob_spread=params.get("blob_spread", 4.0),
        gap=params.get("gap", 0.3),
    )
    fmt = params.get("format", "csv")
    name = "dataset.csv" if fmt == "csv" else "dataset.bin"
    write_dataset(dataset, os.path.join(outdir, name), fmt)
    print(f"wrote {name}: n={dataset.n} d={dataset.dim} labels={dataset.labels is not None}")
    return [name]


def run_ingest(params: dict, outdir: str) -> list:
    data = read_dataset(params["data"], params.get("format", "csv"))
    norms = np.linalg.norm(data.features, axis=1)
    summary = {
        "n": data.n,
        "d": data.dim,
        "has_labels": data.labels is not None,
        "norm_min": float(norms.min()) if data.n else 0.0,
        "norm_max": float(norms.max()) if data.n else 0.0,
        "classes": sorted(np.unique(data.labels).tolist()) if data.labels is not None else [],
    }
    outputs = ["summary.json"]
    _write_text(
        os.path.join(outdir, "summary.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    convert = params.get("convert")
    if convert:
        name = "dataset.csv" if convert == "csv" else "dataset.bin"
        write_dataset(data, os.path.join(outdir, name), convert)
        outputs.append(name)
    print(f"ingested n={data.n} d={data.dim} labels={summary['has_labels']}")
    return outputs


def run_bench_collision(params: dict, outdir: str) -> list:
    families = params.get("families", ["ah", "eh", "bh"])
    alphas = params["alphas"]
    trials = params.get("trials", 100000)
    seed = params.get("seed", 0)
    dim = params.get("dim", 8)
    rows = []
    for fi, family in enumerate(families):
        for ai, alpha in enumerate(alphas):
            analytic = collision_prob(family, alpha)
            empirical = estimate_collision(
                family, alpha, trials, _seed_for(seed, f"{family}:{ai}"), dim=dim
            )
            rows.append(
                {
                    "family": family,
                    "alpha": float(alpha),
                    "analytic_p": analytic,
                    "empirical_p": empirical,
                    "trials": trials,
                    "abs_error": abs(analytic - empirical),
                }
            )
            print(
                f"{family} alpha={alpha:.4f} analytic={analytic:.4f} "
                f"empirical={empirical:.4f} err={abs(analytic - empirical):.4f}"
            )
    header = ["family", "alpha", "analytic_p", "empirical_p", "trials", "abs_error"]
    _write_csv(os.path.join(outdir, "collision.csv"), header, rows)
    outputs = ["collision.csv"]
    if not params.get("no_plots"):
        from .plots import collision_figure

        collision_figure(rows, os.path.join(outdir, "collision.png"))
        outputs.append("collision.png")
    return outputs


def run_rho_curve(params: dict, outdir: str) -> list:
    families = params.get("families", ["ah", "eh", "bh"])
    epsilon = params.get("epsilon", 3.0)
    r_values = params.get("r_values") or np.linspace(
        params.get("r_min", 0.02), params.get("r_max", 1.0), params.get("r_steps", 50)
    ).tolist()
    n = params.get("n", 1000000)
    c = params.get("c", 2.0)
    rows = []
    for family in families:
        for r in r_values:
            row = {
                "family": family,
                "r": float(r),
                "epsilon": epsilon,
                "p1": None,
                "p2": None,
                "rho": None,
                "k_bits": None,
                "num_tables": None,
                "success_eps_reading": None,
                "success_e_reading": None,
                "valid": False,
            }
            try:
                lp = lsh_params(family, float(r), epsilon, n, c)
                plan = theoretical_table_plan(lp)
                row.update(
                    p1=lp.p1,
                    p2=lp.p2,
                    rho=lp.rho,
                    k_bits=lp.k_bits,
                    num_tables=lp.num_tables,
                    success_eps_reading=plan.success_prob_eps_reading,
                    success_e_reading=plan.success_prob_e_reading,
                    valid=True,
                )
            except InvalidParametersError:
                pass
            rows.append(row)
    header = [
        "family",
        "r",
        "epsilon",
        "p1",
        "p2",
        "rho",
        "k_bits",
        "num_tables",
        "success_eps_reading",
        "success_e_reading",
        "valid",
    ]
    _write_csv(os.path.join(outdir, "rho.csv"), header, rows)
    valid_count = sum(1 for row in rows if row["valid"])
    print(f"rho grid: {valid_count}/{len(rows)} valid points")
    outputs = ["rho.csv"]
    if not params.get("no_plots"):
        from .plots import rho_figure

        rho_figure(rows, os.path.join(outdir, "rho.png"))
        outputs.append("rho.png")
    return outputs


def run_train_lbh(params: dict, outdir: str) -> list:
    features, _ = _load_data(params)
    k = params.get("k", 16)
    m = min(params.get("sample_size", 500), features.shape[0])
    seed = params.get("seed", 0)
    _, samples = sample_training_set(features, m, _seed_for(seed, "sample"))
    t1, t2 = select_thresholds(samples, features, params.get("fraction", 0.05))
    config = OptConfig(
        max_iters=params.get("max_iters", 500), scale=params.get("scale", 1.0)
    )
    family = learn_family(samples, k, t1, t2, _seed_for(seed, "learn"), config)
    family.save(os.path.join(outdir, "family.json"))
    meta = family.training_meta
    print(
        f"trained k={k} m={m} t1={t1:.4f} t2={t2:.4f} "
        f"objective {meta['objective_before']:.2f} -> {meta['objective_after']:.2f}"
    )
    return ["family.json"]


def run_build_index(params: dict, outdir: str) -> list:
    features, _ = _load_data(params)
    scheme = params["scheme"]
    if scheme == "lbh":
        if not params.get("family"):
            raise InvalidConfigurationError("scheme lbh requires --family (train-lbh output)")
        families = [LearnedHashFamily.load(params["family"])]
        index = HammingIndex.build(features, families)
    else:
        index = HammingIndex.build_random(
            features,
            scheme,
            params.get("k", 16),
            params.get("tables", 1),
            params.get("seed", 0),
        )
    index.save(os.path.join(outdir, "index.json"))
    print(f"built {scheme} index: n={index.n} k={index.k} tables={index.num_tables}")
    return ["index.json"]


def run_query(params: dict, outdir: str) -> list:
    index = HammingIndex.load(params["index"])
    features, _ = _load_data(params)
    queries = read_dataset(params["queries"], params.get("queries_format", "csv")).features
    radius = params.get("radius", 3)
    top_n = params.get("top_n", 10)
    outputs = ["results.csv"]
    if params.get("oracle", True):
        report = evaluate_scheme(index, queries, features, radius, top_n)
        header = [
            "query",
            "scheme",
            "radius",
            "best_id",
            "best_margin",
            "best_angle",
            "oracle_best_id",
            "oracle_margin",
            "oracle_angle",
            "recall_at_n",
            "buckets_probed",
            "fallback",
        ]
        _write_csv(os.path.join(outdir, "results.csv"), header, report.query_rows)
        print(
            f"{report.n_queries} queries: recall@{top_n}={report.recall_at_n:.3f} "
            f"mean margin={report.mean_returned_margin:.4f} "
            f"empty rate={report.empty_rate:.3f}"
        )
    else:
        rows = []
        for qi, w in enumerate(queries):
            res = index.query_hyperplane(w, radius, features)
            angle = (
                float(hyperplane_angles(w, features[res.best_id][None, :])[0])
                if res.best_id is not None
                else float("nan")
            )
            rows.append(
                {
                    "query": qi,
                    "scheme": index.scheme,
                    "radius": radius,
                    "best_id": res.best_id,
                    "best_margin": res.best_margin,
                    "best_angle": angle,
                    "n_candidates": len(res.candidate_ids),
                    "buckets_probed": res.buckets_probed,
                    "fallback": res.fallback_used,
                }
            )
        header = [
            "query",
            "scheme",
            "radius",
            "best_id",
            "best_margin",
            "best_angle",
            "n_candidates",
            "buckets_probed",
            "fallback",
        ]
        _write_csv(os.path.join(outdir, "results.csv"), header, rows)
        print(f"{len(rows)} queries answered")
    return outputs


def run_run_al(params: dict, outdir: str) -> list:
    features, labels = _load_data(params)
    if labels is None:
        raise InvalidConfigurationError("run-al needs a labeled dataset")
    selector = SelectorConfig(
        kind=params.get("selector", "exhaustive"),
        k=params.get("k", 16),
        radius=params.get("radius", 3),
        num_tables=params.get("tables", 1),
        train_sample_size=params.get("sample_size", 500),
        threshold_fraction=params.get("fraction", 0.05),
        opt=OptConfig(max_iters=params.get("max_iters", 500), scale=params.get("scale", 1.0)),
    )
    seeds = params.get("seeds", [0])
    arm_classes = params.get("arm_classes")
    rows = []
    for seed in seeds:
        config = ALConfig(
            selector=selector,
            iterations=params.get("iterations", 100),
            initial_per_class=params.get("initial_per_class", 5),
            reg=params.get("reg", 1e-4),
            epochs=params.get("epochs", 20),
            seed=seed,
            test_fraction=params.get("test_fraction", 0.2),
            arm_classes=tuple(arm_classes) if arm_classes else None,
        )
        for row in run_al_experiment(features, labels, config):
            rows.append({"seed": seed, **row})
    header = [
        "seed",
        "class",
        "iteration",
        "n_labeled",
        "ap",
        "selected_margin",
        "nonempty",
        "test_accuracy",
        "selected_id",
    ]
    _write_csv(os.path.join(outdir, "al_history.csv"), header, rows)
    finite_ap = [row["ap"] for row in rows if math.isfinite(row["ap"])]
    print(
        f"AL history: {len(rows)} rows, mean AP={np.mean(finite_ap):.4f}, "
        f"nonempty rate={np.mean([row['nonempty'] for row in rows]):.3f}"
    )
    outputs = ["al_history.csv"]
    if not params.get("no_plots"):
        from .plots import al_figure

        al_figure(rows, os.path.join(outdir, "al_curves.png"))
        outputs.append("al_curves.png")
    return outputs


COMMANDS = {
    "gen": run_gen,
    "ingest": run_ingest,
    "bench-collision": run_bench_collision,
    "rho-curve": run_rho_curve,
    "train-lbh": run_train_lbh,
    "build-index": run_build_index,
    "query": run_query,
    "run-al": run_run_al,
}


# ---------------------------------------------------------------- parsing


def _build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="planehash",
        description="Point-to-hyperplane hashing: hash families, indexes, and active learning.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    def sub(name, **kwargs):
        p = subs.add_parser(name, **kwargs)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="JSON config file (flags override it)")
        by_name[name] = p
        return p

    p = sub("gen", help="generate a synthetic dataset")
    p.add_argument("--kind", default="gaussian_blobs",
                   choices=["gaussian_blobs", "unit_sphere", "two_class_separable"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--blob-spread", dest="blob_spread", type=float, default=4.0)
    p.add_argument("--gap", type=float, default=0.3)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])

    p = sub("ingest", help="validate a dataset file and summarize it")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--convert", choices=["csv", "binary"])

    p = sub("bench-collision", help="Monte-Carlo vs analytic collision probabilities")
    p.add_argument("--families", default="ah,eh,bh")
    p.add_argument("--alphas", default=DEFAULT_ALPHAS,
                   help="comma list; accepts tokens like pi/8, 3pi/8")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--no-plots", dest="no_plots", action="store_true")

    p = sub("rho-curve", help="query-time exponent across a radius grid")
    p.add_argument("--families", default="ah,eh,bh")
    p.add_argument("--epsilon", type=float, default=3.0)
    p.add_argument("--r-min", dest="r_min", type=float, default=0.02)
    p.add_argument("--r-max", dest="r_max", type=float, default=1.0)
    p.add_argument("--r-steps", dest="r_steps", type=int, default=50)
    p.add_argument("--n", type=int, default=1000000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--no-plots", dest="no_plots", action="store_true")

    p = sub("train-lbh", help="learn a bilinear hash family from data")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--sample-size", dest="sample_size", type=int, default=500)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", default="auto", help='surrogate argument scale; "auto" or a float')
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--normalize", action="store_true")

    p = sub("build-index", help="hash every point and build the lookup table(s)")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--scheme", required=True, choices=["ah", "eh", "bh", "lbh"])
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--tables", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", help="family.json from train-lbh (lbh only)")
    p.add_argument("--normalize", action="store_true")

    p = sub("query", help="answer hyperplane queries against a built index")
    p.add_argument("--index", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--queries", required=True, help="dataset-format file of normals")
    p.add_argument("--queries-format", dest="queries_format", default="csv",
                   choices=["csv", "binary"])
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--top-n", dest="top_n", type=int, default=10)
    p.add_argument("--no-oracle", dest="oracle", action="store_false")
    p.add_argument("--normalize", action="store_true")

    p = sub("run-al", help="margin-based active learning benchmark")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--selector", default="exhaustive",
                   choices=["exhaustive", "random", "ah", "eh", "bh", "lbh"])
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--tables", type=int, default=1)
    p.add_argument("--sample-size", dest="sample_size", type=int, default=500)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.add_argument("--scale", default="auto", help='surrogate argument scale; "auto" or a float')
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--initial-per-class", dest="initial_per_class", type=int, default=5)
    p.add_argument("--reg", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.2)
    p.add_argument("--seeds", default="0")
    p.add_argument("--arm-classes", dest="arm_classes", default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--no-plots", dest="no_plots", action="store_true")

    p = subs.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    by_name["replay"] = p
    return parser, by_name


def _params_from_args(command: str, args: argparse.Namespace) -> dict:
    params = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "out", "config") and value is not None
    }
    if command == "bench-collision":
        params["families"] = _as_list(params.get("families"), str)
        params["alphas"] = _as_list(params.get("alphas"), _parse_angle)
    elif command == "rho-curve":
        params["families"] = _as_list(params.get("families"), str)
    elif command == "run-al":
        params["seeds"] = _as_list(params.get("seeds", "0"), int)
        if params.get("arm_classes") is not None:
            params["arm_classes"] = _as_list(params["arm_classes"], int)
    return params


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = _build_parser()

    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--config")
    known, _ = peek.parse_known_args(argv)
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    if known.config and command in by_name and command != "replay":
        with open(known.config) as fh:
            overrides = json.load(fh)
        allowed = {
            action.dest for action in by_name[command]._actions
        } - {"help", "config", "out"}
        unknown = set(overrides) - allowed
        if unknown:
            raise InvalidConfigurationError(
                f"unknown config keys for {command}: {sorted(unknown)}"
            )
        by_name[command].set_defaults(**overrides)

    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)

    try:
        if args.command == "replay":
            with open(args.manifest) as fh:
                manifest = json.load(fh)
            command = manifest["command"]
            params = manifest["params"]
            outputs = COMMANDS[command](params, args.out)
            _write_manifest(args.out, command, params, outputs)
        else:
            params = _params_from_args(args.command, args)
            outputs = COMMANDS[args.command](params, args.out)
            _write_manifest(args.out, args.command, params, outputs)
    except PlanehashError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
