"""Command-line surface: simulate | fit | fit-latent | eval | bench.

Every run writes a manifest JSON holding the fully resolved parameters and
wall-clock timings; re-running the stored argv reproduces the output files
byte for byte.  Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cdcf import CdcfConfig, cdcf
from .graph import CyclicGraphError
from .latent import LatentConfig, OptimizerConfig, cdcf_plus, estimate_noise_std
from .linalg import NonPositiveDefiniteError
from .metrics import best_shd_over_latent_relabeling, confusion_scores
from .simulate import (
    NoiseSpec,
    assign_weights,
    empirical_covariance,
    gen_er,
    gen_sf,
    sample_sem,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

_FLOAT_FMT = "%.17g"  # full double precision round-trip


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")


def _write_matrix(path: Path, arr: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(arr), delimiter=",", fmt=_FLOAT_FMT)


def _read_matrix(path: Path, header: bool = False) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ValueError(f"malformed CSV {path}: {exc}") from exc


def _read_adjacency(path: Path) -> np.ndarray:
    if str(path).endswith(".json"):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return np.asarray(data["adjacency"], dtype=float)
    return _read_matrix(path)


def _manifest(out_dir: Path, command: str, params: dict, inputs: dict,
              outputs: dict, timings_ms: dict, argv: list[str]) -> Path:
    man = {
        "command": command,
        "library_version": __version__,
        "params": params,
        "inputs": inputs,
        "outputs": outputs,
        "timings_ms": timings_ms,
        "argv_resolved": argv,
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    _write_json(path, man)
    return path


def rerun_from_manifest(path, out_dir: str | None = None) -> int:
    """Re-invoke the command recorded in a manifest (optionally redirected)."""
    man = json.loads(Path(path).read_text(encoding="utf-8"))
    argv = list(man["argv_resolved"])
    if out_dir is not None:
        i = argv.index("--out-dir")
        argv[i + 1] = str(out_dir)
    return main(argv)


# ---------------------------------------------------------------- simulate


def _cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    if args.graph == "sf":
        m = int(args.epn)
        if m != args.epn or not (1 <= m < args.p):
            raise SystemExit(_usage(f"--graph sf needs an integer --epn with 1 <= epn < p, got {args.epn}"))
    ss = np.random.SeedSequence(args.seed)
    graph_seed, weight_seed, noise_seed = (int(s) for s in ss.generate_state(3))
    if args.graph == "er":
        dag = gen_er(args.p, args.epn, graph_seed)
    else:
        dag = gen_sf(args.p, int(args.epn), graph_seed)
    dag = assign_weights(dag, args.w_min, args.w_max, weight_seed, positive=args.positive_weights)
    noise = NoiseSpec.equal(args.noise, args.p, args.noise_var)
    X = sample_sem(dag, noise, args.n, noise_seed)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "data.csv"
    truth_path = out / "truth.csv"
    _write_matrix(data_path, X)
    _write_matrix(truth_path, dag.weights)
    params = {
        "graph": args.graph, "p": args.p, "epn": args.epn, "n": args.n,
        "noise": args.noise, "noise_var": args.noise_var,
        "w_min": args.w_min, "w_max": args.w_max,
        "positive_weights": args.positive_weights, "seed": args.seed,
        "stage_seeds": {"graph": graph_seed, "weights": weight_seed, "noise": noise_seed},
    }
    argv = [
        "simulate", "--graph", args.graph, "--p", str(args.p), "--epn", repr(args.epn),
        "--n", str(args.n), "--noise", args.noise, "--noise-var", repr(args.noise_var),
        "--w-min", repr(args.w_min), "--w-max", repr(args.w_max),
        "--seed", str(args.seed), "--out-dir", str(out),
    ]
    if args.positive_weights:
        argv.insert(1, "--positive-weights")
    _manifest(out, "simulate", params, {}, {"data": str(data_path), "truth": str(truth_path)},
              {"total": (time.perf_counter() - t0) * 1e3}, argv)
    print(f"wrote {data_path} ({args.n}x{args.p}) and {truth_path} ({dag.num_edges} edges)")
    return EXIT_OK


# --------------------------------------------------------------------- fit


def _load_covariance(args):
    X = _read_matrix(Path(args.data), header=args.header)
    cov = empirical_covariance(X, gamma=args.gamma, center=args.center)
    return X, cov


def _fit_result_dict(res, n: int) -> dict:
    return {
        "ordering": [int(i) + 1 for i in res.ordering],
        "adjacency": res.adjacency,
        "alphas": res.alphas,
        "p": int(res.adjacency.shape[0]),
        "n": int(n),
    }


def _cmd_fit(args) -> int:
    t0 = time.perf_counter()
    X, cov = _load_covariance(args)
    config = CdcfConfig(criterion=args.criterion, omega=args.omega, threads=args.threads)
    res = cdcf(cov, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = _fit_result_dict(res, X.shape[0])
    result["config"] = {
        "gamma": args.gamma, "center": args.center, "criterion": config.criterion,
        "omega": args.omega, "threads": args.threads,
    }
    result_path = out / "fit.json"
    _write_json(result_path, result)
    argv = ["fit", "--data", str(args.data), "--gamma", repr(args.gamma),
            "--criterion", config.criterion, "--omega", repr(args.omega),
            "--threads", str(args.threads), "--out-dir", str(out)]
    if args.header:
        argv.insert(1, "--header")
    if not args.center:
        argv.insert(1, "--no-center")
    _manifest(out, "fit", result["config"] | {"data": str(args.data), "header": args.header},
              {"data": str(args.data)}, {"result": str(result_path)},
              {"total": (time.perf_counter() - t0) * 1e3, "cdcf": res.runtime_s * 1e3}, argv)
    print(f"wrote {result_path} (p={result['p']}, {int(np.count_nonzero(res.adjacency))} edges)")
    return EXIT_OK


# -------------------------------------------------------------- fit-latent


def _cmd_fit_latent(args) -> int:
    t0 = time.perf_counter()
    X, cov = _load_covariance(args)
    sigma_hat = estimate_noise_std(cov) if args.estimate_sigma else args.sigma
    opt = OptimizerConfig(
        learning_rate=args.lr, decay_factor=args.decay, decay_every=args.decay_every,
        max_steps=args.max_steps, loss_tol=args.loss_tol, s_init=args.s_init,
    )
    config = LatentConfig(
        sigma_hat=sigma_hat, zeta=args.zeta, mu=args.mu, max_latent=args.max_latent,
        optimizer=opt, round_threshold=args.round_threshold,
    )
    cdcf_config = CdcfConfig(criterion=args.criterion, omega=args.omega, threads=args.threads)
    res = cdcf_plus(cov, config, cdcf_config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = {
        "ordering": [int(i) + 1 for i in res.ordering],
        "adjacency": res.adjacency,
        "alphas": res.alphas,
        "p": int(res.adjacency.shape[0]),
        "n": int(X.shape[0]),
        "num_observed": res.num_observed,
        "num_latent": len(res.latent_positions),
        "latent_positions": [p + 1 for p in res.latent_positions],
        "hit_max_latent": res.hit_max_latent,
        "sigma_hat": sigma_hat,
        "traces": [
            {"steps": t.step, "loss_fit": t.loss_fit, "loss_l1": t.loss_l1, "final_lr": t.lr}
            for t in res.traces
        ],
        "config": {
            "gamma": args.gamma, "center": args.center, "criterion": cdcf_config.criterion,
            "omega": args.omega, "zeta": args.zeta, "mu": args.mu,
            "max_latent": args.max_latent, "lr": args.lr, "decay": args.decay,
            "decay_every": args.decay_every, "max_steps": args.max_steps,
            "loss_tol": args.loss_tol, "s_init": args.s_init,
            "round_threshold": args.round_threshold, "threads": args.threads,
        },
    }
    result_path = out / "fit_latent.json"
    _write_json(result_path, result)
    argv = ["fit-latent", "--data", str(args.data), "--gamma", repr(args.gamma),
            "--criterion", cdcf_config.criterion, "--omega", repr(args.omega),
            "--zeta", repr(args.zeta), "--mu", repr(args.mu),
            "--max-latent", str(args.max_latent), "--lr", repr(args.lr),
            "--decay", repr(args.decay), "--decay-every", str(args.decay_every),
            "--max-steps", str(args.max_steps), "--loss-tol", repr(args.loss_tol),
            "--s-init", repr(args.s_init), "--round-threshold", repr(args.round_threshold),
            "--threads", str(args.threads), "--out-dir", str(out)]
    if args.estimate_sigma:
        argv.insert(1, "--estimate-sigma")
    else:
        argv[1:1] = ["--sigma", repr(args.sigma)]
    if args.header:
        argv.insert(1, "--header")
    if not args.center:
        argv.insert(1, "--no-center")
    _manifest(out, "fit-latent", result["config"] | {"data": str(args.data), "sigma_hat": sigma_hat},
              {"data": str(args.data)}, {"result": str(result_path)},
              {"total": (time.perf_counter() - t0) * 1e3}, argv)
    print(f"wrote {result_path} ({result['num_latent']} latent variable(s) found)")
    return EXIT_OK


# -------------------------------------------------------------------- eval


def _cmd_eval(args) -> int:
    t0 = time.perf_counter()
    pred = _read_adjacency(Path(args.pred))
    truth = _read_adjacency(Path(args.truth))
    if pred.shape != truth.shape and not args.latent_relabel:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    scores = None
    report: dict = {}
    if pred.shape == truth.shape:
        scores = confusion_scores(pred, truth)
        report.update(scores.as_dict())
    if args.latent_relabel:
        if args.n_observed is None:
            raise SystemExit(_usage("--latent-relabel requires --n-observed"))
        n_obs = args.n_observed
        report["best_relabel_shd"] = best_shd_over_latent_relabeling(
            pred, truth,
            latent_pred=range(n_obs, pred.shape[0]),
            latent_true=range(n_obs, truth.shape[0]),
        )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result_path = out / "eval.json"
    _write_json(result_path, report)
    argv = ["eval", "--pred", str(args.pred), "--truth", str(args.truth),
            "--out-dir", str(out)]
    if args.latent_relabel:
        argv[1:1] = ["--latent-relabel", "--n-observed", str(args.n_observed)]
    _manifest(out, "eval", {"latent_relabel": args.latent_relabel, "n_observed": args.n_observed},
              {"pred": str(args.pred), "truth": str(args.truth)}, {"result": str(result_path)},
              {"total": (time.perf_counter() - t0) * 1e3}, argv)
    width = max(len(k) for k in report)
    for key, val in report.items():
        if isinstance(val, float):
            print(f"{key:<{width}}  {val:.4f}")
        else:
            print(f"{key:<{width}}  {val}")
    return EXIT_OK


# ------------------------------------------------------------------- bench


def _cmd_bench(args) -> int:
    t0 = time.perf_counter()
    p_list = [int(tok) for tok in args.p_list.split(",") if tok.strip()]
    if not p_list:
        raise SystemExit(_usage("--p-list must name at least one node count"))
    config = CdcfConfig(criterion=args.criterion, omega=args.omega, threads=args.threads)
    rows = []
    for p in p_list:
        ss = np.random.SeedSequence([args.seed, p])
        graph_seed, weight_seed, noise_seed = (int(s) for s in ss.generate_state(3))
        dag = gen_er(p, args.epn, graph_seed)
        dag = assign_weights(dag, 0.5, 2.0, weight_seed)
        X = sample_sem(dag, NoiseSpec.equal("gaussian", p), args.n, noise_seed)
        cov = empirical_covariance(X, gamma=1.0)  # construction excluded from timing
        times = []
        for _ in range(args.reps):
            t = time.perf_counter()
            cdcf(cov, config)
            times.append((time.perf_counter() - t) * 1e3)
        q25, q50, q75 = np.percentile(times, [25, 50, 75])
        rows.append((p, args.reps, q50, q25, q75))
        print(f"p={p:5d}  median {q50:10.2f} ms  (p25 {q25:.2f}, p75 {q75:.2f})")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "bench.csv"
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("p,reps,median_ms,p25_ms,p75_ms\n")
        for p, reps, q50, q25, q75 in rows:
            f.write(f"{p},{reps},{q50:.6f},{q25:.6f},{q75:.6f}\n")
    slope = None
    if len(rows) >= 2:
        logs = np.log([r[0] for r in rows])
        logt = np.log([max(r[2], 1e-9) for r in rows])
        slope = float(np.polyfit(logs, logt, 1)[0])
        print(f"log-log slope: {slope:.2f}")
    argv = ["bench", "--p-list", args.p_list, "--reps", str(args.reps),
            "--n", str(args.n), "--epn", repr(args.epn), "--criterion", config.criterion,
            "--omega", repr(args.omega), "--threads", str(args.threads),
            "--seed", str(args.seed), "--out-dir", str(out)]
    _manifest(out, "bench",
              {"p_list": p_list, "reps": args.reps, "n": args.n, "epn": args.epn,
               "criterion": config.criterion, "seed": args.seed, "loglog_slope": slope},
              {}, {"timings": str(csv_path)},
              {"total": (time.perf_counter() - t0) * 1e3}, argv)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _usage(message: str) -> int:
    print(f"choldag: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _add_fit_common(sp):
    sp.add_argument("--data", required=True, help="input data CSV (n rows, p columns, no header)")
    sp.add_argument("--header", action="store_true", help="skip one header line in the data CSV")
    sp.add_argument("--gamma", type=float, default=1.0, help="diagonal augmentation factor (lambda = gamma log(p)/n)")
    sp.add_argument("--center", action=argparse.BooleanOptionalAction, default=True,
                    help="subtract column means before the covariance")
    sp.add_argument("--criterion", choices=["v", "s", "vs"], default="v")
    sp.add_argument("--omega", type=float, default=0.3, help="adjacency truncation threshold")
    sp.add_argument("--threads", type=int, default=1, help="threads for the candidate loop (results invariant)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="choldag", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="generate a random DAG and SEM samples")
    sp.add_argument("--graph", choices=["er", "sf"], required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--epn", type=float, required=True, help="average edges per node")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--noise", choices=["gaussian", "gumbel", "exponential"], default="gaussian")
    sp.add_argument("--noise-var", type=float, default=1.0)
    sp.add_argument("--w-min", type=float, default=0.5)
    sp.add_argument("--w-max", type=float, default=2.0)
    sp.add_argument("--positive-weights", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("fit", help="recover a weighted DAG from data")
    _add_fit_common(sp)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("fit-latent", help="recover a DAG allowing latent variables")
    _add_fit_common(sp)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--sigma", type=float, help="noise standard deviation estimate")
    group.add_argument("--estimate-sigma", action="store_true",
                       help="estimate sigma from the smallest observed variance")
    sp.add_argument("--zeta", type=float, default=0.1)
    sp.add_argument("--mu", type=float, default=0.05)
    sp.add_argument("--max-latent", type=int, default=2)
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--decay", type=float, default=0.99)
    sp.add_argument("--decay-every", type=int, default=100)
    sp.add_argument("--max-steps", type=int, default=10000)
    sp.add_argument("--loss-tol", type=float, default=0.005)
    sp.add_argument("--s-init", type=float, default=0.5)
    sp.add_argument("--round-threshold", type=float, default=0.4)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=_cmd_fit_latent)

    sp = sub.add_parser("eval", help="score a predicted adjacency against the truth")
    sp.add_argument("--pred", required=True, help="adjacency CSV or fit result JSON")
    sp.add_argument("--truth", required=True, help="adjacency CSV or fit result JSON")
    sp.add_argument("--latent-relabel", action="store_true",
                    help="also report the best SHD over latent relabelings")
    sp.add_argument("--n-observed", type=int, default=None,
                    help="observed node count; nodes >= this are latent")
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("bench", help="time the factorization across node counts")
    sp.add_argument("--p-list", default="100,200,400,800")
    sp.add_argument("--reps", type=int, default=3)
    sp.add_argument("--n", type=int, default=3000)
    sp.add_argument("--epn", type=float, default=2.0)
    sp.add_argument("--criterion", choices=["v", "s", "vs"], default="v")
    sp.add_argument("--omega", type=float, default=0.3)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except NonPositiveDefiniteError as exc:
        print(
            f"choldag: numerical failure: {exc}\n"
            "hint: increase the diagonal augmentation with --gamma (e.g. --gamma 1.0)",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    except CyclicGraphError as exc:
        print(f"choldag: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, ValueError) as exc:
        print(f"choldag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
