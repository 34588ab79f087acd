"""Command-line front end: dataset generation, fitting, influence reports,
and benchmark tables.

Every output file embeds its configuration: CSV files start with a
``# rkcca-config: {...}`` comment line and JSON files carry a top-level
``config`` key. ``rkcca rerun --file <path>`` re-executes that embedded
configuration, reproducing the file byte for byte. Numeric cells are written
with 12 significant digits so the output bytes do not depend on last-ulp
BLAS scheduling. Exit codes: 0 success, 1 user error, 2 I/O error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench as bench_mod
from .estimators import resolve_kernel
from .influence import influence_report, mad_outlier_flags
from .kcca import CcaModel, fit_robust_kcca, fit_standard_kcca
from .kernels import KernelSpec, gram
from .losses import RobustLoss
from .synth import generate
from .validation import NumericError

CONFIG_PREFIX = "# rkcca-config: "


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _config_line(config: dict) -> str:
    return CONFIG_PREFIX + json.dumps(config, sort_keys=True) + "\n"


def _write_csv(path, config, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_config_line(config))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_config(path) -> dict:
    """Extract the embedded config from a CSV comment line or a JSON key."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if first.startswith(CONFIG_PREFIX):
            return json.loads(first[len(CONFIG_PREFIX):])
        fh.seek(0)
        payload = json.load(fh)
    if isinstance(payload, dict) and "config" in payload:
        return payload["config"]
    raise ValueError(f"{path} carries no embedded rkcca config")


def read_matrix(path) -> np.ndarray:
    """Read a dataset CSV (comment lines and the header row are skipped)."""
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError(f"{path} contains no data rows")
    return np.asarray(rows, dtype=float)


def parse_loss(text):
    """Parse a loss flag: family[:constants]. Plain ``huber`` means the
    median-residual cutoff resolved at fit time (returned as None)."""
    name, _, arg = text.partition(":")
    name = name.lower()
    if name == "huber":
        return RobustLoss.huber(float(arg)) if arg else None
    if name == "quadratic":
        return RobustLoss.quadratic()
    if name == "hampel":
        consts = [float(t) for t in arg.split(",")] if arg else [1.0, 2.0, 4.0]
        return RobustLoss.hampel(*consts)
    if name == "tukey":
        return RobustLoss.tukey(float(arg) if arg else 4.685)
    raise ValueError(f"unknown loss {text!r}")


def _loss_to_text(loss) -> str:
    if loss is None:
        return "huber"
    if loss.constants:
        return loss.family + ":" + ",".join(_fmt(c) for c in loss.constants)
    return loss.family


# -- gen -----------------------------------------------------------------------

def _run_gen(config) -> list[str]:
    name = config["dataset"]
    kwargs = {"seed": config["seed"], "contaminated": config["contaminated"],
              "mode": config["mode"], "rate": config["rate"]}
    if name == "tcsd":
        kwargs.update(n1=config["n"][0], n2=config["n"][1], n3=config["n"][2])
    else:
        kwargs.update(n=config["n"])
    if name == "smsd":
        kwargs.update(signal=config["signal"], noise=config["noise"],
                      snp_dim=config["snp_dim"], voxel_dim=config["voxel_dim"],
                      contaminated_noise=config["contam_noise"])
    ds = generate(name, **kwargs)
    out = config["out"]
    written = []

    def dump(path, matrix, tag):
        header = [f"{tag}{i + 1}" for i in range(matrix.shape[1])]
        _write_csv(path, config, header, matrix)
        written.append(path)

    if ds.paired:
        dump(out + "_x.csv", ds.x, "x")
        dump(out + "_y.csv", ds.y, "y")
        manifest = {
            "config": config,
            "files": [out + "_x.csv", out + "_y.csv"],
            "mode": ds.spec["mode"],
            "contaminated_indices": [int(i) for i in ds.contaminated_indices],
        }
        path = out + "_manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")
        written.append(path)
    else:
        dump(out + ".csv", ds.x, "x")
    return written


def cmd_gen(args) -> int:
    counts = [int(t) for t in args.n.split(",")]
    if args.dataset == "tcsd":
        if len(counts) != 3:
            raise ValueError("tcsd takes --n n1,n2,n3")
        n = counts
    else:
        if len(counts) != 1:
            raise ValueError(f"{args.dataset} takes a single --n")
        n = counts[0]
    config = {"command": "gen", "dataset": args.dataset, "n": n, "seed": args.seed,
              "contaminated": args.contaminated, "mode": args.mode, "rate": args.rate,
              "out": args.out}
    if args.dataset == "smsd":
        config.update(signal=args.signal, noise=args.noise, snp_dim=args.snp_dim,
                      voxel_dim=args.voxel_dim, contam_noise=args.contam_noise)
    written = _run_gen(config)
    print("wrote " + ", ".join(written))
    return 0


# -- fit -----------------------------------------------------------------------

def _kernel_to_dict(spec: KernelSpec) -> dict:
    return {"family": spec.family, "degree": spec.degree, "bandwidth": spec.bandwidth,
            "offset": spec.offset, "metric": spec.metric}


def _kernel_from_dict(d) -> KernelSpec:
    return KernelSpec(family=d["family"], degree=d["degree"], bandwidth=d["bandwidth"],
                      offset=d["offset"], metric=d["metric"])


def _round_array(a):
    return [[float(_fmt(v)) for v in row] for row in np.atleast_2d(a)]


def _run_fit(config) -> dict:
    x = read_matrix(config["x"])
    y = read_matrix(config["y"])
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"paired files disagree on n: {x.shape[0]} vs {y.shape[0]}")
    kernel_x = resolve_kernel(config["kernel_x"], x)
    kernel_y = resolve_kernel(config["kernel_y"], y)
    k_x = gram(kernel_x, x)
    k_y = gram(kernel_y, y)
    if config["method"] == "standard":
        model = fit_standard_kcca(k_x, k_y, kappa=config["kappa"], m=config["m"])
    elif config["method"] == "robust":
        model = fit_robust_kcca(k_x, k_y, loss=parse_loss(config["loss"]),
                                kappa=config["kappa"], m=config["m"],
                                cov_weights=config["cov_weights"])
    else:
        raise ValueError(f"unknown method {config['method']!r}")
    payload = {
        "config": config,
        "kernel_x": _kernel_to_dict(kernel_x),
        "kernel_y": _kernel_to_dict(kernel_y),
        "method": model.method,
        "kappa": model.kappa,
        "m": model.m,
        "converged": bool(model.converged),
        "loss": None if model.loss is None else
            {"family": model.loss.family, "constants": list(model.loss.constants)},
        "rho": [float(_fmt(v)) for v in model.rho],
        "rho_raw": [float(_fmt(v)) for v in model.rho_raw],
        "alpha_x": _round_array(model.alpha_x),
        "alpha_y": _round_array(model.alpha_y),
        "center_wx": [float(_fmt(v)) for v in model.center_wx],
        "center_wy": [float(_fmt(v)) for v in model.center_wy],
        "weights_xx": [float(_fmt(v)) for v in model.weights_xx],
        "weights_yy": [float(_fmt(v)) for v in model.weights_yy],
        "weights_xy": [float(_fmt(v)) for v in model.weights_xy],
    }
    with open(config["out"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
    return payload


def load_model(path):
    """Rebuild a CcaModel (plus its kernels) from a fit output file."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    model = CcaModel(
        rho=np.asarray(payload["rho"], dtype=float),
        rho_raw=np.asarray(payload["rho_raw"], dtype=float),
        alpha_x=np.asarray(payload["alpha_x"], dtype=float),
        alpha_y=np.asarray(payload["alpha_y"], dtype=float),
        kappa=float(payload["kappa"]),
        m=int(payload["m"]),
        center_wx=np.asarray(payload["center_wx"], dtype=float),
        center_wy=np.asarray(payload["center_wy"], dtype=float),
        weights_xx=np.asarray(payload["weights_xx"], dtype=float),
        weights_yy=np.asarray(payload["weights_yy"], dtype=float),
        weights_xy=np.asarray(payload["weights_xy"], dtype=float),
        method=payload["method"],
        converged=payload["converged"],
    )
    return model, _kernel_from_dict(payload["kernel_x"]), _kernel_from_dict(payload["kernel_y"])


def cmd_fit(args) -> int:
    config = {"command": "fit", "x": args.x, "y": args.y, "method": args.method,
              "kernel_x": args.kernel_x, "kernel_y": args.kernel_y or args.kernel_x,
              "kappa": args.kappa, "m": args.m, "loss": args.loss,
              "cov_weights": args.cov_weights, "out": args.out}
    payload = _run_fit(config)
    print(f"method: {payload['method']}")
    print(f"kernel_x: {payload['kernel_x']}")
    print(f"kernel_y: {payload['kernel_y']}")
    print(f"kappa: {_fmt(payload['kappa'])}")
    print(f"converged: {str(payload['converged']).lower()}")
    for idx in range(payload["m"]):
        print(f"rho_{idx + 1} = {_fmt(payload['rho'][idx])}")
    print(f"model written to {config['out']}")
    return 0


# -- influence -------------------------------------------------------------------

def _run_influence(config) -> None:
    model, kernel_x, kernel_y = load_model(config["model"])
    x = read_matrix(config["x"])
    y = read_matrix(config["y"])
    if x.shape[0] != model.n:
        raise ValueError("data does not match the fitted model size")
    k_x = gram(kernel_x, x)
    k_y = gram(kernel_y, y)
    report = influence_report(model, k_x, k_y, j=config["component"])
    rows = [(i, report.eif_rho[i], int(report.outlier_flags[i])) for i in range(report.n)]
    _write_csv(config["out"], config, ["subject_index", "eif_rho", "outlier_flag"], rows)


def cmd_influence(args) -> int:
    config = {"command": "influence", "model": args.model, "x": args.x, "y": args.y,
              "component": args.component, "out": args.out}
    _run_influence(config)
    print(f"influence report written to {config['out']}")
    return 0


def reflag(path):
    """Recompute outlier flags from the eif_rho column of an influence CSV."""
    data = read_matrix(path)
    flags, _ = mad_outlier_flags(data[:, 1])
    return flags


# -- bench -----------------------------------------------------------------------

_TABLES = {
    "t1": (bench_mod.run_table1,
           ["dataset", "kernel", "method", "norm", "n", "replicates", "mean", "sd"]),
    "t2": (bench_mod.run_table2,
           ["dataset", "n", "method", "metric", "replicates", "mean", "sd"]),
    "t3": (bench_mod.run_table3,
           ["dataset", "n", "condition", "method", "folds", "mean", "sd"]),
    "fig4": (bench_mod.run_fig4,
             ["population", "n", "method", "replicates", "mean", "sd"]),
}


def _run_bench(config) -> None:
    runner, columns = _TABLES[config["table"]]
    kwargs = {"scale": config["scale"], "seed": config["seed"]}
    if config.get("replicates"):
        kwargs["replicates"] = config["replicates"]
    rows = runner(**kwargs)
    out_rows = [[row[c] for c in columns] for row in rows]
    _write_csv(config["out"], config, columns, out_rows)


def cmd_bench(args) -> int:
    if args.table not in _TABLES:
        raise ValueError(f"unknown table {args.table!r}")
    config = {"command": "bench", "table": args.table, "scale": args.scale,
              "seed": args.seed, "replicates": args.replicates, "out": args.out}
    _run_bench(config)
    print(f"benchmark table written to {config['out']}")
    return 0


# -- rerun -----------------------------------------------------------------------

_RUNNERS = {"gen": _run_gen, "fit": _run_fit, "influence": _run_influence,
            "bench": _run_bench}


def cmd_rerun(args) -> int:
    config = read_config(args.file)
    command = config.get("command")
    if command not in _RUNNERS:
        raise ValueError(f"embedded config has no runnable command: {command!r}")
    _RUNNERS[command](config)
    print(f"re-ran embedded {command} config from {args.file}")
    return 0


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rkcca",
        description="Robust kernel CCA: data generation, fitting, influence, benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--dataset", required=True,
                     choices=["tcsd", "sfsd", "mgsd", "scfsd", "smsd"])
    gen.add_argument("--n", required=True, help="sample size (tcsd: n1,n2,n3)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--contaminated", action="store_true")
    gen.add_argument("--mode", choices=["mixture", "shift"], default="mixture")
    gen.add_argument("--rate", type=float, default=0.05)
    gen.add_argument("--signal", type=float, default=0.5)
    gen.add_argument("--noise", type=float, default=1.0)
    gen.add_argument("--contam-noise", type=float, default=20.0)
    gen.add_argument("--snp-dim", type=int, default=1000)
    gen.add_argument("--voxel-dim", type=int, default=1000)
    gen.add_argument("--out", required=True, help="output path base (no extension)")
    gen.set_defaults(func=cmd_gen)

    fit = sub.add_parser("fit", help="fit standard or robust kernel CCA")
    fit.add_argument("--x", required=True)
    fit.add_argument("--y", required=True)
    fit.add_argument("--method", choices=["standard", "robust"], default="standard")
    fit.add_argument("--kernel-x", default="gaussian:median")
    fit.add_argument("--kernel-y", default=None)
    fit.add_argument("--kappa", type=float, default=1e-5)
    fit.add_argument("--loss", default="huber",
                     help="huber[:c] | quadratic | hampel:c1,c2,c3 | tukey[:c]")
    fit.add_argument("--m", type=int, default=1)
    fit.add_argument("--cov-weights", choices=["separate", "shared"], default="shared")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    infl = sub.add_parser("influence", help="per-subject influence report")
    infl.add_argument("--model", required=True)
    infl.add_argument("--x", required=True)
    infl.add_argument("--y", required=True)
    infl.add_argument("--component", type=int, default=1)
    infl.add_argument("--out", required=True)
    infl.set_defaults(func=cmd_influence)

    benchp = sub.add_parser("bench", help="run a benchmark table")
    benchp.add_argument("--table", required=True, choices=sorted(_TABLES))
    benchp.add_argument("--scale", choices=["desk", "full"], default="desk")
    benchp.add_argument("--seed", type=int, default=0)
    benchp.add_argument("--replicates", type=int, default=None)
    benchp.add_argument("--out", required=True)
    benchp.set_defaults(func=cmd_bench)

    rerun = sub.add_parser("rerun", help="re-execute a file's embedded config")
    rerun.add_argument("--file", required=True)
    rerun.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
