"""
Command-line interface: simulate | fit | summarize | roc.

Every command writes a manifest.yaml next to its outputs.  Passing that
manifest back with --config reruns the command bit-identically.

Exit codes: 0 success, 2 configuration error, 3 input/output error,
4 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .data import DataMatrix, read_csv, write_csv
from .errors import ConfigError, GoGError, ParseError
from .params import GWishartHyper, HyperParams, TreeHyper
from .tessellation import Geometric, ShiftedNegBinomial

log = logging.getLogger("gog")

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4

FIT_DEFAULTS = {
    "data": None, "algorithm": "coarsened", "iters": 20000, "burnin": 15000,
    "thin": 5, "n_inner": 1000, "zeta": "auto", "xi_se": 0.1, "xi_q": 0.1,
    "delta": 3.0, "delta_G": 3.0, "cohesion": {"kind": "ShiftedNegBinomial", "r": 2.0, "pi": 1 / 6},
    "similarity": "tree", "seed": 0, "parallelism": 1, "init_centers": [0],
}
SIM_DEFAULTS = {
    "kind": "four_block", "n": 1000, "seed": 0, "sigma_eps2": 0.01,
    "superedge": False, "block_sizes": [5, 10, 20],
}
ROC_DEFAULTS = {
    "p": 10, "n": [50, 500], "density": [0.25], "replicates": 5, "iters": 20000,
    "burnin": 2000, "seed": 0, "threshold": 0.5, "parallelism": 1,
}
SUMMARY_DEFAULTS = {"samples": None, "data": None, "threshold": 0.5, "svg": False}


# Configuration --------------------------------------------------------------

def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return cfg.get("config", cfg)


def merge(defaults, cfg, flags):
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    out = dict(defaults)
    out.update(cfg)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def cohesion_from(opts):
    opts = dict(opts)
    kind = opts.pop("kind", "ShiftedNegBinomial")
    try:
        cls = {"ShiftedNegBinomial": ShiftedNegBinomial, "Geometric": Geometric}[kind]
        return cls(**opts)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad cohesion settings: {exc}") from None


def resolve_zeta(zeta, algorithm, n):
    if zeta in (None, "auto"):
        return (10.0 if algorithm == "coarsened" else 1.0) / n
    try:
        z = float(zeta)
    except ValueError:
        raise ConfigError(f"zeta must be a number or 'auto', got {zeta!r}") from None
    if not 0 < z <= 1:
        raise ConfigError(f"zeta must lie in (0, 1], got {z}")
    return z


def hyper_from(cfg, n):
    return HyperParams(
        tree=TreeHyper(float(cfg["delta"])), gw=GWishartHyper(float(cfg["delta_G"])),
        cohesion=cohesion_from(cfg["cohesion"]),
        zeta=resolve_zeta(cfg["zeta"], cfg["algorithm"], n),
        xi_se=float(cfg["xi_se"]), xi_q=float(cfg["xi_q"]), similarity=cfg["similarity"],
    )


def write_manifest(out, command, cfg, extra=None):
    doc = {"command": command, "version": __version__, "config": cfg}
    if extra:
        doc.update(extra)
    with open(out / "manifest.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# Commands -------------------------------------------------------------------

def cmd_simulate(cfg, out):
    from . import simulate as sim

    rng = np.random.default_rng(int(cfg["seed"]))
    n, kind = int(cfg["n"]), cfg["kind"]
    if kind == "four_block":
        raw = sim.four_block_data(n, rng)
        within, across = sim.four_block_graph()
        truth = {
            "labels": sim.block_labels(sim.FOUR_BLOCKS).tolist(),
            "edges": [list(e) for e in within + across],
            "superedges": [[1, 2], [2, 3]],
        }
    elif kind == "latent":
        design = sim.LatentFactor(tuple(cfg["block_sizes"]), float(cfg["sigma_eps2"]), bool(cfg["superedge"]), n)
        raw = sim.latent_factor_data(design, rng)
        truth = {
            "labels": sim.block_labels(design.block_sizes).tolist(),
            "superedges": [[0, 2]] if design.superedge else [],
        }
    elif kind == "tridiagonal":
        raw = sim.block_tridiagonal_data(n, rng)
        truth = {"labels": [0, 0, 0, 1, 1, 1], "superedges": []}
    else:
        raise ConfigError(f"unknown simulation kind {kind!r}")
    names = [f"V{j + 1}" for j in range(raw.shape[1])]
    write_csv(out / "data.csv", raw, names)
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "simulate", cfg)


def cmd_fit(cfg, out):
    from .mcmc import Schedule, run_coarsened, run_nested, write_samples

    if cfg["data"] is None:
        raise ConfigError("fit needs a data file")
    raw, names = read_csv(cfg["data"])
    X = DataMatrix(raw, tuple(names))
    if cfg["algorithm"] not in ("coarsened", "nested"):
        raise ConfigError(f"unknown algorithm {cfg['algorithm']!r}")
    schedule = Schedule(int(cfg["iters"]), int(cfg["burnin"]), int(cfg["thin"]))
    hp = hyper_from(cfg, X.n)
    init = [int(c) for c in cfg["init_centers"]]
    if not init or min(init) < 0 or max(init) >= X.p:
        raise ConfigError("init_centers must be node indices")
    log.info("fitting %s on n=%d p=%d with zeta=%g", cfg["algorithm"], X.n, X.p, hp.zeta)
    if cfg["algorithm"] == "coarsened":
        records = run_coarsened(X, hp, schedule, int(cfg["seed"]), init)
    else:
        if int(cfg["parallelism"]) < 1:
            raise ConfigError("parallelism must be at least 1")
        records = run_nested(
            X, hp, schedule, int(cfg["n_inner"]), int(cfg["seed"]), int(cfg["parallelism"]), init
        )
    write_samples(out / "samples.jsonl", records)
    write_manifest(out, "fit", cfg, {"resolved": hp.to_dict(), "names": list(names)})


def cmd_summarize(cfg, out):
    from . import summaries as summ
    from .mcmc import read_samples

    if cfg["samples"] is None:
        raise ConfigError("summarize needs a samples file")
    records = read_samples(cfg["samples"])
    p = len(records[0].assignment)
    hp, X, names = HyperParams(), None, [f"V{j + 1}" for j in range(p)]
    manifest = Path(cfg["samples"]).with_name("manifest.yaml")
    if manifest.exists():
        with open(manifest, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        if "resolved" in doc:
            hp = HyperParams.from_dict(doc["resolved"])
        names = doc.get("names", names)
        if cfg["data"] is None:
            cfg = dict(cfg, data=doc.get("config", {}).get("data"))
    if cfg["data"] is not None:
        raw, names = read_csv(cfg["data"])
        X = DataMatrix(raw, tuple(names))
    threshold = float(cfg["threshold"])
    if not 0 <= threshold <= 1:
        raise ConfigError("threshold must lie in [0, 1]")

    P = summ.coclustering(records)
    S = summ.superedge_probabilities(records)
    labels, vi = summ.vi_point_estimate(records, P)
    summ.write_matrix_csv(out / "coclustering.csv", P, names)
    summ.write_matrix_csv(out / "superedges.csv", S, names)
    partition = {"labels": labels, "vi_lower_bound": vi}
    with open(out / "partition.json", "w", encoding="utf-8") as fh:
        json.dump(partition, fh, sort_keys=True)
        fh.write("\n")
    if X is not None:
        report = summ.assemble_graph_of_graphs(
            labels, X, hp, _block_edge_probs(labels, S), threshold, names
        )
        report["vi_lower_bound"] = vi
        summ.write_report(out / "graph_of_graphs.json", report)
    if cfg["svg"]:
        summ.heatmap_svg(out / "coclustering.svg", P, names, "co-clustering")
        summ.heatmap_svg(out / "superedges.svg", S, names, "superedge probability")
    write_manifest(out, "summarize", cfg)


def _block_edge_probs(labels, S):
    """Supernode-level superedge probabilities read off the node-level matrix."""
    from .tessellation import tessellation_from_labels

    T = tessellation_from_labels(labels)
    E = np.zeros((T.K, T.K))
    for k in range(T.K):
        for l in range(T.K):
            if k != l:
                E[k, l] = S[np.ix_(T.members[k], T.members[l])].mean()
    return E


def _roc_replicate(args):
    from .simulate import edge_recovery_replicate

    p, n, density, seed, iters, burnin = args
    return edge_recovery_replicate(p, n, density, np.random.default_rng(seed), iters, burnin)


def cmd_roc(cfg, out):
    from . import summaries as summ

    p, reps = int(cfg["p"]), int(cfg["replicates"])
    ns = [int(v) for v in np.atleast_1d(cfg["n"])]
    densities = [float(v) for v in np.atleast_1d(cfg["density"])]
    if p < 2 or reps < 1 or any(not 0 < d < 1 for d in densities):
        raise ConfigError("need p >= 2, replicates >= 1 and densities in (0, 1)")
    cells, jobs = [], []
    for di, density in enumerate(densities):
        for ni, n in enumerate(ns):
            cells.append((p, n, density))
            jobs += [
                (p, n, density, np.random.SeedSequence([int(cfg["seed"]), di, ni, r]),
                 int(cfg["iters"]), int(cfg["burnin"]))
                for r in range(reps)
            ]
    par = int(cfg["parallelism"])
    if par > 1:
        with ProcessPoolExecutor(max_workers=par) as pool:
            flat = list(pool.map(_roc_replicate, jobs))
    else:
        flat = [_roc_replicate(j) for j in jobs]
    results = [
        ([s for s, _ in flat[i * reps:(i + 1) * reps]], [t for _, t in flat[i * reps:(i + 1) * reps]])
        for i in range(len(cells))
    ]
    rows = []
    for (p_, n, density), (scores, truth) in zip(cells, results):
        aucs = [summ.roc_curve(s, t, cfg["threshold"]).auc for s, t in zip(scores, truth)]
        pooled = summ.roc_curve(np.concatenate(scores), np.concatenate(truth), cfg["threshold"])
        summ.write_roc_csv(out / f"roc_p{p_}_n{n}_d{density:g}.csv", pooled)
        rows.append({
            "p": p_, "n": n, "density": density, "pooled_auc": pooled.auc,
            "mean_auc": float(np.mean(aucs)), "fpr_at_threshold": pooled.operating_point[0],
            "tpr_at_threshold": pooled.operating_point[1],
        })
    with open(out / "auc.csv", "w", encoding="utf-8") as fh:
        keys = list(rows[0])
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys) + "\n")
    write_manifest(out, "roc", cfg)
    return rows


# Entry point ------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="gog", description=__doc__.split("\n")[1])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="YAML config file (a manifest also works)")
        p.add_argument("--out", required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int)

    s = sub.add_parser("simulate", help="generate a synthetic data set")
    common(s)
    s.add_argument("--kind", choices=["four_block", "latent", "tridiagonal"])
    s.add_argument("--n", type=int)
    s.add_argument("--sigma-eps2", dest="sigma_eps2", type=float)
    s.add_argument("--superedge", action="store_const", const=True)

    f = sub.add_parser("fit", help="run an MCMC sampler")
    common(f)
    f.add_argument("data", nargs="?", help="CSV file with a header row")
    f.add_argument("--algorithm", choices=["coarsened", "nested"])
    f.add_argument("--iters", type=int)
    f.add_argument("--burnin", type=int)
    f.add_argument("--thin", type=int)
    f.add_argument("--n-inner", dest="n_inner", type=int)
    f.add_argument("--zeta", help="coarsening power or 'auto'")
    f.add_argument("--xi-se", dest="xi_se", type=float)
    f.add_argument("--xi-q", dest="xi_q", type=float)
    f.add_argument("--parallelism", type=int)

    m = sub.add_parser("summarize", help="summarize a samples file")
    common(m, seed=False)
    m.add_argument("samples", nargs="?")
    m.add_argument("--data", help="data CSV (defaults to the one in the fit manifest)")
    m.add_argument("--threshold", type=float)
    m.add_argument("--svg", action="store_const", const=True)

    r = sub.add_parser("roc", help="single-level GGM edge-recovery study")
    common(r)
    r.add_argument("--p", type=int)
    r.add_argument("--n", type=int, nargs="+")
    r.add_argument("--density", type=float, nargs="+")
    r.add_argument("--replicates", type=int)
    r.add_argument("--iters", type=int)
    r.add_argument("--burnin", type=int)
    r.add_argument("--threshold", type=float)
    r.add_argument("--parallelism", type=int)
    return ap


COMMANDS = {
    "simulate": (cmd_simulate, SIM_DEFAULTS),
    "fit": (cmd_fit, FIT_DEFAULTS),
    "summarize": (cmd_summarize, SUMMARY_DEFAULTS),
    "roc": (cmd_roc, ROC_DEFAULTS),
}


def setup_logging():
    level = os.environ.get("GOG_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    setup_logging()
    args = build_parser().parse_args(argv)
    fn, defaults = COMMANDS[args.command]
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    try:
        cfg = merge(defaults, load_config(args.config), flags)
        out = _outdir(args.out)
        fn(cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GoGError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
