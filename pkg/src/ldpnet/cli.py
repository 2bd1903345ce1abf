"""Command-line front end.

    ldpnet <command> --config run.json [--seed S] [--out DIR] [--threads K]

Commands: simulate, rate, rncheck, entropy, converge, sample-weights.
Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from .empirical import EmpiricalMeasure, QuadratureSpec, stats_of_empirical, stats_of_gaussian
from .errors import ConfigError, NumericError
from .network import (
    PathConfiguration,
    build_torus_spectrum,
    sample_weight_batch,
    sample_weights,
    simulate_network,
    simulate_reference,
    simulate_reference_batch,
)
from .rate import (
    evaluate_gamma,
    finite_spectral_parts,
    gamma1_limit,
    gamma2_finite,
    gamma2_limit,
    rate_function_H,
)
from .rncheck import Functional, pushforward_check, rn_check
from .spectral import build_K_sequence, dft_sequence
from .streams import map_chunks, stream

log = logging.getLogger("ldpnet")

VERSION = f"v{__version__}"
_TAG_CONFIGURATIONS = 3


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else _fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, cfg: dict, payload: dict):
    doc = {
        "version": VERSION,
        "seed": cfg["seed"],
        "config_hash": C.config_hash(cfg),
        "config": cfg,
        **payload,
    }
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _empirical_config(block: dict, p, K, seed: int) -> PathConfiguration:
    rep = int(block["replicate"])
    if block["source"] == "reference":
        return simulate_reference(p, seed, rep)
    if block["source"] != "network":
        raise ConfigError("measure.source must be 'network' or 'reference'")
    J = sample_weights(build_torus_spectrum(K, p), seed, rep)
    return simulate_network(p, J, seed, rep)


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg, out: Path, threads: int):
    p, K, seed = C.build_params(cfg), C.build_kernel(cfg), cfg["seed"]
    spec = build_torus_spectrum(K, p)
    reps = int(cfg["simulate"]["replicates"])
    rows, paths = [], []
    for r in range(reps):
        u = simulate_network(p, sample_weights(spec, seed, r), seed, r)
        paths.append(u.values)
        for j in range(-p.n, p.n + 1):
            rows.append([r, j, *u.row(j)])
    _write_csv(out / "trajectories.csv", ["replicate", "neuron"] + [f"u_{t}" for t in range(p.T + 1)], rows)
    arr = np.stack(paths)
    _write_json(out / "summary.json", cfg, {
        "command": "simulate",
        "replicates": reps,
        "neuron_mean": arr.mean(axis=(0, 2)).tolist(),
        "neuron_variance": arr.var(axis=(0, 2)).tolist(),
        "time_mean": arr.mean(axis=(0, 1)).tolist(),
    })


def cmd_rate(cfg, out: Path, threads: int):
    p, K, seed = C.build_params(cfg), C.build_kernel(cfg), cfg["seed"]
    block = cfg["rate"]
    quad = QuadratureSpec(int(block["quadrature_order"]))
    mblock = block["measure"]
    if mblock["kind"] == "empirical":
        mu = EmpiricalMeasure(_empirical_config(mblock, p, K, seed), p)
        stats = stats_of_empirical(mu)
    else:
        mu = C.build_gaussian(mblock, p)
        stats = stats_of_gaussian(mu, p, quad)
    report = evaluate_gamma(mu, K, p, quad, float(block["tol"]))
    Kgrid = dft_sequence(build_K_sequence(stats, K, p)).values
    _, A, _ = finite_spectral_parts(stats, K, p)
    Agrid = np.fft.fft(A.blocks, axis=-3)
    T = p.T
    header = ["m", "omega"]
    for name in ("K", "A"):
        header += [f"{name}_{s}_{t}_{part}" for s in range(T) for t in range(T) for part in ("re", "im")]
    rows = []
    for m in range(p.N):
        row = [m, 2.0 * np.pi * m / p.N]
        for grid in (Kgrid, Agrid):
            row += [x for s in range(T) for t in range(T) for x in (grid[m, s, t].real, grid[m, s, t].imag)]
        rows.append(row)
    _write_csv(out / "spectrum.csv", header, rows)
    _write_json(out / "gamma_report.json", cfg, {"command": "rate", **vars(report)})


def cmd_rncheck(cfg, out: Path, threads: int):
    p, K, seed = C.build_params(cfg), C.build_kernel(cfg), cfg["seed"]
    block = cfg["rncheck"]
    samples = int(block["samples"])
    count = int(block["configurations"])
    configs = simulate_reference_batch(p, seed, (_TAG_CONFIGURATIONS, 0), count)
    cases = []
    for i, values in enumerate(configs):
        u = PathConfiguration(p.n, p.T, values)
        r = rn_check(u, K, p, samples, seed, threads, stream_index=i)
        cases.append({
            "configuration": values.tolist(),
            "mc_log_estimate": r.mc_estimate,
            "mc_stderr": r.mc_stderr,
            "analytic_log_rn": r.analytic,
            "log_ratio": r.log_ratio,
            "z_score": r.z_score,
        })
    fb = block["functional"]
    F = Functional(fb["kind"], int(fb["t"]), int(fb["lag"]), tuple(fb["weights"]), float(fb["offset"]))
    push_samples = int(block["pushforward_samples"] or samples)
    pf = pushforward_check(F, K, p, push_samples, seed, threads, float(block["warn_nats"]))
    _write_json(out / "rncheck.json", cfg, {
        "command": "rncheck",
        "samples": samples,
        "cases": cases,
        "max_abs_z": max((abs(c["z_score"]) for c in cases), default=0.0),
        "pushforward": vars(pf),
    })


def cmd_entropy(cfg, out: Path, threads: int):
    p, K = C.build_params(cfg), C.build_kernel(cfg)
    block = cfg["entropy"]
    g = C.build_gaussian(block["measure"], p)
    schedule = [int(n) for n in block["schedule"]]
    h = rate_function_H(g, K, p, schedule, QuadratureSpec(int(block["quadrature_order"])), float(block["tol"]))
    _write_csv(out / "entropy_table.csv", ["n", "N", "entropy_rate"],
               [[n, 2 * n + 1, a] for n, a in h.entropy.table])
    _write_json(out / "h_report.json", cfg, {
        "command": "entropy",
        "I3": h.I3,
        "gamma1": h.gamma1,
        "gamma2": h.gamma2,
        "H": h.H,
        "richardson": h.entropy.richardson,
        "last_increment": h.entropy.increment,
    })


def cmd_converge(cfg, out: Path, threads: int):
    p0, K = C.build_params(cfg), C.build_kernel(cfg)
    block = cfg["converge"]
    quad = QuadratureSpec(int(block["quadrature_order"]))
    tol = float(block["tol"])
    g = C.build_gaussian(block["measure"], p0)
    stats = stats_of_gaussian(g, p0, quad)
    g1_lim = gamma1_limit(stats, K, p0, tol)
    g2_lim = gamma2_limit(stats, K, p0, tol)
    rows = []
    for n in block["schedule"]:
        p = p0.replace(n=int(n))
        g1, _, _ = finite_spectral_parts(stats, K, p)
        g2 = gamma2_finite(g, K, p, quad)
        rows.append([int(n), float(g1), g1_lim, abs(g1 - g1_lim), g2, g2_lim, abs(g2 - g2_lim)])
    _write_csv(out / "converge.csv",
               ["n", "gamma1_n", "gamma1_lim", "abs_err1", "gamma2_n", "gamma2_lim", "abs_err2"], rows)


def cmd_sample_weights(cfg, out: Path, threads: int):
    p, K, seed = C.build_params(cfg), C.build_kernel(cfg), cfg["seed"]
    spec = build_torus_spectrum(K, p)
    samples = int(cfg["sample_weights"]["samples"])
    draws = np.concatenate(map_chunks(
        lambda i, size: sample_weight_batch(spec, stream(seed, "weights", i), size), samples, threads
    ))
    flat = draws.reshape(samples, -1)
    N = p.N
    _write_csv(out / "weights.csv", ["sample"] + [f"J_{i - p.n}_{j - p.n}" for i in range(N) for j in range(N)],
               [[s, *row] for s, row in enumerate(flat)])
    _write_json(out / "weights_summary.json", cfg, {
        "command": "sample-weights",
        "samples": samples,
        "target_mean": p.j_bar / N,
        "sample_mean": flat.mean(axis=0).tolist(),
        "target_variance": float(K.evaluate(0, 0)) / N,
        "sample_variance": flat.var(axis=0, ddof=1).tolist(),
        "torus_eigenvalues": spec.eigenvalues.tolist(),
        "clamped_eigenvalues": spec.clamped,
    })


COMMANDS = {
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "rncheck": cmd_rncheck,
    "entropy": cmd_entropy,
    "converge": cmd_converge,
    "sample-weights": cmd_sample_weights,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (results unaffected)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = C.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out, max(1, args.threads))
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except NumericError as exc:
        log.error("numerical failure: %s", exc)
        return 3
    log.info("%s finished in %.3f s", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
