"""Command-line harness.

Subcommands::

    fstdp generate --config CFG          raster.csv + labels.csv
    fstdp run      --config CFG          weights, output spikes, report.json
    fstdp analyze  --raster FILE         covariance matrices + per-channel scores
    fstdp theory   --config PARAMS       rate-sweep CSV + verdicts.json
    fstdp ingest   --input FILE          binarized raster, missing counts, clusters

``--config`` accepts a file path or the name of a bundled preset
(``synthetic-reference``, ``weatherlike-reference``, ``theory-reference``).
Exit codes: 0 success, 2 validation or parse error, 3 runtime error.
"""

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import cov_with_mean_input, normalized_cov, separation_metrics, uncentered_cov
from .config import ExperimentConfig, MATRIX_KINDS, load_config, read_config_text
from .core import NeuronConfig, SimClock, calibrate_threshold, run_simulation
from .datagen import generate_correlated_binary, generate_weatherlike
from .exceptions import FSTDPError, InvalidInputError, ParseError, ValidationError
from .ingest import binarize_hourly, cluster_stations, load_event_csv, station_features
from .io import read_labels, read_raster_csv, write_labels, write_matrix_csv, write_raster_csv, write_vector_csv
from .plasticity import FatigueParams, Mode
from .theory import TheoryParams, estimate_n_coinc, learning_condition, mean_fatigue, rate_sweep

logger = logging.getLogger("fstdp")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


# -- dataset --------------------------------------------------------------

def build_dataset(cfg, seed):
    """Raster and labels (or None) for ``cfg`` at ``seed``."""
    kind, body = cfg.dataset_kind, cfg.dataset
    if kind == "synthetic":
        spec = cfg.process_spec(seed)
        return generate_correlated_binary(spec), spec.labels
    if kind == "weatherlike":
        return generate_weatherlike(**cfg.weatherlike_kwargs(seed))
    if kind == "csv":
        raster = binarize_hourly(load_event_csv(body["path"]), body.get("threshold", 0.0))
    else:
        raster = read_raster_csv(body["path"])
    labels = read_labels(body["labels"]) if body.get("labels") else None
    if labels is not None and labels.size != raster.n_channels:
        raise ValidationError(f"dataset.{kind}.labels", f"{labels.size} labels for {raster.n_channels} channels")
    return raster, labels


def theory_for_dataset(cfg, raster, labels, v_th):
    """Learning verdict for the configured mode, or None when it is undefined."""
    if labels is None or labels.all() or not labels.any():
        return None
    rule = cfg.plasticity
    if cfg.dataset_kind == "synthetic":
        rates = np.array(cfg.process_spec(cfg.seed).rates)
        c = cfg.dataset.get("c", 0.0)
    elif cfg.dataset_kind == "weatherlike":
        b = cfg.dataset
        n_s = b.get("n_scarce_correlated", 58)
        n_f = b.get("n_frequent_uncorrelated", 147)
        rates = np.array([b.get("p_scarce", 0.03)] * n_s + [b.get("p_frequent", 0.12)] * n_f) / cfg.dt
        c = b.get("c", 0.3)
    else:
        return None
    corr = np.flatnonzero(labels)
    mf = mean_fatigue(rates[corr[0]], cfg.dt, rule.fatigue)
    params = TheoryParams(
        rates=tuple(rates),
        v_th=v_th,
        dt=cfg.dt,
        w=rule.initial_weight,
        n_coinc=estimate_n_coinc(corr.size, c, rule.initial_weight, mf),
        fatigue=rule.fatigue,
        correlated_set=tuple(corr),
    )
    ratio, learns = learning_condition(params, rule.mode)
    return {"mode": rule.mode.value, "ratio": ratio, "learns": learns, "n_coinc": params.n_coinc}


# -- commands -------------------------------------------------------------

def _with_overrides(cfg, args):
    if getattr(args, "mode", None):
        cfg = replace(cfg, plasticity=cfg.plasticity.with_mode(args.mode))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out_dir", None):
        cfg = replace(cfg, output_dir=args.out_dir)
    return cfg


def cmd_generate(args):
    cfg = _with_overrides(load_config(args.config), args)
    if cfg.dataset_kind not in ("synthetic", "weatherlike"):
        raise ValidationError("dataset", "generate needs a synthetic or weatherlike dataset")
    raster, labels = build_dataset(cfg, cfg.seed)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_raster_csv(raster, out / "raster.csv")
    write_labels(labels, out / "labels.csv")
    _emit(args, {"raster": str(out / "raster.csv"), "labels": str(out / "labels.csv"),
                 "n_channels": raster.n_channels, "n_steps": raster.n_steps})
    return EXIT_OK


def run_experiment(cfg):
    """Run one configured experiment; write artifacts and return the report dict."""
    t0 = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    raster, labels = build_dataset(cfg, cfg.seed)
    rule = cfg.plasticity
    v_th = cfg.v_th
    calibrated = v_th is None
    if calibrated:
        sample = raster.head(min(cfg.sample_steps, raster.n_steps))
        v_th = calibrate_threshold(sample, NeuronConfig(v_th=cfg.v_reset + 1.0, tau_m=cfg.tau_m, v_reset=cfg.v_reset),
                                   rule, cfg.target_rate_hz, dt=cfg.dt)
    neuron = NeuronConfig(v_th=v_th, tau_m=cfg.tau_m, v_reset=cfg.v_reset)
    res = run_simulation(raster, neuron, rule, SimClock(dt=cfg.dt), seed=cfg.seed, record_every=cfg.trajectory_stride)

    files = {}
    files["weights"] = _write(out / "weights.csv", lambda p: write_vector_csv(res.final_weights, p, "weight"))
    files["output_spikes"] = _write(out / "output_spikes.csv", lambda p: write_vector_csv(res.output_spikes, p, "spike", "step"))
    if res.weight_trajectory is not None:
        files["trajectory"] = _write(out / "trajectory.csv", lambda p: _write_trajectory(res, p))
    if labels is not None:
        files["labels"] = _write(out / "labels.csv", lambda p: write_labels(labels, p))
    for kind in cfg.matrices:
        m = uncentered_cov(raster) if kind == "uncentered" else normalized_cov(raster)
        files[f"{kind}_cov"] = _write(out / f"{kind}_cov.csv", lambda p: write_matrix_csv(m, p))

    sep = None
    if labels is not None and labels.any() and not labels.all():
        sep = separation_metrics(res.final_weights, labels).as_dict()
    report = {
        "config": cfg.to_dict(),
        "simulation": {
            "seed": cfg.seed,
            "n_channels": raster.n_channels,
            "n_steps": raster.n_steps,
            "dt": cfg.dt,
            "v_th": v_th,
            "v_th_calibrated": calibrated,
            "n_output_spikes": res.n_output_spikes,
            "output_rate_hz": res.output_rate,
        },
        "separation": sep,
        "theory": theory_for_dataset(cfg, raster, labels, v_th),
        "files": files,
        "wall_clock_s": round(time.perf_counter() - t0, 3),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _run_one(payload):
    cfg_dict, seed, out_dir = payload
    cfg = replace(ExperimentConfig.from_dict(cfg_dict), seed=seed, output_dir=out_dir)
    return run_experiment(cfg)


def cmd_run(args):
    cfg = _with_overrides(load_config(args.config), args)
    if not args.seeds:
        report = run_experiment(cfg)
        _emit(args, _summary(report))
        return EXIT_OK
    jobs = [(cfg.to_dict(), s, str(Path(cfg.output_dir) / f"seed-{s}")) for s in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    summary = {"runs": [_summary(r) for r in reports]}
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    (Path(cfg.output_dir) / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _emit(args, summary)
    return EXIT_OK


def cmd_analyze(args):
    raster = read_raster_csv(args.raster)
    out = Path(args.out_dir or "out/analyze")
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for kind in args.matrices:
        m = uncentered_cov(raster) if kind == "uncentered" else normalized_cov(raster)
        files[kind] = _write(out / f"{kind}_cov.csv", lambda p: write_matrix_csv(m, p))
    scores = np.column_stack([cov_with_mean_input(raster, False), cov_with_mean_input(raster, True)])
    with open(out / "scores.csv", "w") as fh:
        fh.write("channel,cov_mean_uncentered,cov_mean_normalized\n")
        for i, (a, b) in enumerate(scores.tolist()):
            fh.write(f"{i},{a!r},{b!r}\n")
    files["scores"] = str(out / "scores.csv")
    _emit(args, {"files": files, "n_channels": raster.n_channels, "n_steps": raster.n_steps})
    return EXIT_OK


def load_theory_params(ref):
    """Parse a theory params file; returns ``(base TheoryParams, c, sweep dict)``."""
    text, _ = read_config_text(ref)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("<params>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    allowed = {"version", "groups", "rates", "correlated_set", "c", "dt", "w", "v_th", "n_coinc", "fatigue", "sweep"}
    extra = sorted(set(d) - allowed)
    if extra:
        raise ValidationError(extra[0], "unknown field")
    if "groups" in d:
        rates, corr = [], []
        for k, g in enumerate(d["groups"]):
            if not {"count", "rate"} <= set(g):
                raise ValidationError(f"groups[{k}]", "needs count and rate")
            start = len(rates)
            rates += [float(g["rate"])] * int(g["count"])
            if g.get("correlated"):
                corr += list(range(start, len(rates)))
    elif "rates" in d:
        rates, corr = d["rates"], d.get("correlated_set", [])
    else:
        raise ValidationError("groups", "give either groups or rates")
    try:
        fatigue = FatigueParams(**d.get("fatigue", {}))
        base = TheoryParams(rates=tuple(rates), v_th=d.get("v_th", 10.0), dt=d.get("dt", 0.1), w=d.get("w", 0.5),
                            n_coinc=0.0, fatigue=fatigue, correlated_set=tuple(corr))
    except (FSTDPError, TypeError) as exc:
        raise ValidationError("<params>", str(exc)) from None
    c = d.get("c", 0.0)
    if not 0 <= c < 1:
        raise ValidationError("c", "must lie in [0, 1)")
    return base, c, d.get("n_coinc"), d.get("sweep", {})


def _params_for_mode(base, c, n_coinc, mode):
    if n_coinc is None:
        if not base.correlated_set:
            n_coinc = 0.0
        else:
            r = base.rates[base.correlated_set[0]]
            mf = mean_fatigue(r, base.dt, base.fatigue) if Mode(mode) is Mode.FSTDP else 0.0
            n_coinc = estimate_n_coinc(len(base.correlated_set), c, base.w, mf)
    return replace(base, n_coinc=float(n_coinc))


def cmd_theory(args):
    base, c, n_coinc, sweep = load_theory_params(args.config)
    out = Path(args.out_dir or "out/theory")
    out.mkdir(parents=True, exist_ok=True)
    ch = int(sweep.get("channel", 0))
    if not 0 <= ch < base.n_channels:
        raise ValidationError("sweep.channel", "out of range")
    rates = np.linspace(sweep.get("rate_min", 0.2), sweep.get("rate_max", 1.0 / base.dt), int(sweep.get("n_points", 50)))
    if rates.min() < 0 or rates.max() * base.dt > 1 + 1e-12:
        raise ValidationError("sweep", "rates must lie in [0, 1/dt]")
    verdicts, rows = {}, []
    modes = [Mode(args.mode)] if args.mode else [Mode.STDP, Mode.FSTDP]
    for mode in modes:
        params = _params_for_mode(base, c, n_coinc, mode)
        ratio, learns = learning_condition(params, mode)
        verdicts[mode.value] = {"ratio": ratio, "learns": learns, "n_coinc": params.n_coinc}
        rows += rate_sweep(params, ch, rates, [mode])
    with open(out / "sweep.csv", "w") as fh:
        fh.write("mode,rate,q,p,causal_P\n")
        for r in rows:
            fh.write(f"{r['mode']},{r['rate']!r},{r['q']!r},{r['p']!r},{r['causal_P']!r}\n")
    report = {"verdicts": verdicts, "sweep_channel": ch, "files": {"sweep": str(out / "sweep.csv")}}
    (out / "verdicts.json").write_text(json.dumps(report, indent=2) + "\n")
    _emit(args, report)
    return EXIT_OK


def cmd_ingest(args):
    table = load_event_csv(args.input)
    raster = binarize_hourly(table, args.threshold)
    out = Path(args.out_dir or "out/ingest")
    out.mkdir(parents=True, exist_ok=True)
    files = {"raster": _write(out / "raster.csv", lambda p: write_raster_csv(raster, p))}
    with open(out / "stations.csv", "w") as fh:
        fh.write("channel,station,missing_hours\n")
        for i, (sid, miss) in enumerate(zip(table.station_ids, table.missing.tolist())):
            fh.write(f"{i},{sid},{miss}\n")
    files["stations"] = str(out / "stations.csv")
    report = {"n_stations": table.n_stations, "n_hours": table.n_hours, "missing_total": int(table.missing.sum())}
    if args.k:
        feats = station_features(raster)
        labels = cluster_stations(feats, args.k, seed=args.seed or 0)
        files["clusters"] = _write(out / "clusters.csv", lambda p: write_vector_csv(labels, p, "cluster"))
        if args.k == 2:
            # the cluster with the higher mean normalized covariance is the correlated group
            hi = int(np.argmax([feats[labels == j, 1].mean() for j in range(2)]))
            files["labels"] = _write(out / "labels.csv", lambda p: write_labels(labels == hi, p))
            report["n_correlated"] = int((labels == hi).sum())
    report["files"] = files
    _emit(args, report)
    return EXIT_OK


# -- helpers --------------------------------------------------------------

def _write(path, writer):
    writer(path)
    return str(path)


def _write_trajectory(res, path):
    n = res.weight_trajectory.shape[1]
    with open(path, "w") as fh:
        fh.write("step," + ",".join(f"w{i}" for i in range(n)) + "\n")
        for step, row in zip(res.trajectory_steps.tolist(), res.weight_trajectory.tolist()):
            fh.write(f"{step}," + ",".join(repr(x) for x in row) + "\n")


def _summary(report):
    s = {"seed": report["simulation"]["seed"], "output_rate_hz": report["simulation"]["output_rate_hz"]}
    if report["separation"]:
        s.update({k: report["separation"][k] for k in ("auc", "gap", "mean_correlated", "mean_uncorrelated")})
    s["report"] = str(Path(report["files"]["weights"]).parent / "report.json")
    return s


def _emit(args, obj):
    if not args.quiet:
        print(json.dumps(obj, indent=2))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    p = argparse.ArgumentParser(prog="fstdp", description="Fatigue-modulated STDP simulations and analytics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic raster and its labels")
    g.add_argument("--config", required=True, help="experiment config file or preset name")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", parents=[common], help="run an experiment and write a report")
    r.add_argument("--config", required=True, help="experiment config file or preset name")
    r.add_argument("--mode", choices=[m.value for m in Mode], help="learning rule (overrides the config)")
    r.add_argument("--seeds", type=int, nargs="+", help="run once per seed, each in its own subdirectory")
    r.add_argument("--jobs", type=int, default=1, help="parallel processes for --seeds")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", parents=[common], help="covariance matrices and per-channel scores")
    a.add_argument("--raster", required=True, help="raster CSV")
    a.add_argument("--matrices", nargs="*", choices=MATRIX_KINDS, default=list(MATRIX_KINDS),
                   help="matrices to write (default: both)")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("theory", parents=[common], help="rate sweep and learning-condition verdicts")
    t.add_argument("--config", required=True, help="theory params file or preset name")
    t.add_argument("--mode", choices=[m.value for m in Mode], help="evaluate one mode only")
    t.set_defaults(func=cmd_theory)

    i = sub.add_parser("ingest", parents=[common], help="binarize a station CSV and optionally cluster it")
    i.add_argument("--input", required=True, help="CSV with station,hour,value columns")
    i.add_argument("--threshold", type=float, default=0.0, help="event if value > threshold")
    i.add_argument("--k", type=int, default=0, help="number of k-means clusters (0 = skip)")
    i.set_defaults(func=cmd_ingest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (InvalidInputError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FSTDPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
