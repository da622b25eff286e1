"""Command-line surface.

Stages read their predecessors' artifacts from the output directory and
write their own plus a manifest, so each stage is independently
re-runnable:

    mrfcs phantom     --out DIR --seed N [--config FILE]
    mrfcs dict        --out DIR [--config FILE]
    mrfcs acquire     --out DIR --seed N
    mrfcs train-metric --out DIR --seed N
    mrfcs reconstruct --out DIR --seed N --method mrf|csmrf|csmrf_ml|blip|oracle
    mrfcs evaluate    --out DIR --est PREFIX --truth PREFIX
    mrfcs study       --out DIR ratio|length|strategy|metric
    mrfcs export      --map FILE --pgm FILE [--anchor LO HI]
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .config import ConfigError, ExperimentConfig, load_experiment_config
from .evaluate import MAP_NAMES, score_run, write_aggregate_csv, write_score_rows
from .experiments import (aggregate_runs, build_dict, build_sequence, masks_for,
                          matching_accuracy, measurements_for, phantom_maps, run_seeds,
                          train_metric_for)
from .sampling import write_mask_text
from .sequence import write_sequence_csv


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MRF_THREADS")
    return max(1, int(env)) if env else 1


def _config(args) -> ExperimentConfig:
    return load_experiment_config(args.config)


def _ensure_out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _manifest(path, cfg: ExperimentConfig, **extra):
    entries = {"config": repr(cfg)}
    entries.update(extra)
    io.write_manifest(path, entries)


def cmd_phantom(args):
    cfg = _config(args)
    out = _ensure_out(args)
    from .phantom import synth_label_map
    labels = synth_label_map(cfg.rows, cfg.cols, args.seed)
    maps = phantom_maps(cfg, args.seed)
    io.write_label_map(os.path.join(out, f"labels_{args.seed}.mrfm"), labels)
    io.write_parameter_maps(os.path.join(out, f"truth_{args.seed}"), maps)
    _manifest(os.path.join(out, f"manifest_phantom_{args.seed}.txt"), cfg,
              stage="phantom", seed=args.seed)
    if args.verbose:
        print(f"phantom seed {args.seed}: {cfg.rows}x{cfg.cols} written to {out}")


def cmd_dict(args):
    cfg = _config(args)
    out = _ensure_out(args)
    seq = build_sequence(cfg)
    dictionary = build_dict(cfg, seq)
    io.write_dictionary(os.path.join(out, "dictionary.mrfd"), dictionary)
    write_sequence_csv(seq, os.path.join(out, "sequence.csv"))
    _manifest(os.path.join(out, "manifest_dict.txt"), cfg, stage="dict",
              atoms=dictionary.size, frames=dictionary.length)
    if args.verbose:
        print(f"dictionary: {dictionary.size} atoms x {dictionary.length} frames")


def cmd_acquire(args):
    cfg = _config(args)
    out = _ensure_out(args)
    seq = build_sequence(cfg)
    maps = io.read_parameter_maps(os.path.join(out, f"truth_{args.seed}"))
    masks = masks_for(cfg, args.seed)
    meas = measurements_for(cfg, maps, seq, masks, noise_seed=args.seed)
    io.write_measurements(os.path.join(out, f"measurements_{args.seed}.mrfy"), meas,
                          n_per_frame=cfg.rows_per_frame, c=cfg.center_rows)
    write_mask_text(masks, os.path.join(out, f"masks_{args.seed}.txt"),
                    n_per_frame=cfg.rows_per_frame, c=cfg.center_rows)
    _manifest(os.path.join(out, f"manifest_acquire_{args.seed}.txt"), cfg,
              stage="acquire", seed=args.seed, noise_sigma=cfg.noise_sigma)
    if args.verbose:
        print(f"acquired {meas.length} frames at seed {args.seed}")


def cmd_train_metric(args):
    cfg = _config(args)
    out = _ensure_out(args)
    seq = build_sequence(cfg)
    dictionary = io.read_dictionary(os.path.join(out, "dictionary.mrfd"))
    masks = masks_for(cfg, args.seed)
    metric = train_metric_for(cfg, seq, dictionary, args.seed, masks=masks)
    io.write_metric(os.path.join(out, f"metric_{args.seed}.mrfa"), metric)
    _manifest(os.path.join(out, f"manifest_metric_{args.seed}.txt"), cfg,
              stage="train-metric", seed=args.seed,
              train_seed=args.seed + cfg.train_seed_offset, ridge=metric.ridge)
    if args.verbose:
        print(f"metric trained (dim {metric.dim}, ridge {metric.ridge:g})")


def cmd_reconstruct(args):
    cfg = _config(args)
    out = _ensure_out(args)
    dictionary = io.read_dictionary(os.path.join(out, "dictionary.mrfd"))
    meas = io.read_measurements(os.path.join(out, f"measurements_{args.seed}.mrfy"))
    metric = None
    if args.method == "csmrf_ml":
        metric = io.read_metric(os.path.join(out, f"metric_{args.seed}.mrfa"))
    prefix = os.path.join(out, f"est_{args.method}_{args.seed}")
    if args.verbose and args.method in ("csmrf", "csmrf_ml"):
        from .csrecon import write_trace_csv
        from .experiments import pipeline_config
        from .pipeline import run_csmrf
        result = run_csmrf(meas, dictionary, metric=metric, cfg=pipeline_config(cfg),
                           record_trace=True)
        write_trace_csv(result.solver, prefix + "_trace.csv")
    else:
        from .experiments import run_method
        result = run_method(args.method, cfg, meas, dictionary, metric)
    io.write_parameter_maps(prefix, result.maps)
    io.write_map(prefix + "_atoms.mrfm", result.atom_map)
    _manifest(os.path.join(out, f"manifest_reconstruct_{args.method}_{args.seed}.txt"),
              cfg, stage="reconstruct", method=args.method, seed=args.seed)
    if args.verbose:
        print(f"{args.method} estimate written under {prefix}_*")


def cmd_evaluate(args):
    cfg = _config(args)
    out = _ensure_out(args)
    est = io.read_parameter_maps(args.est)
    truth = io.read_parameter_maps(args.truth)
    scores = score_run(est, truth)
    rows = [(args.method or "estimate", args.seed, name, scores[name])
            for name in MAP_NAMES]
    path = os.path.join(out, args.scores_csv)
    write_score_rows(path, rows)
    for name in MAP_NAMES:
        s = scores[name]
        print(f"{name}: psnr {s.psnr:.2f} dB, ssim {s.ssim:.4f}")
    if args.verbose:
        print(f"scores written to {path}")


def _study_configs(study, cfg: ExperimentConfig):
    if study == "ratio":
        rows_sweep = sorted({max(2, r) for r in
                             (2, 3, 4, 5, 6) if r <= cfg.rows // 2})
        for r in rows_sweep:
            c = min(cfg.center_rows, r)
            yield f"rows={r}", replace(cfg, rows_per_frame=r, center_rows=c)
    elif study == "length":
        for frames in (100, 200, 300):
            yield f"frames={frames}", replace(cfg, frames=frames)
    elif study == "strategy":
        yield "independent", replace(cfg, strategy="independent")
        for c in (2, 4, 6, 8):
            if cfg.rows >= 2 * cfg.rows_per_frame - c:
                yield f"conditional c={c}", replace(cfg, strategy="conditional", center_rows=c)
    elif study == "metric":
        yield "l2", replace(cfg, methods=("mrf", "csmrf"))
        yield "rca", replace(cfg, methods=("mrf", "csmrf_ml"))
    else:
        raise ConfigError(f"unknown study {study!r}")


def cmd_study(args):
    cfg = _config(args)
    out = _ensure_out(args)
    threads = _threads(args)
    table = []
    acc_rows = []
    for label, sub_cfg in _study_configs(args.study, cfg):
        runs = run_seeds(sub_cfg, threads=threads)
        agg = aggregate_runs(runs)
        for (method, name), stats in agg.items():
            table.append((f"{label}/{method}", name, stats))
        for method in sub_cfg.methods:
            accs = [matching_accuracy(runs[s][method][0], runs[s].assignment)
                    for s in runs]
            acc_rows.append((label, method, float(np.mean(accs)), float(np.std(accs))))
        first_seed = sub_cfg.seeds[0]
        truth = runs[first_seed].truth
        anchors = {name: (truth.as_dict()[name].min(), truth.as_dict()[name].max())
                   for name in MAP_NAMES}
        safe = label.replace("=", "").replace(" ", "_").replace("/", "_")
        for method in sub_cfg.methods:
            est = runs[first_seed][method][0].maps.as_dict()
            for name in MAP_NAMES:
                io.export_pgm(est[name], os.path.join(out, f"{args.study}_{safe}_{method}_{name}.pgm"),
                              anchor=anchors[name])
        if args.verbose:
            print(f"study setting {label} done")
    write_aggregate_csv(os.path.join(out, f"study_{args.study}.csv"), table)
    with open(os.path.join(out, f"study_{args.study}_accuracy.csv"), "w") as fh:
        fh.write("setting,method,accuracy_mean,accuracy_std\n")
        for label, method, mean, std in acc_rows:
            fh.write(f"{label},{method},{mean!r},{std!r}\n")
    _manifest(os.path.join(out, f"manifest_study_{args.study}.txt"), cfg,
              stage="study", study=args.study, threads=threads)
    print(f"study '{args.study}' aggregate written to {out}")


def cmd_export(args):
    array = io.read_map(args.map)
    anchor = tuple(args.anchor) if args.anchor else None
    io.export_pgm(array, args.pgm, anchor=anchor)
    print(f"wrote {args.pgm}")


def build_parser():
    parser = argparse.ArgumentParser(prog="mrfcs", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=None, help="experiment config file")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="study parallelism (MRF_THREADS env as fallback)")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("phantom").set_defaults(func=cmd_phantom)
    sub.add_parser("dict").set_defaults(func=cmd_dict)
    sub.add_parser("acquire").set_defaults(func=cmd_acquire)
    sub.add_parser("train-metric").set_defaults(func=cmd_train_metric)

    rec = sub.add_parser("reconstruct")
    rec.add_argument("--method", required=True,
                     choices=("mrf", "csmrf", "csmrf_ml", "blip", "oracle"))
    rec.set_defaults(func=cmd_reconstruct)

    ev = sub.add_parser("evaluate")
    ev.add_argument("--est", required=True, help="estimate map prefix")
    ev.add_argument("--truth", required=True, help="truth map prefix")
    ev.add_argument("--method", default=None)
    ev.add_argument("--scores-csv", default="scores.csv")
    ev.set_defaults(func=cmd_evaluate)

    st = sub.add_parser("study")
    st.add_argument("study", choices=("ratio", "length", "strategy", "metric"))
    st.set_defaults(func=cmd_study)

    ex = sub.add_parser("export")
    ex.add_argument("--map", required=True)
    ex.add_argument("--pgm", required=True)
    ex.add_argument("--anchor", type=float, nargs=2, default=None)
    ex.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
