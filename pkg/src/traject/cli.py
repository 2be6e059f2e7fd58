"""Command-line front end.

Subcommands compose via files so each analysis stage is independently
scriptable: ``project`` turns raw activation dumps into a trajectory
bundle, the report subcommands (``simplify``, ``multiscale``, ``band``,
``rank``, ``select``, ``plot-pca``) consume a bundle, and ``pipeline``
chains the lot.  Reports are JSON (the machine contract), a CSV table of
the per-layer columns, and an SVG figure.  All layer indices in machine
output are 0-based and every JSON report says so.

Every subcommand is deterministic given its arguments (seed included):
repeated runs produce byte-identical JSON.  Errors print
``ERROR:<kind>: message`` to stderr and exit nonzero.  Setting
TRAJECT_NO_PARALLEL=1 forces sequential per-sample analysis.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import band as band_mod
from . import formats, plots
from .errors import FormatError, TrajectError, UsageError
from .multiscale import default_targets, ensemble_vote, epsilon_for_target, multiscale_analyze
from .ranking import (
    DEFAULT_BASE_RANK,
    DEFAULT_BETA,
    DEFAULT_LORA_ALPHA,
    STRATEGIES,
    build_plan,
    choose_k,
    importance_index,
)
from .rdp import rdp
from .trajectory import Trajectory, TrajectoryEnsemble, aggregate_mean, project_attention_weighted

INDEXING_NOTE = "0-based"

#: Default target for the pivot-frequency histogram figure.
DEFAULT_HIST_TARGET = 6


def _write_json(payload: dict, path: Path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def parse_targets(expr: str, n_layers: int) -> tuple[int, ...]:
    """Parse a target-set flag: ``3..L``, ``3..12`` or ``3,5,7``."""
    expr = expr.strip()
    if not expr:
        raise UsageError("empty --targets expression")
    if ".." in expr:
        lo_s, _, hi_s = expr.partition("..")
        try:
            lo = int(lo_s)
            hi = n_layers if hi_s.strip() == "L" else int(hi_s)
        except ValueError as exc:
            raise UsageError(f"bad --targets range {expr!r}; expected e.g. 3..L or 3..12") from exc
        if hi < lo:
            raise UsageError(f"--targets range {expr!r} is empty")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(sorted({int(tok) for tok in expr.split(",") if tok.strip()}))
    except ValueError as exc:
        raise UsageError(f"bad --targets list {expr!r}; expected comma-separated integers") from exc


def _load_ensemble_arg(path: str) -> TrajectoryEnsemble:
    return formats.load_ensemble(path)


def _mean_trajectory(ensemble: TrajectoryEnsemble) -> Trajectory:
    return aggregate_mean(ensemble)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_project(args) -> int:
    """Project raw activation files into one trajectory bundle."""
    out = _outdir(args)
    inputs: list[tuple[str, str]] = []  # (sample_id, path)
    for raw in args.inputs:
        if raw.endswith(".jsonl"):
            for record in formats.load_manifest(raw):
                inputs.append((str(record["sample_id"]), record["path"]))
        else:
            inputs.append(("", raw))

    trajectories: list[Trajectory] = []
    shape: tuple[int, int] | None = None
    for sample_id, path in inputs:
        bundle = formats.load_bundle(path)
        traj = project_attention_weighted(bundle)
        sid = sample_id or bundle.sample_id or f"sample_{len(trajectories)}"
        traj = Trajectory(traj.points, meta=sid)
        if shape is None:
            shape = (traj.n_layers, traj.dim)
        elif (traj.n_layers, traj.dim) != shape:
            raise FormatError(
                f"dimension disagreement: expected (L={shape[0]}, D={shape[1]}) but "
                f"got (L={traj.n_layers}, D={traj.dim})",
                path=path,
            )
        trajectories.append(traj)

    ensemble = TrajectoryEnsemble(tuple(trajectories))
    bundle_path = out / "bundle.trjb"
    formats.save_ensemble(ensemble, bundle_path)
    _write_json(
        {
            "n_samples": ensemble.n_samples,
            "n_layers": ensemble.n_layers,
            "dim": ensemble.dim,
            "sample_ids": [t.meta for t in ensemble.trajectories],
            "bundle": bundle_path.name,
            "layer_indexing": INDEXING_NOTE,
        },
        out / "project.json",
    )
    print(f"wrote {bundle_path} (S={ensemble.n_samples}, L={ensemble.n_layers}, D={ensemble.dim})")
    return 0


def cmd_simplify(args) -> int:
    """Simplify the mean trajectory at a fixed epsilon or a target count."""
    if (args.epsilon is None) == (args.target is None):
        raise UsageError("simplify needs exactly one of --epsilon or --target")
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    out = _outdir(args)

    if args.epsilon is not None:
        result = rdp(mean, args.epsilon)
        epsilon, kept = result.epsilon, result.kept_indices
    else:
        epsilon, kept = epsilon_for_target(mean, args.target)

    _write_json(
        {
            "epsilon": epsilon,
            "target": args.target,
            "kept_indices": list(kept),
            "n_kept": len(kept),
            "n_layers": mean.n_layers,
            "n_samples": ensemble.n_samples,
            "layer_indexing": INDEXING_NOTE,
        },
        out / "simplify.json",
    )
    kept_set = set(kept)
    _write_csv(
        out / "simplify.csv",
        ["layer", "kept"],
        [[l, int(l in kept_set)] for l in range(mean.n_layers)],
    )
    plots.plot_simplified(mean.points, kept, epsilon, out / "simplify.svg")
    print(f"kept {len(kept)}/{mean.n_layers} layers at epsilon={epsilon:.6g}")
    return 0


def _resolve_hist_target(requested, targets):
    if requested is not None:
        if requested not in targets:
            raise UsageError(
                f"--hist-target {requested} not in the analyzed targets {targets[0]}..{targets[-1]}"
            )
        return int(requested), False
    if DEFAULT_HIST_TARGET in targets:
        return DEFAULT_HIST_TARGET, False
    return int(targets[0]), True


def cmd_multiscale(args) -> int:
    """Multi-scale pivot analysis: scores, thresholds, histograms."""
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    targets = parse_targets(args.targets, mean.n_layers)
    out = _outdir(args)

    mean_result = multiscale_analyze(mean, targets)
    vote_scores, histograms = ensemble_vote(ensemble, targets)
    hist_target, fell_back = _resolve_hist_target(args.hist_target, mean_result.targets)

    payload = mean_result.to_dict()
    payload["mean_trajectory_scores"] = payload["scores"]
    payload["scores"] = [float(s) for s in vote_scores]
    payload["interior_scores"] = [float(s) for s in vote_scores[1:-1]]
    payload["interior_layers"] = list(range(1, mean.n_layers - 1))
    payload["histograms"] = {str(t): histograms[t].to_list() for t in mean_result.targets}
    payload["hist_target"] = hist_target
    payload["hist_target_fallback"] = fell_back
    payload["n_samples"] = ensemble.n_samples
    payload["layer_indexing"] = INDEXING_NOTE
    _write_json(payload, out / "multiscale.json")

    counts = histograms[hist_target].counts
    _write_csv(
        out / "multiscale.csv",
        ["layer", "score", f"pivot_count_t{hist_target}"],
        [[l, float(vote_scores[l]), int(counts[l])] for l in range(mean.n_layers)],
    )
    plots.plot_multiscale(vote_scores, counts, hist_target, out / "multiscale.svg")
    print(f"analyzed {len(mean_result.targets)} targets over {ensemble.n_samples} sample(s)")
    return 0


def _band_report(args, mean: Trajectory):
    return band_mod.extract_band(
        mean,
        alpha=args.alpha,
        window=args.window,
        polyorder=args.polyorder,
        bins=args.bins,
        threshold_on=args.threshold_on,
    )


def cmd_band(args) -> int:
    """Hybrid-signal band extraction on the ensemble-mean trajectory."""
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    out = _outdir(args)
    report = _band_report(args, mean)

    payload = report.to_dict()
    payload.update(
        {
            "window": args.window,
            "polyorder": args.polyorder,
            "bins": args.bins,
            "n_samples": ensemble.n_samples,
            "layer_indexing": INDEXING_NOTE,
        }
    )
    _write_json(payload, out / "band.json")
    lo, hi = report.band
    _write_csv(
        out / "band.csv",
        ["layer", "dev", "vel", "raw_signal", "smoothed", "in_band"],
        [
            [l, float(report.dev[l]), float(report.vel[l]), float(report.raw_signal[l]),
             float(report.smoothed[l]), int(lo <= l <= hi)]
            for l in range(mean.n_layers)
        ],
    )
    plots.plot_band(report, out / "band.svg")
    print(f"band=[{lo}, {hi}] tau={report.tau:.6g}" + (" (degenerate)" if report.degenerate else ""))
    return 0


def _compute_ranking(args, ensemble: TrajectoryEnsemble, mean: Trajectory):
    targets = parse_targets(args.targets, mean.n_layers)
    omega, _hist = ensemble_vote(ensemble, targets)
    if getattr(args, "vel_per_sample", False):
        vel = np.mean(
            np.stack([band_mod.velocity_profile(t) for t in ensemble.trajectories]), axis=0
        )
        vel_mode = "per_sample_mean"
    else:
        vel = band_mod.velocity_profile(mean)
        vel_mode = "mean_trajectory"
    return importance_index(omega, vel, beta=args.beta), omega, vel, vel_mode


def cmd_rank(args) -> int:
    """Structural importance index over all layers."""
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    out = _outdir(args)
    ranking, omega, vel, vel_mode = _compute_ranking(args, ensemble, mean)

    payload = ranking.to_dict()
    payload.update(
        {
            "omega": [float(x) for x in omega],
            "vel": [float(x) for x in vel],
            "vel_mode": vel_mode,
            "n_samples": ensemble.n_samples,
            "layer_indexing": INDEXING_NOTE,
        }
    )
    _write_json(payload, out / "rank.json")
    position = {l: p for p, l in enumerate(ranking.order)}
    _write_csv(
        out / "rank.csv",
        ["layer", "importance", "omega", "vel", "rank_position"],
        [
            [l, float(ranking.index[l]), float(omega[l]), float(vel[l]), position[l]]
            for l in range(mean.n_layers)
        ],
    )
    top = ", ".join(str(l) for l in ranking.order[:5])
    print(f"top layers by importance: {top}")
    return 0


def cmd_select(args) -> int:
    """Emit an adaptation plan for one strategy."""
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    out = _outdir(args)

    ranking, _omega, _vel, _mode = _compute_ranking(args, ensemble, mean)
    geometry_family = ("geometry_selected", "geometry_weighted", "reduced_geometry_weighted")
    needs_band = (
        args.strategy in ("inverse_geometry", "reasoning_band")
        or (args.strategy in geometry_family and not args.no_band_restrict)
        or (args.k is None and args.strategy not in ("none", "full", "reasoning_band"))
    )
    band = None
    if needs_band:
        band = _band_report(args, mean).band

    k = args.k
    if k is None and args.strategy not in ("none", "full", "reasoning_band"):
        k = choose_k(band)
    plan = build_plan(
        args.strategy,
        ranking=ranking,
        band=band,
        k=k,
        base_rank=args.base_rank,
        lora_alpha=args.lora_alpha,
        seed=args.seed,
        restrict_to_band=not args.no_band_restrict,
        include_endpoints=args.include_endpoints,
    )
    payload = plan.to_dict()
    payload.update(
        {
            "k": k,
            "band": None if band is None else [int(band[0]), int(band[1])],
            "n_layers": mean.n_layers,
            "n_samples": ensemble.n_samples,
            "layer_indexing": INDEXING_NOTE,
        }
    )
    _write_json(payload, out / "plan.json")
    print(f"strategy={plan.strategy}: {len(plan.layers)} layers")
    return 0


def cmd_plot_pca(args) -> int:
    """PCA-projected trajectory figure with the band highlighted."""
    ensemble = _load_ensemble_arg(args.bundle)
    mean = _mean_trajectory(ensemble)
    out = _outdir(args)

    band = None
    band_note = None
    try:
        band = _band_report(args, mean).band
    except UsageError as exc:
        band_note = f"band skipped: {exc}"

    proj, ratio, degenerate = plots.pca_project(mean.points, args.components)
    plots.plot_pca_trajectory(mean, band, out / "trajectory_pca.svg", n_components=args.components)
    _write_json(
        {
            "components": int(proj.shape[1]),
            "explained_variance_ratio": [float(r) for r in ratio],
            "degenerate": bool(degenerate),
            "band": None if band is None else [int(band[0]), int(band[1])],
            "band_note": band_note,
            "n_samples": ensemble.n_samples,
            "layer_indexing": INDEXING_NOTE,
        },
        out / "pca.json",
    )
    header = ["layer"] + [f"pc{j + 1}" for j in range(proj.shape[1])]
    _write_csv(
        out / "pca.csv",
        header,
        [[l] + [float(x) for x in proj[l]] for l in range(mean.n_layers)],
    )
    if degenerate:
        print("warning: zero-variance trajectory, degenerate single-point plot", file=sys.stderr)
    print(f"wrote {out / 'trajectory_pca.svg'}")
    return 0


def cmd_pipeline(args) -> int:
    """project (when given raw input) then multiscale, band, rank, select, plot-pca."""
    first = args.inputs[0]
    with open(first, "rb") as fh:
        is_bundle = fh.read(4) == formats.TRJB_MAGIC
    if is_bundle and len(args.inputs) > 1:
        raise UsageError("pipeline takes a single bundle or a set of raw activation inputs")

    if not is_bundle:
        rc = cmd_project(args)
        if rc != 0:
            return rc
        args.bundle = str(Path(args.out) / "bundle.trjb")
    else:
        args.bundle = first

    for step in (cmd_multiscale, cmd_band, cmd_rank, cmd_select, cmd_plot_pca):
        rc = step(args)
        if rc != 0:
            return rc
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traject",
        description="Layer-trajectory geometry analysis and layer-adaptation planning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="traject_out", help="output directory (default: %(default)s)")

    band_opts = argparse.ArgumentParser(add_help=False)
    band_opts.add_argument("--alpha", type=float, default=band_mod.DEFAULT_ALPHA,
                           help="deviation/velocity mix weight in [0,1] (default: %(default)s)")
    band_opts.add_argument("--window", type=int, default=band_mod.DEFAULT_WINDOW,
                           help="odd smoothing window length (default: %(default)s)")
    band_opts.add_argument("--polyorder", type=int, default=band_mod.DEFAULT_POLYORDER,
                           help="smoothing polynomial order (default: %(default)s)")
    band_opts.add_argument("--bins", type=int, default=band_mod.DEFAULT_BINS,
                           help="threshold histogram bins (default: %(default)s)")
    band_opts.add_argument("--threshold-on", choices=("smoothed", "raw"), default="smoothed",
                           help="signal the adaptive threshold applies to (default: %(default)s)")

    rank_opts = argparse.ArgumentParser(add_help=False)
    rank_opts.add_argument("--beta", type=float, default=DEFAULT_BETA,
                           help="pivot-score/velocity mix weight in [0,1] (default: %(default)s)")
    rank_opts.add_argument("--targets", default="3..L",
                           help="target counts: '3..L', '3..12' or '3,5,7' (default: %(default)s)")
    rank_opts.add_argument("--vel-per-sample", action="store_true",
                           help="average per-sample velocity profiles instead of using the mean trajectory")

    p = sub.add_parser("project", parents=[common],
                       help="project raw activation files (.ract or manifest .jsonl) into a bundle")
    p.add_argument("inputs", nargs="+", help=".ract files and/or a manifest.jsonl")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("simplify", parents=[common],
                       help="simplify the mean trajectory at --epsilon or --target")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.add_argument("--epsilon", type=float, default=None, help="fixed distance threshold")
    p.add_argument("--target", type=int, default=None, help="desired retained point count (>= 3)")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("multiscale", parents=[common, rank_opts],
                       help="multi-scale pivot scores and per-target histograms")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.add_argument("--hist-target", type=int, default=None,
                   help=f"target for the histogram figure (default: {DEFAULT_HIST_TARGET} when available)")
    p.set_defaults(func=cmd_multiscale)

    p = sub.add_parser("band", parents=[common, band_opts],
                       help="hybrid-signal band extraction")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("rank", parents=[common, rank_opts],
                       help="structural importance index per layer")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("select", parents=[common, band_opts, rank_opts],
                       help="emit a layer-adaptation plan")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--k", type=int, default=None,
                   help="layer budget (default: half the band width)")
    p.add_argument("--base-rank", type=int, default=DEFAULT_BASE_RANK,
                   help="adapter rank (default: %(default)s)")
    p.add_argument("--lora-alpha", type=int, default=DEFAULT_LORA_ALPHA,
                   help="adapter alpha (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="seed for random_sparse")
    p.add_argument("--no-band-restrict", action="store_true",
                   help="rank top-k over all layers instead of band layers")
    p.add_argument("--include-endpoints", action="store_true",
                   help="allow trajectory endpoints as top-k candidates")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("plot-pca", parents=[common, band_opts],
                       help="PCA-projected trajectory figure (visualization only)")
    p.add_argument("bundle", help="trajectory bundle (.trjb)")
    p.add_argument("--components", type=int, choices=(2, 3), default=3)
    p.set_defaults(func=cmd_plot_pca)

    p = sub.add_parser("pipeline", parents=[common, band_opts, rank_opts],
                       help="project (if raw input) then multiscale, band, rank, select, plot-pca")
    p.add_argument("inputs", nargs="+", help="a .trjb bundle, or .ract files / manifest.jsonl")
    p.add_argument("--hist-target", type=int, default=None)
    p.add_argument("--strategy", default="geometry_selected", choices=STRATEGIES)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--base-rank", type=int, default=DEFAULT_BASE_RANK)
    p.add_argument("--lora-alpha", type=int, default=DEFAULT_LORA_ALPHA)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-band-restrict", action="store_true")
    p.add_argument("--include-endpoints", action="store_true")
    p.add_argument("--components", type=int, choices=(2, 3), default=3)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrajectError as exc:
        print(f"ERROR:{exc.kind}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR:io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
