"""Batch command-line front end.

Subcommands: ``protect`` (make a dataset class-wise unlearnable and emit the
restoration message), ``restore`` (invert a protection run), ``defend``
(apply a preprocessing baseline), ``explore`` (execution-mode experiments),
and ``theory`` (numerical verification of the mixture analysis).

Commands are deterministic: fixed flags and seed give byte-identical
artifacts regardless of worker count.  No command leaves partial outputs
behind on failure; datasets are staged in a scratch directory and renamed
into place only after every file is written.

Exit codes: 0 success, 1 validation error, 2 IO or parse error, 3 a
reference value deviated beyond tolerance in the theory checks.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from pcveil.allocation import AllocationConfig, allocation_count
from pcveil.defenses import DEFENSE_METHODS, AdaptiveConfig, DefenseConfig, apply_defense
from pcveil.errors import InvalidParameterError, ParseError, PcveilError
from pcveil.explore import FAMILIES, MODES, ExploreConfig, explore_dataset
from pcveil.pipeline import build_message, parse_message, protect, restore, serialize_message
from pcveil.storage import load_dataset, save_dataset
from pcveil import theory

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_TOLERANCE = 3

GTABLE_TOL = 1e-3  # reference values are rounded to three decimals

SEED_HELP = "master random seed (common presets: 23, 1023, 2023)"


@contextmanager
def _staged_dir(out_dir: Path, force: bool):
    """Stage output in a scratch dir; rename into place only on success."""
    out_dir = Path(out_dir)
    if out_dir.exists() and not force:
        raise InvalidParameterError(f"output directory {out_dir} exists (pass --force to replace it)")
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = out_dir.parent / f".{out_dir.name}.staging"
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir()
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    if out_dir.exists():
        shutil.rmtree(out_dir)
    staging.rename(out_dir)


def _write_text_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.staging"
    tmp.write_text(text, encoding="utf-8", newline="\n")
    tmp.replace(path)


def _report_remap(mapping: dict[int, int]) -> None:
    if any(old != new for old, new in mapping.items()):
        joined = ",".join(f"{old}:{new}" for old, new in sorted(mapping.items()))
        print(f"class_remap={joined}")


def _alloc_config(args) -> AllocationConfig:
    return AllocationConfig(
        kinds=tuple(args.kinds),
        slight_deg=args.slight_deg,
        primary_deg=args.primary_deg,
        scale_lo=args.scale_lo,
        scale_hi=args.scale_hi,
        twist_lo_deg=args.twist_lo_deg,
        twist_hi_deg=args.twist_hi_deg,
        shear_lo=args.shear_lo,
        shear_hi=args.shear_hi,
        shear_plane=args.shear_plane,
        seed=args.seed,
    )


def _cmd_protect(args) -> int:
    config = _alloc_config(args)
    dataset, manifest, mapping = load_dataset(args.manifest)
    _report_remap(mapping)
    n_classes = len(manifest.class_ids())
    if n_classes == 0:
        raise InvalidParameterError("dataset has no samples")
    message = build_message(n_classes, config)
    protected = protect(dataset, message, workers=args.workers)
    with _staged_dir(Path(args.out), args.force) as staging:
        save_dataset(protected, manifest, staging)
    _write_text_atomic(Path(args.message), serialize_message(message))
    print(f"classes={n_classes}")
    print(f"kinds={''.join(config.kinds)}")
    print(f"k={len(config.kinds)}")
    print(f"allocation_grid={allocation_count(n_classes)}")
    for line in serialize_message(message).splitlines()[2:]:
        print(line)
    return EXIT_OK


def _cmd_restore(args) -> int:
    message = parse_message(Path(args.message).read_text(encoding="utf-8"))
    dataset, manifest, mapping = load_dataset(args.manifest)
    _report_remap(mapping)
    restored = restore(dataset, message, workers=args.workers)
    with _staged_dir(Path(args.out), args.force) as staging:
        save_dataset(restored, manifest, staging)
    print(f"samples={len(restored)}")
    if args.verify_against:
        original, _, _ = load_dataset(args.verify_against)
        if len(original) != len(restored):
            raise InvalidParameterError(
                f"verification dataset has {len(original)} samples, restored has {len(restored)}"
            )
        worst = 0.0
        for (got, _), (want, _) in zip(restored.samples, original.samples):
            if got.shape != want.shape:
                raise InvalidParameterError("verification dataset has mismatched point counts")
            worst = max(worst, float(np.max(np.abs(got - want))))
        print(f"verify_max_error={worst:.17g}")
    return EXIT_OK


def _cmd_defend(args) -> int:
    adaptive = AdaptiveConfig(
        kinds=tuple(args.rswh_kinds),
        rot_lo_deg=args.rot_lo_deg,
        rot_hi_deg=args.rot_hi_deg,
        scale_lo=args.scale_lo,
        scale_hi=args.scale_hi,
        twist_lo_deg=args.twist_lo_deg,
        twist_hi_deg=args.twist_hi_deg,
        shear_lo=args.shear_lo,
        shear_hi=args.shear_hi,
    )
    config = DefenseConfig(
        method=args.method,
        seed=args.seed,
        sor_k=args.k,
        sor_alpha=args.alpha,
        srs_drop=args.drop,
        jitter_std=args.std,
        jitter_clip=args.clip,
        scale_lo=args.scale_lo,
        scale_hi=args.scale_hi,
        adaptive=adaptive,
    )
    dataset, manifest, mapping = load_dataset(args.manifest)
    _report_remap(mapping)
    defended = apply_defense(dataset, config, workers=args.workers)
    with _staged_dir(Path(args.out), args.force) as staging:
        save_dataset(defended, manifest, staging)
    print(f"method={config.method}")
    print(f"samples={len(defended)}")
    return EXIT_OK


def _cmd_explore(args) -> int:
    config = ExploreConfig(
        family=args.family,
        mode=args.mode,
        seed=args.seed,
        slight_deg=args.slight_deg,
        primary_deg=args.primary_deg,
        scale_lo=args.scale_lo,
        scale_hi=args.scale_hi,
        twist_lo_deg=args.twist_lo_deg,
        twist_hi_deg=args.twist_hi_deg,
        shear_lo=args.shear_lo,
        shear_hi=args.shear_hi,
        shear_plane=args.shear_plane,
        eta_lo_deg=args.eta_lo_deg,
        eta_hi_deg=args.eta_hi_deg,
        shift_lo=args.shift_lo,
        shift_hi=args.shift_hi,
        angle_lo_deg=args.angle_lo_deg,
        angle_hi_deg=args.angle_hi_deg,
        angle_deg=args.angle_deg,
        scale=args.scale,
        shear_s=args.shear_s,
        shear_t=args.shear_t,
        twist_deg=args.twist_deg,
        eta_deg=args.eta_deg,
        shift=args.shift,
        reflection_plane=args.reflection_plane,
    )
    dataset, manifest, mapping = load_dataset(args.manifest)
    _report_remap(mapping)
    explored, message = explore_dataset(dataset, config, workers=args.workers)
    if args.message and message is None:
        raise InvalidParameterError(
            f"--message requires class mode with an allocatable family, not {args.mode}/{args.family}"
        )
    with _staged_dir(Path(args.out), args.force) as staging:
        save_dataset(explored, manifest, staging)
    if args.message and message is not None:
        _write_text_atomic(Path(args.message), serialize_message(message))
    print(f"family={config.family}")
    print(f"mode={config.mode}")
    print(f"samples={len(explored)}")
    return EXIT_OK


def _theory_lines(args) -> tuple[list[str], list[str]]:
    """All theory-report key=value lines plus any tolerance failures."""
    lines: list[str] = []
    failures: list[str] = []
    d = 3

    worst = 0.0
    for (alpha, beta, t), expected in theory.BOUND_EXPONENT_REFERENCE.items():
        got = theory.bound_exponent(alpha, beta, d, t)
        err = abs(got - expected)
        worst = max(worst, err)
        lines.append(f"gtable[alpha={alpha:.3g},beta={beta:g},t={t:g}]={got:.17g}")
        if err > GTABLE_TOL:
            failures.append(f"bound exponent at alpha={alpha:.3g}, beta={beta:g}, t={t:g}: "
                            f"{got:.6f} vs reference {expected}")
    lines.append(f"gtable_max_abs_err={worst:.17g}")

    for alpha, beta in ((0.5, -4.0), (1.0 / 3.0, -10.0)):
        term0 = theory.bound_term(alpha, beta, d, 0.0)
        lines.append(f"bound_term_t0[alpha={alpha:.3g},beta={beta:g}]={term0:.17g}")
        if term0 != 0.5:
            failures.append(f"bound term at t=0 must equal 1/2 exactly, got {term0!r}")

    tail_n = min(args.samples, 1_000_000)
    grid = [
        (np.zeros(d), 0.0, 5.0, 0.2),
        (np.zeros(d), 0.0, 10.0, 0.3),
        (np.array([1.0, 0.0, 0.0]), 1.0, 5.0, 0.2),
        (np.array([1.0, 0.0, 0.0]), 1.0, 10.0, 0.3),
        (np.array([0.5, 0.5, 0.5]), -2.0, 5.0, 0.1),
        (np.array([0.5, 0.5, 0.5]), -2.0, 10.0, 0.4),
        (np.array([2.0, -1.0, 0.0]), 0.5, 5.0, 0.2),
        (np.array([2.0, -1.0, 0.0]), 0.5, 10.0, 0.3),
    ]
    for idx, (b, c, gamma, t) in enumerate(grid):
        bound = theory.chernoff_tail_bound(b, c, d, gamma, t)
        freq, se = theory.mc_tail_frequency(b, d, gamma, tail_n, args.seed)
        ok = freq <= bound + 3.0 * se
        lines.append(f"chernoff[{idx}].bound={bound:.17g}")
        lines.append(f"chernoff[{idx}].empirical={freq:.17g}")
        lines.append(f"chernoff[{idx}].ok={str(ok).lower()}")
        if not ok:
            failures.append(f"chernoff grid point {idx}: empirical {freq:.6g} exceeds bound {bound:.6g} + 3 SE")

    mu = np.zeros(args.d)
    mu[0] = args.mu_norm
    lines.append(f"clean_tau={theory.clean_accuracy_closed_form(mu):.17g}")
    if args.mu_norm == 0:
        lines.append("demo=skipped_mu_zero")
        return lines, failures

    transforms = theory.search_unlearnable_config(mu)
    lines.append(f"demo_lam_pos={transforms.lam_pos:.17g}")
    lines.append(f"demo_lam_neg={transforms.lam_neg:.17g}")
    report = theory.accuracy_bound_report(mu, transforms, n=args.samples, seed=args.seed)
    lines.extend(f"demo_{line}" for line in report.lines())
    if not report.conditions_met:
        failures.append("searched configuration no longer satisfies the strict conditions")
    if not report.bound < 1.0:
        failures.append(f"bound {report.bound:.6g} is not below 1")
    if not report.mc_tau_pu < report.clean_tau - 6.0 * report.mc_tau_se:
        failures.append("transformed boundary is not measurably worse than the clean boundary")
    if not report.mc_tau_pu <= report.bound + 3.0 * report.mc_tau_se:
        failures.append("Monte-Carlo accuracy violates the bound")
    return lines, failures


def _cmd_theory(args) -> int:
    lines, failures = _theory_lines(args)
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.report:
        _write_text_atomic(Path(args.report), text)
    if failures:
        for failure in failures:
            print(f"FAIL: {failure}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="input dataset manifest path")
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads; must not affect outputs (default 1)")
    parser.add_argument("--force", action="store_true", help="replace the output directory if it exists")


def _add_alloc_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--slight-deg", type=float, default=15.0,
                        help="upper bound (deg) for the x/y rotation angles (default 15)")
    parser.add_argument("--primary-deg", type=float, default=120.0,
                        help="upper bound (deg) for the z rotation angle (default 120)")
    parser.add_argument("--scale-lo", type=float, default=0.6, help="scaling lower bound (default 0.6)")
    parser.add_argument("--scale-hi", type=float, default=0.8, help="scaling upper bound (default 0.8)")
    parser.add_argument("--twist-lo-deg", type=float, default=0.0, help="twist lower bound, deg (default 0)")
    parser.add_argument("--twist-hi-deg", type=float, default=20.0, help="twist upper bound, deg (default 20)")
    parser.add_argument("--shear-lo", type=float, default=0.0, help="shear lower bound (default 0)")
    parser.add_argument("--shear-hi", type=float, default=0.4, help="shear upper bound (default 0.4)")
    parser.add_argument("--shear-plane", default="xy", choices=("xy", "xz", "yz"),
                        help="shear plane (default xy)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcveil",
        description="Class-wise 3D point-cloud protection, restoration, defenses, and mixture analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protect", help="make a dataset unlearnable and write the restoration message")
    _add_dataset_flags(p)
    p.add_argument("--message", required=True, help="output path for the protection message")
    p.add_argument("--kinds", default="RS",
                   help="transformation kinds, letters from RSWH in canonical order (default RS)")
    p.add_argument("--seed", type=int, default=23, help=SEED_HELP)
    _add_alloc_flags(p)
    p.set_defaults(func=_cmd_protect)

    p = sub.add_parser("restore", help="invert a protection run using its message")
    _add_dataset_flags(p)
    p.add_argument("--message", required=True, help="protection message path")
    p.add_argument("--verify-against", help="original manifest; prints the max round-trip error")
    p.set_defaults(func=_cmd_restore)

    p = sub.add_parser("defend", help="apply a preprocessing baseline to every sample")
    _add_dataset_flags(p)
    p.add_argument("--method", required=True, choices=DEFENSE_METHODS, help="defense method")
    p.add_argument("--seed", type=int, default=23, help=SEED_HELP)
    p.add_argument("--k", type=int, default=2, help="outlier removal: neighbor count (default 2)")
    p.add_argument("--alpha", type=float, default=1.1,
                   help="outlier removal: threshold std multiplier (default 1.1)")
    p.add_argument("--drop", type=int, default=500, help="random sampling: points to drop (default 500)")
    p.add_argument("--std", type=float, default=0.05, help="jitter: Gaussian std (default 0.05)")
    p.add_argument("--clip", type=float, default=0.1, help="jitter: magnitude clamp (default 0.1)")
    p.add_argument("--scale-lo", type=float, default=0.8, help="random scaling lower bound (default 0.8)")
    p.add_argument("--scale-hi", type=float, default=1.25, help="random scaling upper bound (default 1.25)")
    p.add_argument("--rswh-kinds", default="RSWH", help="adaptive method: kinds to compose (default RSWH)")
    p.add_argument("--rot-lo-deg", type=float, default=0.0, help="adaptive rotation lower bound, deg")
    p.add_argument("--rot-hi-deg", type=float, default=360.0, help="adaptive rotation upper bound, deg")
    p.add_argument("--twist-lo-deg", type=float, default=0.0, help="adaptive twist lower bound, deg")
    p.add_argument("--twist-hi-deg", type=float, default=20.0, help="adaptive twist upper bound, deg")
    p.add_argument("--shear-lo", type=float, default=0.0, help="adaptive shear lower bound")
    p.add_argument("--shear-hi", type=float, default=0.4, help="adaptive shear upper bound")
    p.set_defaults(func=_cmd_defend)

    p = sub.add_parser("explore", help="mechanism experiments: one family, one execution mode")
    _add_dataset_flags(p)
    p.add_argument("--family", required=True, choices=FAMILIES, help="transformation family")
    p.add_argument("--mode", required=True, choices=MODES, help="execution mode")
    p.add_argument("--seed", type=int, default=23, help=SEED_HELP)
    p.add_argument("--message", help="write the class-mode message here (class mode, RSWH families only)")
    _add_alloc_flags(p)
    p.add_argument("--eta-lo-deg", type=float, default=0.0, help="taper rate lower bound, deg (default 0)")
    p.add_argument("--eta-hi-deg", type=float, default=50.0, help="taper rate upper bound, deg (default 50)")
    p.add_argument("--shift-lo", type=float, default=0.0, help="translation lower bound (default 0)")
    p.add_argument("--shift-hi", type=float, default=0.3, help="translation upper bound (default 0.3)")
    p.add_argument("--angle-lo-deg", type=float, default=0.0,
                   help="sample mode: rotation angle lower bound, deg (default 0)")
    p.add_argument("--angle-hi-deg", type=float, default=20.0,
                   help="sample mode: rotation angle upper bound, deg (default 20)")
    p.add_argument("--angle-deg", type=float, default=10.0,
                   help="dataset mode: fixed rotation angle for all axes, deg (default 10)")
    p.add_argument("--scale", type=float, default=0.8, help="dataset mode: fixed scaling (default 0.8)")
    p.add_argument("--shear-s", type=float, default=0.2, help="dataset mode: fixed shear s (default 0.2)")
    p.add_argument("--shear-t", type=float, default=0.2, help="dataset mode: fixed shear t (default 0.2)")
    p.add_argument("--twist-deg", type=float, default=25.0,
                   help="dataset mode: fixed twist rate, deg (default 25)")
    p.add_argument("--eta-deg", type=float, default=25.0,
                   help="dataset mode: fixed taper rate, deg (default 25)")
    p.add_argument("--shift", type=float, default=0.15,
                   help="dataset mode: fixed per-axis translation (default 0.15)")
    p.add_argument("--reflection-plane", default="xy", choices=("xy", "yz", "xz"),
                   help="dataset mode: mirror plane (default xy)")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("theory", help="verify the mixture analysis; key=value report")
    p.add_argument("--mu-norm", type=float, default=1.5, help="norm of the class mean (default 1.5)")
    p.add_argument("--d", type=int, default=3, help="dimension for the demonstration (default 3)")
    p.add_argument("--samples", type=int, default=1_000_000,
                   help="Monte-Carlo sample count (default 1000000)")
    p.add_argument("--seed", type=int, default=23, help=SEED_HELP)
    p.add_argument("--report", help="also write the report to this file")
    p.set_defaults(func=_cmd_theory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidParameterError, PcveilError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
