"""Command-line surface.

Subcommands: ``check``, ``riesz``, ``perturb``, ``combine``, ``gen``.
Every command writes a JSON report to stdout (sorted keys, so output is
byte-stable for equal inputs and seed, except the ``timing_ms`` field)
and a short human summary to stderr.

Exit codes:
    0  frame / pass
    1  usage, parse, or validation error
    2  bessel-only classification
    3  not a frame / predicted-vs-measured failure
    4  theorem inapplicable (hypothesis violated by the instance)
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import constructions as cons
from . import frames as fr
from .frameio import (
    GENERATOR_CLASSES,
    FrameSpecError,
    frame_to_spec,
    parse_frame_spec,
    random_frame,
    serialize_frame_spec,
)
from .seeding import RNG_KIND

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BESSEL = 2
EXIT_NOT_FRAME = 3
EXIT_INAPPLICABLE = 4

_CLASS_EXIT = {
    fr.PARSEVAL: EXIT_OK,
    fr.TIGHT: EXIT_OK,
    fr.FRAME: EXIT_OK,
    fr.BESSEL_ONLY: EXIT_BESSEL,
    fr.NOT_FRAME: EXIT_NOT_FRAME,
}


def _emit(report: dict, summary: list, started: float) -> None:
    report["timing_ms"] = round(1000.0 * (time.perf_counter() - started), 3)
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for line in summary:
        sys.stderr.write(line + "\n")


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise FrameSpecError(f"cannot read '{path}': {e.strerror}") from e
    return parse_frame_spec(text)


def _est_dict(est) -> dict:
    return est.as_dict()


def _base_report(args, command: str) -> dict:
    return {
        "command": command,
        "argv_echo": list(getattr(args, "argv_echo", [])),
        "seed": args.seed,
        "restarts": args.restarts,
        "rng": RNG_KIND,
        "tolerance": args.tol,
    }


def _cmd_check(args) -> int:
    started = time.perf_counter()
    frame = _load(args.file)
    cls = fr.classify(frame, args.restarts, args.seed,
                      use_p2_exact=args.p2_exact, tight_tol=args.tol)
    riesz = fr.check_riesz(frame, args.restarts, args.seed)
    duality = fr.verify_duality(frame, samples=100, seed=args.seed)
    surj = fr.verify_surjectivity_characterization(frame, args.restarts, args.seed)
    report = _base_report(args, "check")
    report.update({
        "file": args.file,
        "space": {"dim": frame.dim, "p": frame.p},
        "classification": {
            "label": cls.label,
            "injective": cls.injective,
            "lower": _est_dict(cls.lower_bound),
            "upper": _est_dict(cls.bessel_bound),
        },
        "riesz": {
            "is_riesz": riesz.is_riesz,
            "gf_complete": riesz.gf_complete,
            "lower_sandwich": _est_dict(riesz.lower_sandwich),
            "upper_sandwich": _est_dict(riesz.upper_sandwich),
            "subset_mode": riesz.subset_mode,
            "subsets_checked": riesz.subsets_checked,
        },
        "duality_residual": duality.max_residual,
        "surjectivity": {
            "frame_iff_synthesis_surjective": surj.frame_iff_synthesis_surjective,
            "synthesis_surjective": surj.synthesis_surjective,
            "analysis_surjective": surj.analysis_surjective,
            "rank": surj.rank,
        },
    })
    _emit(report, [
        f"class: {cls.label}  bounds: ({cls.lower_bound.value:.9g}, "
        f"{cls.bessel_bound.value:.9g})",
        f"riesz: {riesz.is_riesz}  duality residual: {duality.max_residual:.3e}",
    ], started)
    return _CLASS_EXIT[cls.label]


def _cmd_riesz(args) -> int:
    started = time.perf_counter()
    frame = _load(args.file)
    cls = fr.classify(frame, args.restarts, args.seed,
                      use_p2_exact=args.p2_exact, tight_tol=args.tol)
    riesz = fr.check_riesz(frame, args.restarts, args.seed)
    report = _base_report(args, "riesz")
    report.update({
        "file": args.file,
        "classification": {"label": cls.label},
        "riesz": {
            "is_riesz": riesz.is_riesz,
            "gf_complete": riesz.gf_complete,
            "lower_sandwich": _est_dict(riesz.lower_sandwich),
            "upper_sandwich": _est_dict(riesz.upper_sandwich),
            "subset_mode": riesz.subset_mode,
            "subsets_checked": riesz.subsets_checked,
            "binding_subset": list(riesz.binding_subset),
        },
    })
    _emit(report, [
        f"riesz: {riesz.is_riesz}  sandwich: ({riesz.lower_sandwich.value:.9g}, "
        f"{riesz.upper_sandwich.value:.9g})",
    ], started)
    return _CLASS_EXIT[cls.label]


def _cmd_perturb(args) -> int:
    started = time.perf_counter()
    frame_a = _load(args.reference)
    frame_b = _load(args.perturbed)
    lo, hi = fr.estimate_bounds(frame_a, args.restarts, args.seed,
                                use_p2_exact=args.p2_exact)
    report = _base_report(args, "perturb")
    report["reference_bounds"] = {"lower": lo.value, "upper": hi.value}
    radius_est = cons.measure_perturbation_radius(frame_a, frame_b,
                                                  args.restarts, args.seed)
    report["measured_radius"] = radius_est.value

    if args.radius_mode:
        if not radius_est.value < lo.value:
            report["verdict"] = "inapplicable"
            report["reason"] = (
                f"measured radius {radius_est.value:.9g} is not below the "
                f"lower bound {lo.value:.9g}")
            _emit(report, ["theorem inapplicable: radius >= lower bound"], started)
            return EXIT_INAPPLICABLE
        predicted = cons.simple_perturbation_bounds(lo.value, hi.value,
                                                    radius_est.value)
    else:
        try:
            params = cons.PerturbationParams(args.lambda1, args.lambda2, args.mu)
            params.validate_against(lo.value, hi.value)
        except ValueError as e:
            raise FrameSpecError(f"invalid perturbation parameters: {e}") from e
        check = cons.perturbation_condition_holds(frame_a, frame_b, params,
                                                  args.restarts, args.seed)
        report["condition"] = {
            "holds": check.holds,
            "max_violation": check.max_violation,
            "witness": [float(x) for x in check.witness],
        }
        if not check.holds:
            report["verdict"] = "inapplicable"
            report["reason"] = "perturbation inequality violated at the witness"
            _emit(report, ["theorem inapplicable: inequality violated"], started)
            return EXIT_INAPPLICABLE
        predicted = cons.predicted_perturbed_bounds(lo.value, hi.value, params)

    g_lo, g_hi = fr.estimate_bounds(frame_b, args.restarts, args.seed,
                                    use_p2_exact=args.p2_exact)
    ok = predicted.contains(g_lo.value, g_hi.value, tol=args.tol)
    report["predicted"] = {"lower": predicted.lower, "upper": predicted.upper,
                           "provenance": predicted.provenance}
    report["measured"] = {"lower": g_lo.value, "upper": g_hi.value}
    report["verdict"] = "pass" if ok else "fail"
    _emit(report, [
        f"predicted: [{predicted.lower:.9g}, {predicted.upper:.9g}]  "
        f"measured: [{g_lo.value:.9g}, {g_hi.value:.9g}]  "
        f"{report['verdict']}",
    ], started)
    return EXIT_OK if ok else EXIT_NOT_FRAME


def _cmd_combine(args) -> int:
    started = time.perf_counter()
    frame_x = _load(args.first)
    frame_y = _load(args.second)
    try:
        if args.tensor:
            combo = cons.tensor_product(frame_x, frame_y, args.restarts, args.seed)
        else:
            combo = cons.direct_sum(frame_x, frame_y, args.restarts, args.seed)
    except ValueError as e:
        raise FrameSpecError(f"incompatible families: {e}") from e
    lo, hi = fr.estimate_bounds(combo.frame, args.restarts, args.seed,
                                use_p2_exact=args.p2_exact)
    ok = combo.predicted.contains(lo.value, hi.value, tol=args.tol)
    report = _base_report(args, "combine")
    report.update({
        "mode": "tensor" if args.tensor else "direct-sum",
        "predicted": {"lower": combo.predicted.lower,
                      "upper": combo.predicted.upper,
                      "provenance": combo.predicted.provenance},
        "measured": {"lower": lo.value, "upper": hi.value},
        "combined_spec": frame_to_spec(combo.frame),
        "verdict": "pass" if ok else "fail",
    })
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_frame_spec(combo.frame))
        report["out"] = args.out
    _emit(report, [
        f"{report['mode']}: predicted [{combo.predicted.lower:.9g}, "
        f"{combo.predicted.upper:.9g}]  measured [{lo.value:.9g}, {hi.value:.9g}]  "
        f"{report['verdict']}",
    ], started)
    return EXIT_OK if ok else EXIT_NOT_FRAME


def _cmd_gen(args) -> int:
    if args.block_dims:
        dims = [int(x) for x in args.block_dims.split(",") if x.strip()]
        if args.blocks is not None and args.blocks != len(dims):
            raise FrameSpecError(
                f"--blocks {args.blocks} contradicts --block-dims of length {len(dims)}")
    else:
        if args.blocks is None:
            raise FrameSpecError("need --blocks or --block-dims")
        dims = [1] * args.blocks
    try:
        frame = random_frame(args.dim, dims, args.p, args.seed, args.klass,
                             scale=args.scale)
    except (ValueError, RuntimeError) as e:
        raise FrameSpecError(str(e)) from e
    meta = {
        "generator": {
            "class": args.klass,
            "seed": args.seed,
            "rng": RNG_KIND,
            "scale": args.scale,
        }
    }
    text = serialize_frame_spec(frame, meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        sys.stderr.write(f"wrote {args.out}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sub.add_argument("--restarts", type=int, default=20,
                     help="optimizer restarts per bound")
    sub.add_argument("--tol", type=float, default=1e-6,
                     help="classification gap and pass/fail bracketing tolerance")
    sub.add_argument("--p2-exact", action=argparse.BooleanOptionalAction,
                     default=True, dest="p2_exact",
                     help="use the exact singular-value route when p = 2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfusion",
        description="Numerical laboratory for weighted operator families "
                    "on p-normed spaces.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_check = subs.add_parser("check", help="classify a family and run the "
                                            "structural checks")
    p_check.add_argument("file")
    _add_common(p_check)
    p_check.set_defaults(fn=_cmd_check)

    p_riesz = subs.add_parser("riesz", help="run the Riesz sandwich test")
    p_riesz.add_argument("file")
    _add_common(p_riesz)
    p_riesz.set_defaults(fn=_cmd_riesz)

    p_pert = subs.add_parser("perturb", help="compare a perturbed family "
                                             "against predictions")
    p_pert.add_argument("reference")
    p_pert.add_argument("perturbed")
    mode = p_pert.add_mutually_exclusive_group(required=True)
    mode.add_argument("--radius", dest="radius_mode", action="store_true",
                      help="measure the radius and use (A - R, B + R)")
    mode.add_argument("--lambda1", type=float, default=None,
                      help="first relative coefficient in (-1, 1)")
    p_pert.add_argument("--lambda2", type=float, default=0.0)
    p_pert.add_argument("--mu", type=float, default=0.0)
    _add_common(p_pert)
    p_pert.set_defaults(fn=_cmd_perturb, radius_mode=False)

    p_comb = subs.add_parser("combine", help="direct sum or tensor product "
                                             "of two families")
    p_comb.add_argument("first")
    p_comb.add_argument("second")
    mode = p_comb.add_mutually_exclusive_group(required=True)
    mode.add_argument("--direct-sum", dest="tensor", action="store_false")
    mode.add_argument("--tensor", dest="tensor", action="store_true")
    p_comb.add_argument("--out", default=None,
                        help="also write the combined family to this file")
    _add_common(p_comb)
    p_comb.set_defaults(fn=_cmd_combine)

    p_gen = subs.add_parser("gen", help="emit a seeded random family file")
    p_gen.add_argument("--dim", type=int, required=True)
    p_gen.add_argument("--blocks", type=int, default=None)
    p_gen.add_argument("--block-dims", default=None,
                       help="comma-separated block dimensions")
    p_gen.add_argument("--p", type=float, default=2.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--class", dest="klass", default="frame",
                       choices=GENERATOR_CLASSES)
    p_gen.add_argument("--scale", type=float, default=2.0,
                       help="common bound for --class tight")
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(fn=_cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    if getattr(args, "fn", None) is _cmd_perturb and not args.radius_mode:
        if args.lambda1 is None:
            sys.stderr.write("perturb: need --radius or --lambda1\n")
            return EXIT_USAGE
    try:
        return args.fn(args)
    except FrameSpecError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except ValueError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
