"""Command-line surface: capacity curves, verification suites, simulation, link budget.

Subcommands: ``curves``, ``penalties``, ``verify``, ``simulate``, ``fer``.
All file outputs are deterministic for fixed flags and seed, with numbers at
12 significant digits.  Exit codes: 0 success, 1 verification failure,
2 usage or format error.  PDLSIC_THREADS caps the simulation worker count.
"""

import argparse
import json
import sys

import numpy as np

from . import capacity, linkbudget, montecarlo
from .channel import (
    Model,
    PdlClass,
    SampleMode,
    SnrSpec,
    alpha_from_pdl_db,
    sample_params,
)
from .equalize import (
    StreamScheme,
    closed_form_stream_snr,
    lmmse_equalizer,
    second_stage_statistics,
    stream_statistics,
    zf_equalizer,
)
from .precode import (
    effective_channel,
    identity_precoder,
    permute_columns,
    precoder_complex,
    precoder_real,
    verify_orthogonal_design,
)

CURVE_COLUMNS = (
    "snr_db",
    "c_awgn",
    "c_compound",
    "c_compound_approx",
    "c_parallel",
    "c_parallel_approx",
    "c_nonjoint",
)

VERIFY_SUITES = ("orthogonality", "snr-closed-forms", "star-property", "worst-case", "means")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _round_floats(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out_path):
    _emit(json.dumps(_round_floats(payload), indent=2) + "\n", out_path)


def _alpha_from_args(args) -> float:
    if args.pdl_db is not None:
        return alpha_from_pdl_db(args.pdl_db)
    return args.alpha


def _add_alpha_flags(parser, required=True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--alpha", type=float, help="Worst-case PDL parameter in [0, 1).")
    group.add_argument(
        "--pdl-db", type=float, help="Worst-case PDL in dB (alternative to --alpha)."
    )


def cmd_curves(args) -> int:
    alpha = _alpha_from_args(args)
    if args.snr_db_step <= 0 or args.snr_db_max < args.snr_db_min:
        raise ValueError("curves needs snr-db-max >= snr-db-min and a positive step")
    n = int(round((args.snr_db_max - args.snr_db_min) / args.snr_db_step))
    snr_db = args.snr_db_min + args.snr_db_step * np.arange(n + 1)
    snr = 10.0 ** (snr_db / 10.0)
    columns = [
        snr_db,
        capacity.c_awgn(snr),
        capacity.c_compound(alpha, snr),
        capacity.c_compound_approx(alpha, snr),
        capacity.c_parallel(alpha, snr),
        capacity.c_parallel_approx(alpha, snr),
        capacity.c_nonjoint(alpha, snr),
    ]
    lines = [",".join(CURVE_COLUMNS)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_penalties(args) -> int:
    alpha = _alpha_from_args(args)
    pen = capacity.penalties_db(alpha)
    _emit_json(
        {
            "alpha": alpha,
            "pdl_db": PdlClass(alpha).pdl_db,
            "penalties_db": pen.as_dict(),
        },
        args.out,
    )
    return EXIT_OK


def _models_from_arg(model_arg: str) -> list[Model]:
    if model_arg == "both":
        return [Model.REAL, Model.COMPLEX]
    return [Model.parse(model_arg)]


def _universal_precoder(model: Model):
    return precoder_real() if model is Model.REAL else precoder_complex()


def _suite_orthogonality(args, alpha: float, snr: SnrSpec) -> tuple[bool, dict]:
    detail = {}
    ok = True
    for model in _models_from_arg(args.model):
        pre = _universal_precoder(model)
        worst = {"h1": 0.0, "h2": 0.0, "symmetry": 0.0, "coupling_eigs": 0.0}
        for params in sample_params(
            PdlClass(alpha),
            SampleMode.UNIFORM_INTERIOR,
            model,
            seed=args.seed,
            count=args.draws,
        ):
            eff = effective_channel(params, pre, snr)
            rep = verify_orthogonal_design(eff)
            worst["h1"] = max(worst["h1"], rep.max_dev_h1)
            worst["h2"] = max(worst["h2"], rep.max_dev_h2)
            worst["symmetry"] = max(worst["symmetry"], rep.symmetry_defect)
            s = rep.coupling
            eig_dev = float(
                np.abs(s.T @ s - params.gamma**2 * np.eye(s.shape[0])).max()
            )
            worst["coupling_eigs"] = max(worst["coupling_eigs"], eig_dev)
        passed = max(worst.values()) < 1e-10
        ok &= passed
        detail[model.value] = {"max_defects": worst, "passed": passed}
        print(f"{'PASS' if passed else 'FAIL'} orthogonality[{model.value}] "
              f"max_defect={max(worst.values()):.3e} (tol 1e-10)")
    return ok, detail


def _suite_snr_closed_forms(args, alpha: float, snr: SnrSpec) -> tuple[bool, dict]:
    detail = {}
    ok = True
    closed = {
        StreamScheme.ZF: lambda g: closed_form_stream_snr(StreamScheme.ZF, g, snr),
        StreamScheme.LMMSE: lambda g: closed_form_stream_snr(StreamScheme.LMMSE, g, snr),
        StreamScheme.POST_SIC: lambda g: closed_form_stream_snr(StreamScheme.POST_SIC, g, snr),
    }
    for model in _models_from_arg(args.model):
        pre = _universal_precoder(model)
        worst = dict.fromkeys((s.value for s in closed), 0.0)
        for params in sample_params(
            PdlClass(alpha),
            SampleMode.UNIFORM_INTERIOR,
            model,
            seed=args.seed,
            count=args.draws,
        ):
            eff = effective_channel(params, pre, snr)
            numeric = {
                StreamScheme.ZF: stream_statistics(eff, zf_equalizer(eff)).snr_per_stream,
                StreamScheme.LMMSE: stream_statistics(eff, lmmse_equalizer(eff)).snr_per_stream,
                StreamScheme.POST_SIC: second_stage_statistics(eff).snr_per_stream,
            }
            for scheme, snrs in numeric.items():
                expect = closed[scheme](params.gamma)
                rel = float(np.abs(snrs - expect).max() / expect)
                worst[scheme.value] = max(worst[scheme.value], rel)
        passed = max(worst.values()) < 1e-9
        ok &= passed
        detail[model.value] = {"max_rel_dev": worst, "passed": passed}
        print(f"{'PASS' if passed else 'FAIL'} snr-closed-forms[{model.value}] "
              f"max_rel_dev={max(worst.values()):.3e} (tol 1e-09)")
    return ok, detail


def _suite_star_property(args, alpha: float, snr: SnrSpec) -> tuple[bool, dict]:
    detail = {}
    ok = True
    for model in _models_from_arg(args.model):
        pre = identity_precoder(model) if args.precoder == "identity" else _universal_precoder(model)
        if args.permute:
            order = [int(tok) for tok in args.permute.split(",")]
            pre = permute_columns(pre, order)
        rep = capacity.verify_star_property(
            pre,
            alpha,
            snr.snr_linear,
            n_gamma=args.n_gamma,
            n_theta=args.n_theta,
            n_phi=args.n_phi,
        )
        ok &= rep.passed
        detail[model.value] = {
            "lhs_bits": rep.lhs_bits,
            "rhs_bits": rep.rhs_bits,
            "gap_bits": rep.gap_bits,
            "passed": rep.passed,
        }
        print(f"{'PASS' if rep.passed else 'FAIL'} star-property[{model.value}] "
              f"gap={rep.gap_bits:.3e} bits/real-dim (tol {rep.tol:g})")
    return ok, detail


def _suite_worst_case(args, alpha: float, snr: SnrSpec) -> tuple[bool, dict]:
    search = capacity.worst_case_search(
        alpha, snr.snr_linear, n_beta=args.n_beta, n_gamma=args.n_gamma
    )
    beta_step = 1.0 / (args.n_beta - 1)
    beta_ok = abs(search.beta_star - 0.5) <= beta_step + 1e-12
    value_ok = search.defect_bits < 1e-9
    passed = beta_ok and search.all_extremal and value_ok
    detail = {
        "beta_star": search.beta_star,
        "max_min_bits": search.max_min_bits,
        "closed_form_bits": search.closed_form_bits,
        "defect_bits": search.defect_bits,
        "all_extremal": search.all_extremal,
        "passed": passed,
    }
    print(f"{'PASS' if passed else 'FAIL'} worst-case beta*={search.beta_star:.6g} "
          f"extremal={search.all_extremal} defect={search.defect_bits:.3e} bits")
    return passed, detail


def _suite_means(args, alpha: float, snr: SnrSpec) -> tuple[bool, dict]:
    gammas = np.linspace(-alpha, alpha, args.n_gamma)
    worst_product = 0.0
    worst_chain = 0.0
    worst_arith = 0.0
    for g in gammas:
        rep = capacity.mean_identity_check(1.0 + g, 1.0 - g, snr.snr_linear)
        worst_product = max(worst_product, rep.product_defect)
        worst_chain = max(worst_chain, rep.chain_defect_bits)
        worst_arith = max(worst_arith, abs(rep.arithmetic - 1.0))
    passed = worst_product < 1e-15 and worst_chain < 1e-12 and worst_arith < 1e-15
    detail = {
        "max_product_defect": worst_product,
        "max_chain_defect_bits": worst_chain,
        "max_arithmetic_dev_from_one": worst_arith,
        "passed": passed,
    }
    print(f"{'PASS' if passed else 'FAIL'} means product_defect={worst_product:.3e} "
          f"chain_defect={worst_chain:.3e} bits")
    return passed, detail


_SUITES = {
    "orthogonality": _suite_orthogonality,
    "snr-closed-forms": _suite_snr_closed_forms,
    "star-property": _suite_star_property,
    "worst-case": _suite_worst_case,
    "means": _suite_means,
}


def cmd_verify(args) -> int:
    alpha = _alpha_from_args(args)
    snr = SnrSpec.from_db(args.snr_db)
    passed, detail = _SUITES[args.suite](args, alpha, snr)
    if args.out:
        _emit_json(
            {"suite": args.suite, "alpha": alpha, "snr_db": snr.snr_db,
             "passed": passed, "detail": detail},
            args.out,
        )
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    config = montecarlo.SimConfig.from_dict(raw)
    report = montecarlo.run(config)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_fer(args) -> int:
    alpha = _alpha_from_args(args)
    table1 = linkbudget.FerTable.from_csv(args.table1)
    table2 = linkbudget.FerTable.from_csv(args.table2)
    point = linkbudget.evaluate_operating_point(
        alpha, SnrSpec.from_db(args.snr_db), table1, table2
    )
    _emit_json(point.as_dict(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdlsic",
        description="Worst-case capacity analysis and simulation of PDL-impaired "
        "dual-polarization channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="Emit capacity curves as CSV.")
    _add_alpha_flags(p)
    p.add_argument("--snr-db-min", type=float, default=0.0)
    p.add_argument("--snr-db-max", type=float, default=30.0)
    p.add_argument("--snr-db-step", type=float, default=0.25)
    p.add_argument("--out", help="Output CSV path (default stdout).")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("penalties", help="Print the three asymptotic SNR penalties.")
    _add_alpha_flags(p)
    p.add_argument("--out", help="Output JSON path (default stdout).")
    p.set_defaults(func=cmd_penalties)

    p = sub.add_parser("verify", help="Run a named verification suite.")
    p.add_argument("--suite", required=True, choices=VERIFY_SUITES)
    _add_alpha_flags(p, required=False)
    p.add_argument("--snr-db", type=float, default=13.010299956639813,
                   help="SNR in dB (default: linear SNR 20).")
    p.add_argument("--model", choices=("real", "complex", "both"), default="both")
    p.add_argument("--precoder", choices=("universal", "identity"), default="universal",
                   help="star-property only: which precoder to test.")
    p.add_argument("--permute", default=None,
                   help="star-property only: comma-separated column order for a "
                        "negative test, e.g. 0,2,1,3.")
    p.add_argument("--n-beta", type=int, default=capacity.GRID_N_BETA)
    p.add_argument("--n-gamma", type=int, default=capacity.GRID_N_GAMMA)
    p.add_argument("--n-theta", type=int, default=capacity.GRID_N_THETA)
    p.add_argument("--n-phi", type=int, default=capacity.GRID_N_PHI)
    p.add_argument("--draws", type=int, default=10000,
                   help="Random parameter draws for the sampling suites.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="Write JSON detail to this path.")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Run a Monte Carlo simulation from a JSON config.")
    p.add_argument("--config", required=True, help="JSON file mirroring SimConfig fields.")
    p.add_argument("--seed", type=int, default=None, help="Override the config's seed.")
    p.add_argument("--out", help="Output JSON path (default stdout).")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fer", help="Compose the end-to-end operating point from FER tables.")
    _add_alpha_flags(p)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--table1", required=True, help="CSV for the code at the derated SNR.")
    p.add_argument("--table2", required=True, help="CSV for the code at the channel SNR.")
    p.add_argument("--out", help="Output JSON path (default stdout).")
    p.set_defaults(func=cmd_fer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "alpha", None) is not None and not 0.0 <= args.alpha < 1.0:
        parser.error(f"--alpha must lie in [0, 1), got {args.alpha}")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
