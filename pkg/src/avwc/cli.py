"""Command-line entry point: ``avwc <subcommand> [flags]``.

Every subcommand prints one JSON report (sorted keys, stable floats) and
optionally writes it to ``--output`` or to ``$AVWC_OUTPUT_DIR``.  Errors are
reported as a JSON object ``{"error": {...}}`` with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .avc import symmetrizability_check, worst_state_sequence
from .counterexample import (
    ThetaSubset,
    adversarial_thetas,
    case1_attack,
    case2_certificate,
    case2_leakage_bound,
    case2_partition_code,
    gavc_erasure_channel,
    naive_identity_code,
    skewed_attack,
    strong_leakage_closed_form,
    theta_size,
    v_theta_channel,
)
from .extraction import (
    ExtractionFailed,
    ExtractionParams,
    ExtractionRefused,
    ScheduleError,
    audit_extracted,
    check_preconditions,
    derive_params_theorem1,
    derive_params_theorem3,
    extract,
    measure_base,
)
from .io import (
    SCHEMA_VERSION,
    FormatError,
    System,
    canonical_dumps,
    check_version,
    digest,
    fixture_paths,
    loads,
)
from .metrics import PINSKER_NOTE, SearchConfig, advantage_report, audit_values, optimize_single_letter
from .model import (
    AvwcFamily,
    GavwcInstance,
    average_error,
    block_length_of,
    max_error,
    per_message_error,
)
from .probability import AlphabetTooLarge, Channel, Distribution, mutual_information

OUTPUT_ENV = "AVWC_OUTPUT_DIR"
EXIT_USAGE = 2
EXIT_FAILED = 3


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_USAGE, **extra):
        super().__init__(message)
        self.kind, self.code, self.extra = kind, code, extra


def num(value, tolerance=0.0, exact=True) -> dict:
    return {"value": float(value), "tolerance": tolerance, "exact": bool(exact)}


def _report(command: str, args, body: dict, inputs: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "inputs": inputs or {},
        "seeds": {"seed": args.seed},
        **body,
    }


def _read_input(args, required=True):
    if args.input is None:
        if required:
            raise CliError("usage", "--input is required for this subcommand")
        return None, {}
    path = Path(args.input)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CliError("io", f"cannot read {path}: {e.strerror}") from None
    return loads(text), {"input": digest(text)}


def _channels(family, code=None):
    """Block-level (mains, wiretaps) for a family at the code's block length."""
    if isinstance(family, GavwcInstance):
        return list(family.mains), list(family.wiretaps), family.block_length
    n = 1 if code is None else block_length_of(code, family.input_size)
    inst = family.block_instance(n)
    return list(inst.mains), list(inst.wiretaps), n


# subcommands -------------------------------------------------------------------

def cmd_metrics(args):
    model, inputs = _read_input(args)
    if not isinstance(model, System):
        raise CliError("format", "metrics needs a 'system' file (code + family)")
    code, family = model.code, model.family
    mains, wiretaps, n = _channels(family, code)
    cfg = SearchConfig(dirichlet_samples=args.samples, seed=args.seed)
    tol = args.tolerance
    rep = advantage_report(code, wiretaps, cfg, tol)
    audit = audit_values(rep.ss_advantage_lower, rep.ds_advantage, rep.mis_advantage,
                         wiretaps[0].output_size, slack=1e-9)
    body = {
        "block_length": n,
        "advantages": {
            "strong_leakage": num(rep.strong_leakage, 1e-12),
            "mis_advantage": num(rep.mis_advantage, tol, rep.mis_converged),
            "ds_advantage": num(rep.ds_advantage, 1e-12),
            "ss_advantage_lower": num(rep.ss_advantage_lower, 1e-12, exact=False),
            "ss_restricted": rep.ss_restricted,
            "witnesses": {
                "worst_wiretap": rep.worst_wiretap,
                "worst_pair": list(rep.worst_pair),
                "worst_prior": list(rep.worst_prior),
                "worst_partition": list(rep.worst_partition),
            },
        },
        "equivalence_audit": {
            "slacks": {k: num(getattr(audit, k), 1e-9) for k in
                       ("ss_le_ds", "ds_le_2ss", "pinsker", "continuity")},
            "flags": audit.flags,
            "passed": audit.passed,
            "note": PINSKER_NOTE,
        },
        "errors": {
            "average": num(max(average_error(code, m) for m in mains), 1e-12),
            "maximum": num(max(max_error(code, m) for m in mains), 1e-12),
        },
    }
    if isinstance(family, AvwcFamily):
        sym = symmetrizability_check(family.mains)
        body["symmetrizable"] = {
            "value": sym.feasible,
            "advisory": "a symmetrizable main family has zero deterministic-code capacity",
        }
        worst = {}
        for metric in ("avg_error", "strong_leakage"):
            wc = worst_state_sequence(code, family, n, metric, budget=args.budget, seed=args.seed)
            worst[metric] = {"sequence": list(wc.sequence.states),
                             **num(wc.value, 1e-12, wc.exact)}
        body["worst_state_sequence"] = worst
    return _report("metrics", args, body, inputs)


def cmd_symmetrize(args):
    model, inputs = _read_input(args)
    family = model.family if isinstance(model, System) else model
    if isinstance(family, AvwcFamily):
        mains = family.mains
    elif isinstance(family, GavwcInstance):
        mains = list(family.mains)
    else:
        raise CliError("format", "symmetrize needs a channel family")
    res = symmetrizability_check(mains, tol=args.tolerance)
    body = {"feasible": res.feasible,
            "residual": num(res.residual, 1e-7) if res.feasible else None,
            "witness": [list(map(float, r)) for r in res.witness.rows] if res.feasible else None}
    return _report("symmetrize", args, body, inputs)


def cmd_extract(args):
    model, inputs = _read_input(args)
    if not isinstance(model, System):
        raise CliError("format", "extract needs a 'system' file (base code + family)")
    base, family = model.code, model.family
    mains, wiretaps, n = _channels(family, base)
    stats = measure_base(base, mains, wiretaps)
    if args.J is not None or args.K is not None:
        if args.J is None or args.K is None:
            raise CliError("usage", "--J and --K must be given together")
        scale = args.scale
        params = ExtractionParams.explicit(args.J, args.K, scale * args.K * stats.leakage,
                                           scale * args.K * stats.error, stats,
                                           retry_budget=args.retries, seed=args.seed)
    else:
        if args.epsilon is None:
            raise CliError("usage", "--epsilon is required with --theorem")
        # measured levels play the role of lambda/8 and mu/8
        lam, mu = 8.0 * stats.error, 8.0 * stats.leakage
        sizes = (len(mains), len(wiretaps))
        if args.theorem == 1:
            params = derive_params_theorem1(n, args.epsilon, lam, mu, stats.message_count,
                                            stats.delta, sizes)
        else:
            params = derive_params_theorem3(n, args.epsilon, lam, mu, stats.message_count,
                                            stats.delta, args.a, sizes)
        params = ExtractionParams(**{**vars(params), "retry_budget": args.retries,
                                     "seed": args.seed})
    pre = check_preconditions(params, (len(mains), len(wiretaps)))
    result = extract(base, mains, wiretaps, params)
    audit = audit_extracted(result, mains, wiretaps, params)
    body = {
        "block_length": n,
        "extraction": result.to_dict(),
        "preconditions": {"passed": pre.passed, "violations": list(pre.violations),
                          "margins": {"leakage": pre.leakage_margin, "error": pre.error_margin,
                                      "collision": pre.collision_margin, "beta": pre.beta_margin}},
        "audit": {
            "passed": audit.passed,
            "flags": audit.flags,
            "failures": list(audit.failures),
            "max_error": num(audit.worst_error, 1e-9),
            "error_bound": num(audit.error_bound),
            "prior_free_leakage": num(audit.worst_radius, 1e-9),
            "leakage_bound": num(audit.leakage_bound),
            "uniform_leakage": num(audit.worst_uniform_leakage, 1e-9),
        },
        "derived_decoder": [int(v) for v in result.derived.decoder],
    }
    return _report("extract", args, body, inputs)


def _curve_csv(rows, header) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_counterexample(args):
    sc = args.scenario
    rng = np.random.default_rng(args.seed)
    n = args.n
    curve, header = [], ("n", "leakage", "bound")
    if sc == "naive-strong":
        a = 0.5 if args.a is None else args.a
        n = n or 8
        per_n = []
        for m in range(2, n + 1):
            f = theta_size(m, a)
            code = naive_identity_code(m)
            u = Distribution.uniform(2**m)
            vals = [mutual_information(u, v_theta_channel(ThetaSubset.random(m, f, rng)))
                    for _ in range(args.samples_theta)]
            closed = strong_leakage_closed_form(m, f)
            per_n.append({"n": m, "f": f, "closed_form": num(closed),
                          "brute_force_max_deviation": max(abs(v - closed) for v in vals),
                          "average_error": num(average_error(code, Channel.identity(2**m)))})
            curve.append((m, float(np.mean(vals)), closed))
        body = {"a": a, "per_n": per_n}
    elif sc == "skewed":
        a = 0.5 if args.a is None else args.a
        n = n or 8
        per_n = []
        for m in range(1, n + 1):
            f = theta_size(m, a)
            s = skewed_attack(m, f)
            per_n.append({"n": m, "f": f, "bound": num(s.bound), "exact": num(s.exact, 1e-12)})
            curve.append((m, s.exact, s.bound))
        body = {"a": a, "per_n": per_n}
    elif sc == "case1":
        a = 0.5 if args.a is None else args.a
        n = n or 6
        g = 2.0**-n
        att = case1_attack(naive_identity_code(n), a, g)
        body = {"n": n, "a": a, "b": att.b, "g": g,
                "covered_messages": att.covered, "theta": sorted(att.theta.members),
                "eavesdropper_success": num(att.eve_success, 1e-12),
                "legitimate_error": num(att.legit_error, 1e-12),
                "fano_leakage_bound": num(att.fano_bound, 1e-12),
                "exact_normalized_leakage": num(att.exact_leakage, 1e-12)}
    elif sc == "case2":
        a = 1.0 / 6.0 if args.a is None else args.a
        n = n or 6
        b = 0.5
        f = theta_size(n, a)
        pc, code = case2_partition_code(n, 1.0 - b)
        thetas = [ThetaSubset.random(n, f, rng) for _ in range(args.samples_theta)]
        thetas += adversarial_thetas(pc, f)
        certs = [case2_certificate(code, t) for t in thetas]
        bound = case2_leakage_bound(n, a, b)
        body = {"n": n, "a": a, "b": b, "f": f, "thetas_checked": len(thetas),
                "worst_certificate": num(max(certs), 1e-12), "bound": num(bound),
                "passed": max(certs) <= bound + 1e-9,
                "main_error": num(max_error(code, Channel.identity(2**n)))}
        for m in range(2, 11, 2):
            fm = theta_size(m, a)
            pcm, cm = case2_partition_code(m, 1.0 - b)
            worst = max(case2_certificate(cm, t) for t in adversarial_thetas(pcm, fm))
            curve.append((m, worst, case2_leakage_bound(m, a, b)))
    elif sc == "gavc-erasure":
        n = n or 6
        f = 8 if args.a is None else theta_size(n, args.a)
        theta = ThetaSubset.random(n, f, rng)
        code = naive_identity_code(n, erasure=True)
        err = per_message_error(code, gavc_erasure_channel(theta))
        body = {"n": n, "f": f, "theta": sorted(theta.members),
                "max_error": num(err.max()), "average_error": num(err.mean())}
    else:
        raise CliError("usage", f"unknown scenario {sc!r}")
    body["scenario"] = sc
    report = _report("counterexample", args, body)
    if curve:
        report["_csv"] = _curve_csv(curve, header)
    return report


def cmd_single_letter(args):
    model, inputs = _read_input(args)
    family = model.family if isinstance(model, System) else model
    if not isinstance(family, AvwcFamily):
        raise CliError("format", "single-letter needs a per-letter 'avwc' family")
    res = optimize_single_letter(family, grid=args.grid, seed=args.seed)
    body = {"value": num(res.value, args.grid, exact=False),
            "lower_bound": True,
            "inner_min_exact": res.inner_exact,
            "argmax": {"prior": list(res.prior), "cond": [list(r) for r in res.cond],
                       "q": list(res.q)},
            "grid": res.grid, "evaluations": res.evaluations}
    return _report("single-letter", args, body, inputs)


def cmd_validate(args):
    if args.input is not None:
        targets = [Path(args.input)]
    else:
        targets = fixture_paths()
    results, ok = [], True
    for p in targets:
        try:
            text = p.read_text(encoding="utf-8")
            doc = json.loads(text)
            check_version(doc)
            loads(text)
            results.append({"file": p.name, "valid": True, "digest": digest(text)})
        except (OSError, ValueError) as e:
            ok = False
            results.append({"file": p.name, "valid": False, "reason": str(e)})
    report = _report("validate", args, {"files": results, "valid": ok})
    if not ok:
        report["_exit"] = EXIT_FAILED
    return report


COMMANDS = {
    "metrics": cmd_metrics,
    "symmetrize": cmd_symmetrize,
    "extract": cmd_extract,
    "counterexample": cmd_counterexample,
    "single-letter": cmd_single_letter,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="model file (JSON)")
    common.add_argument("--output", help="write the report here as well as to stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--budget", type=int, default=None,
                        help="metric evaluations for heuristic state-sequence search")
    common.add_argument("--samples", type=int, default=256, help="Dirichlet prior samples")

    parser = argparse.ArgumentParser(prog="avwc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("metrics", parents=[common])
    sub.add_parser("symmetrize", parents=[common])
    ex = sub.add_parser("extract", parents=[common])
    ex.add_argument("--theorem", type=int, choices=(1, 3), default=1)
    ex.add_argument("--epsilon", type=float, default=0.75)
    ex.add_argument("--a", type=float, default=0.0)
    ex.add_argument("--retries", type=int, default=64)
    ex.add_argument("--J", type=int, default=None, help="explicit message count")
    ex.add_argument("--K", type=int, default=None, help="explicit cluster size")
    ex.add_argument("--scale", type=float, default=4.0,
                    help="explicit mode: A = scale*K*mu, B = scale*K*lambda (measured)")
    ce = sub.add_parser("counterexample", parents=[common])
    ce.add_argument("--scenario", required=True,
                    choices=("naive-strong", "skewed", "case1", "case2", "gavc-erasure"))
    ce.add_argument("--n", type=int, default=None)
    ce.add_argument("--a", type=float, default=None)
    ce.add_argument("--thetas", dest="samples_theta", type=int, default=None,
                    help="random Theta sets per block length")
    ce.add_argument("--csv", help="path for the (n, leakage, bound) curve")
    sl = sub.add_parser("single-letter", parents=[common])
    sl.add_argument("--grid", type=float, default=1e-2)
    sub.add_parser("validate", parents=[common])
    return parser


def _emit(report: dict, args, stdout) -> int:
    code = report.pop("_exit", 0)
    csv_text = report.pop("_csv", None)
    text = canonical_dumps(report)
    stdout.write(text)
    target = None
    if args.output:
        target = Path(args.output)
    elif os.environ.get(OUTPUT_ENV):
        stem = args.command
        if getattr(args, "scenario", None):
            stem += "-" + args.scenario
        target = Path(os.environ[OUTPUT_ENV]) / f"{stem}-report.json"
    if target is not None:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    if csv_text is not None:
        csv_path = getattr(args, "csv", None)
        if csv_path is None and target is not None:
            csv_path = target.with_suffix(".csv")
        if csv_path is not None:
            Path(csv_path).write_text(csv_text, encoding="utf-8")
    return code


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples_theta", 0) is None:
        args.samples_theta = 64 if args.scenario == "case2" else 16
    try:
        report = COMMANDS[args.command](args)
        return _emit(report, args, stdout)
    except CliError as e:
        err = {"kind": e.kind, "message": str(e), **e.extra}
        code = e.code
    except FormatError as e:
        err = {"kind": "format", "message": str(e), "path": e.path}
        code = EXIT_USAGE
    except ExtractionFailed as e:
        err = {"kind": "extraction_failed", "message": str(e), "step": e.step,
               "attempts": e.attempts, "residuals": e.residuals}
        code = EXIT_FAILED
    except ScheduleError as e:
        err = {"kind": "schedule", "message": str(e), "violations": e.violations}
        code = EXIT_FAILED
    except (ExtractionRefused, AlphabetTooLarge, ValueError) as e:
        err = {"kind": type(e).__name__, "message": str(e)}
        code = EXIT_FAILED
    stdout.write(canonical_dumps({"schema_version": SCHEMA_VERSION, "error": err}))
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
