"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import subprocess
import sys
from pathlib import Path

from cogeval import __version__
from cogeval.errors import ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None


def _emit(payload, args, inputs, config, seed=None):
    from cogeval.manifest import RunManifest
    from cogeval.reports import render, write_report

    if args.out:
        paths = write_report(payload, args.out)
        RunManifest(args.command, inputs, config, seed, __version__, paths).write(args.out)
    sys.stdout.write(render(payload, args.format))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args):
    from cogeval.manifest import RunManifest
    from cogeval.twostep import SessionConfig, generate_schemes, save_schemes

    data = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.n_trials is not None:
        data["n_trials"] = args.n_trials
    config = SessionConfig.from_dict(data)
    schemes = generate_schemes(config)
    save_schemes(schemes, args.out)
    inputs = [args.config] if args.config else []
    RunManifest("simulate", inputs, config.to_dict(), config.seed, __version__, [args.out]).write(args.out)
    print(f"wrote {len(schemes)} trial schemes to {args.out}", file=sys.stderr)


def _load_params(path):
    from cogeval.agents import AgentParams

    if not path:
        return AgentParams(), 0.7
    data = _read_json(path)
    common_prob = float(data.pop("common_prob", 0.7))
    return AgentParams.from_dict(data), common_prob


def cmd_run_agent(args):
    from cogeval.agents import run_agent
    from cogeval.logs import save_log
    from cogeval.manifest import RunManifest
    from cogeval.stats import nll
    from cogeval.twostep import load_schemes

    params, common_prob = _load_params(args.params)
    schemes = load_schemes(args.schemes)
    log = run_agent(params, schemes, seed=args.seed, common_prob=common_prob)
    save_log(log, args.out)
    inputs = [p for p in (args.params, args.schemes) if p]
    config = {**params.to_dict(), "common_prob": common_prob}
    RunManifest("run-agent", inputs, config, args.seed, __version__, [args.out]).write(args.out)
    summary = nll(log, clamp=args.clamp)
    print(f"decisions: {summary.n_decisions}")
    print(f"mean NLL per decision: {summary.mean_nll:.6f}")


def cmd_adapter(args):
    from cogeval.adapter import run_session
    from cogeval.logs import save_log
    from cogeval.manifest import RunManifest
    from cogeval.roi import save_roi_series
    from cogeval.twostep import load_schemes

    schemes = load_schemes(args.schemes)
    proc = None
    if args.exec:
        proc = subprocess.Popen(shlex.split(args.exec), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                text=True, bufsize=1)
        out_stream, in_stream = proc.stdin, proc.stdout
    else:
        out_stream, in_stream = sys.stdout, sys.stdin

    def send(line):
        try:
            out_stream.write(line + "\n")
            out_stream.flush()
        except BrokenPipeError:
            pass

    try:
        result = run_session(schemes, send, in_stream.readline, retries=args.retries)
    finally:
        if proc is not None:
            proc.stdin.close()
            proc.wait(timeout=30)
    save_log(result.log, args.out)
    outputs = [args.out]
    if len(result.roi):
        roi_out = args.roi_out or str(Path(args.out).with_suffix("")) + ".roi.jsonl"
        save_roi_series(result.roi, roi_out)
        outputs.append(roi_out)
    RunManifest("adapter", [args.schemes], {"retries": args.retries}, None, __version__, outputs).write(args.out)
    if result.aborted:
        print(f"session aborted: {result.reason}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _parse_weights(text):
    from cogeval.mcg import parse_fraction

    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValidationError("--weights expects three comma-separated values lambda,mu,nu")
    return [parse_fraction(p) for p in parts]


def cmd_score_mcg(args):
    from cogeval.mcg import bundle_from_dict, score_bundle
    from cogeval.reports import mcg_payload

    data = _read_json(args.bundle)
    if not isinstance(data, dict):
        raise ValidationError("bundle must be a JSON object")
    if args.epsilon is not None:
        data["epsilon"] = args.epsilon
    if args.weights:
        data["weights"] = _parse_weights(args.weights)
    result = score_bundle(bundle_from_dict(data))
    _emit(mcg_payload(result), args, [args.bundle],
          {"epsilon": result.fsr.epsilon, "weights": list(result.weights)})


def cmd_fit(args):
    from cogeval.agents import fit_params
    from cogeval.logs import load_log
    from cogeval.twostep import load_schemes

    log = load_log(args.log)
    schemes = load_schemes(args.schemes) if args.schemes else None
    bounds = _read_json(args.config).get("bounds") if args.config else None
    common_prob = _read_json(args.config).get("common_prob", 0.7) if args.config else 0.7
    fit = fit_params(log, schemes, bounds, common_prob=common_prob)
    payload = {"kind": "fit", "params": fit.params.to_dict(), "mean_nll": fit.mean_nll,
               "grid_best_nll": fit.grid_best_nll, "n_grid": fit.n_grid}
    inputs = [p for p in (args.log, args.schemes, args.config) if p]
    _emit(payload, args, inputs, {"bounds": bounds, "common_prob": common_prob})


def _log_files(target):
    p = Path(target)
    if p.is_dir():
        return sorted(p.glob("*.jsonl"))
    if p.exists():
        return [p]
    raise FileNotFoundError(f"no such file or directory: {target}")


def cmd_compare(args):
    from cogeval.errors import ParseError
    from cogeval.logs import load_log
    from cogeval.reports import welch_payload
    from cogeval.stats import BaselineSpec, compare_all, nll, nll_terms

    errors = []
    samples, n_clamped = {}, {}
    files = [f for target in args.logs for f in _log_files(target)]
    if not files:
        raise ValidationError("no decision logs (*.jsonl) found")

    def sample_of(path, name):
        log = load_log(path)
        n_clamped[name] = nll(log, args.clamp).n_clamped
        return nll_terms(log, args.clamp)

    for f in files:
        try:
            samples[f.stem] = sample_of(f, f.stem)
        except ValidationError as exc:
            errors.append(f"{f}: {exc}")
    spec = _read_json(args.baselines)
    if not isinstance(spec, dict) or not spec:
        raise ValidationError(f"{args.baselines}: expected a non-empty object of baselines")
    base_dir = Path(args.baselines).parent
    baselines = {}
    for name, entry in spec.items():
        try:
            if not isinstance(entry, dict):
                raise ValidationError("baseline entry must be an object")
            if "log" in entry:
                path = Path(entry["log"])
                baselines[name] = sample_of(path if path.is_absolute() else base_dir / path, name)
            else:
                baselines[name] = BaselineSpec(float(entry["mean"]), float(entry["ci95_halfwidth"]),
                                               int(entry.get("n", 300)))
        except (ValidationError, KeyError, TypeError, ValueError) as exc:
            errors.append(f"baseline {name!r}: {exc}")
    if errors:
        raise ValidationError("invalid inputs:\n" + "\n".join(f"  - {e}" for e in errors))
    rows = compare_all(samples, baselines)
    inputs = [str(f) for f in files] + [args.baselines]
    _emit(welch_payload(rows, args.clamp, n_clamped), args, inputs, {"clamp": args.clamp})


def cmd_roi(args):
    from cogeval.reports import roi_payload
    from cogeval.roi import load_roi_series, summarize

    errors = []
    series = {}
    for path in [args.reference, *args.series]:
        try:
            series[path] = load_roi_series(path)
        except ValidationError as exc:
            errors.append(f"{path}: {exc}")
    if errors:
        raise ValidationError("invalid inputs:\n" + "\n".join(f"  - {e}" for e in errors))
    ref = series[args.reference]
    summaries = [(Path(p).stem, summarize(series[p], ref)) for p in args.series]
    _emit(roi_payload(summaries), args, [args.reference, *args.series], {})


def cmd_report(args):
    from cogeval.reports import render

    payload = _read_json(args.report)
    if not isinstance(payload, dict):
        raise ValidationError(f"{args.report}: not a report payload")
    sys.stdout.write(render(payload, args.format))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="cogeval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def reporting(p):
        p.add_argument("--format", choices=("csv", "json", "md"), default="md",
                       help="format printed to stdout (default md)")
        p.add_argument("--out", help="write PREFIX.md/.csv/.json plus a manifest")

    p = sub.add_parser("simulate", help="generate two-step trial schemes")
    p.add_argument("--config", help="JSON session config")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-trials", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run-agent", help="run a reference agent over trial schemes")
    p.add_argument("--params", help="JSON agent parameters (alpha, beta, w, perseveration, common_prob)")
    p.add_argument("--schemes", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clamp", type=float, default=1e-12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_agent)

    p = sub.add_parser("adapter", help="serve the task to an external player over line-delimited JSON")
    p.add_argument("--schemes", required=True)
    p.add_argument("--out", required=True, help="decision log path")
    p.add_argument("--roi-out", help="ROI series path (default: next to the log)")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--exec", help="command to launch as the player; default uses stdin/stdout")
    p.set_defaults(func=cmd_adapter)

    p = sub.add_parser("score-mcg", help="score a Minimal Cognitive Grid bundle")
    p.add_argument("bundle")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--weights", help="lambda,mu,nu")
    reporting(p)
    p.set_defaults(func=cmd_score_mcg)

    p = sub.add_parser("fit", help="maximum-likelihood hybrid-agent fit to a decision log")
    p.add_argument("--log", required=True)
    p.add_argument("--schemes")
    p.add_argument("--config", help="JSON with optional 'bounds' and 'common_prob'")
    reporting(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="Welch tests of decision-level NLL against baselines")
    p.add_argument("logs", nargs="+", help="decision-log files or directories of *.jsonl")
    p.add_argument("--baselines", required=True)
    p.add_argument("--clamp", type=float, default=1e-12)
    reporting(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("roi", help="ROI beta-vector similarity against a reference series")
    p.add_argument("series", nargs="+")
    p.add_argument("--reference", required=True)
    reporting(p)
    p.set_defaults(func=cmd_roi)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("report")
    p.add_argument("--format", choices=("csv", "json", "md"), default="md")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
