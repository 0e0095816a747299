"""Command-line front end.

Subcommands chain the pipeline through files::

    conefactor synth --kind mixtures --out X.csv --truth-out truth.json
    conefactor reduce --input X.csv --out reduced.json
    conefactor detect --model basic --input reduced.json --out result.json
    conefactor refine --result result.json --input X.csv --out A.csv
    conefactor unmix --endmembers A.csv --full-X X.csv --out S.csv
    conefactor score --est A.csv --truth A_true.csv

Exit status is 0 on success, 1 on usage or input errors and 2 when
``--strict`` is given and a solver stops before reaching its tolerance.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import synth
from .data import MatrixParseError, as_matrix, matrix_from_json, matrix_to_json, read_matrix, write_matrix, write_pgm
from .evaluation import StabilityConfig, format_angle_table, match_and_score, run_stability
from .extended import extended_report, solve_extended
from .reduction import DEFAULT_H, ReducedProblem, reduce_data, self_representation, similarity_weights
from .refinement import EndmemberSet, refine, solve_abundances
from .solver import SolverConfig, solve_basic

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2

DEFAULTS = SolverConfig()


class UsageError(Exception):
    """Bad flags, missing files or malformed input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load_json(path, flag):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{flag}: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag}: {path}: line {exc.lineno}: {exc.msg}") from None


def _read(path, flag):
    if path is None:
        raise UsageError(f"{flag} is required")
    try:
        return read_matrix(path)
    except FileNotFoundError:
        raise UsageError(f"{flag}: file not found: {path}") from None
    except MatrixParseError as exc:
        raise UsageError(f"{flag}: {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"{flag}: {path}: {exc}") from None


def _floats(text, flag):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma separated numbers, got {text!r}") from None


def reduced_to_json(rp, nd=None):
    out = {
        "Y": matrix_to_json(rp.Y),
        "Xs": matrix_to_json(rp.Xs),
        "col_weights": [float(v) for v in rp.col_weights],
        "row_weights": [float(v) for v in rp.row_weights],
    }
    out.update(rp.report())
    if rp.labels is not None:
        out["labels"] = [int(v) for v in rp.labels]
    if nd is not None:
        out["kept"] = [int(v) for v in nd.kept]
        out["norms"] = [float(v) for v in nd.norms]
    return out


def reduced_from_json(obj):
    try:
        return ReducedProblem(
            Y=matrix_from_json(obj["Y"]),
            Xs=matrix_from_json(obj["Xs"]),
            col_weights=np.asarray(obj["col_weights"], dtype=np.float64),
            row_weights=np.asarray(obj["row_weights"], dtype=np.float64),
            cluster_sizes=None if obj.get("cluster_sizes") is None else np.asarray(obj["cluster_sizes"], dtype=int),
            diameters=None if obj.get("diameters") is None else np.asarray(obj["diameters"], dtype=np.float64),
            source_index=None if obj.get("source_index") is None else np.asarray(obj["source_index"], dtype=int),
        )
    except (KeyError, TypeError) as exc:
        raise MatrixParseError(f"malformed reduced-problem JSON: missing {exc}") from None


def _load_problem(path):
    if path is None:
        raise UsageError("--input is required")
    if Path(path).suffix.lower() == ".json":
        obj = _load_json(path, "--input")
        if isinstance(obj, dict) and "Y" in obj:
            try:
                return reduced_from_json(obj)
            except ValueError as exc:
                raise UsageError(f"--input: {path}: {exc}") from None
    X = _read(path, "--input")
    return self_representation(X / np.linalg.norm(X, axis=0))


# ---------------------------------------------------------------- commands


def cmd_synth(args):
    truth = {}
    if args.kind == "mixtures" or args.kind == "spike":
        E = synth.random_endmembers(args.m, args.n, args.min_angle, args.seed)
        plan = synth.MixturePlan(E, tuple(int(c) for c in _floats(args.counts, "--counts")), args.noise, args.seed)
        X, _ = synth.gen_mixtures(plan)
        truth["pure_indices"] = [[int(i) for i in p] for p in synth.pure_indices(plan)]
        truth["endmembers"] = matrix_to_json(E)
        if args.kind == "spike":
            X, spiked = synth.gen_spike_outliers(X, args.spike_height, args.fraction, args.seed)
            truth["spiked"] = [int(i) for i in spiked]
        if args.endmembers_out:
            write_matrix(args.endmembers_out, E)
    elif args.kind == "bss":
        X, S0 = synth.gen_bss(source_len=args.source_len, active_density=args.density, seed=args.seed)
        truth["A0"] = matrix_to_json(synth.BSS_A0)
        if args.endmembers_out:
            write_matrix(args.endmembers_out, synth.BSS_A0)
    elif args.kind == "cone":
        X, ext = synth.gen_cone_instance(args.seed, m=args.m)
        truth["extremes"] = [int(i) for i in ext]
    else:  # scene
        scene = synth.gen_color_scene(args.seed)
        X = scene.X
        truth["labels"] = [int(v) for v in scene.labels]
    write_matrix(args.out, X)
    if args.truth_out:
        _dump_json(args.truth_out, truth)
    print(f"wrote {X.shape[0]}x{X.shape[1]} matrix to {args.out}")
    return EXIT_OK


def cmd_reduce(args):
    X = _read(args.input, "--input")
    if not 0 <= args.drop < 1:
        raise UsageError("--drop must lie in [0, 1)")
    try:
        rp, nd = reduce_data(X, args.max_clusters, args.cos, args.iters, args.drop)
    except ValueError as exc:
        raise UsageError(f"--input: {exc}") from None
    _dump_json(args.out, reduced_to_json(rp, nd))
    print(f"{rp.n_c} candidates from {X.shape[1]} columns -> {args.out}")
    return EXIT_OK


def _solver_config(args, model):
    try:
        return SolverConfig(zeta=args.zeta, beta=args.beta, nu=args.nu, h=args.h, delta=args.delta, mu=args.mu,
                            gamma=args.gamma, eta=args.eta, tol=args.tol, max_iter=args.max_iter,
                            select_threshold=args.select_threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_detect(args):
    if args.model == "extended" and not args.mu > 2:
        raise UsageError("mu must exceed 2")
    cfg = _solver_config(args, args.model)
    rp = _load_problem(args.input)
    if args.model == "basic":
        res = solve_basic(rp, cfg, track_objective=False)
        report = res.report()
    else:
        res = solve_extended(rp, cfg=cfg)
        report = extended_report(rp, res)
        report["e"] = [float(v) for v in res.e]
    report["model"] = args.model
    report["config"] = cfg.as_dict()
    sel = res.selected
    report["indices_X"] = [int(i) for i in (rp.source_index[sel] if rp.source_index is not None else sel)]
    report["radii"] = [float(r) for r in (rp.diameters[sel] if rp.diameters is not None else np.zeros(len(sel)))]
    if len(sel):
        report["A"] = matrix_to_json(rp.Y[:, sel])
    _dump_json(args.out, report)
    if args.T_out:
        write_matrix(args.T_out, res.T)
    print(f"{args.model}: selected {len(sel)} of {rp.n_c} candidates in {res.iterations} iterations"
          f" ({'converged' if res.converged else 'not converged'}) -> {args.out}")
    if args.strict and not res.converged:
        print("solver stopped at max_iter before reaching tol", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _sigma_full(A, X, nu, h):
    return None if nu == 0 else similarity_weights(A, X, nu, h)


def cmd_refine(args):
    if args.result is None:
        raise UsageError("--result is required")
    result = _load_json(args.result, "--result")
    if "A" not in result:
        raise UsageError("--result: no endmembers were selected")
    try:
        A = matrix_from_json(result["A"])
        em = EndmemberSet(A=A, indices_Y=result["selected"], indices_X=result["indices_X"], radii=result["radii"])
    except (KeyError, ValueError) as exc:
        raise UsageError(f"--result: {args.result}: {exc}") from None
    X = _read(args.input, "--input")
    X = X[:, np.linalg.norm(X, axis=0) > 0]
    X = X / np.linalg.norm(X, axis=0)
    if X.shape[0] != A.shape[0]:
        raise UsageError("--input: row count does not match the endmembers")
    out = refine(em, X, _sigma_full(A, X, args.nu, args.h), outer_iters=args.iters)
    write_matrix(args.out, out.A)
    if args.abundances_out:
        write_matrix(args.abundances_out, out.S)
    print(f"refined {em.n} endmembers in {len(out.objectives)} outer iterations -> {args.out}")
    return EXIT_OK


def cmd_unmix(args):
    A = _read(args.endmembers, "--endmembers")
    X = _read(args.full_X, "--full-X")
    if X.shape[0] != A.shape[0]:
        raise UsageError("--full-X: row count does not match the endmembers")
    if (args.height is None) != (args.width is None):
        raise UsageError("--height and --width must be given together")
    if args.height is not None and args.height * args.width != X.shape[1]:
        raise UsageError(f"--height x --width must equal the {X.shape[1]} columns of --full-X")
    A = A / np.linalg.norm(A, axis=0)
    S = solve_abundances(A, X, _sigma_full(A, X, args.nu, args.h))
    write_matrix(args.out, S)
    if args.height is not None:
        prefix = args.pgm_prefix or str(Path(args.out).with_suffix(""))
        for i in range(S.shape[0]):
            write_pgm(f"{prefix}_{i}.pgm", S[i].reshape(args.height, args.width))
    rel = float(np.linalg.norm(A @ S - X) / np.linalg.norm(X))
    print(f"abundances for {S.shape[1]} columns, relative residual {rel:.3e} -> {args.out}")
    return EXIT_OK


def cmd_score(args):
    est = _read(args.est, "--est")
    truth = _read(args.truth, "--truth")
    if est.shape[0] != truth.shape[0]:
        raise UsageError("--est and --truth must have the same number of rows")
    rep = match_and_score(est, truth)
    print(format_angle_table([(args.label, rep.avg_deg, rep.min_deg, rep.max_deg)]))
    if rep.unmatched_est.size or rep.unmatched_true.size:
        print(f"unmatched estimated: {rep.unmatched_est.tolist()}  unmatched true: {rep.unmatched_true.tolist()}")
    if args.out:
        _dump_json(args.out, rep.as_dict())
    return EXIT_OK


def cmd_stability(args):
    levels = _floats(args.levels, "--levels")
    X = _read(args.input, "--input") if args.input else synth.gen_cone_instance(args.seed)[0]
    power = args.alpha_power
    try:
        cfg = StabilityConfig(noise_levels=tuple(levels), alpha_rule=lambda d: d**power, trials=args.trials,
                              seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"--levels: {exc}") from None
    if X.shape[1] > 16:
        raise UsageError(f"--input: the stability experiment enumerates column subsets; "
                         f"{X.shape[1]} columns exceeds 16")
    report = run_stability(X, cfg)
    report["alpha_power"] = power
    if args.out:
        _dump_json(args.out, report)
    print(f"|I| = {report['n_extreme']}  alpha rule conforming: {report['alpha_rule_conforming']}")
    print(f"{'noise':>9}  {'alpha':>9}  {'fidelity':>10}  {'l1inf':>10}  {'gap':>10}")
    for r in report["levels"]:
        print(f"{r['noise']:9.2e}  {r['alpha']:9.2e}  {r['fidelity']:10.3e}  {r['l1inf']:10.6f}  {r['gap']:10.3e}")
    if args.strict and not report["converged"]:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _model_flags(p):
    p.add_argument("--zeta", type=float, default=DEFAULTS.zeta)
    p.add_argument("--beta", type=float, default=DEFAULTS.beta)
    p.add_argument("--nu", type=float, default=DEFAULTS.nu)
    p.add_argument("--h", type=float, default=DEFAULT_H)
    p.add_argument("--delta", type=float, default=DEFAULTS.delta)
    p.add_argument("--mu", type=float, default=DEFAULTS.mu)
    p.add_argument("--gamma", type=float, default=DEFAULTS.gamma)
    p.add_argument("--eta", type=float, default=DEFAULTS.eta)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--select-threshold", type=float, default=DEFAULTS.select_threshold)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file supplying flag values; command line wins")
    common.add_argument("--threads", type=int, default=1, help="cap on BLAS threads (default 1)")
    common.add_argument("--strict", action="store_true", help="exit 2 if a solver does not converge")

    parser = _Parser(prog="conefactor", description="Endmember detection by nonnegative self-representation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="write a synthetic data set")
    p.add_argument("--kind", choices=["mixtures", "spike", "bss", "cone", "scene"], default="mixtures")
    p.add_argument("--m", type=int, default=100, help="number of bands")
    p.add_argument("--n", type=int, default=9, help="number of endmembers")
    p.add_argument("--counts", default="50,30,10,30", help="pure,pairs,triples,full sample counts")
    p.add_argument("--noise", type=float, default=0.006)
    p.add_argument("--min-angle", type=float, default=15.0)
    p.add_argument("--spike-height", type=float, default=1.0)
    p.add_argument("--fraction", type=float, default=0.03)
    p.add_argument("--source-len", type=int, default=5000)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="X.csv")
    p.add_argument("--truth-out")
    p.add_argument("--endmembers-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reduce", parents=[common], help="k-means candidate reduction")
    p.add_argument("--input")
    p.add_argument("--max-clusters", type=int, default=150)
    p.add_argument("--cos", type=float, default=0.995)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--drop", type=float, default=0.0, help="drop columns below this fraction of the largest norm")
    p.add_argument("--out", default="reduced.json")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("detect", parents=[common], help="select endmembers")
    p.add_argument("--model", choices=["basic", "extended"], default="basic")
    p.add_argument("--input", help="reduced.json from `reduce`, or a data matrix used as its own dictionary")
    _model_flags(p)
    p.add_argument("--out", default="result.json")
    p.add_argument("--T-out", dest="T_out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("refine", parents=[common], help="refine selected endmembers")
    p.add_argument("--result")
    p.add_argument("--input", help="full data matrix")
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--h", type=float, default=DEFAULT_H)
    p.add_argument("--out", default="A.csv")
    p.add_argument("--abundances-out")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("unmix", parents=[common], help="abundances for the full data")
    p.add_argument("--endmembers")
    p.add_argument("--full-X", dest="full_X")
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--h", type=float, default=DEFAULT_H)
    p.add_argument("--out", default="S.csv")
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--pgm-prefix")
    p.set_defaults(func=cmd_unmix)

    p = sub.add_parser("score", parents=[common], help="deviation angles to true endmembers")
    p.add_argument("--est")
    p.add_argument("--truth")
    p.add_argument("--label", default="estimate")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stability", parents=[common], help="noise-stability experiment")
    p.add_argument("--input")
    p.add_argument("--levels", default="1e-1,1e-2,1e-3")
    p.add_argument("--alpha-power", type=float, default=1.0, help="alpha = noise ** power")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)
    return parser, sub.choices


def _apply_config(parser, subparsers, argv):
    """Load ``--config`` and install its values as subcommand defaults."""
    pre = _Parser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command not in subparsers:
        return
    cfg = _load_json(known.config, "--config")
    if not isinstance(cfg, dict):
        raise UsageError("--config: expected a JSON object")
    sp = subparsers[known.command]
    dests = {a.dest for a in sp._actions}
    values = {}
    for key, val in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests or dest in ("help", "config"):
            raise UsageError(f"--config: unknown option {key!r} for {known.command}")
        values[dest] = val
    sp.set_defaults(**values)


# destinations written with write_matrix, checked before any work is done
MATRIX_OUTPUTS = {"synth": ("out", "endmembers_out"), "detect": ("T_out",), "refine": ("out", "abundances_out"),
                  "unmix": ("out",)}


def _check_outputs(args):
    for dest in MATRIX_OUTPUTS.get(args.command, ()):
        path = getattr(args, dest, None)
        if path and Path(path).suffix.lower() not in (".csv", ".json"):
            raise UsageError(f"--{dest.replace('_', '-')}: {path}: matrix outputs must end in .csv or .json")


def run(argv=None):
    """Run the command line with `argv` and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        _apply_config(parser, subparsers, argv)
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        _check_outputs(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
