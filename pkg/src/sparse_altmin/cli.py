"""Command line front end: ``sparse-altmin <subcommand> ...``.

Exit status is 0 on success, 1 for usage and configuration errors and 2
for failures while running. Messages go to stderr.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .decoding import DecodeConfig
from .descent import (
    DescentConfig,
    DescentAborted,
    column_slacks,
    default_correlation_params,
    default_eta,
    run_descent,
)
from .fileio import (
    ConfigError,
    candidates_to_json,
    load_config,
    read_matrix,
    report_to_text,
    write_matrix,
    write_trace_csv,
)
from .genmodel import (
    RADEMACHER,
    ModelParams,
    generate_dictionary,
    generate_samples,
    perturb_dictionary,
    stream,
    support_stats,
)
from .initialization import InitConfig, pairwise_init, pairwise_init_from_samples
from .metrics import align, match_columns, nearness
from .updates import EMPIRICAL, MODES, ORACLE, RULES, ProjectionSetB, estimate_gradient


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _model_args(p, need_k=True):
    if need_k:
        p.add_argument("--k", type=int, required=True, help="sparsity")
    p.add_argument("--coeff-law", default=RADEMACHER, choices=["rademacher", "signed_uniform"])
    p.add_argument("--C", type=float, default=1.0, help="minimum coefficient magnitude")
    p.add_argument("--noise", type=float, default=0.0, help="noise standard deviation")


def _params(A, args):
    n, m = A.shape
    return ModelParams(n=n, m=m, k=args.k, coeff_law=args.coeff_law, noise_sigma=args.noise, C=args.C)


def _read_dict_samples(path):
    # sample files hold one sample per column
    return read_matrix(path).T


def cmd_gen_dict(args):
    write_matrix(args.out, generate_dictionary(args.n, args.m, args.seed))


def cmd_gen_samples(args):
    A = read_matrix(args.dict)
    params = _params(A, args)
    Y, X = generate_samples(A, params, args.p, stream(args.seed, "codes"), stream(args.seed, "noise"))
    write_matrix(args.out, Y.T)
    if args.codes_out:
        write_matrix(args.codes_out, X.T)


def _init_config(args):
    return InitConfig(
        p1=args.p1,
        p2=args.p2,
        sigma1_floor=args.sigma1_floor,
        sigma2_ceil=args.sigma2_ceil,
        dedup_radius=args.dedup_radius,
        max_pairs=args.max_pairs,
        seed=args.seed,
    )


def cmd_init(args):
    cfg = _init_config(args)
    if args.ref:
        Astar = read_matrix(args.ref)
        A0, found = pairwise_init(Astar, _params(Astar, args), cfg, moment_mode=args.moment)
    else:
        if not (args.pairs and args.moments):
            raise UsageError("init: give --ref, or both --pairs and --moments")
        Yp = _read_dict_samples(args.pairs)
        Ym = _read_dict_samples(args.moments)
        n, m = Yp.shape[1], args.m
        if m is None:
            raise UsageError("init: --m is required with --pairs/--moments")
        params = ModelParams(n=n, m=m, k=args.k, coeff_law=args.coeff_law, noise_sigma=args.noise, C=args.C)
        A0, found = pairwise_init_from_samples(Yp, Ym, params, cfg)
    write_matrix(args.out, A0)
    if args.candidates:
        Path(args.candidates).write_text(candidates_to_json(found) + "\n", encoding="utf-8")


def _learn(Astar, A0, params, rule, mode, iterations, p_per_iter, eta_scale, eta, seed, project_delta0):
    eta = default_eta(params, eta_scale) if eta is None else eta
    project = None
    if project_delta0 is not None:
        perm, signs = match_columns(A0, Astar)
        project = ProjectionSetB(
            A0=align(A0, perm, signs), delta0=project_delta0, norm_cap=2.0 * np.linalg.norm(Astar, 2)
        )
    cfg = DescentConfig(
        rule=rule,
        eta=eta,
        iterations=iterations,
        p_per_iter=p_per_iter,
        mode=mode,
        project=project,
        seed=seed,
    )
    return run_descent(Astar, A0, params, cfg)


def cmd_learn(args):
    Astar = read_matrix(args.ref)
    params = _params(Astar, args)
    if args.init:
        A0 = read_matrix(args.init)
    else:
        A0 = perturb_dictionary(Astar, args.perturb, stream(args.seed, "perturb"))
    A, trace = _learn(
        Astar, A0, params, args.rule, args.mode, args.iterations, args.p_per_iter,
        args.eta_scale, args.eta, args.seed, args.project_delta0,
    )
    write_matrix(args.out, A)
    write_trace_csv(args.trace, trace)


def cmd_eval(args):
    A = read_matrix(args.dict)
    Aref = read_matrix(args.ref)
    print(report_to_text(nearness(A, Aref, args.delta, args.kappa)))


def cmd_diagnose(args):
    A = read_matrix(args.dict)
    Astar = read_matrix(args.ref)
    params = _params(Astar, args)
    stats = support_stats(params)
    A = align(A, *match_columns(A, Astar))
    batch = None
    if args.mode == EMPIRICAL:
        batch, _ = generate_samples(Astar, params, args.p, stream(args.seed, "batch", 0), stream(args.seed, "noise", 0))
    G = estimate_gradient(
        args.rule, args.mode, A, Astar=Astar, stats=stats, batch=batch,
        cfg=DecodeConfig.for_model(params),
    ).G
    slack = column_slacks(G, A, Astar, default_correlation_params(stats))
    err = np.linalg.norm(A - Astar, axis=0)
    gnorm = np.linalg.norm(G, axis=0)
    lines = ["col,col_err,grad_norm,slack"]
    lines += [f"{i},{err[i]:.17g},{gnorm[i]:.17g},{slack[i]:.17g}" for i in range(A.shape[1])]
    print("\n".join(lines))


EXPERIMENT_REQUIRED = ("n", "m", "k", "seed", "rule", "iterations", "out_trace")


def run_experiment(cfg, base=Path(".")):
    """Chain dictionary generation, a starting point, descent and evaluation.

    ``start = perturb`` (default) moves every true column by
    ``perturb_delta``; ``start = init`` runs the pairwise initialization.
    Relative output paths resolve against ``base``. Returns
    ``(A, trace, report)``.
    """
    unknown_choice = [
        (key, cfg[key], allowed)
        for key, allowed in (("rule", RULES), ("mode", MODES), ("start", ("perturb", "init")),
                             ("init_moment", ("empirical", "analytic")))
        if key in cfg and cfg[key] not in allowed
    ]
    if unknown_choice:
        key, val, allowed = unknown_choice[0]
        raise ConfigError(f"{key} = {val!r}; expected one of {allowed}")

    def out(key):
        return base / cfg[key] if key in cfg else None

    seed = cfg["seed"]
    params = ModelParams(
        n=cfg["n"], m=cfg["m"], k=cfg["k"], coeff_law=cfg.get("coeff_law", RADEMACHER),
        noise_sigma=cfg.get("noise_sigma", 0.0), C=cfg.get("C", 1.0),
    )
    Astar = generate_dictionary(params.n, params.m, cfg.get("dict_seed", seed))
    if out("out_dict") is not None:
        write_matrix(out("out_dict"), Astar)

    if cfg.get("start", "perturb") == "init":
        icfg = InitConfig(
            p1=cfg.get("init_p1", 2000),
            p2=cfg.get("init_p2", 100_000),
            sigma1_floor=cfg.get("sigma1_floor", InitConfig.sigma1_floor),
            sigma2_ceil=cfg.get("sigma2_ceil", InitConfig.sigma2_ceil),
            dedup_radius=cfg.get("dedup_radius"),
            max_pairs=cfg.get("max_pairs"),
            seed=seed,
        )
        A0, found = pairwise_init(Astar, params, icfg, moment_mode=cfg.get("init_moment", "empirical"))
        if out("out_candidates") is not None:
            out("out_candidates").write_text(candidates_to_json(found) + "\n", encoding="utf-8")
    else:
        A0 = perturb_dictionary(Astar, cfg.get("perturb_delta", 0.1), stream(seed, "perturb"))
    if out("out_init") is not None:
        write_matrix(out("out_init"), A0)

    A, trace = _learn(
        Astar, A0, params, cfg["rule"], cfg.get("mode", ORACLE), cfg["iterations"],
        cfg.get("p_per_iter", 0), cfg.get("eta_scale", 0.25), None, seed, cfg.get("project_delta0"),
    )
    write_trace_csv(out("out_trace"), trace)
    report = nearness(A, Astar, cfg.get("delta_target", np.inf), cfg.get("kappa_target", np.inf))
    if out("out_report") is not None:
        out("out_report").write_text(report_to_text(report) + "\n", encoding="utf-8")
    return A, trace, report


def cmd_experiment(args):
    path = Path(args.config)
    try:
        cfg = load_config(path, EXPERIMENT_REQUIRED)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    _, _, report = run_experiment(cfg, base=path.parent)
    print(report_to_text(report))


def build_parser():
    parser = _Parser(prog="sparse-altmin", description="Provable alternating minimization for sparse coding.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-dict", help="write a random incoherent dictionary")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dict)

    p = sub.add_parser("gen-samples", help="write samples (one per column) from a dictionary")
    p.add_argument("--dict", required=True)
    p.add_argument("--p", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--codes-out")
    _model_args(p)
    p.set_defaults(func=cmd_gen_samples)

    p = sub.add_parser("init", help="pairwise spectral initialization")
    p.add_argument("--ref", help="ground-truth dictionary (synthetic mode)")
    p.add_argument("--pairs", help="sample file for the pair pool (data mode)")
    p.add_argument("--moments", help="sample file for moment estimation (data mode)")
    p.add_argument("--m", type=int, help="number of atoms (data mode)")
    p.add_argument("--moment", default="empirical", choices=["empirical", "analytic"])
    p.add_argument("--p1", type=int, default=2000)
    p.add_argument("--p2", type=int, default=100_000)
    p.add_argument("--sigma1-floor", type=float, default=InitConfig.sigma1_floor)
    p.add_argument("--sigma2-ceil", type=float, default=InitConfig.sigma2_ceil)
    p.add_argument("--dedup-radius", type=float)
    p.add_argument("--max-pairs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--candidates", help="write the candidate list as JSON")
    _model_args(p)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("learn", help="run approximate gradient descent")
    p.add_argument("--ref", required=True, help="ground-truth dictionary")
    p.add_argument("--init", help="starting dictionary; default perturbs --ref")
    p.add_argument("--perturb", type=float, default=0.1, help="column distance of the default start")
    p.add_argument("--rule", choices=RULES, default="simple")
    p.add_argument("--mode", choices=MODES, default=ORACLE)
    p.add_argument("--iterations", type=int, default=25)
    p.add_argument("--p-per-iter", type=int, default=0)
    p.add_argument("--eta-scale", type=float, default=0.25)
    p.add_argument("--eta", type=float, help="step size; overrides --eta-scale")
    p.add_argument("--project-delta0", type=float, help="project onto column balls of this radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", required=True)
    _model_args(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="compare a dictionary with a reference")
    p.add_argument("--dict", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--delta", type=float, default=np.inf)
    p.add_argument("--kappa", type=float, default=np.inf)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diagnose", help="per-column correlation slacks")
    p.add_argument("--dict", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--rule", choices=RULES, default="simple")
    p.add_argument("--mode", choices=MODES, default=ORACLE)
    p.add_argument("--p", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    _model_args(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("experiment", help="init, learn and eval from one config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DescentAborted as exc:
        print(f"error: {exc} ({len(exc.trace)} trace rows)", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
