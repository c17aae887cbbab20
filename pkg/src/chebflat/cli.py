"""Command-line entry point: ``chebflat approx|certify|ham|bench``.

Exit codes: 0 success, 2 invalid input, 3 a certificate was not obtained,
4 an acceptance threshold was missed.  Every JSON file written embeds the
tool version and the effective configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_THRESHOLD = 0, 2, 3, 4

# destinations that are paths or switches rather than run parameters
_NOT_CONFIG = {"func", "config", "out", "out_dir", "quiet"}


class UsageError(ValueError):
    pass


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys use - or _."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = val
    return cfg


def _effective(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _stamp(payload: dict, args) -> dict:
    return {"version": __version__, "config": _effective(args), **payload}


def _write_json(path, payload):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(args, msg):
    if not getattr(args, "quiet", False):
        print(msg)


# ---------------------------------------------------------------------------
# approx

def cmd_approx_build(args) -> int:
    from .flatexp import build_flat, choose_flat_params, verify_flat_property

    try:
        params = choose_flat_params(args.eps, args.eta, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    q = build_flat(params)
    rep = verify_flat_property(q, n_inner=args.n_inner, n_outer=args.n_outer,
                               outer_factor=args.outer_factor)
    approx = {
        "params": {"eps": params.eps, "eta": params.eta, "t": params.t, "k": params.k,
                   "l": params.l, "degree_bound": params.degree_bound},
        "scale": q.factors[0].scale,
        "factors": [{"order": f.degree(), "coeffs": f.coeffs.tolist(),
                     "coeffs_lo": f.low_parts().tolist()} for f in q.factors],
    }
    _write_json(os.path.join(args.out_dir, "approx.json"), _stamp(approx, args))
    _write_json(os.path.join(args.out_dir, "report.json"), _stamp(rep.to_dict(), args))
    _say(args, f"k={params.k} l={params.l} degree={q.degree()} "
               f"max_abs_err={rep.max_abs_err:.3e} max_flat_ratio={rep.max_flat_ratio:.4g} "
               f"pass={str(rep.passed).lower()}")
    return EXIT_OK if rep.passed else EXIT_THRESHOLD


def cmd_approx_compare(args) -> int:
    from .flatexp import degree_table

    try:
        rows = degree_table(args.t, args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _say(args, f"{'t':>6s} {'eps':>8s} {'chebyshev':>10s} {'taylor':>7s}")
    for r in rows:
        _say(args, f"{r['t']:6g} {r['eps']:8g} {r['chebyshev']:10d} {r['taylor']:7d}")
    if args.out:
        _write_json(args.out, _stamp({"rows": rows}, args))
    ok = all(r["chebyshev"] <= r["taylor"] for r in rows if r["t"] >= 1)
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# certify

def _certify_one(job):
    from .certify import certify_sign

    N, max_bits, start_bits = job
    return certify_sign(N, max_bits=max_bits, start_bits=start_bits)


def cmd_certify(args) -> int:
    if args.from_ < 2 or args.to < args.from_:
        raise UsageError("need 2 <= --from <= --to")
    jobs = [(N, args.max_bits, args.start_bits) for N in range(args.from_, args.to + 1)]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as ex:
            certs = list(ex.map(_certify_one, jobs))
    else:
        certs = [_certify_one(j) for j in jobs]
    # certificates carry only the settings that affect them, so any range reproduces them
    cfg = {"max_bits": args.max_bits, "start_bits": args.start_bits}
    failed = 0
    _say(args, f"{'N':>5s} {'parity':>6s} {'claim':>9s} {'status':>14s} {'roots':>5s} {'bits':>5s}")
    for c in certs:
        if args.out_dir:
            payload = {"version": __version__, "config": cfg, "certificate": c.to_dict()}
            _write_json(os.path.join(args.out_dir, f"G_{c.N:04d}.json"), payload)
        failed += c.status != "certified"
        _say(args, f"{c.N:5d} {c.parity:>6s} {c.claim:>9s} {c.status:>14s} "
                   f"{c.root_count_in_window!s:>5s} {c.precision_used:5d}")
    _say(args, f"{len(certs) - failed} certified, {failed} not certified")
    return EXIT_CERT if failed else EXIT_OK


# ---------------------------------------------------------------------------
# ham

def _build(args):
    from .qham.presets import build_preset

    if args.beta is not None and args.beta <= 0:
        raise UsageError("--beta must be positive")
    try:
        pop, H = build_preset(args.preset, args.beta, trace=args.trace, samples=args.samples,
                              seed=args.seed, eps=args.eps, CkG=args.ckg,
                              A_size=args.set_size_a, B_size=args.set_size_b,
                              override_flat=args.override_flat)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    args.beta = pop.metadata["beta"]
    return pop, H


def cmd_ham_generate(args) -> int:
    from .qham.gibbs import density_defects, gibbs_state
    from .qham.pauli import interaction_graph

    pop, H = _build(args)
    rho = gibbs_state(H, pop.metadata["beta"])
    g = interaction_graph(H)
    payload = {
        "hamiltonian": {"terms": [str(t) for t in H.terms], "couplings": list(H.couplings),
                        "locality": H.locality},
        "interaction_graph": {"edges": g.edges(), "max_degree": g.max_degree},
        "gibbs": density_defects(rho),
        "instance": {"m": pop.m, "constraints": len(pop.constraints),
                     "residual_only": pop.residual_only, "metadata": pop.metadata},
    }
    _write_json(args.out, _stamp(payload, args))
    _say(args, f"{args.preset}: m={pop.m} constraints={len(pop.constraints)} "
               f"residual_only={pop.residual_only} -> {args.out}")
    return EXIT_OK


def _parse_lam(text, m):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != m:
        raise UsageError(f"--lam needs {m} comma-separated values")
    return vals


def cmd_ham_residuals(args) -> int:
    from .qham.pop import residual_report

    pop, H = _build(args)
    lam = list(H.couplings) if args.at_truth or args.lam is None else _parse_lam(args.lam, pop.m)
    try:
        rep = residual_report(pop, lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep["lam"] = lam
    rep["at_truth"] = lam == list(H.couplings)
    if args.out:
        _write_json(args.out, _stamp(rep, args))
    _say(args, f"constraints={len(rep['lhs'])} max_ratio={rep['max_ratio']:.3e} "
               f"all_pass={str(rep['all_pass']).lower()}")
    return EXIT_OK if rep["all_pass"] else EXIT_THRESHOLD


def cmd_ham_learn(args) -> int:
    from .qham.pop import learn

    pop, H = _build(args)
    lam, rep = learn(pop, starts=args.starts, max_iters=args.max_iters, seed=args.seed,
                     threads=args.threads)
    err = float(np.max(np.abs(lam - np.asarray(H.couplings))))
    rep.update({"lam_hat": lam.tolist(), "lam_true": list(H.couplings),
                "max_coupling_error": err, "tolerance": args.tol, "pass": err <= args.tol})
    if args.out:
        _write_json(args.out, _stamp(rep, args))
    _say(args, f"lam_hat={np.array2string(lam, precision=6)} max_coupling_error={err:.3e} "
               f"objective={rep['objective']:.3e} pass={str(err <= args.tol).lower()}")
    return EXIT_OK if err <= args.tol else EXIT_THRESHOLD


def cmd_ham_export(args) -> int:
    from .qham.pop import add_ball_constraint, export_pop

    pop, _ = _build(args)
    if pop.residual_only:
        raise UsageError(f"preset {args.preset} is residual-only "
                         f"({pop.metadata['expansion_monomials']} monomials per expansion "
                         f"> cap {pop.metadata['expansion_cap']}); nothing to export")
    if args.ball_radius != "none":
        R = None if args.ball_radius == "auto" else float(args.ball_radius)
        pop = add_ball_constraint(pop, R)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    export_pop(pop, args.out, config=_effective(args))
    _say(args, f"wrote {len(pop.constraints)} constraints, {pop.monomial_count} monomials, "
               f"ball_radius={pop.ball_radius} -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

def cmd_bench(args) -> int:
    from .bench import format_rows, run_benchmark

    rows = run_benchmark(repeats=args.repeats, seed=args.seed)
    _say(args, format_rows(rows))
    if args.out:
        _write_json(args.out, _stamp({"rows": rows}, args))
    return EXIT_OK


# ---------------------------------------------------------------------------

def _floats(text):
    return [float(v) for v in text.split(",")]


def build_parser():
    p = argparse.ArgumentParser(prog="chebflat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"chebflat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    leaves = []

    def leaf(parent, name, func, help_):
        q = parent.add_parser(name, help=help_)
        q.add_argument("--config", help="key = value file supplying defaults")
        q.add_argument("--quiet", action="store_true")
        q.set_defaults(func=func)
        leaves.append(q)
        return q

    ap = sub.add_parser("approx", help="flat approximation of exp").add_subparsers(
        dest="approx_cmd", required=True)
    b = leaf(ap, "build", cmd_approx_build, "build Q_{k,l} and verify flatness")
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--eta", type=float, default=0.5)
    b.add_argument("--t", type=float, default=1.0)
    b.add_argument("--n-inner", type=int, default=10001)
    b.add_argument("--n-outer", type=int, default=400)
    b.add_argument("--outer-factor", type=float, default=50.0)
    b.add_argument("--out-dir", default="chebflat-out")
    c = leaf(ap, "compare-taylor", cmd_approx_compare, "truncation orders vs Taylor")
    c.add_argument("--eps", type=_floats, default=[1e-3, 1e-6], help="comma-separated")
    c.add_argument("--t", type=_floats, default=[1.0, 2.0, 5.0], help="comma-separated")
    c.add_argument("--out")

    ce = leaf(sub, "certify", cmd_certify, "certify the sign of G_N for a range of N")
    ce.add_argument("--from", dest="from_", type=int, default=2)
    ce.add_argument("--to", type=int, default=50)
    ce.add_argument("--max-bits", type=int, default=1024)
    ce.add_argument("--start-bits", type=int, default=16)
    ce.add_argument("--threads", type=int, default=1)
    ce.add_argument("--out-dir", default=None, help="write one JSON certificate per N here")

    hp = sub.add_parser("ham", help="Hamiltonian learning instances").add_subparsers(
        dest="ham_cmd", required=True)
    hams = []
    for name, func, help_ in (("generate", cmd_ham_generate, "describe an instance"),
                              ("residuals", cmd_ham_residuals, "evaluate constraints"),
                              ("learn", cmd_ham_learn, "recover couplings"),
                              ("export", cmd_ham_export, "write the symbolic system")):
        h = leaf(hp, name, func, help_)
        h.add_argument("--preset", default="single-qubit",
                       choices=["single-qubit", "zz-chain-4", "tfim-4"])
        h.add_argument("--instance", help="instance file from 'ham generate'")
        h.add_argument("--beta", type=float, default=None)
        h.add_argument("--eps", type=float, default=0.01)
        h.add_argument("--ckg", type=float, default=1.0, help="the constant C(k,G)")
        h.add_argument("--trace", choices=["exact", "shot-noise"], default="exact")
        h.add_argument("--samples", type=int, default=0)
        h.add_argument("--seed", type=int, default=0)
        h.add_argument("--set-size-a", type=int, default=12)
        h.add_argument("--set-size-b", type=int, default=48)
        h.add_argument("--override-flat", action="store_true")
        h.add_argument("--threads", type=int, default=1)
        hams.append((name, h))
    hd = dict(hams)
    hd["generate"].add_argument("--out", default="instance.json")
    hd["residuals"].add_argument("--at-truth", action="store_true")
    hd["residuals"].add_argument("--lam", help="comma-separated couplings")
    hd["residuals"].add_argument("--out")
    hd["learn"].add_argument("--starts", type=int, default=8)
    hd["learn"].add_argument("--max-iters", type=int, default=200)
    hd["learn"].add_argument("--tol", type=float, default=0.05)
    hd["learn"].add_argument("--out")
    hd["export"].add_argument("--ball-radius", default="auto", help="auto, none or a number")
    hd["export"].add_argument("--out", default="pop.json")

    bn = leaf(sub, "bench", cmd_bench, "compiled vs pure-Python kernel timings")
    bn.add_argument("--repeats", type=int, default=3)
    bn.add_argument("--seed", type=int, default=0)
    bn.add_argument("--out")
    return p, leaves


# instance settings that 'ham' subcommands inherit from a 'ham generate' file
_INSTANCE_KEYS = ("preset", "beta", "eps", "ckg", "trace", "samples", "seed",
                  "set_size_a", "set_size_b", "override_flat")


def _apply_config(parser, leaves, argv):
    """Install defaults from --instance, then from --config.

    Precedence, lowest first: built-in defaults, instance file, config
    file, command line.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("--instance")
    known, _ = pre.parse_known_args(argv)
    if known.instance:
        with open(known.instance) as fh:
            inst = json.load(fh)["config"]
        vals = {k: inst[k] for k in _INSTANCE_KEYS if k in inst}
        for q in leaves:
            if "instance" in {a.dest for a in q._actions}:
                q.set_defaults(**vals)
    if known.config:
        _set_from_strings(leaves, read_config(known.config))


def _set_from_strings(leaves, cfg):
    for q in leaves:
        acts = {a.dest: a for a in q._actions}
        vals = {}
        for k, v in cfg.items():
            a = acts.get(k) or acts.get(k + "_")
            if a is None:
                continue
            if isinstance(a, argparse._StoreTrueAction):
                vals[a.dest] = v.lower() in ("1", "true", "yes", "on")
            else:
                vals[a.dest] = a.type(v) if a.type else v
        q.set_defaults(**vals)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, leaves = build_parser()
    try:
        _apply_config(parser, leaves, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"chebflat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"chebflat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
