"""Command-line front end.  Exit codes: 0 ok, 2 usage or invalid parameters, 3 runtime failure."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .density import DEConfig, de_step, de_step_single, initial_state, run_de, threshold_bracket, threshold_bracket_single
from .ensembles import (
    EnsembleParams,
    Variant,
    WiretapChannelSpec,
    check_fractions,
    design_rate_total,
    design_rate_wiretap,
    nominal_rate_chain,
    nominal_total_rate_chain,
    region_boundary,
    region_corners,
)
from .errors import InvalidParams, ScWiretapError
from .graphs import read_graph, sample_graph, to_parity_matrices, write_graph
from .rng import derive_seed, make_rng
from .stopping import GrowthRateQuery, first_zero, growth_rate
from .wiretap import (
    CosetCode,
    EquivocationReport,
    exact_equivocation,
    run_campaign,
    transmit_bec,
    write_jsonl,
    write_summary_csv,
)

SCHEMA = "scwiretap-cli v1"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

REFERENCE_R = {20: 0.2622, 30: 0.2582, 40: 0.2562, 50: 0.255, 60: 0.2541, 70: 0.2535}
REFERENCE_RE = {20: 0.2276, 30: 0.235, 40: 0.2387}


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _emit_header(out, args: argparse.Namespace) -> None:
    out.write(f"# {SCHEMA}\n")
    for k, v in sorted(vars(args).items()):
        if k in ("func",) or v is None:
            continue
        out.write(f"# {k}={fmt(v)}\n")


# ---------------------------------------------------------------------------
# argument groups


def _add_degrees(sp, chain_ok=True, needs_M=False):
    sp.add_argument("--l1", type=int, required=True)
    sp.add_argument("--l2", type=int, required=True)
    sp.add_argument("--r", type=int, help="common check degree (sets r1 and r2)")
    sp.add_argument("--r1", type=int)
    sp.add_argument("--r2", type=int)
    sp.add_argument("--L", type=int)
    sp.add_argument("--w", type=int)
    sp.add_argument("--M", type=int, required=needs_M)
    choices = [v.value for v in Variant] if chain_ok else [Variant.SMOOTHED.value]
    sp.add_argument("--variant", choices=choices, default=Variant.SMOOTHED.value)


def _add_channel(sp):
    sp.add_argument("--eps-m", type=float, required=True)
    sp.add_argument("--eps-w", type=float, required=True)


def _add_seed(sp):
    sp.add_argument("--seed", type=int, required=True, help="64-bit seed (mandatory)")


def _add_jobs(sp):
    sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)


def _params(a) -> EnsembleParams:
    r1 = a.r1 if a.r1 is not None else a.r
    r2 = a.r2 if a.r2 is not None else a.r
    if r1 is None or r2 is None:
        raise InvalidParams("give --r or both --r1 and --r2")
    return EnsembleParams(a.l1, a.l2, r1, r2, L=a.L, w=a.w, variant=Variant(a.variant), M=a.M)


def _de_cfg(a, eps: float = 0.5) -> DEConfig:
    return DEConfig(eps=eps, max_iters=a.max_iters, tol=a.tol, target_bit_er=a.target)


# ---------------------------------------------------------------------------
# commands


def cmd_threshold(a, out) -> int:
    p = _params(a)
    if a.eps_check is not None:
        res = run_de(p, _de_cfg(a, a.eps_check))
        out.write(f"eps={fmt(a.eps_check)} status={res.status} iters={res.iters} "
                  f"converged={res.converged_to_zero} max_residual={fmt(float(res.residual.max(initial=0.0)))}\n")
        return EXIT_OK
    if a.compare_single:
        if p.variant is not Variant.SMOOTHED or p.r1 != p.r2:
            raise InvalidParams("--compare-single needs the smoothed variant with r1 == r2")
        eps = a.eps if a.eps is not None else 0.45
        s = initial_state(p, eps)
        x = np.full(2 * p.L + 1, eps)
        out.write("iter,max_abs_diff\n")
        worst = 0.0
        for it in range(1, a.iters + 1):
            s = de_step(s, p, eps)
            x = de_step_single(x, p.l1 + p.l2, p.r1, p.L, p.w, eps)
            d = float(max(np.abs(s.x1 - x).max(), np.abs(s.x2 - x).max() if p.l2 else 0.0))
            worst = max(worst, d)
            out.write(f"{it},{fmt(d)}\n")
        b2 = threshold_bracket(p, _de_cfg(a), a.precision)
        b1 = threshold_bracket_single(p.l1 + p.l2, p.r1, p.L, p.w, _de_cfg(a), a.precision)
        out.write(f"# max_abs_diff={fmt(worst)}\n")
        out.write(f"# threshold_two_edge={fmt(b2.threshold)} threshold_single={fmt(b1.threshold)}\n")
        return EXIT_OK
    b = threshold_bracket(p, _de_cfg(a), a.precision)
    out.write(f"bracket_lo={fmt(b.lo)}\nbracket_hi={fmt(b.hi)}\nprobes={b.probes}\n"
              f"iterations={b.iterations}\nthreshold={fmt(b.threshold)}\n")
    return EXIT_OK


def cmd_de_profile(a, out) -> int:
    p = _params(a)
    rows = []

    def record(it, s):
        if it % a.every == 0:
            x1 = s.x1 if s.x1.ndim == 1 else s.x1.mean(axis=1)
            x2 = s.x2 if s.x2.ndim == 1 else (s.x2.mean(axis=1) if s.x2.size else np.zeros(len(x1)))
            for i, pos in enumerate(s.positions):
                rows.append((it, int(pos), float(x1[i]), float(x2[i])))

    res = run_de(p, _de_cfg(a, a.eps), on_iter=record)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["iter", "position", "x1", "x2"])
    for it, pos, x1, x2 in rows:
        w.writerow([it, pos, fmt(x1), fmt(x2)])
    out.write(f"# status={res.status} iters={res.iters}\n")
    return EXIT_OK


def cmd_designrate(a, out) -> int:
    p = _params(a)
    if p.variant is Variant.CHAIN:
        out.write(f"total_rate={fmt(nominal_total_rate_chain(p))}\n"
                  f"wiretap_rate={fmt(nominal_rate_chain(p))}\n")
    else:
        c1, c2 = check_fractions(p, a.strict)
        out.write(f"check_fraction_1={fmt(c1)}\ncheck_fraction_2={fmt(c2)}\n"
                  f"total_rate={fmt(design_rate_total(p, a.strict))}\n"
                  f"wiretap_rate={fmt(design_rate_wiretap(p, a.strict))}\n")
    return EXIT_OK


def cmd_region(a, out) -> int:
    ch = WiretapChannelSpec(a.eps_m, a.eps_w)
    for name, pt in zip("ABC", region_corners(ch)):
        out.write(f"# {name}=({fmt(pt.R)},{fmt(pt.Re)})\n")
    out.write("R,Re\n")
    for pt in region_boundary(ch, a.samples):
        out.write(f"{fmt(pt.R)},{fmt(pt.Re)}\n")
    return EXIT_OK


def cmd_sample(a, out) -> int:
    p = _params(a)
    g = sample_graph(p, make_rng(a.seed), mode=a.mode)
    if a.out:
        with open(a.out, "w", newline="\n") as fh:
            write_graph(g, fh)
        out.write(f"wrote {a.out}: n={g.n} m1={len(g.type1)} m2={len(g.type2)}\n")
    else:
        write_graph(g, out)
    return EXIT_OK


def cmd_simulate(a, out) -> int:
    p = _params(a)
    ch = WiretapChannelSpec(a.eps_m, a.eps_w)
    s = run_campaign(p, ch, a.trials, a.seed, jobs=a.jobs)
    if a.jsonl:
        with open(a.jsonl, "w") as fh:
            write_jsonl(s.records, fh)
    write_summary_csv([s], out)
    if s.errors:
        out.write(f"# trial_errors={s.errors}\n")
    return EXIT_OK


def cmd_equivocation(a, out) -> int:
    if a.graph:
        with open(a.graph) as fh:
            g = read_graph(fh)
    else:
        g = sample_graph(_params(a), make_rng(derive_seed(a.seed, 0)))
    code = CosetCode(*to_parity_matrices(g))
    rng = make_rng(derive_seed(a.seed, 1))
    x = np.zeros(code.n, dtype=np.uint8)
    items = [exact_equivocation(code, transmit_bec(x, a.eps_w, rng)[1]) for _ in range(a.trials)]
    rep = EquivocationReport.from_trials(items)
    out.write(f"n={code.n}\nsecret_dim={code.secret_dim}\ntrials={rep.trials}\n")
    for name in ("H_S_given_Z", "H_X_given_Z", "H_X_given_SZ"):
        out.write(f"{name}_mean={fmt(rep.mean(name))}\n{name}_stderr={fmt(rep.stderr(name))}\n")
    out.write(f"Re_mean={fmt(rep.mean() / code.n)}\n")
    return EXIT_OK


def cmd_growth(a, out) -> int:
    out.write("omega,growth_rate\n")
    for w in np.linspace(a.omega_min, a.omega_max, a.points):
        out.write(f"{fmt(float(w))},{fmt(growth_rate(GrowthRateQuery(a.l1, a.l2, a.r, float(w))))}\n")
    out.write(f"# omega_star={fmt(first_zero(a.l1, a.l2, a.r))}\n")
    return EXIT_OK


def cmd_table1(a, out) -> int:
    ch = WiretapChannelSpec(0.5, 0.75)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["L", "M", "trials", "R_nominal", "R_ref", "R_delta", "R_actual_mean",
                "Re_mean", "Re_stderr", "Re_ref", "Re_delta"])
    for L in a.L:
        p = EnsembleParams(3, 3, 6, 12, L=L, variant=Variant.CHAIN, M=a.M)
        rn = nominal_rate_chain(p)
        rp = REFERENCE_R.get(L)
        if a.trials > 0:
            s = run_campaign(p, ch, a.trials, derive_seed(a.seed, L), jobs=a.jobs)
            ra, re, se = s.R_actual_mean, s.Re_mean, s.Re_stderr
        else:
            ra = re = se = float("nan")
        ep = REFERENCE_RE.get(L)
        w.writerow([L, a.M, a.trials, fmt(rn), fmt(rp) if rp else "", fmt(rn - rp) if rp else "",
                    fmt(ra), fmt(re), fmt(se), fmt(ep) if ep else "", fmt(re - ep) if ep else ""])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scwiretap", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-o", "--output", help="write the report here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    def de_opts(sp):
        sp.add_argument("--max-iters", type=int, default=100_000)
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--target", type=float, default=1e-10)

    sp = sub.add_parser("threshold", help="BP threshold by density evolution")
    _add_degrees(sp)
    de_opts(sp)
    sp.add_argument("--precision", type=float, default=1e-4)
    sp.add_argument("--eps-check", type=float, help="run DE once at this eps")
    sp.add_argument("--compare-single", action="store_true",
                    help="compare with the merged single-type recursion")
    sp.add_argument("--eps", type=float, help="eps for --compare-single (default 0.45)")
    sp.add_argument("--iters", type=int, default=1000)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("de-profile", help="per-iteration DE profile as CSV")
    _add_degrees(sp)
    de_opts(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--every", type=int, default=1)
    sp.set_defaults(func=cmd_de_profile)

    sp = sub.add_parser("designrate", help="design rates from node counting")
    _add_degrees(sp)
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(func=cmd_designrate)

    sp = sub.add_parser("region", help="rate-equivocation region")
    _add_channel(sp)
    sp.add_argument("--samples", type=int, default=11)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("sample", help="sample a Tanner graph and export it")
    _add_degrees(sp, needs_M=True)
    _add_seed(sp)
    sp.add_argument("--mode", choices=["balanced", "strict", "iid"], default="balanced")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("simulate", help="Monte Carlo wiretap campaign")
    _add_degrees(sp, needs_M=True)
    _add_channel(sp)
    _add_seed(sp)
    _add_jobs(sp)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--jsonl", help="per-trial JSON lines")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equivocation", help="exact equivocation of one code")
    sp.add_argument("--graph", help="graph file from 'sample'")
    sp.add_argument("--l1", type=int)
    sp.add_argument("--l2", type=int)
    for k in ("--r", "--r1", "--r2", "--L", "--w", "--M"):
        sp.add_argument(k, type=int)
    sp.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.SMOOTHED.value)
    sp.add_argument("--eps-w", type=float, required=True)
    _add_seed(sp)
    sp.add_argument("--trials", type=int, default=200)
    sp.set_defaults(func=cmd_equivocation)

    sp = sub.add_parser("growth", help="stopping-set growth rate")
    sp.add_argument("--l1", type=int, required=True)
    sp.add_argument("--l2", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--omega-min", type=float, default=0.01)
    sp.add_argument("--omega-max", type=float, default=0.95)
    sp.set_defaults(func=cmd_growth)

    sp = sub.add_parser("table1", help="rate and equivocation of the {3,3,6,12,L} chain")
    sp.add_argument("--L", type=int, nargs="+", default=[20, 30, 40])
    sp.add_argument("--M", type=int, default=100)
    sp.add_argument("--trials", type=int, default=200)
    _add_seed(sp)
    _add_jobs(sp)
    sp.set_defaults(func=cmd_table1)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if a.command == "equivocation" and not a.graph and a.l1 is None:
        sys.stderr.write("error: equivocation needs --graph or ensemble degrees\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
    out = open(a.output, "w", newline="\n") if a.output else sys.stdout
    try:
        _emit_header(out, replace_output(a))
        return a.func(a, out)
    except InvalidParams as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (ScWiretapError, ValueError, ArithmeticError, OSError) as e:
        sys.stderr.write(f"runtime error: {e}\n")
        return EXIT_RUNTIME
    finally:
        if out is not sys.stdout:
            out.close()


def replace_output(a: argparse.Namespace) -> argparse.Namespace:
    """Namespace without the output path, so reports do not depend on where they are written."""
    d = dict(vars(a))
    d.pop("output", None)
    return argparse.Namespace(**d)


if __name__ == "__main__":
    sys.exit(main())
