"""Batch front-end: deterministic runs, CSV/JSON artifacts, self-test.

Every output embeds the resolved run specification and a format version,
and identical run specifications produce byte-identical files regardless of
worker count (trials are keyed by index and aggregated with exact integer
counters).  The default seed comes only from --seed: runs must be explicit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from fractions import Fraction

FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunSpec:
    subcommand: str
    p_values: tuple[float, ...]
    k_values: tuple[int, ...]
    trials: int
    master_seed: int
    workers: int
    out: str | None
    format: str
    extra: dict

    def to_json(self) -> str:
        # workers and out are execution details: they never affect results,
        # so they are excluded to keep artifacts byte-identical across pools
        doc = asdict(self)
        doc.pop("workers")
        doc.pop("out")
        return json.dumps(doc, sort_keys=True)


def _parse_p_values(args) -> tuple[float, ...]:
    if args.p_grid:
        lo, hi, step = (float(x) for x in args.p_grid.split(":"))
        vals = []
        v = lo
        while v <= hi + 1e-12:
            vals.append(round(v, 12))
            v += step
        return tuple(vals)
    if args.p is None:
        raise SystemExit("one of --p or --p-grid is required")
    return (args.p,)


def _parse_k_values(args) -> tuple[int, ...]:
    if getattr(args, "k_schedule", None):
        return tuple(int(x) for x in args.k_schedule.split(","))
    return (args.k,)


def _emit(spec: RunSpec, header: str, rows: list[str], json_doc: dict) -> None:
    if spec.format == "json":
        payload = json.dumps({"format": FORMAT_VERSION,
                              "runspec": json.loads(spec.to_json()),
                              **json_doc}, sort_keys=True) + "\n"
    else:
        lines = [f"# ballistic-format: {FORMAT_VERSION}",
                 f"# runspec: {spec.to_json()}", header]
        lines += rows
        payload = "\n".join(lines) + "\n"
    if spec.out:
        # write-then-rename so a failed run never leaves a partial artifact
        d = os.path.dirname(os.path.abspath(spec.out)) or "."
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".ballistic-tmp-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, spec.out)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        sys.stdout.write(payload)


def _cmd_simulate(spec: RunSpec) -> int:
    from .estimators import estimate_qk, estimate_r, estimate_theta
    from .model import Mode, ModelParams, Side
    mode = Mode.LATTICE if spec.extra.get("lattice") else Mode.CONTINUOUS
    rows = []
    jrows = []
    for p in spec.p_values:
        for k in spec.k_values:
            hp = ModelParams(p, mode, Side.HALF_LINE)
            ests = [("qk", estimate_qk(hp, k, spec.trials, spec.master_seed,
                                       spec.workers))]
            if k >= 2:
                ests.append(("r", estimate_r(hp, k, spec.trials,
                                             spec.master_seed, spec.workers)))
            fp = ModelParams(p, mode, Side.FULL_LINE)
            br = estimate_theta(fp, k, spec.trials, spec.master_seed,
                                spec.workers)
            ests += [("theta_lower", br.lower), ("theta_upper", br.upper)]
            for name, e in ests:
                rows.append(f"{p:.17g},{k},{spec.trials},{spec.master_seed},"
                            f"{name},{e.value:.17g},{e.stderr:.17g},"
                            f"{e.n_censored}")
                jrows.append({"p": p, "k": k, "trials": spec.trials,
                              "seed": spec.master_seed, "estimator": name,
                              "value": e.value, "stderr": e.stderr,
                              "censored": e.n_censored})
    _emit(spec, "p,k,trials,seed,estimator,value,stderr,censored", rows,
          {"rows": jrows})
    return 0


def _cmd_identities(spec: RunSpec) -> int:
    from .estimators import check_identities
    rows = []
    jrows = []
    for p in spec.p_values:
        rep = check_identities(p, spec.k_values[0], spec.trials,
                               spec.master_seed, spec.workers)
        for c in rep.checks:
            rows.append(f"{p:.17g},{spec.k_values[0]},{spec.trials},{c.name},"
                        f"{c.lhs:.17g},{c.rhs:.17g},{c.stderr:.17g},"
                        f"{c.z:.17g},{int(c.passed)}")
            jrows.append({"p": p, **c.__dict__})
    _emit(spec, "p,k,trials,identity,lhs,rhs,stderr,z,passed", rows,
          {"rows": jrows})
    return 0


def _cmd_scan_pc(spec: RunSpec) -> int:
    from .exactpoly import pc_upper_bound_scan
    kmax = spec.extra["kmax"]
    tol = Fraction(spec.extra.get("tol", "1/1000000"))
    rows = []
    jrows = []
    for k, lo, hi in pc_upper_bound_scan(kmax, tol):
        rows.append(f"{k},{float(lo):.17g},{float(hi):.17g}")
        jrows.append({"k": k, "lo": str(lo), "hi": str(hi),
                      "lo_float": float(lo), "hi_float": float(hi)})
    _emit(spec, "k,lo,hi", rows, {"rows": jrows})
    return 0


def _cmd_polynomial(spec: RunSpec) -> int:
    from .exactpoly import expected_Nk_poly, qk_poly
    k = spec.k_values[0]
    en = expected_Nk_poly(k)
    qk = qk_poly(k)
    rows = [f"EN,{k},\"{en.fraction_list()}\",\"{en.as_string()}\",\"{en.latex()}\"",
            f"q,{k},\"{qk.fraction_list()}\",\"{qk.as_string()}\",\"{qk.latex()}\""]
    _emit(spec, "quantity,k,coefficients,polynomial,latex", rows,
          {"polynomials": {"EN": {"k": k, "coefficients": en.fraction_list(),
                                  "text": en.as_string(), "latex": en.latex()},
                           "q": {"k": k, "coefficients": qk.fraction_list(),
                                 "text": qk.as_string(), "latex": qk.latex()}}})
    return 0


def _cmd_explore(spec: RunSpec) -> int:
    from .estimators import SUB_EXPLORER
    from .explorer import explore_blocks, survival_certificate
    from .model import Mode, ModelParams, Side, derive_stream
    mode = Mode.LATTICE if spec.extra.get("lattice") else Mode.CONTINUOUS
    params = ModelParams(spec.p_values[0], mode, Side.HALF_LINE)
    k = spec.k_values[0]
    iters = spec.extra["iters"]
    rows = []
    certs = 0
    complete = 0
    for t in range(spec.trials):
        st = derive_stream(spec.master_seed, t).substream(SUB_EXPLORER)
        tr = explore_blocks(params, k, iters, st)
        if not tr.truncated:
            complete += 1
        certs += int(survival_certificate(tr, k))
        for i, (kk, nt, eb) in enumerate(zip(tr.K, tr.N_tilde, tr.extended_by),
                                         start=1):
            rows.append(f"{t},{i},{kk},{nt},{eb},{int(tr.truncated)}")
    _emit(spec, "trace,iter,K,N_tilde,extended_by,truncated", rows,
          {"certificate_frequency": certs / spec.trials,
           "complete_traces": complete,
           "rows": [dict(zip(("trace", "iter", "K", "N_tilde", "extended_by",
                              "truncated"), (int(x) for x in r.split(","))))
                    for r in rows]})
    return 0


def _cmd_reversal(spec: RunSpec) -> int:
    from .model import Mode, ModelParams, Side
    from .reversal import check_reversal_bijection, verify_halving
    mode = Mode.LATTICE if spec.extra.get("lattice") else Mode.CONTINUOUS
    params = ModelParams(spec.p_values[0], mode, Side.HALF_LINE)
    k = spec.k_values[0]
    hv = verify_halving(params, k, spec.trials, spec.master_seed, spec.workers)
    bj = check_reversal_bijection(params, min(k, 500),
                                  min(spec.trials, 2000), spec.master_seed)
    doc = {"halving": json.loads(hv.to_json()),
           "bijection": {
               "n_trials": bj.n_trials, "n_censored": bj.n_censored,
               "forward_premise": bj.n_forward_premise,
               "forward_ok": bj.n_forward_ok,
               "roundtrip_ok": bj.n_roundtrip_ok,
               "backward_premise": bj.n_backward_premise,
               "backward_ok": bj.n_backward_ok,
               "frequency_gap_z": (bj.freq_gap / bj.freq_gap_sigma
                                   if bj.freq_gap_sigma else 0.0)}}
    payload = json.dumps({"format": FORMAT_VERSION,
                          "runspec": json.loads(spec.to_json()), **doc},
                         sort_keys=True) + "\n"
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_lattice(spec: RunSpec) -> int:
    from .lattice import lattice_run, verify_lattice_identity
    stats = lattice_run(spec.p_values[0], spec.k_values[0], spec.trials,
                        spec.master_seed, spec.workers)
    rep = verify_lattice_identity(stats)
    row = stats.to_csv().splitlines()[1]
    _emit(spec, "p,k,trials,qhat,rhat,psihat,PDeq,PDgt,triple_rate,censored",
          [row], {"stats": json.loads(json.dumps({
              "qhat": stats.qhat.value, "rhat": stats.rhat.value,
              "psihat": stats.psihat.value,
              "psihat_direct": stats.psihat_direct.value,
              "PDeq": stats.PDeq, "PDgt": stats.PDgt, "PDlt": stats.PDlt,
              "PDeq_overall": stats.PDeq_overall,
              "triple_rate": stats.triple_rate.value,
              "pair_censored_fraction": stats.pair_censored_fraction})),
              "identities": [c.__dict__ for c in rep.checks]})
    return 0


def _cmd_selftest(spec: RunSpec) -> int:
    from . import selftest
    ok = selftest.run(master_seed=spec.master_seed, verbose=True)
    return 0 if ok else 2


_COMMANDS = {
    "simulate": _cmd_simulate,
    "identities": _cmd_identities,
    "scan-pc": _cmd_scan_pc,
    "polynomial": _cmd_polynomial,
    "explore": _cmd_explore,
    "reversal": _cmd_reversal,
    "lattice": _cmd_lattice,
    "selftest": _cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ballistic")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(sp, *, needs_k=True, needs_trials=True):
        sp.add_argument("--p", type=float)
        sp.add_argument("--p-grid", help="lo:hi:step")
        if needs_k:
            sp.add_argument("--k", type=int, default=1000)
            sp.add_argument("--k-schedule", help="comma-separated k values")
        if needs_trials:
            sp.add_argument("--trials", type=int, default=1000)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--lattice", action="store_true")

    common(sub.add_parser("simulate"))
    common(sub.add_parser("identities"))

    sp = sub.add_parser("scan-pc")
    sp.add_argument("--kmax", type=int, default=3)
    sp.add_argument("--tol", default="1/1000000")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("polynomial")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("explore")
    common(sp)
    sp.add_argument("--iters", type=int, default=32)

    common(sub.add_parser("reversal"))
    common(sub.add_parser("lattice"))

    sp = sub.add_parser("selftest")
    sp.add_argument("--seed", type=int, default=20260808)

    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.subcommand in ("scan-pc", "polynomial", "selftest"):
            p_values: tuple[float, ...] = ()
            k_values = (getattr(args, "k", 0) or 0,)
        else:
            p_values = _parse_p_values(args)
            for p in p_values:
                if not (0.0 < p <= 1.0):
                    raise SystemExit(f"p values must lie in (0, 1], got {p}")
            k_values = _parse_k_values(args)
        extra = {}
        for name in ("kmax", "tol", "iters", "lattice"):
            if hasattr(args, name):
                extra[name] = getattr(args, name)
        spec = RunSpec(args.subcommand, p_values, k_values,
                       getattr(args, "trials", 0),
                       args.seed, getattr(args, "workers", 1),
                       getattr(args, "out", None),
                       getattr(args, "format", "csv"), extra)
        if getattr(args, "trials", 1) < 1 and args.subcommand not in (
                "scan-pc", "polynomial", "selftest"):
            raise SystemExit("--trials must be >= 1")
        return _COMMANDS[args.subcommand](spec)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            sys.stderr.write(exc.code + "\n")
            return 1
        return exc.code if isinstance(exc.code, int) else 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
