"""Command-line entry point.

Exit codes: 0 when every check passes (informational runs included), 1 when a
check fails, 2 on configuration or hypothesis errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .domain_field import (FieldExpr, build_grid, constant_field, linear_field, named_mask, oscillating_field,
                           power_field, sample)
from .energy import make_integrand
from .experiments import (DEFAULT_N_LIST, ConvergenceTable, ExperimentResult, counterexample_nonuniform_ainc,
                          counterexample_scaled_base, default_random_fields, embedding_sharpness_experiment,
                          gamma_modular_experiment, gamma_norm_experiment, norm_convergence_experiment)
from .modular_norm import HypothesisError, luxemburg_norm, modular
from .phi_functions import make_family

HEADER = "n,p_n,quantity,reference,abs_error"


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def emit_csv(table: ConvergenceTable, path) -> None:
    """Write ``table`` as UTF-8 CSV with 17 significant digits and ``inf`` for infinity."""
    if not table.rows:
        raise ValueError("empty table")
    lines = [HEADER] + [",".join(_fmt(v) for v in row) for row in table.rows]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# --- argument parsing ----------------------------------------------------------


def _split_arg(text: str) -> tuple[str, list[str], dict]:
    """Split ``name:pos:k=v,k=v`` into the name, positional parts and keywords.

    Inside a keyword part, comma-separated items without ``=`` extend the
    previous value, so ``res=200,200`` keeps both counts.
    """
    name, *parts = text.split(":")
    positional, kw = [], {}
    for part in parts:
        if "=" not in part:
            positional.append(part)
            continue
        key = None
        for item in part.split(","):
            if "=" in item:
                key, value = (v.strip() for v in item.split("=", 1))
                kw[key] = value
            elif key is not None:
                kw[key] += "," + item.strip()
    return name.strip(), positional, kw


def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v]
    except ValueError:
        raise ConfigError(f"expected numbers, got {s!r}") from None


def parse_domain(text: str):
    """``box:0,1:res=1000``, ``ball:-1,1,-1,1:res=200:radius=1``, ``annulus:-1,1,-1,1:res=200:r_in=0.5,r_out=1``."""
    name, pos, kw = _split_arg(text)
    if not pos:
        raise ConfigError(f"domain {text!r} needs box coordinates")
    coords = _floats(pos[0])
    if len(coords) % 2:
        raise ConfigError("box coordinates come in (min, max) pairs")
    box = list(zip(coords[::2], coords[1::2]))
    res = [int(v) for v in _floats(kw.pop("res", "100"))]
    if len(res) == 1:
        res = res * len(box)
    params = {}
    for k, v in kw.items():
        if k == "center":
            params[k] = _floats(v)
        else:
            params[k] = float(v)
    if name == "annulus" and "r_in" not in params:
        raise ConfigError("annulus needs r_in and r_out")
    try:
        return build_grid(box, res, named_mask(name, **params))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad domain {text!r}: {exc}") from None


def _params(kw: dict) -> dict:
    return {k: float(v) for k, v in kw.items()}


def parse_phi(text: str):
    """``power:p=2``, ``double_phase:p=2,q=4,a=0.5``, ``infinity`` and so on."""
    name, _, kw = _split_arg(text)
    try:
        return make_family(name, _params(kw))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad phi {text!r}: {exc}") from None


def parse_field(text: str) -> FieldExpr:
    """``const:c``, ``linear``, ``square``, ``oscillating:n=10``."""
    name, pos, kw = _split_arg(text)
    if name == "const":
        return constant_field(float(pos[0]) if pos else float(kw.get("c", 1.0)))
    if name == "linear":
        return linear_field(int(kw.get("axis", 0)), float(kw.get("slope", 1.0)))
    if name == "square":
        return power_field(2.0, int(kw.get("axis", 0)))
    if name == "oscillating":
        return oscillating_field(int(kw.get("n", pos[0] if pos else 10)))
    raise ConfigError(f"unknown field {text!r}")


def parse_int_list(text: str) -> list[int]:
    """``1..128`` doubles from 1 up to 128; otherwise a comma list."""
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad range {text!r}")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    return [int(v) for v in _floats(text)]


PHI_FAMILIES = {
    "power": lambda kw: (lambda n: make_family("power", {"p": n})),
    "scaled_power": lambda kw: (lambda n: make_family("scaled_power", {"p": n})),
    "scaled_base": lambda kw: (lambda n: make_family("scaled_base", {"a": float(kw.get("a", 2.0)), "n": n})),
    "variable_exponent": lambda kw: (
        lambda n: make_family("variable_exponent", {"p_min": n}, {"p": lambda x: n + x[..., 0]})),
    "non_doubling": lambda kw: (
        lambda n: make_family("variable_exponent", {"p_min": n + 1},
                              {"p": lambda x: n + 1.0 / np.linalg.norm(x, axis=-1)})),
    "double_phase": lambda kw: (
        lambda n: make_family("double_phase", {"p": n, "q": 2 * n, "a": float(kw.get("a", 1.0))})),
}


def parse_phi_family(text: str):
    name, _, kw = _split_arg(text)
    if name not in PHI_FAMILIES:
        raise ConfigError(f"unknown phi family {name!r}; choose from {sorted(PHI_FAMILIES)}")
    return PHI_FAMILIES[name](kw)


# --- experiments ----------------------------------------------------------------


def _run_experiment(args) -> ExperimentResult:
    eid = args.experiment
    n_list = parse_int_list(args.n) if args.n else list(DEFAULT_N_LIST)
    if eid == "norm-convergence":
        domain = parse_domain(args.domain or "box:0,1:res=10000")
        return norm_convergence_experiment(parse_phi_family(args.phi_family or "power"),
                                           parse_field(args.field or "linear"), domain, n_list,
                                           c=args.c, L=args.L, tol=args.tol)
    if eid == "scaled-base":
        domain = parse_domain(args.domain or "box:0,1:res=1000")
        return counterexample_scaled_base(args.a, parse_field(args.field or "const:1"), domain, n_list,
                                          tol=args.tol)
    if eid == "nonuniform-ainc":
        p_list = parse_int_list(args.p) if args.p else [2, 5, 10, 20, 40, 80]
        domain = parse_domain(args.domain) if args.domain else None
        u = parse_field(args.field) if args.field else None
        return counterexample_nonuniform_ainc(p_list, u, domain)
    if eid == "gamma-norm":
        domain = parse_domain(args.domain or "box:0,1:res=10000")
        f = make_integrand(args.integrand or "abs_xi")
        return gamma_norm_experiment(parse_phi_family(args.phi_family or "power"), f,
                                     parse_field(args.field or "linear"), oscillating_field, domain, n_list,
                                     L=args.L, c=args.c, tol=args.tol, seed=args.seed)
    if eid == "gamma-modular":
        domain = parse_domain(args.domain or "box:0,1,0,1:res=100")
        f = make_integrand(args.integrand or "constant")
        return gamma_modular_experiment(parse_phi_family(args.phi_family or "scaled_power"), f,
                                        parse_field(args.field or "linear"), domain, n_list, L=args.L,
                                        tol=args.tol)
    if eid == "embedding-sharpness":
        domain = parse_domain(args.domain or "box:0,1:res=1000")
        q_list = parse_int_list(args.q) if args.q else [8, 16, 32, 64, 128, 256, 512, 1024]
        family = parse_phi_family(args.phi_family or "power")
        return embedding_sharpness_experiment(family, args.gamma, default_random_fields(domain, args.seed), domain,
                                              q_list, L=args.L, c=args.c)
    raise ConfigError(f"unknown experiment {eid!r}")


def _config_of(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_outputs(result: ExperimentResult, args) -> None:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for series, table in result.tables.items():
            emit_csv(table, out / f"{result.experiment_id}-{series}.csv")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment_id", "config", "status"])
        w.writerow([result.experiment_id, json.dumps(_config_of(args), sort_keys=True), result.status])
        (out / "index.csv").write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write to {args.out}: {exc}") from None


def cmd_experiment(args) -> int:
    result = _run_experiment(args)
    for series, table in result.tables.items():
        last = table.final
        print(f"{result.experiment_id}/{series}: n={last.n} quantity={last.quantity:.10g} "
              f"reference={last.reference:.10g} abs_error={last.abs_error:.3g}")
    for name, ok in result.checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    for note in result.notes:
        print(f"  note: {note}")
    print(f"status: {result.status}")
    if args.out:
        _write_outputs(result, args)
    return 0 if result.passed else 1


def cmd_norm(args) -> int:
    domain = parse_domain(args.domain)
    res = luxemburg_norm(parse_phi(args.phi), sample(parse_field(args.field), domain), domain, args.rel_tol)
    print(repr(res.value) if args.verbose else f"{res.value:.10g}")
    return 0 if res.tolerance_met else 1


def cmd_modular(args) -> int:
    domain = parse_domain(args.domain)
    print(f"{modular(parse_phi(args.phi), sample(parse_field(args.field), domain), domain):.10g}")
    return 0


EXPERIMENT_REFS = {
    "norm-convergence": "norm-convergence proposition (norms tend to the sup norm)",
    "scaled-base": "scaled-base counterexample ((a t)^n, limit a ||u||_inf)",
    "nonuniform-ainc": "non-uniform aInc counterexample (max{0,2t-1} + phi_inf)",
    "gamma-norm": "norm-energy limsup/liminf theorem",
    "gamma-modular": "modular-energy limsup/liminf theorem and its t^n counterexample",
    "embedding-sharpness": "asymptotically sharp embedding constant C_q",
}


def _read_config_file(path: str) -> list[str]:
    """``key=value`` lines turned into ``--key value`` flags; ``#`` starts a comment."""
    flags = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line!r} is not key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        flags += [f"--{k.replace('_', '-')}", v]
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orlicz-lab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--domain", default="box:0,1:res=1000", help="e.g. box:0,1:res=1000")
        p.add_argument("--phi", default="power:p=2", help="e.g. power:p=2, double_phase:p=2,q=4,a=1")
        p.add_argument("--field", default="const:1", help="const:c, linear, square, oscillating:n=10")

    p_norm = sub.add_parser("norm", help="Luxemburg quasinorm of a field",
                            description="Luxemburg quasinorm by bisection. reference: luxemburg-quasinorm")
    common(p_norm)
    p_norm.add_argument("--rel-tol", type=float, default=1e-8)
    p_norm.add_argument("--verbose", action="store_true", help="print the full-precision value")
    p_norm.set_defaults(func=cmd_norm)

    p_mod = sub.add_parser("modular", help="modular of a field",
                           description="Midpoint-rule modular. reference: modular")
    common(p_mod)
    p_mod.set_defaults(func=cmd_modular)

    refs = "\n".join(f"  {k:22s} reference: {v}" for k, v in EXPERIMENT_REFS.items())
    p_exp = sub.add_parser("experiment", help="run a convergence experiment",
                           description="Run a named experiment and optionally write CSV tables.\n\n" + refs,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    p_exp.add_argument("experiment", choices=sorted(EXPERIMENT_REFS))
    p_exp.add_argument("--phi-family", help=f"one of {sorted(PHI_FAMILIES)}, optional :k=v params")
    p_exp.add_argument("--field")
    p_exp.add_argument("--integrand", help="abs_xi, abs_xi_pow, sqrt_abs_xi, constant")
    p_exp.add_argument("--domain")
    p_exp.add_argument("--n", help="1..128 (doubling) or a comma list")
    p_exp.add_argument("--p", help="exponents for nonuniform-ainc")
    p_exp.add_argument("--q", help="q values for embedding-sharpness")
    p_exp.add_argument("--a", type=float, default=2.0, help="base scale for scaled-base")
    p_exp.add_argument("--gamma", type=float, default=1.0)
    p_exp.add_argument("--L", type=float, default=1.0)
    p_exp.add_argument("--c", type=float, default=1.0)
    p_exp.add_argument("--tol", type=float, default=0.05)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--out", help="directory for CSV tables and index.csv")
    p_exp.set_defaults(func=cmd_experiment)

    for p in (p_norm, p_mod, p_exp):
        p.add_argument("--config", help="file of key=value lines; command-line flags take precedence")
    return parser


def _validate(args) -> None:
    for name in ("tol", "rel_tol"):
        v = getattr(args, name, None)
        if v is not None and not 0 < v <= 0.1:
            raise ConfigError(f"--{name.replace('_', '-')} must lie in (0, 0.1]")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--config" in argv:
            # file flags go first so explicit command-line flags win
            i = argv.index("--config")
            extra = _read_config_file(argv[i + 1])
            argv = argv[:i] + argv[i + 2:]
            argv = argv[:1] + extra + argv[1:]
        args = parser.parse_args(argv)
        _validate(args)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    except (ConfigError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    threads = os.environ.get("ORLICZ_LAB_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return args.func(args)
        return args.func(args)
    except (ConfigError, HypothesisError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
