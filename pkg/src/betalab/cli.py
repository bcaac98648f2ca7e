"""Command-line entry point: ``betalab <command> [--config cfg.json] [--out DIR]``.

Every command writes ``<command>.json`` (always, including on failure) and,
where it makes sense, a CSV table into ``--out``.  The JSON report embeds the
resolved configuration, so a run can be repeated from the report alone.

Exit codes: 0 success, 1 invalid input or violated condition, 2 precision,
mixing or structural failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from .errors import (BetalabError, ConditionViolation, DomainError, MixingError, ParseError,
                     PrecisionError, StructuralError)
from .potential import parse_potential

DEFAULTS = {
    "coeffs": [0.0, 0.0, 0.5],
    "n": 20,
    "beta": 1.0,
    "d": None,
    "epsilon": 0.5,
    "seed": 0,
    "chains": 4,
    "steps": 20000,
    "burnin": None,
    "N": 256,
    "f": [0.0, 0.0, 1.0],
    "grid": 201,
}

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def load_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(user, dict):
            raise ParseError("config must be a JSON object")
        cfg.update(user)
    for key in ("coeffs", "n", "beta", "d", "epsilon", "seed", "chains", "steps", "f", "lambda0",
                "grid_size"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# commands


def cmd_equilibrium(cfg, out: Path):
    from .equilibrium import equilibrium_measure, validate

    V = parse_potential(cfg["coeffs"])
    eq = equilibrium_measure(V)
    rep = validate(eq, d=cfg.get("d"))
    report = {"a": eq.support[0], "b": eq.support[1], "P_coeffs": eq.P.tolist(),
              "d_max": eq.d_max, "energy": eq.energy(), "validation": rep.as_dict()}
    a, b = eq.support
    lam = np.linspace(a, b, int(cfg["grid"]))
    _write_csv(out / "equilibrium.csv", ["lambda", "rho"], zip(lam, eq.density_original(lam)))
    rep.raise_if_invalid()
    return report


def cmd_correction(cfg, out: Path):
    from .correction import first_order_correction
    from .equilibrium import equilibrium_measure

    V = parse_potential(cfg["coeffs"])
    f = parse_potential(cfg["f"])
    eq = equilibrium_measure(V)
    rep = first_order_correction(eq, f, float(cfg["beta"]), d=cfg.get("d"), N=int(cfg["N"]))
    return rep.as_dict()


def cmd_logq(cfg, out: Path):
    from .correction import logq_expansion
    from .equilibrium import equilibrium_measure

    V = parse_potential(cfg["coeffs"])
    eq = equilibrium_measure(V)
    rep = logq_expansion(eq, int(cfg["n"]), float(cfg["beta"]), d=cfg.get("d"), N=int(cfg["N"]))
    out_d = rep.as_dict()
    if cfg.get("exact") and int(cfg["n"]) <= 4:
        from .exact import exact_log_partition
        out_d["exact"] = exact_log_partition(V, int(cfg["n"]), float(cfg["beta"]))
        out_d["remainder"] = out_d["exact"] - rep.total
    return out_d


def cmd_sample(cfg, out: Path, threads: int):
    from .sampler import EnsembleConfig, linear_statistic, run_chains

    V = parse_potential(cfg["coeffs"])
    ens = EnsembleConfig(int(cfg["n"]), float(cfg["beta"]), V, float(cfg["epsilon"]))
    batch = run_chains(ens, chains=int(cfg["chains"]), steps=int(cfg["steps"]), burnin=cfg.get("burnin"),
                       seed=int(cfg["seed"]), threads=threads)
    fs = cfg.get("statistics", [[0.0, 1.0], [0.0, 0.0, 1.0]])
    estimates = []
    for c in fs:
        f = parse_potential(c)
        est = linear_statistic(batch, f)
        estimates.append({"coeffs": f.tolist(), **est.as_dict(),
                          "n_times_mean_density_integral": ens.n * ens.equilibrium.expect(lambda x, f=f: f(x))})
    child = np.random.SeedSequence(int(cfg["seed"])).spawn(int(cfg["chains"]))
    report = {"estimates": estimates, "acceptance": batch.chain_acceptance,
              "acceptance_rate": batch.acceptance_rate, "step_sizes": batch.step_sizes,
              "seeds": {"seed": int(cfg["seed"]), "chain_spawn_keys": [list(s.spawn_key) for s in child]},
              "thin": batch.thin, "retained_per_chain": batch.configurations.shape[1]}
    if cfg.get("samples_csv"):
        rows = ([k, i] + list(c) for k in range(batch.chains)
                for i, c in enumerate(batch.configurations[k]))
        _write_csv(out / "samples.csv", ["chain", "index"] + [f"lambda_{j}" for j in range(ens.n)], rows)
    return report


def cmd_kernel(cfg, out: Path, beta: int, points: str | None):
    from .orthopoly import build_workspace, reproducing_kernel, tracy_widom_S

    V = parse_potential(cfg["coeffs"])
    n = int(cfg["n"])
    ws = build_workspace(V, n)
    if points:
        pts = np.loadtxt(points, delimiter=",", ndmin=2, comments="#")
        if pts.shape[1] != 2:
            raise DomainError("points file must have two columns (lambda, mu)")
    else:
        g = np.linspace(-1.0, 1.0, 5)
        pts = np.array([(x, y) for x in g for y in g])
    lam, mu = pts[:, 0], pts[:, 1]
    if beta == 2:
        vals = reproducing_kernel(ws)(lam, mu)
        _write_csv(out / "kernel.csv", ["lambda", "mu", "K_n"], zip(lam, mu, vals))
        return {"beta": 2, "n": n, "points": len(lam)}
    S = tracy_widom_S(ws, beta)
    s11 = S(lam, mu)
    s12 = -S(lam, mu, d_mu=True)
    s21 = S(lam, mu, eps_lam=True) - (0.5 * np.sign(lam - mu) if beta == 1 else 0.0)
    s22 = S(mu, lam)
    _write_csv(out / "kernel.csv", ["lambda", "mu", "K11", "K12", "K21", "K22"],
               zip(lam, mu, s11, s12, s21, s22))
    return {"beta": beta, "n": n, "points": len(lam)}


def cmd_universality(cfg, out: Path, beta: int):
    from .orthopoly import build_workspace
    from .universality import rescaled_matrix_kernel, square_grid

    V = parse_potential(cfg["coeffs"])
    n = int(cfg["n"])
    ws = build_workspace(V, n)
    xi, eta = square_grid(2.0, int(cfg.get("grid_size") or 9))
    r = rescaled_matrix_kernel(ws, beta, float(cfg.get("lambda0") or 0.0), xi, eta)
    if beta == 2:
        rows = zip(xi, eta, r.values, r.limit, np.abs(r.values - r.limit))
        header = ["xi", "eta", "K", "K_limit", "deviation"]
    else:
        v, l = r.values.reshape(-1, 4), r.limit.reshape(-1, 4)
        rows = (list(a) + list(b) + list(c) + [float(np.abs(b - c).max())]
                for a, b, c in zip(zip(xi, eta), v, l))
        header = (["xi", "eta"] + [f"K{e}" for e in ("11", "12", "21", "22")]
                  + [f"limit{e}" for e in ("11", "12", "21", "22")] + ["deviation"])
    _write_csv(out / "universality.csv", header, rows)
    return {"beta": beta, "n": n, "lambda0": r.lambda0, "q_n": r.q_n, "deviation": r.deviation,
            "eps_crosscheck": r.eps_crosscheck}


def cmd_check(cfg, out: Path, suite: str):
    from .orthopoly import (STRUCTURAL_TOLERANCES, build_workspace, stojanovic_identity,
                            structural_report)

    V = parse_potential(cfg["coeffs"])
    report = {}
    failed = []
    if suite in ("all", "structural"):
        n = int(cfg["n"])
        n += n % 2
        ws = build_workspace(V, n)
        s = structural_report(ws)
        report["structural"] = s
        for k, tol in STRUCTURAL_TOLERANCES.items():
            if not s[k] <= tol:
                failed.append(f"{k} = {s[k]:.3e} exceeds {tol:g}")
        if not s["delta_rows_in_corner"]:
            failed.append("D_n M_n - 1 has nonzero rows outside the bottom corner")
    if suite in ("all", "equilibrium"):
        from .equilibrium import equilibrium_measure, validate
        rep = validate(equilibrium_measure(V))
        report["equilibrium"] = rep.as_dict()
        if not rep.ok:
            failed.extend(rep.violations)
    if suite in ("all", "stojanovic"):
        sn = int(cfg.get("stojanovic_n", 2))
        st = stojanovic_identity(V, sn)
        report["stojanovic"] = st.as_dict()
        report["relative_error"] = st.relative_error
        tol = 1e-6 if sn == 2 else 1e-4
        if not st.relative_error < tol:
            failed.append(f"Stojanovic relative error {st.relative_error:.3e} exceeds {tol:g}")
    if suite not in ("all", "structural", "equilibrium", "stojanovic"):
        raise DomainError(f"unknown check suite {suite!r}")
    if failed:
        raise StructuralError("; ".join(failed))
    return report


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="betalab", description="beta-ensemble numerical laboratory")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=".", help="directory for JSON/CSV artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--coeffs", help='potential coefficients, e.g. "0 0 0.5"')
        sp.add_argument("--n", type=int)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--d", type=float)
        sp.add_argument("--seed", type=int)
        return sp

    common(sub.add_parser("equilibrium", help="equilibrium measure and C1/C2 validation"))
    sp = common(sub.add_parser("correction", help="O(1) correction to a linear statistic"))
    sp.add_argument("--f", help='test-function coefficients, e.g. "0 0 1"')
    common(sub.add_parser("logq", help="expansion of log Q through O(n)"))
    sp = common(sub.add_parser("sample", help="Metropolis sampling and linear statistics"))
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--chains", type=int)
    sp.add_argument("--steps", type=int)
    sp = common(sub.add_parser("kernel", help="scalar/matrix kernels at given points"))
    sp.add_argument("--points", help="CSV with columns lambda,mu")
    sp = common(sub.add_parser("universality", help="rescaled kernels vs sine-kernel limits"))
    sp.add_argument("--lambda0", type=float)
    sp.add_argument("--grid-size", dest="grid_size", type=int)
    sp = common(sub.add_parser("check", help="invariant suite"))
    sp.add_argument("suite", nargs="?", default="all",
                    choices=["all", "structural", "equilibrium", "stojanovic"])
    return p


def dispatch(args) -> tuple[int, dict]:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": args.command}
    code = EXIT_OK
    try:
        cfg = load_config(args)
        report["config"] = cfg
        c = args.command
        if c == "equilibrium":
            res = cmd_equilibrium(cfg, out)
        elif c == "correction":
            res = cmd_correction(cfg, out)
        elif c == "logq":
            res = cmd_logq(cfg, out)
        elif c == "sample":
            res = cmd_sample(cfg, out, args.threads)
        elif c == "kernel":
            res = cmd_kernel(cfg, out, _beta_tag(cfg), getattr(args, "points", None))
        elif c == "universality":
            res = cmd_universality(cfg, out, _beta_tag(cfg))
        else:
            res = cmd_check(cfg, out, args.suite)
        report.update(status="ok", result=res)
    except ConditionViolation as exc:
        code = EXIT_DOMAIN
        report.update(status="error", error=type(exc).__name__, message=str(exc), violation=exc.report)
    except DomainError as exc:
        code = EXIT_DOMAIN
        report.update(status="error", error=type(exc).__name__, message=str(exc))
    except (PrecisionError, MixingError, StructuralError) as exc:
        code = EXIT_NUMERIC
        report.update(status="error", error=type(exc).__name__, message=str(exc))
    except BetalabError as exc:     # pragma: no cover - every subclass is handled above
        code = EXIT_NUMERIC
        report.update(status="error", error=type(exc).__name__, message=str(exc),
                      traceback=traceback.format_exc())
    report["exit_code"] = code
    with open(out / f"{args.command}.json", "w") as fh:
        json.dump(_jsonable(report), fh, indent=2)
    return code, report


def _beta_tag(cfg) -> int:
    b = float(cfg["beta"])
    if b not in (1.0, 2.0, 4.0):
        raise DomainError(f"kernels exist for beta in {{1, 2, 4}}, got {b}")
    return int(b)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, report = dispatch(args)
    json.dump(_jsonable(report), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
