"""Command-line driver: config -> simulation -> CF -> bounds -> density -> reports.

Every command is deterministic for a fixed config: outputs are byte-identical
across runs and across --threads settings.  Reports carry the config hash.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .bounds import fit_decay
from .config import Pipeline, RunConfig, preset
from .errors import SdeDensityError
from .invert import holder_norm, invert as invert_cf, pushforward
from .simulate import save_ensemble
from .util import fmt_float


def _json_dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _t_tag(t: float) -> str:
    return format(t, "g").replace(".", "p").replace("-", "m")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(pipe: Pipeline, out: Path) -> dict:
    path = out / "ensemble.bin"
    save_ensemble(path, pipe.ensemble)
    return {"ensemble": path.name, "n_paths": pipe.ensemble.n_paths}


def cmd_cf(pipe: Pipeline, out: Path) -> dict:
    t = pipe.cfg.sim_config().t_final
    cf = pipe.cf_at(t)
    cf.to_csv(out / "cf.csv")
    return {"cf": "cf.csv", "t": t, "y_max": cf.grid.y_max}


def cmd_bound(pipe: Pipeline, out: Path) -> dict:
    report = pipe.bound_report()
    report.to_csv(out / "bound.csv")
    summary = report.summary()
    summary["config_hash"] = pipe.cfg.hash
    _json_dump(out / "bound_summary.json", summary)
    return {"bound": "bound.csv", "pass_fraction": report.pass_fraction,
            "c_fit": report.c_fit}


def cmd_density(pipe: Pipeline, out: Path) -> dict:
    files = []
    for t in pipe.cfg.t_list("density"):
        _, _, q = pipe.density_at(t)
        name = f"density_t{_t_tag(t)}.csv"
        q.to_csv(out / name)
        files.append(name)
    return {"densities": files}


def cmd_hoelder(pipe: Pipeline, out: Path) -> dict:
    rows = []
    for t in pipe.cfg.t_list("hoelder"):
        _, _, q = pipe.density_at(t)
        for gamma in pipe.cfg.raw["hoelder"]["gamma_list"]:
            rows.append((t, float(gamma), holder_norm(q, float(gamma))))
    with open(out / "hoelder.csv", "w", newline="") as fh:
        fh.write("t,gamma,c_gamma_norm\n")
        for t, g, v in rows:
            fh.write(f"{fmt_float(t)},{fmt_float(g)},{fmt_float(v)}\n")
    return {"hoelder": "hoelder.csv", "rows": len(rows)}


def _check_cf_sanity(pipe: Pipeline) -> dict:
    t = pipe.cfg.sim_config().t_final
    cf = pipe.cf_at(t)
    excess = float(np.max(np.abs(cf.values) - 3.0 * cf.std_errors)) - pipe.phi.sup_norm
    m = cf.grid.half_count
    symmetric = bool(np.array_equal(cf.values[:m], np.conj(cf.values[m + 1:][::-1])))
    return {"value": excess, "tolerance": 0.0, "pass": bool(excess <= 0.0 and symmetric)}


def _check_mass(pipe: Pipeline) -> dict:
    t = pipe.cfg.sim_config().t_final
    cf, p, _ = pipe.density_at(t)
    gamma = float(pipe.cfg.raw["bounds"]["gamma"])
    c_fit, _ = fit_decay(cf, gamma)
    truncation = c_fit / (np.pi * gamma * (1.0 + cf.grid.y_max) ** gamma)
    tol = 2.0 * truncation + 3.0 * cf.se_at(0.0) + float(pipe.cfg.raw["certify"]["mass_slack"])
    gap = abs(p.mass() - cf.value_at(0.0).real)
    return {"value": gap, "tolerance": tol, "pass": bool(gap <= tol)}


def _check_density_vs_oracle(pipe: Pipeline) -> dict:
    rm = pipe.cfg.reference()
    if rm is None:
        return {"value": None, "tolerance": None, "pass": False,
                "note": "no reference model configured"}
    t = pipe.cfg.sim_config().t_final
    _, _, q = pipe.density_at(t)
    target = pipe.phi(q.x_grid) * oracle.exact_density(rm, t, q.x_grid)
    err = float(np.max(np.abs(q.values - target)))
    tol = float(pipe.cfg.raw["certify"]["density_tolerance"])
    return {"value": err, "tolerance": tol, "pass": bool(err <= tol)}


def _check_analytic_roundtrip(pipe: Pipeline) -> dict:
    """Feed the exact localized CF to the inverter and compare densities."""
    from .charfn import CharFnEstimate, FrequencyGrid

    rm = pipe.cfg.reference()
    if rm is None:
        return {"value": None, "tolerance": None, "pass": False,
                "note": "no reference model configured"}
    t = pipe.cfg.sim_config().t_final
    cert = pipe.cfg.raw["certify"]
    grid = FrequencyGrid.uniform(float(cert["analytic_y_max"]), pipe.freq_grid.spacing)
    sstar = pipe.sigma_star
    const = sstar.base.constant_value

    if const is not None:
        shift = pipe.window.lo  # H(x) = (x - lo)/const

        def cf_fn(y):
            v = oracle.localized_cf(rm, pipe.phi, t, y / const)
            return complex(np.exp(-1j * y * shift / const)) * v
    else:
        def cf_fn(y):
            return oracle.localized_cf_transformed(rm, pipe.phi, pipe.transform, t, y)

    cf = CharFnEstimate.from_function(cf_fn, grid, t=t)
    p = invert_cf(cf, pipe.x_grid())
    q = pushforward(p, pipe.transform, sstar)
    target = pipe.phi(q.x_grid) * oracle.exact_density(rm, t, q.x_grid)
    err = float(np.max(np.abs(q.values - target)))
    tol = float(cert["analytic_tolerance"])
    return {"value": err, "tolerance": tol, "pass": bool(err <= tol)}


def _check_bound(pipe: Pipeline) -> dict:
    report = pipe.bound_report()
    frac = report.pass_fraction
    need = float(pipe.cfg.raw["certify"]["bound_pass_fraction"])
    return {"value": frac, "tolerance": need, "pass": bool(frac >= need),
            "c_fit": report.c_fit}


_CHECKS = {
    "cf_sanity": _check_cf_sanity,
    "mass_consistency": _check_mass,
    "density_vs_oracle": _check_density_vs_oracle,
    "analytic_roundtrip": _check_analytic_roundtrip,
    "bound_check": _check_bound,
}


def cmd_certify(pipe: Pipeline, out: Path) -> dict:
    results = {}
    for name in pipe.cfg.raw["certify"]["checks"]:
        if name not in _CHECKS:
            raise SdeDensityError(f"unknown certify check {name!r}")
        results[name] = _CHECKS[name](pipe)
    report = {
        "config_hash": pipe.cfg.hash,
        "seed": pipe.cfg.sim_config().seed,
        "checks": results,
        "all_pass": bool(all(r["pass"] for r in results.values())),
    }
    _json_dump(out / "certify.json", report)
    return report


_COMMANDS = {
    "simulate": cmd_simulate,
    "cf": cmd_cf,
    "bound": cmd_bound,
    "density": cmd_density,
    "hoelder": cmd_hoelder,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdedensity",
        description="Local densities of scalar SDEs via characteristic-function "
                    "bounds, with Monte-Carlo certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="path to a JSON run config")
        src.add_argument("--preset", type=str, help="built-in config name")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (never affects the output bytes)")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = preset(args.preset) if args.preset else RunConfig.from_file(args.config)
        if args.seed_override is not None:
            cfg = cfg.with_seed(args.seed_override)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        pipe = Pipeline(cfg, threads=max(1, args.threads))
        result = _COMMANDS[args.command](pipe, out)
        _json_dump(out / "run_info.json",
                   {"command": args.command, "config_hash": cfg.hash, "result": result})
    except SdeDensityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "certify":
        return 0 if result["all_pass"] else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
