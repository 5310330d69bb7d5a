"""Run configuration: JSON schema, presets, and the assembled pipeline.

A run config is one human-editable JSON document; every piece of randomness
in a run flows from its single seed.  The SHA-256 hash of the canonical JSON
is carried into every report for provenance.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import bounds as bounds_mod
from . import charfn, oracle
from .cutoff import CutoffFunction, make_bump
from .errors import ConfigError
from .invert import invert as invert_cf, pushforward
from .lamperti import LampertiMap, build_lamperti_map
from .model import (CoefficientModel, LocalWindow, SigmaStar, build_sigma_star,
                    piecewise_from_dict, validate_window)
from .simulate import PathEnsemble, SimConfig, simulate


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()


_DEFAULTS = {
    "cutoff": {"shoulder_fraction": 0.2},
    "frequency_grid": {"y_max": 256.0, "spacing": 1.0 / 16.0},
    "inversion": {"n_points": 513, "margin": 0.05},
    "bounds": {"gamma": 0.5, "eps_rule": "matched", "y_lo": math.e, "y_hi": None},
    "density": {"t_list": None},
    "hoelder": {"gamma_list": [0.5], "t_list": None},
    "certify": {
        "checks": ["cf_sanity", "mass_consistency"],
        "density_tolerance": 5e-3,
        "analytic_tolerance": 1e-5,
        "analytic_y_max": 96.0,
        "bound_pass_fraction": 0.95,
        "mass_slack": 1e-3,
    },
}


@dataclass(frozen=True)
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        merged = dict(raw)
        for key, defaults in _DEFAULTS.items():
            block = dict(defaults)
            block.update(raw.get(key, {}))
            merged[key] = block
        for required in ("model", "window", "simulation"):
            if required not in merged:
                raise ConfigError(f"config is missing the '{required}' section")
        cfg = cls(raw=merged)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_seed(self, seed: int) -> "RunConfig":
        raw = json.loads(canonical_json(self.raw))
        raw["simulation"]["seed"] = int(seed)
        return RunConfig(raw=raw)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    # -- parsed sections ------------------------------------------------------

    def model(self) -> CoefficientModel:
        m = self.raw["model"]
        return CoefficientModel(
            mu=piecewise_from_dict(m["mu"]),
            sigma=piecewise_from_dict(m["sigma"]),
        )

    def window(self) -> LocalWindow:
        w = self.raw["window"]
        return LocalWindow(xi=float(w["xi"]), delta=float(w["delta"]),
                           delta0=float(w["delta0"]), l_sigma=float(w["l_sigma"]))

    def sim_config(self) -> SimConfig:
        s = self.raw["simulation"]
        return SimConfig(x0=float(s["x0"]), t_final=float(s["t"]), h=float(s["h"]),
                         n_paths=int(s["n_paths"]), seed=int(s["seed"]))

    def frequency_grid(self) -> charfn.FrequencyGrid:
        g = self.raw["frequency_grid"]
        return charfn.FrequencyGrid.uniform(float(g["y_max"]), float(g["spacing"]))

    def reference(self):
        r = self.raw.get("reference")
        if r is None:
            return None
        x0 = r.get("x0")
        return oracle.ReferenceModel(
            kind=r["kind"], mu0=float(r.get("mu0", 0.0)), sigma0=float(r.get("sigma0", 1.0)),
            theta=float(r.get("theta", 0.0)), x0=None if x0 is None else float(x0),
        )

    def t_list(self, section: str) -> list[float]:
        ts = self.raw[section].get("t_list") or [self.raw["simulation"]["t"]]
        return [float(t) for t in ts]

    # -- cross-field validation ----------------------------------------------

    def validate(self) -> None:
        sim = self.sim_config()
        w = self.window()
        model = self.model()
        validate_window(model, w)
        for section in ("density", "hoelder"):
            for t in self.t_list(section):
                k = round(t / sim.h)
                if not (0 < t <= sim.t_final) or abs(k * sim.h - t) > 1e-9:
                    raise ConfigError(f"{section} t={t} is not on the grid or exceeds t_final")
        b = self.raw["bounds"]
        if b["eps_rule"] == "matched":
            y_lo = float(b["y_lo"])
            if y_lo <= 1.0:
                raise ConfigError("matched lookback needs y_lo > 1")
            if bounds_mod.epsilon_rule(y_lo) >= sim.t_final:
                raise ConfigError(
                    f"lookback at y_lo={y_lo} is {bounds_mod.epsilon_rule(y_lo):.4g} "
                    f">= t={sim.t_final}; raise t or y_lo"
                )
        fg = self.frequency_grid()
        # the aliasing constraint on the inversion grid is checked when the
        # grid is materialized (it depends on the transform); pre-check the
        # obvious part here so bad configs fail before simulating
        if fg.spacing <= 0:
            raise ConfigError("frequency spacing must be positive")


class Pipeline:
    """Deterministic config -> artifacts wiring shared by all CLI commands."""

    def __init__(self, cfg: RunConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = threads

    @cached_property
    def model(self) -> CoefficientModel:
        return self.cfg.model()

    @cached_property
    def window(self) -> LocalWindow:
        return self.cfg.window()

    @cached_property
    def phi(self) -> CutoffFunction:
        return make_bump(self.window, float(self.cfg.raw["cutoff"]["shoulder_fraction"]))

    @cached_property
    def sigma_star(self) -> SigmaStar:
        return build_sigma_star(self.model.sigma, self.window)

    @cached_property
    def transform(self) -> LampertiMap:
        return build_lamperti_map(self.sigma_star)

    @cached_property
    def ensemble(self) -> PathEnsemble:
        return simulate(self.model, self.cfg.sim_config(), threads=self.threads)

    @cached_property
    def freq_grid(self) -> charfn.FrequencyGrid:
        return self.cfg.frequency_grid()

    def x_grid(self) -> np.ndarray:
        """Inversion grid in the transformed coordinate, covering H(supp phi)."""
        ha = self.transform.forward(self.phi.a)
        hb = self.transform.forward(self.phi.b)
        lo, hi = min(ha, hb), max(ha, hb)
        inv = self.cfg.raw["inversion"]
        margin = float(inv["margin"]) * (hi - lo)
        grid = np.linspace(lo - margin, hi + margin, int(inv["n_points"]))
        if (grid[-1] - grid[0]) >= math.pi / self.freq_grid.spacing:
            raise ConfigError("inversion grid violates the aliasing limit; "
                              "reduce the margin or refine the frequency spacing")
        return grid

    def cf_at(self, t: float) -> charfn.CharFnEstimate:
        return charfn.estimate_localized(self.ensemble, self.phi, self.transform,
                                         self.freq_grid, t, threads=self.threads)

    def density_at(self, t: float):
        cf = self.cf_at(t)
        p = invert_cf(cf, self.x_grid())
        q = pushforward(p, self.transform, self.sigma_star)
        return cf, p, q

    def bound_report(self, c: float | None = None):
        b = self.cfg.raw["bounds"]
        t = self.cfg.sim_config().t_final
        cf = self.cf_at(t)
        pos = self.freq_grid.positive()
        y_hi = b["y_hi"]
        y_lo = float(b["y_lo"])
        mask = pos > y_lo
        if y_hi is not None:
            mask &= pos <= float(y_hi)
        rule = b["eps_rule"] if b["eps_rule"] == "matched" else float(b["eps_rule"])
        return bounds_mod.bound_report(cf, self.ensemble, self.model, self.window,
                                       t, y_check=pos[mask], eps_rule=rule, c=c)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _const(v):
    return {"breakpoints": [], "pieces": [{"kind": "constant", "value": v}]}


def _affine(intercept, slope):
    return {"breakpoints": [], "pieces": [{"kind": "affine", "intercept": intercept,
                                           "slope": slope}]}


PRESETS: dict[str, dict] = {
    "gaussian": {
        "model": {"mu": _const(0.0), "sigma": _const(1.0)},
        "window": {"xi": 0.0, "delta": 6.0, "delta0": 1.0, "l_sigma": 1.0},
        "cutoff": {"shoulder_fraction": 0.2},
        "simulation": {"x0": 0.0, "t": 1.0, "h": 2.0**-6, "n_paths": 1_000_000,
                       "seed": 20240801},
        "frequency_grid": {"y_max": 16.0, "spacing": 1.0 / 16.0},
        "inversion": {"n_points": 501, "margin": 0.05},
        "reference": {"kind": "brownian_drift", "mu0": 0.0, "sigma0": 1.0, "x0": 0.0},
        "density": {"t_list": [1.0]},
        "hoelder": {"gamma_list": [0.5], "t_list": [0.5, 1.0]},
        "bounds": {"gamma": 0.5, "eps_rule": "matched", "y_lo": math.e, "y_hi": 16.0},
        "certify": {"checks": ["cf_sanity", "mass_consistency", "density_vs_oracle",
                               "analytic_roundtrip"],
                    "density_tolerance": 5e-3, "analytic_tolerance": 1e-5,
                    "analytic_y_max": 96.0},
    },
    "ou": {
        "model": {"mu": _affine(0.0, -1.0), "sigma": _const(math.sqrt(2.0))},
        "window": {"xi": 0.0, "delta": 5.0, "delta0": 1.0, "l_sigma": math.sqrt(2.0)},
        "cutoff": {"shoulder_fraction": 0.2},
        "simulation": {"x0": 0.0, "t": 1.0, "h": 2.0**-8, "n_paths": 200_000,
                       "seed": 20240802},
        "frequency_grid": {"y_max": 16.0, "spacing": 1.0 / 16.0},
        "inversion": {"n_points": 501, "margin": 0.05},
        "reference": {"kind": "ornstein_uhlenbeck", "theta": 1.0,
                      "sigma0": math.sqrt(2.0), "x0": 0.0},
        "density": {"t_list": [0.5, 1.0]},
        "hoelder": {"gamma_list": [0.5], "t_list": [0.5, 1.0]},
        "certify": {"checks": ["cf_sanity", "mass_consistency", "density_vs_oracle"],
                    "density_tolerance": 1e-2},
    },
    "gbm": {
        "model": {"mu": _affine(0.0, 0.05), "sigma": _affine(0.0, 0.25)},
        "window": {"xi": 2.0, "delta": 1.0, "delta0": 0.25, "l_sigma": 0.25},
        "cutoff": {"shoulder_fraction": 0.25},
        "simulation": {"x0": 2.0, "t": 1.0, "h": 2.0**-8, "n_paths": 1_000_000,
                       "seed": 20240803},
        "frequency_grid": {"y_max": 32.0, "spacing": 1.0 / 8.0},
        "inversion": {"n_points": 501, "margin": 0.05},
        "reference": {"kind": "geometric_bm", "mu0": 0.05, "sigma0": 0.25, "x0": 2.0},
        "density": {"t_list": [1.0]},
        "hoelder": {"gamma_list": [0.5], "t_list": [0.5, 1.0]},
        "certify": {"checks": ["cf_sanity", "mass_consistency", "density_vs_oracle"],
                    "density_tolerance": 1e-2},
    },
    "sign_drift": {
        "model": {
            "mu": {"breakpoints": [0.0],
                   "pieces": [{"kind": "constant", "value": 1.0},
                              {"kind": "constant", "value": -1.0}]},
            "sigma": _const(1.0),
        },
        "window": {"xi": 0.0, "delta": 2.0, "delta0": 0.5, "l_sigma": 1.0},
        "cutoff": {"shoulder_fraction": 0.2},
        "simulation": {"x0": 0.0, "t": 0.5, "h": 2.0**-10, "n_paths": 200_000,
                       "seed": 20240804},
        "frequency_grid": {"y_max": 128.0, "spacing": 0.25},
        "inversion": {"n_points": 513, "margin": 0.05},
        "density": {"t_list": [0.25, 0.5]},
        "hoelder": {"gamma_list": [0.5], "t_list": [0.25, 0.5]},
        "bounds": {"gamma": 0.5, "eps_rule": "matched", "y_lo": math.e, "y_hi": 128.0},
        "certify": {"checks": ["cf_sanity", "mass_consistency", "bound_check"],
                    "bound_pass_fraction": 0.95},
    },
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return RunConfig.from_dict(json.loads(json.dumps(PRESETS[name])))
