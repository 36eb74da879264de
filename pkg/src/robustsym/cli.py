"""Batch front-end: ``robustsym <command> [options]``.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 bound violation
under ``--verify``.  Failures print a one-line JSON diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .bounds import f_alpha_table, solve_alpha
from .commutant import classify
from .errors import BoundViolation, NumericalError
from .grids import halving_grid, parse_eps_spec
from .kam import assemble, conjugation_residual, kam_expand
from .kato import kato_ledger_rows, kato_unitary, lipschitz_constants, perturbed_spectral
from .linalg import commutator, operator_norm, spectral_decompose
from .models import ModelInstance, build_model, degenerate_demo, harmonic_oscillator, josephson_circle, two_level
from .pipeline import bound_checks, residual_slope
from .wandering import fragility_probe, scaling_fit, wandering_sweep

COMMANDS = ("constants", "analyze", "kam", "wander", "kato", "demo")

DEFAULTS = {
    "model": None,
    "params": {},
    "N": None,
    "H": None,
    "V": None,
    "S": None,
    "eps": None,
    "smax": 4,
    "seed": 42,
    "out": "out",
    "verify": False,
    "symmetry": None,
    "points": 201,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robustsym", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run config; flags override its entries")
    p.add_argument("--model", help="built-in model name")
    p.add_argument("--N", type=int, help="truncation dimension of the model")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="model parameter (repeatable)")
    p.add_argument("--H", help="matrix JSON for H")
    p.add_argument("--V", help="matrix JSON for V")
    p.add_argument("--S", help="matrix JSON for a candidate symmetry")
    p.add_argument("--symmetry", help="name of a model symmetry to use")
    p.add_argument("--eps", help="start:stop:points[:log]")
    p.add_argument("--smax", type=int, help="KAM truncation order")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--points", type=int, help="rows of the f_alpha table")
    p.add_argument("--verify", action="store_true", default=None,
                   help="exit 3 when a measured value exceeds its bound")
    return p


def _parse_param(item: str):
    key, sep, val = item.partition("=")
    if not sep:
        raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        if not isinstance(loaded, dict):
            raise ValueError("config must be a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"command"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in ("model", "N", "H", "V", "S", "symmetry", "eps", "smax", "seed", "out", "verify", "points"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.param:
        cfg["params"] = {**cfg["params"], **dict(_parse_param(p) for p in args.param)}
    cfg["command"] = args.command
    if cfg["smax"] < 1:
        raise ValueError("smax must be at least 1")
    return cfg


def load_instance(cfg: dict) -> ModelInstance:
    if cfg["H"] is not None:
        H = io.read_matrix(cfg["H"])
        V = io.read_matrix(cfg["V"]) if cfg["V"] is not None else np.zeros_like(H)
        syms = {"S": io.read_matrix(cfg["S"])} if cfg["S"] is not None else {}
        spec = spectral_decompose(H)
        return ModelInstance("matrix_files", H, V, spec.gap, symmetries=syms)
    if cfg["model"] is None:
        raise ValueError("either --model or --H is required")
    params = dict(cfg["params"])
    if cfg["model"] == "random_gapped":
        params.setdefault("seed", cfg["seed"])
        params.setdefault("dim", 8)
    return build_model({"model": cfg["model"], "params": params, "N": cfg["N"]})


def _pick_symmetry(cfg: dict, m: ModelInstance) -> tuple[str, np.ndarray]:
    if cfg["S"] is not None:
        return "S", m.symmetries["S"]
    if cfg["symmetry"] is not None:
        if cfg["symmetry"] not in m.symmetries:
            raise ValueError(f"model has no symmetry {cfg['symmetry']!r}; choose from {sorted(m.symmetries)}")
        return cfg["symmetry"], m.symmetries[cfg["symmetry"]]
    robust = [k for k in m.symmetries if k not in m.fragile]
    if not robust:
        raise ValueError("no symmetry available; pass --S or --symmetry")
    name = sorted(robust)[0]
    return name, m.symmetries[name]


def _eps_grid(cfg: dict, default: np.ndarray) -> np.ndarray:
    return parse_eps_spec(cfg["eps"]) if cfg["eps"] else default


def _finite(x: float):
    return x if math.isfinite(x) else None


# -- commands -----------------------------------------------------------------


def cmd_constants(cfg: dict, out: Path) -> dict:
    c = solve_alpha()
    doc = io.write_json(out / "constants.json", c.to_dict(), "constants")
    io.write_csv(out / "f_alpha.csv", ("x", "f_alpha", "linear", "quadratic"), f_alpha_table(cfg["points"]))
    print(json.dumps(doc, sort_keys=True))
    return {"violations": []}


def cmd_analyze(cfg: dict, out: Path) -> dict:
    m = load_instance(cfg)
    spec = spectral_decompose(m.H)
    refinement = None
    if operator_norm(m.V) > 0:
        refinement = perturbed_spectral(m.H, m.V, 0.0, S0=spec)
    verdicts = {}
    for name, S in sorted(m.symmetries.items()):
        verdicts[name] = classify(S, spec, refinement=refinement).to_dict()
    report = {
        "model": m.name,
        "spectral": {"values": spec.values.tolist(), "ranks": spec.ranks, "gap": _finite(spec.gap),
                     "residuals": spec.invariant_residuals()},
        "symmetries": verdicts,
        "applicability": m.applicability,
    }
    io.write_json(out / "analysis.json", report, "classification")
    return {"violations": []}


def cmd_kam(cfg: dict, out: Path) -> dict:
    m = load_instance(cfg)
    spec = spectral_decompose(m.H)
    exp = kam_expand(spec, m.V, cfg["smax"])
    io.write_csv(out / "kam_ledger.csv", ("s", "norm_B", "norm_K", "norm_Vhat", "bound_B"), exp.ledger_rows())
    eps0 = 0.5 * exp.bounds.eps_threshold
    grid = _eps_grid(cfg, halving_grid(eps0, 4))
    rows = []
    for e in grid:
        rows.append((float(e), conjugation_residual(spec, m.V, float(e), assemble(exp, float(e), warn=False))))
    io.write_csv(out / "kam_residual.csv", ("epsilon", "residual"), rows)
    pos = [(e, r) for e, r in rows if e > 0 and r > 0]
    slope = scaling_fit(*zip(*pos)).gamma if len(pos) >= 4 else None
    violations = [f"order {s}: |B_s| {b:.3e} > {bd:.3e}" for s, b, _, _, bd in exp.ledger_rows() if b > bd * (1 + 1e-12)]
    dump = {
        "order": exp.order, "eta": exp.spectral.gap, "v": exp.v,
        "eps_threshold": _finite(exp.bounds.eps_threshold), "norms": exp.norms,
        "residuals": [{"epsilon": e, "residual": r} for e, r in rows], "slope": slope,
    }
    io.write_json(out / "kam.json", dump, "kam")
    print(json.dumps({"slope": slope, "expected": cfg["smax"] + 1}))
    return {"violations": violations}


def cmd_wander(cfg: dict, out: Path) -> dict:
    m = load_instance(cfg)
    name, S = _pick_symmetry(cfg, m)
    spec = spectral_decompose(m.H)
    v = operator_norm(m.V)
    default = halving_grid(0.5 * spec.gap / (v * solve_alpha().rho), 6) if v > 0 else np.array([0.0])
    grid = _eps_grid(cfg, default)
    report = wandering_sweep(m.H, m.V, S, grid)
    report.extra["symmetry"] = name
    io.write_csv(out / "wandering.csv", report.CSV_HEADER, report.csv_rows())
    io.write_json(out / "wandering.json", report.to_dict(), "wandering")
    bad = [f"eps={r.epsilon:g}: delta_norm {r.delta_norm:.3e} > bound {r.bound:.3e}"
           for r in report.rows if not r.passed]
    return {"violations": bad}


def cmd_kato(cfg: dict, out: Path) -> dict:
    m = load_instance(cfg)
    spec = spectral_decompose(m.H)
    grid = _eps_grid(cfg, np.geomspace(1e-4, 1e-2, 5))
    clusters, ledger = [], []
    for k in range(len(spec)):
        est = lipschitz_constants(m.H, m.V, k, grid, S0=spec)
        clusters.append({"k": k, "c_k": est.c_k, "ratios": list(est.ratios), "spread": est.spread, "flat": est.flat})
    for e in grid:
        ps = perturbed_spectral(m.H, m.V, float(e), S0=spec)
        ledger.extend(kato_ledger_rows(ps, kato_unitary(ps)))
    io.write_csv(out / "kato_ledger.csv", ("epsilon", "n", "proj_dist", "U_minus_I_Pk"), ledger)
    io.write_json(out / "kato.json", {"eps_grid": [float(e) for e in grid], "clusters": clusters}, "kato")
    return {"violations": []}


def cmd_demo(cfg: dict, out: Path) -> dict:
    checks = []

    def add(name, measured, bound, ok):
        checks.append({"name": name, "measured": measured, "bound": bound, "pass": bool(ok)})

    c = solve_alpha()
    add("alpha_range", c.alpha, 4.80, 4.79 < c.alpha < 4.80)

    tl = two_level()
    rep = wandering_sweep(tl.H, tl.V, tl.symmetries["P0"], [0.0], fit=False)
    add("two_level_eps0", rep.rows[0].delta_norm, 1e-10, rep.rows[0].delta_norm <= 1e-10)

    ho = harmonic_oscillator(16)
    flip = operator_norm(commutator(ho.symmetries["odd_projector"], ho.V))
    add("oscillator_parity_flip", flip, 0.5, flip > 0.5)

    dd = degenerate_demo()
    eps = np.geomspace(1e-3, 1e-1, 5)
    fr = fragility_probe(dd.H, dd.V, dd.symmetries["fragile"], eps)
    add("fragile_floor", fr.floor, 0.5, fr.fragile)
    rob = wandering_sweep(dd.H, dd.V, dd.symmetries["robust"], halving_grid(0.5 / (operator_norm(dd.V) * c.rho), 5))
    add("robust_gamma", rob.fit.gamma if rob.fit else float("nan"), 1.0,
        rob.fit is not None and 0.9 <= rob.fit.gamma <= 1.1 and rob.all_pass)

    jc = josephson_circle()
    add("circle_applicable", jc.applicability["lhs"], jc.applicability["rhs"], jc.applicability["holds"])
    for ch in bound_checks(jc.H, jc.V, 1.0, order=cfg["smax"] if cfg["smax"] >= 4 else 4):
        add(f"circle_{ch.name}", ch.measured, ch.bound, ch.passed)

    rg = build_model({"model": "random_gapped", "params": {"dim": 8, "seed": cfg["seed"]}})
    slope, _ = residual_slope(rg.H, rg.V, 4)
    add("kam_slope_order4", slope, 5.0, abs(slope - 5.0) <= 0.3)

    summary = {"checks": checks, "all_pass": all(ch["pass"] for ch in checks)}
    io.write_json(out / "demo.json", summary, "demo")
    io.write_csv(out / "demo.csv", ("name", "measured", "bound", "pass"),
                 [(ch["name"], ch["measured"], ch["bound"], ch["pass"]) for ch in checks])
    for ch in checks:
        print(f"{'PASS' if ch['pass'] else 'FAIL'} {ch['name']}")
    return {"violations": [ch["name"] for ch in checks if not ch["pass"]]}


HANDLERS = {
    "constants": cmd_constants,
    "analyze": cmd_analyze,
    "kam": cmd_kam,
    "wander": cmd_wander,
    "kato": cmd_kato,
    "demo": cmd_demo,
}


def _diagnose(kind: str, exc: BaseException | None = None, **extra) -> None:
    payload = {"error": kind, **extra}
    if exc is not None:
        payload.update(type=type(exc).__name__, message=str(exc))
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = resolve_config(args)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        result = HANDLERS[cfg["command"]](cfg, out)
        if cfg["verify"] and result["violations"]:
            raise BoundViolation("; ".join(result["violations"]))
    except BoundViolation as exc:
        _diagnose("bound_violation", exc)
        return 3
    except NumericalError as exc:
        _diagnose("numerical", exc)
        return 2
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        _diagnose("input", exc)
        return 1
    return 0
