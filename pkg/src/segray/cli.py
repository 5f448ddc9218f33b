"""Command line front end: ``segray <experiment> --config FILE``.

Exit status is 0 when every gate passes, 1 when a gate fails (all files are
still written) and 2 on any input or runtime error; the JSON summary then
names the error class.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import reports
from .concavity import (PotentialModulus, Profile, boundary_probe,
                        compute_m_elliptic, compute_m_parabolic,
                        heat_kernel_spot_check, quotient_curve,
                        verify_comparison_elliptic, verify_comparison_parabolic,
                        verify_lower_bound, verify_model_self)
from .concavity.boundary import MODES as PROBE_MODES
from .config import EXPERIMENTS, RunConfig, load_config
from .errors import ConfigInvalid, SegrayError
from .functions import Polynomial
from .geometry import (BUILTIN_DOMAINS, diameter, lemma21_check, segment_frame)
from .pde import build_operator, eigen_smallest, heat_solve, solve_1d_model
from .quadrature import QuadratureRule
from .rayenergy import identity_suite, suite_passed
from .tensorfield import builtin_tensor, scalar_from_params

log = logging.getLogger("segray")

EXIT_PASS, EXIT_GATE, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------------------
# builders


def build_domain(cfg: RunConfig):
    d = cfg.section("domain")
    kind = d.pop("kind", "disc")
    if kind not in BUILTIN_DOMAINS:
        raise ConfigInvalid(f"unknown domain kind {kind!r}")
    allowed = {"disc": {"radius", "center"}, "ellipse": {"semi_axes"},
               "quartic": {"quadratic", "quartic"}}[kind]
    extra = set(d) - allowed
    if extra:
        raise ConfigInvalid(f"keys {sorted(extra)} do not apply to a {kind}")
    domain = BUILTIN_DOMAINS[kind](**d)
    domain.validate()
    return domain


def _scalar_params(sec: dict) -> dict:
    fn = sec.get("function", "zero")
    if fn == "poly":
        if "terms" not in sec:
            raise ConfigInvalid("function = poly needs terms")
        return {"poly": sec["terms"]}
    if fn == "cos":
        return {"cos": sec.get("wavevector", [1.0, 0.0]),
                "amplitude": sec.get("amplitude", 1.0),
                "phase": sec.get("phase", 0.0), "offset": sec.get("offset", 0.0)}
    if fn == "quadratic":
        return {"quadratic": sec.get("a", 1.0)}
    if fn == "zero":
        return {"zero": True}
    raise ConfigInvalid(f"unknown function kind {fn!r}")


def build_potential(cfg: RunConfig, dim: int = 2):
    sec = cfg.section("potential")
    if not sec or sec.get("function", "zero") == "zero":
        return None
    try:
        return scalar_from_params(_scalar_params(sec), dim)
    except ValueError as exc:
        raise ConfigInvalid(f"[potential] {exc}") from exc


def build_tensor(cfg: RunConfig, dim: int):
    sec = cfg.section("tensor")
    kind = sec.get("kind", "constant")
    if kind == "constant":
        mat = np.eye(dim)
        if "matrix" in sec:
            mat = np.array([[float(v) for v in row.split()]
                            for row in sec["matrix"].split(";")])
        return builtin_tensor("constant", {"matrix": mat}, dim)
    return builtin_tensor(kind, _scalar_params(sec), dim)


def build_qbar(cfg: RunConfig):
    terms = cfg.get("model", "potential_terms")
    if not terms:
        return None
    try:
        return Polynomial.parse(terms, 1)
    except ValueError as exc:
        raise ConfigInvalid(f"[model] potential_terms: {exc}") from exc


def build_rule(cfg: RunConfig) -> QuadratureRule:
    try:
        return QuadratureRule(**cfg.section("quadrature"))
    except ValueError as exc:
        raise ConfigInvalid(f"[quadrature] {exc}") from exc


def _t_list(cfg, default):
    return [float(t) for t in cfg.get("grid", "t_list", default)]


def _model_L(cfg, D):
    return float(cfg.get("model", "L", D / 2.0))


def _sampling(cfg):
    s = cfg.section("sampling")
    return {"samples": s.get("count", 1000), "cutoff": s.get("cutoff", 0.02),
            "tol_abs": s.get("tolerance"), "tol_rel": s.get("tol_rel", 1e-3),
            "spot_fraction": s.get("spot_fraction", 0.01)}


def _gaussian(cfg, center):
    sec = cfg.section("initial")
    kind = sec.get("kind", "gaussian")
    a = sec.get("scale", 1.0)
    if kind == "gaussian":
        return (lambda p: np.exp(-a * np.sum((p - center) ** 2, axis=-1)),
                lambda s: np.exp(-a * s ** 2))
    if kind == "constant":
        return (lambda p: np.ones(len(p)), lambda s: np.ones_like(s))
    raise ConfigInvalid(f"unknown initial data kind {kind!r}")


# ---------------------------------------------------------------------------
# experiments; each returns (gate_passed, summary dict)


class Run:
    def __init__(self, cfg: RunConfig, out_dir: Path):
        self.cfg = cfg
        self.out = out_dir
        self.files = []

    def csv(self, name, columns, rows):
        self.files.append(str(reports.write_csv(
            self.out / name, columns, rows, self.cfg.config_hash, self.cfg.seed)))

    def report(self, name, rep):
        self.files.append(str(reports.write_report(
            rep, self.out / name, self.cfg.config_hash, self.cfg.seed)))

    def plot(self, rep, stem):
        self.files += [str(p) for p in reports.emit_plot_data(
            rep, self.out / "plots", stem, self.cfg.config_hash, self.cfg.seed)]


def run_check_identities(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    n = domain.dimension
    tau = build_tensor(cfg, n)
    rule = build_rule(cfg)
    ident = cfg.section("identities")
    count = ident.get("pairs", 100)
    h = ident.get("h", 1e-3)
    min_r = ident.get("min_r", 0.1)
    rel_tol = ident.get("rel_tol", 1e-5)
    min_order = ident.get("min_order", 1.9)
    rng = np.random.default_rng(cfg.seed)
    from .concavity.verify import sample_points
    pts = sample_points(domain, 8 * count + 64, 0.0, rng)
    x, y = pts[0::2], pts[1::2]
    keep = np.linalg.norm(y - x, axis=1) >= min_r
    x, y = x[keep][:count], y[keep][:count]
    pairs = list(zip(x, y))
    reps = identity_suite(tau, pairs, rule, h, slope_steps=(h, h / 2, h / 4))
    cols = (["identity_id", "index", "pair_index"] + [f"x{i + 1}" for i in range(n)]
            + [f"y{i + 1}" for i in range(n)]
            + ["lhs_fd", "rhs_formula", "abs_err", "rel_err", "order", "error"])
    run.csv("identities.csv", cols, (
        [r.identity_id, r.index, r.pair_index, *r.x, *r.y, r.lhs_fd,
         r.rhs_formula, r.abs_err, r.rel_err,
         "" if r.order is None else r.order, r.error or ""] for r in reps))
    # geometric lemma on the same pairs
    lemma_worst, lemma_min_order = {}, None
    for xa, ya in pairs:
        chk = lemma21_check(segment_frame(xa, ya), min(1e-3, 0.05 * np.linalg.norm(ya - xa)))
        for key, v in chk.items():
            lemma_worst[key] = max(lemma_worst.get(key, 0.0), float(v["residuals"][-1]))
            if v["order"] is not None:
                lemma_min_order = v["order"] if lemma_min_order is None \
                    else min(lemma_min_order, v["order"])
    lemma_ok = lemma_min_order is None or lemma_min_order >= min_order
    ok = suite_passed(reps, rel_tol, min_order) and lemma_ok
    orders = [r.order for r in reps if r.order is not None]
    summary = {"pairs": len(pairs), "checks": len(reps),
               "max_rel_err": max(r.rel_err for r in reps),
               "min_order": min(orders) if orders else None,
               "errors": sum(r.error is not None for r in reps),
               "rel_tol": rel_tol, "min_order_required": min_order,
               "tensor": cfg.section("tensor"),
               "lemma_max_residual": lemma_worst,
               "lemma_min_order": lemma_min_order}
    return ok, summary


def run_probe_boundary(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    sec = cfg.section("probe")
    modes = sec.get("modes", ["case1", "case2", "case3", "case4", "case5", "lemma31"])
    bad = [m for m in modes if m not in PROBE_MODES]
    if bad:
        raise ConfigInvalid(f"unknown probe modes {bad}")
    out, ok = {}, True
    for mode in modes:
        rep = boundary_probe(domain, None, mode, steps=sec.get("steps", 12),
                             direction=sec.get("direction", (1.0, 0.0)),
                             escape=sec.get("escape"),
                             probe_distance=sec.get("probe_distance", 0.05))
        run.report(f"probe_{mode}.csv", rep)
        run.plot(rep, f"probe_{mode}")
        out[mode] = rep.summary()
        ok &= rep.passed
    return ok, {"probes": out}


def run_solve_heat(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    q = build_potential(cfg)
    g = cfg.section("grid")
    op = build_operator(domain, q, g.get("h", 0.02))
    u0, _ = _gaussian(cfg, domain.seed_point)
    t_end = g.get("t_end", 0.1)
    snaps = sorted(set([0.0, t_end] + _t_list(cfg, [])))
    sol = heat_solve(op, u0(op.points), g.get("dt", 1e-3), t_end,
                     g.get("scheme", "crank-nicolson"), snaps)
    P = op.points
    run.csv("heat_snapshots.csv", ["t", "x1", "x2", "u"],
            ([t, *P[j], sol.values[k, j]] for k, t in enumerate(sol.times)
             for j in range(len(P))))
    summary = {"unknowns": op.size, "h": op.grid.h, "times": sol.times,
               "min_value": float(sol.values.min()),
               "max_value": float(sol.values.max()), **sol.meta}
    return True, summary


def run_solve_eigen(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    op = build_operator(domain, build_potential(cfg), cfg.get("grid", "h", 0.02))
    pair = eigen_smallest(op)
    P = op.points
    run.csv("eigenfunction.csv", ["x1", "x2", "phi"],
            ([*P[j], pair.vector[j]] for j in range(len(P))))
    return True, {"eigenvalue": pair.eigenvalue, "iterations": pair.iterations,
                  "residual": pair.residual, "unknowns": op.size,
                  "h": op.grid.h}


def _profile_and_modulus(cfg, D=None):
    psec = cfg.section("profile")
    kind = psec.get("kind", "polynomial")
    if kind == "polynomial":
        if "coefficients" not in psec:
            raise ConfigInvalid("[profile] coefficients required")
        diam = psec.get("diameter", D if D is not None else 2.0)
        profile = Profile.polynomial(psec["coefficients"], diam)
    elif kind == "model":
        L = float(cfg.get("model", "L", (psec.get("diameter", 2.0)) / 2))
        model = solve_1d_model(build_qbar(cfg), L, n_nodes=cfg.get("model", "nodes", 2001))
        profile = Profile.from_model(model)
    else:
        raise ConfigInvalid(f"unknown profile kind {kind!r}")
    msec = cfg.section("modulus")
    mkind = msec.get("kind", "zero")
    if mkind == "zero":
        modulus = PotentialModulus.zero()
    elif mkind == "polynomial":
        modulus = PotentialModulus.polynomial(msec.get("coefficients", [0.0]))
    elif mkind == "model":
        modulus = PotentialModulus.from_model_potential(build_qbar(cfg))
    else:
        raise ConfigInvalid(f"unknown modulus kind {mkind!r}")
    return profile, modulus


def run_compute_m(run: Run):
    cfg = run.cfg
    profile, modulus = _profile_and_modulus(cfg)
    sec = cfg.section("mformula")
    variant = sec.get("variant", "elliptic")
    ns = sec.get("ns", 256)
    if variant == "elliptic":
        res = compute_m_elliptic(profile, modulus, ns)
        curve = quotient_curve(profile, modulus, 0.0, ns, parabolic=False)
    elif variant == "parabolic":
        res = compute_m_parabolic(profile, modulus, sec.get("m0", 0.0), ns,
                                  sec.get("nt", 16))
        curve = quotient_curve(profile, modulus, res.t_argmin, ns)
    else:
        raise ConfigInvalid(f"unknown m-formula variant {variant!r}")
    qc = reports.QuotientCurve(curve[0], curve[1], res.t_argmin)
    run.csv("m_quotient.csv", ["s", "quotient", "t"],
            ((s, v, qc.t) for s, v in zip(qc.s, qc.values)))
    run.plot(qc, "m")
    return True, {**res.summary(), "profile_source": profile.source}


def run_verify_elliptic(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    D = diameter(domain)
    q = build_potential(cfg)
    op = build_operator(domain, q, cfg.get("grid", "h", 0.02))
    pair = eigen_smallest(op)
    model = solve_1d_model(build_qbar(cfg), _model_L(cfg, D),
                           n_nodes=cfg.get("model", "nodes", 2001))
    samp = _sampling(cfg)
    rep = verify_comparison_elliptic(pair.solution, model, q, domain,
                                     seed=cfg.seed, diameter_value=D, **samp)
    run.report("comparison.csv", rep)
    run.plot(rep, "comparison")
    selfrep = verify_model_self(model)
    run.report("model_self.csv", selfrep)
    ok = rep.passed and selfrep.passed
    summary = {"comparison": rep.summary(), "model_self": selfrep.summary(),
               "eigenvalue": pair.eigenvalue, "model_eigenvalue": model.eigenvalue}
    if cfg.section("profile"):
        profile, modulus = _profile_and_modulus(cfg, D)
        m = compute_m_elliptic(profile, modulus).m
        lb = verify_lower_bound(pair.solution, profile, m, domain,
                                t_list=(0.0,), seed=cfg.seed,
                                diameter_value=D, **samp)
        run.report("lower_bound.csv", lb)
        run.plot(lb, "lower_bound")
        summary["lower_bound"] = lb.summary()
        ok &= lb.passed
    return ok, summary


def run_verify_parabolic(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    D = diameter(domain)
    q = build_potential(cfg)
    g = cfg.section("grid")
    t_list = _t_list(cfg, [0.05, 0.1, 0.2])
    dt = g.get("dt", 1e-3)
    t_end = max(t_list)
    op = build_operator(domain, q, g.get("h", 0.02))
    u0, ubar0 = _gaussian(cfg, domain.seed_point)
    sol = heat_solve(op, u0(op.points), dt, t_end,
                     g.get("scheme", "crank-nicolson"), [0.0] + t_list)
    model = solve_1d_model(build_qbar(cfg), _model_L(cfg, D), ubar0, mode="heat",
                           dt=min(dt, 1e-4), t_end=t_end,
                           n_nodes=cfg.get("model", "nodes", 2001),
                           snapshots=[0.0] + t_list)
    rep = verify_comparison_parabolic(sol, model, q, domain, t_list=t_list,
                                      seed=cfg.seed, diameter_value=D,
                                      **_sampling(cfg))
    run.report("comparison.csv", rep)
    run.plot(rep, "comparison")
    selfrep = verify_model_self(model, t_list)
    run.report("model_self.csv", selfrep)
    return rep.passed and selfrep.passed, {"comparison": rep.summary(),
                                           "model_self": selfrep.summary()}


def run_kernel_spot_check(run: Run):
    cfg = run.cfg
    domain = build_domain(cfg)
    g = cfg.section("grid")
    k = cfg.section("kernel")
    samp = _sampling(cfg)
    rep = heat_kernel_spot_check(domain, build_potential(cfg), k.get("source"),
                                 build_qbar(cfg), _t_list(cfg, [0.3]),
                                 k.get("width"), g.get("h", 0.02),
                                 g.get("dt", 1e-3), samp["samples"],
                                 samp["cutoff"], cfg.seed)
    run.report("kernel.csv", rep)
    run.plot(rep, "kernel")
    # informational only: never a gate failure
    return True, rep.summary()


RUNNERS = {
    "check-identities": run_check_identities,
    "probe-boundary": run_probe_boundary,
    "solve-heat": run_solve_heat,
    "solve-eigen": run_solve_eigen,
    "compute-m": run_compute_m,
    "verify-elliptic": run_verify_elliptic,
    "verify-parabolic": run_verify_parabolic,
    "kernel-spot-check": run_kernel_spot_check,
}


def run(cfg: RunConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r = Run(cfg, out)
    summary = {"experiment": cfg.experiment, "config_hash": cfg.config_hash,
               "seed": cfg.seed, "config": cfg.source}
    try:
        ok, result = RUNNERS[cfg.experiment](r)
        code = EXIT_PASS if ok else EXIT_GATE
        summary.update({"status": "pass" if ok else "fail", "result": result})
    except SegrayError as exc:
        code = EXIT_ERROR
        summary.update({"status": "error", "error": exc.name, "message": str(exc)})
    except (ValueError, KeyError, TypeError, ArithmeticError) as exc:
        code = EXIT_ERROR
        summary.update({"status": "error", "error": type(exc).__name__,
                        "message": str(exc)})
    summary["exit_code"] = code
    summary["files"] = r.files
    reports.write_json(out / "summary.json", summary)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="segray", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out-dir", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out_dir) if args.out_dir else None
    try:
        cfg = load_config(args.config, args.experiment)
    except ConfigInvalid as exc:
        target = out_dir or Path("segray-out")
        reports.write_json(target / "summary.json",
                           {"experiment": args.experiment, "status": "error",
                            "error": exc.name, "message": str(exc),
                            "exit_code": EXIT_ERROR})
        print(f"segray: {exc.name}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        cfg.seed = args.seed
    if out_dir is None:
        out_dir = Path(cfg.out_dir or "segray-out")
    try:
        code = run(cfg, out_dir)
    except Exception as exc:        # never exit with anything but 0/1/2
        log.exception("unexpected failure")
        reports.write_json(Path(out_dir) / "summary.json",
                           {"experiment": cfg.experiment, "status": "error",
                            "error": type(exc).__name__, "message": str(exc),
                            "exit_code": EXIT_ERROR})
        code = EXIT_ERROR
    status = {EXIT_PASS: "pass", EXIT_GATE: "gate failure", EXIT_ERROR: "error"}[code]
    print(f"segray {cfg.experiment}: {status} (exit {code}); outputs in {out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
