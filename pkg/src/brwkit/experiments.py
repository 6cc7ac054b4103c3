"""Named, configured experiments.

Each experiment is a function ``fn(params, seed) -> Result`` registered with
its default parameters.  ``params`` is the default dictionary updated with
the user's config; every random choice is drawn from ``stream(seed, name, ...)``
so a run is a pure function of its config.
"""
from __future__ import annotations

import math
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import annihilate as ann
from . import brwre, crossings, fkpp, tilt, walk
from .env import DistSpec, Environment, load_environment, sample_environment, shifted_potential
from .potential import PiecewisePotential
from .rng import stream


@dataclass
class Result:
    ok: bool
    summary: dict
    rows: list[dict] = field(default_factory=list)


@dataclass
class Experiment:
    name: str
    fn: Callable[[dict, int], Result]
    defaults: dict
    doc: str


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, **defaults):
    def deco(fn):
        REGISTRY[name] = Experiment(name, fn, defaults, (fn.__doc__ or "").strip().splitlines()[0])
        return fn
    return deco


def workers() -> int:
    return max(1, int(os.environ.get("BRWKIT_WORKERS", "1")))


def pmap(fn, items: list) -> list:
    """Map over items, in a process pool when ``BRWKIT_WORKERS > 1``; order is preserved."""
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


def make_environment(spec: dict, seed: int) -> Environment:
    """Environment from a config block: ``{"file": path}`` or a distribution plus window."""
    if "file" in spec:
        return load_environment(spec["file"])
    ds = DistSpec(spec.get("kind", "two_point"), float(spec["ei"]), float(spec["es"]), float(spec.get("p", 0.5)))
    lo, hi = spec["window"]
    return sample_environment(ds, (int(lo), int(hi)), int(spec.get("seed", seed)))


def run_experiment(name: str, params: dict | None = None, seed: int = 0) -> Result:
    exp = REGISTRY[name]
    p = dict(exp.defaults)
    p.update(params or {})
    return exp.fn(p, seed)


# ---------------------------------------------------------------------------
# crossings


def random_sign_field(gen: np.random.Generator, window: tuple[int, int], support: tuple[int, int],
                      n_cross: int) -> fkpp.LatticeField:
    """Field on ``window`` supported in ``support`` with exactly ``n_cross`` sign changes."""
    lo, hi = window
    slo, shi = support
    m = shi - slo + 1
    cuts = np.sort(gen.choice(np.arange(1, m), size=n_cross, replace=False))
    blocks = np.split(np.arange(m), cuts)
    s0 = 1 if gen.random() < 0.5 else -1
    v = np.zeros(hi - lo + 1)
    for k, b in enumerate(blocks):
        mag = gen.uniform(0.1, 1.0, size=b.size)
        mag[gen.random(b.size) < 0.2] = 0.0
        mag[gen.integers(b.size)] = gen.uniform(0.5, 1.0)  # keep every block non-null
        v[slo - lo + b] = s0 * (-1) ** k * mag
    return fkpp.LatticeField(lo, hi, v)


def random_kappa(gen: np.random.Generator, window: tuple[int, int], t_max: float, n_pieces: int,
                 bound: float) -> PiecewisePotential:
    """Two-point ``kappa(t, x)``, piecewise constant in ``t``, values in ``[-bound, bound]``."""
    lo, hi = window
    a, b = np.sort(gen.uniform(-bound, bound, size=2))
    breaks = np.sort(gen.uniform(0.0, t_max, size=n_pieces - 1))
    vals = np.where(gen.random((n_pieces, hi - lo + 1)) < 0.5, a, b)
    return PiecewisePotential(breaks, vals, lo)


def _crossings_instance(args):
    p, seed, i = args
    gen = stream(seed, "crossings-check", i)
    window = tuple(p["window"])
    k = int(gen.integers(1, p["max_sigma"] + 1))
    u0 = random_sign_field(gen, window, tuple(p["support"]), k)
    kappa = random_kappa(gen, window, p["t_max"], p["n_pieces"], p["kappa_bound"])
    times = np.linspace(0.0, p["t_max"], p["n_times"])
    opts = fkpp.IntegratorOpts(dt=p["dt"], zero_tol=p["zero_tol"])
    rep = crossings.check_monotone_crossings(u0, kappa, times, opts)
    return i, k, rep


@experiment("crossings-check", n_instances=200, window=[-60, 60], support=[-20, 20], t_max=5.0,
            n_times=50, n_pieces=5, kappa_bound=2.0, max_sigma=5, dt=0.01, zero_tol=1e-12)
def crossings_check(p, seed):
    """Crossing count non-increasing along linear solutions on random instances."""
    out = pmap(_crossings_instance, [(p, seed, i) for i in range(p["n_instances"])])
    rows, bad = [], []
    for i, k, rep in sorted(out, key=lambda r: r[0]):
        rows.append({"instance": i, "sigma0": k, "ok": rep.ok, "sigma_trace": " ".join(map(str, rep.sigma))})
        if not rep.ok:
            bad.append({"instance": i, **rep.first_violation})
    return Result(not bad, {"instances": len(rows), "violations": len(bad),
                            "first_violation": bad[0] if bad else None}, rows)


def _interface_instance(args):
    p, seed, i = args
    gen = stream(seed, "interface-check", i)
    env = sample_environment(DistSpec("two_point", p["ei"], p["es"]), tuple(p["env_window"]),
                             int(gen.integers(2**31)))
    y = int(gen.integers(0, 11))
    z = int(gen.integers(-5, 16))
    u = float(gen.uniform(0.5, 3.0))
    times = np.linspace(0.0, p["t_max"], p["n_times"])
    opts = fkpp.IntegratorOpts(dt=p["dt"], zero_tol=p["zero_tol"])
    L = fkpp.required_halfwidth(env.es, p["t_max"] + u, opts.tol)
    lo, hi = min(y, z) - L, max(y, z) + L
    all_t = np.unique(np.concatenate([times, times + u]))
    f = fkpp.front_fields(env, [z, y], all_t, (lo, hi), opts)
    idx = {round(float(t), 12): k for k, t in enumerate(all_t)}
    fails = []
    for s in times:
        W = f[0, idx[round(float(s), 12)]] - f[1, idx[round(float(s + u), 12)]]
        if not crossings.check_single_interface(W, opts.zero_tol):
            fails.append(float(s))
    return i, y, z, u, fails


@experiment("interface-check", n_instances=50, ei=1.0, es=2.0, env_window=[-200, 200], t_max=5.0,
            n_times=50, dt=0.01, zero_tol=1e-12)
def interface_check(p, seed):
    """Single sign interface preserved for W = w^z(s) - w^y(s + u)."""
    out = pmap(_interface_instance, [(p, seed, i) for i in range(p["n_instances"])])
    rows = [{"instance": i, "y": y, "z": z, "u": u, "failures": len(f),
             "first_failure_t": f[0] if f else ""} for i, y, z, u, f in sorted(out)]
    n_bad = sum(r["failures"] > 0 for r in rows)
    return Result(n_bad == 0, {"instances": len(rows), "failing_instances": n_bad}, rows)


# ---------------------------------------------------------------------------
# duality and Feynman-Kac


@experiment("duality-check", env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-120, 120], "seed": 7},
            points=[[0, 1, 1.0], [0, 2, 1.0], [0, 2, 2.0], [0, 4, 2.0], [0, 2, 3.0], [0, 5, 3.0],
                    [1, 3, 3.0], [-2, 4, 4.0], [0, 6, 4.0], [0, 5, 5.0], [0, 8, 5.0], [2, 10, 5.0]],
            n_runs=10000, k_sigma=3.0, min_pass=11)
def duality_check(p, seed):
    """BRWRE frequency of M(t) >= y against front solutions w^y(t, x)."""
    env = make_environment(p["env"], seed)
    rows, n_pass = [], 0
    for k, (x, y, t) in enumerate(p["points"]):
        mc = brwre.estimate_max_cdf(env, int(x), int(y), float(t), p["n_runs"], stream(seed, "duality", k))
        w = float(fkpp.front_values(env, int(x), [int(y)], [float(t)])[0, 0])
        good = abs(mc.value - w) <= p["k_sigma"] * mc.std_error
        n_pass += good
        rows.append({"x": x, "y": y, "t": t, "mc": mc.value, "se": mc.std_error, "integrator": w,
                     "z": (mc.value - w) / mc.std_error, "capped": mc.n_capped, "pass": good})
    return Result(n_pass >= p["min_pass"], {"points": len(rows), "passed": n_pass}, rows)


@experiment("feynman-kac-check", c=0.5, env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-80, 80], "seed": 7},
            t=2.0, x=0, ys=[-2, -1, 0, 1, 2, 3], n_samples=200000, n_runs=10000, k_sigma=3.0, rel_tol=1e-3)
def feynman_kac_check(p, seed):
    """Feynman-Kac Monte Carlo, lattice ODE and BRWRE mean counts agree."""
    t, x = p["t"], p["x"]
    c = p["c"]
    rows, ok = [], True
    cases = [("constant", Environment.constant(c, -80, 80)), ("random", make_environment(p["env"], seed))]
    for label, env in cases:
        for k, y in enumerate(p["ys"]):
            ode = fkpp.feynman_kac_ode(env, x, y, t)
            mc = walk.feynman_kac_mc(env, x, y, t, p["n_samples"], stream(seed, "fk", label, k))
            brw = brwre.mean_counts(env, x, y, t, p["n_runs"], stream(seed, "fk-brw", label, k)).n_at
            good = abs(mc.value - ode) <= p["k_sigma"] * mc.std_error
            good &= abs(brw.value - ode) <= p["k_sigma"] * brw.std_error
            row = {"case": label, "y": y, "ode": ode, "fk_mc": mc.value, "fk_se": mc.std_error,
                   "brw_mean": brw.value, "brw_se": brw.std_error}
            if label == "constant":
                exact = math.exp(c * t) * float(walk.heat_kernel(y - x, t))
                row["closed_form"] = exact
                good &= abs(ode - exact) <= p["rel_tol"] * exact
            row["pass"] = bool(good)
            ok &= bool(good)
            rows.append(row)
    return Result(ok, {"cases": len(rows), "passed": sum(r["pass"] for r in rows)}, rows)


# ---------------------------------------------------------------------------
# tilt


@experiment("tilt-validate", cases=[[0.0, -1.0], [-1.0, -0.5], [-0.3, -0.2], [-2.0, -0.01]],
            burn_in=50, window=[-200, 200], closed_tol=1e-10, T=2000.0, n_paths=64, speed_rel=0.02)
def tilt_validate(p, seed):
    """Homogeneous tilted chains against the closed forms, and the empirical speed."""
    rows, ok = [], True
    lo, hi = p["window"]
    for g, e in p["cases"]:
        params = tilt.TiltParams.homogeneous(g, e, (lo - p["burn_in"], hi))
        ch = tilt.build_tilted_chain(params, (lo, hi), p["burn_in"])
        z_err = float(np.max(np.abs(ch.z_right - tilt.z_homogeneous(g, e))))
        v_err = float(np.max(np.abs(1.0 / ch.e - tilt.speed_homogeneous(g, e))))
        good = max(z_err, v_err) <= p["closed_tol"]
        ok &= good
        rows.append({"gamma": g, "eta": e, "z_max_err": z_err, "speed_max_err": v_err, "pass": good})
    T = p["T"]
    v = tilt.speed_homogeneous(0.0, -1.0)
    span = int(v * T * 1.2) + 200
    params = tilt.TiltParams.homogeneous(0.0, -1.0, (-200 - p["burn_in"], span))
    ch = tilt.build_tilted_chain(params, (-200, span), p["burn_in"])
    sp = tilt.empirical_speed(ch, 0, T, p["n_paths"], stream(seed, "tilt-speed"))
    rel = abs(sp.value - v) / v
    ok &= rel <= p["speed_rel"]
    return Result(ok, {"speed": sp.value, "speed_se": sp.std_error, "speed_rel_err": rel,
                       "closed_form_cases": len(rows)}, rows)


def _two_point_zeta(gen, window, delta):
    lo, hi = window
    return tilt.TiltParams(0.0, np.where(gen.random(hi - lo + 1) < 0.5, 0.0, -delta), lo, delta)


def _coupling_instance(args):
    p, seed, i = args
    gen = stream(seed, "coupling-check", i)
    n = p["n_steps"]
    window = (-n - 2 - tilt.BURN_IN, n + 2)
    base = _two_point_zeta(gen, window, p["delta"])
    params = tilt.TiltParams(p["eta"], base.zeta, base.zeta_lo, base.delta)
    tr = tilt.coupled_triple(params, 0, n, math.inf, gen)
    return i, tr.violations()


@experiment("coupling-check", n_triples=1000, n_steps=1000, delta=1.0, eta=-0.5)
def coupling_check(p, seed):
    """Pathwise ordering of three coupled tilted walks and their jump counts."""
    out = pmap(_coupling_instance, [(p, seed, i) for i in range(p["n_triples"])])
    rows = [{"triple": i, "Y_violations": v["Y"], "N_violations": v["N"]} for i, v in sorted(out, key=lambda r: r[0])]
    total = sum(r["Y_violations"] + r["N_violations"] for r in rows)
    # degenerate cases: identical chains give identical paths
    n = 200
    gen = stream(seed, "coupling-check", "degenerate")
    zero = tilt.TiltParams(p["eta"], np.zeros(2 * n + 5 + tilt.BURN_IN), -n - 2 - tilt.BURN_IN, p["delta"])
    t0 = tilt.coupled_triple(zero, 0, n, math.inf, gen)
    full = zero.with_zeta(-p["delta"])
    t1 = tilt.coupled_triple(full, 0, n, math.inf, gen)
    same = bool(np.array_equal(t0.Y[0], t0.Y[1]) and np.array_equal(t1.Y[1], t1.Y[2]))
    return Result(total == 0 and same, {"triples": len(rows), "violations": total,
                                        "degenerate_identical": same}, rows)


@experiment("hitting-order", delta=1.0, eta=-1.0, x=0, y=5, t_grid=[2.0, 5.0, 10.0], n_samples=10000,
            mode="independent", env_window=[-400, 400])
def hitting_order(p, seed):
    """Ordered hitting-time distributions for the potentials 0, zeta, -delta."""
    gen = stream(seed, "hitting-order")
    params = _two_point_zeta(gen, tuple(p["env_window"]), p["delta"])
    params = tilt.TiltParams(p["eta"], params.zeta, params.zeta_lo, params.delta)
    rep = tilt.hitting_order_check(params, p["x"], p["y"], p["t_grid"], p["n_samples"], seed, p["mode"])
    rows = []
    for k, t in enumerate(rep.t_grid):
        rows.append({"t": t, **{f"cdf_{lab}": rep.cdf[c][k].value for c, lab in enumerate(("zero", "zeta", "delta"))},
                     **{f"se_{lab}": rep.cdf[c][k].std_error for c, lab in enumerate(("zero", "zeta", "delta"))}})
    return Result(rep.ok, {"mode": rep.mode, "violations": rep.violations}, rows)


@experiment("eta-calibration", v_homogeneous=1.7320508075688772, eta_tol=1e-6, n_sites=10000,
            env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [0, 10049], "seed": 11},
            v_random=3.0, residual_tol=1e-4, v2_tol=1e-4)
def eta_calibration(p, seed):
    """Speed calibration eta_bar(v) and the velocity constants."""
    h = tilt.solve_eta_bar(0.0, p["v_homogeneous"], tol=1e-12)
    exact_h = 1.0 - math.sqrt(1.0 + p["v_homogeneous"] ** 2)
    env = make_environment(p["env"], seed)
    zeta, delta = shifted_potential(env)
    r = tilt.solve_eta_bar(zeta, p["v_random"], tol=1e-12, delta=delta)
    vc = tilt.velocity_constants(0.0, 1.0)
    v2_exact = math.sqrt(80.0)
    chk = tilt.solve_eta_bar(0.0, vc.v2, tol=1e-12)
    rows = [
        {"check": "homogeneous eta_bar", "value": h.eta_bar, "target": exact_h, "error": abs(h.eta_bar - exact_h)},
        {"check": "random residual", "value": r.residual, "target": 0.0, "error": abs(r.residual),
         "eta_bar": r.eta_bar, "std_error": r.std_error},
        {"check": "v2 (es=1, delta=0)", "value": vc.v2, "target": v2_exact, "error": abs(vc.v2 - v2_exact),
         "eta_bar_at_v2": chk.eta_bar},
    ]
    ok = rows[0]["error"] <= p["eta_tol"] and rows[1]["error"] <= p["residual_tol"] and rows[2]["error"] <= p["v2_tol"]
    ok &= abs(abs(chk.eta_bar) - (2 * vc.v1 + 2)) <= 1e-6 and vc.v2 > vc.v1 + 1
    return Result(bool(ok), {"v1": vc.v1, "v2": vc.v2, "vc_upper": vc.vc_upper,
                             "eta_bar_random": r.eta_bar}, rows)


# ---------------------------------------------------------------------------
# annihilation


def _kappa_two_point(seed: int, window=(-100, 100), lo=1.0, hi=2.0) -> PiecewisePotential:
    gen = stream(seed, "annihilation-kappa")
    return PiecewisePotential.from_sites(np.where(gen.random(window[1] - window[0] + 1) < 0.5, lo, hi), window[0])


def _convergence_rep(args):
    u0, kappa, u, n, seed, r = args
    g = stream(seed, "annihilation-convergence", n, r)
    run = ann.evolve(ann.init_from_measure(u0, n, g), kappa, u.time, g)
    return n, r, ann.weak_distance(ann.empirical_measure(run.final), u)


@experiment("annihilation-convergence", ns=[100, 1000, 10000], replicas=20, t=1.0,
            u0={"0": 1.0, "5": -1.0}, slope=-0.5, slope_tol=0.15)
def annihilation_convergence(p, seed):
    """Empirical signed measure of annihilating walks against the linear solution."""
    sites = {int(k): float(v) for k, v in p["u0"].items()}
    u0 = fkpp.LatticeField.from_sites(sites, (min(sites), max(sites)))
    kappa = _kappa_two_point(seed)
    u = ann.pde_solution(u0, kappa, p["t"])
    out = pmap(_convergence_rep, [(u0, kappa, u, n, seed, r) for n in p["ns"] for r in range(p["replicas"])])
    rows = [{"n": n, "replica": r, "distance": d} for n, r, d in sorted(out)]
    med = [float(np.median([r["distance"] for r in rows if r["n"] == n])) for n in p["ns"]]
    slope = float(np.polyfit(np.log(p["ns"]), np.log(med), 1)[0])
    decreasing = all(a > b for a, b in zip(med, med[1:]))
    ok = decreasing and abs(slope - p["slope"]) <= p["slope_tol"]
    return Result(ok, {"medians": med, "slope": slope, "decreasing": decreasing}, rows)


def _audit_rep(args):
    p, seed, r = args
    g = stream(seed, "substring-audit", r)
    lo, hi = p["init_window"]
    u0 = fkpp.LatticeField(lo, hi, g.normal(size=hi - lo + 1))
    run = ann.evolve(ann.init_from_measure(u0, p["n"], g), _kappa_two_point(seed), p["t"], g)
    rep = ann.substring_audit(run)
    return r, run.n_events, rep


@experiment("substring-audit", runs=1000, n=20, t=2.0, init_window=[-3, 3])
def substring_audit(p, seed):
    """Sign-sequence law checked at every event of annihilating runs."""
    out = pmap(_audit_rep, [(p, seed, r) for r in range(p["runs"])])
    rows, n_bad, first = [], 0, None
    for r, ne, rep in sorted(out, key=lambda x: x[0]):
        rows.append({"run": r, "events": ne, "violations": len(rep.violations)})
        n_bad += len(rep.violations)
        if rep.violations and first is None:
            first = {"run": r, **rep.violations[0]}
    return Result(n_bad == 0, {"runs": len(rows), "violations": n_bad, "first_violation": first}, rows)


# ---------------------------------------------------------------------------
# fronts


@experiment("tightness-scan", env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-300, 300]},
            env_seeds=[1, 2, 3, 4, 5], t_grid=[0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20], eps=0.1, dt=0.01,
            slack=2, early=[2.0, 10.0], bound_from=10.0)
def tightness_scan(p, seed):
    """Quantile spread of the maximum over time, and the linear upper bound on x_t."""
    rows, ok = [], True
    opts = fkpp.IntegratorOpts(dt=p["dt"])
    for es_seed in p["env_seeds"]:
        env = make_environment({**p["env"], "seed": es_seed}, seed)
        scan = fkpp.tightness_scan(env, p["t_grid"], p["eps"], opts)
        early = [r.spread for r in scan if p["early"][0] <= r.t <= p["early"][1]]
        late = scan[-1].spread
        good = late <= max(early) + p["slack"]
        for r in scan:
            bound = math.ceil((env.es + 2) * r.t)
            if r.t >= p["bound_from"] and r.x_t > bound:
                good = False
            rows.append({"env_seed": es_seed, "t": r.t, "eps": r.eps, "x_t": r.x_t, "m_t": r.m_t,
                         "x_t_upper": r.x_t_upper, "spread": r.spread, "bound": bound})
        ok &= good
    return Result(ok, {"seeds": len(p["env_seeds"])}, rows)


@experiment("wave-time-probe", env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-400, 400], "seed": 7},
            y_list=[0, 5, 10, 20], t_grid=[1, 2, 4, 6, 8, 10], eps=0.1, tprime_max=20.0, tprime_step=0.25)
def wave_time_probe(p, seed):
    """Waiting time from level eps to level 1 - eps for front solutions (report only)."""
    env = make_environment(p["env"], seed)
    tp = np.arange(0.0, p["tprime_max"] + 1e-9, p["tprime_step"])
    rep = fkpp.wave_time_probe(env, p["y_list"], p["t_grid"], p["eps"], tprime_grid=tp)
    rows = [{"y": y, "t": t, "t_prime": "" if s is None else s} for y, t, s in rep.rows]
    return Result(rep.ok, {"u": rep.u, "eps": rep.eps}, rows)


@experiment("wave-delta-probe", env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-400, 400], "seed": 7},
            y_list=[0, 5, 10, 20], t_grid=[2, 4, 6, 8], v=1.0, u=1.0, deltas=[0, 1, 2, 3, 4, 5, 6, 8, 10])
def wave_delta_probe(p, seed):
    """Scan of shifts D with w^y(t, z) >= w^{y+D}(t+u, z) (report only)."""
    env = make_environment(p["env"], seed)
    rep = fkpp.wave_delta_probe(env, p["y_list"], p["t_grid"], p["v"], p["u"], p["deltas"])
    rows = [{"delta": d, "holds": rep.holds[d], "min_gap": rep.min_gap[d]} for d in rep.deltas]
    return Result(True, {"delta_min": rep.delta_min, "v": rep.v, "u": rep.u}, rows)


@experiment("growth-check", env={"kind": "two_point", "ei": 1.0, "es": 2.0, "window": [-150, 150]},
            env_seeds=[1, 2, 3, 4, 5], t_grid=[2.0, 4.0, 8.0], n_runs=2000, x=0)
def growth_check(p, seed):
    """Frequency of few particles at the start site, quenched against homogeneous ei."""
    rows = []
    for s in p["env_seeds"]:
        env = make_environment({**p["env"], "seed": s}, seed)
        for r in brwre.growth_check(env, p["x"], p["t_grid"], p["n_runs"], stream(seed, "growth", s)):
            rows.append({"env": s, "t": r.t, "frequency": r.frequency, "se": r.std_error, "capped": r.n_capped})
    hom = Environment.constant(p["env"]["ei"], *p["env"]["window"])
    for r in brwre.growth_check(hom, p["x"], p["t_grid"], p["n_runs"], stream(seed, "growth", "hom")):
        rows.append({"env": "homogeneous_ei", "t": r.t, "frequency": r.frequency, "se": r.std_error, "capped": r.n_capped})
    first, last = p["t_grid"][0], p["t_grid"][-1]
    med = {t: float(np.median([r["frequency"] for r in rows if r["env"] != "homogeneous_ei" and r["t"] == t]))
           for t in (first, last)}
    hom_f = {r["t"]: r for r in rows if r["env"] == "homogeneous_ei"}
    dominated = all(r["frequency"] <= hom_f[r["t"]]["frequency"] + 3 * math.hypot(r["se"], hom_f[r["t"]]["se"])
                    for r in rows if r["env"] != "homogeneous_ei")
    ok = med[last] < med[first] and dominated
    return Result(ok, {"median_first": med[first], "median_last": med[last], "dominated": dominated}, rows)
