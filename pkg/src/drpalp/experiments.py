"""Scenario runners behind the command-line subcommands.

Each runner works case by case, writes its artifacts under an output
directory and returns summary rows.  Cases are independent, so they can
run in worker processes; rows and files only depend on the scenario and
its seeds.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import detect_peaks, format_csv, format_table, match_peaks, scan_profile, summarize, t_test
from .errors import ConfigError
from .filters import run_batch
from .offline import FitProblem, Model, fit_elasticity, fit_load_cycle, reconstruct_force
from .phantom import local_params
from .scenario import fit_models
from .sim import LoadCycle, resample_to_filter_rate, simulate

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = 1


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _clean(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def truth_at(case, x=None, y=None):
    """Effective material under the tip at the trajectory point."""
    traj = case.trajectory
    if x is None:
        x, y = (traj.start if hasattr(traj, "start") else (traj.x, traj.y))
    return local_params(case.phantom, float(x), float(y))


def _streams(case):
    return [simulate(case.phantom, case.tip, case.trajectory, case.sensor_for(s)) for s in case.seeds]


def _trace_policy(case):
    mode = case.config.get("output", {}).get("traces", "first")
    if mode not in ("all", "first", "none"):
        raise ConfigError(f"'output.traces' must be all, first or none, got {mode!r}")
    return {"all": len(case.seeds), "first": 1, "none": 0}[mode]


# ---- simulate --------------------------------------------------------------

def simulate_case(case, out):
    files = []
    for seed, s in zip(case.seeds, _streams(case)):
        rel = os.path.join(case.name, f"stream_{seed}.csv")
        _write(os.path.join(out, rel), s.to_csv())
        files.append(rel)
    return {"rows": [{"case": case.name, "runs": len(files)}], "files": files}


# ---- fit -------------------------------------------------------------------

def fit_case(case, out, models=None):
    models = fit_models(case, models)
    fc = case.config.get("fit", {})
    F_unc = float(fc.get("F_unc", 0.05))
    known = bool(fc.get("known_surface", False))
    truth = truth_at(case)
    files, results, caught = [], {m: [] for m in models}, []
    for seed, s in zip(case.seeds, _streams(case)):
        for m in models:
            kw = dict(F_unc=F_unc, nu=case.phantom.matrix.nu, eta_max=float(fc.get("eta_max", 2000.0)))
            if "n_bounds" in fc:
                kw["n_bounds"] = tuple(fc["n_bounds"])
            if known:
                kw["z_surf"] = case.phantom.surface_z
            prob = FitProblem(m, s, profile=case.tip, **kw)
            with warnings.catch_warnings(record=True) as got:
                warnings.simplefilter("always")
                r = fit_elasticity(prob) if m is Model.DR_ELASTIC else fit_load_cycle(prob)
            caught += [(seed, str(w.message)) for w in got]
            rel = os.path.join(case.name, f"fit_{m.value}_{seed}.json")
            _write(os.path.join(out, rel), r.to_json())
            files.append(rel)
            results[m].append(r)
    if caught:
        log.warning("%s: %d fit(s) warned; first (seed %d): %s", case.name, len(caught), *caught[0])
    rows = []
    for m, rs in results.items():
        row = {"case": case.name, "model": m.value, "n": len(rs),
               "residual_N2": float(np.mean([r.residual for r in rs])),
               "z_surf_err_mm": float(np.mean([r.z_surf - case.phantom.surface_z for r in rs]) * 1e3)}
        for k in rs[0].params:
            vals = [r.params[k] for r in rs]
            ref = {"E_f": truth.E_f, "eta": truth.eta}.get(k, math.nan)
            sm = summarize(vals, ref)
            row[f"{k}_mean"], row[f"{k}_std"], row[f"{k}_err_pct"] = sm.mean, sm.std, sm.rel_error
        for v in fc.get("evaluate_speeds", []):
            row[f"residual_at_{v * 1e3:g}mm_s"] = _cross_speed_residual(case, rs, m, float(v))
        rows.append({k: _clean(v) for k, v in row.items()})
    return {"rows": rows, "files": files}


def _cross_speed_residual(case, results, model, speed):
    # fitted parameters replayed on a cycle at another speed, same seeds
    traj = case.trajectory
    if not isinstance(traj, LoadCycle):
        raise ConfigError("'fit.evaluate_speeds' needs a load_cycle trajectory")
    other = LoadCycle(speed=speed, max_depth=traj.max_depth, approach=traj.approach, x=traj.x, y=traj.y, dt=traj.dt)
    res = []
    for seed, r in zip(case.seeds, results):
        s = simulate(case.phantom, case.tip, other, case.sensor_for(seed))
        d = r.z_surf - s.z_ee
        _, e = reconstruct_force(model, r.params, d, s.v_meas, s.F_meas, case.tip, case.phantom.matrix.nu)
        res.append(float(e @ e))
    return float(np.mean(res))


# ---- estimate --------------------------------------------------------------

def estimate_case(case, out, variant=None, theta=None):
    truth = truth_at(case)
    keep = _trace_policy(case)
    rows, files, finals = [], [], {}
    for cfg in case.filter_configs(variant, theta):
        streams = [resample_to_filter_rate(s, cfg.dt) for s in _streams(case)]
        traces = run_batch(streams, cfg)
        Ef, eta = zip(*(tr.final_mean(case.final_window) for tr in traces))
        finals[cfg.variant.value] = {"Ef": list(Ef), "eta": list(eta)}
        for seed, tr in list(zip(case.seeds, traces))[:keep]:
            rel = os.path.join(case.name, cfg.variant.value, f"trace_{seed}.csv")
            _write(os.path.join(out, rel), tr.to_csv())
            files.append(rel)
        for param, vals, ref in (("Ef", Ef, truth.E_f), ("eta", eta, truth.eta)):
            sm = summarize(vals, ref)
            rows.append({"case": case.name, "variant": cfg.variant.value, "param": param, "truth": ref,
                         "mean": sm.mean, "std": sm.std, "err_pct": sm.rel_error, "n": sm.n})
    rel = os.path.join(case.name, "finals.json")
    _write(os.path.join(out, rel), _json({"schema_version": 1, **finals}))
    files.append(rel)
    return {"rows": [{k: _clean(v) for k, v in r.items()} for r in rows], "files": files, "finals": finals}


def compare_cases(results, reference):
    """Welch p-values and mean ratios of every case against ``reference``."""
    if reference not in results:
        raise ConfigError(f"'analysis.compare_to' names unknown case {reference!r}")
    rows = []
    for name, res in results.items():
        for variant, ref_vals in results[reference]["finals"].items():
            vals = res["finals"].get(variant)
            if vals is None or name == reference:
                continue
            for param in ("Ef", "eta"):
                a, b = np.asarray(vals[param]), np.asarray(ref_vals[param])
                rows.append({"case": name, "reference": reference, "variant": variant, "param": param,
                             "ratio": float(a.mean() / b.mean()), "p_welch": t_test(a, b)})
    return rows


# ---- scan ------------------------------------------------------------------

def scan_case(case, out, variant=None, theta=None):
    sc = case.config.get("scan", {})
    period = float(sc.get("period", 1.0 / case.trajectory.omega))
    tol = float(sc.get("tolerance", 5e-3))
    keep = _trace_policy(case)
    rows, files = [], []
    for cfg in case.filter_configs(variant, theta):
        streams = [resample_to_filter_rate(s, cfg.dt) for s in _streams(case)]
        for seed, s, tr in zip(case.seeds, streams, run_batch(streams, cfg)):
            prof = scan_profile(tr, s, period)
            peaks = detect_peaks(prof, baseline_window=float(sc.get("baseline_window", 30e-3)),
                                 prominence=float(sc.get("prominence", 0.08)), reference=sc.get("reference"))
            targets = [prof.arc_length(*inc.apex) for inc in case.phantom.intrusions]
            hit = match_peaks(peaks, targets, tol)
            base = os.path.join(case.name, cfg.variant.value)
            if seed in case.seeds[:keep]:
                _write(os.path.join(out, base, f"trace_{seed}.csv"), tr.to_csv())
                files.append(os.path.join(base, f"trace_{seed}.csv"))
            _write(os.path.join(out, base, f"profile_{seed}.csv"), prof.to_csv())
            world = [float(prof.world(p.position)[0]) for p in peaks]
            _write(os.path.join(out, base, f"peaks_{seed}.json"),
                   _json({"schema_version": 1, "peaks_x": world,
                          "peaks": [{"position": p.position, "height": p.height, "elevation": p.elevation}
                                    for p in peaks],
                          "targets": targets, "localized": hit}))
            files += [os.path.join(base, f"profile_{seed}.csv"), os.path.join(base, f"peaks_{seed}.json")]
            rows.append({"case": case.name, "variant": cfg.variant.value, "seed": seed, "n_peaks": len(peaks),
                         "peaks_x_mm": " ".join(f"{x * 1e3:.1f}" for x in world),
                         "localized": sum(hit), "targets": len(targets),
                         "pass": bool(len(peaks) == len(targets) and all(hit))})
    return {"rows": rows, "files": sorted(files)}


# ---- orchestration ---------------------------------------------------------

RUNNERS = {"simulate": simulate_case, "fit": fit_case, "estimate": estimate_case, "scan": scan_case}


def _run_one(args):
    command, case, out, kw = args
    return RUNNERS[command](case, out, **kw)


def run_scenario(command, scenario, out, jobs=1, **kw):
    """Run every case of ``scenario`` and write tables plus a manifest."""
    tasks = [(command, c, out, kw) for c in scenario.cases]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    by_case = {c.name: r for c, r in zip(scenario.cases, results)}
    rows = [row for r in results for row in r["rows"]]
    files = [f for r in results for f in r["files"]]
    tables = {"summary": rows}
    ref = scenario.raw.get("analysis", {}).get("compare_to")
    if command == "estimate" and ref:
        tables["comparison"] = compare_cases(by_case, ref)
    for name, tab in tables.items():
        if not tab:
            continue
        header = list(tab[0].keys())
        for r in tab[1:]:
            header += [k for k in r if k not in header]
        body = [[r.get(k, "") for k in header] for r in tab]
        _write(os.path.join(out, f"{name}.csv"), "# schema_version=1 kind=" + name + "\n" + format_csv(header, body))
        _write(os.path.join(out, f"{name}.txt"), format_table(header, body, title=f"{scenario.name}: {name}"))
        files += [f"{name}.csv", f"{name}.txt"]
    manifest = {"schema_version": MANIFEST_SCHEMA, "package_version": __version__, "command": command,
                "scenario": scenario.raw, "base_seed": scenario.base_seed,
                "seeds": {c.name: list(c.seeds) for c in scenario.cases},
                "options": {k: v for k, v in kw.items() if v is not None},
                "files": sorted(files), "tables": tables}
    _write(os.path.join(out, "manifest.json"), _json(manifest))
    return manifest


def report(results_dir):
    """Gather the summary tables of every manifest below ``results_dir``."""
    paths = []
    for root, dirs, names in os.walk(results_dir):
        dirs.sort()
        if "manifest.json" in names:
            paths.append(os.path.join(root, "manifest.json"))
    if not paths:
        raise ConfigError(f"no manifest.json found under {results_dir}")
    manifests = []
    for p in sorted(paths):
        with open(p) as fh:
            manifests.append((p, json.load(fh)))
    versions = sorted({m.get("schema_version") for _, m in manifests}, key=str)
    if len(versions) > 1:
        raise ConfigError(f"mixed manifest schema versions {versions} under {results_dir}")
    if versions[0] != MANIFEST_SCHEMA:
        raise ConfigError(f"unsupported manifest schema version {versions[0]}")
    rows = []
    for p, m in manifests:
        src = os.path.relpath(os.path.dirname(p), results_dir)
        for r in m.get("tables", {}).get("summary", []):
            rows.append({"source": src, "scenario": m["scenario"].get("name", ""), "command": m["command"], **r})
    header = []
    for r in rows:
        header += [k for k in r if k not in header]
    body = [[r.get(k, "") for k in header] for r in rows]
    text = "# schema_version=1 kind=report\n" + format_csv(header, body)
    return text, len(manifests)
