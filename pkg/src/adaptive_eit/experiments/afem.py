"""SOLVE -> ESTIMATE -> MARK -> REFINE loop and its outputs."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import EITError
from ..estimators import compute_indicators
from ..marking import mark_all
from ..mesh import build_initial_mesh, mesh_to_dict, refine, refine_uniform
from ..optimizer import InverseProblem, minimize, warm_start
from .data import generate_currents, synth_data, NoiseModel
from .metrics import error_metrics
from .phantoms import get_phantom

log = logging.getLogger(__name__)

RECORD_FIELDS = [
    "k", "dofs", "elements", "J", "fidelity", "penalty", "mm_steps", "mm_status",
    "eta1_sq", "eta2_sq", "eta3_q", "eta3_max", "n_marked", "L1_error", "L2_error",
]
LOG_FIELDS = ["level", "outer_iter", "J", "fidelity", "penalty", "step", "pcg_iters",
              "pcg_residual", "status"]


@dataclass
class RunResult:
    config: object
    records: list = field(default_factory=list)
    meshes: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    indicators: list = field(default_factory=list)
    marks: list = field(default_factory=list)
    history: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    error: str | None = None

    @property
    def final_mesh(self):
        return self.meshes[-1]

    @property
    def final_sigma(self):
        return self.sigmas[-1]


def make_data(config):
    currents = generate_currents(config.L, config.n_patterns)
    phantom = get_phantom(config.phantom)
    return synth_data(phantom, currents, NoiseModel(config.noise, config.seed), config.layout(),
                      n0=config.n0, fine_factor=config.fine_factor, extents=config.extents)


def run_afem(config, data=None, output_dir=None):
    """Run the adaptive (or uniform) reconstruction loop.

    ``data`` is a SyntheticData; it is generated from the config when omitted.
    Errors inside the loop are recorded and re-raised after the completed
    iterations have been written.
    """
    if data is None:
        data = make_data(config)
    params = config.params
    mesh = build_initial_mesh(config.extents, config.layout(), config.n0)
    sigma = np.full(mesh.n_vertices, config.c0)
    result = RunResult(config)
    try:
        for k in range(config.K + 1):
            t0 = time.perf_counter()
            problem = InverseProblem(mesh, data.currents, data.noisy, params)
            mm = minimize(problem, sigma, config.mm, level=k)
            st = mm.state
            table = compute_indicators(mesh, st.sigma, st.states, mm.adjoints, params, config.q)
            marks = mark_all(table, config.theta)
            e1, e2, e3 = table.totals()
            result.meshes.append(mesh)
            result.sigmas.append(np.array(st.sigma))
            result.indicators.append(table)
            result.history += mm.history
            rec = {
                "k": k, "dofs": mesh.n_vertices, "elements": mesh.n_elements,
                "J": st.objective, "fidelity": st.fidelity, "penalty": st.penalty,
                "mm_steps": st.k, "mm_status": st.status,
                "eta1_sq": e1, "eta2_sq": e2, "eta3_q": e3,
                "eta3_max": float(np.max(table.eta3_q[sorted(marks.M3)])) if marks.M3 else 0.0,
                "n_marked": len(marks.M) if config.mode == "adaptive" else mesh.n_elements,
            }
            result.records.append(rec)
            result.marks.append(marks)
            if k == config.K:
                result.timings.append(time.perf_counter() - t0)
                break
            if st.status == "stalled":
                log.info("optimizer stalled at loop %d; stopping", k)
                result.timings.append(time.perf_counter() - t0)
                break
            if config.mode == "adaptive":
                if not marks.M:
                    log.info("empty marking at loop %d; stopping", k)
                    result.timings.append(time.perf_counter() - t0)
                    break
                new_mesh = refine(mesh, marks.M)
            else:
                new_mesh = refine_uniform(mesh, config.uniform_sweeps)
            result.timings.append(time.perf_counter() - t0)
            if config.max_dofs is not None and new_mesh.n_vertices > config.max_dofs:
                break
            sigma = warm_start(mesh, st.sigma, new_mesh)
            mesh = new_mesh
            log.info("loop %d: %d dofs, J = %.6e", k, result.records[-1]["dofs"], st.objective)
    except EITError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.error("run aborted after %d loops: %s", len(result.records), result.error)
        _finish(result, output_dir)
        raise
    _finish(result, output_dir)
    return result


def _finish(result, output_dir):
    if result.meshes:
        ref_mesh, ref = result.final_mesh, result.final_sigma
        for rec, m, s in zip(result.records, result.meshes, result.sigmas):
            rec["L1_error"], rec["L2_error"] = error_metrics(m, s, ref_mesh, ref)
    if output_dir is not None:
        write_outputs(result, output_dir)


# -- files ------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, rows, fields):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r.get(f, "")) for f in fields])


def read_records(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for k, v in r.items():
            if k in ("k", "dofs", "elements", "mm_steps", "n_marked"):
                d[k] = int(v)
            elif k == "mm_status":
                d[k] = v
            else:
                d[k] = float(v) if v != "" else float("nan")
        out.append(d)
    return out


def write_outputs(result, output_dir):
    os.makedirs(output_dir, exist_ok=True)
    write_csv(os.path.join(output_dir, "records.csv"), result.records, RECORD_FIELDS)
    write_csv(os.path.join(output_dir, "mm_log.csv"), result.history, LOG_FIELDS)
    cfg = result.config
    for k, (m, s, t) in enumerate(zip(result.meshes, result.sigmas, result.indicators)):
        t.write_csv(os.path.join(output_dir, f"indicators_k{k:02d}.csv"))
        if cfg.write_fields:
            d = mesh_to_dict(m)
            d["sigma"] = s.tolist()
            with open(os.path.join(output_dir, f"level_k{k:02d}.json"), "w") as fh:
                json.dump(d, fh, sort_keys=True)
        if cfg.vtk:
            write_vtk(os.path.join(output_dir, f"level_k{k:02d}.vtk"), m, {"sigma": s})
    meta = {"config": cfg.to_dict(), "timings": result.timings, "error": result.error}
    with open(os.path.join(output_dir, "run.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def write_vtk(path, mesh, point_data):
    """Legacy ASCII VTK unstructured grid."""
    n, m = mesh.n_vertices, mesh.n_elements
    lines = ["# vtk DataFile Version 3.0", "adaptive_eit", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices]
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.elements]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    lines.append(f"POINT_DATA {n}")
    for name, vals in point_data.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def compare_runs(adaptive_records, uniform_records):
    """L1/L2 errors of both runs at the largest d.o.f. covered by both.

    The last record of each run is its own reference (zero error) and is
    excluded. The run whose records extend past the comparison point is
    interpolated linearly in log(d.o.f.).
    """
    a = [r for r in adaptive_records[:-1]]
    u = [r for r in uniform_records[:-1]]
    if not a or not u:
        raise EITError("each run needs at least two loops to compare")
    n_star = min(a[-1]["dofs"], u[-1]["dofs"])
    out = {"dofs": n_star}
    for name, recs in (("adaptive", a), ("uniform", u)):
        logn = np.log([r["dofs"] for r in recs])
        for key in ("L1_error", "L2_error"):
            out[f"{name}_{key}"] = float(np.interp(np.log(n_star), logn, [r[key] for r in recs]))
    out["L1_ratio"] = out["adaptive_L1_error"] / out["uniform_L1_error"]
    out["L2_ratio"] = out["adaptive_L2_error"] / out["uniform_L2_error"]
    return out
