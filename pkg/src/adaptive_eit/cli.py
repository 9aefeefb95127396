"""Command line entry point: forward, synth, reconstruct, compare.

Every RunConfig field has a matching ``--field-name`` flag. Values are taken
from the dataclass defaults, then from ``--config FILE`` (JSON object with
RunConfig field names as keys), then from explicit flags.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from .cem import assemble, forward_states
from .errors import EITError
from .experiments.afem import compare_runs, make_data, read_records, run_afem
from .experiments.config import RunConfig
from .experiments.data import SyntheticData, generate_currents
from .experiments.phantoms import get_phantom
from .mesh import build_initial_mesh

log = logging.getLogger("adaptive_eit")

_BOOL_FIELDS = {"write_fields", "vtk"}


def _add_config_flags(parser, skip=()):
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    for f in dataclasses.fields(RunConfig):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        kw = {"dest": f.name, "default": argparse.SUPPRESS}
        if f.name in _BOOL_FIELDS:
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, **kw)
        elif f.name == "extents":
            parser.add_argument(flag, type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"), **kw)
        elif f.name == "max_dofs":
            parser.add_argument(flag, type=int, **kw)
        elif f.name in ("mode", "phantom"):
            parser.add_argument(flag, type=str, **kw)
        else:
            parser.add_argument(flag, type=type(f.default), **kw)


def config_from_args(args):
    base = RunConfig.load(args.config).to_dict() if getattr(args, "config", None) else {}
    names = {f.name for f in dataclasses.fields(RunConfig)}
    base.update({k: v for k, v in vars(args).items() if k in names})
    return RunConfig.from_dict(base)


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_forward(args):
    cfg = config_from_args(args)
    phantom = get_phantom(cfg.phantom)
    n = args.n if args.n else cfg.n0 * 2 ** cfg.fine_factor
    mesh = build_initial_mesh(cfg.extents, cfg.layout(), n)
    currents = generate_currents(cfg.L, cfg.n_patterns)
    states = forward_states(assemble(mesh, phantom.nodal(mesh), cfg.layout().impedances), currents)
    _dump_json({
        "phantom": phantom.to_dict(),
        "mesh_n": n,
        "dofs": mesh.n_vertices,
        "currents": currents.tolist(),
        "voltages": [s.U.tolist() for s in states],
    }, args.out)
    return 0


def cmd_synth(args):
    cfg = config_from_args(args).replace(seed=args.seed)
    data = make_data(cfg)
    d = data.to_dict()
    d["config"] = cfg.to_dict()
    _dump_json(d, args.out)
    return 0


def cmd_reconstruct(args):
    cfg = config_from_args(args)
    data = None
    if args.data:
        with open(args.data) as fh:
            data = SyntheticData.from_dict(json.load(fh))
        if data.currents.shape != (cfg.n_patterns, cfg.L):
            raise EITError(f"data has shape {data.currents.shape}, config expects "
                           f"({cfg.n_patterns}, {cfg.L})")
    result = run_afem(cfg, data, args.out)
    last = result.records[-1]
    print(f"{cfg.mode}: {len(result.records)} levels, final dofs {last['dofs']}, "
          f"J = {last['J']:.6e}; outputs in {args.out}")
    return 0


def cmd_compare(args):
    a = read_records(os.path.join(args.adaptive_dir, "records.csv"))
    u = read_records(os.path.join(args.uniform_dir, "records.csv"))
    _dump_json(compare_runs(a, u), args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="adaptive-eit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="solve the forward problem for a phantom, print voltages")
    _add_config_flags(f)
    f.add_argument("--n", type=int, default=None, help="grid cells per side (default n0 * 2**fine_factor)")
    f.add_argument("--out", default="-", help="output JSON (default stdout)")
    f.set_defaults(func=cmd_forward)

    s = sub.add_parser("synth", help="generate noisy synthetic data")
    _add_config_flags(s, skip=("seed",))
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", default="-", help="output JSON (default stdout)")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("reconstruct", help="run the adaptive or uniform reconstruction loop")
    _add_config_flags(r)
    r.add_argument("--data", help="data JSON from 'synth' (generated from the config if omitted)")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reconstruct)

    c = sub.add_parser("compare", help="compare errors of an adaptive and a uniform run")
    c.add_argument("adaptive_dir")
    c.add_argument("uniform_dir")
    c.add_argument("--out", default="-", help="output JSON (default stdout)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EITError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
