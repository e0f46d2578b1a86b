"""Command-line entry points: run, convergence, decomp, cflscan.

Exit codes: 0 ok, 2 configuration error, 3 admissibility abort,
4 numeric abort (NaN/Inf or step-limit).
"""

import argparse
import csv
import sys
import time

import numpy as np

from . import bp as bp_mod
from .config import RunConfig, load_config
from .dg import SpatialOperator
from .errors import AdmissibilityError, ConfigError, NumericsError, TriDGError
from .harness import cfl_ratio_scan, convergence_study, solve_problem
from .mesh import load_mesh
from .oe import OEFilter
from .problems import get_problem
from .timestepping import run, scheme_by_name

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_NUMERIC = 4


def _fmt(x):
    return f"{x:.17g}"


def _write_csv(path, header, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    finally:
        if path:
            out.close()


def _add_run_flags(p):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--problem", help="library problem name")
    p.add_argument("--k", type=int, help="polynomial degree 1..4")
    p.add_argument("--rk", choices=("rk22", "rk33", "rk54"))
    p.add_argument("--oe", choices=("off", "cw", "ri"))
    p.add_argument("--bp", choices=("off", "zxs", "dcw"))
    p.add_argument("--mesh", help="mesh file (overrides the problem recipe)")
    p.add_argument("--gen", help="nx,ny structured-mesh override")
    p.add_argument("--level", type=int, help="refinement level of the recipe")
    p.add_argument("--tend", type=float, help="final time")
    p.add_argument("--cfl", type=float, help="CFL safety factor")
    p.add_argument("--out", help="output directory/prefix")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-times", dest="output_times")
    p.add_argument("--sample-grid", dest="sample_grid", type=int)


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    for name in ("problem", "k", "rk", "oe", "bp", "mesh", "gen", "level",
                 "tend", "cfl", "out", "seed", "output_times", "sample_grid"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def _build_run(cfg):
    prob = get_problem(cfg.problem)
    model = prob.make_model()
    cfg.validate(model_name=model.name)
    if cfg.mesh:
        mesh = load_mesh(cfg.mesh)
    elif cfg.gen:
        nx, ny = (int(v) for v in cfg.gen.split(","))
        mesh = prob.make_rect_mesh(nx, ny)
    else:
        mesh = prob.make_mesh(cfg.level)
    op = SpatialOperator(mesh, model, cfg.k, boundary=prob.boundary(model))
    state = op.project(prob.ic)
    oe = None
    if cfg.oe != "off":
        oe = OEFilter(op, mode=cfg.oe_mode,
                      guard_wavespeed=cfg.bp_scheme is not None)
    return prob, op, state, oe


def _write_snapshot(path, op, state):
    mesh = op.mesh
    rows = []
    for c in range(mesh.n_cells):
        cx, cy = mesh.centroid[c]
        for l in range(op.nm):
            for comp in range(state.d):
                rows.append((c, float(cx), float(cy), l, comp,
                             float(state.coeffs[c, l, comp])))
    _write_csv(path, ("cell_id", "centroid_x", "centroid_y", "mode",
                      "component", "value"), rows)


def _write_samples(path, op, state, n):
    """Uniform point sampling over the mesh bounding box for contour tools."""
    mesh = op.mesh
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    # locate each sample point's cell by brute-force barycentric test
    rows = []
    verts = mesh.vertices[mesh.cells]
    for x in xs:
        for y in ys:
            ref_all = np.einsum(
                "cab,cb->ca", mesh.jac_inv,
                np.array([x, y])[None, :] - verts[:, 0, :])
            inside = ((ref_all[:, 0] >= -1e-12) & (ref_all[:, 1] >= -1e-12)
                      & (ref_all.sum(axis=1) <= 1 + 1e-12))
            if not inside.any():
                continue
            c = int(np.argmax(inside))
            u = op.evaluate(state, c, np.array([x, y]))
            rows.append((float(x), float(y), *[float(v) for v in np.atleast_1d(u.squeeze())]))
    ncomp = state.d
    _write_csv(path, ("x", "y", *[f"u{i}" for i in range(ncomp)]), rows)


def cmd_run(args):
    cfg = _config_from_args(args)
    prob, op, state, oe = _build_run(cfg)
    t_end = cfg.tend if cfg.tend is not None else prob.t_end
    t0 = time.perf_counter()
    result = run(op, state, t_end, scheme=cfg.rk and scheme_by_name(cfg.rk),
                 oe=oe, bp_scheme=cfg.bp_scheme, bounds=prob.bp_bounds,
                 output_times=cfg.times, cfl_scale=cfg.cfl,
                 max_steps=cfg.max_steps, dt_rule=cfg.dt_rule)
    wall = time.perf_counter() - t0
    prefix = cfg.out or f"{cfg.problem}_k{cfg.k}"
    for i, (t, snap) in enumerate(result.snapshots):
        _write_snapshot(f"{prefix}_t{i}.csv", op, snap)
    _write_snapshot(f"{prefix}_final.csv", op, result.state)
    if cfg.sample_grid:
        _write_samples(f"{prefix}_samples.csv", op, result.state,
                       cfg.sample_grid)
    _write_csv(f"{prefix}_meta.csv",
               ("steps", "average_dt", "wall_time", "t_final",
                "bp_violations"),
               [(result.steps, result.average_dt, wall, result.state.t,
                 result.bp_violations)])
    print(f"{cfg.problem}: {result.steps} steps, average dt "
          f"{result.average_dt:.6g}, wall {wall:.2f}s")
    return EXIT_OK


def cmd_convergence(args):
    cfg = _config_from_args(args)
    cfg.validate()
    rows = convergence_study(cfg.problem, cfg.k, args.levels,
                             oe_mode=cfg.oe_mode if cfg.oe != "off" else "off",
                             t_end=cfg.tend,
                             scheme=cfg.rk and scheme_by_name(cfg.rk))
    path = cfg.out
    _write_csv(path, ("N", "L1", "order1", "L2", "order2", "Linf", "orderinf"),
               [(r.n_cells, r.l1, r.order1, r.l2, r.order2, r.linf, r.orderinf)
                for r in rows])
    return EXIT_OK


def cmd_decomp(args):
    verts = [float(v) for v in args.vertices.split(",")]
    if len(verts) != 6:
        raise ConfigError("field 'vertices': expected x1,y1,x2,y2,x3,y3")
    v = np.array(verts).reshape(3, 2)
    rows = []
    lengths, _ = bp_mod.sorted_cell(v)
    for k in ([args.k] if args.k else [1, 2]):
        dec = bp_mod.decomposition(v, k, "dcw")
        nodes = dec.node_points()
        node_str = ";".join(f"{p[0]:.12g}|{p[1]:.12g}" for p in nodes)
        wts_str = ";".join(f"{w:.12g}" for w in dec.edge_weights)
        nwts_str = ";".join(f"{w:.12g}" for _, w in dec.nodes)
        raw_pts = [b @ dec.vertices for b, _ in dec.raw_nodes]
        raw_str = ";".join(f"{p[0]:.12g}|{p[1]:.12g}" for p in raw_pts)
        rows.append(("dcw", k, wts_str, node_str, nwts_str, raw_str, dec.cfl))
        rows.append(("zxs", k, "", "", "", "",
                     float(bp_mod.classical_cfl(lengths, k))))
        rows.append(("cs", k, "", "", "", "",
                     float(bp_mod.chen_shu_cfl(lengths, k))))
    _write_csv(args.out, ("scheme", "k", "edge_weights", "nodes",
                          "node_weights", "raw_nodes", "cfl"), rows)
    return EXIT_OK


def cmd_cflscan(args):
    ks = [args.k] if args.k else [1, 2]
    rows = []
    for k in ks:
        if args.mesh:
            res = cfl_ratio_scan(k=k, mesh=load_mesh(args.mesh))
        else:
            res = cfl_ratio_scan(n=args.count, k=k, seed=args.seed)
        rows.append((k, res["n"], res["dcw_zxs_min"], res["dcw_zxs_max"],
                     res["dcw_cs_min"], res["dcw_cs_max"]))
    _write_csv(args.out, ("k", "n", "dcw_zxs_min", "dcw_zxs_max",
                          "dcw_cs_min", "dcw_cs_max"), rows)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="tridg",
        description="DG solver for 2D conservation laws on triangular meshes")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="time-integrate a problem")
    _add_run_flags(pr)
    pr.set_defaults(fn=cmd_run)

    pc = sub.add_parser("convergence", help="grid refinement study")
    _add_run_flags(pc)
    pc.add_argument("--levels", type=int, default=4)
    pc.set_defaults(fn=cmd_convergence)

    pd = sub.add_parser("decomp", help="convex decomposition of one triangle")
    pd.add_argument("--vertices", required=True,
                    help="x1,y1,x2,y2,x3,y3")
    pd.add_argument("--k", type=int, choices=(1, 2))
    pd.add_argument("--out")
    pd.set_defaults(fn=cmd_decomp)

    ps = sub.add_parser("cflscan", help="CFL-number ratio extrema")
    ps.add_argument("--count", type=int, default=10_000)
    ps.add_argument("--k", type=int, choices=(1, 2))
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--mesh")
    ps.add_argument("--out")
    ps.set_defaults(fn=cmd_cflscan)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        print(f"admissibility abort: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except NumericsError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TriDGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
