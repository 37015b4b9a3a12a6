"""Command-line entry point: ``wlab <subcommand> [options]``.

Every subcommand writes CSV tables and a JSON manifest under the output
directory.  Exit codes: 0 success, 1 validation error, 2 failed numerical
assertion.
"""
import argparse
import csv
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from ._accel import backend
from .config import ConfigError, RunConfig, default_of
from .errors import NumericalAssertionError, WlabError

COMMANDS = ("potential", "calibrate", "evolve-quantum", "evolve-classical", "trajectories",
            "compare", "claim-table", "split", "figure1", "two-limits", "shadow", "selftest")

# flag -> config key
FLAG_KEYS = {
    "theta": "potential.theta",
    "variant": "potential.variant",
    "eps": "schedule.eps",
    "log_eps": "schedule.log_eps",
    "T": "schedule.T",
    "X": "data.X",
    "K": "data.K",
    "offset": "data.offset",
    "kind": "data.kind",
    "space_dims": "data.space_dims",
    "nodes": "classical.nodes",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--set", action="append", default=[], metavar="BLOCK.KEY=VALUE",
                        help="override one configuration value")
    common.add_argument("--out-dir", help="output directory (fallback: $WLAB_OUT_DIR)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    for flag, key in FLAG_KEYS.items():
        common.add_argument("--" + flag.replace("_", "-"), dest=flag, default=None,
                            help=f"sets {key} (default: {default_of(key)!r})")
    p = _Parser(prog="wlab", description="Wigner-measure laboratory for a conical potential singularity")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name, parents=[common])
        if name == "split":
            s.add_argument("--quantum", action="store_true", help="also evolve the Toeplitz atoms")
        if name == "two-limits":
            s.add_argument("--no-quantum", action="store_true")
    return p


def _config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for flag, key in FLAG_KEYS.items():
        v = getattr(args, flag)
        if v is not None:
            cfg.set(key, v)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects BLOCK.KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v)
    return cfg


def _out_dir(args, cfg):
    d = args.out_dir or cfg["output"]["out_dir"] or os.environ.get("WLAB_OUT_DIR") or "wlab-out"
    os.makedirs(d, exist_ok=True)
    return d


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, rows):
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in keys])
    return path


def _versions():
    import numba
    import scipy
    return {"wlab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(out, command, cfg, args, outputs, extra=None):
    m = {"command": command, "config": cfg.data, "config_hash": cfg.hash(),
         "seed": args.seed, "workers": args.workers, "backend": backend(),
         "versions": _versions(), "outputs": sorted(os.path.basename(p) for p in outputs)}
    if extra:
        m.update(extra)
    path = os.path.join(out, f"{command}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(m, fh, indent=2, sort_keys=True, default=_fmt)
    return path


# ---------------------------------------------------------------------------
# builders

def make_potential(cfg):
    from .potential import PotentialField, make_cutoff
    p = cfg["potential"]
    return PotentialField(float(p["theta"]), p["variant"], make_cutoff(p["cutoff"]),
                          int(cfg["data"]["space_dims"]))


def horizon(cfg):
    from .states import default_horizon
    T = cfg["schedule"]["T"]
    d = cfg["data"]
    return float(T) if T is not None else default_horizon(float(d["X"]), float(d["K"]))


def make_schedule(cfg, T=None, eps=None, log_eps=None):
    from .states import build_schedule
    s = cfg["schedule"]
    if eps is None and log_eps is None:
        log_eps = s["log_eps"]
        eps = None if log_eps is not None else float(s["eps"])
    return build_schedule(float(cfg["potential"]["theta"]), eps=eps,
                          T=horizon(cfg) if T is None else T, C_margin=s["C_margin"],
                          log_eps=None if log_eps is None else float(log_eps))


def make_spec(cfg, sched):
    from .states import BumpProfile, InitialDataSpec
    d = cfg["data"]
    return InitialDataSpec(BumpProfile.make(d["kind"], int(d["space_dims"])), sched,
                           X=float(d["X"]), K=float(d["K"]), offset=float(d["offset"]),
                           k1=float(d["k1"]), delta_x=d["delta_x"], delta_k=d["delta_k"])


def _nodes(v):
    return tuple(int(a) for a in v) if isinstance(v, (list, tuple)) else int(v)


# ---------------------------------------------------------------------------
# subcommands

def cmd_potential(cfg, args, out):
    from .potential import derivative_sup, tabulate
    V = make_potential(cfg)
    s = np.linspace(-1.5, 1.5, 61)
    tab = tabulate(V, s, s if V.space_dims == 2 else None)
    rows = [dict(zip(("x1", "x2", "V", "dV_dx1", "dV_dx2"), r)) for r in tab]
    region = V.support_box()
    sups = []
    for order in range(4):
        for strip in (0.0, 0.05):
            r = derivative_sup(V, order, region, strip)
            sups.append({"order": order, "strip": strip, "sup": r.value,
                         "distributional_atom": r.distributional_atom})
    return [write_csv(os.path.join(out, "potential.csv"), rows),
            write_csv(os.path.join(out, "derivative_sups.csv"), sups)]


def cmd_calibrate(cfg, args, out):
    sched = make_schedule(cfg)
    row = sched.describe()
    print(" ".join(f"{k}={_fmt(v)}" for k, v in row.items()))
    return [write_csv(os.path.join(out, "calibrate.csv"), [row])]


def _phis(cfg, spec, V, T):
    from .experiments import default_test_functions
    return default_test_functions(spec, V, T)


def cmd_evolve_quantum(cfg, args, out):
    from .experiments import SNAPSHOT_FRACTIONS, atom_grid
    from .quantum import QuantumRun, default_dt, evolve_mixed
    from .states import toeplitz_quadrature, toeplitz_sample
    V = make_potential(cfg)
    T = horizon(cfg)
    spec = make_spec(cfg, make_schedule(cfg, T))
    q = cfg["quantum"]
    if q["sampling"] == "quadrature":
        state = toeplitz_quadrature(spec, spec.eps, _nodes(q["nodes"]))
    else:
        state = toeplitz_sample(spec, spec.eps, int(q["n_atoms"]), args.seed, q["sampling"])
    sgrid, _ = atom_grid(state, V, T)
    snaps = [f * T for f in SNAPSHOT_FRACTIONS]
    dt = default_dt(spec.eps, T, len(snaps) - 1) if q["dt"] is None else float(q["dt"])
    phis = _phis(cfg, spec, V, T)
    res = evolve_mixed(state, V, QuantumRun(V, dt, T, snaps, args.workers), phis.sample(sgrid),
                       sgrid, batch=int(q["batch"]))
    rows = [{"t": t, "phi_id": lab, "pairing": res["pairings"][i, j], "trace": res["trace"][i]}
            for i, t in enumerate(snaps) for j, lab in enumerate(phis.labels)]
    return [write_csv(os.path.join(out, "evolve_quantum.csv"), rows)]


def cmd_evolve_classical(cfg, args, out):
    from .classical import ParticleEnsemble, default_classical_dt, ensemble_pairings
    from .experiments import SNAPSHOT_FRACTIONS
    V = make_potential(cfg)
    T = horizon(cfg)
    spec = make_spec(cfg, make_schedule(cfg, T))
    c = cfg["classical"]
    dt = default_classical_dt(T) if c["dt"] is None else float(c["dt"])
    snaps = [f * T for f in SNAPSHOT_FRACTIONS]
    phis = _phis(cfg, spec, V, T)
    ens = ParticleEnsemble.from_spec(spec, _nodes(c["nodes"]))
    vals, _ = ensemble_pairings(ens, V, snaps, dt, list(phis))
    rows = [{"t": t, "phi_id": lab, "pairing": vals[i, j]}
            for i, t in enumerate(snaps) for j, lab in enumerate(phis.labels)]
    return [write_csv(os.path.join(out, "evolve_classical.csv"), rows)]


def cmd_trajectories(cfg, args, out):
    from .classical import eta_pair
    from .experiments import exit_time
    V = make_potential(cfg)
    d, e = cfg["data"], cfg["experiment"]
    X, K = float(d["X"]), float(d["K"])
    etas = tuple(e["eta_list"])
    T = float(cfg["schedule"]["T"]) if cfg["schedule"]["T"] is not None else exit_time(X, K, V, etas[-1])
    p = eta_pair(X, K, V, etas, T, cfg["classical"]["dt"] or None, record_every=10)
    rows = [dict(zip(("t", "x1", "x2", "k1", "k2", "eta"), r)) for tr in (p.plus, p.minus)
            for r in tr.rows()]
    summary = [{"X": X, "K": K, "T": T, "exit_angle": p.exit_angle, "mirror_error": p.mirror_error,
                "converged": p.converged, "increments": " ".join(repr(float(v)) for v in p.increments)}]
    return [write_csv(os.path.join(out, "trajectories.csv"), rows),
            write_csv(os.path.join(out, "trajectories_summary.csv"), summary)]


def cmd_compare(cfg, args, out):
    from .experiments import gap_sweep
    from .figures import gap_svg
    T = horizon(cfg)
    e = cfg["experiment"]
    eps_list = [float(v) for v in e["eps_list"]]
    template = make_spec(cfg, make_schedule(cfg, T, eps=eps_list[0]))
    reports, summary = gap_sweep(float(cfg["potential"]["theta"]), eps_list, template,
                                 _phis_callable(cfg, T), T, _nodes(cfg["quantum"]["nodes"]),
                                 variant=cfg["potential"]["variant"],
                                 batch=int(cfg["quantum"]["batch"]), workers=args.workers)
    rows = [r.row() for r in reports]
    srows = [{"t_fraction": k[0], "phi_id": k[1], "monotone": v["monotone"], "slope": v["slope"],
              "gaps": " ".join(repr(g) for g in v["gaps"])} for k, v in summary["rows"].items()]
    outs = [write_csv(os.path.join(out, "compare.csv"), rows),
            write_csv(os.path.join(out, "compare_summary.csv"), srows)]
    if cfg["output"]["svg"]:
        outs.append(gap_svg(summary, os.path.join(out, "compare.svg")))
    return outs


def _phis_callable(cfg, T):
    def make(spec, V):
        return _phis(cfg, spec, V, T)
    return make


def cmd_claim_table(cfg, args, out):
    from .experiments import claim_table
    e = cfg["experiment"]
    T = horizon(cfg)
    table = claim_table(float(cfg["potential"]["theta"]), e["log_eps_list"], T)
    return [write_csv(os.path.join(out, "claim_table.csv"), table.rows)]


def cmd_split(cfg, args, out):
    from .experiments import exit_horizon, split_masses
    V = make_potential(cfg)
    spec = make_spec(cfg, make_schedule(cfg, 1.0))
    T = float(cfg["schedule"]["T"]) if cfg["schedule"]["T"] is not None else exit_horizon(spec)
    q = cfg["quantum"]
    res = split_masses(spec, T, V, _nodes(cfg["classical"]["nodes"]), quantum=args.quantum,
                       quantum_nodes=_nodes(q["nodes"]),
                       dt=None if q["dt"] is None else float(q["dt"]),
                       batch=int(q["batch"]), workers=args.workers)
    if abs(res.c_plus + res.c_minus - 1.0) > 1e-10:
        raise NumericalAssertionError("classical side masses do not sum to 1")
    return [write_csv(os.path.join(out, "split.csv"), [res.row()])]


def cmd_figure1(cfg, args, out):
    from .experiments import figure1_gallery
    from .figures import figure1_svg
    e = cfg["experiment"]
    g = figure1_gallery(e["K_list"], float(cfg["data"]["X"]), float(cfg["potential"]["theta"]),
                        tuple(e["eta_list"]))
    outs = [write_csv(os.path.join(out, "figure1.csv"), g.rows())]
    if cfg["output"]["svg"]:
        outs.append(figure1_svg(g, os.path.join(out, "figure1.svg")))
    return outs


def cmd_two_limits(cfg, args, out):
    from .experiments import two_limits_demo
    from .figures import two_limits_svg
    e = cfg["experiment"]
    quantum = bool(e["quantum"]) and not args.no_quantum
    rep = two_limits_demo(float(e["C"]), e["m_list"], float(cfg["potential"]["theta"]),
                          float(cfg["data"]["X"]), float(cfg["data"]["K"]),
                          _nodes(cfg["classical"]["nodes"]), quantum=quantum,
                          quantum_nodes=_nodes(cfg["quantum"]["nodes"]), workers=args.workers)
    outs = [write_csv(os.path.join(out, "two_limits.csv"), rep.rows)]
    if cfg["output"]["svg"]:
        outs.append(two_limits_svg(rep, os.path.join(out, "two_limits.svg")))
    return outs


def cmd_shadow(cfg, args, out):
    from .classical import default_zeta, shadow_mass
    V = make_potential(cfg)
    e = cfg["experiment"]
    rows = []
    for le in e["log_eps_list"]:
        sched = make_schedule(cfg, log_eps=float(le))
        spec = make_spec(cfg, sched)
        zeta = default_zeta(le) if e["zeta"] is None else float(e["zeta"])
        m = shadow_mass(V, zeta, sched.T, spec, samples=int(e["samples"]),
                        nodes=_nodes(cfg["classical"]["nodes"]))
        rows.append({"log_eps": float(le), "zeta": zeta, "T": sched.T, "shadow_mass": m})
    return [write_csv(os.path.join(out, "shadow.csv"), rows)]


def cmd_selftest(cfg, args, out):
    from .selftest import run_all
    results = run_all()
    for r in results:
        print(f"{'PASS' if r['ok'] else 'FAIL'} {r['name']}: {r['detail']}")
    path = write_csv(os.path.join(out, "selftest.csv"), results)
    if not all(r["ok"] for r in results):
        raise NumericalAssertionError("selftest failures")
    return [path]


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        out = _out_dir(args, cfg)
        t0 = time.perf_counter()
        outputs = HANDLERS[args.command](cfg, args, out)
        manifest = write_manifest(out, args.command, cfg, args, outputs,
                                  {"seconds": round(time.perf_counter() - t0, 3)})
        print(f"wrote {', '.join(os.path.basename(p) for p in outputs)} and "
              f"{os.path.basename(manifest)} to {out}")
        return 0
    except NumericalAssertionError as exc:
        print(f"wlab: numerical assertion failed: {exc}", file=sys.stderr)
        return 2
    except (WlabError, ValueError) as exc:
        print(f"wlab: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
