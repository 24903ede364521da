"""Command-line front end.

Every subcommand validates its arguments before doing any work, writes its
outputs into ``--out-dir`` and adds a JSON sidecar ``<file>.json`` with the
resolved configuration and package version. Exit codes: 0 success,
2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, atlas, bifurcation, normal_form, reproduce
from .errors import DelayFhNError, InvalidConfig
from .model import FastParams, SystemParams
from .network import NetworkConfig, simulate_network
from .solver import SolverConfig, integrate
from .spectrum import fast_roots, fast_stability, full_rightmost_root, roots_to_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# argument types


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (stop included within half a step) or a single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if len(vals) == 1:
        return vals
    if len(vals) != 3 or not vals[2] > 0 or vals[1] < vals[0]:
        raise argparse.ArgumentTypeError(f"range must be start:stop:step with step > 0: {text!r}")
    start, stop, step = vals
    n = int(math.floor((stop - start) / step + 0.5))
    return [round(start + i * step, 12) for i in range(n + 1)]


def parse_k_range(text: str) -> list[int]:
    """``lo..hi`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"k range must satisfy 0 <= lo <= hi: {text!r}")
    return list(range(lo, hi + 1))


def parse_pair(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y: {text!r}") from None
    return x, y


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


# ---------------------------------------------------------------------------
# parser


def _system_args(p: argparse.ArgumentParser, tau: float = 0.4, a: float = 1.01,
                 eps: float = 0.05) -> None:
    p.add_argument("--J", type=float, default=2.0, help="delayed self-coupling")
    p.add_argument("--eps", type=float, default=eps, help="timescale ratio")
    p.add_argument("--a", type=float, default=a, help="input current")
    p.add_argument("--tau", type=float, default=tau, help="delay")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--b", type=float, default=-1.0)


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=float, default=None, help="final time")
    p.add_argument("--T-discard", dest="T_discard", type=float, default=None)
    p.add_argument("--h-max", dest="h_max", type=float, default=None)
    p.add_argument("--history", type=parse_pair, default=(0.0, 0.0), help="constant x,y")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delayfhn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out-dir", default="out", help="output directory")
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        sp.add_argument("--print-defaults", action="store_true",
                        help="print the resolved configuration and exit")
        return sp

    sp = add("simulate", "integrate the full system, or the fast one with --fast-y")
    _system_args(sp)
    _solver_args(sp)
    sp.add_argument("--fast-y", dest="fast_y", type=float, default=None)

    sp = add("stability", "characteristic roots and stability verdict")
    _system_args(sp)
    sp.add_argument("--fast-x", dest="fast_x", type=float, default=None,
                    help="analyze the fast equilibrium x* instead")

    sp = add("hopf-curves", "full-system and fast Hopf curves")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--k", type=parse_k_range, default=[0])
    sp.add_argument("--n", type=int, default=256)

    sp = add("fast-diagram", "fast Hopf curve, folds, BT points and homoclinic estimate")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--k", type=parse_k_range, default=[0])
    sp.add_argument("--n", type=int, default=256)

    sp = add("lyapunov", "first Lyapunov coefficient on a Hopf branch")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--a", type=float, default=None, help="full system: input on tau_1^k")
    sp.add_argument("--y", type=float, default=None, help="fast system: frozen y")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--branch", default=None)

    sp = add("bautin", "sign change of the Lyapunov coefficient along tau_1^0")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--tol", type=float, default=1e-4)

    sp = add("atlas", "regime classification over a parameter grid")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--a", type=parse_range, default=[1.01])
    sp.add_argument("--tau", type=parse_range, default=[0.4])
    sp.add_argument("--window", type=float, default=None)
    sp.add_argument("--history", type=parse_pair, default=(0.0, 0.0))
    sp.add_argument("--workers", type=int, default=1)

    sp = add("portrait", "fast-system (x(t-tau), x(t)) curves")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--y", type=float, default=0.0)
    sp.add_argument("--histories", type=parse_floats, default=[3.0])
    sp.add_argument("--saddle", action="store_true", help="add the saddle unstable branches")
    sp.add_argument("--T", type=float, default=None)

    sp = add("poincare", "delayed values at upward crossings of y = level")
    _system_args(sp, tau=0.7)
    _solver_args(sp)
    sp.add_argument("--level", type=float, default=-0.4)

    sp = add("average-manifold", "critical manifold plus fast-cycle averages")
    sp.add_argument("--J", type=float, default=2.0)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--y", type=parse_range, default=parse_range("-2:2:0.05"))
    sp.add_argument("--predict-a", dest="predict_a", type=float, default=None)

    sp = add("network", "noisy N-unit network")
    _system_args(sp)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T", type=float, default=100.0)
    sp.add_argument("--h-max", dest="h_max", type=float, default=1e-3)
    sp.add_argument("--history", type=parse_pair, default=(0.0, 0.0))
    sp.add_argument("--stride", type=int, default=10)

    sp = add("reproduce", "desk-scale figure reproduction with pass/fail table")
    sp.add_argument("figure", choices=sorted(reproduce.FIGURES))
    return ap


_META_KEYS = {"out_dir", "config", "print_defaults", "command"}


def _config_defaults(sub: argparse.ArgumentParser, path: str) -> dict:
    """Parse a ``key=value`` file into typed defaults of one subparser."""
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help",)}
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        act = actions.get(dest) or actions.get(key)
        if act is None or act.dest in _META_KEYS:
            raise InvalidConfig(f"{path}:{n}: unknown key {key!r}")
        if isinstance(act, argparse._StoreTrueAction):
            out[act.dest] = val.lower() in ("1", "true", "yes", "on")
            continue
        try:
            out[act.dest] = act.type(val) if act.type else val
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise InvalidConfig(f"{path}:{n}: {exc}") from None
    return out


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for act in ap._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _settings(args: argparse.Namespace) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items())
            if k not in ("config", "print_defaults")}


def _sidecar(path: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    meta = {"command": args.command, "settings": _settings(args), "version": __version__,
            "file": path.name}
    if extra:
        meta["result"] = _jsonable(extra)
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _emit_plot_script(path: Path, csv_name: str, xcol: str, ycol: str, title: str) -> None:
    """Standalone matplotlib script that reads ``csv_name`` next to it."""
    path.write_text(
        "import csv\nimport matplotlib.pyplot as plt\n\n"
        f"rows = list(csv.DictReader(open({csv_name!r})))\n"
        f"x = [float(r[{xcol!r}]) for r in rows]\n"
        f"y = [float(r[{ycol!r}]) for r in rows]\n"
        "plt.plot(x, y, lw=0.6)\n"
        f"plt.xlabel({xcol!r})\nplt.ylabel({ycol!r})\nplt.title({title!r})\n"
        f"plt.savefig({csv_name.rsplit('.', 1)[0] + '.png'!r}, dpi=150)\n")


# ---------------------------------------------------------------------------
# commands


def _sys_params(a) -> SystemParams:
    return SystemParams(a.J, a.a, a.eps, a.tau, a.gamma, a.b)


def _solver_cfg(a, p) -> SolverConfig:
    from .solver import default_t_discard
    t_disc = a.T_discard if a.T_discard is not None else default_t_discard(p)
    T = a.T if a.T is not None else t_disc + 200.0
    hist = a.history if isinstance(p, SystemParams) else a.history[0]
    return SolverConfig(T=T, h_max=a.h_max, T_discard=t_disc, history=hist)


def cmd_simulate(a, out: Path) -> None:
    p = FastParams(a.J, a.tau, a.fast_y) if a.fast_y is not None else _sys_params(a)
    tr = integrate(p, _solver_cfg(a, p))
    f = out / "trajectory.csv"
    tr.to_csv(f, tr.t_discard)
    _sidecar(f, a, {"h": tr.h, "steps_per_delay": tr.m})
    _emit_plot_script(out / "plot_trajectory.py", f.name, "t", "x", "x(t)")
    print(f"wrote {f} ({tr.x.size - tr.m} nodes, h={tr.h:.6g})")


def cmd_stability(a, out: Path) -> None:
    if a.fast_x is not None:
        roots = fast_roots(a.fast_x, a.J, a.tau)
        rep = fast_stability(a.fast_x, a.J, a.tau)
    else:
        rep = full_rightmost_root(a.a, a.J, a.tau, a.eps)
        roots = rep.roots_found
    f = out / "roots.csv"
    roots_to_csv(roots, f)
    res = {"verdict": rep.verdict, "rightmost_real_part": rep.rightmost_real_part}
    _sidecar(f, a, res)
    print(json.dumps(res, sort_keys=True))


def cmd_hopf_curves(a, out: Path) -> None:
    curves = []
    for k in a.k:
        curves.extend(bifurcation.full_hopf_curves(a.J, a.eps, k, a.n))
        curves.append(bifurcation.fast_hopf_curve(a.J, k, a.n))
    f = out / "hopf_curves.csv"
    bifurcation.curves_to_csv(curves, f, {"J": a.J, "epsilon": a.eps})
    _sidecar(f, a)
    print(f"wrote {f} ({len(curves)} curves)")


def cmd_fast_diagram(a, out: Path) -> None:
    curves = list(bifurcation.saddle_node_lines())
    for k in a.k:
        curves.append(bifurcation.fast_hopf_curve(a.J, k, a.n, upper=True))
        curves.append(bifurcation.fast_hopf_curve(a.J, k, a.n, upper=False))
    nus = np.linspace(0.0, 0.3, 31)
    rows = [(nu, (1 + nu) / a.J, bifurcation.bt_homoclinic_leading(a.J, (1 + nu) / a.J))
            for nu in nus]
    curves.append(bifurcation.BifurcationCurve("HomoclinicLeading", None, np.array(rows)))
    f = out / "fast_diagram.csv"
    bifurcation.curves_to_csv(curves, f, {"J": a.J})
    _sidecar(f, a, {"bt_points": bifurcation.bt_points(a.J)})
    print(f"wrote {f}")


def cmd_lyapunov(a, out: Path) -> None:
    if (a.a is None) == (a.y is None):
        raise InvalidConfig("give exactly one of --a (full system) or --y (fast system)")
    if a.a is not None:
        r = normal_form.lyap1_full(a.J, a.eps, a.a, a.k, a.branch or "tau1")
    else:
        r = normal_form.lyap1_fast(a.J, a.y, a.k, a.branch)
    res = {"ell1": r.ell1, "criticality": r.criticality, "omega": r.omega, "tau": r.tau,
           "convergence_delta": r.convergence_delta, "ell1_projection": r.ell1_projection}
    f = out / "lyapunov.json"
    f.write_text(json.dumps(_jsonable(res), indent=2, sort_keys=True) + "\n")
    _sidecar(f, a)
    print(json.dumps(_jsonable(res), sort_keys=True))


def cmd_bautin(a, out: Path) -> None:
    t = bifurcation.bautin_locate(a.J, a.eps, a.tol)
    f = out / "bautin.json"
    f.write_text(json.dumps({"tau_bautin": t}) + "\n")
    _sidecar(f, a)
    print(f"tau_bautin = {t:.6f}")


def cmd_atlas(a, out: Path) -> None:
    pts = [SystemParams(a.J, av, a.eps, tv) for av in a.a for tv in a.tau]
    rows = atlas.sweep(pts, a.workers, a.window, a.history)
    f = out / "atlas.csv"
    atlas.atlas_to_csv(rows, f)
    _sidecar(f, a)
    for r in rows:
        print(f"a={r['a']:<8g} tau={r['tau']:<8g} {r['label']}")


def cmd_portrait(a, out: Path) -> None:
    fp = FastParams(a.J, a.tau, a.y)
    hists: list = list(a.histories)
    if a.saddle:
        hists.extend(atlas.saddle_histories(fp)[1])
    curves = atlas.portrait(fp, hists, T=a.T)
    f = out / "portrait.csv"
    with open(f, "w") as fh:
        fh.write("curve,x_delayed,x\n")
        for i, c in enumerate(curves):
            for xd, x in c:
                fh.write(f"{i},{xd:.17g},{x:.17g}\n")
    _sidecar(f, a)
    _emit_plot_script(out / "plot_portrait.py", f.name, "x_delayed", "x", "portrait")
    print(f"wrote {f} ({len(curves)} curves)")


def cmd_poincare(a, out: Path) -> None:
    p = _sys_params(a)
    cfg = _solver_cfg(a, p)
    if a.T is None:
        cfg = atlas.classify_config(p, history=a.history)
    tr = integrate(p, cfg)
    seq = atlas.poincare_sequence(tr, a.level)
    f = out / "poincare.csv"
    np.savetxt(f, np.column_stack([np.arange(seq.size), seq]), delimiter=",",
               header="n,x_delayed", comments="", fmt=["%d", "%.17g"])
    per = atlas.poincare_period(seq, 1e-3 * float(np.ptp(tr.x[tr.segment()])), 32)
    _sidecar(f, a, {"returns": int(seq.size), "period": per})
    _emit_plot_script(out / "plot_poincare.py", f.name, "n", "x_delayed", "Poincare sequence")
    print(f"{seq.size} returns, period {per}")


def cmd_average_manifold(a, out: Path) -> None:
    aug = atlas.augmented_manifold(a.J, a.tau, a.y)
    rows = list(aug.rows())
    f = out / "average_manifold.csv"
    keys = list(rows[0])
    with open(f, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(r[k])) if not isinstance(r[k], bool) else str(int(r[k]))
                              for k in keys) + "\n")
    res = {}
    if a.predict_a is not None:
        res["prediction"] = atlas.predict_regime(aug, a.predict_a)
        print(f"a={a.predict_a}: {res['prediction']}")
    _sidecar(f, a, res)
    print(f"wrote {f}")


def cmd_network(a, out: Path) -> None:
    p = _sys_params(a)
    r = simulate_network(a.N, p, a.sigma, a.seed,
                         NetworkConfig(T=a.T, h_max=a.h_max, history=a.history,
                                       record_stride=a.stride))
    paths = r.to_csv(out / "network")
    _sidecar(out / "network" / "run.json", a)
    print(f"wrote {len(paths)} unit files to {out / 'network'}")


def cmd_reproduce(a, out: Path) -> None:
    checks = reproduce.run_figure(a.figure)
    for c in checks:
        print(c.line())
    f = out / f"reproduce_fig{a.figure}.json"
    f.write_text(json.dumps([{"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                             for c in checks], indent=2) + "\n")
    n_ok = sum(c.passed for c in checks)
    print(f"{n_ok}/{len(checks)} checks passed")


COMMANDS: dict[str, Callable] = {
    "simulate": cmd_simulate, "stability": cmd_stability, "hopf-curves": cmd_hopf_curves,
    "fast-diagram": cmd_fast_diagram, "lyapunov": cmd_lyapunov, "bautin": cmd_bautin,
    "atlas": cmd_atlas, "portrait": cmd_portrait, "poincare": cmd_poincare,
    "average-manifold": cmd_average_manifold, "network": cmd_network,
    "reproduce": cmd_reproduce,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; returns the process exit code."""
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = ap.parse_args(argv)
        if args.config:
            sub = _subparser(ap, args.command)
            sub.set_defaults(**_config_defaults(sub, args.config))
            args = ap.parse_args(argv)
        if args.print_defaults:
            for k, v in _settings(args).items():
                print(f"{k}={v}")
            return EXIT_OK
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    except ValueError as exc:  # InvalidInput, InvalidConfig, DomainError, ...
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, DelayFhNError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
