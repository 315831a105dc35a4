"""Batch command-line front end.

One subcommand per experiment family. Every run writes the result CSV/JSON
plus a manifest recording the resolved configuration; `volarray rerun
<manifest>` reproduces the CSV outputs byte-for-byte. Runs are
single-threaded and deterministic given the seed. Plots (SVG) are optional
artifacts; the CSV files are the contract.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .beamform import hpbw, sidelobe_level, steered_cut_pattern
from .channel3gpp import UmaScenario, LosModel, uma_capacity_experiment
from .clarke import DensifyAxis, sweep_linear, sweep_planar
from .elements import ElementResponse
from .errors import InvalidArgumentError, MeasurementError, ParseError, VolarrayError
from .geometry import Layout, effective_aperture, make_linear_staggered, make_planar
from .clarke import planar_family_geometry
from .io import default_scenario_config, parse_scenario, parse_touchstone, results_to_csv, results_to_json
from .kronecker import CouplingData, analytic_dipole_bank, kronecker_sweep, efficiency_vector
from .mu_mimo import DropDistribution

_TABLE_STEERS = (0.0, 30.0, 45.0, 60.0)


def _standard_arrays() -> dict:
    """The four fixed-aperture beamforming test arrays (spacing-defined grids)."""
    def spaced(nx, ny, dx, dy, mode, h=0.0):
        lx, ly = dx * (nx - 1), dy * (ny - 1)
        return planar_family_geometry(mode, lx, ly, nx, ny, h)

    return {
        "1": spaced(6, 6, 0.5, 0.5, Layout.PLANAR),
        "2": spaced(10, 6, 0.3, 0.5, Layout.PLANAR),
        "3": spaced(10, 6, 0.3, 0.5, Layout.CASE1, 1.0),
        "4": spaced(10, 6, 0.3, 0.5, Layout.CASE2, 1.0),
    }


def _parse_n_range(text: str) -> list[int]:
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise InvalidArgumentError(f"--n-range expects LO:HI, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise InvalidArgumentError("--n-range requires 2 <= LO <= HI")
    return list(range(lo, hi + 1))


def _element_response(name: str) -> ElementResponse:
    table = {
        "iso": ElementResponse.isotropic(),
        "cos": ElementResponse.cosine(),
        "3gpp": ElementResponse.std3gpp(),
    }
    try:
        return table[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown element {name!r}") from None


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _plot_sweep(reports, path: Path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    ns = [r.sweep_n for r in reports]
    axes[0].plot(ns, [r.edof for r in reports], "o-")
    axes[0].set_xlabel("n")
    axes[0].set_ylabel("EDOF")
    axes[1].errorbar(ns, [r.capacity for r in reports], yerr=[r.ci95 for r in reports], fmt="o-")
    axes[1].set_xlabel("n")
    axes[1].set_ylabel("capacity [bits/s/Hz]")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_cut(pattern, path: Path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(pattern.cut_angle_deg, pattern.gain_db)
    ax.set_xlabel("cut angle [deg]")
    ax.set_ylabel("gain [dB]")
    ax.set_ylim(-40, 1)
    ax.grid(alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _manifest(out_dir: Path, subcommand: str, resolved: dict, seed: int,
              outputs: list[Path], t0: float) -> Path:
    payload = {
        "tool": "volarray",
        "version": __version__,
        "subcommand": subcommand,
        "resolved": resolved,
        "seed": seed,
        "outputs": [p.name for p in outputs],
        "wall_time_s": round(time.time() - t0, 3),
    }
    return _write(out_dir / f"{subcommand}_manifest.json",
                  json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _merge_config(args, key_map: dict):
    """Fill unset flags from --config (flags take precedence over the file)."""
    cfg = default_scenario_config()
    if getattr(args, "config", None):
        cfg = parse_scenario(Path(args.config).read_text())
    for attr, cfg_key in key_map.items():
        if getattr(args, attr, None) is None:
            setattr(args, attr, cfg[cfg_key])
    return args


# --- subcommands ------------------------------------------------------------------


def cmd_clarke(args) -> int:
    _merge_config(args, {
        "geometry": "geometry.layout", "aperture": "geometry.lx", "offset": "geometry.offset",
        "snr": "channel.snr_db", "trials": "sweep.trials", "seed": "sweep.seed",
    })
    n_values = _parse_n_range(args.n_range) if args.n_range else None
    t0 = time.time()
    n_t = args.n_t if args.n_t else None
    if args.geometry == "linear":
        reports = sweep_linear(args.aperture, args.offset,
                               n_values or list(range(2, 14)),
                               args.snr, args.trials, args.seed, n_t)
    else:
        reports = sweep_planar(Layout(args.geometry),
                               DensifyAxis.XY if args.densify == "xy" else DensifyAxis.X_ONLY,
                               (args.aperture, args.aperture), args.offset,
                               n_values or list(range(2, 12)),
                               args.snr, args.trials, args.seed, n_t)
    out = Path(args.out)
    label = f"clarke_{args.geometry}"
    outputs = [
        _write(out / f"{label}.csv", results_to_csv(reports)),
        _write(out / f"{label}.json", results_to_json(reports)),
    ]
    if args.plot:
        p = out / f"{label}.svg"
        _plot_sweep(reports, p, label)
        outputs.append(p)
    _manifest(out, "clarke", _resolved_from(args, (
        "geometry", "aperture", "offset", "snr", "n_range", "trials", "seed",
        "densify", "n_t", "plot")), args.seed, outputs, t0)
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return 0


def cmd_kronecker(args) -> int:
    _merge_config(args, {
        "geometry": "geometry.layout", "aperture": "geometry.lx", "offset": "geometry.offset",
        "snr": "channel.snr_db", "trials": "sweep.trials", "seed": "sweep.seed",
    })
    if args.geometry == "linear":
        raise InvalidArgumentError("kronecker sweeps use planar-family layouts")
    coupling = None
    if args.coupling != "analytic":
        if not args.coupling.startswith("file:"):
            raise InvalidArgumentError("--coupling expects 'analytic' or 'file:<path.sNp>'")
        path = Path(args.coupling[5:])
        if not path.exists():
            raise InvalidArgumentError(f"coupling file not found: {path}")
        n_ports = _ports_from_suffix(path)
        doc = parse_touchstone(path.read_text(), n_ports)
        smat = doc.scattering_matrix(0)
        g_probe = planar_family_geometry(Layout(args.geometry),
                                         args.aperture, args.aperture,
                                         _parse_n_range(args.n_range)[0] if args.n_range else 2,
                                         int(round(args.aperture / 0.5)) + 1, args.offset)
        del g_probe  # port count is checked per sweep point
        bank = analytic_dipole_bank  # patterns still analytic; efficiencies from file
        coupling = ("file", smat)
    t0 = time.time()
    n_values = _parse_n_range(args.n_range) if args.n_range else list(range(2, 12))
    n_t = args.n_t if args.n_t else None
    if coupling is None:
        reports = kronecker_sweep(Layout(args.geometry),
                                  DensifyAxis.XY if args.densify == "xy" else DensifyAxis.X_ONLY,
                                  (args.aperture, args.aperture), args.offset,
                                  n_values, args.snr, args.trials, args.seed, n_t)
    else:
        reports = _kronecker_file_sweep(args, coupling[1], n_values, n_t)
    out = Path(args.out)
    label = f"kronecker_{args.geometry}"
    outputs = [
        _write(out / f"{label}.csv", results_to_csv(reports)),
        _write(out / f"{label}.json", results_to_json(reports)),
    ]
    if args.plot:
        p = out / f"{label}.svg"
        _plot_sweep(reports, p, label)
        outputs.append(p)
    _manifest(out, "kronecker", _resolved_from(args, (
        "geometry", "aperture", "offset", "snr", "n_range", "trials", "seed",
        "densify", "coupling", "n_t", "plot")), args.seed, outputs, t0)
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return 0


def _ports_from_suffix(path: Path) -> int:
    suffix = path.suffix.lower()
    if suffix.startswith(".s") and suffix.endswith("p") and suffix[2:-1].isdigit():
        return int(suffix[2:-1])
    raise InvalidArgumentError(f"cannot infer port count from {path.name!r}")


def _kronecker_file_sweep(args, smat, n_values, n_t):
    """Fixed S-matrix efficiencies with the closed-form isotropic correlation."""
    from .clarke import clarke_correlation_closed_form
    from .kronecker import covariance, efficiency_matrix
    from .metrics import edof, kronecker_capacity

    reports = []
    ny = int(round(args.aperture / 0.5)) + 1
    n_t_eff = n_t or max(n_values) * ny
    for idx, n in enumerate(n_values):
        g = planar_family_geometry(Layout(args.geometry), args.aperture, args.aperture,
                                   n, ny, args.offset)
        if smat.ports != g.n_elements:
            raise InvalidArgumentError(
                f"S-matrix has {smat.ports} ports but sweep point n={n} "
                f"has {g.n_elements} elements"
            )
        e = efficiency_vector(smat)
        r = covariance(clarke_correlation_closed_form(g), efficiency_matrix(e))
        rep = kronecker_capacity(r, n_t_eff, args.snr, args.trials, args.seed + idx)
        reports.append(rep.with_(sweep_n=n, n_elements=g.n_elements, edof=edof(r),
                                 seed=args.seed, avg_efficiency=float(e.mean())))
    return reports


def cmd_uma(args) -> int:
    _merge_config(args, {
        "users": "channel.n_users", "drops": "sweep.drops", "seed": "sweep.seed",
        "snr": "channel.snr_db",
    })
    t0 = time.time()
    mode = DropDistribution.DISC_2D if args.user_mode == "2d" else DropDistribution.VOLUME_3D
    scenario = UmaScenario(n_users=args.users, snr_db=args.snr, user_mode=mode,
                           seed=args.seed)
    lx = ly = args.aperture
    nx = int(round(lx / args.spacing_x)) + 1
    ny = int(round(ly / 0.5)) + 1
    geoms = {
        "planar": planar_family_geometry(Layout.PLANAR, lx, ly, nx, ny, args.offset),
        "case1": planar_family_geometry(Layout.CASE1, lx, ly, nx, ny, args.offset),
        "case2": planar_family_geometry(Layout.CASE2, lx, ly, nx, ny, args.offset),
    }
    if args.element == "imported":
        elem = {
            name: ElementResponse.isotropic(
                efficiency_weights=efficiency_vector(analytic_dipole_bank(g).smatrix)
            )
            for name, g in geoms.items()
        }
    else:
        elem = _element_response(args.element)
    results = uma_capacity_experiment(scenario, geoms, elem, args.drops, args.seed)
    reports = [results[k] for k in ("planar", "case1", "case2")]
    out = Path(args.out)
    outputs = [
        _write(out / "uma.csv", results_to_csv(reports)),
        _write(out / "uma.json", results_to_json(
            reports, extra={"geometries": list(geoms), "user_mode": args.user_mode})),
    ]
    base = results["planar"].capacity
    for name in ("planar", "case1", "case2"):
        r = results[name]
        gain = (r.capacity / base - 1.0) * 100.0
        print(f"{name:7s} capacity {r.capacity:9.2f} bits/s/Hz  gain {gain:+6.2f}%")
    _manifest(out, "uma", _resolved_from(args, (
        "users", "user_mode", "element", "drops", "seed", "snr", "spacing_x",
        "aperture", "offset")), args.seed, outputs, t0)
    return 0


def cmd_beam(args) -> int:
    t0 = time.time()
    arrays = _standard_arrays()
    elem = _element_response(args.element)
    out = Path(args.out)
    outputs = []
    if args.table:
        rows = ["array,steer_theta_deg,hpbw_deg,sll_db"]
        for name, g in arrays.items():
            for steer in _TABLE_STEERS:
                pat = steered_cut_pattern(g, steer, 0.0, elem,
                                          reflector_image=args.reflector_image)
                try:
                    width = f"{hpbw(pat):.17g}"
                except MeasurementError:
                    width = "nan"
                try:
                    lobe = f"{sidelobe_level(pat):.17g}"
                except MeasurementError:
                    lobe = "nan"
                rows.append(f"{name},{steer:g},{width},{lobe}")
        outputs.append(_write(out / "beam_table.csv", "\n".join(rows) + "\n"))
        print("\n".join(rows))
    else:
        theta0, phi0 = (float(v) for v in args.steer.split(","))
        g = arrays[args.array]
        pat = steered_cut_pattern(g, theta0, phi0, elem,
                                  reflector_image=args.reflector_image)
        rows = ["cut_angle_deg,gain_db"] + [
            f"{a:.17g},{v:.17g}" for a, v in zip(pat.cut_angle_deg, pat.gain_db)
        ]
        outputs.append(_write(out / f"beam_array{args.array}.csv", "\n".join(rows) + "\n"))
        if args.plot:
            p = out / f"beam_array{args.array}.svg"
            _plot_cut(pat, p, f"array {args.array}, steer {args.steer}")
            outputs.append(p)
        print(f"peak at {pat.cut_angle_deg[np.argmax(pat.gain_db)]:.2f} deg; "
              f"hpbw {hpbw(pat):.2f} deg")
    _manifest(out, "beam", _resolved_from(args, (
        "array", "steer", "element", "table", "reflector_image", "plot")),
        args.seed or 0, outputs, t0)
    return 0


def cmd_aperture(args) -> int:
    t0 = time.time()
    if args.geometry == "linear":
        g = make_linear_staggered(args.aperture, args.n, args.offset)
    else:
        g = planar_family_geometry(Layout(args.geometry), args.aperture, args.aperture,
                                   args.n, args.n_y, args.offset)
    stats = effective_aperture(g, args.order)
    payload = {
        "layout": args.geometry,
        "n_elements": g.n_elements,
        "a_eff_lambda2": stats.a_eff,
        "l_eff_lambda": stats.l_eff,
        "dof_estimate": stats.dof_estimate,
        "quadrature_order": args.order,
    }
    out = Path(args.out)
    outputs = [_write(out / "aperture.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")]
    print(f"{args.geometry}: a_eff = {stats.a_eff:.4f} lambda^2, "
          f"l_eff = {stats.l_eff:.4f} lambda, dof ~ {stats.dof_estimate:.3f}")
    _manifest(out, "aperture", _resolved_from(args, (
        "geometry", "aperture", "offset", "n", "n_y", "order")), 0, outputs, t0)
    return 0


def cmd_rerun(args) -> int:
    path = Path(args.manifest)
    if not path.exists():
        raise InvalidArgumentError(f"manifest not found: {path}")
    payload = json.loads(path.read_text())
    sub = payload["subcommand"]
    resolved = dict(payload["resolved"])
    if args.out:
        resolved["out"] = args.out
    else:
        resolved.setdefault("out", str(path.parent))
    ns = argparse.Namespace(**resolved)
    ns.config = None
    handler = {"clarke": cmd_clarke, "kronecker": cmd_kronecker, "uma": cmd_uma,
               "beam": cmd_beam, "aperture": cmd_aperture}[sub]
    return handler(ns)


def _resolved_from(args, keys) -> dict:
    resolved = {k: getattr(args, k) for k in keys}
    resolved["out"] = str(args.out)
    return resolved


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volarray",
        description="Volumetric antenna-array EDOF / capacity / beamforming experiments",
    )
    parser.add_argument("--version", action="version", version=f"volarray {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, default_out=True):
        p.add_argument("--out", default=os.environ.get("VOLARRAY_OUT", "."),
                       help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="scenario config file")
        p.add_argument("--plot", action="store_true")
        p.add_argument("--deterministic", action="store_true",
                       help="accepted for compatibility; runs are always deterministic")

    p = sub.add_parser("clarke", help="isotropic-scattering EDOF/capacity sweeps")
    common(p)
    p.add_argument("--geometry", choices=("linear", "planar", "case1", "case2"),
                   default=None)
    p.add_argument("--aperture", type=float, default=None, help="aperture side / line length")
    p.add_argument("--offset", type=float, default=None, help="elevation offset h")
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--n-range", dest="n_range", default=None, help="LO:HI sweep range")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--densify", choices=("x", "xy"), default="x")
    p.add_argument("--n-t", dest="n_t", type=int, default=0,
                   help="far-end antenna count (0 = automatic)")
    p.set_defaults(func=cmd_clarke)

    p = sub.add_parser("kronecker", help="coupling-aware covariance sweeps")
    common(p)
    p.add_argument("--geometry", choices=("planar", "case1", "case2"), default=None)
    p.add_argument("--aperture", type=float, default=None)
    p.add_argument("--offset", type=float, default=None)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--n-range", dest="n_range", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--densify", choices=("x", "xy"), default="x")
    p.add_argument("--coupling", default="analytic", help="'analytic' or 'file:<path.sNp>'")
    p.add_argument("--n-t", dest="n_t", type=int, default=0)
    p.set_defaults(func=cmd_kronecker)

    p = sub.add_parser("uma", help="urban-macro multiuser capacity comparison")
    common(p)
    p.add_argument("--users", type=int, default=None)
    p.add_argument("--user-mode", dest="user_mode", choices=("2d", "3d"), default="2d")
    p.add_argument("--element", choices=("iso", "3gpp", "imported"), default="iso")
    p.add_argument("--drops", type=int, default=None)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--spacing-x", dest="spacing_x", type=float, default=0.3)
    p.add_argument("--aperture", type=float, default=3.0)
    p.add_argument("--offset", type=float, default=1.0)
    p.set_defaults(func=cmd_uma)

    p = sub.add_parser("beam", help="steered pattern cuts and beamwidth tables")
    common(p)
    p.add_argument("--array", choices=("1", "2", "3", "4"), default="1")
    p.add_argument("--steer", default="0,0", help="theta,phi in degrees")
    p.add_argument("--element", choices=("iso", "cos", "3gpp"), default="iso")
    p.add_argument("--table", action="store_true", help="full 4-array x 4-angle table")
    p.add_argument("--reflector-image", dest="reflector_image", action="store_true",
                   help="include the reflector image term for raised elements")
    p.set_defaults(func=cmd_beam)

    p = sub.add_parser("aperture", help="effective aperture / DOF report")
    common(p)
    p.add_argument("--geometry", choices=("linear", "planar", "case1", "case2"),
                   default="planar")
    p.add_argument("--aperture", type=float, default=3.0)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--n-y", dest="n_y", type=int, default=7)
    p.add_argument("--order", type=int, default=256)
    p.set_defaults(func=cmd_aperture)

    p = sub.add_parser("rerun", help="reproduce a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.subcommand != "rerun":
        args.seed = None  # resolved from config by each handler
    try:
        return args.func(args)
    except (InvalidArgumentError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VolarrayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
