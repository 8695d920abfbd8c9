"""Command-line front end.

Subcommands: critpoints, euler-curve, volume, beta, entropy-scan,
scaling, coeffs, verify-decomposition. Jobs are configured by a JSON
file (--config), overridable by flags; unknown config keys are
rejected. Curve outputs are CSV, structured reports JSON, and every
report command renders a PNG figure next to its delimited output
unless --no-plot is given.

Exit codes: 0 success, 2 configuration error, 3 numerical/module
error, 1 unexpected failure. Errors are emitted as one JSON object on
stderr. Every output embeds the resolved-config hash and the seed; a
timestamp is the only non-reproducible field.

MORSETHERM_WORKERS sets the default worker count.
"""

import argparse
import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, decompose, measure, morse, neckgeom, thermo
from .errors import ConfigError
from .potentials import make_model

MODEL_KEYS = {"model", "N", "params", "dsl_source", "boundary", "box_halfwidth"}
COMMON_KEYS = {"seed", "workers", "out", "no_plot", "config"}

COMMAND_KEYS = {
    "critpoints": MODEL_KEYS | {"vmax", "starts"},
    "euler-curve": {"catalog", "vmin", "vmax", "steps"},
    "volume": MODEL_KEYS | {"v", "samples"},
    "beta": MODEL_KEYS | {"v", "samples", "grad_floor"},
    "entropy-scan": MODEL_KEYS | {"vbar_min", "vbar_max", "steps", "samples", "estimator", "catalog"},
    "scaling": MODEL_KEYS | {"N_list", "window", "steps", "samples", "estimator"},
    "coeffs": {"catalog", "N", "eps0", "r", "indexes", "b_steps"},
    "verify-decomposition": {"catalog", "v", "eps0_list", "r", "samples"},
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        cfg = resolve_config(args)
        runner = RUNNERS[args.command]
        runner(cfg)
        return 0
    except ConfigError as exc:
        _emit_error(exc)
        return 2
    except (ValueError, RuntimeError, ArithmeticError, KeyError, OSError) as exc:
        _emit_error(exc)
        return 3
    except Exception as exc:  # pragma: no cover
        _emit_error(exc)
        return 1


def _emit_error(exc):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="morsetherm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(p, model=False):
        p.add_argument("--config", help="JSON job configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory (default: out)")
        p.add_argument("--no-plot", action="store_true", default=None, dest="no_plot")
        if model:
            p.add_argument("--model", help="builtin kind or 'dsl'")
            p.add_argument("--N", type=int, default=None)
            p.add_argument("--params", help="JSON dict of model parameters")
            p.add_argument("--dsl-source", dest="dsl_source")
            p.add_argument("--boundary", choices=["periodic", "open"], default=None)
            p.add_argument("--box-halfwidth", dest="box_halfwidth", type=float, default=None)

    p = sub.add_parser("critpoints", help="find and classify critical points")
    common(p, model=True)
    p.add_argument("--vmax", type=float, default=None)
    p.add_argument("--starts", type=int, default=None)

    p = sub.add_parser("euler-curve", help="Euler characteristic along vbar")
    common(p)
    p.add_argument("--catalog", default=None)
    p.add_argument("--vmin", type=float, default=None)
    p.add_argument("--vmax", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("volume", help="sub-level volume estimate")
    common(p, model=True)
    p.add_argument("--v", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("beta", help="inverse configurational temperature")
    common(p, model=True)
    p.add_argument("--v", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--grad-floor", dest="grad_floor", type=float, default=None)

    p = sub.add_parser("entropy-scan", help="entropy curve with derivatives")
    common(p, model=True)
    p.add_argument("--vbar-min", dest="vbar_min", type=float, default=None)
    p.add_argument("--vbar-max", dest="vbar_max", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--estimator", choices=["auto", "hit_or_miss", "analytic"], default=None)
    p.add_argument("--catalog", default=None, help="catalog JSON for in-band flags")

    p = sub.add_parser("scaling", help="sup-norm scan over an N family")
    common(p, model=True)
    p.add_argument("--N-list", dest="N_list", default=None, help="comma-separated N values")
    p.add_argument("--window", default=None, help="vbar window lo,hi")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--estimator", choices=["auto", "hit_or_miss", "analytic"], default=None)

    p = sub.add_parser("coeffs", help="A/B coefficient tables")
    common(p)
    p.add_argument("--catalog", default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--indexes", default=None, help="comma-separated Morse indexes")
    p.add_argument("--b-steps", dest="b_steps", type=int, default=None)

    p = sub.add_parser("verify-decomposition", help="volume decomposition sweep")
    common(p)
    p.add_argument("--catalog", default=None)
    p.add_argument("--v", type=float, default=None)
    p.add_argument("--eps0-list", dest="eps0_list", default=None, help="comma-separated eps0 values")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)

    return parser


def resolve_config(args):
    """Merge config file and flags; validate keys; attach provenance."""
    command = args.command
    allowed = COMMAND_KEYS[command] | COMMON_KEYS
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        cfg[key] = val
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", "out")
    cfg.setdefault("no_plot", False)
    cfg["_command"] = command
    cfg["_hash"] = config_hash(cfg)
    return cfg


def config_hash(cfg):
    stable = {k: v for k, v in cfg.items() if not k.startswith("_")}
    blob = json.dumps(stable, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(cfg):
    return {
        "config_hash": cfg["_hash"],
        "seed": cfg.get("seed", 0),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required option(s): {missing}")


def _outdir(cfg):
    path = Path(cfg["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def build_model(cfg):
    _require(cfg, "model")
    kind = cfg["model"]
    params = dict(json.loads(cfg["params"])) if isinstance(cfg.get("params"), str) else dict(cfg.get("params") or {})
    if kind == "dsl":
        _require(cfg, "dsl_source", "N")
        for key in ("boundary", "box_halfwidth"):
            if cfg.get(key) is not None:
                params[key] = cfg[key]
        return make_model("dsl", cfg["N"], {"source": cfg["dsl_source"], "params": params.pop("params", {}), **params})
    if cfg.get("box_halfwidth") is not None and kind not in ("xy_chain", "xy_chain_1d"):
        params["box_halfwidth"] = cfg["box_halfwidth"]
    _require(cfg, "N")
    return make_model(kind, cfg["N"], params)


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def write_json(path, payload, cfg):
    payload = dict(payload)
    payload["provenance"] = provenance(cfg)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=_json_default)
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_csv(path, rows, fieldnames, cfg):
    prov = provenance(cfg)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash: {prov['config_hash']}\n")
        fh.write(f"# seed: {prov['seed']}\n")
        fh.write(f"# version: {prov['version']}\n")
        fh.write(f"# timestamp: {prov['timestamp']}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def _sampler(cfg, default_samples=200_000):
    return measure.SamplerConfig(
        n_samples=int(cfg.get("samples") or default_samples),
        seed=int(cfg.get("seed", 0)),
        worker_count=cfg.get("workers"),
        grad_floor=float(cfg.get("grad_floor") or 1e-8),
    )


# ---------------------------------------------------------------------------
# command runners
# ---------------------------------------------------------------------------


def run_critpoints(cfg):
    _require(cfg, "vmax")
    model = build_model(cfg)
    search = morse.SearchConfig(
        n_starts=cfg.get("starts"),
        seed=int(cfg.get("seed", 0)),
        worker_count=cfg.get("workers"),
    )
    catalog = morse.find_critical_points(model, float(cfg["vmax"]), search)
    out = _outdir(cfg)
    path = out / "catalog.json"
    write_json(path, morse.catalog_to_json(catalog), cfg)
    print(f"{len(catalog.points)} critical points on {len(catalog.critical_values)} levels -> {path}")
    if not cfg["no_plot"] and len(catalog.points):
        from . import plots

        print(f"figure -> {plots.plot_catalog(catalog, out / 'catalog.png')}")


def run_euler_curve(cfg):
    _require(cfg, "catalog", "vmin", "vmax", "steps")
    catalog = morse.load_catalog(cfg["catalog"])
    vbars = np.linspace(float(cfg["vmin"]), float(cfg["vmax"]), int(cfg["steps"]))
    beyond = [float(vb) for vb in vbars if catalog.N * vb > catalog.v_max + 1e-12]
    rows = []
    for vb in vbars:
        v = catalog.N * float(vb)
        mu = morse.multiplicities_below(catalog, v, strict=False)
        row = {"vbar": float(vb), "chi": morse.euler_characteristic(catalog, v, strict=False)}
        row.update({f"mu_{i}": int(mu[i]) for i in range(catalog.N + 1)})
        rows.append(row)
    out = _outdir(cfg)
    fields = ["vbar", "chi"] + [f"mu_{i}" for i in range(catalog.N + 1)]
    path = write_csv(out / "euler_curve.csv", rows, fields, cfg)
    if beyond:
        print(
            f"note: {len(beyond)} grid points above the catalog cutoff "
            f"(v_max={catalog.v_max:.6g}); counts there assume no further critical points"
        )
    print(f"euler curve ({len(rows)} rows) -> {path}")
    if not cfg["no_plot"]:
        from . import plots

        print(f"figure -> {plots.plot_euler_curve(rows, catalog.N, out / 'euler_curve.png')}")


def run_volume(cfg):
    _require(cfg, "v")
    model = build_model(cfg)
    est = measure.estimate_sublevel_volume(model, float(cfg["v"]), _sampler(cfg))
    out = _outdir(cfg)
    path = write_json(out / "volume.json", measure.estimate_row(model, float(cfg["v"]), est), cfg)
    print(f"M({cfg['v']}) = {est.mean:.6g} +- {est.stderr:.2g} -> {path}")


def run_beta(cfg):
    _require(cfg, "v")
    model = build_model(cfg)
    est = measure.estimate_beta(model, float(cfg["v"]), _sampler(cfg))
    out = _outdir(cfg)
    payload = {"model_hash": model.spec_hash(), "v": float(cfg["v"])}
    payload.update(est.to_json())
    path = write_json(out / "beta.json", payload, cfg)
    print(f"beta({cfg['v']}) = {est.mean:.6g} +- {est.stderr:.2g} -> {path}")


def run_entropy_scan(cfg):
    _require(cfg, "vbar_min", "vbar_max", "steps")
    model = build_model(cfg)
    catalog = morse.load_catalog(cfg["catalog"]) if cfg.get("catalog") else None
    vbars = np.linspace(float(cfg["vbar_min"]), float(cfg["vbar_max"]), int(cfg["steps"]))
    curve = thermo.entropy_curve(
        model, vbars, _sampler(cfg), estimator=cfg.get("estimator") or "auto", catalog=catalog
    )
    table = thermo.fd_derivatives(curve) if len(vbars) >= 5 else None
    rows = thermo.curve_rows(curve, table)
    out = _outdir(cfg)
    fields = ["vbar", "S", "stderr_S", "dS1", "dS2", "dS3", "dS4", "in_band"]
    path = write_csv(out / "entropy_curve.csv", rows, fields, cfg)
    print(f"entropy curve ({len(rows)} rows, {curve.estimator}) -> {path}")
    if not cfg["no_plot"]:
        from . import plots

        print(f"figure -> {plots.plot_entropy_curve(rows, out / 'entropy_curve.png')}")


def run_scaling(cfg):
    _require(cfg, "N_list", "window")
    window = _float_list(cfg["window"])
    if len(window) != 2:
        raise ConfigError("window must be lo,hi")
    base = dict(cfg)

    def family(N):
        fam_cfg = dict(base)
        fam_cfg["N"] = N
        return build_model(fam_cfg)

    report = thermo.scaling_scan(
        family,
        _int_list(cfg["N_list"]),
        window,
        _sampler(cfg),
        grid_points=int(cfg.get("steps") or 17),
        estimator=cfg.get("estimator") or "auto",
    )
    verdicts = thermo.detect_transition(report)
    out = _outdir(cfg)
    payload = report.to_json()
    payload["verdicts"] = verdicts
    path = write_json(out / "scaling.json", payload, cfg)
    print(f"scaling over N={report.N_list}: verdicts {verdicts} -> {path}")
    if not cfg["no_plot"]:
        from . import plots

        print(f"figure -> {plots.plot_scaling(report, out / 'scaling.png')}")


def run_coeffs(cfg):
    out = _outdir(cfg)
    if cfg.get("catalog"):
        catalog = morse.load_catalog(cfg["catalog"])
        coeffs = neckgeom.NeighborhoodCoefficients.from_catalog(
            catalog, eps0=cfg.get("eps0"), r=cfg.get("r")
        )
        g = coeffs.g(catalog.v_max)
        payload = coeffs.to_json()
        payload["g"] = {str(k): v for k, v in sorted(g.items())}
        points = [(i, p) for i, p in enumerate(catalog.points)]
        N, eps0, r = coeffs.N, coeffs.eps0, coeffs.r
    else:
        _require(cfg, "N", "eps0")
        N = int(cfg["N"])
        eps0 = float(cfg["eps0"])
        r = float(cfg.get("r") or 1.0)
        indexes = _int_list(cfg["indexes"]) if cfg.get("indexes") else list(range(N + 1))
        payload = {
            "N": N,
            "eps0": eps0,
            "r": r,
            "A": {str(k): neckgeom.coefficient_A(N, k, eps0, r) for k in indexes},
        }
        points = []

    b_steps = int(cfg.get("b_steps") or 33)
    dvs = np.linspace(-eps0, eps0, b_steps)
    b_rows = []
    for dv in dvs:
        row = {"delta_v": float(dv)}
        if points:
            for i, p in points:
                row[f"B_p{i}_k{p.morse_index}"] = neckgeom.coefficient_B(
                    N, p.morse_index, float(dv), eps0, r, p.jacobian_factor
                )
        else:
            for k_str in payload["A"]:
                row[f"B_k{k_str}"] = neckgeom.coefficient_B(N, int(k_str), float(dv), eps0, r, 1.0)
        b_rows.append(row)
    path = write_json(out / "coefficients.json", payload, cfg)
    csv_path = write_csv(out / "b_curves.csv", b_rows, list(b_rows[0].keys()), cfg)
    print(f"A table ({len(payload['A'])} indexes) -> {path}; B curves -> {csv_path}")
    if not cfg["no_plot"]:
        from . import plots

        print(f"figure -> {plots.plot_coefficients(payload['A'], b_rows, out / 'coefficients.png')}")


def run_verify_decomposition(cfg):
    _require(cfg, "catalog", "v", "eps0_list")
    catalog = morse.load_catalog(cfg["catalog"])
    model = morse.catalog_model(catalog)
    reports = decompose.decomposition_sweep(
        model,
        catalog,
        float(cfg["v"]),
        _float_list(cfg["eps0_list"]),
        r=cfg.get("r"),
        config=_sampler(cfg, default_samples=400_000),
    )
    out = _outdir(cfg)
    path = write_json(out / "decomposition.json", {"reports": [r.to_json() for r in reports]}, cfg)
    fields = [
        "eps0", "r", "direct", "excised", "topo_term", "cylinder_mc",
        "residual_rel", "residual_vs_mc_rel", "regime", "n_cylinders",
    ]
    rows = [
        {
            "eps0": r.eps0,
            "r": r.r,
            "direct": r.direct_volume.mean,
            "excised": r.excised_volume.mean,
            "topo_term": r.topo_term,
            "cylinder_mc": r.cylinder_mc_total.mean,
            "residual_rel": r.residual_rel,
            "residual_vs_mc_rel": r.residual_vs_mc_rel,
            "regime": r.regime,
            "n_cylinders": r.n_cylinders,
        }
        for r in reports
    ]
    csv_path = write_csv(out / "decomposition.csv", rows, fields, cfg)
    for row in rows:
        print(
            f"eps0={row['eps0']:<8g} residual_rel={row['residual_rel']:.3e} "
            f"vs_mc={row['residual_vs_mc_rel']:.3e} regime={row['regime']}"
        )
    print(f"reports -> {path}; table -> {csv_path}")
    if not cfg["no_plot"]:
        from . import plots

        print(f"figure -> {plots.plot_decomposition(reports, out / 'decomposition.png')}")


RUNNERS = {
    "critpoints": run_critpoints,
    "euler-curve": run_euler_curve,
    "volume": run_volume,
    "beta": run_beta,
    "entropy-scan": run_entropy_scan,
    "scaling": run_scaling,
    "coeffs": run_coeffs,
    "verify-decomposition": run_verify_decomposition,
}


if __name__ == "__main__":
    sys.exit(main())
