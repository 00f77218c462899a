"""Command-line entry point: simulate, analyze, fit, solve, compare, generate.

Subcommands
-----------
simulate       run the continuous-field model (or a baseline) and write tick
               records plus a summary
analyze        compute statistics from tick records or snapshot files
fit-mo         fit the market-order response constants to (v, flow) data
fp             tabulate the stationary return density and regime report
compare        run several models with a shared seed and emit side-by-side stats
gen-synthetic  generate synthetic snapshot/market-order files

Configuration is a JSON file (--config) whose keys mirror the flags; explicit
flags win.  Every run writes the fully resolved configuration next to its
outputs.  Exit codes: 0 success, 2 usage or validation error, 3 data error,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analyzers, configs, ingest, profiles
from .baselines import BaselineKind, run_baseline
from .dynamics import market_order_rate, simulate
from .errors import DataError, NumericError
from .field import MarketOrderParams, ModelParams, PlacementActivityParams, new_field
from .fokker_planck import FPParams, make_grid, regime_report, stationary_density
from .stable_noise import StableParams

STAT_NAMES = (
    "conditional-delta",
    "mean-delta",
    "spatial-correlation",
    "return-distribution",
    "variance-vs-n0",
    "velocity-correlation",
    "rms-delta",
)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValueError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from None


def _model_params_from_config(cfg: dict) -> ModelParams:
    ref = configs.reference_model_params()
    stable_cfg = cfg.get("stable", {})
    stable = StableParams(
        alpha=stable_cfg.get("alpha", ref.stable.alpha),
        scale=stable_cfg.get("scale", ref.stable.scale),
        truncation_quantile=stable_cfg.get("truncation_quantile", ref.stable.truncation_quantile),
    )
    mo_cfg = cfg.get("mo", {})
    mo = MarketOrderParams(
        k0=mo_cfg.get("k0", ref.mo.k0),
        k_inf=mo_cfg.get("k_inf", ref.mo.k_inf),
        k1=mo_cfg.get("k1", ref.mo.k1),
        v0=mo_cfg.get("v0", ref.mo.v0),
    )
    def prof(key, default):
        return profiles.make_profile(cfg[key]) if key in cfg else default

    activity = None
    if cfg.get("activity"):
        act = cfg["activity"]
        activity = PlacementActivityParams(
            k0_in=profiles.make_profile(act["k0_in"]),
            k_inf_in=profiles.make_profile(act["k_inf_in"]),
            k1_in=profiles.make_profile(act["k1_in"]),
            v0_in=profiles.make_profile(act["v0_in"]),
        )
    return ModelParams(
        stable=stable,
        sigma_in=prof("sigma_in", ref.sigma_in),
        sigma_out=prof("sigma_out", ref.sigma_out),
        diffusion=prof("diffusion", ref.diffusion),
        mo=mo,
        tau=cfg.get("tau", ref.tau),
        n0_floor=cfg.get("n0_floor", ref.n0_floor),
        activity=activity,
        noise_time_scaling=cfg.get("noise_time_scaling", ref.noise_time_scaling),
    )


def _resolved_model_config(params: ModelParams, grid, steps, dt, seed) -> dict:
    def spec_of(p):
        return getattr(p, "spec", "<custom callable>")

    return {
        "model": "cf",
        "grid": {"length": grid.length, "dx": grid.dx},
        "steps": steps,
        "dt": dt,
        "seed": seed,
        "stable": {
            "alpha": params.stable.alpha,
            "scale": params.stable.scale,
            "truncation_quantile": params.stable.truncation_quantile,
        },
        "sigma_in": spec_of(params.sigma_in),
        "sigma_out": spec_of(params.sigma_out),
        "diffusion": spec_of(params.diffusion),
        "mo": {"k0": params.mo.k0, "k_inf": params.mo.k_inf, "k1": params.mo.k1, "v0": params.mo.v0},
        "tau": params.tau,
        "n0_floor": params.n0_floor,
        "noise_time_scaling": params.noise_time_scaling,
    }


def _run_model(model: str, cfg: dict, steps: int, dt: float, seed: int, grid_cfg: dict):
    if model == "cf":
        grid = configs.GridSpec(
            length=int(grid_cfg.get("length", configs.reference_grid().length)),
            dx=float(grid_cfg.get("dx", configs.reference_grid().dx)),
        )
        params = _model_params_from_config(cfg)
        init = (
            profiles.make_profile(cfg["init_profile"])
            if "init_profile" in cfg
            else configs.reference_init_profile()
        )
        field = grid.new_field(init)
        tracked = np.unique(np.geomspace(1, grid.length - 1, 24).astype(int))
        result = simulate(params, field, steps=steps, dt=dt, seed=seed, tracked_cells=tracked)
        resolved = _resolved_model_config(params, grid, steps, dt, seed)
        return result, resolved
    if model == "cs":
        field = configs.cs_reference_field()
        result = run_baseline(BaselineKind.CS, configs.cs_reference(), field, steps=steps,
                              seed=seed, tracked_cells=np.arange(field.length))
        return result, {"model": "cs", "steps": steps, "seed": seed, "reference": True}
    if model == "kstt":
        field = configs.kstt_reference_field()
        result = run_baseline(BaselineKind.KSTT, configs.kstt_reference(), field, steps=steps,
                              seed=seed, tracked_cells=np.arange(field.length))
        return result, {"model": "kstt", "steps": steps, "seed": seed, "reference": True}
    raise ValueError(f"unknown model {model!r}; valid: cf, cs, kstt")


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    steps = args.steps if args.steps is not None else int(cfg.get("steps", 100_000))
    dt = args.dt if args.dt is not None else float(cfg.get("dt", 1.0))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 1))
    model = args.model or cfg.get("model", "cf")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    result, resolved = _run_model(model, cfg, steps, dt, seed, cfg.get("grid", {}))
    runtime = time.time() - t0
    if args.records:
        with open(out / "records.jsonl", "w") as fh:
            ingest.write_step_records(result, fh)
    rd = analyzers.return_distribution(result.velocities, tau=dt)
    summary = {
        "model": model,
        "steps": steps,
        "seed": seed,
        "runtime_seconds": runtime,
        "mean_n0": float(np.mean(result.n0s)),
        "velocity_std": float(np.std(result.velocities)),
        "tail_exponent": rd.tail_exponent,
        "tail_exponent_ols": rd.tail_exponent_ols,
        "tail_flags": rd.flags,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    (out / "config.json").write_text(json.dumps(resolved, indent=2, default=str))
    print(json.dumps(summary, indent=2))
    return 0


def _frame_from_args(args) -> analyzers.SeriesFrame:
    if args.records:
        with open(args.records) as fh:
            return ingest.read_step_records_frame(fh)
    if args.snapshots:
        rep = ingest.ParseReport()
        with open(args.snapshots) as fh:
            snaps = list(ingest.parse_snapshots(fh, rep))
        mos = None
        if args.market_orders:
            with open(args.market_orders) as fh:
                mos = ingest.parse_market_orders(fh)
        return ingest.build_frame(
            snaps, dt=args.dt or 1.0, dx=args.dx, L=args.L, market_orders=mos
        )
    raise ValueError("provide --records or --snapshots as the frame source")


def cmd_analyze(args) -> int:
    wanted = [s.strip() for s in args.stats.split(",") if s.strip()] if args.stats else list(STAT_NAMES)
    bad = [s for s in wanted if s not in STAT_NAMES]
    if bad:
        raise ValueError(f"unknown statistic(s) {bad}; valid names: {', '.join(STAT_NAMES)}")
    frame = _frame_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dt = args.lag if args.lag is not None else float(np.median(np.diff(frame.times)))
    x_mid = frame.x_bins[min(len(frame.x_bins) // 4, len(frame.x_bins) - 1)]
    written = []
    for stat in wanted:
        try:
            if stat == "conditional-delta":
                fam = analyzers.conditional_delta_distribution(frame, x_mid, 6, dt)
                with open(out / "conditional_delta.csv", "w") as fh:
                    ingest.write_histogram_family_csv(fam, fh)
                written.append("conditional_delta.csv")
            elif stat == "mean-delta":
                rows = []
                for x in frame.x_bins:
                    try:
                        fit = analyzers.mean_delta_vs_n(frame, x, dt)
                        rows.append((x, fit.slope, fit.intercept, fit.slope_stderr))
                    except DataError:
                        continue
                if not rows:
                    raise DataError("no x bin had enough volume samples for mean-delta")
                arr = np.array(rows)
                curve = analyzers.Curve(
                    bin_centers=arr[:, 0], values=arr[:, 1],
                    counts=np.full(len(arr), 0), bin_edges=arr[:, 0],
                    meta={"statistic": "mean_delta_slope", "dt": dt},
                )
                with open(out / "mean_delta_slope.csv", "w") as fh:
                    ingest.write_curve_csv(curve, fh, name="slope")
                written.append("mean_delta_slope.csv")
            elif stat == "spatial-correlation":
                c = analyzers.spatial_correlation(frame, x_mid, dt)
                with open(out / "spatial_correlation.csv", "w") as fh:
                    ingest.write_curve_csv(c, fh, name="correlation")
                written.append("spatial_correlation.csv")
            elif stat == "return-distribution":
                rd = analyzers.return_distribution(frame.velocities, tau=dt)
                with open(out / "return_distribution.csv", "w") as fh:
                    ingest.write_return_distribution_csv(rd, fh)
                written.append("return_distribution.csv")
            elif stat == "variance-vs-n0":
                c = analyzers.velocity_variance_vs_n0(frame)
                with open(out / "variance_vs_n0.csv", "w") as fh:
                    ingest.write_curve_csv(c, fh, name="velocity_variance")
                written.append("variance_vs_n0.csv")
            elif stat == "velocity-correlation":
                cur = analyzers.velocity_volume_correlation(frame, dt)
                for side, c in cur.items():
                    with open(out / f"velocity_correlation_{side}.csv", "w") as fh:
                        ingest.write_curve_csv(c, fh, name="correlation")
                    written.append(f"velocity_correlation_{side}.csv")
            elif stat == "rms-delta":
                cur = analyzers.rms_delta_vs_velocity(frame)
                for side, c in cur.items():
                    with open(out / f"rms_delta_{side}.csv", "w") as fh:
                        ingest.write_curve_csv(c, fh, name="rms_delta")
                    written.append(f"rms_delta_{side}.csv")
        except DataError as exc:
            print(f"warning: {stat}: {exc}", file=sys.stderr)
    if not written:
        raise DataError("no statistic could be computed from the input frame")
    print(json.dumps({"written": written, "out": str(out)}))
    return 0


def cmd_fit_mo(args) -> int:
    frame = _frame_from_args(args)
    if frame.mo_flows is None:
        raise DataError("frame carries no market-order flows; cannot fit the response")
    rep = analyzers.fit_market_order_response(frame.velocities, frame.mo_flows, n0s=frame.n0s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "converged": rep.converged,
        "parameters": {k: {"estimate": v[0], "stderr": v[1]} for k, v in rep.parameters.items()},
        "residual_norm": rep.residual_norm,
        "sample_count": rep.sample_count,
        "diagnostics": rep.diagnostics,
    }
    (out / "mo_fit.json").write_text(json.dumps(payload, indent=2))
    print(json.dumps(payload, indent=2))
    return 0 if rep.converged else 4


def cmd_fp(args) -> int:
    p = FPParams(k0=args.k0, k_inf=args.k_inf, k1=args.k1, v0=args.v0, n0=args.n0, tau=args.tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = regime_report(p)
    if rep["power_law"]:
        grid = make_grid(p, points=args.points)
        dens = stationary_density(p, grid)
        flags = {k: v for k, v in vars(args).items()
                 if isinstance(v, (int, float, str, bool, type(None)))}
        with open(out / "density.csv", "w") as fh:
            ingest.write_density_csv(dens, fh, meta={"params": flags})
        rep["density_file"] = "density.csv"
        rep["normalization_check"] = dens.normalization_check
    (out / "regime_report.json").write_text(json.dumps(rep, indent=2, default=str))
    print(json.dumps(rep, indent=2, default=str))
    return 0


def cmd_compare(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = [m for m in models if m not in ("cf", "cs", "kstt")]
    if bad:
        raise ValueError(f"unknown model(s) {bad}; valid: cf, cs, kstt")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for model in models:
        result, _ = _run_model(model, {}, args.steps, 1.0, args.seed, {})
        frame = result.to_frame()
        v = result.velocities
        rd = analyzers.return_distribution(v, tau=1.0)
        with open(out / f"{model}_return_distribution.csv", "w") as fh:
            ingest.write_return_distribution_csv(rd, fh)
        rms = analyzers.rms_delta_vs_velocity(frame)
        for side, c in rms.items():
            with open(out / f"{model}_rms_delta_{side}.csv", "w") as fh:
                ingest.write_curve_csv(c, fh, name="rms_delta")
        cor = analyzers.velocity_volume_correlation(frame, 1.0)
        for side, c in cor.items():
            with open(out / f"{model}_velocity_correlation_{side}.csv", "w") as fh:
                ingest.write_curve_csv(c, fh, name="correlation")
        from scipy import stats as sps

        summary[model] = {
            "velocity_std": float(np.std(v)),
            "excess_kurtosis": float(sps.kurtosis(v)),
            "tail_exponent": rd.tail_exponent,
            "tail_flags": rd.flags,
            "mean_n0": float(np.mean(result.n0s)),
        }
    (out / "comparison.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return 0


def cmd_gen_synthetic(args) -> int:
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "snapshots":
        price = 10_000.0
        records = []
        t = 0.0
        for _ in range(args.count):
            t += float(rng.uniform(0.8, 1.2))
            price *= math.exp(rng.normal(0.0, 2e-4))
            bids = [
                (price * math.exp(-x), float(rng.gamma(2.0, 2.0)))
                for x in np.sort(rng.uniform(5e-5, 0.02, 12))
            ]
            asks = [
                (price * math.exp(x), float(rng.gamma(2.0, 2.0)))
                for x in np.sort(rng.uniform(5e-5, 0.02, 12))
            ]
            records.append(ingest.SnapshotRecord(ts=t, trade_price=price, bids=bids, asks=asks))
        with open(out, "w") as fh:
            ingest.write_snapshots(records, fh)
    elif args.kind == "market-orders":
        p = MarketOrderParams(k0=3.0, k_inf=2.0, k1=1.5, v0=2e-4)
        rows = []
        for i in range(args.count):
            v = float(rng.normal(0.0, 2.5e-4))
            buy, sell = market_order_rate(v, p)
            noise = 1.0 + 0.05 * rng.standard_normal(2)
            rows.append(ingest.MarketOrderRecord(
                ts=float(i), buy_volume=max(buy * noise[0], 0.0),
                sell_volume=max(sell * noise[1], 0.0),
            ))
        with open(out, "w") as fh:
            ingest.write_market_orders(rows, fh)
    else:
        raise ValueError(f"unknown synthetic kind {args.kind!r}; valid: snapshots, market-orders")
    print(json.dumps({"written": str(out), "kind": args.kind, "count": args.count}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bookfield",
        description="Continuous-field order-book model: simulate, analyze, fit, compare.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a model and write tick records + summary")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--model", choices=["cf", "cs", "kstt"], default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-records", dest="records", action="store_false",
                   help="skip writing records.jsonl (summary only)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="compute statistics from records or snapshots")
    p.add_argument("--records", help="step-record JSONL file from simulate")
    p.add_argument("--snapshots", help="snapshot JSONL file")
    p.add_argument("--market-orders", help="market-order CSV aligned with snapshots")
    p.add_argument("--dx", type=float, default=2e-4, help="lattice spacing for snapshot gridding")
    p.add_argument("--L", type=float, default=0.05, help="lattice extent for snapshot gridding")
    p.add_argument("--dt", type=float, default=None, help="frame build interval for snapshots")
    p.add_argument("--lag", type=float, default=None, help="lag for delta statistics")
    p.add_argument("--stats", default="", help=f"comma list of: {', '.join(STAT_NAMES)} (default all)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-mo", help="fit market-order response constants")
    p.add_argument("--records", help="step-record JSONL file")
    p.add_argument("--snapshots", help="snapshot JSONL file")
    p.add_argument("--market-orders", help="market-order CSV")
    p.add_argument("--dx", type=float, default=2e-4)
    p.add_argument("--L", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_mo)

    p = sub.add_parser("fp", help="stationary density + regime report")
    p.add_argument("--k0", type=float, required=True)
    p.add_argument("--k-inf", dest="k_inf", type=float, required=True)
    p.add_argument("--k1", type=float, required=True)
    p.add_argument("--v0", type=float, required=True)
    p.add_argument("--n0", type=float, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fp)

    p = sub.add_parser("compare", help="side-by-side model statistics, shared seed")
    p.add_argument("--models", default="cf,cs,kstt")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-synthetic", help="generate synthetic data files")
    p.add_argument("--kind", required=True, choices=["snapshots", "market-orders"])
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file path")
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
