"""One-tick evolution of the continuous-field order-book model.

Each tick applies, in a fixed operator-splitting order:

    (a) order modification as diffusion of D(x) n(x) with zero-flux ends,
    (b) order placement driven by one-sided stable noise,
    (c) order cancellation proportional to the resting volume,
    (d) market-order removal at the boundary cells,
    (e) the price velocity from the boundary continuity balance,
    (f) advection of the co-moving frame by v dt.

The velocity closure is explicit: the market-order imbalance is evaluated at
the previous tick's velocity and divided by the current boundary volume
(floored to keep the near-empty-book case finite).  The splitting order is
fixed for reproducibility; its error is quadratic in dt and immaterial at
tick scale.

``step`` advances a field once and reports a full StepRecord (including
per-cell volume changes).  ``simulate`` runs many ticks with identical
arithmetic but chunked noise generation and lightweight recording; the two
paths consume the RNG stream identically, so a simulate() run is
bit-for-bit the same trajectory as repeated step() calls on one stream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import stable_noise
from .field import (
    MarketOrderParams,
    ModelParams,
    OrderBookField,
    PlacementActivityParams,
    boundary_volume,
    shift_boundary,
)

__all__ = [
    "StepRecord",
    "SimulationResult",
    "market_order_rate",
    "order_imbalance",
    "placement_scale",
    "compute_velocity",
    "step",
    "simulate",
    "check_stability",
]


@dataclass
class StepRecord:
    t: float
    v: float
    n0: float
    mo_buy: float
    mo_sell: float
    delta_bid: np.ndarray
    delta_ask: np.ndarray
    spill_bid: float = 0.0
    spill_ask: float = 0.0


def market_order_rate(v: float, p: MarketOrderParams) -> tuple[float, float]:
    """Market-order volumes (buy, sell) per tick at velocity v, clamped at zero."""
    w = v / p.v0
    th = np.tanh(w)
    se = 1.0 / np.cosh(w)
    buy = (p.k0 * th + p.k_inf - p.k1 * se) * p.v0
    sell = (-p.k0 * th + p.k_inf - p.k1 * se) * p.v0
    return max(float(buy), 0.0), max(float(sell), 0.0)


def order_imbalance(v: float, p: MarketOrderParams) -> float:
    """Buy-minus-sell market-order volume before clamping: 2 k0 v0 tanh(v/v0)."""
    return 2.0 * p.k0 * p.v0 * float(np.tanh(v / p.v0))


def placement_scale(x, v: float, side: str, p: PlacementActivityParams):
    """Velocity-coupled placement activity; trend term positive for bids, negative for asks."""
    if side not in ("bid", "ask"):
        raise ValueError(f"side must be 'bid' or 'ask', got {side!r}")
    sign = 1.0 if side == "bid" else -1.0
    xa = np.asarray(x, dtype=float)
    v0 = np.asarray(p.v0_in(xa), dtype=float)
    w = v / v0
    val = (sign * np.asarray(p.k0_in(xa), dtype=float) * np.tanh(w)
           + np.asarray(p.k_inf_in(xa), dtype=float)
           - np.asarray(p.k1_in(xa), dtype=float) / np.cosh(w)) * v0
    return np.maximum(val, 0.0) if val.ndim else max(float(val), 0.0)


def compute_velocity(field: OrderBookField, v_prev: float, p: ModelParams) -> float:
    """Boundary continuity balance: v = [J(v_prev) + dx(D n_ask)(0) - dx(D n_bid)(0)] / n0."""
    d = np.asarray(p.diffusion(field.x[:3]), dtype=float)
    return _velocity(field.bid, field.ask, v_prev, p, d, field.dx)


def _velocity(bid, ask, v_prev, p, d3, dx) -> float:
    n0 = float(bid[0] + ask[0])
    j = order_imbalance(v_prev, p.mo)
    # One-sided second-order gradients of D*n at x = 0.
    gb = (-3.0 * d3[0] * bid[0] + 4.0 * d3[1] * bid[1] - d3[2] * bid[2]) / (2.0 * dx)
    ga = (-3.0 * d3[0] * ask[0] + 4.0 * d3[1] * ask[1] - d3[2] * ask[2]) / (2.0 * dx)
    return (j + ga - gb) / max(n0, p.n0_floor)


def check_stability(params: ModelParams, length: int, dx: float, dt: float) -> None:
    """Raise before any mutation if the diffusion bound or tick bound is violated."""
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > params.tau:
        raise ValueError(f"dt={dt} exceeds the tick tau={params.tau}")
    x = np.arange(length) * dx
    dmax = float(np.max(np.asarray(params.diffusion(x), dtype=float)))
    if dmax * dt / dx**2 > 0.5 + 1e-12:
        raise ValueError(
            f"diffusion stability bound violated: max D*dt/dx^2 = {dmax * dt / dx**2:.3g} > 0.5"
        )


class _TickEngine:
    """Per-grid precomputation and the shared tick update used by step and simulate."""

    def __init__(self, params: ModelParams, length: int, dx: float, dt: float):
        check_stability(params, length, dx, dt)
        params.validate_on(np.arange(length) * dx)
        self.p = params
        self.dx = dx
        self.dt = dt
        x = np.arange(length) * dx
        self.d_arr = np.asarray(params.diffusion(x), dtype=float)
        self.sigma_out_arr = np.asarray(params.sigma_out(x), dtype=float)
        self.c_diff = dt / dx**2
        self.mo_frac = dt / params.tau
        alpha = params.stable.alpha
        power = 1.0 if params.noise_time_scaling == "linear" else 1.0 / alpha
        self.dt_noise = params.tau * (dt / params.tau) ** power
        act = params.activity
        if act is None:
            s = np.asarray(params.sigma_in(x), dtype=float)
            self._static_scales = (s, s)
        else:
            self._static_scales = None
            self.act_k0 = np.asarray(act.k0_in(x), dtype=float)
            self.act_kinf = np.asarray(act.k_inf_in(x), dtype=float)
            self.act_k1 = np.asarray(act.k1_in(x), dtype=float)
            self.act_v0 = np.asarray(act.v0_in(x), dtype=float)
            self.act_v0_const = float(self.act_v0[0]) if np.ptp(self.act_v0) == 0.0 else None
        self.diffusive = bool(np.any(self.d_arr > 0.0))

    def placement_scales(self, v: float) -> tuple[np.ndarray, np.ndarray]:
        if self._static_scales is not None:
            return self._static_scales
        if self.act_v0_const is not None:
            w = v / self.act_v0_const
            th = float(np.tanh(w))
            se = 1.0 / float(np.cosh(w))
        else:
            w = v / self.act_v0
            th = np.tanh(w)
            se = 1.0 / np.cosh(w)
        trend = self.act_k0 * th
        base = self.act_kinf - self.act_k1 * se
        s_bid = np.maximum((base + trend) * self.act_v0, 0.0)
        s_ask = np.maximum((base - trend) * self.act_v0, 0.0)
        return s_bid, s_ask

    def tick(self, field: OrderBookField, v_prev: float, xi_b, xi_a, ze_b, ze_a):
        """Advance one tick in place. Noise arrays are unit-scale stable draws."""
        p = self.p
        bid, ask = field.bid, field.ask
        if self.diffusive:
            fb = np.diff(self.d_arr * bid)
            fa = np.diff(self.d_arr * ask)
            bid[:-1] += self.c_diff * fb
            bid[1:] -= self.c_diff * fb
            ask[:-1] += self.c_diff * fa
            ask[1:] -= self.c_diff * fa
        s_bid, s_ask = self.placement_scales(v_prev)
        scale = p.stable.scale * self.dt_noise
        bid += s_bid * xi_b * scale
        ask += s_ask * xi_a * scale
        out = self.sigma_out_arr * self.dt_noise * p.stable.scale
        np.subtract(bid, np.minimum(out * ze_b * bid, bid), out=bid)
        np.subtract(ask, np.minimum(out * ze_a * ask, ask), out=ask)
        mo_buy, mo_sell = market_order_rate(v_prev, p.mo)
        mo_buy *= self.mo_frac
        mo_sell *= self.mo_frac
        eaten_ask = min(mo_buy, float(ask[0]))
        eaten_bid = min(mo_sell, float(bid[0]))
        ask[0] -= eaten_ask
        bid[0] -= eaten_bid
        n0 = float(bid[0] + ask[0])
        v = _velocity(bid, ask, v_prev, p, self.d_arr[:3], self.dx)
        _, spill = shift_boundary(field, v * self.dt)
        field.t += self.dt
        return v, n0, eaten_ask, eaten_bid, spill


def step(
    field: OrderBookField,
    v_prev: float,
    params: ModelParams,
    dt: float,
    rng: np.random.Generator,
) -> tuple[OrderBookField, StepRecord]:
    """Advance the field one tick, returning it with a complete StepRecord."""
    engine = _TickEngine(params, field.length, field.dx, dt)
    bid0 = field.bid.copy()
    ask0 = field.ask.copy()
    xi_b, xi_a, ze_b, ze_a = _draw_tick_noise(params.stable, field.length, rng)
    v, n0, mo_buy, mo_sell, spill = engine.tick(field, v_prev, xi_b, xi_a, ze_b, ze_a)
    rec = StepRecord(
        t=field.t,
        v=v,
        n0=n0,
        mo_buy=mo_buy,
        mo_sell=mo_sell,
        delta_bid=field.bid - bid0,
        delta_ask=field.ask - ask0,
        spill_bid=spill.bid,
        spill_ask=spill.ask,
    )
    return field, rec


def _draw_tick_noise(stable: stable_noise.StableParams, length: int, rng: np.random.Generator):
    """Unit-scale noise for one tick: rows are (xi_bid, xi_ask, zeta_bid, zeta_ask)."""
    unit = stable_noise.StableParams(
        alpha=stable.alpha, scale=1.0, truncation_quantile=stable.truncation_quantile
    )
    block = stable_noise.draw(unit, (4, length), rng)
    return block[0], block[1], block[2], block[3]


@dataclass
class SimulationResult:
    """Per-tick scalars plus per-cell volume tracks at selected cells."""

    times: np.ndarray
    velocities: np.ndarray
    n0s: np.ndarray
    mo_buy: np.ndarray
    mo_sell: np.ndarray
    spill_bid: np.ndarray
    spill_ask: np.ndarray
    tracked_cells: np.ndarray
    bid_tracks: np.ndarray
    ask_tracks: np.ndarray
    dx: float
    dt: float
    final_field: OrderBookField

    def to_frame(self):
        """View the run as a SeriesFrame for the analyzers."""
        from .analyzers import SeriesFrame

        return SeriesFrame(
            times=self.times,
            velocities=self.velocities,
            n0s=self.n0s,
            x_bins=self.tracked_cells * self.dx,
            bid=self.bid_tracks,
            ask=self.ask_tracks,
            mo_flows=np.column_stack([self.mo_buy, self.mo_sell]),
            segments=((0, len(self.times)),),
        )


def simulate(
    params: ModelParams,
    field: OrderBookField,
    steps: int,
    dt: float,
    seed: int,
    tracked_cells=None,
    v0: float = 0.0,
    noise_chunk: int = 2048,
) -> SimulationResult:
    """Run ``steps`` ticks from the given field (mutated in place).

    tracked_cells: cell indices whose bid/ask volumes are recorded every tick
    (defaults to 8 cells spread log-evenly across the grid).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    engine = _TickEngine(params, field.length, field.dx, dt)
    if field.t == 0.0 and field.fractional_offset == 0.0:
        # register the price mid-cell so sign jitter of the first ticks does
        # not straddle a cell edge and shuttle volume across the boundary
        field.fractional_offset = 0.5 * field.dx
    rng = np.random.default_rng(seed)
    if tracked_cells is None:
        tracked_cells = np.unique(np.geomspace(1, field.length - 1, 8).astype(int))
    tracked_cells = np.asarray(tracked_cells, dtype=int)
    unit = stable_noise.StableParams(
        alpha=params.stable.alpha, scale=1.0, truncation_quantile=params.stable.truncation_quantile
    )
    n_tr = len(tracked_cells)
    out_v = np.empty(steps)
    out_n0 = np.empty(steps)
    out_mob = np.empty(steps)
    out_mos = np.empty(steps)
    out_spb = np.empty(steps)
    out_spa = np.empty(steps)
    out_bid = np.empty((steps, n_tr))
    out_ask = np.empty((steps, n_tr))
    times = field.t + dt * (1.0 + np.arange(steps))
    L = field.length
    cap = unit.unit_cap
    v = v0
    done = 0
    while done < steps:
        m = min(noise_chunk, steps - done)
        # Per-tick draw order matches step(): uniforms then exponentials, (4, L) each.
        u = np.empty((m, 4, L))
        w = np.empty((m, 4, L))
        for j in range(m):
            u[j] = rng.uniform(0.0, np.pi, (4, L))
            w[j] = rng.standard_exponential((4, L))
        noise = stable_noise._kanter_unit(unit.alpha, u, w)
        if cap != np.inf:
            np.minimum(noise, cap, out=noise)
        for j in range(m):
            t = done + j
            v, n0, mob, mos, spill = engine.tick(
                field, v, noise[j, 0], noise[j, 1], noise[j, 2], noise[j, 3]
            )
            out_v[t] = v
            out_n0[t] = n0
            out_mob[t] = mob
            out_mos[t] = mos
            out_spb[t] = spill.bid
            out_spa[t] = spill.ask
            out_bid[t] = field.bid[tracked_cells]
            out_ask[t] = field.ask[tracked_cells]
        done += m
    return SimulationResult(
        times=times,
        velocities=out_v,
        n0s=out_n0,
        mo_buy=out_mob,
        mo_sell=out_mos,
        spill_bid=out_spb,
        spill_ask=out_spa,
        tracked_cells=tracked_cells,
        bid_tracks=out_bid,
        ask_tracks=out_ask,
        dx=field.dx,
        dt=dt,
        final_field=field,
    )
