"""Reference configurations for the simulator and the comparison models.

These are the tuned parameter sets used by the command line defaults, the
demo scripts and the acceptance suite.  The continuous-field reference run
reproduces the quartic return law with the trend-following constant matched
to the mean boundary volume; the baseline configurations are sized so that
their velocity noise stays deep inside one price cell over runs of ~1e6
ticks (their lattices never relabel, matching models defined on a fixed
price grid).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import profiles
from .baselines import CSParams, KSTTParams
from .field import MarketOrderParams, ModelParams, OrderBookField, PlacementActivityParams, new_field
from .stable_noise import StableParams

__all__ = [
    "GridSpec",
    "reference_grid",
    "reference_model_params",
    "reference_init_profile",
    "cs_reference",
    "cs_reference_field",
    "kstt_reference",
    "kstt_reference_field",
]


@dataclass(frozen=True)
class GridSpec:
    length: int = 512
    dx: float = 2e-4

    def new_field(self, init_profile) -> OrderBookField:
        return new_field(self.length, self.dx, init_profile)


def reference_grid() -> GridSpec:
    return GridSpec(length=512, dx=2e-4)


# Continuous-field reference constants (calibrated; see the acceptance suite).
REF_SIGMA_IN_PEAK = 0.05
REF_SIGMA_IN_SCALE = 0.02
REF_SIGMA_OUT = 0.004
REF_DIFFUSION = 2e-9
REF_K0 = 2.0
REF_K_INF = 0.5
REF_V0 = 5e-5
REF_ALPHA = 0.5
REF_NOISE_SCALE = 1.0
REF_TRUNCATION = 0.99
REF_N0_FLOOR = 5.0


def reference_init_profile():
    return profiles.exp_decay(REF_SIGMA_IN_PEAK / REF_SIGMA_OUT, REF_SIGMA_IN_SCALE)


def reference_model_params() -> ModelParams:
    return ModelParams(
        stable=StableParams(alpha=REF_ALPHA, scale=REF_NOISE_SCALE, truncation_quantile=REF_TRUNCATION),
        sigma_in=profiles.exp_decay(REF_SIGMA_IN_PEAK, REF_SIGMA_IN_SCALE),
        sigma_out=profiles.constant(REF_SIGMA_OUT),
        diffusion=profiles.constant(REF_DIFFUSION),
        mo=MarketOrderParams(k0=REF_K0, k_inf=REF_K_INF, k1=REF_K_INF, v0=REF_V0),
        tau=1.0,
        n0_floor=REF_N0_FLOOR,
    )


def cs_reference() -> CSParams:
    return CSParams(
        placement_rate=profiles.exp_decay(100.0, 10.0),
        cancel_prob=0.01,
        mo_volume=5.0,
        order_size=1.0,
        n0_floor=100.0,
    )


def cs_reference_field() -> OrderBookField:
    return new_field(64, 1.0, profiles.exp_decay(10_000.0, 10.0))


def kstt_reference() -> KSTTParams:
    return KSTTParams(
        activity=PlacementActivityParams(
            k0_in=profiles.constant(1.25e4),
            k_inf_in=profiles.constant(5e5),
            k1_in=profiles.constant(0.0),
            v0_in=profiles.constant(2e-4),
        ),
        cancel_prob=0.01,
        mo=MarketOrderParams(k0=2.5e3, k_inf=1.5e4, k1=0.0, v0=2e-4),
        order_size=1.0,
        n0_floor=100.0,
    )


def kstt_reference_field() -> OrderBookField:
    return new_field(16, 1.0, profiles.constant(10_000.0))
