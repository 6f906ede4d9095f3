"""Per-realization two-way AF relay computations.

Given one fading draw and a solved water level, computes the relay
amplification gain, the five SIR components, and the end-to-end SIRs at the
base station and at the secondary user, plus the SU-side upper bound. A
symbol-level simulator acts as an independent oracle for the SIR algebra.

Zero-interference draws produce an infinite SIR; that sentinel is kept (it
counts as non-outage downstream). Draws with an indeterminate 0/0 ratio are
flagged invalid and excluded by callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import FadingRealization, PowerConfig, ScenarioGeometry, derive_etas
from .power import optimal_power

__all__ = [
    "SirSample",
    "relay_gain",
    "relay_gain_noisy",
    "sir_sample",
    "sinr_bs",
    "symbol_level_oracle",
]


@dataclass(frozen=True)
class SirSample:
    """SIR components and end-to-end SIRs for a batch of fading draws.

    valid flags draws whose ratios are well defined (indeterminate 0/0
    draws are False and must be excluded from statistics).
    """

    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma4: np.ndarray
    gamma5: np.ndarray
    gamma_bs1: np.ndarray
    gamma_su1: np.ndarray
    gamma_su1_upper: np.ndarray
    p_su1: np.ndarray
    beta: np.ndarray
    valid: np.ndarray


def relay_gain(draw: FadingRealization, geom: ScenarioGeometry, p_cci: float, p_su1):
    """Amplification gain beta = (P s^-eps h2 + P_su1 l^-eps g2 + P r^-eps v2)^(-1/2)."""
    e = geom.epsilon
    total = (p_cci * geom.s ** -e * np.asarray(draw.h2, dtype=float)
             + np.asarray(p_su1, dtype=float) * geom.l ** -e * np.asarray(draw.g2, dtype=float)
             + p_cci * geom.r ** -e * np.asarray(draw.v2, dtype=float))
    if total.ndim == 0:
        if total == 0.0:
            raise ValueError("relay_gain: all received-power terms are zero (degenerate draw)")
        return float(total ** -0.5)
    with np.errstate(divide="ignore"):
        return total ** -0.5


def relay_gain_noisy(draw: FadingRealization, geom: ScenarioGeometry, p_cci: float,
                     p_su1, sigma2: float):
    """Noise-aware variant: beta' = (... + sigma2)^(-1/2); beta' <= beta."""
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    e = geom.epsilon
    total = (p_cci * geom.s ** -e * np.asarray(draw.h2, dtype=float)
             + np.asarray(p_su1, dtype=float) * geom.l ** -e * np.asarray(draw.g2, dtype=float)
             + p_cci * geom.r ** -e * np.asarray(draw.v2, dtype=float)
             + sigma2)
    with np.errstate(divide="ignore"):
        out = total ** -0.5
    return float(out) if out.ndim == 0 else out


def _harmonic(num_a, num_b, den_b):
    """a*b/(a + c) with infinity-aware fixups (limits of the finite formula)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = num_a * num_b / (num_a + den_b)
    # a -> inf with b, c finite: limit is b * a/(a+c) -> b... only when c finite
    a_inf = np.isinf(num_a)
    b_inf = np.isinf(num_b)
    c_inf = np.isinf(den_b)
    out = np.where(a_inf & ~b_inf & ~c_inf, num_b, out)
    out = np.where(b_inf & c_inf & a_inf, np.inf, out)
    return out


def sir_sample(draw: FadingRealization, geom: ScenarioGeometry, cfg: PowerConfig,
               lam: float) -> SirSample:
    """Compute all SIR quantities for a batch of draws at a solved water level.

    gamma2 is evaluated both from its definition and from the reformulation
    max(0, c2/T - 1) with c2 = lam/(eta4 P); a gross disagreement raises, as
    it would indicate an algebra transcription bug.
    """
    et = derive_etas(geom)
    e = geom.epsilon
    p = cfg.p_cci_lin
    h2 = np.atleast_1d(np.asarray(draw.h2, dtype=float))
    g2 = np.atleast_1d(np.asarray(draw.g2, dtype=float))
    f2 = np.atleast_1d(np.asarray(draw.f2, dtype=float))
    u2 = np.atleast_1d(np.asarray(draw.u2, dtype=float))
    v2 = np.atleast_1d(np.asarray(draw.v2, dtype=float))
    w2 = np.atleast_1d(np.asarray(draw.w2, dtype=float))
    batch = FadingRealization(h2, g2, f2, u2, v2, w2)

    p_su1 = optimal_power(batch, geom, cfg, lam)
    cci = p * (geom.q ** -e * u2 + geom.r ** -e * v2)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gamma1 = et.eta1 * h2 / u2
        gamma2 = p_su1 * (geom.l ** -e) * g2 / cci
        gamma3 = et.eta2 * g2 / w2
        gamma4 = et.eta3 * h2 / v2
        # gamma5 = (P s^-eps h2 + P_su1 l^-eps g2)/(P r^-eps v2), grouped so
        # that gamma5 == gamma4 bitwise whenever p_su1 == 0
        gamma5 = gamma4 + p_su1 * (geom.l ** -e) * g2 / (p * geom.r ** -e * v2)
        # reformulated route: gamma2 = max(0, c2/T - 1)
        t = cci / p * (f2 / g2)
        gamma2_alt = np.maximum(lam / (et.eta4 * p) / t - 1.0, 0.0)

    # mixed abs/rel: near the clipping boundary gamma2 -> 0+ cancellation
    # makes a pure relative comparison meaningless
    both = np.isfinite(gamma2) & np.isfinite(gamma2_alt)
    if both.any():
        gap = np.abs(gamma2[both] - gamma2_alt[both]) / np.maximum(
            1.0, np.maximum(gamma2[both], gamma2_alt[both]))
        if gap.max() > 1e-9:
            raise RuntimeError(
                f"gamma2 dual-route disagreement: max deviation {gap.max():.3e}")

    gamma_bs1 = _harmonic(gamma1, gamma2, gamma2)
    # p_su1 == 0 gives gamma2 == 0 -> 0 * g1/(g1) = 0; 0/0 only if gamma1 == 0 too
    gamma_bs1 = np.where((gamma2 == 0) & (gamma1 > 0), 0.0, gamma_bs1)
    gamma_su1 = _harmonic(gamma3, gamma4, gamma5)
    gamma_su1_upper = _harmonic(gamma3, gamma4, gamma4)

    beta = relay_gain(batch, geom, p, p_su1)
    valid = ~(np.isnan(gamma_bs1) | np.isnan(gamma_su1) | np.isnan(gamma_su1_upper))
    return SirSample(gamma1, gamma2, gamma3, gamma4, gamma5,
                     gamma_bs1, gamma_su1, gamma_su1_upper, p_su1, beta, valid)


def sinr_bs(draw: FadingRealization, geom: ScenarioGeometry, cfg: PowerConfig,
            lam: float):
    """Noise-aware combining at the base station: g1 g2/(g1 + g2 + 1).

    Always below the interference-only SIR; the gap vanishes as g1*g2 grows.
    """
    s = sir_sample(draw, geom, cfg, lam)
    with np.errstate(invalid="ignore", over="ignore"):
        out = s.gamma1 * s.gamma2 / (s.gamma1 + s.gamma2 + 1.0)
    out = np.where((s.gamma2 == 0) & np.isfinite(s.gamma1), 0.0, out)
    out = np.where(np.isinf(s.gamma1) & np.isfinite(s.gamma2), s.gamma2, out)
    out = np.where(np.isinf(s.gamma1) & np.isinf(s.gamma2), np.inf, out)
    return out


def _unit_symbols(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def symbol_level_oracle(draw: FadingRealization, geom: ScenarioGeometry, cfg: PowerConfig,
                        lam: float, n_symbols: int = 100_000, rng=None,
                        remove_self_interference: bool = True):
    """Simulate the two-phase exchange at symbol level and measure both SIRs.

    Unit-amplitude random-phase symbols traverse the MAC and BC phases with
    the noise-free relay gain; each end subtracts its known back-propagating
    self-interference, the desired component is estimated by pilot
    correlation, and the desired-to-residual power ratio is returned as
    (sir_bs, sir_su). Interference power below 1e-30 of the desired power
    reports an infinite-SIR sentinel.

    `remove_self_interference=False` exists only to demonstrate that the
    cancellation step matters; it never models the real receiver.
    """
    if n_symbols < 10_000:
        raise ValueError("n_symbols must be >= 1e4 for a stable estimate")
    if rng is None:
        rng = np.random.default_rng(0)
    e = geom.epsilon
    p = cfg.p_cci_lin
    h2, g2, v2 = float(draw.h2), float(draw.g2), float(draw.v2)
    u2, w2 = float(draw.u2), float(draw.w2)
    p_su1 = optimal_power(draw, geom, cfg, lam)

    # static channel coefficients for the block (phases arbitrary)
    phases = np.exp(2j * np.pi * rng.random(5))
    h = np.sqrt(h2) * phases[0]
    g = np.sqrt(g2) * phases[1]
    v = np.sqrt(v2) * phases[2]
    u = np.sqrt(u2) * phases[3]
    w = np.sqrt(w2) * phases[4]

    x1 = _unit_symbols(rng, n_symbols)
    x2 = _unit_symbols(rng, n_symbols)
    x3_mac = _unit_symbols(rng, n_symbols)
    x3_bc = _unit_symbols(rng, n_symbols)

    a_bs = np.sqrt(p * geom.s ** -e)    # BS1 -> PU1 and PU1 -> BS1 amplitude
    a_su = np.sqrt(p_su1 * geom.l ** -e)
    a_rel_su = np.sqrt(p * geom.l ** -e)  # PU1 -> SU1 (relay transmits at P)
    a_v = np.sqrt(p * geom.r ** -e)
    a_u = np.sqrt(p * geom.q ** -e)
    a_w = np.sqrt(p * geom.z ** -e)

    y_pu1 = a_bs * h * x1 + a_su * g * x2 + a_v * v * x3_mac
    beta = relay_gain(draw, geom, p, p_su1)

    y_bs1 = a_bs * h * beta * y_pu1 + a_u * u * x3_bc
    y_su1 = a_rel_su * g * beta * y_pu1 + a_w * w * x3_bc

    if remove_self_interference:
        y_bs1 = y_bs1 - beta * a_bs * h * a_bs * h * x1
        y_su1 = y_su1 - beta * a_rel_su * g * a_su * g * x2

    def measure(y, pilot):
        amp = np.mean(y * np.conj(pilot))
        desired = np.abs(amp) ** 2
        resid = np.mean(np.abs(y - amp * pilot) ** 2)
        if resid <= 1e-30 * max(desired, 1.0):
            return np.inf
        return desired / resid

    return measure(y_bs1, x2), measure(y_su1, x1)
