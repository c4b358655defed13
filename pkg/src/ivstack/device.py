"""Analytic planar-MOSFET surrogate.

Generates device geometries, turns them into saturation I_D-V_G curves with
an EKV-flavored closed-form model, extracts I_ON/I_OFF, and provides the
log-domain curve noise and normalization used by the networks.

The current model keeps the qualitative parameter strengths of a real planar
device: gate length and junction depth dominate, the spacer damps the ON
current and leaks the OFF current at large x_j/l_g, and the poly/substrate
thicknesses are electrically irrelevant by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Pixel pitch shared with the raster: every geometry is a multiple of it.
PITCH_NM = 5.0

# Gate-voltage grid: 51 points, 0 .. 1.4 V at V_D = 1.4 V, width 1 um.
N_POINTS = 51
VG_STEP = 0.028
VG_GRID = VG_STEP * np.arange(N_POINTS)
VD = 1.4

PHI_T = 0.0259  # thermal voltage, V

PARAM_RANGES = {
    "l_g": (25.0, 290.0),
    "x_j": (10.0, 90.0),
    "l_sp": (10.0, 110.0),
    "t_poly": (50.0, 150.0),
    "t_sub": (100.0, 200.0),
}

# Gate plus both spacers must land inside the 80-pixel field with room for
# the source/drain contacts on each side.
MAX_LATERAL_NM = 340.0

# log10(A) window mapped affinely onto [0, 1] for network inputs.
LOG10_FLOOR = -14.0
LOG10_SPAN = 12.0
CLAMP_MIN_A = 1e-16
CLAMP_MAX_A = 1e-1

# Curve indices that noise never touches (keeps I_OFF and I_ON exact).
TERMINAL_INDICES = (0, 1, 49, 50)
_NOISED = slice(2, 49)


@dataclass(frozen=True)
class DeviceParams:
    """Cross-section geometry, all lengths in nm.

    l_g: drawn gate length; x_j: source/drain junction depth; l_sp: spacer
    width; t_poly: gate poly thickness; t_sub: substrate thickness.
    """

    l_g: float
    x_j: float
    l_sp: float
    t_poly: float
    t_sub: float

    def validate(self) -> None:
        for name, (lo, hi) in PARAM_RANGES.items():
            v = getattr(self, name)
            if not (lo <= v <= hi):
                raise DomainError(f"{name}={v} outside [{lo}, {hi}]")
            if abs(v / PITCH_NM - round(v / PITCH_NM)) > 1e-9:
                raise DomainError(f"{name}={v} not a multiple of {PITCH_NM} nm")
        if self.l_g + 2.0 * self.l_sp > MAX_LATERAL_NM + 1e-9:
            raise DomainError(
                f"l_g + 2*l_sp = {self.l_g + 2 * self.l_sp} exceeds {MAX_LATERAL_NM} nm"
            )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.l_g, self.x_j, self.l_sp, self.t_poly, self.t_sub)


class FiguresOfMerit(NamedTuple):
    i_off: float  # drain current at V_G = 0 V
    i_on: float   # drain current at V_G = 1.4 V


def _quantize(value: float, lo: float, hi: float) -> float:
    q = round(value / PITCH_NM) * PITCH_NM
    return min(max(q, lo), hi)


def sample_params(rng_seed: int, n: int) -> list[DeviceParams]:
    """Draw n device geometries uniformly over the parameter ranges.

    Each field is quantized to the 5 nm pixel pitch. Draws violating the
    lateral-fit constraint are rejected and redrawn. Item i uses its own
    stream seeded with rng_seed + i, so a dataset can be regenerated (or
    parallelized) item by item.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    out = []
    for i in range(n):
        rng = np.random.default_rng(rng_seed + i)
        while True:
            vals = {
                name: _quantize(rng.uniform(lo, hi), lo, hi)
                for name, (lo, hi) in PARAM_RANGES.items()
            }
            if vals["l_g"] + 2.0 * vals["l_sp"] <= MAX_LATERAL_NM:
                break
        out.append(DeviceParams(**vals))
    return out


def simulate_iv(p: DeviceParams) -> np.ndarray:
    """Closed-form saturation I_D-V_G curve, 51 points, amps at 1 um width.

    Lateral diffusion shortens the channel to l_eff = max(l_g - 0.6*x_j, 2).
    A short-channel severity s = exp(-l_eff / (1.5*x_j)) rolls the threshold
    off and degrades the subthreshold slope. The spacer adds series damping
    on the channel current, and a punch-through term leaks the floor when
    x_j/l_g is large. t_poly and t_sub do not appear anywhere.
    """
    p.validate()
    l_eff = max(p.l_g - 0.6 * p.x_j, 2.0)
    s = math.exp(-l_eff / (1.5 * p.x_j))
    v_th = 0.45 - 0.35 * s
    n_slope = 1.2 + 0.8 * s
    i_spec = 5e-6 * (100.0 / l_eff)
    damping = 1.0 + 0.3 * (p.l_sp / l_eff)
    ratio = p.x_j / p.l_g
    i_leak = (
        1e-13
        * math.exp(min(8.0 * max(0.0, ratio - 0.35), 12.0))
        * (1.0 + ratio * (110.0 - p.l_sp) / 110.0)
    )
    arg = (VG_GRID - v_th) / (2.0 * n_slope * PHI_T)
    i_chan = i_spec * np.logaddexp(0.0, arg) ** 2
    return i_chan / damping + i_leak


def extract_fom(currents: np.ndarray) -> FiguresOfMerit:
    """I_OFF and I_ON are the first and last points of the curve."""
    c = np.asarray(currents, dtype=float)
    if c.shape != (N_POINTS,):
        raise DomainError(f"expected {N_POINTS}-point curve, got shape {c.shape}")
    return FiguresOfMerit(i_off=float(c[0]), i_on=float(c[50]))


def add_curve_noise(currents: np.ndarray, sigma_dec: float, rng_seed: int) -> np.ndarray:
    """Multiply interior points by smoothed log-normal noise.

    The four terminal points (indices 0, 1, 49, 50) are returned bit-exactly
    unchanged. Indices 2..48 are scaled by 10**eps_i with eps_i drawn
    iid normal(0, sigma_dec) and then 3-point moving-average smoothed; the
    smoothing window is clamped to the noised index span at its ends. The
    smoothing acts on the log10 offsets only, so sigma_dec = 0 is the
    identity.
    """
    if sigma_dec < 0:
        raise DomainError(f"sigma_dec must be >= 0, got {sigma_dec}")
    c = np.asarray(currents, dtype=float)
    if c.shape != (N_POINTS,):
        raise DomainError(f"expected {N_POINTS}-point curve, got shape {c.shape}")
    rng = np.random.default_rng(rng_seed)
    eps = rng.normal(0.0, sigma_dec, 47)  # indices 2..48
    smoothed = np.empty_like(eps)
    for j in range(47):
        lo = max(j - 1, 0)
        hi = min(j + 1, 46)
        smoothed[j] = (eps[lo] + eps[j] + eps[hi]) / 3.0
    out = c.copy()
    out[_NOISED] = c[_NOISED] * 10.0 ** smoothed
    out[list(TERMINAL_INDICES)] = c[list(TERMINAL_INDICES)]
    return out


def normalize_curve(currents: np.ndarray) -> np.ndarray:
    """Map currents to [0, 1] via (log10(I) + 14) / 12, clamped."""
    c = np.clip(np.asarray(currents, dtype=float), CLAMP_MIN_A, CLAMP_MAX_A)
    y = (np.log10(c) - LOG10_FLOOR) / LOG10_SPAN
    return np.clip(y, 0.0, 1.0)


def denormalize_curve(values: np.ndarray) -> np.ndarray:
    """Exact inverse of normalize_curve on the open unit interval."""
    y = np.asarray(values, dtype=float)
    return 10.0 ** (LOG10_SPAN * y + LOG10_FLOOR)
