"""Rasterize device geometries to 80x80 grayscale cross-sections and back.

Layout (row 0 at the top, 5 nm per pixel, device centered on column 40):
the wafer surface is fixed at row 34, the single-pixel gate oxide sits in
row 33 across the gate columns, poly rises above it, spacers flank the gate
stack down to the surface, source/drain blocks run from each image edge to
the outer spacer edge with an LDD toe extending under the spacer to the
gate edge, and the substrate fills rows 34 onward.

Also provides the "hand-drawn" perturbation (region gray shifts, flat S/D
fill, jittered boundaries) and the measurement path that recovers the five
geometry parameters from clean, hand-drawn, or decoder-emitted images.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import median_filter

from .device import MAX_LATERAL_NM, PARAM_RANGES, PITCH_NM, DeviceParams
from .errors import DomainError, MalformedImage

IMG_SIZE = 80
SURFACE_ROW = 34  # first substrate row; the wafer surface plane
OXIDE_ROW = 33    # single-pixel gate oxide
CENTER_COL = 40

# Region codes. S/D precedes LDD so nearest-level ties resolve to S/D;
# the two are counted together wherever depth is measured.
BACKGROUND, SUBSTRATE, SOURCE_DRAIN, LDD, OXIDE, POLY, SPACER = range(7)

REGION_LEVELS = {
    BACKGROUND: 0,
    SPACER: 60,
    SUBSTRATE: 90,
    LDD: 170,
    POLY: 230,
    OXIDE: 255,
}
SD_LEVEL_TOP = 200     # S/D doping gradient, surface level
SD_LEVEL_BOTTOM = 150  # S/D doping gradient at the junction
SD_LEVEL_FLAT = 180    # hand-drawn S/D fill (gradient information lost)

# Ordering used for the 3x3 median filter on region labels. Oxide must sit
# between substrate and poly here: ordered by raw gray level (oxide 255 at
# the extreme) the one-pixel oxide line would be erased by the filter and
# exact round trips would break.
_FILTER_ORDINAL = {
    BACKGROUND: 0, SPACER: 1, SUBSTRATE: 2, LDD: 3,
    SOURCE_DRAIN: 4, OXIDE: 5, POLY: 6,
}
_ORDINAL_TO_REGION = {v: k for k, v in _FILTER_ORDINAL.items()}

# Classification basins: a perturbed region level must stay inside its own
# nearest-level cell or extraction would misread whole regions. Midpoints
# between the canonical levels, pulled in by a 2-level guard.
_LEVEL_BASINS = {
    BACKGROUND: (0, 28),
    SPACER: (32, 73),
    SUBSTRATE: (77, 118),
    LDD: (150, 190),
    SOURCE_DRAIN: (160, 200),
    POLY: (217, 241),
    OXIDE: (245, 255),
}

# Columns guaranteed to be full-depth S/D for every renderable device
# (>= 6-pixel contact landing per side, minus one pixel of boundary jitter).
_EDGE_COLS = np.array([0, 1, 2, 3, 4, 75, 76, 77, 78, 79])


def _px(nm: float) -> int:
    return int(round(nm / PITCH_NM))


class _Geometry:
    """Pixel-space layout derived from DeviceParams."""

    def __init__(self, p: DeviceParams):
        self.w = _px(p.l_g)        # gate width, columns
        self.ws = _px(p.l_sp)      # spacer width, columns
        self.d = _px(p.x_j)        # junction depth, rows
        self.tp = _px(p.t_poly)    # poly height, rows
        self.ts = _px(p.t_sub)     # substrate depth, rows
        self.dl = max(1, round(0.4 * self.d))  # LDD depth, rows
        self.g0 = CENTER_COL - self.w // 2     # first gate column
        self.g1 = self.g0 + self.w - 1         # last gate column
        self.sl = self.g0 - self.ws            # first left-spacer column
        self.sr = self.g1 + self.ws            # last right-spacer column


def region_map(p: DeviceParams) -> np.ndarray:
    """Label every pixel with its region code; derivable without the raster."""
    p.validate()
    g = _Geometry(p)
    m = np.full((IMG_SIZE, IMG_SIZE), BACKGROUND, dtype=np.uint8)
    m[SURFACE_ROW:SURFACE_ROW + g.ts, :] = SUBSTRATE
    m[SURFACE_ROW:SURFACE_ROW + g.d, :g.sl] = SOURCE_DRAIN
    m[SURFACE_ROW:SURFACE_ROW + g.d, g.sr + 1:] = SOURCE_DRAIN
    m[SURFACE_ROW:SURFACE_ROW + g.dl, g.sl:g.g0] = LDD
    m[SURFACE_ROW:SURFACE_ROW + g.dl, g.g1 + 1:g.sr + 1] = LDD
    m[OXIDE_ROW, g.g0:g.g1 + 1] = OXIDE
    m[OXIDE_ROW - g.tp:OXIDE_ROW, g.g0:g.g1 + 1] = POLY
    m[OXIDE_ROW - g.tp:SURFACE_ROW, g.sl:g.g0] = SPACER
    m[OXIDE_ROW - g.tp:SURFACE_ROW, g.g1 + 1:g.sr + 1] = SPACER
    return m


def _sd_gradient_levels(d: int) -> np.ndarray:
    """Doping-gradient gray per S/D row: 200 at the surface, 150 at the junction."""
    if d == 1:
        return np.array([SD_LEVEL_TOP])
    k = np.arange(d)
    span = SD_LEVEL_TOP - SD_LEVEL_BOTTOM
    return np.round(SD_LEVEL_TOP - span * k / (d - 1)).astype(int)


def render(p: DeviceParams) -> np.ndarray:
    """Deterministic 80x80 uint8 raster of the cross-section."""
    m = region_map(p)
    g = _Geometry(p)
    img = np.zeros((IMG_SIZE, IMG_SIZE), dtype=np.uint8)
    for region, level in REGION_LEVELS.items():
        img[m == region] = level
    grad = _sd_gradient_levels(g.d)
    for k in range(g.d):
        row_mask = m[SURFACE_ROW + k] == SOURCE_DRAIN
        img[SURFACE_ROW + k][row_mask] = grad[k]
    return img


def to_unit_vector(img: np.ndarray) -> np.ndarray:
    """Flatten an 80x80 uint8 image to 6400 floats in [0, 1]."""
    arr = np.asarray(img)
    if arr.shape != (IMG_SIZE, IMG_SIZE):
        raise DomainError(f"expected {IMG_SIZE}x{IMG_SIZE} image, got {arr.shape}")
    return arr.astype(float).ravel() / 255.0


def quantize_decoded(raw: np.ndarray) -> np.ndarray:
    """Map decoder outputs in [0, 1] to an 8-bit image (round half up)."""
    arr = np.asarray(raw, dtype=float)
    if arr.size != IMG_SIZE * IMG_SIZE:
        raise DomainError(f"expected {IMG_SIZE * IMG_SIZE} values, got {arr.size}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError("decoded values must lie in [0, 1]")
    img = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    return img.reshape(IMG_SIZE, IMG_SIZE)


def classify_regions(img: np.ndarray) -> np.ndarray:
    """Per-pixel nearest-canonical-level classification, then a 3x3 median
    filter on the label ordinals (edge-replicated)."""
    arr = np.asarray(img, dtype=float)
    if arr.shape != (IMG_SIZE, IMG_SIZE):
        raise DomainError(f"expected {IMG_SIZE}x{IMG_SIZE} image, got {arr.shape}")
    # Distance to each candidate; S/D is an interval of levels, so its
    # distance is to the nearest point of [150, 200].
    candidates = [BACKGROUND, SUBSTRATE, SOURCE_DRAIN, LDD, OXIDE, POLY, SPACER]
    dists = np.empty((len(candidates), IMG_SIZE, IMG_SIZE))
    for i, region in enumerate(candidates):
        if region == SOURCE_DRAIN:
            ref = np.clip(arr, SD_LEVEL_BOTTOM, SD_LEVEL_TOP)
        else:
            ref = REGION_LEVELS[region]
        dists[i] = np.abs(arr - ref)
    labels = np.asarray(candidates, dtype=np.uint8)[np.argmin(dists, axis=0)]
    ordinals = np.vectorize(_FILTER_ORDINAL.get, otypes=[np.uint8])(labels)
    filtered = median_filter(ordinals, size=3, mode="nearest")
    return np.vectorize(_ORDINAL_TO_REGION.get, otypes=[np.uint8])(filtered)


def _line_count_median(mask: np.ndarray, axis: int) -> int:
    """Median pixel count over the grid lines that contain the region at all.

    Exact on clean renders (every line carries the true span) and robust to
    single-pixel boundary jitter and decoder speckle.
    """
    counts = mask.sum(axis=axis)
    counts = counts[counts > 0]
    if counts.size == 0:
        return 0
    return int(round(float(np.median(counts))))


def _clamp_to_range(name: str, nm: float) -> float:
    lo, hi = PARAM_RANGES[name]
    q = round(nm / PITCH_NM) * PITCH_NM
    return float(min(max(q, lo), hi))


def extract_params(img: np.ndarray) -> DeviceParams:
    """Measure the five geometry parameters from any plausible device image.

    Classification, median filtering, then span measurements: gate length
    from the poly column span, poly height from the poly row span, spacer
    width from the spacer spans left and right of the gate (averaged),
    junction depth from the S/D depth in the contact-landing columns, and
    substrate thickness from the substrate row extent. All measurements are
    medians over grid lines. Results are snapped to the 5 nm grid and
    clamped into the valid parameter box.
    """
    lab = classify_regions(img)
    poly = lab == POLY
    substrate = lab == SUBSTRATE
    if not poly.any():
        raise MalformedImage("no poly gate region detected")
    if not substrate.any():
        raise MalformedImage("no substrate region detected")

    w = _line_count_median(poly, axis=1)
    tp = _line_count_median(poly, axis=0)

    poly_cols = np.where(poly.any(axis=0))[0]
    cl, cr = int(poly_cols.min()), int(poly_cols.max())
    spacer = lab == SPACER
    ws_l = _line_count_median(spacer[:, :cl], axis=1)
    ws_r = _line_count_median(spacer[:, cr + 1:], axis=1)
    ws_avg_nm = 0.5 * (ws_l + ws_r) * PITCH_NM

    sd = (lab == SOURCE_DRAIN) | (lab == LDD)
    depth_counts = sd[:, _EDGE_COLS].sum(axis=0)
    depth_counts = depth_counts[depth_counts > 0]
    d = int(round(float(np.median(depth_counts)))) if depth_counts.size else 0

    sub_rows = np.where(substrate.any(axis=1))[0]
    top = int(sub_rows.min())
    last_per_col = [int(np.where(substrate[:, c])[0].max())
                    for c in range(IMG_SIZE) if substrate[:, c].any()]
    bottom = int(round(float(np.median(last_per_col))))
    ts = bottom - top + 1

    l_g = _clamp_to_range("l_g", w * PITCH_NM)
    # half-pixel averages round half up onto the grid
    l_sp = _clamp_to_range("l_sp", np.floor(ws_avg_nm / PITCH_NM + 0.5) * PITCH_NM)
    x_j = _clamp_to_range("x_j", d * PITCH_NM)
    t_poly = _clamp_to_range("t_poly", tp * PITCH_NM)
    t_sub = _clamp_to_range("t_sub", ts * PITCH_NM)
    max_sp = np.floor((MAX_LATERAL_NM - l_g) / 2.0 / PITCH_NM) * PITCH_NM
    l_sp = float(min(l_sp, max_sp))
    return DeviceParams(l_g=l_g, x_j=x_j, l_sp=l_sp, t_poly=t_poly, t_sub=t_sub)


def perturb_hand_drawn(img: np.ndarray, rng_seed: int) -> np.ndarray:
    """Imitate a human redrawing a clean render.

    The S/D doping gradient collapses to one flat gray, every region's level
    shifts by a seeded uniform offset in [-20, +20] (clamped to stay inside
    the region's classification basin, so geometry stays measurable), and
    region boundaries wobble by one pixel with independent per-position
    offsets. The wafer surface row and the one-pixel oxide row stay rigid:
    they are the reference planes that keep the five parameter midlines
    within one pixel of the original.
    """
    p = extract_params(img)
    g = _Geometry(p)
    rng = np.random.default_rng(rng_seed)

    def wobble():
        return rng.integers(-1, 2, IMG_SIZE)

    # draw order is part of the output contract for a fixed seed
    j_poly_top, j_poly_l, j_poly_r = wobble(), wobble(), wobble()
    j_spc_top_l, j_spc_top_r = wobble(), wobble()
    j_spc_l, j_spc_r = wobble(), wobble()
    j_sd_in_l, j_sd_in_r = wobble(), wobble()
    j_sd_bot_l, j_sd_bot_r = wobble(), wobble()
    j_ldd_in_l, j_ldd_in_r = wobble(), wobble()
    j_ldd_bot_l, j_ldd_bot_r = wobble(), wobble()
    j_sub_bot = wobble()
    offsets = {region: rng.uniform(-20.0, 20.0)
               for region in sorted(_LEVEL_BASINS)}

    lab = np.full((IMG_SIZE, IMG_SIZE), BACKGROUND, dtype=np.uint8)
    for r in range(IMG_SIZE):
        for c in range(IMG_SIZE):
            if r < SURFACE_ROW:
                if r == OXIDE_ROW:
                    if g.g0 + j_poly_l[r] <= c <= g.g1 + j_poly_r[r]:
                        lab[r, c] = OXIDE
                    elif g.sl + j_spc_l[r] <= c < g.g0 + j_poly_l[r]:
                        lab[r, c] = SPACER
                    elif g.g1 + j_poly_r[r] < c <= g.sr + j_spc_r[r]:
                        lab[r, c] = SPACER
                elif g.g0 + j_poly_l[r] <= c <= g.g1 + j_poly_r[r]:
                    if r >= OXIDE_ROW - g.tp + j_poly_top[c]:
                        lab[r, c] = POLY
                elif g.sl + j_spc_l[r] <= c < g.g0 + j_poly_l[r]:
                    if r >= OXIDE_ROW - g.tp + j_spc_top_l[c]:
                        lab[r, c] = SPACER
                elif g.g1 + j_poly_r[r] < c <= g.sr + j_spc_r[r]:
                    if r >= OXIDE_ROW - g.tp + j_spc_top_r[c]:
                        lab[r, c] = SPACER
            else:
                if r > OXIDE_ROW + g.ts + j_sub_bot[c]:
                    continue  # below the substrate: background
                if c <= g.sl - 1 + j_sd_in_l[r] and r <= OXIDE_ROW + g.d + j_sd_bot_l[c]:
                    lab[r, c] = SOURCE_DRAIN
                elif c >= g.sr + 1 + j_sd_in_r[r] and r <= OXIDE_ROW + g.d + j_sd_bot_r[c]:
                    lab[r, c] = SOURCE_DRAIN
                elif (g.sl + j_sd_in_l[r] <= c < g.g0 + j_ldd_in_l[r]
                        and r <= OXIDE_ROW + g.dl + j_ldd_bot_l[c]):
                    lab[r, c] = LDD
                elif (g.g1 + j_ldd_in_r[r] < c <= g.sr + j_sd_in_r[r]
                        and r <= OXIDE_ROW + g.dl + j_ldd_bot_r[c]):
                    lab[r, c] = LDD
                else:
                    lab[r, c] = SUBSTRATE

    levels = {}
    for region, (lo, hi) in _LEVEL_BASINS.items():
        base = SD_LEVEL_FLAT if region == SOURCE_DRAIN else REGION_LEVELS[region]
        levels[region] = int(np.clip(round(base + offsets[region]), lo, hi))
    out = np.zeros((IMG_SIZE, IMG_SIZE), dtype=np.uint8)
    for region, level in levels.items():
        out[lab == region] = level
    return out
