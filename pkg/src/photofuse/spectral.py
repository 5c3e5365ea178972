"""Wavelength-indexed spectra and the radiometric/pigment arithmetic.

Covers the quantities derived from one leaf's optical measurements:
photosynthetically active radiation (PAR, 400-700 nm), the absorbed
fraction fAPAR computed from apparent reflectance and transmittance,
APAR, the APAR-normalised SIF-yield spectra, and the ethanol-extract
pigment equations (Lichtenthaler-style coefficients).

All values are immutable after construction; every operation is a pure
function, so batches of leaves can be processed concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, ValidationError

PAR_BAND = (400.0, 700.0)
SIF_BAND = (665.0, 845.0)

# Absorbance (1 - R - T) may dip this far below zero before it is treated
# as a physical inconsistency rather than instrument noise.
ABSORBANCE_NOISE_EPS = 1e-6

# Leaf-disc geometry of the ethanol extraction: 8.5 mm discs in a 2 mL tube.
DISC_AREA_CM2 = math.pi * 0.425**2
EXTRACT_VOLUME_ML = 2.0


class SpectrumKind(str, Enum):
    REFLECTANCE = "reflectance"
    TRANSMITTANCE = "transmittance"
    IRRADIANCE = "irradiance"
    FLUORESCENCE = "fluorescence"
    SIF_YIELD = "sif_yield"


_UNIT_INTERVAL_KINDS = (SpectrumKind.REFLECTANCE, SpectrumKind.TRANSMITTANCE)


@dataclass(frozen=True)
class WavelengthGrid:
    """Strictly increasing wavelengths in nm."""

    wavelengths: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        object.__setattr__(self, "wavelengths", wl)
        if wl.ndim != 1 or wl.size < 2:
            raise ValidationError("wavelength grid needs at least 2 points")
        if not np.all(np.isfinite(wl)) or np.any(wl <= 0):
            raise ValidationError("wavelengths must be finite and > 0")
        if np.any(np.diff(wl) <= 0):
            raise ValidationError("wavelengths must be strictly increasing")
        wl.flags.writeable = False

    def __len__(self) -> int:
        return self.wavelengths.size

    @property
    def lo(self) -> float:
        return float(self.wavelengths[0])

    @property
    def hi(self) -> float:
        return float(self.wavelengths[-1])

    def covers(self, lo: float, hi: float) -> bool:
        return self.lo <= lo and hi <= self.hi


@dataclass(frozen=True)
class Spectrum:
    """Values sampled on a wavelength grid, tagged with their physical kind."""

    grid: WavelengthGrid
    values: np.ndarray
    kind: SpectrumKind

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if v.shape != self.grid.wavelengths.shape:
            raise ValidationError(
                f"{self.kind.value}: {v.size} values on a grid of {len(self.grid)}"
            )
        if not np.all(np.isfinite(v)):
            raise DataError(f"{self.kind.value}: non-finite values")
        if self.kind in _UNIT_INTERVAL_KINDS and (np.any(v < 0) or np.any(v > 1)):
            raise DataError(f"{self.kind.value}: values outside [0, 1]")
        v.flags.writeable = False

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths


def resample(spec: Spectrum, target: WavelengthGrid) -> Spectrum:
    """Piecewise-linear interpolation of ``spec`` onto ``target``.

    The target range must lie inside the source range; extrapolation is
    refused. Kind is preserved.
    """
    if target.lo < spec.grid.lo or target.hi > spec.grid.hi:
        raise ValidationError(
            f"resample would extrapolate: target [{target.lo}, {target.hi}] nm "
            f"outside source [{spec.grid.lo}, {spec.grid.hi}] nm"
        )
    vals = np.interp(target.wavelengths, spec.grid.wavelengths, spec.values)
    return Spectrum(target, vals, spec.kind)


def clip_band(spec: Spectrum, lo: float, hi: float) -> Spectrum:
    """Restrict a spectrum to the grid points within [lo, hi]."""
    wl = spec.grid.wavelengths
    mask = (wl >= lo) & (wl <= hi)
    if mask.sum() < 2:
        raise ValidationError(f"band [{lo}, {hi}] nm keeps fewer than 2 grid points")
    return Spectrum(WavelengthGrid(wl[mask]), spec.values[mask], spec.kind)


def common_grid(*specs: Spectrum) -> WavelengthGrid:
    """Union of all grid points restricted to the shared wavelength range.

    Trapezoidal integrals of piecewise-linear spectra are exact on this
    grid, so mixed-instrument inputs can be aligned without losing
    information inside the overlap.
    """
    lo = max(s.grid.lo for s in specs)
    hi = min(s.grid.hi for s in specs)
    if lo >= hi:
        raise ValidationError("spectra share no wavelength overlap")
    merged = np.unique(np.concatenate([s.grid.wavelengths for s in specs]))
    merged = merged[(merged >= lo) & (merged <= hi)]
    return WavelengthGrid(merged)


def _band_values(spec: Spectrum, lo: float, hi: float):
    """Wavelengths/values over [lo, hi] with interpolated endpoints."""
    if lo >= hi:
        raise ValidationError(f"empty band [{lo}, {hi}] nm")
    if not spec.grid.covers(lo, hi):
        raise ValidationError(
            f"band [{lo}, {hi}] nm outside grid [{spec.grid.lo}, {spec.grid.hi}] nm"
        )
    wl = spec.grid.wavelengths
    inner = (wl > lo) & (wl < hi)
    xs = np.concatenate(([lo], wl[inner], [hi]))
    ys = np.interp(xs, wl, spec.values)
    return xs, ys


def integrate_band(spec: Spectrum, lo: float, hi: float) -> float:
    """Trapezoidal integral of the spectrum over [lo, hi] nm."""
    xs, ys = _band_values(spec, lo, hi)
    return float(np.trapezoid(ys, xs))


def fapar(R: Spectrum, T: Spectrum, normalized: bool = False) -> float:
    """Integrated absorbance (1 - R - T) over the PAR band.

    This is the literal band integral and therefore carries nm units; pass
    ``normalized=True`` to divide by the band width and obtain a unitless
    absorbed fraction. Reflectance and transmittance must share a grid;
    absorbance below ``-ABSORBANCE_NOISE_EPS`` is rejected as physically
    inconsistent, smaller dips are clamped to zero as instrument noise.
    """
    if R.kind is not SpectrumKind.REFLECTANCE or T.kind is not SpectrumKind.TRANSMITTANCE:
        raise ValidationError("fapar expects a reflectance and a transmittance spectrum")
    if not np.array_equal(R.grid.wavelengths, T.grid.wavelengths):
        raise ValidationError("fapar: R and T must be on the same grid")
    absorbance = 1.0 - R.values - T.values
    worst = absorbance.min()
    if worst < -ABSORBANCE_NOISE_EPS:
        wl = R.grid.wavelengths[int(np.argmin(absorbance))]
        raise DataError(f"R + T exceeds 1 by {-worst:.3g} at {wl:g} nm")
    spec = Spectrum(R.grid, np.clip(absorbance, 0.0, None), SpectrumKind.IRRADIANCE)
    value = integrate_band(spec, *PAR_BAND)
    if normalized:
        value /= PAR_BAND[1] - PAR_BAND[0]
    return value


def apar(I: Spectrum, R: Spectrum, T: Spectrum, normalized: bool = False) -> float:
    """Absorbed PAR: fAPAR(R, T) times the integrated irradiance over PAR."""
    if I.kind is not SpectrumKind.IRRADIANCE:
        raise ValidationError("apar expects an irradiance spectrum")
    return fapar(R, T, normalized=normalized) * integrate_band(I, *PAR_BAND)


def sif_yield(F: Spectrum, apar_value: float) -> Spectrum:
    """Fluorescence normalised by APAR, removing incident-light variability."""
    if F.kind is not SpectrumKind.FLUORESCENCE:
        raise ValidationError("sif_yield expects a fluorescence spectrum")
    if not apar_value > 0:
        raise ValidationError(f"APAR must be > 0, got {apar_value!r}")
    return Spectrum(F.grid, F.values / apar_value, SpectrumKind.SIF_YIELD)


def sif_yield_from_raw(
    I: Spectrum,
    R: Spectrum,
    T: Spectrum,
    F: Spectrum,
    band: tuple = SIF_BAND,
    normalized_fapar: bool = False,
) -> Spectrum:
    """Full chain from raw quadruple (I, R, T, F) to a clipped SIF-yield spectrum.

    Grids are first aligned to their common grid, then APAR and the yield
    are computed, and finally the yield is clipped to ``band`` (low
    signal-to-noise edges removed).
    """
    par_grid = common_grid(
        clip_band(I, *PAR_BAND) if I.grid.covers(*PAR_BAND) else I,
        clip_band(R, *PAR_BAND) if R.grid.covers(*PAR_BAND) else R,
        clip_band(T, *PAR_BAND) if T.grid.covers(*PAR_BAND) else T,
    )
    if not par_grid.covers(*PAR_BAND):
        raise ValidationError("I, R, T must jointly cover the 400-700 nm PAR band")
    apar_value = apar(
        resample(I, par_grid),
        resample(R, par_grid),
        resample(T, par_grid),
        normalized=normalized_fapar,
    )
    return clip_band(sif_yield(F, apar_value), *band)


@dataclass(frozen=True)
class PigmentAbsorbances:
    """Extract absorbances at 470/649/665 nm plus extraction geometry."""

    a470: float
    a649: float
    a665: float
    volume_ml: float = EXTRACT_VOLUME_ML
    area_cm2: float = DISC_AREA_CM2

    def __post_init__(self):
        if min(self.a470, self.a649, self.a665) < 0:
            raise ValidationError("absorbances must be >= 0")
        if not self.volume_ml > 0:
            raise ValidationError("extraction volume must be > 0")
        if not self.area_cm2 > 0:
            raise ValidationError("leaf disc area must be > 0")


@dataclass(frozen=True)
class PigmentResult:
    """Pigment concentrations (ug/mL) and per-area contents (ug/cm^2)."""

    con_a: float
    con_b: float
    con_xc: float
    cab: float
    cxc: float


def pigment_concentrations(absorb: PigmentAbsorbances):
    """Chlorophyll a/b and carotenoid concentrations in ug/mL."""
    con_a = 13.95 * absorb.a665 - 6.88 * absorb.a649
    con_b = 24.96 * absorb.a649 - 7.32 * absorb.a665
    con_xc = (1000.0 * absorb.a470 - 2.05 * con_a - 114.8 * con_b) / 245.0
    return con_a, con_b, con_xc


def pigment_contents(absorb: PigmentAbsorbances) -> PigmentResult:
    """Per-area chlorophyll (Cab) and carotenoid (Cxc) contents in ug/cm^2."""
    con_a, con_b, con_xc = pigment_concentrations(absorb)
    per_area = absorb.volume_ml / absorb.area_cm2
    return PigmentResult(
        con_a=con_a,
        con_b=con_b,
        con_xc=con_xc,
        cab=(con_a + con_b) * per_area,
        cxc=con_xc * per_area,
    )
