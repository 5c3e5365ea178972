"""FvCB photosynthesis model and A/Ci curve fitting.

Net assimilation follows Farquhar, von Caemmerer & Berry (1980) with two
limitations: the Rubisco-limited rate Ac and the RuBP-regeneration-limited
rate Aj. The rate actually realised is their minimum less day respiration:

    Ac = Vcmax * (Ci - Gamma*) / (Ci + Kc * (1 + O / Ko))
    Aj = J * (Ci - Gamma*) / (4 * Ci + 8 * Gamma*)
    A  = min(Ac, Aj) - Rd

Kinetic constants and their Arrhenius activation energies default to
Bernacchi et al. (2001); electron transport measured at saturating light
is reported directly as Jmax. Fitting extracts (Vcmax, J, Rd) at leaf
temperature by multi-start damped least squares and converts them to
25 degC. TPU limitation is not modelled (rarely reached below
1600 umol mol-1 at these temperatures); a smooth hyperbolic minimum is
available for gradient-based work on the min() kink.

References:
-----------
* Farquhar, G.D., von Caemmerer, S. and Berry, J.A. (1980) A biochemical
  model of photosynthetic CO2 assimilation in leaves of C3 species.
  Planta, 149, 78-90.
* Bernacchi, C.J. et al. (2001) Improved temperature response functions
  for models of Rubisco-limited photosynthesis. Plant, Cell &
  Environment, 24, 253-259.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, FitError, ValidationError
from .nlls import levenberg_least_squares

RGAS = 8.314          # J mol-1 K-1
T25_K = 298.15
O2_MBAR = 210.0       # ambient O2 partial pressure

# CO2 setpoint sequence of the gas-exchange protocol; the three 400s are
# the initial point plus two stability checks and are kept as separate
# residuals when fitting.
CI_SEQUENCE = (400.0, 300.0, 200.0, 100.0, 50.0, 0.0, 400.0, 400.0,
               600.0, 800.0, 1000.0, 1200.0, 1400.0, 1600.0)

# Plausibility envelope around the observed trait ranges; values outside
# trigger a warning, not an error.
TRAIT_PLAUSIBLE = (20.0, 160.0)

VCMAX_RANGE = (29.11, 101.93)   # umol m-2 s-1, observed span
JMAX_RANGE = (57.86, 141.17)    # umol m-2 s-1, observed span


@dataclass(frozen=True)
class KineticConstants:
    """Rubisco kinetics at 25 degC plus Arrhenius activation energies (J mol-1).

    Defaults are the Bernacchi et al. (2001) in-vivo values.
    """

    kc25: float = 404.9           # ubar
    ko25: float = 278.4           # mbar
    gamma_star25: float = 42.75   # ubar
    ha_kc: float = 79430.0
    ha_ko: float = 36380.0
    ha_gamma_star: float = 37830.0
    ha_vcmax: float = 65330.0
    ha_jmax: float = 43540.0
    ha_rd: float = 46390.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if not getattr(self, name) > 0:
                raise ValidationError(f"kinetic constant {name} must be > 0")


BERNACCHI = KineticConstants()


def arrhenius_scale(value25: float, tleaf_c: float, ha: float) -> float:
    """Scale a 25 degC value to leaf temperature with an Arrhenius response."""
    if not -10.0 < tleaf_c < 60.0:
        raise ValidationError(f"leaf temperature {tleaf_c} degC outside (-10, 60)")
    tk = tleaf_c + 273.15
    return value25 * math.exp((ha / RGAS) * (1.0 / T25_K - 1.0 / tk))


def to_25(value_at_t: float, tleaf_c: float, ha: float) -> float:
    """Inverse of :func:`arrhenius_scale`: refer a value back to 25 degC."""
    return value_at_t / arrhenius_scale(1.0, tleaf_c, ha)


def _smooth_min(a, b, theta: float):
    # Lower root of theta*x^2 - (a+b)*x + a*b = 0; tends to min(a, b) as
    # theta -> 1 while staying differentiable.
    s = a + b
    disc = np.sqrt(np.maximum(s * s - 4.0 * theta * a * b, 0.0))
    return (s - disc) / (2.0 * theta)


def fvcb_assimilation(
    ci,
    vcmax: float,
    j: float,
    rd: float,
    kin: KineticConstants = BERNACCHI,
    tleaf_c: float = 25.0,
    o2: float = O2_MBAR,
    smooth_min_theta: Optional[float] = None,
):
    """Net assimilation at intercellular CO2 ``ci`` (ubar), scalar or array.

    ``vcmax``, ``j`` and ``rd`` are rates at leaf temperature; the kinetic
    constants are adjusted internally from their 25 degC values.
    """
    ci_arr = np.asarray(ci, dtype=float)
    kc = arrhenius_scale(kin.kc25, tleaf_c, kin.ha_kc)
    ko = arrhenius_scale(kin.ko25, tleaf_c, kin.ha_ko)
    gamma_star = arrhenius_scale(kin.gamma_star25, tleaf_c, kin.ha_gamma_star)
    km = kc * (1.0 + o2 / ko)
    if np.any(ci_arr + km <= 0):
        raise ValidationError("Ci + Km must be positive")
    ac = vcmax * (ci_arr - gamma_star) / (ci_arr + km)
    aj = j * (ci_arr - gamma_star) / (4.0 * ci_arr + 8.0 * gamma_star)
    if smooth_min_theta is None:
        a = np.minimum(ac, aj) - rd
    else:
        a = _smooth_min(ac, aj, smooth_min_theta) - rd
    return a if a.ndim else float(a)


@dataclass(frozen=True)
class AciPoint:
    ci: float   # umol mol-1
    a: float    # umol m-2 s-1


@dataclass(frozen=True)
class AciCurve:
    """One gas-exchange response curve measured at a single leaf temperature."""

    points: tuple
    leaf_temp_c: float
    par: float = 1600.0
    o2: float = O2_MBAR

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def ci(self) -> np.ndarray:
        return np.array([p.ci for p in self.points])

    @property
    def a(self) -> np.ndarray:
        return np.array([p.a for p in self.points])

    def validate(self, sample_id: str = "") -> "AciCurve":
        """Check the fitting preconditions, raising :class:`DataError`.

        Separating Rubisco- and RuBP-limited regimes needs points on both
        ends of the Ci range.
        """
        tag = f" (sample {sample_id})" if sample_id else ""
        ci, a = self.ci, self.a
        if len(self.points) < 6:
            raise DataError(f"A/Ci curve has {len(self.points)} points, need >= 6{tag}")
        if np.any(ci < 0) or not np.all(np.isfinite(ci)) or not np.all(np.isfinite(a)):
            raise DataError(f"A/Ci curve has invalid Ci or A values{tag}")
        if (ci < 250).sum() < 2:
            raise DataError(f"A/Ci curve needs >= 2 points with Ci < 250{tag}")
        if (ci > 500).sum() < 2:
            raise DataError(f"A/Ci curve needs >= 2 points with Ci > 500{tag}")
        return self


@dataclass(frozen=True)
class PhotoTraits:
    """Fitted photosynthetic capacity, referred to 25 degC."""

    vcmax25: float
    jmax25: float
    rd25: float
    fit_rmse: float = 0.0
    converged: bool = True

    def __post_init__(self):
        if not (self.vcmax25 > 0 and self.jmax25 > 0 and self.rd25 >= 0):
            raise ValidationError(
                f"traits must be positive (rd25 >= 0), got vcmax25={self.vcmax25}, "
                f"jmax25={self.jmax25}, rd25={self.rd25}"
            )
        lo, hi = TRAIT_PLAUSIBLE
        for name in ("vcmax25", "jmax25"):
            v = getattr(self, name)
            if not lo <= v <= hi:
                warnings.warn(
                    f"{name} = {v:.2f} outside plausible range [{lo}, {hi}]",
                    stacklevel=3,
                )


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 8
    max_iter: int = 200
    rel_step_tol: float = 1e-8
    seed: int = 0
    smooth_min_theta: Optional[float] = None   # e.g. 0.999; None = hard min
    vcmax_start_range: tuple = (20.0, 150.0)
    j_start_range: tuple = (40.0, 200.0)
    rd_start_range: tuple = (0.2, 3.0)
    # Stop trying further starts once a fit is this good (sum sq per point).
    early_stop_rmse: float = 1e-10


def generate_aci(
    traits: PhotoTraits,
    ci_values=CI_SEQUENCE,
    tleaf_c: float = 30.0,
    noise_sd: float = 0.0,
    seed: int = 0,
    kin: KineticConstants = BERNACCHI,
    o2: float = O2_MBAR,
    par: float = 1600.0,
) -> AciCurve:
    """Forward-model an A/Ci curve from known traits, plus Gaussian noise.

    Deterministic given ``seed``; the oracle counterpart of :func:`fit_aci`.
    """
    ci = np.asarray(ci_values, dtype=float)
    if ci.size == 0:
        raise ValidationError("ci_values must be nonempty")
    if noise_sd < 0:
        raise ValidationError("noise_sd must be >= 0")
    vcmax_t = arrhenius_scale(traits.vcmax25, tleaf_c, kin.ha_vcmax)
    j_t = arrhenius_scale(traits.jmax25, tleaf_c, kin.ha_jmax)
    rd_t = arrhenius_scale(traits.rd25, tleaf_c, kin.ha_rd)
    a = fvcb_assimilation(ci, vcmax_t, j_t, rd_t, kin=kin, tleaf_c=tleaf_c, o2=o2)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if noise_sd > 0:
        a = a + np.random.default_rng(seed).normal(0.0, noise_sd, size=a.size)
    points = tuple(AciPoint(float(c), float(v)) for c, v in zip(ci, a))
    return AciCurve(points=points, leaf_temp_c=tleaf_c, par=par, o2=o2)


def fit_aci(
    curve: AciCurve,
    kin: KineticConstants = BERNACCHI,
    opts: FitOptions = FitOptions(),
    sample_id: str = "",
) -> PhotoTraits:
    """Least-squares (Vcmax, J, Rd) from an A/Ci curve, reported at 25 degC.

    Parameters are fitted at leaf temperature in log space (which keeps
    them positive) with ``opts.n_starts`` log-uniform multi-starts, then
    converted via the Arrhenius factors. J at saturating light is reported
    as Jmax.
    """
    curve.validate(sample_id)
    ci = curve.ci
    a_obs = curve.a
    tleaf = curve.leaf_temp_c

    def residuals(log_params):
        # clip keeps wild line-search probes finite; |log x| < 30 covers
        # every physical value by many orders of magnitude
        vcmax, j, rd = np.exp(np.clip(log_params, -30.0, 30.0))
        model = fvcb_assimilation(
            ci, vcmax, j, rd, kin=kin, tleaf_c=tleaf, o2=curve.o2,
            smooth_min_theta=opts.smooth_min_theta,
        )
        return model - a_obs

    rng = np.random.default_rng(opts.seed)
    lo = np.log([opts.vcmax_start_range[0], opts.j_start_range[0], opts.rd_start_range[0]])
    hi = np.log([opts.vcmax_start_range[1], opts.j_start_range[1], opts.rd_start_range[1]])
    starts = lo + rng.random((opts.n_starts, 3)) * (hi - lo)

    best = None
    any_converged = False
    for x0 in starts:
        res = levenberg_least_squares(
            residuals, x0, max_iter=opts.max_iter, rel_step_tol=opts.rel_step_tol
        )
        any_converged = any_converged or res.converged
        if best is None or res.cost < best.cost:
            best = res
        if best.converged and math.sqrt(best.cost / ci.size) < opts.early_stop_rmse:
            break

    if best is None or not np.all(np.isfinite(best.x)) or not any_converged:
        raise FitError(
            f"A/Ci fit did not converge after {opts.n_starts} starts"
            f"{f' (sample {sample_id})' if sample_id else ''}: "
            f"best cost {best.cost if best else math.nan:.4g}"
        )

    vcmax_t, j_t, rd_t = np.exp(best.x)
    return PhotoTraits(
        vcmax25=to_25(vcmax_t, tleaf, kin.ha_vcmax),
        jmax25=to_25(j_t, tleaf, kin.ha_jmax),
        rd25=to_25(rd_t, tleaf, kin.ha_rd),
        fit_rmse=math.sqrt(best.cost / ci.size),
        converged=best.converged,
    )
