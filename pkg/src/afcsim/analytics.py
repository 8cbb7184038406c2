"""Closed-form efficiency formulas, matching algebra and decay fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnmatchedConfigError, ValidationError
from .medium import ToothShape

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EfficiencyModel:
    """Inputs of the cavity-echo efficiency formula.

    d_eff is the comb's period-averaged OD excluding the flat background d0,
    which enters as an extra per-pass intensity loss exp(-d0).
    """

    d_eff: float
    r_out: float
    loss: float = 0.0
    finesse: float = 10.0
    tooth_shape: ToothShape = ToothShape.SQUARE
    d0: float = 0.0

    def __post_init__(self):
        if self.d_eff < 0 or self.d0 < 0:
            raise ValidationError("optical depths must be non-negative")
        if not 0.0 <= self.r_out <= 1.0:
            raise ValidationError("r_out must lie in [0, 1]")
        if not 0.0 <= self.loss < 1.0:
            raise ValidationError("loss must lie in [0, 1)")
        if self.finesse < 1:
            raise ValidationError("comb finesse must be >= 1")
        if not isinstance(self.tooth_shape, ToothShape):
            object.__setattr__(self, "tooth_shape", ToothShape(self.tooth_shape))


@dataclass(frozen=True)
class DecayFit:
    eta0: float
    t2_eff: float      # us
    residual_norm: float

    def __post_init__(self):
        if not 0.0 <= self.eta0 <= 1.0:
            raise ValidationError("eta0 must lie in [0, 1]")
        if self.t2_eff <= 0:
            raise ValidationError("t2_eff must be positive")


def eta_dephasing(finesse: float, tooth_shape: ToothShape | str) -> float:
    """Comb-dephasing factor: sinc^2(pi/F) for square teeth, exp(-7/F^2) for Gaussian."""
    if finesse < 1:
        raise ValidationError("comb finesse must be >= 1")
    shape = ToothShape(tooth_shape)
    if shape is ToothShape.SQUARE:
        return float(np.sinc(1.0 / finesse) ** 2)  # np.sinc(x) = sin(pi x)/(pi x)
    return float(np.exp(-7.0 / finesse**2))


def eta_cavity(model: EfficiencyModel) -> float:
    """Cavity-echo efficiency 4 d^2 e^{-2d} R eta_deph / (1 - R e^{-2d})^2.

    The lumped round-trip loss (and any flat background OD) replaces R_out by
    an effective back reflectivity.
    """
    r_eff = (model.r_out - model.loss) * np.exp(-2.0 * model.d0)
    if r_eff <= 0:
        raise ValidationError("loss exceeds the back-mirror reflectivity")
    d = model.d_eff
    x = np.exp(-2.0 * d)
    deph = eta_dephasing(model.finesse, model.tooth_shape)
    return float(4.0 * d * d * x * r_eff * deph / (1.0 - r_eff * x) ** 2)


def eta_forward(d_eff: float, deph: float = 1.0, d0: float = 0.0) -> float:
    """Single-pass forward-recall efficiency d^2 e^{-d} eta_deph e^{-d0}."""
    if d_eff < 0:
        raise ValidationError("d_eff must be non-negative")
    return float(d_eff**2 * np.exp(-d_eff) * deph * np.exp(-d0))


def impedance_matched_depth(r_in: float, r_out: float, loss: float = 0.0) -> float:
    """Average OD solving the matching condition: 0.5 ln((R_out - eps)/R_in)."""
    r_eff = r_out - loss
    if r_in <= 0:
        raise UnmatchedConfigError("input mirror must have non-zero reflectivity")
    if r_in > r_eff:
        raise UnmatchedConfigError(
            f"R_in = {r_in:.3g} exceeds R_out - eps = {r_eff:.3g}: cannot be matched"
        )
    return float(0.5 * np.log(r_eff / r_in))


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-6) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal function."""
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


@dataclass(frozen=True)
class DepthOptimum:
    d_eff: float
    eta: float
    degenerate: bool = False


def optimize_depth(r_out: float, loss: float, finesse: float,
                   tooth_shape: ToothShape | str = ToothShape.SQUARE) -> DepthOptimum:
    """Average OD maximizing the cavity-echo efficiency over (0, 5]."""
    shape = ToothShape(tooth_shape)
    if r_out - loss <= 0:
        return DepthOptimum(d_eff=0.0, eta=0.0, degenerate=True)

    def objective(d):
        return eta_cavity(EfficiencyModel(d_eff=d, r_out=r_out, loss=loss,
                                          finesse=finesse, tooth_shape=shape))

    # tighter than the 1e-6 contract so the optimum is stationary to <1e-6
    d_star, eta_star = golden_section_max(objective, 1e-9, 5.0, tol=1e-9)
    return DepthOptimum(d_eff=float(d_star), eta=float(eta_star))


def optimize_forward_depth(deph: float = 1.0, d0: float = 0.0) -> DepthOptimum:
    """Average OD maximizing the single-pass forward efficiency over (0, 5]."""
    d_star, eta_star = golden_section_max(lambda d: eta_forward(d, deph, d0),
                                          1e-9, 5.0, tol=1e-9)
    return DepthOptimum(d_eff=float(d_star), eta=float(eta_star))


def fit_decay(points: list[tuple[float, float]]) -> DecayFit:
    """Fit eta(tau) = eta0 exp(-4 tau / T2_eff) by linear regression on ln(eta).

    The model is exactly linear in log space, so no iteration is needed.
    """
    if len(points) < 2:
        raise ValidationError("need at least two points to fit a decay")
    tau = np.array([p[0] for p in points], dtype=float)
    eta = np.array([p[1] for p in points], dtype=float)
    if np.any(eta <= 0):
        raise ValidationError("decay fit requires strictly positive efficiencies")
    if np.ptp(tau) <= 0:
        raise ValidationError("decay fit requires distinct storage times")
    slope, intercept = np.polyfit(tau, np.log(eta), 1)
    if slope >= 0:
        raise ValidationError("efficiencies do not decay with storage time")
    residual = np.log(eta) - (slope * tau + intercept)
    return DecayFit(eta0=float(np.exp(intercept)), t2_eff=float(-4.0 / slope),
                    residual_norm=float(np.linalg.norm(residual)))
