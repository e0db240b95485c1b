"""Closed-form overlap densities for the real (n = 2) and singular variants.

The real spiked case has a closed two-term Gauss-hypergeometric density for
n = 2; its largest-overlap twin is the reflection z -> 1 - z.  The singular
case (m < n) has closed forms for m = 1 and for n - m = 1; the singular
largest-overlap density is a single half-line integral evaluated with the
same orthogonal-polynomial kernel machinery as the complex engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import numkit, specfun
from ._kernels import discrete_orthogonal_basis
from .spike_density import (
    THETA_EPS,
    DomainError,
    SpikedModel,
    ThetaZeroSingularity,
    UnsupportedModel,
    _PRESETS,
    _as_z_array,
    _cache_put,
    _clip_density,
    _ENGINE_CACHE,
)


@dataclass(frozen=True)
class VariantParams:
    """A model checked against the closed-form variant coverage.

    The real spiked path only exists for n = 2; the singular closed forms
    cover m = 1 and n - m = 1.
    """

    model: SpikedModel

    def __post_init__(self):
        m = self.model
        if m.variant == "real" and m.n != 2:
            raise UnsupportedModel("real spiked densities are implemented for n = 2")
        if m.variant == "singular" and not (m.m == 1 or m.n - m.m == 1):
            raise UnsupportedModel("singular closed forms cover m = 1 or n - m = 1")
        if m.variant == "complex":
            raise UnsupportedModel("variant densities cover the real and singular cases")


def pdf_w1_real(model: SpikedModel, z) -> float | np.ndarray:
    """Smallest-overlap density for the real spiked case with n = 2.

    Carries the arcsine-type z^(-1/2) (1-z)^(-1/2) endpoint singularities;
    at theta = 0 it reduces to the arcsine law 1/(pi sqrt(z(1-z))).
    """
    if model.variant != "real" or model.n != 2:
        raise UnsupportedModel("real overlap density is implemented for n = 2")
    if model.m < 2:
        raise UnsupportedModel("real overlap density requires m >= 2")
    z = _as_z_array(z)
    scalar = z.ndim == 0
    zz = np.atleast_1d(z).astype(float)
    if np.any(zz <= 0) or np.any(zz >= 1):
        raise DomainError("real overlap density needs z strictly inside (0, 1)")
    m, beta = model.m, model.beta
    u = (1.0 - beta * zz) / (1.0 - beta * (1.0 - zz))
    h1 = specfun.gauss_2f1(m, (m - 1.0) / 2.0, (m + 1.0) / 2.0, -u)
    h2 = specfun.gauss_2f1(m, (m + 1.0) / 2.0, (m + 3.0) / 2.0, -u)
    pref = 2.0 ** (m - 1.0) * (m - 1.0) / (math.pi * (1.0 + model.theta) ** (m / 2.0))
    out = (
        pref
        * zz ** (-0.5)
        * (1.0 - zz) ** (-0.5)
        * (1.0 - beta * (1.0 - zz)) ** (-float(m))
        * (h1 / (m - 1.0) - h2 / (m + 1.0))
    )
    out = _clip_density(out)
    return float(out[0]) if scalar else out


def pdf_w2_real(model: SpikedModel, z) -> float | np.ndarray:
    """Largest-overlap density for the real n = 2 case: the z -> 1-z mirror."""
    z = np.asarray(z, dtype=float)
    return pdf_w1_real(model, 1.0 - z)


def pdf_y1_singular(model: SpikedModel, z) -> float | np.ndarray:
    """Smallest-positive-overlap density for the singular case.

    Closed forms exist for m = 1 (any theta >= 0) and for n - m = 1
    (theta > 0; the coefficients carry beta poles).
    """
    if model.variant != "singular":
        raise UnsupportedModel("y1_sing requires the singular variant")
    z = _as_z_array(z)
    scalar = z.ndim == 0
    zz = np.atleast_1d(z).astype(float)
    n, m, beta = model.n, model.m, model.beta
    if m == 1:
        out = (n - 1.0) * (1.0 - zz) ** (n - 2) / (
            (1.0 + model.theta) * (1.0 - beta * zz) ** float(n)
        )
    elif n - m == 1:
        if model.theta < THETA_EPS:
            raise ThetaZeroSingularity("n - m = 1 coefficients have a pole at theta = 0")
        acc = np.zeros_like(zz)
        for ell in range(m - 1):
            for k in range(m - 1 - ell):
                log_a = (
                    gammaln(m - ell + 1.0)
                    + (m - 2.0 - ell) * math.log(beta)
                    - math.log(k + 2.0)
                    - gammaln(k + 1.0)
                    - gammaln(m - 1.0 - ell - k)
                    - (k + 2.0) * math.log(m - beta)
                )
                sign = -1.0 if ell % 2 else 1.0
                acc += (
                    sign
                    * math.exp(log_a)
                    * (1.0 - zz) ** (m - 2 - ell)
                    / (1.0 - (1.0 - zz) * beta) ** (m - ell + 1.0)
                )
        acc += (-1.0) ** (m - 1) / (m - beta * zz) ** 2
        out = m * (1.0 - beta) ** m / beta ** (m - 1.0) * acc
    else:
        raise UnsupportedModel("closed singular forms cover m = 1 or n - m = 1 only")
    out = _clip_density(out)
    return float(out[0]) if scalar else out


def _yn_prepare(model: SpikedModel, preset: str):
    key = (model, preset, "yn")
    if key in _ENGINE_CACHE:
        return _ENGINE_CACHE[key]
    p = _PRESETS[preset]
    m, beta = model.m, model.beta
    d = m - 2
    power = m * m
    lam = max(1.0 - beta, 1e-3)
    x, wx = numkit.halfline_grid(lam, power_hint=power + 2.0 * m, nodes_per_panel=p["x_nodes"])
    levels = int(np.clip(math.ceil(math.log2(max(x[-1], 2.0))), 2, 40))
    t, wt = numkit.unit_grid(p["t_nodes"], grade_left=levels)

    # det[t A^(1) - A^(2)] factorizes over the weight t (1-t)^2 e^{-x t};
    # det[A^(0)] is the plain Hankel of (1-t)^2 e^{-x t} and reduces to the
    # product of its orthogonal-polynomial norms.
    log_c1, _, _, p_deg = discrete_orthogonal_basis(x, t, wt, 1.0, d)
    log_a0, _, _, _ = discrete_orthogonal_basis(x, t, wt, 0.0, m - 1)

    logpref = (
        m * math.log1p(-beta)
        + (1.0 - m) * math.log(beta)
        - 2.0 * sum(math.lgamma(m - j + 1.0) for j in range(1, m + 1))
    )
    base = logpref + power * np.log(x) - x + np.log(wx)
    prep = dict(
        x=x, t=t, wt=wt, p_deg=p_deg, log_c1=log_c1, log_a0=log_a0,
        base=base, beta=beta, m=m,
    )
    return _cache_put(key, prep)


def _pdf_yn_grid(model: SpikedModel, zs: np.ndarray, preset: str) -> np.ndarray:
    prep = _yn_prepare(model, preset)
    x, t, wt, p_deg = prep["x"], prep["t"], prep["wt"], prep["p_deg"]
    log_c1, log_a0, base = prep["log_c1"], prep["log_a0"], prep["base"]
    beta, m = prep["beta"], prep["m"]
    sign_m = (-1.0) ** (m - 1)
    log_t_weight = np.log(wt) + 2.0 * np.log1p(-t)
    out = np.empty(zs.size)
    for i, z in enumerate(zs):
        q = 1.0 - (1.0 - z) * beta
        logw2 = log_t_weight[None, :] - q * x[:, None] * t[None, :]
        shift2 = np.max(logw2, axis=1)
        s_t = np.einsum("xq,xq->x", np.exp(logw2 - shift2[:, None]), p_deg)
        log_j = log_c1 + shift2 + np.log(np.maximum(np.abs(s_t), 1e-320))
        sign_j = np.sign(s_t)
        mshift = np.maximum(log_j, log_a0)
        bracket = sign_j * np.exp(log_j - mshift) + sign_m * np.exp(log_a0 - mshift)
        logterm = base + beta * x * z + mshift
        top = np.max(logterm)
        out[i] = float(np.dot(bracket, np.exp(logterm - top))) * math.exp(top)
    return out


def pdf_yn_singular(model: SpikedModel, z, preset: str = "fine") -> float | np.ndarray:
    """Largest-overlap density for the singular case with n - m = 1.

    A single half-line integral whose integrand combines the inner kernel
    integral with a pure Hankel determinant term; the empty determinant at
    m = 2 is 1 by convention.
    """
    if model.variant != "singular":
        raise UnsupportedModel("yn_sing requires the singular variant")
    if model.n - model.m != 1 or model.m < 2:
        raise UnsupportedModel("yn_sing is implemented for n - m = 1 with m >= 2")
    if model.theta < THETA_EPS:
        raise ThetaZeroSingularity("yn_sing has a beta pole at theta = 0")
    z = _as_z_array(z)
    scalar = z.ndim == 0
    out = _clip_density(_pdf_yn_grid(model, np.atleast_1d(z).astype(float), preset))
    return float(out[0]) if scalar else out
