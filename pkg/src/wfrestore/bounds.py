"""Closed-form error bounds, discrete total variation and the TV/frame inequality.

All quantities are plain arithmetic on a :class:`BoundParams` record.  The
exponent helpers ``b = max(1 - beta, 1)`` and ``min(1 + beta, 1)`` are written
as ``1 - min(beta, 0)`` and ``1 + min(beta, 0)`` so no branch depends on a
floating-point comparison against 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product
from math import comb, log, log2, sqrt
from typing import NamedTuple

import numpy as np

from .framelets import FilterBank
from .transform import LambdaWeights, analyze, highpass_l1, weighted_l1


@dataclass(frozen=True)
class BoundParams:
    """Constants entering the sampling error bounds.

    ``omega`` is the pixel count ``|Omega| = N^2``; ``norm_inf`` and
    ``sigma_min`` are the operator constants ``||A||_inf`` and ``sigma_min(A)``.
    """

    M: float = 1.0
    beta: float = 0.0
    a: float = 1.0
    C_W: float = 12.0
    C_f: float = 1.0
    sigma_min: float = 1.0
    norm_inf: float = 1.0
    rho: float = 1.0
    eta: float = 0.0
    omega: int = 2**10

    def __post_init__(self):
        if not -1.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (-1, 1), got {self.beta}")
        if self.a < 1:
            raise ValueError(f"a must be >= 1, got {self.a}")
        for name in ("M", "C_W", "sigma_min", "norm_inf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.C_f < 0 or self.eta < 0:
            raise ValueError("C_f and eta must be non-negative")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.omega < 2:
            raise ValueError("omega must be at least 2")

    @property
    def b(self) -> float:
        return 1.0 - min(self.beta, 0.0)

    @property
    def decay_exponent(self) -> float:
        """``min(1 + beta, 1)``."""
        return 1.0 + min(self.beta, 0.0)

    @property
    def frame_factor(self) -> float:
        """``(4a + b) C_W C_f (1 + C_W C_f)``, shared by every bound."""
        cwcf = self.C_W * self.C_f
        return (4.0 * self.a + self.b) * cwcf * (1.0 + cwcf)

    def replace(self, **kw) -> "BoundParams":
        return BoundParams(**{**asdict(self), **kw})


def discrete_tv(u) -> float:
    """Anisotropic TV with forward differences and no wraparound."""
    u = np.asarray(u, dtype=float)
    return float(np.abs(np.diff(u, axis=0)).sum() + np.abs(np.diff(u, axis=1)).sum())


def lemma1_constant(order_r: int) -> float:
    """``C_W = max(6 max_{alpha in B} sqrt(binom(r, a1) binom(r, a2)), 1)``."""
    if order_r < 1:
        raise ValueError("order must be >= 1")
    best = max(sqrt(comb(order_r, a1) * comb(order_r, a2))
               for a1, a2 in product(range(order_r + 1), repeat=2) if (a1, a2) != (0, 0))
    return max(6.0 * best, 1.0)


def check_lemma1(u, bank: FilterBank, levels: int) -> tuple[float, float, bool]:
    """Return ``(tv, l1, tv <= C_W * l1)`` with the unweighted high-pass norm."""
    tv = discrete_tv(u)
    l1 = highpass_l1(analyze(u, bank, levels))
    return tv, l1, bool(tv <= lemma1_constant(bank.order) * l1)


def ctilde(p: BoundParams) -> float:
    """Leading constant of the sampling bound."""
    pre = 64.0 * p.norm_inf**2 * p.M**2 / (3.0 * p.sigma_min**2)
    return pre * (4.0 + 3.0 * sqrt(5.0 * p.frame_factor))


class Theorem2Bound(NamedTuple):
    value: float
    ctilde: float
    sampling_term: float
    noise_term: float


def theorem2_bound(p: BoundParams) -> Theorem2Bound:
    """Right-hand side of the high-probability bound on ``||u - f||^2 / |Omega|``.

    ``c~ rho^{-1/2} |Omega|^{-min(1+beta,1)/4} (log2 |Omega|)^{3/2} + (16/3) eta^2 / sigma_min^2``
    """
    c = ctilde(p)
    sampling = (c * p.rho**-0.5 * p.omega ** (-p.decay_exponent / 4.0)
                * log2(p.omega) ** 1.5)
    noise = 16.0 / 3.0 * p.eta**2 / p.sigma_min**2
    return Theorem2Bound(sampling + noise, c, sampling, noise)


def _eq15_coefficients(p: BoundParams) -> tuple[float, float]:
    k1 = (240.0 * p.norm_inf**2 * p.M**2 * p.frame_factor * p.omega ** (p.b / 2.0)
          * log2(p.omega) / p.sigma_min**2)
    k2 = 3.0 * p.sigma_min**2 / (256.0 * p.norm_inf**2 * p.M**2)
    return k1, k2


def eq15_residual(p: BoundParams, m: int, eps: float, relative: bool = True) -> float:
    """Residual of ``K2 m eps - K1 / eps = ln |Omega|`` at ``eps``.

    Relative mode divides by ``ln |Omega|``.
    """
    k1, k2 = _eq15_coefficients(p)
    res = k1 / eps - k2 * m * eps + log(p.omega)
    return res / log(p.omega) if relative else res


def epsilon_star(p: BoundParams, m: int) -> float:
    """Unique positive root of the tail-probability equation in ``eps``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ln = log(p.omega)
    pre = 128.0 * p.norm_inf**2 * p.M**2 / (3.0 * m * p.sigma_min**2)
    inner = ln**2 + 45.0 / 4.0 * m * p.frame_factor * p.omega ** (p.b / 2.0) * log2(p.omega)
    return pre * (ln + sqrt(inner))


def covering_constant(p: BoundParams) -> float:
    """``C_a = 20 M (4a + b) C_W C_f (1 + C_W C_f)``."""
    return 20.0 * p.M * p.frame_factor


def covering_bound(p: BoundParams, radius: float) -> float:
    """Upper bound on the log covering number at sup-norm radius ``radius``."""
    threshold = p.omega ** (-p.a)
    if radius < threshold:
        raise ValueError(f"radius {radius:g} below the admissible minimum |Omega|^-a = {threshold:g}")
    return covering_constant(p) * p.omega ** (p.b / 2.0) / radius * log2(p.omega)


def empirical_error(u, f) -> float:
    """Mean squared error ``||u - f||_2^2 / |Omega|``."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if u.shape != f.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {f.shape}")
    return float(np.mean((u - f) ** 2))


def estimate_cf_from_image(f, weights: LambdaWeights, bank: FilterBank, levels: int) -> float:
    """Smallest ``C_f`` with ``||lambda . W f||_1 <= C_f |Omega|^{1/2}``."""
    f = np.asarray(f, dtype=float)
    return weighted_l1(analyze(f, bank, levels), weights) / sqrt(f.size)


def bounds_table(p: BoundParams, m: int | None = None, radius: float = 1.0) -> dict[str, float]:
    """Every derived quantity, keyed by name, for reporting."""
    if m is None:
        m = max(1, int(round(p.rho * p.omega)))
    t2 = theorem2_bound(p)
    row = {k: float(v) for k, v in asdict(p).items()}
    row.update(b=p.b, m=float(m), ctilde=t2.ctilde, epsilon_star=epsilon_star(p, m),
               theorem2_bound=t2.value, theorem2_sampling_term=t2.sampling_term,
               theorem2_noise_term=t2.noise_term, covering_constant=covering_constant(p),
               covering_radius=radius, covering_bound=covering_bound(p, radius))
    return row
