"""Functions on the periodic unit square and their link to N x N images.

* sampling ``f[k] = 2^{2J} int f(x) phi(2^J x - k) dx`` by composite
  Gauss-Legendre quadrature,
* the interpolant ``u_J(x) = sum_k u[k] phi(2^J x - k)``,
* quadrature L2 distances, Bessel-ratio checks for the scaled B-spline
  shifts, and a truncated estimate of the framelet decay constant ``C_f``.

``phi`` is the cardinal tensor B-spline of order ``n`` supported on
``[0, n)^2``, optionally translated by an integer ``shift`` (the refinable
function of the order-``r`` filter bank is the one with ``shift = r // 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .framelets import FilterBank
from .transform import analyze, coefficient_index


def bspline(t, order: int) -> np.ndarray:
    """Cardinal B-spline of order ``order`` on ``[0, order)`` (Cox-de Boor)."""
    t = np.asarray(t, dtype=float)
    if order < 1:
        raise ValueError("order must be >= 1")
    # vals[j] holds N_k(t - j) while k climbs from 1 to order
    vals = [((t >= j) & (t < j + 1)).astype(float) for j in range(order)]
    for k in range(2, order + 1):
        vals = [((t - j) * vals[j] + (j + k - t) * vals[j + 1]) / (k - 1)
                for j in range(order - k + 1)]
    return vals[0]


@dataclass(frozen=True)
class PeriodicFunction:
    """Real function on ``[0, 1)^2`` extended periodically.

    ``evaluator(x1, x2)`` must broadcast over array arguments.  ``grid`` is an
    optional fast path for tensor grids returning shape ``(len(x1), len(x2))``.
    """

    evaluator: Callable
    name: str = ""
    smoothness: str = ""
    M: float = 1.0
    grid: Callable | None = field(default=None, compare=False)

    def __call__(self, x1, x2) -> np.ndarray:
        return self.evaluator(np.mod(x1, 1.0), np.mod(x2, 1.0))

    def on_grid(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.grid is not None:
            return self.grid(np.mod(x1, 1.0), np.mod(x2, 1.0))
        return np.broadcast_to(self(x1[:, None], x2[None, :]), (x1.size, x2.size))


@dataclass(frozen=True)
class BsplineScaler:
    """``phi(2^J x - k)`` with periodic wrap on the unit square."""

    order_n: int
    level_J: int
    shift: int = 0

    def __post_init__(self):
        if self.order_n < 1:
            raise ValueError("order_n must be >= 1")
        if 2**self.level_J < self.order_n:
            raise ValueError(f"2^J = {2**self.level_J} is smaller than the spline order {self.order_n}")

    @property
    def n_cells(self) -> int:
        return 2**self.level_J

    def phi(self, t) -> np.ndarray:
        return bspline(np.asarray(t, dtype=float) + self.shift, self.order_n)

    def basis_matrix(self, x) -> np.ndarray:
        """``B[i, k] = phi(2^J x_i - k)`` with periodic wrap, shape ``(len(x), 2^J)``."""
        x = np.asarray(x, dtype=float).ravel()
        n = self.n_cells
        t = np.mod(n * x[:, None] - np.arange(n)[None, :] + self.shift, n)
        return bspline(t, self.order_n)

    def __call__(self, x1, x2, k=(0, 0)) -> np.ndarray:
        """Periodized ``phi(2^J x - k)`` at the points ``(x1, x2)``."""
        n = self.n_cells
        t1 = np.mod(n * np.asarray(x1, dtype=float) - k[0] + self.shift, n)
        t2 = np.mod(n * np.asarray(x2, dtype=float) - k[1] + self.shift, n)
        return bspline(t1, self.order_n) * bspline(t2, self.order_n)


def gauss_grid(cells: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[0, 1)``."""
    if order < 2:
        raise ValueError(f"quadrature order must be >= 2, got {order}")
    if cells < 1:
        raise ValueError("cells must be >= 1")
    xg, wg = np.polynomial.legendre.leggauss(order)
    h = 1.0 / cells
    left = np.arange(cells)[:, None] * h
    nodes = (left + (xg[None, :] + 1.0) * h / 2.0).ravel()
    weights = np.tile(wg * h / 2.0, cells)
    return nodes, weights


def sample_image(f: PeriodicFunction, phi: BsplineScaler, quad_order: int = 4,
                 refine: int = 1) -> np.ndarray:
    """Samples ``f[k] = 2^{2J} int f(x) phi(2^J x - k) dx`` on the ``2^J x 2^J`` grid.

    Quadrature runs over ``refine`` subcells of every level-``J`` cell with
    ``quad_order`` Gauss points per axis each.
    """
    n = phi.n_cells
    x, w = gauss_grid(n * refine, quad_order)
    bw = phi.basis_matrix(x) * w[:, None]
    vals = f.on_grid(x, x)
    return n**2 * (bw.T @ vals @ bw)


def interpolate(u, phi: BsplineScaler) -> PeriodicFunction:
    """``u_J = sum_k u[k] phi(2^J . - k)`` as a periodic function."""
    u = np.array(u, dtype=float)
    n = phi.n_cells
    if u.shape != (n, n):
        raise ValueError(f"expected a {n} x {n} image for J = {phi.level_J}, got {u.shape}")

    def pointwise(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        out = np.zeros(x1.shape)
        s1, s2 = n * x1 + phi.shift, n * x2 + phi.shift
        base1, base2 = np.floor(s1).astype(int), np.floor(s2).astype(int)
        # only k with k <= s < k + n contribute
        for j1 in range(phi.order_n):
            k1 = base1 - j1
            b1 = bspline(s1 - k1, phi.order_n)
            for j2 in range(phi.order_n):
                k2 = base2 - j2
                out += u[k1 % n, k2 % n] * b1 * bspline(s2 - k2, phi.order_n)
        return out

    def grid(x1, x2):
        return phi.basis_matrix(x1) @ u @ phi.basis_matrix(x2).T

    return PeriodicFunction(pointwise, name="interpolant", smoothness=f"spline{phi.order_n}",
                            M=float(np.max(np.abs(u), initial=0.0)), grid=grid)


def l2_distance(f: PeriodicFunction, g: PeriodicFunction, level: int,
                cells: int | None = None, order: int = 4) -> float:
    """``||f - g||_{L2}`` by composite Gauss-Legendre quadrature.

    ``cells`` per axis defaults to ``4 * 2^level``; fewer is rejected.
    """
    minimum = 4 * 2**level
    cells = minimum if cells is None else cells
    if cells < minimum:
        raise ValueError(f"need at least {minimum} quadrature cells per axis, got {cells}")
    x, w = gauss_grid(cells, order)
    diff = f.on_grid(x, x) - g.on_grid(x, x)
    return float(np.sqrt(w @ diff**2 @ w))


def _cell_integrals(phi: BsplineScaler, sub: int) -> np.ndarray:
    """``G[c, k] = int_{cell c} phi(2^J x - k) dx`` over ``2^J sub`` equal cells (exact)."""
    cells = phi.n_cells * sub
    x, w = gauss_grid(cells, max(2, phi.order_n))
    b = phi.basis_matrix(x) * w[:, None]
    return b.reshape(cells, -1, phi.n_cells).sum(axis=1)


def _gram(phi: BsplineScaler) -> np.ndarray:
    """``Gamma[k, k'] = int phi(2^J x - k) phi(2^J x - k') dx`` on the periodic interval."""
    x, w = gauss_grid(phi.n_cells, max(2, phi.order_n))
    b = phi.basis_matrix(x)
    return b.T @ (b * w[:, None])


def analysis_bessel_ratio(u_fine, phi: BsplineScaler) -> float:
    """``sum_k |<u, phi(2^J . - k)>|^2`` over ``n^2 2^{-2J} ||u||^2``.

    ``u_fine`` is piecewise constant on a uniform grid whose size is a
    multiple of ``2^J``; the inner products are then exact.
    """
    u = np.asarray(u_fine, dtype=float)
    size = u.shape[0]
    if u.shape != (size, size) or size % phi.n_cells:
        raise ValueError("u_fine must be square with side a multiple of 2^J")
    norm2 = float(np.sum(u**2)) / size**2
    if norm2 == 0.0:
        return 0.0
    g = _cell_integrals(phi, size // phi.n_cells)
    lhs = float(np.sum((g.T @ u @ g) ** 2))
    return lhs / (phi.order_n**2 / 4.0**phi.level_J * norm2)


def synthesis_bessel_ratio(u, phi: BsplineScaler) -> float:
    """``||sum_k u[k] phi(2^J . - k)||^2_{L2}`` over ``n^2 2^{-2J} ||u||_2^2``."""
    u = np.asarray(u, dtype=float)
    norm2 = float(np.sum(u**2))
    if norm2 == 0.0:
        return 0.0
    gam = _gram(phi)
    lhs = float(np.sum(u * (gam @ u @ gam)))
    return lhs / (phi.order_n**2 / 4.0**phi.level_J * norm2)


class BesselRatios(NamedTuple):
    analysis: float
    synthesis: float


def bessel_check(phi: BsplineScaler, trials: int, seed=0, sub: int = 4) -> BesselRatios:
    """Largest Bessel ratios over ``trials`` random inputs (both must be <= 1)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = phi.n_cells
    worst_a = worst_s = 0.0
    for _ in range(trials):
        worst_a = max(worst_a, analysis_bessel_ratio(rng.standard_normal((n * sub, n * sub)), phi))
        worst_s = max(worst_s, synthesis_bessel_ratio(rng.standard_normal((n, n)), phi))
    return BesselRatios(worst_a, worst_s)


def framelet_l1_norms(bank: FilterBank, cells_per_unit: int = 2048) -> np.ndarray:
    """``||psi_a||_{L1(R)}`` for each univariate framelet ``psi_a = 2 sum_j a[j] phi(2 . - j)``.

    The 2-D norm of band ``(a1, a2)`` is the product of two entries.
    """
    r = bank.order
    s = r // 2
    lo = -s - 1
    width = r + 2
    # cells align with the half-integer breakpoints of psi
    x, w = gauss_grid(width * cells_per_unit, 4)
    x = lo + width * x
    w = width * w
    out = []
    for f in bank.filters:
        psi = sum(2.0 * t * bspline(2.0 * x - k + s, r) for t, k in zip(f.taps, f.support))
        out.append(float(w @ np.abs(psi)))
    return np.array(out)


class DecayEstimate(NamedTuple):
    value: float
    cutoff: int
    tail_bound: float
    per_level: tuple[float, ...]


def estimate_decay_constant(f: PeriodicFunction, beta: float, J: int, L: int,
                            bank: FilterBank, cutoff: int, quad_order: int = 4) -> DecayEstimate:
    """Truncated ``C_f = sum_{l=J-L}^{cutoff} 2^{beta l} sum_{k, a in B} |<f, psi_{a,l,k}>|``.

    Coefficients come from the undecimated transform of ``f`` sampled at
    ``J' = cutoff + 1``.  At level ``l`` with ``s = max(l, J)`` one has
    ``<f, psi_{a,l,k}> = 2^{-s} (W_{J'-1-l, a} f^{J'})[2^{J'-s} k]``.

    ``tail_bound`` bounds the first omitted level through
    ``|<f, psi_{a,l,k}>| <= 2^{-l} M ||psi_a||_1``.  Summing that bound over
    all omitted levels diverges for ``beta >= -1``, so it is not a bound on
    the full remainder.
    """
    if L < 1 or L >= J:
        raise ValueError(f"need 1 <= L < J, got L = {L}, J = {J}")
    if cutoff < J - L:
        raise ValueError(f"cutoff {cutoff} is below the coarsest level J - L = {J - L}")
    r = bank.order
    fine = cutoff + 1
    levels = fine - (J - L)
    phi = BsplineScaler(r, fine, shift=r // 2)
    samples = sample_image(f, phi, quad_order=quad_order)
    coeffs = analyze(samples, bank, levels)
    per_level = []
    for l in range(J - L, cutoff + 1):
        i = fine - 1 - l
        s = max(l, J)
        stride = 2 ** (fine - s)
        total = 0.0
        for p, (lev, alpha) in enumerate(coefficient_index(r, levels)):
            if lev == i and alpha != (0, 0):
                total += np.abs(coeffs.planes[p][::stride, ::stride]).sum()
        per_level.append(2.0 ** (beta * l) * 2.0**-s * total)
    norms = framelet_l1_norms(bank)
    psi_max = max(norms[a1] * norms[a2] for a1 in range(r + 1) for a2 in range(r + 1)
                  if (a1, a2) != (0, 0))
    nxt = cutoff + 1
    n_bands = (r + 1) ** 2 - 1
    count = 4.0 ** max(nxt, J)
    tail = 2.0 ** (beta * nxt) * n_bands * count * 2.0**-nxt * f.M * psi_max
    return DecayEstimate(float(sum(per_level)), cutoff, float(tail), tuple(per_level))


# -- test-function catalog --------------------------------------------------

def _constant(M):
    return PeriodicFunction(lambda x1, x2: np.full(np.broadcast(x1, x2).shape, M / 2.0),
                            "constant", "smooth", M)


def _ramp_jumps(M):
    # linear ramp in x1 (jump at the periodic seam) plus a raised band with
    # edges at dyadic positions, values in [0.1 M, 0.95 M)
    def ev(x1, x2):
        band = ((x2 >= 0.25) & (x2 < 0.625) & (x1 >= 0.375)).astype(float)
        return M * (0.1 + 0.6 * x1 + 0.25 * band)
    return PeriodicFunction(ev, "ramp_jumps", "piecewise_linear", M)


def _smooth_bump(M):
    return PeriodicFunction(lambda x1, x2: M * np.sin(np.pi * x1) ** 2 * np.sin(np.pi * x2) ** 2,
                            "smooth_bump", "smooth", M)


CATALOG = {"constant": _constant, "ramp_jumps": _ramp_jumps, "smooth_bump": _smooth_bump}


def catalog_function(name: str, M: float = 1.0) -> PeriodicFunction:
    try:
        return CATALOG[name](float(M))
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(CATALOG)}") from None
