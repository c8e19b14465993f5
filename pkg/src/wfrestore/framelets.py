"""Tensor-product B-spline tight framelet filter banks.

Univariate masks of order ``r`` come from the closed form

    a_0     = 2^-r p^r
    a_alpha = (-1)^(alpha+1) 2^-r sqrt(binom(r, alpha)) p^(r-alpha) * q^alpha

with ``p = [1, 1]`` (average) and ``q = [1, -1]`` (difference).  Every mask
of a bank shares the same support ``{-floor(r/2), ..., r - floor(r/2)}``, so
the r = 2 bank is the familiar piecewise linear system

    a_0 = [1, 2, 1] / 4,  a_1 = sqrt(2)/4 [1, 0, -1],  a_2 = [-1, 2, -1] / 4.

Two-dimensional masks are tensor products ``a_(a1,a2)[k] = a_a1[k1] a_a2[k2]``
where ``k1`` runs along array axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb, sqrt

import numpy as np

PRESETS = {"haar": 1, "linear": 2, "quadratic": 3, "cubic": 4}


@dataclass(frozen=True)
class Filter1D:
    """Finite real filter.

    ``offset`` is the position of the k = 0 tap inside ``taps``, so the tap
    stored at ``taps[i]`` belongs to index ``k = i - offset``.
    """

    taps: np.ndarray
    offset: int

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.taps)) - self.offset

    def __getitem__(self, k: int) -> float:
        i = k + self.offset
        if 0 <= i < len(self.taps):
            return float(self.taps[i])
        return 0.0

    def fourier(self, xi) -> np.ndarray:
        """Fourier series ``sum_k a[k] exp(-i xi k)`` at the points ``xi``."""
        xi = np.asarray(xi, dtype=float)
        return np.exp(-1j * np.multiply.outer(xi, self.support)) @ self.taps


@dataclass(frozen=True)
class Filter2D:
    taps: np.ndarray
    offset: tuple[int, int]

    @property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.arange(self.taps.shape[0]) - self.offset[0],
                np.arange(self.taps.shape[1]) - self.offset[1])


@dataclass(frozen=True)
class LevelFilter:
    level: int
    band: tuple[int, int]
    taps2d: np.ndarray
    offset: tuple[int, int]
    rows: Filter1D
    cols: Filter1D


@dataclass(frozen=True)
class FilterBank:
    order: int
    filters: tuple[Filter1D, ...]

    @property
    def nfilters(self) -> int:
        return len(self.filters)

    def bands(self, include_lowpass: bool = False) -> list[tuple[int, int]]:
        """Band indices in lexicographic order; ``(0, 0)`` only on request."""
        allb = list(product(range(self.order + 1), repeat=2))
        if include_lowpass:
            return allb
        return allb[1:]

    def __iter__(self):
        return iter(self.filters)


def _power(x: np.ndarray, k: int) -> np.ndarray:
    out = np.array([1.0])
    for _ in range(k):
        out = np.convolve(out, x)
    return out


def bspline_bank(order_r: int | str) -> FilterBank:
    """Build the UEP filter bank of the B-spline of order ``order_r``.

    Parameters
    ----------
    order_r : int or str
        Spline order ``r >= 1``, or one of the preset names ``haar``,
        ``linear``, ``quadratic``, ``cubic``.

    Returns
    -------
    FilterBank
        ``r + 1`` univariate filters; index 0 is the low-pass mask.
    """
    if isinstance(order_r, str):
        try:
            order_r = PRESETS[order_r]
        except KeyError:
            raise ValueError(f"unknown preset {order_r!r}") from None
    r = int(order_r)
    if r < 1:
        raise ValueError(f"B-spline order must be >= 1, got {order_r}")
    p = np.array([1.0, 1.0])
    q = np.array([1.0, -1.0])
    offset = r // 2
    filters = [Filter1D(_power(p, r) / 2.0**r, offset)]
    for alpha in range(1, r + 1):
        taps = np.convolve(_power(p, r - alpha), _power(q, alpha))
        scale = (-1) ** (alpha + 1) * sqrt(comb(r, alpha)) / 2.0**r
        filters.append(Filter1D(scale * taps, offset))
    return FilterBank(r, tuple(filters))


def _check_band(bank: FilterBank, alpha) -> tuple[int, int]:
    a1, a2 = (int(a) for a in alpha)
    if not (0 <= a1 <= bank.order and 0 <= a2 <= bank.order):
        raise ValueError(f"band {alpha} out of range for order {bank.order}")
    return a1, a2


def tensor_band(bank: FilterBank, alpha) -> Filter2D:
    """2-D mask of band ``alpha = (a1, a2)`` as an outer product."""
    a1, a2 = _check_band(bank, alpha)
    f1, f2 = bank.filters[a1], bank.filters[a2]
    return Filter2D(np.outer(f1.taps, f2.taps), (f1.offset, f2.offset))


def upsample(f: Filter1D, factor: int) -> Filter1D:
    """Insert ``factor - 1`` zeros between taps (support moves to factor*Z)."""
    if factor == 1:
        return f
    taps = np.zeros((len(f.taps) - 1) * factor + 1)
    taps[::factor] = f.taps
    return Filter1D(taps, f.offset * factor)


def convolve(f: Filter1D, g: Filter1D) -> Filter1D:
    return Filter1D(np.convolve(f.taps, g.taps), f.offset + g.offset)


def cascade_1d(bank: FilterBank, level: int, alpha: int) -> Filter1D:
    """Univariate level filter ``a~_{l,alpha} * a~_{l-1,0} * ... * a~_{0,0}``."""
    if level < 0:
        raise ValueError("level must be >= 0")
    out = upsample(bank.filters[alpha], 2**level)
    for j in range(level - 1, -1, -1):
        out = convolve(out, upsample(bank.filters[0], 2**j))
    return out


def level_filter(bank: FilterBank, level: int, alpha) -> LevelFilter:
    """Level-``l`` 2-D filter of band ``alpha`` built by upsample-and-convolve."""
    a1, a2 = _check_band(bank, alpha)
    rows = cascade_1d(bank, level, a1)
    cols = cascade_1d(bank, level, a2)
    return LevelFilter(level, (a1, a2), np.outer(rows.taps, cols.taps),
                       (rows.offset, cols.offset), rows, cols)


def verify_uep(bank: FilterBank, grid_n: int = 256) -> tuple[bool, float]:
    """Check both UEP identities of the 2-D tensor bank on a ``grid_n^2`` grid.

    Returns ``(ok, max_residual)`` where the residual covers
    ``sum_a |a^(xi)|^2 - 1`` and ``sum_a a^(xi) conj(a^(xi + nu))`` for the
    three shifts ``nu`` in ``{0, pi}^2 \\ {0}``.  ``ok`` uses a 1e-12 cut.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    xi = -np.pi + 2.0 * np.pi * np.arange(grid_n) / grid_n
    # hat[s][alpha] : 1-D Fourier series at xi + s*pi
    hat = [np.array([f.fourier(xi + s * np.pi) for f in bank.filters]) for s in (0, 1)]
    r1 = r2 = range(bank.order + 1)
    worst = 0.0
    for nu in ((0, 0), (0, 1), (1, 0), (1, 1)):
        acc = np.zeros((grid_n, grid_n), dtype=complex)
        for a1, a2 in product(r1, r2):
            base = np.outer(hat[0][a1], hat[0][a2])
            shifted = np.outer(hat[nu[0]][a1], hat[nu[1]][a2])
            acc += base * np.conj(shifted)
        if nu == (0, 0):
            acc -= 1.0
        worst = max(worst, float(np.abs(acc).max()))
    return worst <= 1e-12, worst


def format_bank(bank: FilterBank) -> str:
    """Plain-text form: one ``alpha offset tap tap ...`` line per filter."""
    lines = []
    for alpha, f in enumerate(bank.filters):
        taps = " ".join(f"{t:.17g}" for t in f.taps)
        lines.append(f"{alpha} {f.offset} {taps}")
    return "\n".join(lines) + "\n"


def parse_bank(text: str) -> FilterBank:
    filters = []
    for lineno, line in enumerate(text.strip().splitlines()):
        fields = line.split()
        if int(fields[0]) != lineno:
            raise ValueError(f"filter lines out of order at line {lineno + 1}")
        filters.append(Filter1D(np.array([float(t) for t in fields[2:]]), int(fields[1])))
    return FilterBank(len(filters) - 1, tuple(filters))
