"""Undecimated framelet analysis/synthesis on periodic N x N grids.

The analysis operator produces one coefficient plane per (level, band) in
``{0..L-1} x B`` plus the low-pass plane ``(L-1, (0, 0))``:

    (W_{l,alpha} u)[k] = sum_j a_{l,alpha}[j] u[k + j]        (indices mod N)

i.e. periodic correlation with the level filter.  Synthesis is the exact
adjoint, and for a UEP bank ``synthesize(analyze(u)) == u``.

The default implementation runs the a-trous cascade in the spatial domain
with ``np.roll``; ``method="spectral"`` uses the FFT of the periodized level
filters instead.  Arrays may carry leading batch axes: images are
``(..., N, N)`` and coefficient planes ``(P, ..., N, N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .framelets import Filter1D, Filter2D, FilterBank, level_filter

Index = tuple[int, tuple[int, int]]


def max_levels(n: int) -> int:
    return int(np.floor(np.log2(n))) - 1


def dyadic_exponent(n: int) -> int:
    j = int(round(np.log2(n)))
    if 2**j != n:
        raise ValueError(f"N = {n} is not a power of two")
    return j


def coefficient_index(order: int, levels: int) -> tuple[Index, ...]:
    """Plane ordering: sorted by level, then band lexicographically."""
    out = []
    for l in range(levels):
        for alpha in product(range(order + 1), repeat=2):
            if alpha == (0, 0) and l != levels - 1:
                continue
            out.append((l, alpha))
    return tuple(out)


@dataclass(frozen=True)
class FrameCoefficients:
    """Stack of framelet coefficient planes in :func:`coefficient_index` order."""

    planes: np.ndarray
    order: int
    levels: int

    @property
    def index(self) -> tuple[Index, ...]:
        return coefficient_index(self.order, self.levels)

    @property
    def n(self) -> int:
        return self.planes.shape[-1]

    @property
    def highpass(self) -> np.ndarray:
        """Boolean per plane, False only for the low-pass plane."""
        return np.array([alpha != (0, 0) for _, alpha in self.index])

    def plane(self, level: int, alpha) -> np.ndarray:
        return self.planes[self.index.index((level, tuple(alpha)))]

    def with_planes(self, planes: np.ndarray) -> "FrameCoefficients":
        return replace(self, planes=planes)

    def __add__(self, other):
        return self.with_planes(self.planes + _planes(other))

    def __sub__(self, other):
        return self.with_planes(self.planes - _planes(other))

    def __mul__(self, scalar):
        return self.with_planes(self.planes * scalar)

    __rmul__ = __mul__

    def inner(self, other) -> float:
        return float(np.vdot(self.planes, _planes(other)))


def _planes(x):
    return x.planes if isinstance(x, FrameCoefficients) else x


def periodize(mask: Filter2D | Filter1D, n: int) -> np.ndarray:
    """Fold a finitely supported mask onto ``{0..N-1}^d`` by summing over ``k + N k'``."""
    if isinstance(mask, Filter1D):
        out = np.zeros(n)
        np.add.at(out, mask.support % n, mask.taps)
        return out
    k1, k2 = mask.support
    out = np.zeros((n, n))
    np.add.at(out, np.ix_(k1 % n, k2 % n), mask.taps)
    return out


def circ_conv(mask: Filter2D, u: np.ndarray, reverse: bool = False) -> np.ndarray:
    """Periodic convolution ``(a (*) u)[k] = sum_n P_N(a)[k - n] u[n]``.

    With ``reverse=True`` the mask is flipped first, giving the correlation
    ``(a[-.] (*) u)[k] = sum_j a[j] u[k + j]`` used by the analysis operator.
    """
    u = np.asarray(u, dtype=float)
    sign = -1 if reverse else 1
    out = np.zeros_like(u)
    k1, k2 = mask.support
    for i, j in zip(*np.nonzero(mask.taps)):
        out += mask.taps[i, j] * np.roll(u, (sign * k1[i], sign * k2[j]), axis=(-2, -1))
    return out


def _corr1d(x: np.ndarray, f: Filter1D, step: int, axis: int) -> np.ndarray:
    out = np.zeros_like(x)
    for t, k in zip(f.taps, f.support):
        if t != 0.0:
            out += t * np.roll(x, -step * int(k), axis=axis)
    return out


def _conv1d(x: np.ndarray, f: Filter1D, step: int, axis: int) -> np.ndarray:
    out = np.zeros_like(x)
    for t, k in zip(f.taps, f.support):
        if t != 0.0:
            out += t * np.roll(x, step * int(k), axis=axis)
    return out


def _check_levels(n: int, levels: int) -> None:
    if levels < 1 or levels > max_levels(n):
        raise ValueError(f"levels must be in [1, log2(N) - 1] = [1, {max_levels(n)}] "
                         f"for N = {n}, got {levels}")


def _spectra(bank: FilterBank, n: int, levels: int) -> np.ndarray:
    specs = []
    for l, alpha in coefficient_index(bank.order, levels):
        lf = level_filter(bank, l, alpha)
        specs.append(np.fft.fft2(periodize(Filter2D(lf.taps2d, lf.offset), n)))
    return np.array(specs)


def analyze(u, bank: FilterBank, levels: int, method: str = "spatial") -> FrameCoefficients:
    """Undecimated framelet decomposition ``W u`` with ``levels`` levels.

    Parameters
    ----------
    u : array_like, shape (..., N, N)
        Image (or batch of images).
    bank : FilterBank
        UEP filter bank.
    levels : int
        Number of decomposition levels, ``1 <= levels <= log2(N) - 1``.
    method : {"spatial", "spectral"}
        Cascade of periodic shifts, or products of filter DFTs.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if u.ndim < 2 or u.shape[-2] != n:
        raise ValueError(f"expected square image(s), got shape {u.shape}")
    _check_levels(n, levels)
    if method == "spectral":
        spec = _spectra(bank, n, levels)
        uh = np.fft.fft2(u)
        planes = np.fft.ifft2(np.conj(spec).reshape(spec.shape[:1] + (1,) * (u.ndim - 2)
                                                     + spec.shape[1:]) * uh).real
        return FrameCoefficients(planes, bank.order, levels)
    if method != "spatial":
        raise ValueError(f"unknown method {method!r}")

    out = {}
    low = u
    for l in range(levels):
        step = 2**l
        rows = [_corr1d(low, f, step, axis=-2) for f in bank.filters]
        for a1, a2 in product(range(bank.order + 1), repeat=2):
            out[(l, (a1, a2))] = _corr1d(rows[a1], bank.filters[a2], step, axis=-1)
        low = out[(l, (0, 0))]
    idx = coefficient_index(bank.order, levels)
    return FrameCoefficients(np.stack([out[i] for i in idx]), bank.order, levels)


def synthesize(c: FrameCoefficients, bank: FilterBank, method: str = "spatial") -> np.ndarray:
    """Adjoint transform ``W^T c``."""
    if c.order != bank.order:
        raise ValueError(f"coefficients of order {c.order} do not match bank order {bank.order}")
    idx = c.index
    if c.planes.shape[0] != len(idx):
        raise ValueError(f"expected {len(idx)} planes, got {c.planes.shape[0]}")
    n = c.n
    _check_levels(n, c.levels)
    if method == "spectral":
        spec = _spectra(bank, n, c.levels)
        spec = spec.reshape(spec.shape[:1] + (1,) * (c.planes.ndim - 3) + spec.shape[1:])
        return np.fft.ifft2(spec * np.fft.fft2(c.planes)).real.sum(axis=0)
    if method != "spatial":
        raise ValueError(f"unknown method {method!r}")

    pos = {key: i for i, key in enumerate(idx)}
    low = None
    for l in range(c.levels - 1, -1, -1):
        step = 2**l
        acc = None
        for a1 in range(bank.order + 1):
            t = None
            for a2 in range(bank.order + 1):
                if (a1, a2) == (0, 0) and low is not None:
                    src = low
                else:
                    src = c.planes[pos[(l, (a1, a2))]]
                term = _conv1d(src, bank.filters[a2], step, axis=-1)
                t = term if t is None else t + term
            term = _conv1d(t, bank.filters[a1], step, axis=-2)
            acc = term if acc is None else acc + term
        low = acc
    return low


@dataclass(frozen=True)
class LambdaWeights:
    """Weights of the weighted l1 norm, one value per coefficient plane.

    ``values`` has shape ``(P,)`` (per-plane scalars) or ``(P, N, N)``
    (per-pixel); the low-pass plane always carries weight 0.
    """

    beta: float
    values: np.ndarray

    @classmethod
    def schedule(cls, beta: float, n: int, levels: int, order: int) -> "LambdaWeights":
        """``lambda_{l,alpha} = 2^(beta (J - l - 1))`` with ``J = log2 N``."""
        j = dyadic_exponent(n)
        idx = coefficient_index(order, levels)
        upsilon = np.array([j - l - 1 for l, _ in idx], dtype=float)
        return cls.from_upsilon(beta, upsilon, n, order, levels)

    @classmethod
    def from_upsilon(cls, beta: float, upsilon, n: int, order: int, levels: int) -> "LambdaWeights":
        """Weights ``2^(beta * upsilon)`` for an integer exponent map.

        ``upsilon`` is per plane ``(P,)`` or per pixel ``(P, N, N)``; entries
        on the low-pass plane are ignored.
        """
        if not -1.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [-1, 1], got {beta}")
        upsilon = np.asarray(upsilon, dtype=float)
        idx = coefficient_index(order, levels)
        if upsilon.shape[0] != len(idx):
            raise ValueError(f"expected {len(idx)} planes of exponents, got {upsilon.shape[0]}")
        high = np.array([a != (0, 0) for _, a in idx])
        j = np.log2(n)
        if np.any(upsilon[high] < 0) or np.any(upsilon[high] > j):
            raise ValueError(f"exponents must lie in [0, log2 N = {j:g}]")
        if np.any(upsilon != np.round(upsilon)):
            raise ValueError("exponents must be integers")
        values = np.power(2.0, beta * upsilon)
        values[~high] = 0.0
        return cls(float(beta), values)

    @classmethod
    def ones(cls, order: int, levels: int) -> "LambdaWeights":
        idx = coefficient_index(order, levels)
        return cls(0.0, np.array([0.0 if a == (0, 0) else 1.0 for _, a in idx]))

    def broadcast(self, planes: np.ndarray) -> np.ndarray:
        """Weights reshaped to broadcast against a ``(P, ..., N, N)`` stack."""
        v = self.values
        if v.ndim == 1:
            return v.reshape((-1,) + (1,) * (planes.ndim - 1))
        return v.reshape(v.shape[:1] + (1,) * (planes.ndim - v.ndim) + v.shape[1:])


def weighted_l1(c: FrameCoefficients, w: LambdaWeights | None = None) -> float:
    """``sum_{k, l, alpha in B} lambda_{l,alpha}[k] |c_{l,alpha}[k]|``.

    The low-pass plane never contributes.  ``w=None`` gives the plain norm.
    """
    if w is None:
        w = LambdaWeights.ones(c.order, c.levels)
    return float(np.sum(w.broadcast(c.planes) * np.abs(c.planes)))


def highpass_l1(c: FrameCoefficients) -> float:
    return weighted_l1(c, None)
