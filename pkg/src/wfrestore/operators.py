"""Measurement operators, random sample sets and synthetic measurements.

Three operator kinds are provided, each with certified constants
``(sigma_min lower bound, ||A||_inf)`` that do not depend on N:

* ``Identity``            -- inpainting, constants (1, 1)
* ``GaussianBlur``        -- truncated normalized Gaussian, (C exp(-sigma^2 pi^2), 1)
* ``OrthonormalWavelet``  -- periodic tensor CMF transform, (1, ||h||_1^(2*levels))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .framelets import Filter2D
from .transform import periodize


class MeasurementOp:
    """Linear operator on N x N images with an exact adjoint."""

    kind = "abstract"

    def apply(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def constants(self) -> tuple[float, float]:
        """``(sigma_min lower bound, ||A||_inf)``."""
        raise NotImplementedError

    def config(self) -> dict:
        return {"kind": self.kind}

    def solve_normal(self, mask: np.ndarray, mu: float, shift: float, rhs: np.ndarray,
                     x0: np.ndarray | None = None, tol: float = 1e-8,
                     maxiter: int = 50) -> np.ndarray:
        """Solve ``(mu A^T R A + shift I) x = rhs`` where R restricts to ``mask``.

        The generic path runs conjugate gradients; subclasses override with
        exact solves where the structure allows.
        """
        shape = rhs.shape
        w = mask.astype(float)

        def matvec(x):
            x = x.reshape(shape)
            return (mu * self.adjoint(w * self.apply(x)) + shift * x).ravel()

        op = LinearOperator((rhs.size, rhs.size), matvec=matvec, dtype=float)
        x, _ = cg(op, rhs.ravel(), x0=None if x0 is None else x0.ravel(),
                  rtol=tol, atol=0.0, maxiter=maxiter)
        return x.reshape(shape)


class Identity(MeasurementOp):
    kind = "identity"

    def apply(self, u):
        return np.asarray(u, dtype=float)

    def adjoint(self, v):
        return np.asarray(v, dtype=float)

    def constants(self):
        return 1.0, 1.0

    def solve_normal(self, mask, mu, shift, rhs, x0=None, tol=1e-8, maxiter=50):
        return rhs / (mu * mask + shift)


def gaussian_kernel(sigma: float = 1.0, size: int = 9) -> tuple[Filter2D, float]:
    """Gaussian window normalized to unit l1 norm, plus its constant C.

    ``a[k] = C / (2 pi sigma^2) exp(-|k|^2 / (2 sigma^2))`` on a centered
    ``size x size`` window, with C chosen so that ``sum a = 1``.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError("window size must be a positive odd integer")
    half = size // 2
    k = np.arange(-half, half + 1)
    g = np.exp(-(k[:, None] ** 2 + k[None, :] ** 2) / (2.0 * sigma**2))
    c = 2.0 * pi * sigma**2 / g.sum()
    return Filter2D(g / g.sum(), (half, half)), c


class GaussianBlur(MeasurementOp):
    """Periodic convolution with a truncated, l1-normalized Gaussian."""

    kind = "gaussian_blur"

    def __init__(self, sigma: float = 1.0, size: int = 9):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)
        self.size = int(size)
        self.kernel, self.normalizer = gaussian_kernel(self.sigma, self.size)
        self._spec: dict[int, np.ndarray] = {}

    def spectrum(self, n: int) -> np.ndarray:
        """DFT of the kernel periodized to N x N."""
        if n not in self._spec:
            self._spec[n] = np.fft.fft2(periodize(self.kernel, n))
        return self._spec[n]

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        return np.fft.ifft2(self.spectrum(u.shape[-1]) * np.fft.fft2(u)).real

    def adjoint(self, v):
        v = np.asarray(v, dtype=float)
        return np.fft.ifft2(np.conj(self.spectrum(v.shape[-1])) * np.fft.fft2(v)).real

    def constants(self):
        return self.normalizer * np.exp(-self.sigma**2 * pi**2), 1.0

    def min_spectral_modulus(self, n: int) -> float:
        return float(np.abs(self.spectrum(n)).min())

    def config(self):
        return {"kind": self.kind, "sigma": self.sigma, "size": self.size}

    def solve_normal(self, mask, mu, shift, rhs, x0=None, tol=1e-8, maxiter=50):
        if np.all(mask):
            s = self.spectrum(rhs.shape[-1])
            return np.fft.ifft2(np.fft.fft2(rhs) / (mu * np.abs(s) ** 2 + shift)).real
        return super().solve_normal(mask, mu, shift, rhs, x0, tol, maxiter)


HAAR = (2.0**-0.5, 2.0**-0.5)


class OrthonormalWavelet(MeasurementOp):
    """Periodic 2-D orthonormal wavelet transform from a conjugate mirror filter.

    The high-pass filter is ``h1[k] = (-1)^(1-k) h[1-k]``.  Coefficients are
    stored in the usual pyramid layout inside an N x N array.
    """

    kind = "orthonormal_wavelet"

    def __init__(self, cmf_taps=HAAR, levels: int = 2):
        self.h0 = np.asarray(cmf_taps, dtype=float)
        self.levels = int(levels)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if not np.isclose(np.sum(self.h0**2), 1.0, atol=1e-12):
            raise ValueError("CMF taps must have unit l2 norm")
        # h0 lives on k = 0..len-1; h1 on k = 2-len..1
        self.k0 = np.arange(len(self.h0))
        self.k1 = 1 - self.k0
        self.h1 = np.array([(-1.0) ** (1 - k) for k in self.k1]) * self.h0

    def _analysis_1d(self, x, axis):
        n = x.shape[axis]
        lo = np.zeros_like(np.take(x, np.arange(0, n, 2), axis=axis))
        hi = np.zeros_like(lo)
        for t, k in zip(self.h0, self.k0):
            lo += t * np.take(np.roll(x, -int(k), axis=axis), np.arange(0, n, 2), axis=axis)
        for t, k in zip(self.h1, self.k1):
            hi += t * np.take(np.roll(x, -int(k), axis=axis), np.arange(0, n, 2), axis=axis)
        return np.concatenate([lo, hi], axis=axis)

    def _synthesis_1d(self, y, axis):
        n = y.shape[axis]
        half = n // 2
        lo = np.take(y, np.arange(half), axis=axis)
        hi = np.take(y, np.arange(half, n), axis=axis)
        shape = list(y.shape)
        out = np.zeros(shape)
        for coeffs, taps, ks in ((lo, self.h0, self.k0), (hi, self.h1, self.k1)):
            up = np.zeros(shape)
            sl = [slice(None)] * y.ndim
            sl[axis] = slice(0, n, 2)
            up[tuple(sl)] = coeffs
            for t, k in zip(taps, ks):
                out += t * np.roll(up, int(k), axis=axis)
        return out

    def _check(self, n):
        if n % 2**self.levels:
            raise ValueError(f"N = {n} not divisible by 2^{self.levels}")

    def apply(self, u):
        x = np.array(u, dtype=float)
        n = x.shape[-1]
        self._check(n)
        size = n
        for _ in range(self.levels):
            block = x[..., :size, :size]
            block = self._analysis_1d(block, axis=-2)
            block = self._analysis_1d(block, axis=-1)
            x[..., :size, :size] = block
            size //= 2
        return x

    def adjoint(self, v):
        x = np.array(v, dtype=float)
        n = x.shape[-1]
        self._check(n)
        size = n >> (self.levels - 1)
        for _ in range(self.levels):
            block = x[..., :size, :size]
            block = self._synthesis_1d(block, axis=-1)
            block = self._synthesis_1d(block, axis=-2)
            x[..., :size, :size] = block
            size *= 2
        return x

    def constants(self):
        # each level multiplies the sup norm by at most ||h||_1^2
        return 1.0, float(np.sum(np.abs(self.h0))) ** (2 * self.levels)

    def config(self):
        return {"kind": self.kind, "cmf_taps": self.h0.tolist(), "levels": self.levels}

    def solve_normal(self, mask, mu, shift, rhs, x0=None, tol=1e-8, maxiter=50):
        # A^T R A is an orthogonal projection P, so the inverse is explicit
        p_rhs = self.adjoint(mask * self.apply(rhs))
        return (rhs - p_rhs) / shift + p_rhs / (mu + shift)


def constants(op: MeasurementOp) -> tuple[float, float]:
    return op.constants()


def make_operator(config: dict | str | None) -> MeasurementOp:
    """Build an operator from a config mapping (``kind`` plus parameters)."""
    if config is None:
        return Identity()
    if isinstance(config, str):
        config = {"kind": config}
    cfg = dict(config)
    kind = cfg.pop("kind", "identity")
    if kind in ("identity", "inpainting"):
        return Identity()
    if kind in ("gaussian_blur", "blur"):
        window = cfg.pop("window", None)
        if window is not None:
            cfg["size"] = window
        return GaussianBlur(**cfg)
    if kind in ("orthonormal_wavelet", "wavelet"):
        return OrthonormalWavelet(**cfg)
    raise ValueError(f"unknown operator kind {kind!r}")


@dataclass(frozen=True)
class SampleSet:
    """Observed pixel set Lambda, stored as sorted flat (row-major) indices."""

    n: int
    indices: np.ndarray

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def rho(self) -> float:
        return self.m / self.n**2

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.n * self.n, dtype=bool)
        out[self.indices] = True
        return out.reshape(self.n, self.n)

    @property
    def coords(self) -> np.ndarray:
        return np.stack(np.unravel_index(self.indices, (self.n, self.n)), axis=1)

    @classmethod
    def from_coords(cls, n: int, coords) -> "SampleSet":
        coords = np.asarray(coords, dtype=int).reshape(-1, 2)
        flat = np.unique(np.ravel_multi_index((coords[:, 0], coords[:, 1]), (n, n)))
        return cls(n, flat)


def draw_sample_set(n: int, m: int, seed) -> SampleSet:
    """Uniform random m-subset of the N x N grid (seeded partial Fisher-Yates)."""
    total = n * n
    if not 1 <= m <= total:
        raise ValueError(f"m must be in [1, {total}], got {m}")
    rng = np.random.default_rng(seed)
    perm = np.arange(total)
    picks = rng.integers(np.arange(m), total)
    for i, j in enumerate(picks):
        perm[i], perm[j] = perm[j], perm[i]
    return SampleSet(n, np.sort(perm[:m]))


def sample_count(n: int, rho: float) -> int:
    return max(1, min(n * n, int(round(rho * n * n))))


@dataclass(frozen=True)
class Measurement:
    """Values ``g`` on Lambda (in ``sample_set.indices`` order)."""

    values: np.ndarray
    eta: float
    sample_set: SampleSet
    noise: np.ndarray = field(repr=False, default=None)

    def zero_filled(self) -> np.ndarray:
        out = np.zeros(self.sample_set.n**2)
        out[self.sample_set.indices] = self.values
        return out.reshape(self.sample_set.n, self.sample_set.n)


def make_noise(m: int, eta: float, seed) -> np.ndarray:
    """Gaussian noise rescaled to empirical mean 0 and mean square ``eta^2``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if eta == 0:
        return np.zeros(m)
    if m < 2:
        raise ValueError("cannot impose zero mean and variance eta^2 on a single sample")
    z = np.random.default_rng(seed).standard_normal(m)
    z -= z.mean()
    z *= eta / np.sqrt(np.mean(z**2))
    return z


def make_measurement(op: MeasurementOp, f: np.ndarray, sample_set: SampleSet, eta: float,
                     seed=None, noise: np.ndarray | None = None) -> Measurement:
    """``g[k] = (A f)[k] + eta_k`` on Lambda.

    Pass ``noise`` to reuse a fixed noise vector across realizations of Lambda;
    it is recentered and rescaled the same way as freshly drawn noise.
    """
    af = op.apply(f).ravel()[sample_set.indices]
    if noise is None:
        noise = make_noise(sample_set.m, eta, seed)
    else:
        noise = np.asarray(noise, dtype=float)[: sample_set.m].copy()
        if eta > 0 and sample_set.m < 2:
            raise ValueError("cannot impose zero mean and variance eta^2 on a single sample")
        if eta == 0:
            noise[:] = 0.0
        else:
            noise -= noise.mean()
            noise *= eta / np.sqrt(np.mean(noise**2))
    return Measurement(af + noise, float(eta), sample_set, noise)
