"""Quick invariant suites behind ``wfrestore verify``."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .bounds import BoundParams, check_lemma1, epsilon_star, eq15_residual
from .continuum import BsplineScaler, bessel_check
from .framelets import bspline_bank, verify_uep
from .harness import make_phantom
from .operators import GaussianBlur
from .transform import analyze, synthesize


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str


def check_uep() -> CheckResult:
    worst = max(verify_uep(bspline_bank(r))[1] for r in (1, 2, 3, 4))
    return CheckResult("uep", worst <= 1e-12, f"max residual {worst:.3g}")


def check_reconstruction(n: int = 32, trials: int = 5, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for r in (1, 2, 4):
        bank = bspline_bank(r)
        for levels in (1, 2, 3):
            u = rng.random((trials, n, n))
            c = analyze(u, bank, levels)
            worst = max(worst, float(np.abs(synthesize(c, bank) - u).max()))
            energy = np.sum(c.planes**2, axis=(0, 2, 3))
            worst = max(worst, float(np.max(np.abs(energy / np.sum(u**2, axis=(1, 2)) - 1))))
    return CheckResult("perfect_reconstruction", worst <= 1e-10, f"max error {worst:.3g}")


def check_lemma1_suite(trials: int = 50, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    images = [rng.random((32, 32)) for _ in range(trials)] + [make_phantom(32)]
    delta = np.zeros((8, 8))
    delta[4, 4] = 1.0
    images.append(delta)
    bad = 0
    for r in (1, 2, 4):
        for levels in (1, 2):
            bank = bspline_bank(r)
            bad += sum(not check_lemma1(u, bank, levels)[2] for u in images)
    return CheckResult("lemma1", bad == 0, f"{bad} violations")


def check_bessel() -> CheckResult:
    worst = 0.0
    pou = 0.0
    rng = np.random.default_rng(1)
    for n in (1, 2, 4):
        for J in (3, 4, 5):
            phi = BsplineScaler(n, J)
            worst = max(worst, *bessel_check(phi, 5, seed=J))
            pou = max(pou, float(np.abs(phi.basis_matrix(rng.random(1000)).sum(axis=1) - 1).max()))
    return CheckResult("bessel", worst <= 1 + 1e-12 and pou <= 1e-12,
                       f"max ratio {worst:.6g}, partition of unity error {pou:.3g}")


def check_epsilon_star() -> CheckResult:
    worst = 0.0
    for omega in (2**8, 2**12):
        for m in (10, 1000):
            p = BoundParams(omega=omega)
            worst = max(worst, abs(eq15_residual(p, m, epsilon_star(p, m))))
    return CheckResult("epsilon_star", worst <= 1e-9, f"max relative residual {worst:.3g}")


def check_blur_constant(n: int = 64) -> CheckResult:
    op = GaussianBlur()
    certified = op.constants()[0]
    measured = op.min_spectral_modulus(n)
    return CheckResult("blur_sigma_min", certified <= measured,
                       f"certified {certified:.4g} <= measured {measured:.4g}")


SUITES: dict[str, Callable[[], CheckResult]] = {
    "uep": check_uep,
    "reconstruction": check_reconstruction,
    "lemma1": check_lemma1_suite,
    "bessel": check_bessel,
    "epsilon_star": check_epsilon_star,
    "blur": check_blur_constant,
}


def run_checks(names=None) -> list[CheckResult]:
    names = list(SUITES) if not names else names
    unknown = set(names) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}; choose from {sorted(SUITES)}")
    return [SUITES[n]() for n in names]
