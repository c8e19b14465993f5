"""Monte Carlo restoration sweeps and bound calibration.

A sweep visits every ``(N, rho)`` cell of an :class:`ExperimentConfig`, and
for each seed draws a sample set, synthesizes the measurement, solves, and
records the empirical error.  Records are ordered by ``(N, rho, seed)``
whatever the worker count, so CSV output is byte-reproducible.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bounds import BoundParams, empirical_error, estimate_cf_from_image, lemma1_constant, theorem2_bound
from .continuum import BsplineScaler, catalog_function, interpolate, l2_distance, sample_image
from .framelets import bspline_bank
from .operators import draw_sample_set, make_measurement, make_noise, make_operator, sample_count
from .solver import Problem, SolverConfig, solve
from .transform import LambdaWeights, dyadic_exponent

log = logging.getLogger(__name__)

ANCHORS = ("lowest density", "lowest resolution")


def make_phantom(n: int, M: float = 1.0) -> np.ndarray:
    """Piecewise linear test scene on an ``N x N`` grid.

    Background ``0.2 M``, plateaus of ``0.8 M`` and ``0.55 M``, and a band
    ramping linearly from ``0.2 M`` to ``0.9 M`` across columns.  All edges
    sit on multiples of ``1/8`` and values are taken at pixel centres, so
    2 x 2 block averaging of the ``N`` phantom gives the ``N/2`` phantom.
    """
    if n < 8:
        raise ValueError(f"phantom needs N >= 8, got {n}")
    x = (np.arange(n) + 0.5) / n
    rows, cols = np.meshgrid(x, x, indexing="ij")

    def box(r0, r1, c0, c1):
        return (rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)

    img = np.full((n, n), 0.2)
    img[box(1 / 8, 3 / 8, 1 / 8, 1 / 2)] = 0.8
    img[box(1 / 2, 7 / 8, 1 / 8, 3 / 8)] = 0.55
    band = box(1 / 2, 3 / 4, 1 / 2, 7 / 8)
    img[band] = 0.2 + 0.7 * (cols[band] - 0.5) / (3 / 8)
    return M * img


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a sweep; loads from and saves to JSON."""

    operator: dict = field(default_factory=lambda: {"kind": "identity"})
    sizes: list = field(default_factory=lambda: [32, 64, 128])
    rhos: list = field(default_factory=lambda: [0.3, 0.5, 0.7])
    realizations: int = 10
    seeds: list | None = None
    eta: float = 0.0
    beta: float = 0.0
    order: int = 2
    levels: int = 1
    M: float = 1.0
    a: float = 1.0
    C_f: float | None = None
    function: str | None = None          # catalog name; None -> phantom
    noise: str = "fixed"                 # "fixed" per N, or "fresh" per realization
    noise_seed: int = 12345
    solver: dict = field(default_factory=dict)
    anchor: str = "lowest density"
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.sizes = [int(n) for n in self.sizes]
        self.rhos = [float(r) for r in self.rhos]
        for n in self.sizes:
            dyadic_exponent(n)
            if n < 8:
                raise ValueError(f"N must be >= 8, got {n}")
        if not self.sizes or not self.rhos:
            raise ValueError("sizes and rhos must be non-empty")
        if any(not 0.0 < r <= 1.0 for r in self.rhos):
            raise ValueError("every rho must lie in (0, 1]")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.seeds is not None:
            self.seeds = [int(s) for s in self.seeds]
            if len(self.seeds) != self.realizations:
                raise ValueError("need exactly one seed per realization")
        if self.anchor not in ANCHORS:
            raise ValueError(f"anchor must be one of {ANCHORS}")
        if self.noise not in ("fixed", "fresh"):
            raise ValueError("noise must be 'fixed' or 'fresh'")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.function is not None:
            catalog_function(self.function)
        SolverConfig(**self.solver)

    @property
    def seed_list(self) -> list[int]:
        return self.seeds if self.seeds is not None else list(range(self.realizations))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")


@dataclass(frozen=True)
class ExperimentRecord:
    N: int
    rho: float
    seed: int
    emp_error: float
    iters: int
    residual: float
    converged: bool
    l2_error: float | None = None


@dataclass(frozen=True)
class SummaryRow:
    N: int
    rho: float
    max_emp_error: float
    calibrated_bound: float
    anchor: bool = False


def ground_truth(cfg: ExperimentConfig, n: int) -> np.ndarray:
    if cfg.function is None:
        return make_phantom(n, cfg.M)
    return sample_image(catalog_function(cfg.function, cfg.M), _scaler(cfg, n))


def _scaler(cfg: ExperimentConfig, n: int) -> BsplineScaler:
    # refinable function of the framelet bank
    return BsplineScaler(cfg.order, dyadic_exponent(n), shift=cfg.order // 2)


def run_cell(cfg: ExperimentConfig, n: int, rho: float, seed: int) -> ExperimentRecord:
    """Single realization: draw Lambda, measure, solve, score."""
    op = make_operator(cfg.operator)
    bank = bspline_bank(cfg.order)
    f = ground_truth(cfg, n)
    m = sample_count(n, rho)
    sset = draw_sample_set(n, m, (seed, n, m))
    if cfg.noise == "fixed":
        noise = make_noise(n * n, cfg.eta, (cfg.noise_seed, n)) if cfg.eta > 0 else np.zeros(n * n)
        meas = make_measurement(op, f, sset, cfg.eta, noise=noise)
    else:
        meas = make_measurement(op, f, sset, cfg.eta, seed=(cfg.noise_seed, seed, n, m))
    weights = LambdaWeights.schedule(cfg.beta, n, cfg.levels, cfg.order)
    res = solve(Problem(op, meas, cfg.M), weights, bank, cfg.levels, SolverConfig(**cfg.solver))
    l2 = None
    if cfg.function is not None:
        phi = _scaler(cfg, n)
        l2 = l2_distance(interpolate(res.u_star, phi), catalog_function(cfg.function, cfg.M),
                         phi.level_J) ** 2
    return ExperimentRecord(n, rho, seed, empirical_error(res.u_star, f), res.iterations,
                            res.residual, res.converged, l2)


def _run_task(args):
    return run_cell(*args)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[ExperimentRecord]:
    """All realizations of every ``(N, rho)`` cell, ordered by ``(N, rho, seed)``."""
    tasks = [(cfg, n, rho, s) for n in sorted(cfg.sizes) for rho in sorted(cfg.rhos)
             for s in sorted(cfg.seed_list)]
    workers = cfg.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [run_cell(*t) for t in tasks]
    for r in records:
        if not r.converged:
            log.warning("N=%d rho=%g seed=%d: solver did not converge in %d sweeps",
                        r.N, r.rho, r.seed, r.iters)
    return records


def cell_maxima(records) -> dict[tuple[int, float], float]:
    out: dict[tuple[int, float], float] = {}
    for r in records:
        key = (r.N, r.rho)
        out[key] = max(out.get(key, -np.inf), r.emp_error)
    return out


def bound_params(cfg: ExperimentConfig, n: int, rho: float, C_f: float) -> BoundParams:
    sigma_min, norm_inf = make_operator(cfg.operator).constants()
    return BoundParams(M=cfg.M, beta=cfg.beta, a=cfg.a, C_W=lemma1_constant(cfg.order), C_f=C_f,
                       sigma_min=float(sigma_min), norm_inf=float(norm_inf), rho=rho, eta=cfg.eta, omega=n * n)


def sweep_cf(cfg: ExperimentConfig) -> float:
    """``C_f`` shared by a sweep: the configured value or the largest per-N estimate."""
    if cfg.C_f is not None:
        return float(cfg.C_f)
    bank = bspline_bank(cfg.order)
    return max(estimate_cf_from_image(ground_truth(cfg, n),
                                      LambdaWeights.schedule(cfg.beta, n, cfg.levels, cfg.order),
                                      bank, cfg.levels) for n in cfg.sizes)


def calibrate_bound(records, params, anchor: str = "lowest density") -> list[SummaryRow]:
    """Scale the bound so it equals the worst empirical error at the anchor.

    Parameters
    ----------
    records : iterable of ExperimentRecord
    params : callable ``(N, rho) -> BoundParams``
    anchor : {"lowest density", "lowest resolution"}
        ``lowest density`` calibrates each fixed-N curve over rho at its
        smallest rho; ``lowest resolution`` calibrates each fixed-rho curve
        over N at its smallest N.

    Returns
    -------
    list of SummaryRow
        One row per cell, ordered by ``(N, rho)``.
    """
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}")
    maxima = cell_maxima(records)
    if not maxima:
        raise ValueError("no records to calibrate against")
    group_of = (lambda key: key[0]) if anchor == "lowest density" else (lambda key: key[1])
    vary = 1 if anchor == "lowest density" else 0
    groups: dict = {}
    for key in maxima:
        groups.setdefault(group_of(key), []).append(key)
    rows = []
    for members in groups.values():
        anchor_key = min(members, key=lambda k: k[vary])
        if not np.isfinite(maxima[anchor_key]):
            raise ValueError(f"anchor cell {anchor_key} has no records")
        raw = {k: theorem2_bound(params(*k)).value for k in members}
        scale = maxima[anchor_key] / raw[anchor_key]
        for k in members:
            cal = maxima[k] if k == anchor_key else scale * raw[k]
            rows.append(SummaryRow(k[0], k[1], float(maxima[k]), float(cal), k == anchor_key))
    return sorted(rows, key=lambda r: (r.N, r.rho))


def summarize(cfg: ExperimentConfig, records) -> list[SummaryRow]:
    c_f = sweep_cf(cfg)
    return calibrate_bound(records, lambda n, rho: bound_params(cfg, n, rho, c_f), cfg.anchor)


def domination_violations(summary, rel_slack: float = 0.0) -> list[SummaryRow]:
    """Non-anchor cells whose worst empirical error exceeds the calibrated bound."""
    return [r for r in summary
            if not r.anchor and r.max_emp_error > r.calibrated_bound * (1.0 + rel_slack)]
