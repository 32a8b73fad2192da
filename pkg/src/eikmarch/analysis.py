"""Error norms, grid restriction, observed-order fits, and the
refinement-study runner that turns solves into convergence tables."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Grid2D
from .solver import fmm_solve

HALVING_TOL = 1e-12


def error_norms(u_numeric, u_reference, mask, grid) -> tuple[float, float]:
    """(Linf, L1) of the difference over masked nodes; L1 = h^2 * sum.

    u_reference may be a field array or a vectorized callable of node
    coordinate arrays.
    """
    if callable(u_reference):
        X, Y = grid.meshgrid()
        ref = np.asarray(u_reference(X, Y), dtype=float)
    else:
        ref = np.asarray(u_reference, dtype=float)
    u = np.asarray(u_numeric, dtype=float)
    if u.shape != ref.shape:
        raise ValueError(f"field shapes differ: {u.shape} vs {ref.shape}")
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise ValueError("error mask selects no nodes")
    d = np.abs(u[m] - ref[m])
    if not np.all(np.isfinite(d)):
        raise ValueError("non-finite difference inside the error mask")
    return float(d.max()), float(grid.h * grid.h * d.sum())


def error_mask(result) -> np.ndarray:
    """Nodes that participate in error norms: reached, inside the domain."""
    return np.isfinite(result.u)


def restrict_fine_to_coarse(fine_field, fine_grid, coarse_grid) -> np.ndarray:
    """Copy values at coincident nodes; no interpolation.

    Requires the coarse grid to be nested in the fine one: same origin,
    coarse h an integer multiple of fine h, extent covered.
    """
    ratio = coarse_grid.h / fine_grid.h
    r = round(ratio)
    if r < 1 or abs(ratio - r) > 1e-9 * r:
        raise ValueError(
            f"coarse h {coarse_grid.h} is not a multiple of fine h {fine_grid.h}")
    if fine_grid.origin != coarse_grid.origin:
        raise ValueError(
            f"grid origins differ: {fine_grid.origin} vs {coarse_grid.origin}")
    if ((coarse_grid.nx - 1) * r > fine_grid.nx - 1
            or (coarse_grid.ny - 1) * r > fine_grid.ny - 1):
        raise ValueError("coarse grid extends beyond the fine grid")
    fine = np.asarray(fine_field)
    return fine[::r, ::r][:coarse_grid.nx, :coarse_grid.ny].copy()


def fit_observed_order(hs, errors, tail=3) -> float:
    """Least-squares slope of log(error) vs log(h) over the last `tail` rows.

    Zero-error rows cannot enter the log fit; they are dropped with a
    warning.  At least two usable rows must remain.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if tail < 2:
        raise ValueError("order fit needs a tail of at least 2 rows")
    hs = hs[-tail:]
    errors = errors[-tail:]
    keep = errors > 0.0
    if not keep.all():
        warnings.warn(f"excluding {int((~keep).sum())} zero-error row(s) "
                      "from the order fit")
        hs, errors = hs[keep], errors[keep]
    if hs.size < 2:
        raise ValueError("fewer than 2 usable rows for the order fit")
    slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class ReportRow:
    h: float
    linf: float
    l1: float
    runtime: float


@dataclass
class ConvergenceReport:
    """Per-method refinement table; orders are fitted over the last `tail`
    rows.  Error values are deterministic; runtimes are informative only."""

    method: str
    rows: list[ReportRow] = field(default_factory=list)
    tail: int = 3

    def __post_init__(self):
        hs = [row.h for row in self.rows]
        for a, b in zip(hs, hs[1:]):
            if abs(b - 0.5 * a) > HALVING_TOL * a:
                raise ValueError(f"h must halve between rows, got {a} -> {b}")
        for row in self.rows:
            if not (math.isfinite(row.linf) and math.isfinite(row.l1)):
                raise ValueError(f"non-finite error in row h={row.h}")

    @property
    def hs(self):
        return [row.h for row in self.rows]

    def order_linf(self) -> float:
        return fit_observed_order(self.hs, [r.linf for r in self.rows], self.tail)

    def order_l1(self) -> float:
        return fit_observed_order(self.hs, [r.l1 for r in self.rows], self.tail)


@dataclass(frozen=True)
class StudyCase:
    """One refinement level's problem instance."""
    grid: Grid2D
    world: object
    speed: object
    sources: tuple


def make_oracle_truth(oracle):
    """Adapt a vectorized oracle of node coordinates to the truth protocol."""

    def truth(case):
        X, Y = case.grid.meshgrid()
        return np.asarray(oracle(X, Y), dtype=float)

    return truth


def make_nested_truth(build, h_fine, config):
    """Ground-truth provider backed by one fine-grid solve.

    Returns a callable(case) -> reference field restricted to the case's
    grid; the fine solve runs lazily on first use and is reused after.
    """
    cache = {}

    def truth(case):
        if "fine" not in cache:
            fine_case = build(h_fine)
            cfg = config(fine_case) if callable(config) else config
            cache["fine"] = fmm_solve(fine_case.grid, fine_case.world,
                                      fine_case.speed, fine_case.sources,
                                      cfg)
            cache["grid"] = fine_case.grid
        return restrict_fine_to_coarse(cache["fine"].u, cache["grid"],
                                       case.grid)

    return truth


def run_refinement_study(build, methods, h0, levels, truth,
                         tail=3) -> dict[str, ConvergenceReport]:
    """Solve every (method, level) pair and tabulate errors.

    build: callable(h) -> StudyCase, called once per level and shared by
    all methods so every method faces identical inputs.  methods: sequence
    of (label, config) where config may be a SolverConfig or a callable
    of the StudyCase returning one.  truth: callable(case) returning the
    reference field (see make_oracle_truth / make_nested_truth).
    """
    if levels < 1:
        raise ValueError("refinement study needs at least one level")
    hs = [h0 * 0.5 ** k for k in range(levels)]
    cases = [build(h) for h in hs]
    refs = [np.asarray(truth(case), dtype=float) for case in cases]

    reports = {}
    for label, config in methods:
        rows = []
        for case, ref in zip(cases, refs):
            cfg = config(case) if callable(config) else config
            t0 = time.perf_counter()
            result = fmm_solve(case.grid, case.world, case.speed,
                               case.sources, cfg)
            dt = time.perf_counter() - t0
            mask = error_mask(result) & np.isfinite(ref)
            linf, l1 = error_norms(result.u, ref, mask, case.grid)
            rows.append(ReportRow(case.grid.h, linf, l1, dt))
        reports[label] = ConvergenceReport(label, rows, tail)
    return reports
