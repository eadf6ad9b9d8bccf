"""Counting side against formula side: residual tables, dimension reports, rate-form check.

Every "measured" lower/upper box dimension here is a window proxy: the
min/max of exponents over the finest ``window_fraction`` of the
instrumented scales. True liminf/limsup are out of reach at desk scale and
each report says so.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .covering import (ExponentEvaluator, PointCloud, count_boxes, covering_profile, exponent,
                       grid_constant)
from .errors import BudgetExceeded, CifsdimError
from .ifs.pressure import Bracket, hausdorff_dim
from .ifs.symbolic import (counts_at_scales, direct_cloud, fixed_point_set, gauss_fixed_point_cloud,
                           stopping_words)
from .ifs.system import CIFS
from .scaling import ScalingFunction, box_dimension_exists, dim_interval, minimal_envelope, psi

POINT_BUDGET = 20_000_000      # words x base points allowed for one direct cloud
WORD_BUDGET = 2_000_000
FINEST_SCALE = 1e-6


# -- scales and clouds ---------------------------------------------------------

def instrumented_scales(system: CIFS, finest: float = FINEST_SCALE, B: int | None = None) -> list[float]:
    """Powers xi^k (k >= 1) of the largest generator norm, down to about ``finest``."""
    if "scales" in system.provenance:
        return sorted((float(r) for r in system.provenance["scales"]), reverse=True)
    xi = float(system.batch(B).rho().max())
    if not (0 < xi < 1):
        raise CifsdimError("degenerate generator norms")
    k_max = max(1, int(math.floor(math.log(finest) / math.log(xi) + 1e-9)))
    return [xi ** k for k in range(1, k_max + 1)]


def fixed_point_cloud(system: CIFS, B: int | None = None, deep: bool | None = None,
                      bits: int = 96) -> PointCloud:
    """The fixed-point set F; for digit systems the whole listed digit set, not only the retained part."""
    ds = system.digit_set
    if system.kind == "gauss" and ds is not None:
        listed = list(ds.digits(ds.max_listed()))
        big = deep if deep is not None else ds.max_listed() > 10 ** 6
        if any(b == 1 for b in listed):
            # composed branches: fixed points of x -> 1/(1 + 1/(b + x)) for b in the set
            return fixed_point_set(system, B, deep=bool(big), bits=bits)
        return gauss_fixed_point_cloud(listed, deep=bool(big), bits=bits)
    return fixed_point_set(system, B)


def _psi_step(cloud: PointCloud) -> float:
    # the theta grid step; coarser for big clouds, accounted for in the slack
    return float(min(0.05, max(1e-3, len(cloud.points) / 2e7)))


# -- residual table -------------------------------------------------------------

@dataclass
class ResidualRow:
    r: float
    direct: float | None
    symbolic: float | None
    psi: float
    theta: float
    residual: float | None
    slack: float
    flag: str
    words: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def empirical_vs_formula(system: CIFS, scales, h: float | None = None, base: PointCloud | None = None,
                         budget_words: int = WORD_BUDGET, budget_points: int = POINT_BUDGET,
                         B: int | None = None, psi_step: float | None = None) -> list[ResidualRow]:
    """Direct exponent of the stopping-word cloud at r against psi(r).

    The direct cloud is the union of S_w(F) over the words stopping at r;
    the symbolic exponent comes from tau_1(r). Rows whose cover or cloud
    does not fit the budgets carry flag "budget" and no fabricated numbers.
    """
    if h is None:
        h = hausdorff_dim(system, 1e-6 if system.is_finite else 1e-4, B=B).mid
    fp = fixed_point_set(system, B) if base is None else base
    profile_cloud = fixed_point_cloud(system, B) if base is None else base
    s_fn = ExponentEvaluator(profile_cloud)
    step = _psi_step(profile_cloud) if psi_step is None else psi_step
    d = system.dim
    rows = []
    for r in scales:
        r = float(r)
        L = math.log(1.0 / r)
        ps, th = psi(s_fn, min(h, d), r, d, step)
        base_slack = grid_constant(d) / L + step
        try:
            cover = stopping_words(system, r, budget=budget_words, B=B)
        except BudgetExceeded:
            rows.append(ResidualRow(r, None, None, ps, th, None, base_slack, "budget"))
            continue
        if len(cover) * len(fp.points) > budget_points:
            rows.append(ResidualRow(r, None, None, ps, th, None, base_slack, "budget", len(cover)))
            continue
        direct = exponent(count_boxes(direct_cloud(system, cover, fp), r), r)
        tau = float(counts_at_scales(fp, r / cover.inner_rho).sum())
        symb = math.log(tau) / L
        const = (2.0 ** d) * system.distortion
        trunc = math.log1p(cover.residual_count / tau) / L
        slack = base_slack + math.log(const) / L + trunc
        res = direct - ps
        rows.append(ResidualRow(r, direct, symb, ps, th, res, slack,
                                "ok" if abs(res) <= slack else "over-slack", len(cover)))
    return rows


# -- report -----------------------------------------------------------------------

@dataclass
class DimensionReport:
    h: Bracket
    scales: list
    fixed_point_counts: list
    fixed_point_exponents: list
    window_fraction: float
    s_low: float
    s_up: float
    interval: tuple
    exists: bool
    rows: list
    checks: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    note: str = ("lower/upper estimates are min/max of exponents over the finest "
                 "window of instrumented scales, not limits")

    @property
    def verdict(self) -> str:
        return "exists" if self.exists else "does-not-exist"

    def window(self) -> list[int]:
        n = len(self.scales)
        k = max(1, int(math.ceil(self.window_fraction * n)))
        return list(range(n - k, n))

    def to_json(self) -> dict:
        return {"h": [self.h.lo, self.h.hi], "scales": list(self.scales),
                "fixed_point_counts": [int(c) for c in self.fixed_point_counts],
                "fixed_point_exponents": list(self.fixed_point_exponents),
                "window_fraction": self.window_fraction, "s_low": self.s_low, "s_up": self.s_up,
                "interval": list(self.interval), "verdict": self.verdict,
                "rows": [r.to_json() for r in self.rows], "checks": self.checks,
                "provenance": self.provenance, "note": self.note}

    def to_text(self) -> str:
        lines = [f"h            [{self.h.lo:.8f}, {self.h.hi:.8f}]",
                 f"s_low/s_up   {self.s_low:.6f} / {self.s_up:.6f}  (window {self.window_fraction:.3g})",
                 f"D interval   [{self.interval[0]:.6f}, {self.interval[1]:.6f}]",
                 f"verdict      {self.verdict}",
                 f"note         {self.note}", ""]
        lines.append(f"{'r':>12} {'N_F':>10} {'s_F':>8} {'direct':>8} {'symbolic':>9} "
                     f"{'psi':>8} {'residual':>9} {'slack':>7}  flag")
        by_r = {row.r: row for row in self.rows}
        for r, c, s in zip(self.scales, self.fixed_point_counts, self.fixed_point_exponents):
            row = by_r.get(r)
            cells = [_fmt(getattr(row, k, None)) for k in ("direct", "symbolic", "psi", "residual", "slack")]
            lines.append(f"{r:12.4e} {c:10d} {s:8.4f} {cells[0]:>8} {cells[1]:>9} {cells[2]:>8} "
                         f"{cells[3]:>9} {cells[4]:>7}  {row.flag if row else '-'}")
        for k, v in self.checks.items():
            lines.append(f"check {k}: {v}")
        return "\n".join(lines) + "\n"

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "direct", "symbolic", "psi", "theta", "residual", "slack", "flag", "words"])
        for row in self.rows:
            w.writerow([repr(row.r)] + ["" if v is None else repr(v) for v in
                                        (row.direct, row.symbolic, row.psi, row.theta, row.residual,
                                         row.slack)] + [row.flag, row.words])
        return buf.getvalue()


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def dimension_report(system: CIFS, scales=None, window_fraction: float | None = None, h_tol: float | None = None,
                     residual_scales=None, budget_words: int = WORD_BUDGET,
                     budget_points: int = POINT_BUDGET, B: int | None = None,
                     precision_bits: int = 96) -> DimensionReport:
    """h bracket, fixed-point profile, window estimates, D interval, verdict and residual table."""
    if h_tol is None:
        # exact root finding is cheap for finite similarity systems
        h_tol = 1e-9 if (system.kind == "similarity" and system.is_finite) else 1e-4
    h = hausdorff_dim(system, h_tol, B=B)
    d = system.dim
    if scales is None:
        scales = instrumented_scales(system, B=B)
    scales = sorted((float(r) for r in scales), reverse=True)
    if window_fraction is None:
        window_fraction = float(system.provenance.get("window_fraction", 1.0 / 3.0))
    cloud = fixed_point_cloud(system, B, bits=precision_bits)
    prof = covering_profile(cloud, scales)
    rep = DimensionReport(h, scales, prof.counts.tolist(), prof.exponents.tolist(), window_fraction,
                          0.0, 0.0, (0.0, 0.0), True, [], provenance=dict(system.provenance))
    win = rep.window()
    tail = prof.exponents[win]
    rep.s_low, rep.s_up = float(tail.min()), float(tail.max())
    s_lo, s_hi = min(rep.s_low, d), min(rep.s_up, d)
    iv = dim_interval(min(h.mid, d), s_lo, s_hi, d)
    rep.interval = (iv.lo, iv.hi)
    rep.exists = box_dimension_exists(h.mid, s_lo, s_hi)
    rscales = scales if residual_scales is None else sorted(map(float, residual_scales), reverse=True)
    rep.rows = empirical_vs_formula(system, rscales, h.mid, budget_words=budget_words,
                                    budget_points=budget_points, B=B) if rscales else []
    rep.checks = trivial_bounds_checks(rep)
    return rep


def trivial_bounds_checks(rep: DimensionReport) -> dict:
    """max(h, s_low) <= measured lower and measured upper <= max(h, s_up), up to row slack."""
    rows = [row for row in rep.rows if row.direct is not None]
    if not rows:
        return {"trivial_bounds": "unchecked (no instrumented rows)"}
    n = len(rows)
    k = max(1, int(math.ceil(rep.window_fraction * n)))
    win = rows[n - k:]
    low = min(row.direct for row in win)
    up = max(row.direct for row in win)
    slack = max(row.slack for row in win)
    ok_low = max(rep.h.lo, rep.s_low) <= low + slack
    ok_up = up <= max(rep.h.hi, rep.s_up) + slack
    return {"measured_lower": low, "measured_upper": up, "slack": slack,
            "trivial_bounds": "ok" if (ok_low and ok_up) else "violated"}


def write_report(rep: DimensionReport, stem) -> list[str]:
    """Write stem.json, stem.txt and stem_rows.csv; returns the paths."""
    stem = str(stem)
    paths = [stem + ".json", stem + ".txt", stem + "_rows.csv"]
    with open(paths[0], "w") as fh:
        json.dump(rep.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths[1], "w") as fh:
        fh.write(rep.to_text())
    with open(paths[2], "w") as fh:
        fh.write(rep.rows_csv())
    return paths


# -- rate form --------------------------------------------------------------------

def sample_envelope(xs, vs, lam: float, dim: float = 1.0) -> ScalingFunction:
    """Envelope of measured samples.

    Grid counts on non-nested grids can drop slightly between scales, so the
    samples are first lifted to the least values decaying no faster than
    e^{-x} (a no-op on exact class members).
    """
    xs = np.asarray(xs, dtype=float)
    lifted = np.array(vs, dtype=float)
    for i in range(1, lifted.size):
        lifted[i] = max(lifted[i], lifted[i - 1] * math.exp(-(xs[i] - xs[i - 1])))
    return minimal_envelope(ScalingFunction(samples=(xs, lifted), dim=float(max(dim, lifted.max()))), lam)


@dataclass(frozen=True)
class RateFormResult:
    gap: float
    x: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    lam: float


def rate_form_check(system: CIFS, window, h: float | None = None, B: int | None = None,
                    budget_words: int = WORD_BUDGET, budget_points: int = POINT_BUDGET) -> RateFormResult:
    """Sup gap between the measured limit-set class and the envelope of the fixed-point class.

    Both classes are sampled on x = log log(1/r) for r in ``window``; the
    envelope is taken at lambda = lower end of the h bracket, with the
    fixed-point samples extended to the left down to r = 1/e.
    """
    rs = sorted((float(r) for r in window), reverse=True)
    if len(rs) < 3:
        raise CifsdimError("insufficient window")
    if h is None:
        h = hausdorff_dim(system, 1e-6 if system.is_finite else 1e-4, B=B).lo
    rows = empirical_vs_formula(system, rs, h, budget_words=budget_words, budget_points=budget_points, B=B)
    if any(row.direct is None for row in rows):
        raise BudgetExceeded("rate-form window not instrumentable at budget", rows)
    cloud = fixed_point_cloud(system, B)
    x_win = np.log(np.log(1.0 / np.array(rs)))
    x_all = np.unique(np.concatenate([np.linspace(0.0, x_win[0], 64, endpoint=False), x_win]))
    r_all = np.exp(-np.exp(x_all))
    s_all = np.array([exponent(count_boxes(cloud, r), r) for r in r_all])
    env = sample_envelope(x_all, s_all, h, system.dim)
    e_win = np.asarray(env(x_win), dtype=float)
    measured = np.array([row.direct for row in rows])
    return RateFormResult(float(np.max(np.abs(measured - e_win))), x_win, measured, e_win, h)


__all__ = ["DimensionReport", "RateFormResult", "ResidualRow", "dimension_report", "empirical_vs_formula",
           "fixed_point_cloud", "instrumented_scales", "rate_form_check", "sample_envelope", "trivial_bounds_checks",
           "write_report"]
