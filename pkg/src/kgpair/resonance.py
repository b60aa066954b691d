"""Space, time, and space-time resonant sets of the interaction phases.

On the space-resonant set of a phase, eta and xi - eta are colinear; with
eta = r*omega the set is parameterized by p(r, omega) = (lambda(r)*r*omega,
r*omega).  Restricting the phase to that parameterization gives a scalar
analytic function Z(r) whose zeros are the space-time resonances: each zero R
contributes a sphere-and-ray component {|eta| = R, xi = lambda*eta}.

The scanner brackets the zeros of Z on a dense grid and refines them by
bisection plus one Newton polish.  A report collects the components of all
canonical phases together with the outcome and source radius sets and the
separation verdict.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from kgpair.dispersion import PhaseIndex, SpeedPair, canonical_phase_indices

ROOT_TOL = 1e-12
TANGENT_TOL = 1e-9
DEFAULT_TAU_SEP = 1e-6
_RADIUS_MERGE_TOL = 1e-9


class ResonanceScanWarning(UserWarning):
    """Raised when a scan cannot certify that its root list is complete."""


def _slope(speeds: SpeedPair, tag: str, r):
    """Monotone odd map c_a^2 r / sqrt(1 + c_a^2 r^2), range (-c_a, c_a)."""
    ca = speeds.speed_of(tag)
    r = np.asarray(r, dtype=float)
    return ca * ca * r / np.sqrt(1.0 + ca * ca * r * r)


def _slope_inverse(speeds: SpeedPair, tag: str, v):
    """Inverse of ``_slope``; only valid for |v| < c_a."""
    ca = speeds.speed_of(tag)
    v = np.asarray(v, dtype=float)
    return v / (ca * np.sqrt(ca * ca - v * v))


def lambda_domain_bound(speeds: SpeedPair, idx: PhaseIndex) -> float:
    """Largest r (possibly inf) below which the colinearity ratio exists."""
    cl = speeds.speed_of(idx.l)
    cm = speeds.speed_of(idx.m)
    if cl <= cm:
        return math.inf
    return cm / (cl * math.sqrt(cl * cl - cm * cm))


def space_resonance_lambda(speeds: SpeedPair, idx: PhaseIndex, r):
    """Colinearity ratio lambda with xi = lambda*eta on the space-resonant set.

    Solves the scalar equation c_m^2 s / <s>_m' = s1*s2 * c_l^2 r / <r>_l'
    for s = (lambda - 1) r in closed form.  Returns NaN where no solution
    exists (|right-hand side| >= c_m).
    """
    r = np.asarray(r, dtype=float)
    cm = speeds.speed_of(idx.m)
    v = idx.s1 * idx.s2 * _slope(speeds, idx.l, r)
    valid = np.abs(v) < cm
    v = np.where(valid, v, 0.0)
    s = _slope_inverse(speeds, idx.m, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = 1.0 + s / r
    return np.where(valid, lam, np.nan)


def time_resonance_gap(speeds: SpeedPair, idx: PhaseIndex, r):
    """Z(r): the phase along the space-resonant parameterization.

    NaN wherever ``space_resonance_lambda`` is absent; independent of the
    direction omega because the phase only depends on the three moduli.
    """
    r = np.asarray(r, dtype=float)
    lam = space_resonance_lambda(speeds, idx, r)
    return speeds.phase_radial(idx, np.abs(lam) * r, r, np.abs(lam - 1.0) * r)


@dataclass(frozen=True)
class ResonantComponent:
    """One component {|eta| = R, xi = lambda*eta} of a space-time resonant set."""

    idx: PhaseIndex
    R: float
    lam: float
    order: int
    tangent: bool = False
    outcome_radius: float = field(init=False)
    source_radii: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "outcome_radius", abs(self.lam) * self.R)
        object.__setattr__(
            self, "source_radii", (self.R, abs(self.lam - 1.0) * self.R)
        )

    def to_dict(self) -> dict:
        return {
            "index": self.idx.serialize(),
            "R": self.R,
            "lambda": self.lam,
            "order": self.order,
            "tangent": self.tangent,
            "outcome_radius": self.outcome_radius,
            "source_radii": list(self.source_radii),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResonantComponent":
        return cls(
            idx=PhaseIndex.parse(doc["index"]),
            R=float(doc["R"]),
            lam=float(doc["lambda"]),
            order=int(doc["order"]),
            tangent=bool(doc.get("tangent", False)),
        )


def dist_to_component(xi, eta, comp: ResonantComponent):
    """Euclidean distance in R^6 from (xi, eta) to the component.

    Closed form: minimizing |xi - lam*R*w|^2 + |eta - R*w|^2 over unit w picks
    w aligned with lam*xi + eta.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    lam, R = comp.lam, comp.R
    drive = np.linalg.norm(lam * xi + eta, axis=-1)
    d2 = (
        np.sum(xi * xi, axis=-1)
        + np.sum(eta * eta, axis=-1)
        + R * R * (lam * lam + 1.0)
        - 2.0 * R * drive
    )
    return np.sqrt(np.maximum(d2, 0.0))


def _bisect(f, a, b, fa, fb, width: float):
    while b - a > width:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fa < 0.0) != (fm < 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _newton_polish(f, x, h=None):
    h = h if h is not None else 1e-7 * max(abs(x), 1e-3)
    slope = (f(x + h) - f(x - h)) / (2.0 * h)
    if slope == 0.0 or not np.isfinite(slope):
        return x
    x_new = x - f(x) / slope
    return x_new if np.isfinite(x_new) and x_new > 0.0 else x


def _refine_tangent(f, a, b, iters=200):
    # golden-section minimization of |f| inside [a, b]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = abs(f(x1)), abs(f(x2))
    for _ in range(iters):
        if b - a < 1e-15 * max(1.0, abs(b)):
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = abs(f(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = abs(f(x2))
    return 0.5 * (a + b)


@dataclass(frozen=True)
class OrderEstimate:
    """Zero order from a log-log fit of |Z| against the distance to the root."""

    order: int
    slope: float
    fit_ok: bool


def estimate_zero_order(
    func,
    root: float,
    delta_min: float = 1e-3,
    delta_max: float = 1e-1,
    domain: tuple = (0.0, math.inf),
    other_roots: tuple = (),
    slope_tol: float = 0.2,
) -> OrderEstimate:
    """Estimate the order of a zero by the slope of log|f| vs log|r - root|."""
    lo, hi = domain
    room = min(root - lo, hi - root) if math.isfinite(hi) else root - lo
    for other in other_roots:
        room = min(room, 0.5 * abs(other - root))
    delta_max = min(delta_max, 0.8 * room)
    if delta_max <= delta_min:
        delta_min = delta_max / 100.0
    deltas = np.logspace(math.log10(delta_min), math.log10(delta_max), 24)
    xs, ys = [], []
    for d in deltas:
        for r in (root - d, root + d):
            if not (lo < r < hi):
                continue
            val = abs(func(r))
            if val > 0.0 and np.isfinite(val):
                xs.append(math.log(d))
                ys.append(math.log(val))
    if len(xs) < 4:
        return OrderEstimate(order=1, slope=math.nan, fit_ok=False)
    slope = float(np.polyfit(xs, ys, 1)[0])
    order = max(1, int(round(slope)))
    return OrderEstimate(order=order, slope=slope, fit_ok=abs(slope - order) <= slope_tol)


def intersection_order(speeds: SpeedPair, comp: ResonantComponent, **kwargs) -> OrderEstimate:
    """Finite intersection order of a detected component."""
    hi = lambda_domain_bound(speeds, comp.idx)
    return estimate_zero_order(
        lambda r: float(time_resonance_gap(speeds, comp.idx, r)),
        comp.R,
        domain=(0.0, hi),
        **kwargs,
    )


def find_resonant_components(
    speeds: SpeedPair,
    idx: PhaseIndex,
    r_max: float = 100.0,
    grid_step: float = 1e-3,
    warn_sink: list | None = None,
) -> list[ResonantComponent]:
    """All zeros of Z on (0, r_max], refined to |Z| <= 1e-12.

    Simple sign-change roots are bisected to an interval of width 1e-14 and
    polished by one Newton step.  Local minima of |Z| below 1e-9 without a
    sign change are reported as tangent (even order) components.  A warning is
    emitted when Z at the end of the scan range is too close to zero to rule
    out further roots.
    """
    if r_max <= 0.0 or grid_step <= 0.0:
        raise ValueError("r_max and grid_step must be positive")
    bound = lambda_domain_bound(speeds, idx)
    r_hi = min(r_max, bound * (1.0 - 1e-9))
    step = min(grid_step, r_hi / 200.0)
    grid = np.arange(step, r_hi + 0.5 * step, step)
    if grid.size < 2:
        return []
    z = np.asarray(time_resonance_gap(speeds, idx, grid), dtype=float)

    def z_scalar(r):
        return float(time_resonance_gap(speeds, idx, float(r)))

    roots: list[tuple[float, bool]] = []
    sign_change = (z[:-1] * z[1:]) < 0.0
    for i in np.nonzero(sign_change)[0]:
        a, b = grid[i], grid[i + 1]
        root = _bisect(z_scalar, a, b, z[i], z[i + 1], width=1e-14 * max(1.0, b))
        root = _newton_polish(z_scalar, root)
        roots.append((root, False))
    exact = np.nonzero(z == 0.0)[0]
    for i in exact:
        roots.append((float(grid[i]), False))

    # tangent roots: |Z| dips below the tangent threshold with no sign change
    absz = np.abs(z)
    interior = np.nonzero(
        (absz[1:-1] < TANGENT_TOL)
        & (absz[1:-1] <= absz[:-2])
        & (absz[1:-1] <= absz[2:])
        & (z[:-2] * z[2:] > 0.0)
    )[0]
    for i in interior:
        root = _refine_tangent(z_scalar, grid[i], grid[i + 2])
        if abs(z_scalar(root)) <= TANGENT_TOL:
            roots.append((root, True))

    if roots:
        roots.sort()
        merged: list[tuple[float, bool]] = [roots[0]]
        for r, tang in roots[1:]:
            if abs(r - merged[-1][0]) > 10.0 * _RADIUS_MERGE_TOL:
                merged.append((r, tang))
        roots = merged

    tail = abs(z[-1])
    if tail <= 10.0 * ROOT_TOL and not any(abs(r - grid[-1]) < 2 * step for r, _ in roots):
        _warn(
            warn_sink,
            f"phase {idx.serialize()}: |Z| = {tail:.3e} at the end of the scan "
            "range without a sign change; a tangent root or asymptote may be missed",
        )

    components = []
    other = [r for r, _ in roots]
    for root, tangent in roots:
        lam = float(space_resonance_lambda(speeds, idx, root))
        if not np.isfinite(lam):
            continue
        est = estimate_zero_order(
            z_scalar,
            root,
            domain=(0.0, bound),
            other_roots=tuple(r for r in other if r != root),
        )
        if not est.fit_ok:
            _warn(
                warn_sink,
                f"phase {idx.serialize()}: zero-order fit at R = {root:.12g} gave "
                f"slope {est.slope:.3f}, not within 0.2 of an integer",
            )
        components.append(
            ResonantComponent(idx=idx, R=root, lam=lam, order=est.order, tangent=tangent)
        )
    return components


def _warn(sink: list | None, message: str):
    if sink is not None:
        sink.append(message)
    else:
        warnings.warn(message, ResonanceScanWarning, stacklevel=2)


def _merge_radii(values, tol: float = _RADIUS_MERGE_TOL) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(float(v))
    return out


@dataclass(frozen=True)
class ResonanceReport:
    """Full scan result for one speed value."""

    c: float
    components: tuple
    outcome_radii: tuple
    source_radii: tuple
    separated: bool
    min_gap: float
    delta0: float
    tau_sep: float
    r_max: float
    grid_step: float
    warnings: tuple = ()

    @property
    def resonant_indices(self) -> list[str]:
        return sorted({comp.idx.serialize() for comp in self.components})

    def to_dict(self) -> dict:
        return {
            "schema": "resonance-report/1",
            "c": self.c,
            "tau_sep": self.tau_sep,
            "r_max": self.r_max,
            "grid_step": self.grid_step,
            "resonant_phases": self.resonant_indices,
            "components": [comp.to_dict() for comp in self.components],
            "outcome_radii": list(self.outcome_radii),
            "source_radii": list(self.source_radii),
            "separated": self.separated,
            "min_gap": self.min_gap,
            "delta0": self.delta0,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResonanceReport":
        if doc.get("schema") != "resonance-report/1":
            raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
        min_gap = doc["min_gap"]
        return cls(
            c=float(doc["c"]),
            components=tuple(ResonantComponent.from_dict(d) for d in doc["components"]),
            outcome_radii=tuple(float(v) for v in doc["outcome_radii"]),
            source_radii=tuple(float(v) for v in doc["source_radii"]),
            separated=bool(doc["separated"]),
            min_gap=math.inf if min_gap is None else float(min_gap),
            delta0=float(doc["delta0"]),
            tau_sep=float(doc["tau_sep"]),
            r_max=float(doc["r_max"]),
            grid_step=float(doc["grid_step"]),
            warnings=tuple(doc.get("warnings", ())),
        )


def _separation(outcomes, sources, tau_sep: float) -> tuple[bool, float, float]:
    if not outcomes or not sources:
        return True, math.inf, 1.0
    min_gap = min(abs(o - s) for o in outcomes for s in sources)
    separated = min_gap > tau_sep
    delta0 = min_gap / 10.0 if separated else 0.0
    return separated, min_gap, delta0


def check_separation(report: ResonanceReport, tau_sep: float) -> tuple[bool, float, float]:
    """Re-evaluate the separation verdict of a report at a given tolerance."""
    if tau_sep <= 0.0:
        raise ValueError("tau_sep must be positive")
    return _separation(report.outcome_radii, report.source_radii, tau_sep)


def scan_all(
    c: float,
    r_max: float = 100.0,
    grid_step: float = 1e-3,
    tau_sep: float = DEFAULT_TAU_SEP,
) -> ResonanceReport:
    """Scan every canonical phase and assemble the resonance report.

    Components of non-canonical indices are symmetry images of the canonical
    ones and contribute the same outcome and source radii, so scanning the
    canonical representatives is exhaustive.
    """
    speeds = SpeedPair(c)
    warn_sink: list[str] = []
    components: list[ResonantComponent] = []
    for idx in canonical_phase_indices():
        components.extend(
            find_resonant_components(speeds, idx, r_max, grid_step, warn_sink=warn_sink)
        )
    outcomes = _merge_radii(comp.outcome_radius for comp in components)
    sources = _merge_radii(r for comp in components for r in comp.source_radii)
    separated, min_gap, delta0 = _separation(outcomes, sources, tau_sep)
    return ResonanceReport(
        c=c,
        components=tuple(components),
        outcome_radii=tuple(outcomes),
        source_radii=tuple(sources),
        separated=separated,
        min_gap=min_gap,
        delta0=delta0,
        tau_sep=tau_sep,
        r_max=r_max,
        grid_step=grid_step,
        warnings=tuple(warn_sink),
    )


@dataclass(frozen=True)
class SweepEntry:
    c: float
    separated: bool
    min_gap: float


def sweep_speed(
    c_min: float,
    c_max: float,
    steps: int,
    r_max: float = 100.0,
    grid_step: float = 1e-3,
    tau_sep: float = DEFAULT_TAU_SEP,
) -> list[SweepEntry]:
    """Separation verdicts on an inclusive linear grid of speeds."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if c_min <= 0.0 or c_max < c_min:
        raise ValueError("need 0 < c_min <= c_max")
    if c_min <= 1.0 <= c_max or c_min == 1.0:
        raise ValueError("the sweep range must not contain the degenerate speed c = 1")
    values = [c_min] if steps == 1 else list(np.linspace(c_min, c_max, steps))
    entries = []
    for c in values:
        report = scan_all(float(c), r_max=r_max, grid_step=grid_step, tau_sep=tau_sep)
        entries.append(SweepEntry(c=float(c), separated=report.separated, min_gap=report.min_gap))
    return entries


# ---------------------------------------------------------------------------
# Small-constant feasibility system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsBudget:
    """Exponents entering the two-tier estimate scheme.

    ``A`` is the pseudo-product blow-up exponent, ``n`` the finite
    intersection order; ``d1``, ``d2``, ``d3`` are the small constants and
    ``N`` the regularity index.  ``feasible`` is True for every budget built
    by a successful search.
    """

    A: float
    n: int
    d1: float
    d2: float
    d3: float
    N: int
    feasible: bool = True

    def to_dict(self) -> dict:
        checks = verify_budget(self)
        return {
            "schema": "constants-budget/1",
            "feasible": self.feasible,
            "A": self.A,
            "n": self.n,
            "delta1": self.d1,
            "delta2": self.d2,
            "delta3": self.d3,
            "N": self.N,
            "inequalities": [
                {"name": c.name, "formula": c.formula, "slack": c.slack, "ok": c.ok}
                for c in checks
            ],
        }


@dataclass(frozen=True)
class InfeasibleBudget:
    """Search failure; names the most binding inequality of the best candidate."""

    A: float
    n: int
    binding: str
    best_min_slack: float
    feasible: bool = False

    def to_dict(self) -> dict:
        return {
            "schema": "constants-budget/1",
            "feasible": False,
            "A": self.A,
            "n": self.n,
            "binding": self.binding,
            "best_min_slack": self.best_min_slack,
        }


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    formula: str
    slack: float
    ok: bool


def _inequalities(A: float, d1: float, d2: float, d3: float, N: int) -> list[InequalityCheck]:
    entries = [
        ("high_reg_absorbs_tail", "d3*(N-2) + 1/2 + 3*d1 - 1 > 0",
         d3 * (N - 2) + 0.5 + 3 * d1 - 1.0),
        ("time_ibp_boundary_gain", "9*d1 - d3*(A + 3/2 - 3*d1) > 0",
         9 * d1 - d3 * (A + 1.5 - 3 * d1)),
        ("time_ibp_bulk_gain", "1/2 + 9*d1 - d3*(A + 13/6 - 2*d1) > 0",
         0.5 + 9 * d1 - d3 * (A + 13.0 / 6.0 - 2 * d1)),
        ("space_ibp_gain", "min(3*d1 - d3*(A+2), d3*(A+2)) > 0",
         min(3 * d1 - d3 * (A + 2), d3 * (A + 2))),
        ("shell_shrink_beats_decay", "d2/24 - 3*d1 > 0", d2 / 24.0 - 3 * d1),
        ("near_set_blowup_margin", "1 - 3*d1 - A*d2 > 0", 1.0 - 3 * d1 - A * d2),
        ("near_set_blowup_half", "1/2 - A*d2 > 0", 0.5 - A * d2),
        ("near_set_blowup_margin_bis", "1 - A*d2 - 3*d1 > 0", 1.0 - A * d2 - 3 * d1),
        ("weighted_reg_absorbs_tail", "d3*(N - 3/2) - 21/16 > 0",
         d3 * (N - 1.5) - 21.0 / 16.0),
        ("weighted_highfreq_window", "5/16 - d3*(A+1) > 0", 5.0 / 16.0 - d3 * (A + 1)),
        ("weighted_time_ibp_window", "3/16 - (A+2)*d3 > 0", 3.0 / 16.0 - (A + 2) * d3),
        ("weighted_space_ibp_window", "3/16 - d3*(A+1) > 0", 3.0 / 16.0 - d3 * (A + 1)),
    ]
    return [InequalityCheck(name, formula, float(slack), slack > 0.0)
            for name, formula, slack in entries]


def verify_budget(budget: ConstantsBudget) -> list[InequalityCheck]:
    """Evaluate all twelve strict inequalities for a budget."""
    return _inequalities(budget.A, budget.d1, budget.d2, budget.d3, budget.N)


def budget_holds(budget: ConstantsBudget) -> bool:
    return all(c.ok for c in verify_budget(budget))


_N_CAP = 10**9


def _minimal_regularity(d1: float, d3: float) -> int | None:
    n1 = 2.0 + (0.5 - 3.0 * d1) / d3
    n2 = 1.5 + 21.0 / (16.0 * d3)
    need = max(n1, n2, 3.0)
    N = int(math.ceil(need * 1.01)) + 1
    return N if N <= _N_CAP else None


def find_admissible_constants(
    A: float,
    n: int,
    d2_grid=None,
    d1_grid=None,
    d3_grid=None,
) -> ConstantsBudget | InfeasibleBudget:
    """Log-grid search for (d1, d2, d3, N) satisfying all twelve inequalities.

    The grids are descending so the first feasible point has the largest
    constants; N is taken minimal for the chosen (d1, d3).  When no grid point
    works, the result names the most binding inequality of the best candidate.
    """
    if A <= 0.0:
        raise ValueError("A must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    d2_grid = d2_grid if d2_grid is not None else np.logspace(-0.5, -6, 56)
    d1_grid = d1_grid if d1_grid is not None else np.logspace(-1, -8, 71)
    d3_grid = d3_grid if d3_grid is not None else np.logspace(-2, -10, 81)

    best: tuple[float, str] | None = None
    for d2 in d2_grid:
        for d1 in d1_grid:
            if d1 >= d2 / 72.0:
                continue
            for d3 in d3_grid:
                if d3 * (A + 2) >= 3 * d1:
                    continue
                N = _minimal_regularity(d1, d3)
                if N is None:
                    continue
                checks = _inequalities(A, d1, d2, d3, N)
                min_slack = min(c.slack for c in checks)
                if min_slack > 0.0:
                    return ConstantsBudget(A=A, n=n, d1=float(d1), d2=float(d2),
                                           d3=float(d3), N=N)
                if best is None or min_slack > best[0]:
                    binding = min(checks, key=lambda c: c.slack).name
                    best = (min_slack, binding)
    if best is None:
        # every grid point was pruned; evaluate the least-constrained corner
        d1, d2, d3 = float(min(d1_grid)), float(min(d2_grid)), float(min(d3_grid))
        checks = _inequalities(A, d1, d2, d3, _minimal_regularity(d1, d3) or _N_CAP)
        worst = min(checks, key=lambda c: c.slack)
        best = (worst.slack, worst.name)
    return InfeasibleBudget(A=A, n=n, binding=best[1], best_min_slack=best[0])
