"""Pseudo-spectral time integration of the diagonalized two-speed system.

The second-order pair is evolved through the first-order variables
u_s = du/dt + s*i*<D>_k u for s = +,-; the linear part is then diagonal in
frequency and integrated exactly by the propagator exp(s*i*dt*<D>_k), while
the quadratic coupling enters through an explicit integrating-factor
Runge-Kutta stage.  Resonant amplification experiments inject narrow wave
packets at the source radii of a scan report and watch the outcome band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from kgpair.bilinear import SpectralField
from kgpair.dispersion import SpeedPair
from kgpair.resonance import ResonanceReport

SPECIES = ("1", "c")
SIGNS = (1, -1)

ONE_D_CAVEAT = (
    "carrier radii come from the radial 3-D resonance analysis and are reused "
    "as 1-D frequencies; phase matching is unchanged because the phases only "
    "depend on the moduli along colinear configurations"
)


class BlowUpError(RuntimeError):
    """The per-step energy guard tripped; carries the last good state."""

    def __init__(self, message: str, state: "SystemState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class NonlinearityCoefficients:
    """Coefficients of the quadratic couplings.

    Q_slow = alpha*u1^2 + beta*uc^2 + gamma*u1*uc
    Q_fast = delta*u1^2 + eps*uc^2 + zeta*u1*uc
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0
    eps: float = 0.0
    zeta: float = 0.0

    @classmethod
    def zero(cls) -> "NonlinearityCoefficients":
        return cls()

    def is_zero(self) -> bool:
        return all(
            v == 0.0
            for v in (self.alpha, self.beta, self.gamma, self.delta, self.eps, self.zeta)
        )

    def pair_coefficient(self, species: str, l: str, m: str) -> float:
        """Coefficient of the (u^l, u^m) product feeding species' equation,
        with the cross term split evenly between the two orderings."""
        if species == "1":
            table = {("1", "1"): self.alpha, ("c", "c"): self.beta,
                     ("1", "c"): self.gamma / 2.0, ("c", "1"): self.gamma / 2.0}
        else:
            table = {("1", "1"): self.delta, ("c", "c"): self.eps,
                     ("1", "c"): self.zeta / 2.0, ("c", "1"): self.zeta / 2.0}
        return table[(l, m)]

    def evaluate(self, u1, uc, species: str):
        if species == "1":
            return self.alpha * u1 * u1 + self.beta * uc * uc + self.gamma * u1 * uc
        return self.delta * u1 * u1 + self.eps * uc * uc + self.zeta * u1 * uc


@dataclass(frozen=True)
class SystemState:
    """Diagonalized state: one complex spectral field per (species, sign)."""

    t: float
    speeds: SpeedPair
    fields: dict

    def field(self, species: str, sign: int) -> SpectralField:
        return self.fields[(species, sign)]

    @property
    def grid(self) -> SpectralField:
        return self.fields[("1", 1)]

    def energy(self) -> float:
        return sum(float(np.sum(np.abs(f.coef) ** 2)) for f in self.fields.values())


@dataclass(frozen=True)
class ProfileState:
    """Interaction-picture fields: the free evolution factored out."""

    t: float
    fields: dict

    def field(self, species: str, sign: int) -> SpectralField:
        return self.fields[(species, sign)]


def _bracket_weights(grid: SpectralField, speeds: SpeedPair, species: str) -> np.ndarray:
    return np.asarray(speeds.bracket_radial(species, grid.frequency_norms()))


def diagonalize(u0: dict, u1: dict, speeds: SpeedPair) -> SystemState:
    """Form u_s = u1 + s*i*<D>_k u0 for both species and signs."""
    fields = {}
    for species in SPECIES:
        pos, vel = u0[species], u1[species]
        pos._check_same_grid(vel)
        weights = _bracket_weights(pos, speeds, species)
        for sign in SIGNS:
            fields[(species, sign)] = pos.with_coef(vel.coef + sign * 1j * weights * pos.coef)
    return SystemState(t=0.0, speeds=speeds, fields=fields)


def reconstruct(state: SystemState) -> tuple[dict, dict]:
    """Invert the diagonalization: u = (u_+ - u_-)/(2i<D>), du/dt = (u_+ + u_-)/2."""
    u0, u1 = {}, {}
    for species in SPECIES:
        plus = state.field(species, 1)
        minus = state.field(species, -1)
        weights = _bracket_weights(plus, state.speeds, species)
        u0[species] = plus.with_coef((plus.coef - minus.coef) / (2j * weights))
        u1[species] = plus.with_coef((plus.coef + minus.coef) / 2.0)
    return u0, u1


def reality_error(state: SystemState) -> float:
    """Largest imaginary part of the reconstructed physical fields."""
    u0, u1 = reconstruct(state)
    worst = 0.0
    for species in SPECIES:
        for fld in (u0[species], u1[species]):
            worst = max(worst, float(np.abs(fld.to_physical().imag).max()))
    return worst


def expand_quadratic(coeffs: NonlinearityCoefficients) -> dict:
    """Interaction coefficients of the diagonalized expansion.

    Keys (k, l, m, s0, s1, s2) map to the real coefficient of
    (u^l_{s1}/<D>_l)(u^m_{s2}/<D>_m) in the species-k source term; the
    substitution u = sum_s s*u_s/(2i<D>) contributes -s1*s2/4 per pair, and
    the s0 slot is inert because the same source feeds both signs.
    """
    table = {}
    for k in SPECIES:
        for l in SPECIES:
            for m in SPECIES:
                q = coeffs.pair_coefficient(k, l, m)
                for s0 in SIGNS:
                    for s1 in SIGNS:
                        for s2 in SIGNS:
                            table[(k, l, m, s0, s1, s2)] = -q * s1 * s2 / 4.0
    return table


def reassemble_quadratic(table: dict, state: SystemState) -> dict:
    """Rebuild the physical source terms from the expansion table (oracle path)."""
    grid = state.grid
    normalized = {}
    for species in SPECIES:
        weights = _bracket_weights(grid, state.speeds, species)
        for sign in SIGNS:
            fld = state.field(species, sign)
            normalized[(species, sign)] = fld.with_coef(fld.coef / weights).to_physical()
    out = {}
    for k in SPECIES:
        total = np.zeros(grid.coef.shape, dtype=complex)
        for l in SPECIES:
            for m in SPECIES:
                for s1 in SIGNS:
                    for s2 in SIGNS:
                        a = table[(k, l, m, 1, s1, s2)]
                        if a != 0.0:
                            total = total + a * normalized[(l, s1)] * normalized[(m, s2)]
        out[k] = total
    return out


def _source_spectra(state: SystemState, coeffs: NonlinearityCoefficients) -> dict:
    u0, _ = reconstruct(state)
    u1 = u0["1"].to_physical()
    uc = u0["c"].to_physical()
    box = state.grid.box_length
    return {
        species: SpectralField.from_physical(coeffs.evaluate(u1, uc, species), box)
        for species in SPECIES
    }


def _propagate(state_fields: dict, speeds: SpeedPair, dt: float) -> dict:
    out = {}
    for (species, sign), fld in state_fields.items():
        weights = _bracket_weights(fld, speeds, species)
        out[(species, sign)] = fld.with_coef(fld.coef * np.exp(sign * 1j * dt * weights))
    return out


def _add_source(fields: dict, sources: dict, factor: float) -> dict:
    """Add factor * source to every field; sources may be keyed by species
    (the raw sign-agnostic spectra) or by (species, sign)."""
    out = {}
    for (species, sign), fld in fields.items():
        src = sources[(species, sign)] if (species, sign) in sources else sources[species]
        out[(species, sign)] = fld.with_coef(fld.coef + factor * src.coef)
    return out


SCHEME_ORDERS = {"ifrk4": 4, "ifrk2": 2}


def step(
    state: SystemState,
    dt: float,
    coeffs: NonlinearityCoefficients,
    scheme: str = "ifrk4",
    energy_guard: float = 0.1,
) -> SystemState:
    """One integrating-factor Runge-Kutta step.

    The linear flow is exact; the source terms use the classical explicit
    stages of the requested order.  A relative jump of the quadratic energy
    beyond ``energy_guard`` raises ``BlowUpError``.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if scheme not in SCHEME_ORDERS:
        raise ValueError(f"unknown scheme {scheme!r}")
    speeds = state.speeds
    fields = state.fields

    def source(fields_now: dict) -> dict:
        return _source_spectra(replace(state, fields=fields_now), coeffs)

    if coeffs.is_zero():
        new_fields = _propagate(fields, speeds, dt)
    elif scheme == "ifrk2":
        n1 = source(fields)
        mid = _propagate(_add_source(fields, n1, dt / 2.0), speeds, dt / 2.0)
        n2 = source(mid)
        new_fields = _add_source(
            _propagate(fields, speeds, dt), _propagate_sources(n2, speeds, dt / 2.0), dt
        )
    else:
        n1 = source(fields)
        stage_a = _propagate(_add_source(fields, n1, dt / 2.0), speeds, dt / 2.0)
        n2 = source(stage_a)
        stage_b = _add_source(_propagate(fields, speeds, dt / 2.0), n2, dt / 2.0)
        n3 = source(stage_b)
        stage_c = _add_source(
            _propagate(fields, speeds, dt), _propagate_sources(n3, speeds, dt / 2.0), dt
        )
        n4 = source(stage_c)
        n1p = _propagate_sources(n1, speeds, dt)
        n2p = _propagate_sources(n2, speeds, dt / 2.0)
        n3p = _propagate_sources(n3, speeds, dt / 2.0)
        new_fields = {}
        for key, fld in _propagate(fields, speeds, dt).items():
            species, _ = key
            incr = (
                n1p[key].coef
                + 2.0 * n2p[key].coef
                + 2.0 * n3p[key].coef
                + n4[species].coef
            )
            new_fields[key] = fld.with_coef(fld.coef + dt / 6.0 * incr)

    new_state = SystemState(t=state.t + dt, speeds=speeds, fields=new_fields)
    if not coeffs.is_zero():
        before, after = state.energy(), new_state.energy()
        if after > (1.0 + energy_guard) * max(before, 1e-300):
            raise BlowUpError(
                f"energy jumped {after / max(before, 1e-300):.3f}x in one step at t = {state.t:.6g}",
                state,
            )
    return new_state


def _propagate_sources(sources: dict, speeds: SpeedPair, dt: float) -> dict:
    """Apply the per-(species, sign) propagator to sign-agnostic source spectra."""
    out = {}
    for species, fld in sources.items():
        weights = _bracket_weights(fld, speeds, species)
        for sign in SIGNS:
            out[(species, sign)] = fld.with_coef(fld.coef * np.exp(sign * 1j * dt * weights))
    return out


def profile_of(state: SystemState) -> ProfileState:
    """f_s = exp(-s*i*t*<D>_k) u_s: constant in time under the linear flow."""
    fields = {}
    for (species, sign), fld in state.fields.items():
        weights = _bracket_weights(fld, state.speeds, species)
        fields[(species, sign)] = fld.with_coef(
            fld.coef * np.exp(-sign * 1j * state.t * weights)
        )
    return ProfileState(t=state.t, fields=fields)


def band_energy(
    state: SystemState,
    radius_lo: float,
    radius_hi: float,
    species: str | None = None,
    sign: int | None = None,
) -> float:
    """Quadratic spectral mass in the band radius_lo <= |xi| < radius_hi."""
    if radius_lo >= radius_hi:
        raise ValueError("need radius_lo < radius_hi")
    total = 0.0
    for (sp, sg), fld in state.fields.items():
        if species is not None and sp != species:
            continue
        if sign is not None and sg != sign:
            continue
        total += fld.band_mass(radius_lo, radius_hi)
    return total


def _packet_initial_state(grid: SpectralField, speeds: SpeedPair, packets) -> SystemState:
    """Real initial data from (species, carrier, amplitude, bandwidth) packets.

    Each packet fills the + component with a Gaussian at the carrier and the
    - component with its reality partner (the reflected conjugate).
    """
    xi = grid.frequency_axis()
    fields = {
        (sp, sign): grid.with_coef(np.zeros_like(xi, dtype=complex))
        for sp in SPECIES
        for sign in SIGNS
    }
    for species, carrier, amplitude, bandwidth in packets:
        plus = amplitude * np.exp(-((xi - carrier) ** 2) / (2.0 * bandwidth**2))
        minus = amplitude * np.exp(-((-xi - carrier) ** 2) / (2.0 * bandwidth**2))
        for sign, coef in ((1, plus), (-1, minus)):
            fld = fields[(species, sign)]
            fields[(species, sign)] = fld.with_coef(fld.coef + coef.astype(complex))
    return SystemState(t=0.0, speeds=speeds, fields=fields)


def run_resonant_amplification(
    report: ResonanceReport,
    coeffs: NonlinearityCoefficients,
    n: int = 256,
    box_length: float = 256.0,
    dt: float = 0.25,
    t_final: float = 150.0,
    amplitude: float = 0.02,
    bandwidth: float = 0.02,
    detune_factor: float = 10.0,
    band_halfwidth_factor: float = 5.0,
    sample_every: int = 10,
    scheme: str = "ifrk4",
    probe_factor: float = 1e-6,
) -> dict:
    """Resonant versus detuned packet runs watching the outcome band.

    Packets are injected into the source species of the component with the
    smallest colinearity ratio (for c = 5 that is the slow-slow-to-fast
    interaction).  The detuned control shifts the carrier by ``detune_factor``
    packet bandwidths; each run records the energy of the outcome species in
    the band around twice its own carrier, and the growth ratio compares the
    final band energies.  A probe packet of relative size ``probe_factor``
    seeds each outcome band so the linear-flow ratio is exactly one.
    """
    if not report.separated:
        raise ValueError("experiment requires a separated resonance report")
    if not report.components:
        raise ValueError("report carries no resonant component to excite")
    comp = min(report.components, key=lambda c: abs(c.lam))
    speeds = SpeedPair(report.c)
    source_species = comp.idx.l
    outcome_species = comp.idx.k

    # snap the box so the resonant carrier is exactly on the lattice
    cells = max(1, round(comp.R * box_length / (2.0 * math.pi)))
    box = 2.0 * math.pi * cells / comp.R
    grid = SpectralField.zeros(1, n, box)
    dxi = grid.dxi
    carrier_res = cells * dxi
    carrier_det = round((comp.R + detune_factor * bandwidth) / dxi) * dxi
    half_width = band_halfwidth_factor * bandwidth

    steps = int(round(t_final / dt))
    runs = {}
    inconclusive = False
    for label, carrier in (("resonant", carrier_res), ("detuned", carrier_det)):
        state = _packet_initial_state(
            grid,
            speeds,
            [
                (source_species, carrier, amplitude, bandwidth),
                (outcome_species, 2.0 * carrier, probe_factor * amplitude, bandwidth),
            ],
        )
        lo, hi = 2.0 * carrier - half_width, 2.0 * carrier + half_width
        times = [0.0]
        energies = [band_energy(state, lo, hi, species=outcome_species)]
        try:
            for k in range(1, steps + 1):
                state = step(state, dt, coeffs, scheme=scheme)
                if k % sample_every == 0 or k == steps:
                    times.append(state.t)
                    energies.append(band_energy(state, lo, hi, species=outcome_species))
        except BlowUpError:
            inconclusive = True
        runs[label] = {
            "carrier": carrier,
            "band": [lo, hi],
            "times": times,
            "band_energy": energies,
        }

    record = {
        "schema": "experiment-record/1",
        "caveat": ONE_D_CAVEAT,
        "parameters": {
            "c": report.c,
            "component_index": comp.idx.serialize(),
            "component_R": comp.R,
            "component_lambda": comp.lam,
            "source_species": source_species,
            "outcome_species": outcome_species,
            "n": n,
            "box_length": box,
            "dt": dt,
            "t_final": t_final,
            "amplitude": amplitude,
            "bandwidth": bandwidth,
            "detune_factor": detune_factor,
            "band_halfwidth_factor": band_halfwidth_factor,
            "scheme": scheme,
            "coefficients": {
                "alpha": coeffs.alpha, "beta": coeffs.beta, "gamma": coeffs.gamma,
                "delta": coeffs.delta, "eps": coeffs.eps, "zeta": coeffs.zeta,
            },
        },
        "carrier_lattice_cells": cells,
        "inconclusive": inconclusive,
        "runs": runs,
    }
    if not inconclusive:
        final_res = runs["resonant"]["band_energy"][-1]
        final_det = runs["detuned"]["band_energy"][-1]
        record["growth_ratio"] = final_res / final_det if final_det > 0.0 else math.inf
    return record
