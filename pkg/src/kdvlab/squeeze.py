"""Non-squeezing experiment harness.

A scenario fixes the cylinder data (observable l, target alpha, radius r),
the ball data (center z, radius R), a time horizon and a flow, all
discretized on a circle through periodization and a smooth band projection.
The harness then looks for initial data in the ball whose evolved pairing
escapes the cylinder, estimates the image area of a symplectic 2-plane slice
of the ball, and cross-checks everything against the closed-form answer for
the linear flows (where the propagator is a unit-modulus Fourier multiplier).

Searches are heuristics and are reported as best-found values with an
"exceeds r" certificate; nothing here claims optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CertificationError,
    KdvLabError,
    PreconditionError,
    SearchFailureError,
)
from .flows import DEFAULT_BUDGET, FlowSpec, HamiltonianSpec, evolve, linear_symbol
from .spectral import (
    MultiplierSpec,
    PeriodicField,
    TorusGrid,
    _hermitize,
    lp_project,
    make_field,
    pairing,
    sobolev_norm,
)


# ---------------------------------------------------------------------------
# prototypes on the line and their periodizations
# ---------------------------------------------------------------------------

def _gauss_prime(width, amplitude, center):
    def f(x):
        y = (x - center) / width
        return amplitude * (-2.0 * y / width) * np.exp(-y * y)

    return f


def _gauss_bump(width, amplitude, center):
    def f(x):
        y = (x - center) / width
        return amplitude * np.exp(-y * y)

    return f


def prototype_callable(cfg):
    """Line prototype from a config dict: gauss_prime | gauss_bump."""
    kind = cfg.get("kind", "gauss_prime")
    width = float(cfg.get("width", 1.0))
    amplitude = float(cfg.get("amplitude", 1.0))
    center = float(cfg.get("center", 0.0))
    if kind == "gauss_prime":
        return _gauss_prime(width, amplitude, center)
    if kind == "gauss_bump":
        return _gauss_bump(width, amplitude, center)
    raise PreconditionError(f"unknown prototype kind {kind!r}")


def periodized_field(func, grid, translates=6):
    """Sample sum_j f(x + j*L) on the grid (f decaying fast on the line)."""
    x = grid.points
    total = np.zeros_like(x)
    for j in range(-translates, translates + 1):
        total += func(x + j * grid.length)
    return make_field(grid, samples=total)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqueezeScenario:
    center: PeriodicField        # z: mean-zero, band-projected
    observable: PeriodicField    # l: unit Hdot^{1/2} after projection
    alpha_target: float
    r: float
    R: float
    T: float
    flow: HamiltonianSpec
    band: MultiplierSpec
    seed: int = 0
    record: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise PreconditionError("need 0 < r < R")
        nrm = sobolev_norm(self.observable, 0.5, homogeneous=True)
        if abs(nrm - 1.0) > 1e-10:
            raise PreconditionError(f"observable norm {nrm} is not 1 within 1e-10")

    @property
    def grid(self):
        return self.center.grid

    def live_modes(self):
        """Boolean mask of modes inside the scenario band (multiplier > 0)."""
        w = self.band.values(self.grid.frequencies)
        return w > 1e-13


def build_scenario(config):
    """Assemble a scenario from a config dict.

    Keys: grid {length, cutoff, samples?}, band {m, M}, center (prototype or
    mode list), observable (prototype or mode list), alpha, r, R, T,
    flow {kind, kappa?}, seed.  Centers are periodized then band-projected
    (hence mean-zero); observables are renormalized to unit Hdot^{1/2}.
    """
    gcfg = config["grid"]
    grid = TorusGrid.make(gcfg["length"], gcfg["cutoff"], gcfg.get("samples"))
    band = MultiplierSpec.band(config["band"]["m"], config["band"]["M"])

    def realize(cfg):
        if "modes" in cfg:
            c = np.zeros(2 * grid.cutoff + 1, dtype=complex)
            for entry in cfg["modes"]:
                j = int(entry["j"])
                c[j + grid.cutoff] = complex(entry.get("re", 0.0), entry.get("im", 0.0))
            return make_field(grid, coeffs=c)
        return periodized_field(prototype_callable(cfg), grid)

    z_raw = realize(config["center"])
    zeta = lp_project(z_raw, band)
    l_raw = realize(config["observable"])
    l_proj = lp_project(l_raw, band)
    l_norm = sobolev_norm(l_proj, 0.5, homogeneous=True)
    if l_norm < 1e-12:
        raise PreconditionError("projected observable is numerically zero")
    lam = l_proj * (1.0 / l_norm)
    fcfg = config.get("flow", {"kind": "kdv"})
    flow = HamiltonianSpec(fcfg["kind"], kappa=fcfg.get("kappa"),
                           band=band if fcfg["kind"] == "hkappa_band" else None)
    zeta_norm = sobolev_norm(zeta, -0.5, homogeneous=True) if np.any(np.abs(zeta.coeffs) > 0) else 0.0
    record = {
        "grid": {"length": grid.length, "cutoff": grid.cutoff, "samples": grid.samples},
        "band": {"m": band.N, "M": band.M},
        "center_norm_hm_half": zeta_norm,
        "observable_norm_before": l_norm,
    }
    return SqueezeScenario(
        center=zeta, observable=lam, alpha_target=float(config.get("alpha", 0.0)),
        r=float(config["r"]), R=float(config["R"]), T=float(config["T"]),
        flow=flow, band=band, seed=int(config.get("seed", 0)), record=record,
    )


# ---------------------------------------------------------------------------
# ball sampling
# ---------------------------------------------------------------------------

def _random_direction(scenario, rng):
    grid = scenario.grid
    k = grid.cutoff
    c = rng.standard_normal(2 * k + 1) + 1j * rng.standard_normal(2 * k + 1)
    c = _hermitize(c)
    c[~scenario.live_modes()] = 0.0
    c[k] = 0.0
    return PeriodicField(grid, _hermitize(c))


def _half_norm(f):
    return sobolev_norm(f, -0.5, homogeneous=True)


def sample_ball(scenario, count, seed=None, radius_factor=None):
    """Mean-zero band-limited samples with ||q - z||_{Hdot^{-1/2}} < R.

    Deterministic per seed (defaults to the scenario's); radius_factor pins
    the radius fraction (0 reproduces the center), otherwise fractions are
    drawn uniformly in (0, 1).
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    out = []
    for _ in range(count):
        v = _random_direction(scenario, rng)
        frac = rng.uniform(0.0, 1.0) if radius_factor is None else float(radius_factor)
        nrm = _half_norm(v)
        if nrm < 1e-300 or frac == 0.0:
            out.append(scenario.center)
            continue
        scale = 0.999 * frac * scenario.R / nrm
        out.append(scenario.center + v * scale)
    return out


# ---------------------------------------------------------------------------
# evolving and pairing
# ---------------------------------------------------------------------------

def _propagate_linear(q, ham, T):
    lam = linear_symbol(q.grid, ham)
    return PeriodicField(q.grid, _hermitize(q.coeffs * np.exp(lam * T)))


def evolved_pairing(scenario, q0, dt=1e-3, budget=DEFAULT_BUDGET, observable=None):
    """<l, q(T)> for one initial condition under the scenario flow."""
    l = scenario.observable if observable is None else observable
    if scenario.flow.is_linear:
        return pairing(l, _propagate_linear(q0, scenario.flow, scenario.T))
    spec = FlowSpec(scenario.flow, dt=dt, T=scenario.T, saves=1)
    traj = evolve(q0, spec, budget=budget)
    return pairing(l, traj.final())


def _dual_direction(scenario, w):
    """Unit Hdot^{-1/2} maximizer of <w, .> over the scenario's mode set."""
    grid = scenario.grid
    k = np.abs(grid.frequencies)
    c = k * w.coeffs
    c[~scenario.live_modes()] = 0.0
    f = PeriodicField(grid, _hermitize(c))
    nrm = _half_norm(f)
    if nrm < 1e-300:
        raise PreconditionError("degenerate dual direction (observable outside band)")
    return f * (1.0 / nrm)


@dataclass(frozen=True)
class SearchBudget:
    starts: int = 16
    rounds: int = 2
    step: float = 0.5
    dt: float = 1e-3
    directions: int = 8

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        return cls(rounds=int(value))


@dataclass
class SearchResult:
    witness: PeriodicField
    value: float
    exceeds_r: bool
    evaluations: int
    failures: list


def escape_search(scenario, budget=SearchBudget(), budget_obj=None):
    """Maximize |<l, q(T)> - alpha| over the ball by multi-start + ascent.

    Starts: seeded ball samples plus the two informed starts along the dual
    of the back-propagated observable (exact for the linear flows).  Ascent:
    coordinate steps on the highest-weight modes, projected back into the
    ball, step halved per round.  Deterministic for a fixed (scenario, seed,
    budget) triple.
    """
    budget = SearchBudget.coerce(budget)
    wp_budget = budget_obj if budget_obj is not None else DEFAULT_BUDGET
    failures = []
    evaluations = 0

    def value_of(q0):
        nonlocal evaluations
        evaluations += 1
        return abs(evolved_pairing(scenario, q0, dt=budget.dt, budget=wp_budget)
                   - scenario.alpha_target)

    def clipped(q0):
        v = q0 - scenario.center
        nrm = _half_norm(v)
        cap = 0.9999 * scenario.R
        if nrm > cap:
            return scenario.center + v * (cap / nrm)
        return q0

    candidates = sample_ball(scenario, max(budget.starts, 1))
    # informed starts: dual of the back-propagated observable, both signs
    # (back-propagation along the flow's linear part; exact for linear kinds)
    back = _propagate_linear(scenario.observable, scenario.flow, -scenario.T)
    try:
        dual = _dual_direction(scenario, back)
        for sgn in (+1.0, -1.0):
            candidates.append(clipped(scenario.center + dual * (sgn * scenario.R)))
    except PreconditionError:
        pass

    scored = []
    for i, q0 in enumerate(candidates):
        try:
            scored.append((value_of(q0), i, q0))
        except (CertificationError, KdvLabError) as exc:  # keep searching
            failures.append(f"candidate {i}: {exc}")
    if not scored:
        raise SearchFailureError(
            "all candidate evolutions failed: " + "; ".join(failures[:4])
        )
    scored.sort(key=lambda t: (-t[0], t[1]))
    best_val, _, best = scored[0]

    grid = scenario.grid
    live = np.flatnonzero(scenario.live_modes() & (grid.modes > 0))
    weights = np.abs(scenario.observable.coeffs[live])
    order = live[np.argsort(-weights, kind="stable")][:budget.directions]
    step = budget.step * scenario.R
    for _ in range(budget.rounds):
        improved = False
        for idx in order:
            for which in ("re", "im"):
                for sgn in (+1.0, -1.0):
                    c = np.zeros(2 * grid.cutoff + 1, dtype=complex)
                    c[idx] = 1.0 if which == "re" else 1.0j
                    direction = PeriodicField(grid, _hermitize(c))
                    nrm = _half_norm(direction)
                    if nrm < 1e-300:
                        continue
                    trial = clipped(best + direction * (sgn * step / nrm))
                    try:
                        val = value_of(trial)
                    except (CertificationError, KdvLabError) as exc:
                        failures.append(f"ascent: {exc}")
                        continue
                    if val > best_val + 1e-15:
                        best_val, best, improved = val, trial, True
        if not improved:
            step *= 0.5
    return SearchResult(witness=best, value=float(best_val),
                        exceeds_r=bool(best_val > scenario.r),
                        evaluations=evaluations, failures=failures)


def linear_oracle(scenario):
    """Exact escape value for the linear flows:
    |<U(-T) l, z> - alpha| + R * ||U(-T) l||_{Hdot^{1/2}} (last factor = 1)."""
    if not scenario.flow.is_linear:
        raise PreconditionError("linear_oracle requires a linear flow kind")
    back = _propagate_linear(scenario.observable, scenario.flow, -scenario.T)
    base = abs(pairing(back, scenario.center) - scenario.alpha_target)
    dual_norm = sobolev_norm(back, 0.5, homogeneous=True)
    return base + scenario.R * dual_norm


# ---------------------------------------------------------------------------
# image area of a symplectic 2-plane slice
# ---------------------------------------------------------------------------

def hilbert_partner(f):
    """Hilbert-transform partner: fhat(k) -> -i sign(k) fhat(k) (real field)."""
    sgn = np.sign(f.grid.modes).astype(float)
    return PeriodicField(f.grid, _hermitize(-1j * sgn * f.coeffs))


@dataclass
class AreaResult:
    area: float
    resolution: int
    values: np.ndarray       # complex pairing values of all slice samples
    bbox: tuple
    occupied_cells: int


def slice_basis(scenario):
    """(e1, e2): unit Hdot^{-1/2} conjugate pair realizing <l, q(T)>.

    The pair is the dual of the observable pulled back through the flow's
    linear part (and its Hilbert partner).  Under a unit-modulus linear flow
    the slice disk then maps onto the full closed pairing disk of radius R;
    for nonlinear flows the same pullback is the natural heuristic slice and
    the resulting area is a lower-bound probe.
    """
    back = _propagate_linear(scenario.observable, scenario.flow, -scenario.T)
    e1 = _dual_direction(scenario, back)
    e2 = hilbert_partner(e1)
    n2 = _half_norm(e2)
    if n2 < 1e-12:
        raise PreconditionError("degenerate slice: Hilbert partner vanishes")
    e2 = e2 * (1.0 / n2)
    w = np.zeros(2 * scenario.grid.cutoff + 1)
    nz = scenario.grid.modes != 0
    w[nz] = np.abs(scenario.grid.frequencies[nz]) ** (-1.0)
    gram_cross = scenario.grid.length * float(
        np.sum(w * np.real(np.conj(e1.coeffs) * e2.coeffs))
    )
    if abs(gram_cross) > 1e-8:
        raise PreconditionError("degenerate slice: basis pair is not conjugate")
    return e1, e2


def image_area(scenario, resolution=512, rings=None, angles=None, dt=1e-3,
               budget=DEFAULT_BUDGET):
    """Occupancy-grid area of {<l, q(T)> + i <l_H, q(T)>} over a slice disk.

    The disk of radius R in the (e1, e2) plane centered at z is sampled on a
    polar grid matched to the occupancy resolution; the complex observable
    pairs against l and its Hilbert-transform partner.  For linear flows the
    adjoint identity <l, U(T)q> = <U(-T)l, q> evaluates samples exactly.
    """
    e1, e2 = slice_basis(scenario)
    l_h = hilbert_partner(scenario.observable)
    n_r = rings if rings is not None else resolution // 2 + 1
    n_t = angles if angles is not None else int(math.ceil(math.pi * resolution))
    radii = scenario.R * np.arange(1, n_r + 1) / n_r * 0.999
    thetas = 2.0 * math.pi * np.arange(n_t) / n_t

    if scenario.flow.is_linear:
        w = _propagate_linear(scenario.observable, scenario.flow, -scenario.T)
        w_h = _propagate_linear(l_h, scenario.flow, -scenario.T)
        base = pairing(w, scenario.center) + 1j * pairing(w_h, scenario.center)
        a1 = pairing(w, e1) + 1j * pairing(w_h, e1)
        a2 = pairing(w, e2) + 1j * pairing(w_h, e2)
        rr, tt = np.meshgrid(radii, thetas, indexing="ij")
        values = base + a1 * (rr * np.cos(tt)) + a2 * (rr * np.sin(tt))
        values = np.concatenate(([base], values.ravel()))
    else:
        spec = FlowSpec(scenario.flow, dt=dt, T=scenario.T, saves=1)

        def observe(q0):
            qT = evolve(q0, spec, budget=budget).final()
            return pairing(scenario.observable, qT) + 1j * pairing(l_h, qT)

        vals = [observe(scenario.center)]
        for rad in radii:
            for th in thetas:
                vals.append(observe(
                    scenario.center + e1 * (rad * math.cos(th)) + e2 * (rad * math.sin(th))
                ))
        values = np.array(vals)

    re, im = values.real, values.imag
    pad = 0.05 * max(np.ptp(re), np.ptp(im), 1e-300)
    lo_x, hi_x = re.min() - pad, re.max() + pad
    lo_y, hi_y = im.min() - pad, im.max() + pad
    cell_x = (hi_x - lo_x) / resolution
    cell_y = (hi_y - lo_y) / resolution
    ix = np.clip(((re - lo_x) / cell_x).astype(int), 0, resolution - 1)
    iy = np.clip(((im - lo_y) / cell_y).astype(int), 0, resolution - 1)
    occupied = len(set(zip(ix.tolist(), iy.tolist())))
    area = occupied * cell_x * cell_y
    return AreaResult(area=float(area), resolution=resolution, values=values,
                      bbox=(lo_x, hi_x, lo_y, hi_y), occupied_cells=occupied)
