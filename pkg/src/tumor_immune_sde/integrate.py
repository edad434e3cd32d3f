"""Time-stepping schemes and noise-coupled path simulation.

Two schemes are provided for the two-dimensional system: Euler-Maruyama and
Milstein.  Both noise coefficients are linear (``sigma_i * v``), so the
Milstein correction for a coordinate ``v`` driven by a unit normal ``xi`` is

    (sigma_i**2 * v / 2) * (xi**2 - 1) * dt

which is the strong-order-1 correction ``b*b'/2 * ((dW)**2 - dt)`` with the
root-dt factor of ``dW = sqrt(dt)*xi`` absorbed.

Three scalar comparison processes can be integrated alongside the main pair,
coupled through the *same* Brownian increments:

    psi : d psi = psi*(alpha - beta*psi) dt + sigma2*psi dB2   (dominates y)
    phi : d phi = (sigma - (delta - h^2)*phi) dt + sigma1*phi dB1   (dominates x)
    z   : d z   = (sigma - delta*z) dt + sigma1*z dB1, started at z(t0) = x(t0)

The exact solution never leaves the open positive quadrant but a discrete
step can.  The reject-and-halve policy catches any step that collapses a
coordinate to ``<= eps_pos`` times its pre-step value (or out of the finite
positives), discards the draw, and re-advances over the same interval with
two half steps using fresh draws, recursing at most ``max_halvings`` deep.
All coupled processes are halved together so shared-noise comparisons hold
at every scale.

Per-path randomness comes from two independent generator streams (one per
Brownian motion) split off a single seed, so runs are reproducible and the
unit normals feeding B1 and B2 never correlate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, PositivityError, SimulationError
from .model import ModelParams, State, response_peak

__all__ = [
    "StepScheme",
    "StepPolicy",
    "BrownianIncrements",
    "brownian_increments",
    "PathRecord",
    "milstein_step",
    "em_step",
    "simulate",
    "simulate_coupled",
]

AUX_PROCESSES = ("psi", "phi", "z")

# Fixed number of steps whose normals are pre-drawn per path.  Constant so
# that a path's draw sequence is independent of ensemble size and worker
# splitting.
_CHUNK = 2048


class StepScheme(Enum):
    MILSTEIN = "milstein"
    EULER_MARUYAMA = "euler-maruyama"


@dataclass(frozen=True)
class StepPolicy:
    """Scheme, base step size, and positivity handling for one integration.

    A proposed step is rejected when any simulated coordinate falls to
    ``eps_pos`` times its pre-step value or lower (this catches sign flips
    and catastrophic one-step collapses while letting genuinely decaying
    coordinates pass smoothly below any absolute level).  Rejected steps are
    re-taken as two half steps with fresh draws, nesting at most
    ``max_halvings`` times before the simulation fails.
    """

    scheme: StepScheme = StepScheme.MILSTEIN
    dt: float = 1e-3
    eps_pos: float = 1e-12
    max_halvings: int = 25

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"StepPolicy.dt must be finite and > 0, got {self.dt!r}")
        if not (np.isfinite(self.eps_pos) and self.eps_pos > 0):
            raise DomainError("StepPolicy.eps_pos must be finite and > 0")
        if self.max_halvings < 0:
            raise DomainError("StepPolicy.max_halvings must be >= 0")
        if not isinstance(self.scheme, StepScheme):
            raise DomainError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class BrownianIncrements:
    """Unit-normal draws for the two Brownian streams on a uniform grid.

    ``xi`` and ``eta`` hold one standard normal per step for B1 and B2; the
    actual increments are ``sqrt(dt) * xi`` etc.  The two streams come from
    independently seeded generators.
    """

    dt: float
    xi: np.ndarray
    eta: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.xi.shape != self.eta.shape:
            raise DomainError("xi and eta must have the same shape")
        if self.dt <= 0:
            raise DomainError("dt must be > 0")

    @property
    def n_steps(self) -> int:
        return self.xi.shape[0]

    def coarsen(self, factor: int) -> "BrownianIncrements":
        """Aggregate onto a grid ``factor`` times coarser.

        Sums of consecutive normals are rescaled by 1/sqrt(factor) so the
        result is again a sequence of unit normals describing the same
        Brownian path — the standard refinement trick for strong-order
        measurements.
        """
        if factor < 1 or self.n_steps % factor:
            raise DomainError(f"factor {factor} must divide n_steps {self.n_steps}")
        shape = (self.n_steps // factor, factor) + self.xi.shape[1:]
        root = math.sqrt(factor)
        return BrownianIncrements(
            dt=self.dt * factor,
            xi=self.xi.reshape(shape).sum(axis=1) / root,
            eta=self.eta.reshape(shape).sum(axis=1) / root,
            seed=self.seed,
        )


def brownian_increments(n_steps: int, dt: float, seed, n_paths: Optional[int] = None) -> BrownianIncrements:
    """Draw unit normals for ``n_steps`` steps (optionally for many paths)."""
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    xi_ss, eta_ss = ss.spawn(2)
    shape = (n_steps,) if n_paths is None else (n_steps, n_paths)
    return BrownianIncrements(
        dt=dt,
        xi=np.random.default_rng(xi_ss).standard_normal(shape),
        eta=np.random.default_rng(eta_ss).standard_normal(shape),
        seed=seed if isinstance(seed, int) else None,
    )


@dataclass
class PathRecord:
    """One simulated trajectory on the recording grid.

    ``times`` is strictly increasing and every stored main-pair state is
    strictly positive.  When a comparison process was co-integrated its
    samples sit in ``psi``/``phi``/``z`` (``z`` is NaN before its start
    time).  Under shared noise the records satisfy ``y <= psi`` and
    ``x <= phi`` at every grid point.
    """

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    dt: Optional[float] = None
    seed: Optional[int] = None
    halvings: int = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_state(self) -> State:
        return State(float(self.x[-1]), float(self.y[-1]))

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t": self.times, "x": self.x, "y": self.y}
        for name in AUX_PROCESSES:
            arr = getattr(self, name)
            if arr is not None:
                cols[name] = arr
        return cols

    def validate(self) -> None:
        """Check the record invariants; raises DomainError on violation."""
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")
        for name in ("x", "y"):
            arr = getattr(self, name)
            if arr.shape != self.times.shape:
                raise DomainError(f"{name} length does not match times")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
                raise DomainError(f"stored {name} values must be finite and > 0")
        if self.psi is not None and np.any(self.y > self.psi):
            raise DomainError("pathwise comparison violated: y > psi somewhere")
        if self.phi is not None and np.any(self.x > self.phi):
            raise DomainError("pathwise comparison violated: x > phi somewhere")

    def to_csv(self, path) -> None:
        """Write ``t,x,y[,psi][,phi][,z]`` at full double precision."""
        cols = self.columns()
        data = np.column_stack(list(cols.values()))
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols.keys()) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# stepping kernels (shared by the public scalar ops and the path engine)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _StepConsts:
    dt: float
    a1: float  # sigma1 * sqrt(dt)
    a2: float  # sigma2 * sqrt(dt)
    m1: float  # milstein coefficient sigma1^2 dt / 2 (0 for Euler-Maruyama)
    m2: float
    phi_rate: float  # delta - h^2


def _make_consts(p: ModelParams, dt: float, milstein: bool, h2: float) -> _StepConsts:
    sq = math.sqrt(dt)
    return _StepConsts(
        dt=dt,
        a1=p.sigma1 * sq,
        a2=p.sigma2 * sq,
        m1=0.5 * p.sigma1 * p.sigma1 * dt if milstein else 0.0,
        m2=0.5 * p.sigma2 * p.sigma2 * dt if milstein else 0.0,
        phi_rate=p.delta - h2,
    )


def _step_pair(p: ModelParams, c: _StepConsts, x, y, xi, eta):
    dx = p.sigma + p.rho * x * y / (p.eta + y) - p.mu * x * y - p.delta * x
    dy = p.alpha * y - p.beta * y * y - x * y
    x1 = x + dx * c.dt + c.a1 * x * xi + c.m1 * x * (xi * xi - 1.0)
    y1 = y + dy * c.dt + c.a2 * y * eta + c.m2 * y * (eta * eta - 1.0)
    return x1, y1


def _step_psi(p: ModelParams, c: _StepConsts, psi, eta):
    return psi + psi * (p.alpha - p.beta * psi) * c.dt + c.a2 * psi * eta + c.m2 * psi * (eta * eta - 1.0)


def _step_phi(p: ModelParams, c: _StepConsts, phi, xi):
    return phi + (p.sigma - c.phi_rate * phi) * c.dt + c.a1 * phi * xi + c.m1 * phi * (xi * xi - 1.0)


def _step_z(p: ModelParams, c: _StepConsts, z, xi):
    return z + (p.sigma - p.delta * z) * c.dt + c.a1 * z * xi + c.m1 * z * (xi * xi - 1.0)


def _step_all(p: ModelParams, c: _StepConsts, vals: dict, xi: float, eta: float) -> dict:
    x1, y1 = _step_pair(p, c, vals["x"], vals["y"], xi, eta)
    new = {"x": x1, "y": y1}
    if "psi" in vals:
        new["psi"] = _step_psi(p, c, vals["psi"], eta)
    if "phi" in vals:
        new["phi"] = _step_phi(p, c, vals["phi"], xi)
    if "z" in vals:
        new["z"] = _step_z(p, c, vals["z"], xi)
    return new


def _all_ok(old: dict, new: dict, eps: float) -> bool:
    return all(math.isfinite(new[k]) and new[k] > eps * old[k] for k in new)


def _halved_advance(p, milstein, h2, eps, max_halvings, gxi, geta, vals, dt, t, depth):
    """Advance all active processes by ``dt`` with fresh draws, halving on failure."""
    c = _make_consts(p, dt, milstein, h2)
    xi = gxi.standard_normal()
    eta = geta.standard_normal()
    new = _step_all(p, c, vals, xi, eta)
    if _all_ok(vals, new, eps):
        return new, 0
    if depth >= max_halvings:
        raise SimulationError(
            f"positivity could not be restored near t={t:.6g} "
            f"after {max_halvings} halvings",
            time=t,
        )
    mid, n1 = _halved_advance(p, milstein, h2, eps, max_halvings, gxi, geta, vals, dt / 2, t, depth + 1)
    end, n2 = _halved_advance(
        p, milstein, h2, eps, max_halvings, gxi, geta, mid, dt / 2, t + dt / 2, depth + 1
    )
    return end, 1 + n1 + n2


# ---------------------------------------------------------------------------
# public single-step operations
# ---------------------------------------------------------------------------


def milstein_step(p: ModelParams, s: State, xi: float, eta: float, dt: float) -> State:
    """One Milstein step of the main pair from ``s``.

    ``xi`` and ``eta`` are the unit normals feeding B1 and B2; the Brownian
    increments are ``sqrt(dt)*xi`` and ``sqrt(dt)*eta``.  With both noise
    intensities zero this is exactly a deterministic Euler step.  Raises
    :class:`PositivityError` if a coordinate lands at or below zero.
    """
    if dt <= 0:
        raise DomainError("dt must be > 0")
    c = _make_consts(p, dt, milstein=True, h2=response_peak(p) ** 2)
    x1, y1 = _step_pair(p, c, s.x, s.y, xi, eta)
    if x1 <= 0 or y1 <= 0 or not (math.isfinite(x1) and math.isfinite(y1)):
        raise PositivityError(f"step left the positive quadrant: ({x1}, {y1})")
    return State(float(x1), float(y1))


def em_step(p: ModelParams, s: State, xi: float, eta: float, dt: float) -> State:
    """One Euler-Maruyama step of the main pair (no Milstein correction)."""
    if dt <= 0:
        raise DomainError("dt must be > 0")
    c = _make_consts(p, dt, milstein=False, h2=response_peak(p) ** 2)
    x1, y1 = _step_pair(p, c, s.x, s.y, xi, eta)
    if x1 <= 0 or y1 <= 0 or not (math.isfinite(x1) and math.isfinite(y1)):
        raise PositivityError(f"step left the positive quadrant: ({x1}, {y1})")
    return State(float(x1), float(y1))


# ---------------------------------------------------------------------------
# path engine
# ---------------------------------------------------------------------------


@dataclass
class RawPaths:
    """Recorded ensemble trajectories: arrays shaped (n_record, n_paths)."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: Optional[np.ndarray]
    phi: Optional[np.ndarray]
    z: Optional[np.ndarray]
    halvings: np.ndarray  # per path


def _run_paths(
    p: ModelParams,
    x0: float,
    y0: float,
    policy: StepPolicy,
    horizon: float,
    path_seeds: Sequence,
    which: Iterable[str] = (),
    t0_for_z: float = 0.0,
    record_stride: int = 1,
) -> RawPaths:
    """Integrate one path per seed on a shared grid, recording every
    ``record_stride``-th point (the final point is always recorded).

    Each seed (int or SeedSequence) is split into two generator streams, one
    per Brownian motion; normals are pre-drawn in fixed-size blocks so the
    per-path stream does not depend on ensemble size.
    """
    which = tuple(which)
    for w in which:
        if w not in AUX_PROCESSES:
            raise DomainError(f"unknown auxiliary process {w!r}; expected subset of {AUX_PROCESSES}")
    if horizon <= 0:
        raise DomainError("horizon must be > 0")
    if record_stride < 1:
        raise DomainError("record_stride must be >= 1")
    if t0_for_z < 0:
        raise DomainError("t0_for_z must be >= 0")

    dt = policy.dt
    n_steps = int(round(horizon / dt))
    if n_steps < 1:
        raise DomainError("horizon must cover at least one step of the policy dt")
    milstein = policy.scheme is StepScheme.MILSTEIN
    h2 = response_peak(p) ** 2
    eps = policy.eps_pos

    gens = []
    for seed in path_seeds:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        xi_ss, eta_ss = ss.spawn(2)
        gens.append((np.random.default_rng(xi_ss), np.random.default_rng(eta_ss)))
    n = len(gens)
    if n == 0:
        raise DomainError("at least one path seed is required")

    use_psi = "psi" in which
    use_phi = "phi" in which
    use_z = "z" in which
    x = np.full(n, float(x0))
    y = np.full(n, float(y0))
    psi = np.full(n, float(y0)) if use_psi else None
    phi = np.full(n, float(x0)) if use_phi else None
    z = np.full(n, np.nan) if use_z else None
    i0_z = min(int(math.ceil(t0_for_z / dt - 1e-9)), n_steps) if use_z else -1

    rec_idx = np.arange(0, n_steps + 1, record_stride)
    if rec_idx[-1] != n_steps:
        rec_idx = np.append(rec_idx, n_steps)
    n_rec = len(rec_idx)
    times = rec_idx * dt
    rec = {
        "x": np.empty((n_rec, n)),
        "y": np.empty((n_rec, n)),
    }
    for name, used in (("psi", use_psi), ("phi", use_phi), ("z", use_z)):
        if used:
            rec[name] = np.empty((n_rec, n))
    halvings = np.zeros(n, dtype=np.int64)

    consts = _make_consts(p, dt, milstein, h2)

    def record(row: int) -> None:
        rec["x"][row] = x
        rec["y"][row] = y
        if use_psi:
            rec["psi"][row] = psi
        if use_phi:
            rec["phi"][row] = phi
        if use_z:
            rec["z"][row] = z

    next_rec = 0
    if use_z and i0_z == 0:
        z[:] = x
    record(0)
    next_rec = 1

    step = 0
    while step < n_steps:
        k = min(_CHUNK, n_steps - step)
        xi_chunk = np.empty((k, n))
        eta_chunk = np.empty((k, n))
        for j, (gxi, geta) in enumerate(gens):
            xi_chunk[:, j] = gxi.standard_normal(k)
            eta_chunk[:, j] = geta.standard_normal(k)
        for kk in range(k):
            i = step + kk
            xi = xi_chunk[kk]
            eta = eta_chunk[kk]
            x1, y1 = _step_pair(p, consts, x, y, xi, eta)
            ok = np.isfinite(x1) & (x1 > eps * x) & np.isfinite(y1) & (y1 > eps * y)
            if use_psi:
                psi1 = _step_psi(p, consts, psi, eta)
                ok &= np.isfinite(psi1) & (psi1 > eps * psi)
            if use_phi:
                phi1 = _step_phi(p, consts, phi, xi)
                ok &= np.isfinite(phi1) & (phi1 > eps * phi)
            z_active = use_z and i >= i0_z
            if z_active:
                z1 = _step_z(p, consts, z, xi)
                ok &= np.isfinite(z1) & (z1 > eps * z)
            if not ok.all():
                t_now = i * dt
                for j in np.nonzero(~ok)[0]:
                    vals = {"x": float(x[j]), "y": float(y[j])}
                    if use_psi:
                        vals["psi"] = float(psi[j])
                    if use_phi:
                        vals["phi"] = float(phi[j])
                    if z_active:
                        vals["z"] = float(z[j])
                    if policy.max_halvings < 1:
                        raise SimulationError(
                            f"positivity violated at t={t_now:.6g} and halving is disabled",
                            time=t_now,
                        )
                    gxi, geta = gens[j]
                    mid, n1 = _halved_advance(
                        p, milstein, h2, eps, policy.max_halvings, gxi, geta, vals, dt / 2, t_now, 1
                    )
                    end, n2 = _halved_advance(
                        p, milstein, h2, eps, policy.max_halvings, gxi, geta,
                        mid, dt / 2, t_now + dt / 2, 1,
                    )
                    halvings[j] += 1 + n1 + n2
                    x1[j] = end["x"]
                    y1[j] = end["y"]
                    if use_psi:
                        psi1[j] = end["psi"]
                    if use_phi:
                        phi1[j] = end["phi"]
                    if z_active:
                        z1[j] = end["z"]
            x, y = x1, y1
            if use_psi:
                psi = psi1
            if use_phi:
                phi = phi1
            if z_active:
                z = z1
            if use_z and i + 1 == i0_z:
                z = x.copy()
            if next_rec < n_rec and rec_idx[next_rec] == i + 1:
                record(next_rec)
                next_rec += 1
        step += k

    return RawPaths(
        times=times,
        x=rec["x"],
        y=rec["y"],
        psi=rec.get("psi"),
        phi=rec.get("phi"),
        z=rec.get("z"),
        halvings=halvings,
    )


def _record_from_raw(raw: RawPaths, j: int, dt: float, seed) -> PathRecord:
    return PathRecord(
        times=raw.times.copy(),
        x=raw.x[:, j].copy(),
        y=raw.y[:, j].copy(),
        psi=None if raw.psi is None else raw.psi[:, j].copy(),
        phi=None if raw.phi is None else raw.phi[:, j].copy(),
        z=None if raw.z is None else raw.z[:, j].copy(),
        dt=dt,
        seed=seed if isinstance(seed, int) else None,
        halvings=int(raw.halvings[j]),
    )


def simulate(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    horizon: float,
    seed,
    record_stride: int = 1,
) -> PathRecord:
    """Integrate one path of the main pair over ``[0, horizon]``.

    Deterministic given (seed, policy, params): the same call produces a
    bit-identical record.  Raises :class:`SimulationError` (carrying the
    failing time) if the positivity policy runs out of halvings.
    """
    raw = _run_paths(p, s0.x, s0.y, policy, horizon, [seed], which=(), record_stride=record_stride)
    return _record_from_raw(raw, 0, policy.dt, seed)


def simulate_coupled(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    horizon: float,
    seed,
    which: Iterable[str],
    t0_for_z: float = 0.0,
    record_stride: int = 1,
) -> PathRecord:
    """Integrate the main pair together with comparison processes.

    ``which`` is a nonempty subset of {"psi", "phi", "z"}.  psi starts at
    y0 and shares the B2 increments; phi starts at x0, z starts at
    x(t0_for_z), and both share the B1 increments.  Positivity halving is
    applied to all co-integrated processes jointly so the shared-noise
    ordering (y <= psi, x <= phi) is preserved step by step.
    """
    which = tuple(which)
    if not which:
        raise DomainError("simulate_coupled requires a nonempty set of auxiliary processes")
    raw = _run_paths(
        p, s0.x, s0.y, policy, horizon, [seed],
        which=which, t0_for_z=t0_for_z, record_stride=record_stride,
    )
    return _record_from_raw(raw, 0, policy.dt, seed)
