"""Seeded trajectory simulation and stability/instability experiments.

Every entry point takes an explicit 64-bit seed; per-chain streams are
derived from (seed, chain index) so results are reproducible and
independent of how work is distributed across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from .dynamics import Params, State, affine_piece, classify_region
from .errors import SimulationDiverged
from .lyapunov import lyap_h
from .rng import gaussian, stream

__all__ = [
    "OVERFLOW_GUARD",
    "SimConfig",
    "TrajectoryStats",
    "Trajectory",
    "GrowthResult",
    "StabilityVerdict",
    "SweepPoint",
    "simulate",
    "monotone_violations",
    "empirical_drift",
    "two_chain_convergence",
    "growth_slope",
    "hitting_probability",
    "sweep",
]

OVERFLOW_GUARD = 1e300
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)

# Verdict thresholds are artifact choices, not model constants; both are
# configurable through sweep().
KS_THRESHOLD = 0.05
SLOPE_THRESHOLD = 0.03

# Default launch state for growth-rate probes: deep in the frustrated
# region, where the unstable mode (eigenvalue 1 - mu of A1) is excited.
GROWTH_X0 = (-100.0, 50.0)


def _iterate_py(lam, zeta, xi, rs, gamma, llm, r0, z0, noise, out_r, out_z):
    # Branch arithmetic mirrors dynamics.step exactly.
    r = r0
    z = z0
    out_r[0] = r
    out_z[0] = z
    lo = rs - zeta
    hi = rs + xi
    one_lam = 1.0 + lam
    for t in range(noise.shape[0]):
        n = noise[t]
        if r < 0.0:
            rp = ((one_lam * r + llm * z) + zeta) + n
            zp = -r + gamma * z
        elif r < lo:
            rp = ((r + llm * z) + zeta) + n
            zp = gamma * z
        elif r < hi:
            rp = (llm * z + rs) + n
            zp = gamma * z
        else:
            rp = ((r + llm * z) + (-xi)) + n
            zp = gamma * z
        r = rp
        z = zp
        out_r[t + 1] = r
        out_z[t + 1] = z
        if abs(r) > 1e300 or z > 1e300:
            return t + 1
    return -1


try:  # pragma: no cover - exercised indirectly
    from numba import njit

    _iterate = njit(cache=True)(_iterate_py)
except Exception:  # pragma: no cover
    _iterate = _iterate_py


@dataclass(frozen=True)
class SimConfig:
    params: Params
    x0: State
    steps: int
    burn_in: int = 0
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if self.steps <= self.burn_in or self.burn_in < 0:
            raise ValueError("need steps > burn_in >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.x0[1] < 0.0:
            raise ValueError("initial backlog z must be >= 0")


@dataclass(frozen=True)
class TrajectoryStats:
    """Post-burn-in summary of one trajectory."""

    r_mean: float
    r_var: float
    r_min: float
    r_max: float
    r_quantiles: dict[float, float]
    z_mean: float
    z_var: float
    z_min: float
    z_max: float
    z_quantiles: dict[float, float]
    occupancy: dict[str, float]
    mean_frustrated: float
    mean_expressed: float
    final_state: State
    n_samples: int

    def as_dict(self) -> dict:
        return {
            "r": {"mean": self.r_mean, "var": self.r_var, "min": self.r_min,
                  "max": self.r_max,
                  "quantiles": {str(q): v for q, v in self.r_quantiles.items()}},
            "z": {"mean": self.z_mean, "var": self.z_var, "min": self.z_min,
                  "max": self.z_max,
                  "quantiles": {str(q): v for q, v in self.z_quantiles.items()}},
            "occupancy": self.occupancy,
            "mean_frustrated": self.mean_frustrated,
            "mean_expressed": self.mean_expressed,
            "final_state": list(self.final_state),
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class Trajectory:
    """Thinned per-step records (arrays share a common length)."""

    t: np.ndarray
    r: np.ndarray
    z: np.ndarray
    region: np.ndarray       # strings "D1".."D4"
    b_expr: np.ndarray
    f_frustrated: np.ndarray
    h_control: np.ndarray


def _run_chain_raw(p: Params, x0: State, steps: int,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, int]:
    """Run the chain; returns (r, z, diverged_at) with diverged_at == -1
    when the overflow guard never fired.  On divergence the arrays are
    valid up to and including index diverged_at."""
    noise = gaussian(rng, steps, p.sigma)
    out_r = np.empty(steps + 1)
    out_z = np.empty(steps + 1)
    llm = p.lam * (p.lam + p.mu)
    bad = _iterate(p.lam, p.zeta, p.xi, p.r_star, p.gamma, llm,
                   float(x0[0]), float(x0[1]), noise, out_r, out_z)
    return out_r, out_z, int(bad)


def _run_chain(p: Params, x0: State, steps: int,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    out_r, out_z, bad = _run_chain_raw(p, x0, steps, rng)
    if bad >= 0:
        raise SimulationDiverged(bad, (out_r[bad], out_z[bad]))
    return out_r, out_z


def monotone_violations(p: Params, x0: State, steps: int,
                        seed: int) -> tuple[int, int]:
    """Count Z decreases along one trajectory.

    Returns (violations, steps_simulated); the count covers the prefix up
    to the overflow guard if the chain diverges (expected for mu <= -lam).
    """
    r, z, bad = _run_chain_raw(p, x0, steps, stream(seed))
    end = steps + 1 if bad < 0 else bad + 1
    viol = int(np.count_nonzero(np.diff(z[:end]) < 0.0))
    return viol, end - 1


def _regions(p: Params, r: np.ndarray) -> np.ndarray:
    out = np.full(r.shape, "D4", dtype="U2")
    out[r < p.r_star + p.xi] = "D3"
    out[r < p.r_star - p.zeta] = "D2"
    out[r < 0.0] = "D1"
    return out


def simulate(cfg: SimConfig,
             return_records: bool = False) -> tuple[TrajectoryStats, Trajectory | None]:
    """Run one chain and summarize it.

    Deterministic given the config.  Raises :class:`SimulationDiverged`
    if |R| or Z exceeds the 1e300 guard.
    """
    p = cfg.params
    rng = stream(cfg.seed)
    r, z = _run_chain(p, cfg.x0, cfg.steps, rng)

    rs_, zs_ = r[cfg.burn_in:], z[cfg.burn_in:]
    regions = _regions(p, rs_)
    counts = {f"D{i}": float(np.count_nonzero(regions == f"D{i}")) / rs_.size
              for i in (1, 2, 3, 4)}
    f_vals = np.maximum(-rs_, 0.0)
    stats = TrajectoryStats(
        r_mean=float(rs_.mean()), r_var=float(rs_.var()),
        r_min=float(rs_.min()), r_max=float(rs_.max()),
        r_quantiles={q: float(np.quantile(rs_, q)) for q in QUANTILES},
        z_mean=float(zs_.mean()), z_var=float(zs_.var()),
        z_min=float(zs_.min()), z_max=float(zs_.max()),
        z_quantiles={q: float(np.quantile(zs_, q)) for q in QUANTILES},
        occupancy=counts,
        mean_frustrated=float(f_vals.mean()),
        mean_expressed=float(p.lam * zs_.mean()),
        final_state=(float(r[-1]), float(z[-1])),
        n_samples=int(rs_.size),
    )

    traj = None
    if return_records:
        idx = np.arange(0, cfg.steps + 1, cfg.record_every)
        rr = r[idx]
        traj = Trajectory(
            t=idx,
            r=rr,
            z=z[idx],
            region=_regions(p, rr),
            b_expr=p.lam * z[idx],
            f_frustrated=np.maximum(-rr, 0.0),
            h_control=np.clip(p.r_star - rr, -p.xi, p.zeta),
        )
    return stats, traj


def empirical_drift(p: Params, x: State, n: int, seed: int) -> tuple[float, float]:
    """Sample mean and stderr of H(X(1)) - H(x) over n independent draws."""
    rng = stream(seed)
    noise = gaussian(rng, n, p.sigma)
    piece = affine_piece(p, classify_region(p, x))
    r, z = x
    (a00, a01), (a10, a11) = piece.a
    det_r = (a00 * r + a01 * z) + piece.b[0]
    zp = (a10 * r + a11 * z) + piece.b[1]
    rp = det_r + noise
    a = rp + p.lam * zp
    b = rp + (p.lam + p.mu) * zp
    incr = (a * a + b * b) - lyap_h(p, x)
    mean = float(incr.mean())
    stderr = 0.0 if p.sigma == 0.0 else float(incr.std(ddof=1) / math.sqrt(n))
    return mean, stderr


def two_chain_convergence(p: Params, x0a: State, x0b: State, steps: int,
                          burn_in: int, seed: int) -> float:
    """KS distance between post-burn-in R-marginals of two chains.

    Empirical proxy for total-variation convergence to a unique
    stationary law; meaningful for mu > 0 but runs for any parameters.
    """
    ra, _ = _run_chain(p, x0a, steps, stream(seed, 0))
    # Identical initial conditions share the stream, so the distance is
    # exactly 0 (a determinism check); distinct ones get independent noise.
    chain_b = 0 if x0b == x0a else 1
    rb, _ = _run_chain(p, x0b, steps, stream(seed, chain_b))
    return float(ks_2samp(ra[burn_in:], rb[burn_in:], method="asymp").statistic)


@dataclass(frozen=True)
class GrowthResult:
    median_slope: float      # nan if no seed produced a usable fit
    slopes: tuple[float, ...]
    excluded: int            # seeds with Z == 0 somewhere in the window


def growth_slope(p: Params, x0: State, t_lo: int, t_hi: int,
                 n_seeds: int, seed: int = 0) -> GrowthResult:
    """Median least-squares slope of log Z(t) over [t_lo, t_hi].

    Seeds whose backlog touches 0 inside the window (log undefined) are
    excluded and counted.
    """
    slopes = []
    excluded = 0
    ts = np.arange(t_lo, t_hi + 1)
    for k in range(n_seeds):
        _, z = _run_chain(p, x0, t_hi, stream(seed, k))
        window = z[t_lo:t_hi + 1]
        if np.any(window <= 0.0):
            excluded += 1
            continue
        slope = np.polyfit(ts, np.log(window), 1)[0]
        slopes.append(float(slope))
    median = float(np.median(slopes)) if slopes else float("nan")
    return GrowthResult(median, tuple(slopes), excluded)


def hitting_probability(p: Params, x0: State,
                        target: tuple[float, float, float, float],
                        horizon: int, n_seeds: int,
                        seed: int = 0) -> tuple[float, float]:
    """Fraction of seeds entering the rectangle within the horizon.

    target is (r_min, r_max, z_min, z_max), boundaries inclusive.
    """
    r_lo, r_hi, z_lo, z_hi = target
    hits = 0
    for k in range(n_seeds):
        if horizon == 0:
            inside = r_lo <= x0[0] <= r_hi and z_lo <= x0[1] <= z_hi
        else:
            r, z = _run_chain(p, x0, horizon, stream(seed, k))
            inside = bool(np.any((r >= r_lo) & (r <= r_hi)
                                 & (z >= z_lo) & (z <= z_hi)))
        hits += inside
    est = hits / n_seeds
    stderr = math.sqrt(est * (1.0 - est) / n_seeds)
    return est, stderr


@dataclass(frozen=True)
class StabilityVerdict:
    regime: str
    ks_distance: float       # nan when a chain diverged
    logz_slope: float        # nan when no seed usable
    monotone_violations: int
    verdict: str             # stable-consistent | unstable-consistent | inconclusive


@dataclass(frozen=True)
class SweepPoint:
    index: int
    overrides: dict[str, float]
    params: Params | None
    result: StabilityVerdict | None
    error: str | None = None


def _verdict(p: Params, seed: int, steps: int, burn_in: int, n_seeds: int,
             ks_threshold: float, slope_threshold: float,
             growth_x0: State) -> StabilityVerdict:
    try:
        ks = two_chain_convergence(p, (0.0, 0.0), (-50.0, 100.0),
                                   steps, burn_in, seed)
    except SimulationDiverged:
        ks = float("nan")

    t_hi = min(500, steps)
    try:
        growth = growth_slope(p, growth_x0, t_hi * 2 // 5, t_hi, n_seeds, seed + 1)
        slope = growth.median_slope
        diverged = False
    except SimulationDiverged:
        slope = float("inf")
        diverged = True

    violations = 0
    if p.mu <= -p.lam:
        # Z is monotone nondecreasing here; count violations as evidence.
        violations, _ = monotone_violations(p, (0.0, 0.0), min(steps, 10_000),
                                            seed + 2)

    ks_ok = math.isfinite(ks) and ks < ks_threshold
    growing = diverged or (math.isfinite(slope) and slope > slope_threshold)
    # A confidently positive growth slope outweighs a small finite-horizon
    # KS distance (the distance test is pre-asymptotic on a diverging
    # chain); only failing both tests is inconclusive.
    if growing:
        verdict = "unstable-consistent"
    elif p.mu <= -p.lam and violations == 0:
        verdict = "unstable-consistent"
    elif ks_ok:
        verdict = "stable-consistent"
    else:
        verdict = "inconclusive"
    return StabilityVerdict(p.regime.value, ks, slope, violations, verdict)


def sweep(base: Params, grid: list[dict[str, float]], steps: int,
          burn_in: int, n_seeds: int = 16, seed: int = 0,
          ks_threshold: float = KS_THRESHOLD,
          slope_threshold: float = SLOPE_THRESHOLD,
          growth_x0: State = GROWTH_X0) -> list[SweepPoint]:
    """Evaluate a stability verdict at each grid point.

    grid is a list of parameter overrides (keys among lambda, mu, zeta,
    xi, r_star, sigma).  Each point gets a seed derived from (seed, index),
    so results do not depend on evaluation order or worker count.
    Per-point failures are recorded and the sweep continues.
    """
    from .dynamics import validate_params

    rows = []
    for i, overrides in enumerate(grid):
        vals = base.as_dict()
        vals.update(overrides)
        try:
            p = validate_params(vals["lambda"], vals["mu"], vals["zeta"],
                                vals["xi"], vals["r_star"], vals["sigma"])
        except Exception as exc:
            rows.append(SweepPoint(i, dict(overrides), None, None, str(exc)))
            continue
        point_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        try:
            res = _verdict(p, point_seed, steps, burn_in, n_seeds,
                           ks_threshold, slope_threshold, growth_x0)
            rows.append(SweepPoint(i, dict(overrides), p, res))
        except Exception as exc:
            rows.append(SweepPoint(i, dict(overrides), p, None, str(exc)))
    return rows
