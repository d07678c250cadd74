"""The piecewise-affine Markov chain: parameters, state, regions, one-step maps.

The chain lives on S = R x R+ with state x = (R, Z): reserve and latent
backlogged demand.  On each of the four reserve intervals D1..D4 the
transition is affine, x' = A_i x + b_i + (N, 0), with N a Gaussian noise
draw supplied by the caller.  ``step`` evaluates the per-region scalar
update; ``step_matrix`` evaluates the generic matrix-vector form.  Both
routes are kept so they can cross-check each other (they agree to within
1 ulp per coordinate; in practice bit-for-bit).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ParamError

__all__ = [
    "Regime",
    "Params",
    "State",
    "Region",
    "AffinePiece",
    "StepRecord",
    "validate_params",
    "classify_region",
    "ramp_control",
    "frustrated_demand",
    "expressed_backlog",
    "step",
    "step_matrix",
    "affine_piece",
]


class Regime(str, enum.Enum):
    """Stability regime implied by the sign of the evaporation rate."""

    POSITIVE = "positive"            # mu > 0: stabilizable
    ZERO = "zero"                    # mu == 0: open case
    NEGATIVE_MILD = "negative-mild"  # -lambda < mu < 0: unstable
    NEGATIVE_TRIVIAL = "negative-trivial"  # mu <= -lambda: Z monotone


class Region(str, enum.Enum):
    """Which reserve interval the state occupies (left-closed, right-open)."""

    D1 = "D1"  # r < 0: frustration active, ramp-up saturated
    D2 = "D2"  # 0 <= r < r* - zeta: ramp-up saturated
    D3 = "D3"  # r* - zeta <= r < r* + xi: target reachable in one step
    D4 = "D4"  # r >= r* + xi: ramp-down saturated


@dataclass(frozen=True)
class Params:
    """Validated model constants.  Build via :func:`validate_params`."""

    lam: float      # inverse re-expression delay, 0 < lam < 1
    mu: float       # evaporation rate, lam + mu < 1
    zeta: float     # ramp-up limit, > 0
    xi: float       # ramp-down limit, > 0
    r_star: float   # target reserve, > zeta
    sigma: float    # noise standard deviation, > 0
    gamma: float    # derived: 1 - lam - mu
    regime: Regime

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": self.mu,
            "zeta": self.zeta,
            "xi": self.xi,
            "r_star": self.r_star,
            "sigma": self.sigma,
            "gamma": self.gamma,
            "regime": self.regime.value,
        }


State = tuple[float, float]  # (r, z) with z >= 0


@dataclass(frozen=True)
class AffinePiece:
    """One affine branch of the transition: x' = a @ x + b (+ noise on r)."""

    a: tuple[tuple[float, float], tuple[float, float]]
    b: tuple[float, float]


@dataclass(frozen=True)
class StepRecord:
    """Observables attached to one transition."""

    t: int
    state: State
    region: Region
    noise: float
    b_expr: float        # expressed backlog B = lam * Z
    f_frustrated: float  # frustrated demand F = max(-R, 0)
    h_control: float     # real-time purchase increment


def validate_params(
    lam: float,
    mu: float,
    zeta: float,
    xi: float,
    r_star: float,
    sigma: float,
) -> Params:
    """Check the parameter constraints and derive gamma and the regime.

    Raises :class:`ParamError` naming the first violated constraint.  Any
    sign of mu is accepted as long as lam + mu < 1; mu <= -lam is merely
    tagged as the trivially unstable regime.
    """
    vals = dict(lam=lam, mu=mu, zeta=zeta, xi=xi, r_star=r_star, sigma=sigma)
    for name, v in vals.items():
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ParamError(name, "must be a finite number")
    if not 0.0 < lam < 1.0:
        raise ParamError("lambda", "must satisfy 0 < lambda < 1")
    if lam + mu >= 1.0:
        raise ParamError("mu", "lambda+mu must be < 1")
    if zeta <= 0.0:
        raise ParamError("zeta", "must be > 0")
    if xi <= 0.0:
        raise ParamError("xi", "must be > 0")
    if r_star <= zeta:
        raise ParamError("r_star", "must be > zeta")
    if sigma < 0.0:
        # sigma == 0 is allowed: deterministic runs are used as oracles.
        raise ParamError("sigma", "must be >= 0")

    if mu > 0.0:
        regime = Regime.POSITIVE
    elif mu == 0.0:
        regime = Regime.ZERO
    elif mu > -lam:
        regime = Regime.NEGATIVE_MILD
    else:
        regime = Regime.NEGATIVE_TRIVIAL

    gamma = 1.0 - lam - mu
    return Params(float(lam), float(mu), float(zeta), float(xi),
                  float(r_star), float(sigma), gamma, regime)


def classify_region(p: Params, x: State) -> Region:
    """Map a state to the unique region containing it."""
    r = x[0]
    if r < 0.0:
        return Region.D1
    if r < p.r_star - p.zeta:
        return Region.D2
    if r < p.r_star + p.xi:
        return Region.D3
    return Region.D4


def ramp_control(p: Params, r: float) -> float:
    """Threshold control: steer reserve to r*, clipped to [-xi, zeta]."""
    return max(min(p.zeta, p.r_star - r), -p.xi)


def frustrated_demand(r: float) -> float:
    """F = [-R]+ : demand denied satisfaction this slot."""
    return max(-r, 0.0)


def expressed_backlog(p: Params, z: float) -> float:
    """B = lam * Z : backlog re-entering demand this slot."""
    return p.lam * z


def affine_piece(p: Params, region: Region) -> AffinePiece:
    """The (A_i, b_i) pair for one region."""
    llm = p.lam * (p.lam + p.mu)
    g = p.gamma
    if region is Region.D1:
        return AffinePiece(((1.0 + p.lam, llm), (-1.0, g)), (p.zeta, 0.0))
    if region is Region.D2:
        return AffinePiece(((1.0, llm), (0.0, g)), (p.zeta, 0.0))
    if region is Region.D3:
        return AffinePiece(((0.0, llm), (0.0, g)), (p.r_star, 0.0))
    return AffinePiece(((1.0, llm), (0.0, g)), (-p.xi, 0.0))


def step(p: Params, x: State, n: float, t: int = 0) -> tuple[State, StepRecord]:
    """One transition of the chain with an explicit noise draw.

    Pure: all randomness is the caller's responsibility.  The scalar update
    is evaluated per region so that it matches :func:`step_matrix`
    bit-for-bit (same operation order per branch).
    """
    r, z = x
    region = classify_region(p, x)
    llm = p.lam * (p.lam + p.mu)

    if region is Region.D1:
        rp = (((1.0 + p.lam) * r + llm * z) + p.zeta) + n
        zp = -r + p.gamma * z
    elif region is Region.D2:
        rp = ((r + llm * z) + p.zeta) + n
        zp = p.gamma * z
    elif region is Region.D3:
        rp = (llm * z + p.r_star) + n
        zp = p.gamma * z
    else:
        rp = ((r + llm * z) + (-p.xi)) + n
        zp = p.gamma * z

    record = StepRecord(
        t=t,
        state=(r, z),
        region=region,
        noise=n,
        b_expr=expressed_backlog(p, z),
        f_frustrated=frustrated_demand(r),
        h_control=ramp_control(p, r),
    )
    return (rp, zp), record


def step_matrix(p: Params, x: State, n: float) -> State:
    """One transition via the generic matrix form A_i x + b_i + (n, 0)."""
    r, z = x
    piece = affine_piece(p, classify_region(p, x))
    (a00, a01), (a10, a11) = piece.a
    b0, b1 = piece.b
    rp = ((a00 * r + a01 * z) + b0) + n
    zp = (a10 * r + a11 * z) + b1
    return (rp, zp)
