"""One-dimensional deterministic dynamics of strategy-share growth and of a
bistable control-parameter family.

Two right-hand sides are built in:

* replicator: ``dx/dt = x (1 - x) (P_C - P_D)``, growth of the cooperative
  share under its payoff advantage.  Payoffs are either constants or the
  frequency-dependent means of a 2x2 game,
  ``P_C(x) = r x + sg (1 - x)`` and ``P_D(x) = t x + pu (1 - x)``.
* cusp: ``ds/dt = lam + theta s - s**3``, the minimal polynomial family with
  a fold pair.  For theta > 0 two stable branches coexist between the folds
  at ``lam = -/+ 2 (theta / 3)**1.5``, which is what drives the hysteresis
  loop; for theta <= 0 the equilibrium is unique for every lam.

Custom right-hand sides enter either as plain callables or via
:class:`TabulatedRhs`, a piecewise-linear table.

Integration is classic fixed-step fourth-order Runge-Kutta (fixed step
keeps runs bit-reproducible).  All operations are pure functions of their
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .abm import GameMatrix

ROOT_TOL = 1e-10
STABILITY_FD_STEP = 1e-6
MARGINAL_BAND = 1e-8
DEFAULT_DT = 1e-3
DEFAULT_GRID_N = 1024
DEFAULT_RELAX_T = 50.0
DEFAULT_RELAX_DT = 1e-2
DEFAULT_JUMP_TOL = 0.5
SETTLE_TOL = 1e-9
EQUILIBRATION_TOL = 1e-6

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"


class NumericalDivergenceError(RuntimeError):
    """Integration produced a non-finite state."""


@dataclass(frozen=True)
class ControlParams:
    """Control parameter ``lam`` and shape parameter ``theta`` of the cusp
    family (``lam`` is the swept knob; ``theta`` selects mono- vs bistable)."""

    lam: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.theta)):
            raise ValueError("control parameters must be finite")


@dataclass(frozen=True)
class PayoffSpec:
    """Cooperation/defection payoffs, either constant or game-derived."""

    mode: str  # "constant" | "matrix"
    p_c: float = 0.0
    p_d: float = 0.0
    game: GameMatrix | None = None

    def __post_init__(self):
        if self.mode == "constant":
            if not (math.isfinite(self.p_c) and math.isfinite(self.p_d)):
                raise ValueError("constant payoffs must be finite")
        elif self.mode == "matrix":
            if self.game is None:
                raise ValueError("matrix mode requires a game")
        else:
            raise ValueError(f"unknown payoff mode {self.mode!r}")

    @classmethod
    def constant(cls, p_c: float, p_d: float) -> "PayoffSpec":
        return cls(mode="constant", p_c=float(p_c), p_d=float(p_d))

    @classmethod
    def from_game(cls, game: GameMatrix) -> "PayoffSpec":
        return cls(mode="matrix", game=game)

    def effective(self, x: float) -> tuple[float, float]:
        """(P_C, P_D) at cooperator fraction x."""
        if self.mode == "constant":
            return self.p_c, self.p_d
        g = self.game
        return g.r * x + g.sg * (1.0 - x), g.t * x + g.pu * (1.0 - x)


def replicator_rhs(x: float, payoffs: PayoffSpec) -> float:
    """Share growth rate ``x (1 - x) (P_C - P_D)`` at fraction x.

    x may stray outside [0, 1] by at most 1e-12 (rounding slack); anything
    further is a domain error.
    """
    if x < -1e-12 or x > 1.0 + 1e-12:
        raise ValueError(f"replicator state must lie in [0, 1], got {x}")
    x = min(1.0, max(0.0, x))
    p_c, p_d = payoffs.effective(x)
    return x * (1.0 - x) * (p_c - p_d)


def cusp_rhs(s: float, params: ControlParams) -> float:
    """Rate ``lam + theta s - s**3`` of the bistable family."""
    return params.lam + params.theta * s - s ** 3


def closed_form_logistic(x0: float, c: float, t: float) -> float:
    """Exact replicator solution for constant payoff gap c:
    ``x(t) = x0 exp(c t) / (1 - x0 + x0 exp(c t))``.

    Evaluated in an overflow-free form on both signs of ``c t``.
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must lie in [0, 1], got {x0}")
    ct = c * t
    if ct >= 0.0:
        w = math.exp(-ct)  # <= 1
        denom = x0 + (1.0 - x0) * w
        return x0 / denom if denom > 0.0 else 1.0
    w = math.exp(ct)  # < 1
    return x0 * w / ((1.0 - x0) + x0 * w)


@dataclass(frozen=True)
class ReplicatorRhs:
    payoffs: PayoffSpec

    def __call__(self, x: float) -> float:
        return replicator_rhs(x, self.payoffs)


@dataclass(frozen=True)
class CuspRhs:
    params: ControlParams

    def __call__(self, s: float) -> float:
        return cusp_rhs(s, self.params)


@dataclass(frozen=True)
class TabulatedRhs:
    """Piecewise-linear rate table, the hook for custom 1-d families."""

    s: tuple[float, ...]
    rate: tuple[float, ...]

    def __post_init__(self):
        if len(self.s) != len(self.rate) or len(self.s) < 2:
            raise ValueError("need matching s/rate tables with >= 2 points")
        if any(b <= a for a, b in zip(self.s, self.s[1:])):
            raise ValueError("table abscissae must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.s, self.rate)


RhsSpec = ReplicatorRhs | CuspRhs | TabulatedRhs | Callable[[float], float]


@dataclass(frozen=True)
class OdeSpec:
    """A right-hand side plus initial state, step and horizon."""

    rhs: RhsSpec
    x0: float
    dt: float = DEFAULT_DT
    t_end: float = 0.0

    def validate(self) -> None:
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if not (self.t_end >= 0.0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be finite and >= 0, got {self.t_end}")
        if not math.isfinite(self.x0):
            raise ValueError("x0 must be finite")
        if isinstance(self.rhs, ReplicatorRhs) and not 0.0 <= self.x0 <= 1.0:
            raise ValueError(f"replicator x0 must lie in [0, 1], got {self.x0}")


@dataclass(frozen=True)
class Trajectory:
    """Times and states of one integration, first state equal to x0."""

    times: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class FixedPoint:
    location: float
    stability: str


@dataclass(frozen=True)
class FixedPointReport:
    roots: tuple[FixedPoint, ...]

    def stable_count(self) -> int:
        return sum(1 for r in self.roots if r.stability == STABLE)


@dataclass(frozen=True)
class HysteresisReport:
    """Quasi-static up/down equilibrium branches and their jumps.

    ``non_equilibrated`` lists sweep lambdas whose settled state still had
    |rhs| > 1e-6 when the relaxation budget ran out.
    """

    up_branch: tuple[tuple[float, float], ...]
    down_branch: tuple[tuple[float, float], ...]
    jumps_up: tuple[float, ...]
    jumps_down: tuple[float, ...]
    loop_area: float
    non_equilibrated: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _rk4_step(f, x: float, dt: float) -> float:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(spec: OdeSpec) -> Trajectory:
    """Fixed-step RK4 run of ``spec`` from t = 0 to at least t_end - dt.

    Replicator states are clamped to [0, 1] after each step; the clamp only
    absorbs rounding drift and must stay below 1e-9 per step.
    """
    spec.validate()
    f = spec.rhs
    clamp = isinstance(spec.rhs, ReplicatorRhs)
    dt = spec.dt
    n_steps = 0 if spec.t_end == 0.0 else math.ceil(spec.t_end / dt - 1e-12)

    states = [float(spec.x0)]
    x = float(spec.x0)
    for i in range(1, n_steps + 1):
        x = _rk4_step(f, x, dt)
        if clamp:
            clamped = min(1.0, max(0.0, x))
            if abs(clamped - x) >= 1e-9:
                raise NumericalDivergenceError(
                    f"replicator state left [0, 1] by {abs(clamped - x):.3e} at step {i}; "
                    "reduce dt"
                )
            x = clamped
        if not math.isfinite(x):
            raise NumericalDivergenceError(f"non-finite state at step {i}")
        states.append(x)
    times = np.array([i * dt for i in range(n_steps + 1)])
    return Trajectory(times, np.array(states))


# ---------------------------------------------------------------------------
# Fixed points and sweeps
# ---------------------------------------------------------------------------

def _eval_grid(rhs, xs: np.ndarray) -> np.ndarray:
    # vectorized evaluation when the callable broadcasts, scalar fallback
    try:
        vals = np.asarray(rhs(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
        return vals
    except Exception:
        return np.array([float(rhs(float(x))) for x in xs])


def _bisect(rhs, a: float, b: float, fa: float, fb: float, tol: float) -> float:
    best_x, best_f = (a, abs(fa)) if abs(fa) < abs(fb) else (b, abs(fb))
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:  # bracket exhausted at float resolution
            break
        fm = float(rhs(mid))
        if abs(fm) < best_f:
            best_x, best_f = mid, abs(fm)
        if abs(fm) < tol:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return best_x


def find_fixed_points(
    rhs,
    lo: float,
    hi: float,
    grid_n: int = DEFAULT_GRID_N,
    root_tol: float = ROOT_TOL,
) -> FixedPointReport:
    """Grid-scan [lo, hi] for sign changes of ``rhs`` and refine by bisection.

    Tangency (double) roots leave no sign change and are missed by design;
    fold locations come from the closed-form condition, not this scanner.
    Stability is the sign of a centered finite difference (step 1e-6) with a
    1e-8 dead band labelled marginal.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")
    xs = np.linspace(lo, hi, grid_n + 1)
    vals = _eval_grid(rhs, xs)

    locations: list[float] = []
    for i in range(grid_n + 1):
        if vals[i] == 0.0:
            locations.append(float(xs[i]))
    for i in range(grid_n):
        fa, fb = float(vals[i]), float(vals[i + 1])
        if fa == 0.0 or fb == 0.0:
            continue
        if (fa < 0.0) != (fb < 0.0):
            locations.append(_bisect(rhs, float(xs[i]), float(xs[i + 1]), fa, fb, root_tol))

    locations.sort()
    merged: list[float] = []
    min_sep = (hi - lo) * 1e-12
    for x in locations:
        if merged and abs(x - merged[-1]) <= min_sep:
            continue
        merged.append(x)

    roots = []
    h = STABILITY_FD_STEP
    for r in merged:
        # centered difference, one-sided when the root sits on the bracket edge
        left, right = max(lo, r - h), min(hi, r + h)
        d = (float(rhs(right)) - float(rhs(left))) / (right - left)
        if abs(d) < MARGINAL_BAND:
            label = MARGINAL
        elif d < 0.0:
            label = STABLE
        else:
            label = UNSTABLE
        roots.append(FixedPoint(r, label))
    return FixedPointReport(tuple(roots))


def _param_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    count = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + k * step for k in range(count + 1)]


def _cusp_bracket(theta: float, lo: float, hi: float) -> float:
    # Cauchy bound on roots of s**3 - theta*s - lam over the swept lam range
    return max(1.0, abs(theta) + max(abs(lo), abs(hi))) + 0.5


def sweep_bifurcation(
    theta: float,
    lambda_lo: float,
    lambda_hi: float,
    step: float,
    grid_n: int = DEFAULT_GRID_N,
) -> list[tuple[float, FixedPointReport]]:
    """Fixed-point report of the cusp family at each lam on a regular grid."""
    if not lambda_lo < lambda_hi:
        raise ValueError(f"need lambda_lo < lambda_hi, got [{lambda_lo}, {lambda_hi}]")
    bound = _cusp_bracket(theta, lambda_lo, lambda_hi)
    out = []
    for lam in _param_grid(lambda_lo, lambda_hi, step):
        def f(s, lam=lam, theta=theta):
            return lam + theta * s - s ** 3

        out.append((lam, find_fixed_points(f, -bound, bound, grid_n)))
    return out


# ---------------------------------------------------------------------------
# Hysteresis
# ---------------------------------------------------------------------------

def _relax(f, s: float, relax_t: float, dt: float, cap_factor: float) -> tuple[float, bool]:
    """Integrate until |f(s)| < SETTLE_TOL, spending at most cap_factor * relax_t.

    Early exit once settled is equivalent to running out the clock (the
    state stops moving at that tolerance); the budget extension past
    relax_t lets fold transits complete inside a single sweep step instead
    of being smeared across several.
    """
    budget = relax_t * cap_factor
    t = 0.0
    while True:
        if abs(f(s)) < SETTLE_TOL:
            return s, True
        if t >= budget:
            return s, False
        s = _rk4_step(f, s, dt)
        t += dt
        if not math.isfinite(s):
            raise NumericalDivergenceError(f"relaxation diverged at t={t:.3f}")


def hysteresis_loop(
    theta: float,
    lambda_lo: float,
    lambda_hi: float,
    step: float,
    relax_t: float = DEFAULT_RELAX_T,
    relax_dt: float = DEFAULT_RELAX_DT,
    jump_tol: float = DEFAULT_JUMP_TOL,
    relax_cap_factor: float = 100.0,
) -> HysteresisReport:
    """Quasi-static double sweep of lam with settled-state tracking.

    Sweep lam upward then downward, at each value relaxing the state from
    the previous equilibrium and recording where it settles.  A jump is a
    settled-state change larger than ``jump_tol`` between adjacent lam;
    ``loop_area`` is the trapezoidal area enclosed between the branches.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    if lambda_lo > lambda_hi:
        raise ValueError(f"need lambda_lo <= lambda_hi, got [{lambda_lo}, {lambda_hi}]")
    if lambda_lo == lambda_hi:
        return HysteresisReport((), (), (), (), 0.0)

    lams = _param_grid(lambda_lo, lambda_hi, step)
    bound = _cusp_bracket(theta, lambda_lo, lambda_hi)
    stuck: list[float] = []

    def rhs_at(lam):
        def f(s, lam=lam, theta=theta):
            return lam + theta * s - s ** 3

        return f

    start = find_fixed_points(rhs_at(lams[0]), -bound, bound)
    stable = [r.location for r in start.roots if r.stability == STABLE]
    s = min(stable) if stable else -bound

    def sweep(values, s0):
        branch = []
        s = s0
        for lam in values:
            f = rhs_at(lam)
            s, settled = _relax(f, s, relax_t, relax_dt, relax_cap_factor)
            if not settled and abs(f(s)) > EQUILIBRATION_TOL:
                stuck.append(lam)
            branch.append((lam, s))
        return branch, s

    up_branch, s = sweep(lams, s)
    down_branch, _ = sweep(list(reversed(lams)), s)

    def jumps(branch):
        return tuple(
            branch[i][0]
            for i in range(1, len(branch))
            if abs(branch[i][1] - branch[i - 1][1]) > jump_tol
        )

    down_aligned = list(reversed(down_branch))
    gaps = [abs(u[1] - d[1]) for u, d in zip(up_branch, down_aligned)]
    area = 0.0
    for i in range(len(gaps) - 1):
        dlam = up_branch[i + 1][0] - up_branch[i][0]
        area += 0.5 * (gaps[i] + gaps[i + 1]) * dlam

    return HysteresisReport(
        up_branch=tuple(up_branch),
        down_branch=tuple(down_branch),
        jumps_up=jumps(up_branch),
        jumps_down=jumps(down_branch),
        loop_area=area,
        non_equilibrated=tuple(stuck),
    )
