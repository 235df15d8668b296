"""
Singular stationary solutions Z_ℓ of ΔZ + |Z|^{p-1}Z = 0

With r = e^s and φ(s) = r Z(r) the elliptic equation becomes the system
ẋ = y, ẏ = -(d-4)y + (d-3)x - |x|^{p-1}x e^{-(p-3)s}, whose origin is a
saddle with eigenvalues 1 and -(d-3). Z_ℓ is the trajectory on the stable
manifold with e^{(d-3)s}φ(s) -> ℓ; it is seeded far out on the manifold and
integrated backward toward r = 0, where it develops its singularity.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.integrate import simpson, solve_ivp

from src.core.profiles import bump
from src.errors import InvalidParams, NumericalFailure, RangeError, ShootFailure

logger = logging.getLogger(__name__)

ESCAPE_LEVEL = 1e150

Sampler = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class OdeState:
    s: float
    x: float
    y: float


def ode_rhs(state: OdeState, d: int, p: int) -> Tuple[float, float]:
    x, y = state.x, state.y
    return y, -(d - 4) * y + (d - 3) * x - abs(x) ** (p - 1) * x * math.exp(-(p - 3) * state.s)


def _rhs_accel(s: np.ndarray, x: np.ndarray, y: np.ndarray, d: int, p: int) -> np.ndarray:
    """ÿ = F(s, x, y) evaluated on arrays."""
    return -(d - 4) * y + (d - 3) * x - np.abs(x) ** (p - 1) * x * np.exp(-(p - 3) * s)


def origin_jacobian(d: int) -> np.ndarray:
    return np.array([[0.0, 1.0], [float(d - 3), -float(d - 4)]])


def _vector_rhs(d: int, p: int):
    def rhs(s, z):
        x, y = z
        return [y, -(d - 4) * y + (d - 3) * x - abs(x) ** (p - 1) * x * math.exp(-(p - 3) * s)]
    return rhs


def _escape_event(s, z):
    return ESCAPE_LEVEL - max(abs(z[0]), abs(z[1]))


_escape_event.terminal = True


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    d: int
    p: int
    x0: float
    lam: float
    s_lo: float
    s_hi: float
    sampler: Sampler = field(repr=False)
    nodes: int = 4001
    forward_rate: Optional[float] = None
    accel: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_lo, self.s_hi, self.nodes)

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.s)

    def state(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.sampler(np.asarray(s, dtype=float))

    def acceleration(self, s: np.ndarray) -> np.ndarray:
        """φ̈(s). Solver output lies on the ODE, so its acceleration is F(s, φ, φ̇)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.accel is not None:
            return self.accel(s)
        x, y = self.state(s)
        return _rhs_accel(s, x, y, self.d, self.p)

    @property
    def phi(self) -> np.ndarray:
        return self.state(self.s)[0]

    @property
    def Z(self) -> np.ndarray:
        """Z(r) = ω(r)/r with ω(r) = φ(log r)."""
        return self.phi / self.r

    @property
    def dZ_dr(self) -> np.ndarray:
        x, y = self.state(self.s)
        return np.exp(-2.0 * self.s) * (y - x)

    @property
    def expected_ell(self) -> float:
        return self.x0 * self.lam ** ((self.d - 2) - 2.0 / (self.p - 1))

    @property
    def ell(self) -> float:
        return fit_tail(self, self.d, self.p)[0]

    @property
    def is_trivial(self) -> bool:
        return self.x0 == 0.0

    def perturbed(self, amplitude: float, center: float, width: float) -> "StationaryProfile":
        """Z + amplitude·bump((r - center)/width), carried through φ = rZ."""
        base = self.sampler

        def bump_terms(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
            # b and its first two r-derivatives
            r = np.exp(s)
            u = (r - center) / width
            b = bump(u)
            inside = np.abs(u) < 1.0
            db = np.zeros_like(b)
            d2b = np.zeros_like(b)
            ui = u[inside]
            w = 1.0 - ui ** 2
            q = -2.0 * ui / w ** 2
            dq = -2.0 / w ** 2 - 8.0 * ui ** 2 / w ** 3
            db[inside] = b[inside] * q / width
            d2b[inside] = b[inside] * (q ** 2 + dq) / width ** 2
            return r, b, db, d2b

        def sampler(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
            x, y = base(s)
            r, b, db, _ = bump_terms(s)
            return x + amplitude * r * b, y + amplitude * (r * b + r ** 2 * db)

        def accel(s: np.ndarray) -> np.ndarray:
            r, b, db, d2b = bump_terms(s)
            return self.acceleration(s) + amplitude * (r * b + 3.0 * r ** 2 * db + r ** 3 * d2b)

        return StationaryProfile(self.d, self.p, self.x0, self.lam, self.s_lo, self.s_hi,
                                 sampler, self.nodes, self.forward_rate, accel)


def zero_profile(d: int, p: int, s_lo: float, s_hi: float) -> StationaryProfile:
    def sampler(s):
        return np.zeros_like(s), np.zeros_like(s)
    return StationaryProfile(d, p, 0.0, 1.0, s_lo, s_hi, sampler)


def stable_seed(x0: float, d: int, p: int, s0: float) -> Tuple[float, float]:
    """Point on the stable manifold at s0: linear mode plus its first nonlinear correction."""
    kappa = -(d - 2) * p + 3
    forcing = abs(x0) ** (p - 1) * x0
    A = -forcing / ((kappa - 1) * (kappa + d - 3))
    lin = x0 * math.exp(-(d - 3) * s0)
    corr = A * math.exp(kappa * s0)
    return lin + corr, -(d - 3) * lin + kappa * corr


def _unstable_component(x: float, y: float, d: int) -> float:
    # coordinates along (1, 1) in the eigenbasis {(1, 1), (1, -(d-3))}
    return ((d - 3) * x + y) / (d - 2)


def shoot_stable(x0: float, d: int, p: int, s0: float = 6.0, s_min: float = -8.0,
                 tol: float = 1e-11, atol: float = 1e-30, seed_cap: float = 0.1,
                 forward_span: float = 4.0, secant_steps: int = 3) -> StationaryProfile:
    """Build Z_ℓ (ℓ = x0) by seeding on the stable manifold at s0 and integrating backward."""
    if d < 5 or d % 2 == 0 or p < 3 or p % 2 == 0:
        raise InvalidParams("stationary family needs odd d >= 5 and odd p >= 3", {"d": d, "p": p})
    if s_min >= s0:
        raise InvalidParams("s_min must lie below s0", {"s_min": s_min, "s0": s0})
    s_hi = s0 + forward_span
    if x0 == 0.0:
        return zero_profile(d, p, s_min, s_hi)
    if abs(x0) > seed_cap:
        raise ShootFailure("seed outside the stable-manifold neighbourhood",
                           {"x0": x0, "seed_cap": seed_cap})

    rhs = _vector_rhs(d, p)
    x_seed, y_seed = stable_seed(x0, d, p, s0)

    def forward(y_start: float):
        return solve_ivp(rhs, (s0, s_hi), [x_seed, y_start], method="DOP853",
                         rtol=tol, atol=atol, dense_output=True)

    def mismatch(sol) -> float:
        x_end, y_end = sol.y[:, -1]
        return _unstable_component(x_end, y_end, d) * math.exp(-forward_span)

    # Secant correction of the seed velocity: null the unstable component downstream.
    fwd = forward(y_seed)
    f_prev, y_prev = mismatch(fwd), y_seed
    y_cur = y_seed * (1.0 + 1e-9)
    for _ in range(secant_steps):
        trial = forward(y_cur)
        f_cur = mismatch(trial)
        if f_cur == f_prev:
            break
        y_next = y_cur - f_cur * (y_cur - y_prev) / (f_cur - f_prev)
        y_prev, f_prev = y_cur, f_cur
        y_cur = y_next
    fwd_candidate = forward(y_cur)
    if abs(mismatch(fwd_candidate)) <= abs(mismatch(fwd)):
        fwd, y_seed = fwd_candidate, y_cur
    if not fwd.success:
        raise NumericalFailure("forward integration failed", {"message": fwd.message})

    fit_s = fwd.t
    forward_rate = float(np.polyfit(fit_s, np.log(np.abs(fwd.y[0])), 1)[0])

    back = solve_ivp(rhs, (s0, s_min), [x_seed, y_seed], method="DOP853",
                     rtol=tol, atol=atol, dense_output=True, events=_escape_event)
    if back.status == 1 or (back.t_events and back.t_events[0].size):
        raise ShootFailure("trajectory escaped before s_min", {"s": float(back.t[-1]), "x0": x0})
    if not back.success:
        raise ShootFailure("backward integration failed", {"message": back.message})
    logger.debug("shoot x0=%.3g: %d backward steps, forward rate %.5f",
                 x0, back.t.size, forward_rate)

    back_sol, fwd_sol = back.sol, fwd.sol

    def sampler(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        s = np.atleast_1d(s)
        out = np.empty((2, s.size))
        low = s <= s0
        if np.any(low):
            out[:, low] = back_sol(s[low])
        if np.any(~low):
            out[:, ~low] = fwd_sol(s[~low])
        return out[0], out[1]

    return StationaryProfile(d, p, x0, 1.0, s_min, s_hi, sampler, forward_rate=forward_rate)


def rescale(profile: StationaryProfile, lam: float) -> StationaryProfile:
    """λ^{-2/(p-1)} Z(r/λ): φ_λ(s) = λ^{1-2/(p-1)} φ(s - log λ)."""
    if lam <= 0:
        raise InvalidParams("scaling parameter must be positive", {"lam": lam})
    if lam == 1.0:
        return profile
    shift = math.log(lam)
    factor = lam ** (1.0 - 2.0 / (profile.p - 1))
    base = profile.sampler

    def sampler(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x, y = base(np.asarray(s) - shift)
        return factor * x, factor * y

    def accel(s: np.ndarray) -> np.ndarray:
        return factor * profile.acceleration(np.asarray(s) - shift)

    return StationaryProfile(profile.d, profile.p, profile.x0, profile.lam * lam,
                             profile.s_lo + shift, profile.s_hi + shift, sampler,
                             profile.nodes, profile.forward_rate, accel)


def _local_frequency(x: np.ndarray, s: np.ndarray, d: int, p: int) -> np.ndarray:
    return np.sqrt(p * np.abs(x) ** (p - 1) * np.exp(-(p - 3) * s) + d)


def _window(profile: StationaryProfile, s_lo: Optional[float], s_hi: Optional[float],
            margin: Optional[np.ndarray] = None) -> np.ndarray:
    s = profile.s
    lo = profile.s_lo if s_lo is None else max(s_lo, profile.s_lo)
    hi = profile.s_hi if s_hi is None else min(s_hi, profile.s_hi)
    keep = (s >= lo) & (s <= hi)
    if margin is not None:
        keep &= (s - margin >= profile.s_lo) & (s + margin <= profile.s_hi)
    return keep


def residual_curve(profile: StationaryProfile, s_lo: Optional[float] = None,
                   s_hi: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """|Z'' + (d-1)/r Z' + |Z|^{p-1}Z| / (1 + |Z|^p) at the nodes within [s_lo, s_hi].

    With φ = rZ and r = e^s the left side equals e^{-3s}(φ̈ - F(s, φ, φ̇)).
    """
    d, p = profile.d, profile.p
    s = profile.s[_window(profile, s_lo, s_hi)]
    x, y = profile.state(s)
    phi_dd = profile.acceleration(s)
    z = np.exp(-s) * x
    residual = np.exp(-3.0 * s) * np.abs(phi_dd - _rhs_accel(s, x, y, d, p))
    return s, residual / (1.0 + np.abs(z) ** p)


def derivative_consistency(profile: StationaryProfile,
                           r_range: Optional[Tuple[float, float]] = None) -> float:
    """max |dφ/ds - φ̇| / (1 + |φ| + |φ̇|), dφ/ds by a fourth-order central difference."""
    if profile.is_trivial:
        return 0.0
    d, p = profile.d, profile.p
    s_lo, s_hi = (None, None) if r_range is None else (math.log(r_range[0]), math.log(r_range[1]))
    s = profile.s
    x, _ = profile.state(s)
    h = 1e-3 / (1.0 + _local_frequency(x, s, d, p))
    keep = _window(profile, s_lo, s_hi, 2 * h)
    s, h = s[keep], h[keep]
    x, y = profile.state(s)
    x_p1, x_m1 = profile.state(s + h)[0], profile.state(s - h)[0]
    x_p2, x_m2 = profile.state(s + 2 * h)[0], profile.state(s - 2 * h)[0]
    dx = (-x_p2 + 8 * x_p1 - 8 * x_m1 + x_m2) / (12 * h)
    rel = np.abs(dx - y) / (1.0 + np.abs(x) + np.abs(y))
    return float(np.max(rel)) if rel.size else 0.0


def elliptic_residual(profile: StationaryProfile, d: Optional[int] = None, p: Optional[int] = None,
                      r_range: Optional[Tuple[float, float]] = None) -> float:
    """max |Z'' + (d-1)/r Z' + |Z|^{p-1}Z| / (1 + |Z|^p) over the nodes."""
    if profile.is_trivial:
        return 0.0
    s_lo, s_hi = (None, None) if r_range is None else (math.log(r_range[0]), math.log(r_range[1]))
    _, res = residual_curve(profile, s_lo, s_hi)
    return float(np.max(res)) if res.size else 0.0


def _tail_window(g: np.ndarray, ell: float, rtol: float) -> np.ndarray:
    rel = np.abs(g - ell) / abs(ell)
    return (rel >= 1e3 * rtol) & (rel <= 1e-3)


def fit_tail(profile: StationaryProfile, d: Optional[int] = None, p: Optional[int] = None,
             rtol: float = 1e-11) -> Tuple[float, Optional[float]]:
    """(ℓ, rate) for r^{d-2}Z = ℓ + A r^{rate}.

    rate is the log-log slope of |r^{d-2}Z - ℓ|, starting from the median of r^{d-2}Z on r >= 10;
    ℓ is refined as the r -> ∞ extrapolation with the fitted correction removed.
    """
    d = profile.d if d is None else d
    if profile.s_hi < math.log(10.0):
        raise RangeError("profile must extend to r >= 10", {"r_max": math.exp(profile.s_hi)})
    if profile.is_trivial:
        return 0.0, None
    s = profile.s
    x, _ = profile.state(s)
    g = np.exp((d - 3) * s) * x
    far = s >= math.log(10.0)
    ell = float(np.median(g[far]))
    rate = None
    for _ in range(3):
        window = _tail_window(g, ell, rtol)
        if np.count_nonzero(window) < 5:
            return (float(g[-1]), None) if rate is None else (ell, rate)
        slope, intercept = np.polyfit(s[window], np.log(np.abs(g[window] - ell)), 1)
        sign = float(np.sign(np.median(g[window] - ell)))
        ell = float(np.median(g[far] - sign * np.exp(intercept + slope * s[far])))
        rate = float(slope)
    return ell, rate


def correction_slope(profile: StationaryProfile, rtol: float = 1e-11) -> Optional[float]:
    """Log-log slope of |ω(r) - ℓ λ-scaled r^{-(d-3)}|, expected -(d-2)p + 3."""
    ell, rate = fit_tail(profile, rtol=rtol)
    return None if rate is None else rate - (profile.d - 3)


@dataclass(frozen=True)
class SingularityReport:
    a: float
    floor: float
    window_starts: List[float]
    window_maxima: List[float]
    trivial: bool = False


def singularity_diagnostic(profile: StationaryProfile, p: Optional[int] = None,
                           span: float = 2.0, window: float = 0.5,
                           samples: int = 4001) -> SingularityReport:
    """Envelope of φ(s)e^{-as}, a = (p-3)/(p+1), over windows near s_min."""
    p = profile.p if p is None else p
    if profile.s_lo > -8.0:
        raise RangeError("profile must reach s <= -8", {"s_min": profile.s_lo})
    a = (p - 3.0) / (p + 1.0)
    if profile.is_trivial:
        return SingularityReport(a=a, floor=0.0, window_starts=[], window_maxima=[], trivial=True)
    starts = list(np.arange(profile.s_lo, profile.s_lo + span - 1e-12, window))
    maxima = []
    for start in starts:
        s = np.linspace(start, min(start + window, profile.s_hi), samples)
        x, _ = profile.state(s)
        maxima.append(float(np.max(np.abs(x * np.exp(-a * s)))))
    return SingularityReport(a=a, floor=float(min(maxima)), window_starts=[float(v) for v in starts],
                             window_maxima=maxima)


@dataclass(frozen=True)
class QIntegralTrend:
    eps: np.ndarray
    values: np.ndarray

    @property
    def increments(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.values]))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    @property
    def diverging(self) -> bool:
        inc = self.increments[1:]
        return self.monotone and inc.size > 0 and bool(inc[-1] >= 0.1 * inc[0])


def q_integral_trend(profile: StationaryProfile, q: float,
                     eps_list: Sequence[float] = tuple(10.0 ** np.linspace(-0.4, -3.4, 7)),
                     points_per_period: int = 40) -> QIntegralTrend:
    """∫_ε^1 |Z|^q r^{d-1} dr = ∫_{log ε}^0 |φ|^q e^{(d-q)s} ds for decreasing ε."""
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    if math.log(eps[-1]) < profile.s_lo or profile.s_hi < 0.0:
        raise RangeError("profile does not cover [min ε, 1]", {"eps_min": float(eps[-1])})
    d, p = profile.d, profile.p
    edges = np.concatenate([[0.0], np.log(eps)])
    total = 0.0
    values = []
    for hi, lo in zip(edges[:-1], edges[1:]):
        coarse = np.linspace(lo, hi, 2001)
        xc, _ = profile.state(coarse)
        freq = float(np.max(_local_frequency(1.5 * xc, coarse, d, p)))
        n = max(2001, int(points_per_period * (hi - lo) * freq / (2 * math.pi)))
        n += (n + 1) % 2
        s = np.linspace(lo, hi, n)
        x, _ = profile.state(s)
        total += float(simpson(np.abs(x) ** q * np.exp((d - q) * s), x=s))
        values.append(total)
    return QIntegralTrend(eps=eps, values=np.asarray(values))
