"""Jerk-limited (trapezoidal-acceleration) point-to-point trajectories.

A profile is a list of constant-jerk segments integrated from an initial
``(p, v, a)``. Moves starting with non-zero rates first brake to rest with
limited jerk and then run a rest-to-rest double-S profile. Coordinates are
synchronised: all braking phases end together and the rest-to-rest phases of
the faster coordinates are time-stretched to the slowest one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class Limits:
    v_max: float
    a_max: float
    j_max: float

    def __post_init__(self):
        if min(self.v_max, self.a_max, self.j_max) <= 0:
            raise ValueError("trajectory limits must be positive")


@dataclass(frozen=True)
class PoseLimits:
    """Limits for the translational and rotational platform coordinates."""

    translation: Limits = Limits(0.5, 10.0, 1000.0)
    rotation: Limits = Limits(2.0, 40.0, 4000.0)

    def axis(self, k):
        return self.translation if k < 2 else self.rotation


@dataclass
class JerkProfile:
    p0: float
    v0: float
    a0: float
    segments: list = field(default_factory=list)

    def __post_init__(self):
        self._starts = []
        t, p, v, a = 0.0, self.p0, self.v0, self.a0
        for dur, j in self.segments:
            self._starts.append((t, p, v, a, j))
            p, v, a = _advance(p, v, a, j, dur)
            t += dur
        self.duration = t
        self.end = (p, v, a)

    def sample(self, t):
        """Position, velocity, acceleration and jerk at time ``t`` (clamped to the ends)."""
        if t >= self.duration or not self._starts:
            p, v, a = self.end
            if t > self.duration and (v != 0.0 or a != 0.0):
                p, v, a = _advance(p, v, a, 0.0, t - self.duration)
            return p, v, a, 0.0
        if t <= 0.0:
            return self.p0, self.v0, self.a0, self._starts[0][4]
        k = np.searchsorted([s[0] for s in self._starts], t, side="right") - 1
        t0, p, v, a, j = self._starts[k]
        p, v, a = _advance(p, v, a, j, t - t0)
        return p, v, a, j


def _advance(p, v, a, j, t):
    return (p + v * t + a * t * t / 2.0 + j * t ** 3 / 6.0,
            v + a * t + j * t * t / 2.0,
            a + j * t)


# moves shorter than this are treated as already at the target
MIN_MOVE = 1e-15


def scurve_times(h, lim):
    """Durations ``(Tj, Ta, Tv)`` of the rest-to-rest double-S for distance ``|h|``."""
    h = abs(h)
    v, a, j = lim.v_max, lim.a_max, lim.j_max
    if h < MIN_MOVE:
        return 0.0, 0.0, 0.0
    if v * j >= a * a:
        Tj = a / j
        Ta = Tj + v / a
    else:
        Tj = np.sqrt(v / j)
        Ta = 2.0 * Tj
    Tv = h / v - Ta
    if Tv < 0.0:
        Tv = 0.0
        if h >= 2.0 * a ** 3 / j ** 2:
            Tj = a / j
            Ta = 0.5 * (Tj + np.sqrt(Tj * Tj + 4.0 * h / a))
        else:
            Tj = (h / (2.0 * j)) ** (1.0 / 3.0)
            Ta = 2.0 * Tj
    return Tj, Ta, Tv


def scurve_duration(h, lim):
    _, Ta, Tv = scurve_times(h, lim)
    return 2.0 * Ta + Tv


def rest_to_rest_segments(h, lim):
    if abs(h) < MIN_MOVE:
        return []
    Tj, Ta, Tv = scurve_times(h, lim)
    j = np.sign(h) * lim.j_max
    Tc = max(Ta - 2.0 * Tj, 0.0)
    segs = [(Tj, j), (Tc, 0.0), (Tj, -j), (Tv, 0.0), (Tj, -j), (Tc, 0.0), (Tj, j)]
    return [(d, jj) for d, jj in segs if d > 0.0]


def stretch(segments, factor):
    """Time-scale a profile by ``factor >= 1``: durations grow, jerks shrink by factor^3."""
    inv = 1.0 / factor
    return [(d * factor, j * inv * inv * inv) for d, j in segments]


def braking_segments(v0, a0, lim):
    """Constant-jerk segments bringing ``(v0, a0)`` to rest."""
    j = lim.j_max
    if v0 == 0.0 and a0 == 0.0:
        return []
    # velocity left after ramping the acceleration straight to zero
    v1 = v0 + a0 * abs(a0) / (2.0 * j)
    if abs(v1) < 1e-15:
        return [(abs(a0) / j, -np.sign(a0) * j)]
    s = np.sign(v1)

    def plan(ap, hold):
        a_pk = -s * ap
        t1 = abs(a_pk - a0) / j
        t3 = ap / j
        segs = [(t1, np.sign(a_pk - a0) * j), (hold, 0.0), (t3, s * j)]
        dv = 0.5 * (a0 + a_pk) * t1 + a_pk * hold + 0.5 * a_pk * t3
        return segs, dv

    segs, dv = plan(lim.a_max, 0.0)
    if v0 + dv == 0.0 or np.sign(v0 + dv) != s:
        # peak deceleration is not reached
        ap = brentq(lambda ap: v0 + plan(ap, 0.0)[1], 0.0, lim.a_max, xtol=1e-15, rtol=1e-15)
        segs, _ = plan(ap, 0.0)
    else:
        hold = abs(v0 + dv) / lim.a_max
        segs, _ = plan(lim.a_max, hold)
    return [(d, jj) for d, jj in segs if d > 0.0]


@dataclass
class Trajectory:
    """Synchronised multi-axis jerk-limited trajectory, time measured from its start."""

    profiles: list
    t_brake: float
    duration: float

    def sample(self, t):
        out = np.array([p.sample(t)[:3] for p in self.profiles])
        return out[:, 0], out[:, 1], out[:, 2]

    def jerk(self, t):
        return np.array([p.sample(t)[3] for p in self.profiles])

    def sampled(self, dt):
        """Arrays ``t, x, xdot, xddot`` on a grid of spacing ``dt`` covering the whole move."""
        n = int(np.ceil(self.duration / dt - 1e-9)) + 1
        ts = np.arange(n) * dt
        xs = np.array([np.stack(self.sample(t)) for t in ts])
        return ts, xs[:, 0], xs[:, 1], xs[:, 2]

    @property
    def target(self):
        return np.array([p.end[0] for p in self.profiles])


def jerk_limited_trajectory(start, target, limits):
    """Trajectory from ``start = (x, xdot, xddot)`` to ``target`` at rest.

    ``limits`` is a :class:`PoseLimits` or a single :class:`Limits` used for all
    coordinates. Degenerate moves give a constant trajectory.
    """
    x0, v0, a0 = (np.asarray(s, dtype=float).reshape(-1) for s in start)
    target = np.asarray(target, dtype=float).reshape(-1)
    n = len(x0)
    lim = [limits.axis(k) if isinstance(limits, PoseLimits) else limits for k in range(n)]

    brake = [braking_segments(v0[k], a0[k], lim[k]) for k in range(n)]
    stop = []
    t_b = 0.0
    for k in range(n):
        prof = JerkProfile(x0[k], v0[k], a0[k], brake[k])
        stop.append(prof.end[0])
        t_b = max(t_b, prof.duration)

    moves = [rest_to_rest_segments(target[k] - stop[k], lim[k]) for k in range(n)]
    t_move = [sum(d for d, _ in m) for m in moves]
    T_m = max(t_move) if t_move else 0.0

    profiles = []
    for k in range(n):
        segs = list(brake[k])
        t_k = sum(d for d, _ in segs)
        if t_b - t_k > 0.0:
            segs.append((t_b - t_k, 0.0))
        if moves[k]:
            segs += stretch(moves[k], T_m / t_move[k])
        profiles.append(JerkProfile(x0[k], v0[k], a0[k], segs))
    return Trajectory(profiles, t_b, t_b + T_m)


def constant_trajectory(x):
    x = np.asarray(x, dtype=float)
    return Trajectory([JerkProfile(float(v), 0.0, 0.0, []) for v in x], 0.0, 0.0)
