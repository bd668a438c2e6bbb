"""Closed-form kinematics for the four motion profiles.

Every profile has an analytic pose for any time, past or future, so
ground-truth waypoints are exact rather than integrated.
"""

import numpy as np


def actor_state(actor, t):
    """State of an actor at time t.

    Returns (x, y, heading, speed, accel, yaw_rate); the actor dataclass
    state is anchored at t = 0.
    """
    if actor.profile == "constant-velocity" or (actor.profile == "constant-acceleration" and actor.accel == 0.0):
        s = actor.speed * t
        return (
            actor.x + s * np.cos(actor.heading),
            actor.y + s * np.sin(actor.heading),
            actor.heading,
            actor.speed,
            0.0,
            0.0,
        )

    if actor.profile == "constant-acceleration":
        a = actor.accel
        if a < 0:
            # vehicle brakes to a stop and stays there
            t_stop = actor.speed / (-a)
            tc = min(t, t_stop)
        else:
            tc = t
        s = actor.speed * tc + 0.5 * a * tc * tc
        v = max(actor.speed + a * tc, 0.0)
        return (
            actor.x + s * np.cos(actor.heading),
            actor.y + s * np.sin(actor.heading),
            actor.heading,
            v,
            a if v > 0 or a > 0 else 0.0,
            0.0,
        )

    if actor.profile == "turn":
        w = actor.yaw_rate
        v = actor.speed
        if abs(w) < 1e-9:
            return actor_state_cv(actor, t)
        r = v / w
        h0 = actor.heading
        h = h0 + w * t
        return (
            actor.x + r * (np.sin(h) - np.sin(h0)),
            actor.y - r * (np.cos(h) - np.cos(h0)),
            h,
            v,
            0.0,
            w,
        )

    if actor.profile == "stop-and-go":
        # parked until go_time, then constant acceleration up to cruise speed
        a = actor.accel
        v_cruise = actor.speed
        t_ramp = v_cruise / a if a > 0 else 0.0
        tau = t - actor.go_time
        if tau <= 0:
            return actor.x, actor.y, actor.heading, 0.0, 0.0, 0.0
        if tau <= t_ramp:
            s = 0.5 * a * tau * tau
            v, acc = a * tau, a
        else:
            s = 0.5 * a * t_ramp * t_ramp + v_cruise * (tau - t_ramp)
            v, acc = v_cruise, 0.0
        return (
            actor.x + s * np.cos(actor.heading),
            actor.y + s * np.sin(actor.heading),
            actor.heading,
            v,
            acc,
            0.0,
        )

    raise ValueError(f"unknown profile {actor.profile!r}")


def actor_state_cv(actor, t):
    s = actor.speed * t
    return (
        actor.x + s * np.cos(actor.heading),
        actor.y + s * np.sin(actor.heading),
        actor.heading,
        actor.speed,
        0.0,
        0.0,
    )


def actor_velocity(actor, t):
    """World-frame velocity vector of the body center at time t."""
    x, y, h, v, _, _ = actor_state(actor, t)
    return np.array([v * np.cos(h), v * np.sin(h)])


def point_velocity(actor, t, px, py):
    """Rigid-body velocity of a material point: v_center + w x r."""
    x, y, h, v, _, w = actor_state(actor, t)
    vc = np.array([v * np.cos(h), v * np.sin(h)])
    r = np.array([px - x, py - y])
    return vc + w * np.array([-r[1], r[0]])


def future_waypoints(actor, t_ref, horizon, step):
    """(T, 3) rows of (dt, x, y) at dt = 0, step, ..., horizon."""
    dts = np.arange(0.0, horizon + 1e-9, step)
    out = np.zeros((len(dts), 3))
    for i, dt in enumerate(dts):
        x, y, _, _, _, _ = actor_state(actor, t_ref + dt)
        out[i] = (dt, x, y)
    return out
