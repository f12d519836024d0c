"""Synthetic fault-injection benchmarks with ground-truth labels.

Two generators are provided, both built on fixed-step classical RK4:

* a three-state chaotic oscillator (sensors x1 and x3) whose parameters are
  detuned on selected intervals, each interval restarted from a randomized
  warm-start state,
* a closed-loop electronic throttle plant (sensors: angle and control input)
  driven through random reference steps, where the controller keeps nominal
  parameter values so plant detuning is masked in the angle but leaks into the
  control input.

Generators are pure given (config, seed) and attach labels plus (start, end,
tag) interval annotations to the emitted frame.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .frame import Interval, SensorFrame

logger = logging.getLogger(__name__)


def rk4_step(f, x: np.ndarray, u, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta update of x' = f(x, u)."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(x, u))
    k2 = np.asarray(f(x + 0.5 * dt * k1, u))
    k3 = np.asarray(f(x + 0.5 * dt * k2, u))
    k4 = np.asarray(f(x + dt * k3, u))
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after RK4 step")
    return out


# ---------------------------------------------------------------------------
# chaotic-oscillator benchmark


@dataclass(frozen=True)
class LorentzConfig:
    """Chaotic-oscillator benchmark configuration.

    The default schedule concatenates six intervals: normal, normal, low first
    parameter, normal, low second parameter, high third parameter. Fault
    intervals carry label 1. Each interval integrates a randomized initial
    state through `warmup_steps` discarded steps so recording starts on the
    attractor.
    """

    sigma: float = 12.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 1e-2
    steps_per_interval: int = 60_000
    warmup_steps: int = 2_000
    init_state: tuple[float, float, float] = (1.0, 1.0, 20.0)
    init_jitter: float = 5.0
    schedule: tuple[tuple[str, dict], ...] = (
        ("normal", {}),
        ("normal", {}),
        ("fault:sigma", {"sigma": 8.0}),
        ("normal", {}),
        ("fault:rho", {"rho": 26.0}),
        ("fault:beta", {"beta": 10.0 / 3.0}),
    )

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.steps_per_interval < 1:
            raise ValueError("steps_per_interval must be >= 1")


def _lorentz_deriv(state: np.ndarray, sigma, rho, beta) -> np.ndarray:
    x1, x2, x3 = state
    return np.stack(
        [sigma * (x2 - x1), x1 * (rho - x3) - x2, x1 * x2 - beta * x3]
    )


def generate_lorentz(config: LorentzConfig = LorentzConfig(), seed: int = 0) -> SensorFrame:
    """Simulate the oscillator schedule; sensors are states x1 and x3.

    All intervals integrate in lockstep as one batched RK4 run with per-interval
    parameters, which keeps generation fast and deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    n_iv = len(config.schedule)
    sigma = np.full(n_iv, config.sigma)
    rho = np.full(n_iv, config.rho)
    beta = np.full(n_iv, config.beta)
    for k, (_, overrides) in enumerate(config.schedule):
        sigma[k] = overrides.get("sigma", sigma[k])
        rho[k] = overrides.get("rho", rho[k])
        beta[k] = overrides.get("beta", beta[k])

    state = np.tile(np.asarray(config.init_state), (n_iv, 1)).T  # (3, n_iv)
    state = state + rng.uniform(-config.init_jitter, config.init_jitter, size=state.shape)

    def step(s):
        k1 = _lorentz_deriv(s, sigma, rho, beta)
        k2 = _lorentz_deriv(s + 0.5 * config.dt * k1, sigma, rho, beta)
        k3 = _lorentz_deriv(s + 0.5 * config.dt * k2, sigma, rho, beta)
        k4 = _lorentz_deriv(s + config.dt * k3, sigma, rho, beta)
        return s + (config.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    for _ in range(config.warmup_steps):
        state = step(state)

    n = config.steps_per_interval
    x1 = np.empty((n, n_iv))
    x3 = np.empty((n, n_iv))
    for t in range(n):
        x1[t] = state[0]
        x3[t] = state[2]
        state = step(state)
    if not np.all(np.isfinite(x1)) or not np.all(np.isfinite(x3)):
        raise FloatingPointError("oscillator simulation diverged")

    values = np.empty((n * n_iv, 2))
    labels = np.zeros(n * n_iv, dtype=np.int8)
    intervals = []
    for k, (tag, _) in enumerate(config.schedule):
        sl = slice(k * n, (k + 1) * n)
        values[sl, 0] = x1[:, k]
        values[sl, 1] = x3[:, k]
        if tag.startswith("fault"):
            labels[sl] = 1
        intervals.append(Interval(k * n, (k + 1) * n, tag))
    timestamps = np.arange(n * n_iv, dtype=float) * config.dt
    return SensorFrame(("x1", "x3"), timestamps, values, labels, tuple(intervals))


# ---------------------------------------------------------------------------
# electronic-throttle benchmark


@dataclass(frozen=True)
class EtcConfig:
    """Closed-loop throttle benchmark configuration.

    Plant parameters k_sp .. l_a are the published nominal values; inertia,
    armature resistance, rest angle, atmospheric pressure and the pressure map
    are stand-ins (config-level, not from any reference) chosen for a stable,
    well-conditioned closed loop. The controller is an exact linearizing state
    feedback evaluated with *nominal* parameters: it cancels the estimated
    angle-acceleration dynamics and places a triple closed-loop pole at
    -pole rad/s, so plant detuning is invisible in the tracked angle but leaks
    into the control input. Detuning by +30% keeps every fault run stable
    (verified by eigenvalue analysis of the mismatched loop); -30% does not,
    hence the default fault_factor of 1.3.
    """

    # published nominal plant parameters
    k_sp: float = 0.4316
    k_f: float = 0.4834
    gear: float = 4.0
    k_t: float = 0.1045
    r_p: float = 0.0015
    r_af: float = 0.002
    k_b: float = 0.1051
    l_a: float = 0.003
    # stand-in constants (documented as not published)
    inertia: float = 1e-3
    r_a: float = 1.15
    theta_rest: float = 0.1
    p_atm: float = 101_325.0
    theta_max: float = math.pi / 2.0
    # sampling and integration
    tau: float = 0.02
    run_seconds: float = 3600.0
    substeps: int = 4
    # controller: triple closed-loop pole at -pole rad/s; stiff enough that
    # plant detuning barely moves the tracked angle (its signature shifts
    # into the control input), soft enough for comfortable RK4 margins
    pole: float = 80.0
    # reference step schedule
    step_low: float = 0.2
    step_high: float = 1.2
    dwell_low: float = 2.0
    dwell_high: float = 8.0
    # fault injection
    fault_factor: float = 1.3
    schedule: tuple[tuple[str, str | None], ...] = (
        ("normal", None),
        ("fault:k_b", "k_b"),
        ("fault:k_t", "k_t"),
        ("normal", None),
        ("fault:l_a", "l_a"),
        ("normal", None),
    )

    def __post_init__(self) -> None:
        for name in ("k_sp", "k_f", "gear", "k_t", "r_p", "r_af", "k_b", "l_a",
                     "inertia", "r_a", "p_atm", "tau", "run_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def samples_per_run(self) -> int:
        return int(round(self.run_seconds / self.tau))


def _etc_run_kernel(
    ref,
    out_theta,
    out_u,
    n_samples,
    substeps,
    tau,
    # detuned plant parameters
    p_k_b,
    p_k_t,
    p_l_a,
    # nominal/common parameters
    k_sp,
    k_f,
    gear,
    k_t,
    r_p,
    r_af,
    k_b,
    l_a,
    inertia,
    r_a,
    theta_rest,
    p_atm,
    theta_max,
    c0,
    c1,
    c2,
    x1_0,
    x2_0,
    x3_0,
):
    """Integrate one closed-loop run; written to work jitted or plain.

    The control law cancels the nominal angle-acceleration dynamics exactly
    (including the pressure torque and its angle derivative) and assigns
    jerk = -c0 (x1 - target) - c1 x2 - c2 accel. Returns 0 on success, the
    failing sample index + 1 on divergence.
    """
    press_gain = math.pi * r_p * r_p * r_af * p_atm
    dt = tau / substeps

    def closed_loop(y1, y2, y3, target):
        """Control input and detuned-plant derivative at one state."""
        cos_y = math.cos(y1)
        frac = y1 / theta_max
        if frac <= 0.0:
            press = press_gain * cos_y * cos_y
            dpress = -press_gain * math.sin(2.0 * y1)
        elif frac >= 1.0:
            press = 0.0
            dpress = 0.0
        else:
            press = press_gain * (1.0 - frac) * cos_y * cos_y
            dpress = -press_gain * (
                cos_y * cos_y / theta_max + (1.0 - frac) * math.sin(2.0 * y1)
            )
        # controller side: nominal parameters only
        accel = (
            -k_sp * (y1 - theta_rest) - k_f * y2 + gear * k_t * y3 - press
        ) / inertia
        jerk = -c0 * (y1 - target) - c1 * y2 - c2 * accel
        uc = (
            gear * k_b * y2
            + r_a * y3
            + (l_a / (gear * k_t))
            * (inertia * jerk + k_sp * y2 + k_f * accel + dpress * y2)
        )
        # plant side: detuned parameters
        d1 = y2
        d2 = (
            -k_sp * (y1 - theta_rest) - k_f * y2 + gear * p_k_t * y3 - press
        ) / inertia
        d3 = (-gear * p_k_b * y2 - r_a * y3 + uc) / p_l_a
        return uc, d1, d2, d3

    x1 = x1_0
    x2 = x2_0
    x3 = x3_0
    for k in range(n_samples):
        target = ref[k]
        u, _, _, _ = closed_loop(x1, x2, x3, target)
        out_theta[k] = x1
        out_u[k] = u
        for _ in range(substeps):
            _, k1a, k1b, k1c = closed_loop(x1, x2, x3, target)
            _, k2a, k2b, k2c = closed_loop(
                x1 + 0.5 * dt * k1a, x2 + 0.5 * dt * k1b, x3 + 0.5 * dt * k1c, target
            )
            _, k3a, k3b, k3c = closed_loop(
                x1 + 0.5 * dt * k2a, x2 + 0.5 * dt * k2b, x3 + 0.5 * dt * k2c, target
            )
            _, k4a, k4b, k4c = closed_loop(
                x1 + dt * k3a, x2 + dt * k3b, x3 + dt * k3c, target
            )
            x1 = x1 + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            x2 = x2 + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            x3 = x3 + (dt / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(x3)):
            return k + 1
    return 0


_compiled_etc_kernel = None


def _etc_kernel():
    global _compiled_etc_kernel
    if _compiled_etc_kernel is None:
        import numba

        _compiled_etc_kernel = numba.njit(cache=True)(_etc_run_kernel)
    return _compiled_etc_kernel


def reference_steps(config: EtcConfig, rng: np.random.Generator) -> np.ndarray:
    """Piecewise-constant random reference: per-sample target angles."""
    n = config.samples_per_run
    chunks = []
    total = 0
    while total < n:
        dwell = rng.uniform(config.dwell_low, config.dwell_high)
        amplitude = rng.uniform(config.step_low, config.step_high)
        count = max(1, int(round(dwell / config.tau)))
        chunks.append(np.full(min(count, n - total), amplitude))
        total += count
    return np.concatenate(chunks)[:n]


def generate_etc(config: EtcConfig = EtcConfig(), seed: int = 0) -> SensorFrame:
    """Simulate the scheduled closed-loop runs; sensors are theta and u."""
    rng = np.random.default_rng(seed)
    kernel = _etc_kernel()
    n = config.samples_per_run
    n_runs = len(config.schedule)
    values = np.empty((n * n_runs, 2))
    labels = np.zeros(n * n_runs, dtype=np.int8)
    intervals = []
    for run, (tag, fault_param) in enumerate(config.schedule):
        plant = {"k_b": config.k_b, "k_t": config.k_t, "l_a": config.l_a}
        if fault_param is not None:
            plant[fault_param] = plant[fault_param] * config.fault_factor
        ref = reference_steps(config, rng)
        theta = np.empty(n)
        u = np.empty(n)
        status = kernel(
            ref,
            theta,
            u,
            n,
            config.substeps,
            config.tau,
            plant["k_b"],
            plant["k_t"],
            plant["l_a"],
            config.k_sp,
            config.k_f,
            config.gear,
            config.k_t,
            config.r_p,
            config.r_af,
            config.k_b,
            config.l_a,
            config.inertia,
            config.r_a,
            config.theta_rest,
            config.p_atm,
            config.theta_max,
            config.pole**3,
            3.0 * config.pole**2,
            3.0 * config.pole,
            config.theta_rest,
            0.0,
            0.0,
        )
        if status != 0:
            raise FloatingPointError(
                f"closed-loop simulation diverged in run {run} ({tag}) "
                f"at sample {status - 1}"
            )
        sl = slice(run * n, (run + 1) * n)
        values[sl, 0] = theta
        values[sl, 1] = u
        if tag.startswith("fault"):
            labels[sl] = 1
        intervals.append(Interval(run * n, (run + 1) * n, tag))
        logger.debug("run %d (%s): theta in [%.3f, %.3f]", run, tag, theta.min(), theta.max())
    timestamps = np.arange(n * n_runs, dtype=float) * config.tau
    return SensorFrame(("theta", "u"), timestamps, values, labels, tuple(intervals))


def config_metadata(config) -> dict:
    """JSON-friendly config echo for dataset sidecar files."""
    out = {}
    for name in config.__dataclass_fields__:
        value = getattr(config, name)
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[name] = value
    return out
