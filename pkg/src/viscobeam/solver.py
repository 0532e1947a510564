"""Modal time integration of the Galerkin system.

The projected equation of motion, for modal displacement a(t) and velocity
v(t) on an orthonormal clamped-beam basis with gradient matrix G and
stiffness diagonal lambda_i, reads

    [ int |u'|^rho w_i w_j dx + G ] a''
        = -lambda a + lambda * q(t) - M(a.G.a) G a
          - mu1 int g(u') w_i dx - mu2 int g(z(.,1,t)) w_i dx

with q_i(t) = int_0^t h(t-s) a_i(s) ds the per-mode memory convolution and
z(.,1,t) the velocity delayed by tau, reconstructed from the history buffer.
Time stepping is classical four-stage Runge-Kutta with a fresh SPD mass solve
per stage; the history buffer is pushed once per accepted step, so overall
accuracy is limited to second order by the delay interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import ModeSet, build_modeset
from .config import RunConfig
from .delayline import HistoryBuffer, uniform_history_times
from .model import ProblemSpec, theta_constants, xi_window


class IntegrationAbort(RuntimeError):
    """Raised internally when the state leaves the finite range."""


# ---------------------------------------------------------------------------
# memory accumulators

class ExponentialMemory:
    """Recursive per-mode convolution state for h(t) = h0 exp(-zeta t).

    Keeps q_i = int h(t-s) a_i ds and p_i = int h(t-s) a_i^2 ds, advanced per
    accepted step by exact decay plus trapezoid over the step.
    """

    def __init__(self, h0: float, zeta: float, n_modes: int):
        self.h0 = float(h0)
        self.zeta = float(zeta)
        self.t = 0.0
        self.q = np.zeros(n_modes)
        self.p = np.zeros(n_modes)

    def cumulative(self, t: float = None) -> float:
        """H(t) = int_0^t h(s) ds, in closed form."""
        if t is None:
            t = self.t
        return self.h0 / self.zeta * -np.expm1(-self.zeta * t)

    def stage_q(self, dt_c: float, a_start: np.ndarray,
                a_stage: np.ndarray) -> np.ndarray:
        """Convolution extended to a stage time t + dt_c inside the step."""
        if dt_c == 0.0:
            return self.q
        decay = np.exp(-self.zeta * dt_c)
        return decay * self.q + 0.5 * dt_c * self.h0 * (
            decay * a_start + a_stage)

    def advance(self, dt: float, a_start: np.ndarray, a_end: np.ndarray):
        decay = np.exp(-self.zeta * dt)
        half = 0.5 * dt * self.h0
        self.q = decay * self.q + half * (decay * a_start + a_end)
        self.p = decay * self.p + half * (decay * a_start ** 2 + a_end ** 2)
        self.t += dt

    def history_box(self, a: np.ndarray, lambdas: np.ndarray) -> float:
        """(h box Delta u)(t) = sum_i lambda_i int h(t-s) (a_i(s)-a_i(t))^2 ds."""
        H = self.cumulative()
        return float(np.sum(lambdas * (self.p - 2.0 * a * self.q
                                       + a * a * H)))

    def hprime_box(self, a: np.ndarray, lambdas: np.ndarray) -> float:
        return -self.zeta * self.history_box(a, lambdas)


class TabulatedMemory:
    """Sliding-window trapezoid convolution for a sampled kernel.

    Retains the modal displacement history over the kernel's effective
    support (h above ``eps_cut`` times h(0)); cost per query grows with the
    window, so this path is meant for short exploratory runs.
    """

    def __init__(self, kernel, n_modes: int, eps_cut: float = 1e-12,
                 window: float = None):
        self.kernel = kernel
        times, values = (np.asarray(kernel.samples[0]),
                         np.asarray(kernel.samples[1]))
        live = values >= eps_cut * values[0]
        support = float(times[live][-1]) if np.any(live) else float(times[-1])
        if window is not None and window < support:
            raise ValueError(
                f"history window {window} shorter than kernel support "
                f"{support}")
        self.window = support if window is None else window
        self.t = 0.0
        self._times = [0.0]
        self._a = None  # set on first advance
        self._hist = []
        self._n = n_modes

    def bind_initial(self, a0: np.ndarray):
        self._hist = [np.array(a0, dtype=float)]

    def _arrays(self):
        return np.array(self._times), np.array(self._hist)

    def cumulative(self, t: float = None) -> float:
        if t is None:
            t = self.t
        if t == 0.0:
            return 0.0
        s = np.linspace(0.0, t, max(2, int(np.ceil(t / 1e-3)) + 1))
        return float(np.trapezoid(self.kernel.evaluate(s), s))

    @property
    def q(self) -> np.ndarray:
        return self._convolve(self.t, power=1)

    @property
    def p(self) -> np.ndarray:
        return self._convolve(self.t, power=2)

    def _convolve(self, t: float, power: int = 1) -> np.ndarray:
        times, hist = self._arrays()
        if len(times) < 2:
            return np.zeros(self._n)
        hv = self.kernel.evaluate(t - times)
        return np.trapezoid(hv[:, None] * hist ** power, times, axis=0)

    def stage_q(self, dt_c: float, a_start: np.ndarray,
                a_stage: np.ndarray) -> np.ndarray:
        t_st = self.t + dt_c
        base = self._convolve_shifted(t_st)
        if dt_c == 0.0:
            return base
        h_at = self.kernel.evaluate(np.array([dt_c, 0.0]))
        return base + 0.5 * dt_c * (h_at[0] * a_start + h_at[1] * a_stage)

    def _convolve_shifted(self, t: float) -> np.ndarray:
        times, hist = self._arrays()
        if len(times) < 2:
            return np.zeros(self._n)
        hv = self.kernel.evaluate(t - times)
        return np.trapezoid(hv[:, None] * hist, times, axis=0)

    def advance(self, dt: float, a_start: np.ndarray, a_end: np.ndarray):
        self.t += dt
        self._times.append(self.t)
        self._hist.append(np.array(a_end, dtype=float))
        while self._times[1] < self.t - self.window:
            self._times.pop(0)
            self._hist.pop(0)

    def history_box(self, a: np.ndarray, lambdas: np.ndarray) -> float:
        times, hist = self._arrays()
        if len(times) < 2:
            return 0.0
        hv = self.kernel.evaluate(self.t - times)
        diff2 = (hist - a[None, :]) ** 2
        per_mode = np.trapezoid(hv[:, None] * diff2, times, axis=0)
        return float(np.sum(lambdas * per_mode))

    def hprime_box(self, a: np.ndarray, lambdas: np.ndarray) -> float:
        times, hist = self._arrays()
        if len(times) < 2:
            return 0.0
        hpv = self.kernel.derivative(self.t - times)
        diff2 = (hist - a[None, :]) ** 2
        per_mode = np.trapezoid(hpv[:, None] * diff2, times, axis=0)
        return float(np.sum(lambdas * per_mode))


def make_memory(kernel, n_modes: int):
    if kernel.shape == "exponential":
        return ExponentialMemory(kernel.h0, kernel.zeta, n_modes)
    return TabulatedMemory(kernel, n_modes)


# ---------------------------------------------------------------------------
# state and trajectory records

@dataclass
class SolverState:
    t: float
    a: np.ndarray
    v: np.ndarray
    memory: object
    buffer: HistoryBuffer


@dataclass
class Trajectory:
    """Decimated samples of a run plus per-sample diagnostics.

    ``energy`` holds the seven additive terms column-wise in the order
    kinetic_rho, bending, kinetic_grad, kirchhoff, memory_deficit, history,
    delay; ``columns`` carries the auxiliary dissipation and Lyapunov series.
    """

    t: np.ndarray
    a: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    columns: dict
    metadata: dict = field(default_factory=dict)
    aborted: bool = False
    abort_reason: str = ""

    ENERGY_NAMES = ("kinetic_rho", "bending", "kinetic_grad", "kirchhoff",
                    "memory_deficit", "history", "delay")

    @property
    def energy_total(self) -> np.ndarray:
        return self.energy.sum(axis=1)

    def energy_term(self, name: str) -> np.ndarray:
        return self.energy[:, self.ENERGY_NAMES.index(name)]

    def save(self, path) -> None:
        """Tab-separated table, '#'-commented metadata, 17 significant digits."""
        n = self.a.shape[1]
        names = (["t"]
                 + [f"a{i + 1}" for i in range(n)]
                 + [f"v{i + 1}" for i in range(n)]
                 + list(self.ENERGY_NAMES) + ["energy_total"]
                 + sorted(self.columns))
        blocks = [self.t[:, None], self.a, self.v, self.energy,
                  self.energy_total[:, None]]
        blocks += [np.asarray(self.columns[k])[:, None]
                   for k in sorted(self.columns)]
        data = np.hstack(blocks)
        meta = "\n".join(f"{k} = {v}" for k, v in sorted(self.metadata.items()))
        header = meta + ("\n" if meta else "") + "\t".join(names)
        np.savetxt(path, data, fmt="%.17g", delimiter="\t", header=header)


# ---------------------------------------------------------------------------
# spatial operators

def effective_mass(v: np.ndarray, modes: ModeSet, rho: float,
                   linear_inertia: bool = False) -> np.ndarray:
    """G + int |u'|^rho w_i w_j dx with u' = sum v_m w_m; symmetric PD.

    The convention |0|^rho = 0 (rho > 0) makes the integrand continuous at
    velocity zeros.
    """
    if linear_inertia:
        return modes.grad.copy()
    uvel = modes.V @ v
    wgt = modes.weights * np.abs(uvel) ** rho
    mass = (modes.V * wgt[:, None]).T @ modes.V
    return modes.grad + 0.5 * (mass + mass.T)


def memory_term(state: SolverState, modes: ModeSet) -> np.ndarray:
    """Modal memory force: component i is lambda_i int_0^t h(t-s) a_i(s) ds."""
    return modes.lambdas * state.memory.q


# ---------------------------------------------------------------------------
# the integrator

class GalerkinSolver:
    """Owns the precomputed basis data and advances (a, v) in time."""

    def __init__(self, spec: ProblemSpec, modes: ModeSet, xi: float,
                 linear_inertia: bool = False,
                 memory_variant: str = "bilaplacian"):
        if memory_variant not in ("bilaplacian", "laplacian"):
            raise ValueError("memory_variant must be bilaplacian or laplacian")
        self.spec = spec
        self.modes = modes
        self.xi = float(xi)
        self.linear_inertia = linear_inertia
        self.memory_variant = memory_variant
        self._Vw = modes.V * modes.weights[:, None]

    def acceleration(self, t: float, a: np.ndarray, v: np.ndarray,
                     q_stage: np.ndarray, buffer: HistoryBuffer) -> np.ndarray:
        spec, modes = self.spec, self.modes
        Ga = modes.grad @ a
        if self.memory_variant == "bilaplacian":
            mem = modes.lambdas * q_stage
        else:
            mem = modes.grad @ q_stage
        f = -modes.lambdas * a + mem
        f -= float(spec.kirchhoff.evaluate(a @ Ga)) * Ga
        uvel = modes.V @ v
        f -= spec.mu1 * (self._Vw.T @ spec.feedback.g(uvel))
        z1 = buffer.sample(t - spec.tau)
        f -= spec.mu2 * (self._Vw.T @ spec.feedback.g(modes.V @ z1))
        mass = effective_mass(v, modes, spec.rho, self.linear_inertia)
        try:
            acc = np.linalg.solve(mass, f)
        except np.linalg.LinAlgError as exc:
            raise IntegrationAbort(f"mass solve failed at t = {t}") from exc
        return acc

    def step(self, state: SolverState, dt: float) -> SolverState:
        """One classical four-stage explicit step; pushes history once."""
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if dt > self.spec.tau / 4.0 + 1e-15:
            raise ValueError("dt must not exceed tau/4")
        t, a, v, mem, buf = (state.t, state.a, state.v, state.memory,
                             state.buffer)

        def rate(t_st, a_st, v_st, dt_c):
            q_st = mem.stage_q(dt_c, a, a_st)
            return v_st, self.acceleration(t_st, a_st, v_st, q_st, buf)

        k1a, k1v = rate(t, a, v, 0.0)
        k2a, k2v = rate(t + 0.5 * dt, a + 0.5 * dt * k1a,
                        v + 0.5 * dt * k1v, 0.5 * dt)
        k3a, k3v = rate(t + 0.5 * dt, a + 0.5 * dt * k2a,
                        v + 0.5 * dt * k2v, 0.5 * dt)
        k4a, k4v = rate(t + dt, a + dt * k3a, v + dt * k3v, dt)

        a_new = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (np.all(np.isfinite(a_new)) and np.all(np.isfinite(v_new))):
            raise IntegrationAbort(f"non-finite state after step at t = {t}")
        buf.push(t + dt, v_new)
        mem.advance(dt, a, a_new)
        return SolverState(t + dt, a_new, v_new, mem, buf)


def initial_state(spec: ProblemSpec, modes: ModeSet, dt: float,
                  interp_order: int = 1) -> SolverState:
    """Project initial data and populate the delay history on [-tau, 0]."""
    a0 = modes.project(lambda x: np.asarray(spec.u0(x), dtype=float)
                       * np.ones_like(x))
    v0 = modes.project(lambda x: np.asarray(spec.u1(x), dtype=float)
                       * np.ones_like(x))
    times = uniform_history_times(spec.tau, dt)
    hist = np.stack([
        modes.project(lambda x, s=s: np.asarray(spec.f0(x, s), dtype=float)
                      * np.ones_like(x))
        for s in times])
    buf = HistoryBuffer.from_initial_history(times, hist, v0, spec.tau,
                                             interp_order=interp_order)
    mem = make_memory(spec.kernel, modes.n_modes)
    if isinstance(mem, TabulatedMemory):
        mem.bind_initial(a0)
    return SolverState(0.0, a0, v0, mem, buf)


def run(config: RunConfig, modes: ModeSet = None,
        linear_inertia: bool = False, observer=None) -> Trajectory:
    """Integrate the configured scenario and record sampled diagnostics.

    ``observer`` maps (solver, state) to a (energy_terms, columns_dict) pair;
    the default is the full energy/Lyapunov observer from ``diagnostics``.
    Returns a partial trajectory with ``aborted`` set if the integration
    fails mid-run.
    """
    from . import diagnostics

    spec = config.spec
    if modes is None:
        modes = build_modeset(config.n_modes, spec.L)
    window = xi_window(spec)
    xi = window.midpoint if config.xi == "auto" else float(config.xi)
    solver = GalerkinSolver(spec, modes, xi, linear_inertia=linear_inertia)
    if observer is None:
        # align the delay quadrature with the push grid (see EnergyObserver):
        # nodes every m-th record so queries land on stored samples
        steps_per_tau = max(4, int(round(spec.tau / config.dt)))
        m_stride = 8 if steps_per_tau >= 64 else 1
        n_rho = max(4, int(round(steps_per_tau / m_stride)))
        observer = diagnostics.EnergyObserver(
            solver, N=config.N, eps1=config.eps1, eps2=config.eps2,
            n_rho=n_rho)

    dt, stride = config.dt, max(1, int(config.sample_stride))
    n_steps = int(round(config.t_end / dt))
    state = initial_state(spec, modes, dt)

    sample_idx = list(range(0, n_steps + 1, stride))
    if sample_idx[-1] != n_steps:
        sample_idx.append(n_steps)
    m = len(sample_idx)
    n = modes.n_modes
    out_t = np.empty(m)
    out_a = np.empty((m, n))
    out_v = np.empty((m, n))
    out_e = np.empty((m, 7))
    out_cols: dict = {}

    theta1, theta2 = theta_constants(spec, xi)
    meta = {
        "n_modes": n, "dt": dt, "t_end": config.t_end, "xi": xi,
        "theta1": theta1, "theta2": theta2, "sample_stride": stride,
        "rho": spec.rho, "mu1": spec.mu1, "mu2": spec.mu2, "tau": spec.tau,
        "L": spec.L, "linear_inertia": linear_inertia,
    }

    aborted, reason = False, ""
    row = 0
    next_sample = sample_idx[0]
    for k in range(n_steps + 1):
        if k == next_sample:
            terms, cols = observer(state)
            out_t[row] = state.t
            out_a[row] = state.a
            out_v[row] = state.v
            out_e[row] = terms
            for name, val in cols.items():
                out_cols.setdefault(name, np.empty(m))[row] = val
            row += 1
            next_sample = sample_idx[row] if row < m else -1
        if k == n_steps:
            break
        try:
            state = solver.step(state, dt)
        except IntegrationAbort as exc:
            aborted, reason = True, str(exc)
            break

    out_cols = {k2: v2[:row] for k2, v2 in out_cols.items()}
    return Trajectory(t=out_t[:row], a=out_a[:row], v=out_v[:row],
                      energy=out_e[:row], columns=out_cols, metadata=meta,
                      aborted=aborted, abort_reason=reason)
