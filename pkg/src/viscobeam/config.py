"""Named function catalogs and INI-style config deserialization.

A run is described by a plain-text config with one section per component:

    [problem]    rho, mu1, mu2, tau, L, corrected_theta2
    [kirchhoff]  law = affine | constant, m0, slope, delta, gamma
    [kernel]     kernel = exponential | tabulated, h0, zeta | times, values
    [feedback]   law = linear | linear_arctan, slope | a, b, alpha1, alpha2
    [initial]    u0 / u1 / f0 from the shape catalog
    [numerics]   n_modes, dt, t_end, sample_stride, rho_quad_order
    [lyapunov]   xi (number or "auto"), N, eps1, eps2, t0
    [output]     directory

Function-valued fields are chosen from the catalogs below; everything else
is a scalar.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .basis import gauss_panels, solve_characteristic_roots, _raw_mode
from .model import FeedbackSpec, KernelSpec, KirchhoffSpec, ProblemSpec


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


# ---------------------------------------------------------------------------
# catalogs

def kirchhoff_affine(m0: float, slope: float, delta: float = None,
                     gamma: float = 1.0) -> KirchhoffSpec:
    """M(lam) = m0 + slope*lam; Mhat = m0*lam + slope*lam^2/2."""
    if delta is None:
        delta = m0 + slope
    return KirchhoffSpec(
        evaluate=lambda lam: m0 + slope * np.asarray(lam, dtype=float),
        antiderivative=lambda lam: (m0 + 0.5 * slope * np.asarray(lam, dtype=float))
        * np.asarray(lam, dtype=float),
        m0=m0, delta=delta, gamma=gamma, beta=slope, alpha=0.0)


def kirchhoff_constant(m0: float) -> KirchhoffSpec:
    return KirchhoffSpec(
        evaluate=lambda lam: m0 * np.ones_like(np.asarray(lam, dtype=float)),
        antiderivative=lambda lam: m0 * np.asarray(lam, dtype=float),
        m0=m0, delta=m0, gamma=0.0)


def kernel_exponential(h0: float, zeta: float) -> KernelSpec:
    """h(t) = h0 * exp(-zeta t); total mass h0/zeta must stay below 1."""
    if h0 <= 0 or zeta <= 0:
        raise ConfigError("exponential kernel needs h0 > 0 and zeta > 0")
    return KernelSpec(
        evaluate=lambda t: h0 * np.exp(-zeta * np.asarray(t, dtype=float)),
        derivative=lambda t: -zeta * h0 * np.exp(-zeta * np.asarray(t, dtype=float)),
        total_mass=h0 / zeta, zeta=zeta, shape="exponential", h0=h0)


def kernel_tabulated(times, values, zeta: float) -> KernelSpec:
    """Piecewise-linear kernel from samples; h = 0 beyond the last sample."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
        raise ConfigError("tabulated kernel needs matching 1-D times/values")
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ConfigError("tabulated kernel times must start at 0 and increase")
    deriv = np.gradient(values, times)

    def h(t):
        return np.interp(np.asarray(t, dtype=float), times, values,
                         right=0.0)

    def hp(t):
        return np.interp(np.asarray(t, dtype=float), times, deriv, right=0.0)

    return KernelSpec(evaluate=h, derivative=hp,
                      total_mass=float(np.trapezoid(values, times)),
                      zeta=zeta, shape="tabulated", h0=float(values[0]),
                      samples=(tuple(times), tuple(values)))


def feedback_linear(slope: float = 1.0) -> FeedbackSpec:
    """g(s) = slope*s; exact alpha1 = alpha2 = 1/2."""
    return FeedbackSpec(
        g=lambda s: slope * np.asarray(s, dtype=float),
        gprime=lambda s: slope * np.ones_like(np.asarray(s, dtype=float)),
        G=lambda s: 0.5 * slope * np.asarray(s, dtype=float) ** 2,
        c1=slope, alpha1=0.5, alpha2=0.5)


def feedback_linear_arctan(a: float = 1.0, b: float = 0.5,
                           alpha1: float = 0.5,
                           alpha2: float = None) -> FeedbackSpec:
    """g(s) = a*s + b*arctan(s): saturating correction on a linear gain.

    G/(s g) runs from 1/2 (s -> 0 and s -> inf) up to a maximum below 1;
    alpha2 defaults to that sampled maximum with a safety margin.
    """
    if a <= 0 or b < 0:
        raise ConfigError("linear_arctan needs a > 0, b >= 0")

    def g(s):
        s = np.asarray(s, dtype=float)
        return a * s + b * np.arctan(s)

    def gprime(s):
        s = np.asarray(s, dtype=float)
        return a + b / (1.0 + s * s)

    def G(s):
        s = np.asarray(s, dtype=float)
        return 0.5 * a * s * s + b * (s * np.arctan(s)
                                      - 0.5 * np.log1p(s * s))

    if alpha2 is None:
        from scipy.optimize import minimize_scalar
        ratio = lambda s: float(G(s) / (s * g(s)))
        sg = np.linspace(1e-6, 50.0, 4001)
        best = sg[int(np.argmax([ratio(s) for s in sg]))]
        res = minimize_scalar(lambda s: -ratio(s),
                              bounds=(max(1e-6, best - 0.1), best + 0.1),
                              method="bounded",
                              options={"xatol": 1e-12})
        alpha2 = -float(res.fun) * (1.0 + 1e-9)
    return FeedbackSpec(g=g, gprime=gprime, G=G, c1=a + b,
                        alpha1=alpha1, alpha2=alpha2)


@lru_cache(maxsize=32)
def _mode_shape_data(L: float, index: int):
    beta = solve_characteristic_roots(index, L)[index - 1]
    nodes, weights = gauss_panels(L, max(8, 5 * index))
    w, _, _ = _raw_mode(beta, L, nodes)
    norm = float(np.sqrt(np.sum(weights * w * w)))
    return beta, norm


def mode_shape(L: float, index: int, amplitude: float = 1.0):
    """Callable x -> amplitude * w_index(x), the unit-norm clamped mode."""
    beta, norm = _mode_shape_data(L, index)

    def shape(x):
        w, _, _ = _raw_mode(beta, L, np.asarray(x, dtype=float))
        return amplitude / norm * w

    return shape


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# config records

@dataclass
class RunConfig:
    spec: ProblemSpec
    n_modes: int = 8
    dt: float = 5e-4
    t_end: float = 20.0
    sample_stride: int = 10
    rho_quad_order: int = 16
    xi: float | str = "auto"
    N: float = 20.0
    eps1: float = 1.0
    eps2: float = 1.0
    t0: float = 1.0
    out_dir: str = "."

    def __post_init__(self):
        if self.dt > self.spec.tau / 4.0 + 1e-15:
            raise ConfigError(
                f"dt = {self.dt} exceeds tau/4 = {self.spec.tau / 4.0}")


@dataclass
class SweepConfig:
    base: RunConfig
    axes: list = field(default_factory=list)  # [(path, [values...]), ...]
    jobs: int = 1


_VALID_AXES = {
    "problem.mu1", "problem.mu2", "problem.tau", "problem.rho",
    "kernel.zeta", "kernel.h0",
}


def _get(cp, section, key, cast=float, default=None, required=False):
    if not cp.has_section(section):
        if required:
            raise ConfigError(f"missing section [{section}]")
        return default
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"missing key '{key}' in section [{section}]")
        return default
    raw = cp.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key} = {raw!r}") from exc


def _floats(raw: str) -> np.ndarray:
    return np.array([float(tok) for tok in raw.split()])


def build_problem_spec(cp: configparser.ConfigParser) -> ProblemSpec:
    rho = _get(cp, "problem", "rho", required=True)
    mu1 = _get(cp, "problem", "mu1", required=True)
    mu2 = _get(cp, "problem", "mu2", required=True)
    tau = _get(cp, "problem", "tau", required=True)
    L = _get(cp, "problem", "L", default=1.0)
    corrected = _get(cp, "problem", "corrected_theta2", cast=bool, default=False)

    law = _get(cp, "kirchhoff", "law", cast=str, default="affine").strip()
    if law == "affine":
        kirch = kirchhoff_affine(
            m0=_get(cp, "kirchhoff", "m0", default=1.0),
            slope=_get(cp, "kirchhoff", "slope", default=1.0),
            delta=_get(cp, "kirchhoff", "delta", default=None),
            gamma=_get(cp, "kirchhoff", "gamma", default=1.0))
    elif law == "constant":
        kirch = kirchhoff_constant(m0=_get(cp, "kirchhoff", "m0", default=1.0))
    else:
        raise ConfigError(f"[kirchhoff] unknown law {law!r}")

    kname = _get(cp, "kernel", "kernel", cast=str, default="exponential").strip()
    if kname == "exponential":
        kern = kernel_exponential(h0=_get(cp, "kernel", "h0", default=0.4),
                                  zeta=_get(cp, "kernel", "zeta", default=1.0))
    elif kname == "tabulated":
        times = _get(cp, "kernel", "times", cast=_floats, required=True)
        values = _get(cp, "kernel", "values", cast=_floats, required=True)
        kern = kernel_tabulated(times, values,
                                zeta=_get(cp, "kernel", "zeta", required=True))
    else:
        raise ConfigError(f"[kernel] unknown kernel {kname!r}")

    fname = _get(cp, "feedback", "law", cast=str, default="linear").strip()
    if fname == "linear":
        fb = feedback_linear(slope=_get(cp, "feedback", "slope", default=1.0))
    elif fname == "linear_arctan":
        fb = feedback_linear_arctan(
            a=_get(cp, "feedback", "a", default=1.0),
            b=_get(cp, "feedback", "b", default=0.5),
            alpha1=_get(cp, "feedback", "alpha1", default=0.5),
            alpha2=_get(cp, "feedback", "alpha2", default=None))
    else:
        raise ConfigError(f"[feedback] unknown law {fname!r}")

    def shaped(prefix, default_kind="zero"):
        kind = _get(cp, "initial", prefix, cast=str, default=default_kind).strip()
        if kind == "zero":
            return _zero
        if kind == "mode":
            return mode_shape(
                L, int(_get(cp, "initial", prefix + "_index", default=1)),
                _get(cp, "initial", prefix + "_amplitude", default=1.0))
        raise ConfigError(f"[initial] unknown shape {kind!r} for {prefix}")

    u0 = shaped("u0")
    u1 = shaped("u1")
    f0_kind = _get(cp, "initial", "f0", cast=str, default="zero").strip()
    if f0_kind == "zero":
        f0 = lambda x, s: _zero(x)
    elif f0_kind == "constant_u1":
        f0 = lambda x, s: np.asarray(u1(x), dtype=float)
    else:
        raise ConfigError(f"[initial] unknown f0 shape {f0_kind!r}")

    return ProblemSpec(rho=rho, mu1=mu1, mu2=mu2, tau=tau, L=L,
                       kirchhoff=kirch, kernel=kern, feedback=fb,
                       u0=u0, u1=u1, f0=f0, corrected_theta2=corrected)


def run_config_from_parser(cp: configparser.ConfigParser) -> RunConfig:
    spec = build_problem_spec(cp)
    xi_raw = _get(cp, "lyapunov", "xi", cast=str, default="auto").strip()
    xi = "auto" if xi_raw == "auto" else float(xi_raw)
    return RunConfig(
        spec=spec,
        n_modes=int(_get(cp, "numerics", "n_modes", default=8)),
        dt=_get(cp, "numerics", "dt", default=5e-4),
        t_end=_get(cp, "numerics", "t_end", default=20.0),
        sample_stride=int(_get(cp, "numerics", "sample_stride", default=10)),
        rho_quad_order=int(_get(cp, "numerics", "rho_quad_order", default=16)),
        xi=xi,
        N=_get(cp, "lyapunov", "N", default=20.0),
        eps1=_get(cp, "lyapunov", "eps1", default=1.0),
        eps2=_get(cp, "lyapunov", "eps2", default=1.0),
        t0=_get(cp, "lyapunov", "t0", default=1.0),
        out_dir=_get(cp, "output", "directory", cast=str, default="."))


def load_run_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    return run_config_from_parser(cp)


def load_sweep_config(path) -> SweepConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read sweep config file {path}")
    base = run_config_from_parser(cp)
    axes = []
    if cp.has_section("sweep"):
        for key, raw in cp.items("sweep"):
            if key == "jobs":
                continue
            if key not in _VALID_AXES:
                raise ConfigError(f"[sweep] unknown parameter path {key!r}")
            axes.append((key, [float(tok) for tok in raw.split()]))
    axes.sort()
    jobs = int(_get(cp, "sweep", "jobs", default=1))
    return SweepConfig(base=base, axes=axes, jobs=jobs)


DEFAULT_SCENARIO = """\
[problem]
rho = 1.0
mu1 = 1.0
mu2 = 0.4
tau = 0.5
L = 1.0

[kirchhoff]
law = affine
m0 = 1.0
slope = 1.0

[kernel]
kernel = exponential
h0 = 0.4
zeta = 1.0

[feedback]
law = linear
slope = 1.0

[initial]
u0 = mode
u0_index = 1
u0_amplitude = 0.5
u1 = zero
f0 = zero

[numerics]
n_modes = 8
dt = 5e-4
t_end = 20.0
sample_stride = 10

[lyapunov]
xi = auto
N = 20.0
eps1 = 1.0
eps2 = 1.0
t0 = 1.0
"""


def default_run_config(**overrides) -> RunConfig:
    """The shipped reference scenario, optionally with field overrides."""
    cp = configparser.ConfigParser()
    cp.read_string(DEFAULT_SCENARIO)
    spec = build_problem_spec(cp)
    cfg = RunConfig(spec=spec)
    for key, val in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown RunConfig field {key!r}")
        setattr(cfg, key, val)
    cfg.__post_init__()
    return cfg
