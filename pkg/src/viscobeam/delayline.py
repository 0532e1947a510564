"""Timestamped modal-velocity history with delayed sampling.

The delayed argument u'(x, t - tau*rho) and the auxiliary transport variable
z(x, rho, t) are realized by interpolating a ring buffer of (time, modal
velocity) records: the transport equation tau z_t + z_rho = 0 is solved
exactly along characteristics, so the buffer lookup *is* the solution and the
PDE form survives only as the residual diagnostic ``transport_residual``.
"""

from __future__ import annotations

import numpy as np


class CoverageError(RuntimeError):
    """A delayed lookup fell outside the retained history window."""


class HistoryBuffer:
    """Strictly increasing (time, vector) records spanning at least [t-tau, t].

    ``interp_order`` is 1 (piecewise linear, default) or 3 (4-point Lagrange).
    Single writer; sampling is read-only and vectorized over query times.
    """

    def __init__(self, times, values, tau: float, interp_order: int = 1):
        times = np.asarray(times, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if times.ndim != 1 or len(times) != values.shape[0]:
            raise ValueError("times and values must have matching leading size")
        if len(times) < 2 or np.any(np.diff(times) <= 0.0):
            raise ValueError("need at least two strictly increasing timestamps")
        if times[-1] - times[0] < tau - 1e-12 * max(1.0, tau):
            raise ValueError("initial records must span at least tau")
        if interp_order not in (1, 3):
            raise ValueError("interp_order must be 1 or 3")
        self.tau = float(tau)
        self.interp_order = interp_order
        self._n = values.shape[1]
        cap = max(4 * len(times), 64)
        self._t = np.empty(cap)
        self._v = np.empty((cap, self._n))
        self._t[:len(times)] = times
        self._v[:len(times)] = values
        self._lo = 0
        self._hi = len(times)
        self._last_step = float(times[-1] - times[-2])

    @classmethod
    def from_initial_history(cls, hist_times, hist_values, u1_modal,
                             tau: float, interp_order: int = 1,
                             compat_tol: float = 1e-8) -> "HistoryBuffer":
        """Build from f0 modal samples on [-tau, 0]; enforces f0(.,0) = u1."""
        hist_values = np.atleast_2d(np.asarray(hist_values, dtype=float))
        u1_modal = np.asarray(u1_modal, dtype=float)
        scale = max(1.0, float(np.linalg.norm(u1_modal)))
        gap = float(np.linalg.norm(hist_values[-1] - u1_modal))
        if gap > compat_tol * scale:
            raise ValueError(
                f"history incompatible with u1: |f0(.,0) - u1| = {gap:.3e}")
        buf = cls(hist_times, hist_values, tau, interp_order)
        # pin the newest record to u1 exactly (compatibility contract)
        buf._v[buf._hi - 1] = u1_modal
        return buf

    # -- write side ---------------------------------------------------------

    @property
    def newest_time(self) -> float:
        return float(self._t[self._hi - 1])

    @property
    def oldest_time(self) -> float:
        return float(self._t[self._lo])

    @property
    def n_records(self) -> int:
        return self._hi - self._lo

    def push(self, t: float, v) -> None:
        """Append a record; evicts records older than t - tau - 2 steps."""
        if t <= self.newest_time:
            raise ValueError(
                f"non-monotone push: t = {t} <= newest {self.newest_time}")
        v = np.asarray(v, dtype=float)
        if self._hi == len(self._t):
            self._compact_or_grow()
        self._last_step = t - self.newest_time
        self._t[self._hi] = t
        self._v[self._hi] = v
        self._hi += 1
        cutoff = t - self.tau - 2.0 * self._last_step
        # keep one straddling record at or before the cutoff
        while (self._lo + 1 < self._hi and self._t[self._lo + 1] <= cutoff):
            self._lo += 1

    def _compact_or_grow(self):
        live = self._hi - self._lo
        if self._lo > live:
            self._t[:live] = self._t[self._lo:self._hi]
            self._v[:live] = self._v[self._lo:self._hi]
        else:
            cap = 2 * len(self._t)
            t_new = np.empty(cap)
            v_new = np.empty((cap, self._n))
            t_new[:live] = self._t[self._lo:self._hi]
            v_new[:live] = self._v[self._lo:self._hi]
            self._t, self._v = t_new, v_new
        self._lo, self._hi = 0, live

    # -- read side ----------------------------------------------------------

    def sample(self, t_query) -> np.ndarray:
        """Interpolated modal vectors at the query time(s).

        Exact records are returned bit-for-bit.  Raises ``CoverageError`` for
        queries outside [oldest, newest].
        """
        tq = np.atleast_1d(np.asarray(t_query, dtype=float))
        t = self._t[self._lo:self._hi]
        v = self._v[self._lo:self._hi]
        eps = 1e-12 * max(1.0, abs(t[-1]))
        if np.any(tq < t[0] - eps) or np.any(tq > t[-1] + eps):
            lo, hi = float(np.min(tq)), float(np.max(tq))
            raise CoverageError(
                f"query range [{lo}, {hi}] outside retained window "
                f"[{t[0]}, {t[-1]}]")
        tq = np.clip(tq, t[0], t[-1])
        idx = np.searchsorted(t, tq, side="right") - 1
        idx = np.clip(idx, 0, len(t) - 2)
        exact = t[idx] == tq
        if self.interp_order == 1:
            t0, t1 = t[idx], t[idx + 1]
            w = ((tq - t0) / (t1 - t0))[:, None]
            out = v[idx] + w * (v[idx + 1] - v[idx])
        else:
            out = self._cubic(t, v, tq, idx)
        if np.any(exact):
            out[exact] = v[idx[exact]]
        right = t[idx + 1] == tq
        if np.any(right):
            out[right] = v[idx[right] + 1]
        return out if np.ndim(t_query) else out[0]

    def _cubic(self, t, v, tq, idx):
        base = np.clip(idx - 1, 0, len(t) - 4)
        out = np.zeros((len(tq), self._n))
        stencil = np.stack([t[base + j] for j in range(4)], axis=1)
        for j in range(4):
            lj = np.ones(len(tq))
            for m in range(4):
                if m == j:
                    continue
                lj *= (tq - stencil[:, m]) / (stencil[:, j] - stencil[:, m])
            out += lj[:, None] * v[base + j]
        return out

    def sample_delayed(self, t: float, rho) -> np.ndarray:
        """z(., rho, t) in modal coordinates: the velocity at t - tau*rho."""
        rho = np.asarray(rho, dtype=float)
        return self.sample(t - self.tau * rho)

    def transport_residual(self, t: float, rho_grid, fd_step: float = None) -> float:
        """RMS of the central-difference estimate of tau*dz/dt + dz/drho.

        ``fd_step`` is the time increment of the t-stencil (default: last
        push step); the rho-stencil deliberately uses half that increment so
        the two stencils sample distinct points and interpolation error is
        not cancelled structurally.  Requires coverage of
        [t - tau - fd_step, t + fd_step].
        """
        if fd_step is None:
            fd_step = self._last_step
        rho_grid = np.asarray(rho_grid, dtype=float)
        drho = 0.5 * fd_step / self.tau
        zp = self.sample(t + fd_step - self.tau * rho_grid)
        zm = self.sample(t - fd_step - self.tau * rho_grid)
        zrp = self.sample(t - self.tau * (rho_grid + drho))
        zrm = self.sample(t - self.tau * (rho_grid - drho))
        res = (self.tau * (zp - zm) / (2.0 * fd_step)
               + (zrp - zrm) / (2.0 * drho))
        return float(np.sqrt(np.mean(res ** 2)))

    def dump(self, path) -> None:
        """Tabular text dump: one row per record, columns t, v_1..v_n."""
        t = self._t[self._lo:self._hi]
        v = self._v[self._lo:self._hi]
        data = np.column_stack([t, v])
        cols = "t\t" + "\t".join(f"v{i + 1}" for i in range(self._n))
        np.savetxt(path, data, fmt="%.17g", delimiter="\t",
                   header=f"delay history buffer, tau = {self.tau!r}\n{cols}")


def uniform_history_times(tau: float, dt: float, t_end: float = 0.0) -> np.ndarray:
    """Uniform sample times on [t_end - tau, t_end] at spacing <= dt."""
    n = int(np.ceil(tau / dt)) + 1
    return np.linspace(t_end - tau, t_end, n)
