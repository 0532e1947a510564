"""Clamped-clamped beam eigenbasis on (0, L) with quadrature and Galerkin matrices.

The modes solve w'''' = beta^4 w with w = w' = 0 at both ends.  The
characteristic condition is cos(beta*L)*cosh(beta*L) = 1; eigenvalues of the
fourth-derivative operator are lambda_i = beta_i^4.  Mode evaluation uses an
exponentially rebalanced form of the cosh/cos - sinh/sin combination so that
high modes (beta*L beyond ~30) do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class RootBracketError(RuntimeError):
    """Raised when a characteristic root cannot be bracketed."""


def _char_residual(bl: float) -> float:
    # cos(bl)*cosh(bl) - 1, rescaled by exp(-bl) to stay finite for large bl:
    # cos(bl)*(1 + exp(-2 bl))/2 - exp(-bl)
    return np.cos(bl) * 0.5 * (1.0 + np.exp(-2.0 * bl)) - np.exp(-bl)


def solve_characteristic_roots(n: int, L: float, tol: float = 1e-13) -> np.ndarray:
    """First ``n`` positive roots beta_i of cos(beta L) cosh(beta L) = 1.

    Roots are returned strictly increasing.  Root i (1-based) lies near
    (i + 1/2) * pi / L; brackets are taken around that asymptote.
    """
    if n < 1:
        raise ValueError("need at least one mode")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    roots = np.empty(n)
    for i in range(1, n + 1):
        lo = (i + 0.5) * np.pi - 0.7
        hi = (i + 0.5) * np.pi + 0.7
        flo, fhi = _char_residual(lo), _char_residual(hi)
        if flo * fhi > 0.0:
            raise RootBracketError(f"no sign change for root {i} in [{lo}, {hi}]")
        bl = brentq(_char_residual, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        if abs(_char_residual(bl)) > tol:
            raise RootBracketError(f"root {i} residual above tolerance")
        roots[i - 1] = bl / L
    return roots


def gauss_panels(L: float, n_panels: int, nodes_per_panel: int = 8):
    """Composite Gauss-Legendre rule on (0, L): returns (nodes, weights)."""
    xg, wg = np.polynomial.legendre.leggauss(nodes_per_panel)
    width = L / n_panels
    starts = np.arange(n_panels) * width
    nodes = (starts[:, None] + 0.5 * width * (xg[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * wg, n_panels)
    return nodes, weights


def _raw_mode(beta: float, L: float, x: np.ndarray):
    """Unnormalized mode and its first two derivatives at x, overflow-free.

    With t = beta*x, T = beta*L and sigma = (cosh T - cos T)/(sinh T - sin T):
        w    = cosh t - cos t - sigma (sinh t - sin t)
        w'   = beta  [sinh t + sin t - sigma (cosh t - cos t)]
        w''  = beta^2[cosh t + cos t - sigma (sinh t + sin t)]
    The hyperbolic combinations are regrouped as
        cosh t - sigma sinh t = a_T e^{t-T}/2 + (1+sigma) e^{-t}/2
        sinh t - sigma cosh t = a_T e^{t-T}/2 - (1+sigma) e^{-t}/2
    where a_T = (1-sigma) e^{T} is computed from a cancellation-free formula.
    """
    T = beta * L
    eT = np.exp(-T)
    cT, sT = np.cos(T), np.sin(T)
    denom = 0.5 * (1.0 - eT * eT) - sT * eT          # (sinh T - sin T) e^{-T}
    sigma = (0.5 * (1.0 + eT * eT) - cT * eT) / denom
    a_T = (cT - sT - eT) / denom                      # (1 - sigma) e^{T}

    t = beta * np.asarray(x, dtype=float)
    grow = 0.5 * a_T * np.exp(t - T)
    decay = 0.5 * (1.0 + sigma) * np.exp(-t)
    C = grow + decay                                  # cosh t - sigma sinh t
    S = grow - decay                                  # sinh t - sigma cosh t
    ct, st = np.cos(t), np.sin(t)
    w = C - ct + sigma * st
    wp = beta * (S + st + sigma * ct)
    wpp = beta * beta * (C + ct - sigma * st)
    return w, wp, wpp


@dataclass
class ModeSet:
    """Orthonormal clamped-beam modes with quadrature and Galerkin matrices.

    Attributes
    ----------
    betas : (n,) characteristic roots, lambdas = betas**4.
    nodes, weights : composite Gauss-Legendre rule on (0, L).
    V, D1, D2 : mode values / first / second derivatives at the nodes,
        shape (n_nodes, n_modes), already normalized to unit L2 norm.
    grad : gradient Gram matrix  G_ij = int w_i' w_j'  (symmetric PD).
    lambdas : diagonal of the stiffness operator in the mode basis.
    """

    L: float
    betas: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    scales: np.ndarray
    V: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    grad: np.ndarray = field(default=None, repr=False)
    lambdas: np.ndarray = field(default=None, repr=False)
    mass_residual: float = np.nan

    @property
    def n_modes(self) -> int:
        return len(self.betas)

    def eval_mode(self, i: int, x) -> np.ndarray:
        """Value of normalized mode i (0-based) at position(s) x in [0, L]."""
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > self.L + 1e-12):
            raise ValueError(f"x outside [0, {self.L}]")
        w, _, _ = _raw_mode(self.betas[i], self.L, np.clip(x, 0.0, self.L))
        return self.scales[i] * w

    def eval_mode_deriv(self, i: int, x, order: int = 1) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > self.L + 1e-12):
            raise ValueError(f"x outside [0, {self.L}]")
        vals = _raw_mode(self.betas[i], self.L, np.clip(x, 0.0, self.L))
        return self.scales[i] * vals[order]

    def project(self, f) -> np.ndarray:
        """Modal coefficients c_i = int f w_i by quadrature.

        ``f`` is a callable on (0, L) or an array of values at the nodes.
        """
        fv = f(self.nodes) if callable(f) else np.asarray(f, dtype=float)
        if not np.all(np.isfinite(fv)):
            raise ValueError("non-finite values in projected function")
        return self.V.T @ (self.weights * fv)

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        """Values of sum_i c_i w_i at the quadrature nodes."""
        return self.V @ np.asarray(coeffs, dtype=float)

    def dump_matrix(self, name: str, path) -> None:
        """Write one matrix as plain text, row-major, with a metadata header."""
        mat = {"grad": self.grad, "stiff": np.diag(self.lambdas),
               "modes": self.V}[name]
        header = (f"viscobeam matrix dump: {name}\n"
                  f"L = {self.L!r}  n_modes = {self.n_modes}  "
                  f"n_nodes = {len(self.nodes)}")
        np.savetxt(path, np.atleast_2d(mat), fmt="%.17g", delimiter="\t",
                   header=header)


class AssemblyError(RuntimeError):
    """Gradient matrix failed the SPD check (under-resolved quadrature)."""


def build_modeset(n_modes: int, L: float, nodes_per_mode: int = 40,
                  root_tol: float = 1e-13) -> ModeSet:
    """Construct the normalized mode set and assemble the Galerkin matrices."""
    betas = solve_characteristic_roots(n_modes, L, tol=root_tol)
    n_panels = max(4, (n_modes * nodes_per_mode) // 8)
    nodes, weights = gauss_panels(L, n_panels)

    raw = [_raw_mode(b, L, nodes) for b in betas]
    W0 = np.stack([r[0] for r in raw], axis=1)
    norms = np.sqrt(np.einsum("q,qi,qi->i", weights, W0, W0))
    scales = 1.0 / norms
    V = W0 * scales
    D1 = np.stack([r[1] for r in raw], axis=1) * scales
    D2 = np.stack([r[2] for r in raw], axis=1) * scales

    ms = ModeSet(L=L, betas=betas, nodes=nodes, weights=weights, scales=scales,
                 V=V, D1=D1, D2=D2)
    return assemble_matrices(ms)


def assemble_matrices(ms: ModeSet) -> ModeSet:
    """Fill grad/lambdas on ``ms``; verifies symmetry, SPD and orthonormality."""
    w = ms.weights
    grad = (ms.D1 * w[:, None]).T @ ms.D1
    grad = 0.5 * (grad + grad.T)
    sym_err = np.max(np.abs(grad - grad.T))
    if sym_err > 1e-12:
        raise AssemblyError(f"gradient matrix asymmetry {sym_err:.3e}")
    try:
        np.linalg.cholesky(grad)
    except np.linalg.LinAlgError as exc:
        raise AssemblyError("gradient matrix not SPD; refine quadrature") from exc

    mass = (ms.V * w[:, None]).T @ ms.V
    ms.mass_residual = float(np.max(np.abs(mass - np.eye(ms.n_modes))))
    ms.grad = grad
    ms.lambdas = ms.betas ** 4
    return ms
