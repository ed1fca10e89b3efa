"""Optimal transport between discrete distributions on the sphere.

``sinkhorn`` solves the entropic problem

    min_T  <C, T> + eps * sum T log T   s.t.  T 1 = U,  T^T 1 = V

in the log domain: ``T_ij = exp((f_i + g_j - C_ij) / eps)``. Small ``eps``
(1e-4 against costs up to pi) is reached by eps-scaling, and each stage
alternates Sinkhorn sweeps with regularised Newton steps on the dual, which
keeps the iteration count bounded when the plan has near-zero basic entries.

``exact_emd`` is an independent transportation-simplex solver used as the
unregularised reference.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedSizeError

DEFAULT_EPSILON = 1e-4
EMD_MAX_SUPPORT = 64


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = 10_000
    tolerance: float = 1e-9
    epsilon_scaling: bool = True
    newton: bool = True
    scaling_factor: float = 0.1
    sweeps_per_stage: int = 5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.scaling_factor < 1:
            raise ValueError("scaling_factor must lie in (0, 1)")


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray = field(repr=False)
    dual_u: np.ndarray = field(repr=False)
    dual_v: np.ndarray = field(repr=False)
    iterations: int
    marginal_error: float
    epsilon: float
    tolerance: float

    @property
    def n(self) -> int:
        return self.plan.shape[0]

    @property
    def converged(self) -> bool:
        return self.marginal_error <= self.tolerance


@dataclass(frozen=True)
class SmlResult:
    transport_cost: float
    regularized_objective: float
    iterations: int
    marginal_error: float
    converged: bool
    plan: TransportPlan = field(repr=False)

    def to_json(self) -> dict:
        return {
            "transport_cost": self.transport_cost,
            "regularized_objective": self.regularized_objective,
            "iterations": self.iterations,
            "marginal_error": self.marginal_error,
        }


@dataclass(frozen=True)
class SmlGradient:
    gradient: np.ndarray
    reliable: bool
    marginal_error: float


@dataclass(frozen=True)
class EmdResult:
    cost: float
    plan: np.ndarray = field(repr=False)
    row_potentials: np.ndarray = field(repr=False)
    col_potentials: np.ndarray = field(repr=False)
    pivots: int = 0


def as_distribution(w, name="distribution") -> np.ndarray:
    """Validate a probability vector (non-negative, finite, sums to 1 within 1e-9)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must sum to 1, got {w.sum()!r}")
    return w


def _check_problem(U, V, C):
    U = as_distribution(U, "U")
    V = as_distribution(V, "V")
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (U.size, V.size):
        raise ValueError(f"cost matrix shape {C.shape} does not match sizes {U.size}, {V.size}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    return U, V, C


# -- Sinkhorn ---------------------------------------------------------------


def _lse(M, axis):
    m = M.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(M - m).sum(axis=axis, keepdims=True))).squeeze(axis)


class _Solver:
    """Log-domain state for one (reduced) problem at a given eps."""

    def __init__(self, a, b, C):
        self.a, self.b, self.C = a, b, C
        self.la, self.lb = np.log(a), np.log(b)
        self.f = np.zeros(a.size)
        self.g = np.zeros(b.size)
        w = np.concatenate([np.ones(a.size), -np.ones(b.size)])
        self.ww = np.outer(w, w)
        self.diag = np.diag_indices(w.size)

    def plan(self, f=None, g=None):
        f = self.f if f is None else f
        g = self.g if g is None else g
        return np.exp((f[:, None] + g[None, :] - self.C) / self.eps)

    def error(self, T):
        return max(np.abs(T.sum(1) - self.a).sum(), np.abs(T.sum(0) - self.b).sum())

    def sweep(self):
        e = self.eps
        self.f = e * (self.la - _lse((self.g[None, :] - self.C) / e, 1))
        self.g = e * (self.lb - _lse((self.f[:, None] - self.C) / e, 0))

    def dual(self, f, g, T):
        return f @ self.a + g @ self.b - self.eps * T.sum()

    def newton_step(self, T, err):
        """One damped, regularised Newton ascent step on the dual.

        Returns ``(T, err)`` after the step, or ``None`` if no step was accepted.
        """
        e, n = self.eps, self.a.size
        r, c = T.sum(1), T.sum(0)
        grad = np.concatenate([self.a - r, self.b - c])
        H = np.empty((self.ww.shape[0],) * 2)
        H[:n, :n] = 0.0
        H[n:, n:] = 0.0
        H[:n, n:] = T
        H[n:, :n] = T.T
        diag = np.concatenate([r, c])
        H[self.diag] = diag
        H /= e
        # (1, -1) is always in the null space and orthogonal to grad; pin it
        H += self.ww * (diag.sum() / (e * diag.size**2))
        # shift by |grad| keeps the system SPD when the support graph disconnects
        H[self.diag] += np.sqrt(grad @ grad)
        try:
            d = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            return None
        phi = self.dual(self.f, self.g, T)
        slope = grad @ d
        alpha = 1.0
        while alpha > 1e-10:
            f, g = self.f + alpha * d[:n], self.g + alpha * d[n:]
            with np.errstate(over="ignore", invalid="ignore"):
                Tn = self.plan(f, g)
                phin = self.dual(f, g, Tn)
            if np.isfinite(phin):
                errn = self.error(Tn)
                armijo = phin >= phi + 1e-4 * alpha * slope
                # near convergence phi no longer resolves progress; fall back on the residual
                if armijo or (errn < err and phin >= phi - 1e-14 * abs(phi)):
                    self.f, self.g = f, g
                    return Tn, errn
            alpha *= 0.5
        return None


def _eps_schedule(cmax, cfg):
    eps = cfg.epsilon
    if not cfg.epsilon_scaling:
        return [eps]
    out = []
    e = max(cmax, eps)
    while e * cfg.scaling_factor > eps:
        e *= cfg.scaling_factor
        out.append(e)
    out.append(eps)
    return out


def _solve_reduced(a, b, C, cfg):
    s = _Solver(a, b, C)
    it = 0
    budget = cfg.max_iterations
    stages = _eps_schedule(float(C.max()) if C.size else 0.0, cfg)
    T, err = None, np.inf
    for k, eps in enumerate(stages):
        s.eps = eps
        final = k == len(stages) - 1
        target = cfg.tolerance if final else max(cfg.tolerance, 1e-6)
        while it < budget:
            for _ in range(cfg.sweeps_per_stage if cfg.newton else 1):
                s.sweep()
                it += 1
                T = s.plan()
                err = s.error(T)
                if err <= target or it >= budget:
                    break
            if err <= target or it >= budget:
                break
            if not cfg.newton:
                continue
            while err > target and it < budget:
                step = s.newton_step(T, err)
                if step is None:
                    break
                T, err = step
                it += 1
            if err <= target:
                break
        if final and cfg.newton and err <= target:
            # polish: quadratic convergence makes one or two more steps nearly free
            for _ in range(2):
                if it >= budget:
                    break
                step = s.newton_step(T, err)
                if step is None or step[1] >= err:
                    break
                T, err = step
                it += 1
        if it >= budget:
            break
    s.eps = cfg.epsilon
    if np.array_equal(a, b) and np.array_equal(C, C.T):
        # The optimum is symmetric (f = g up to a constant), but once the plan
        # is numerically diagonal the marginals cannot see how f + g is split
        # between the two sides; restore the symmetric split explicitly.
        h = 0.5 * (s.f + s.g)
        s.f, s.g = h, h.copy()
        T = s.plan()
        err = s.error(T)
    return s, T, float(err), it


def sinkhorn(U, V, C, cfg: SinkhornConfig | None = None) -> TransportPlan:
    """Entropic OT plan between ``U`` and ``V`` under ground cost ``C``.

    Never raises on non-convergence; check ``marginal_error`` / ``converged``.
    Zero-weight rows and columns are removed before iterating and come back as
    zeros in the plan; their potentials are the soft c-transforms of the
    other side's potential.
    """
    cfg = cfg or SinkhornConfig()
    U, V, C = _check_problem(U, V, C)
    ia = np.flatnonzero(U > 0)
    jb = np.flatnonzero(V > 0)
    a = U[ia] / U[ia].sum()
    b = V[jb] / V[jb].sum()
    Cr = C[np.ix_(ia, jb)]
    s, T, err, it = _solve_reduced(a, b, Cr, cfg)
    eps = cfg.epsilon

    plan = np.zeros_like(C)
    plan[np.ix_(ia, jb)] = T
    f = np.empty(U.size)
    g = np.empty(V.size)
    f[ia], g[jb] = s.f, s.g
    if ia.size < U.size:
        rest = np.setdiff1d(np.arange(U.size), ia)
        f[rest] = -eps * _lse((s.g[None, :] - C[np.ix_(rest, jb)]) / eps, 1)
    if jb.size < V.size:
        rest = np.setdiff1d(np.arange(V.size), jb)
        g[rest] = -eps * _lse((s.f[:, None] - C[np.ix_(ia, rest)]) / eps, 0)
    # report the residual against the caller's marginals
    err = max(err, np.abs(plan.sum(1) - U).sum(), np.abs(plan.sum(0) - V).sum())
    return TransportPlan(plan, f, g, it, float(err), eps, cfg.tolerance)


def entropy(T) -> float:
    """``H(T) = -sum T log T`` with ``0 log 0 = 0``."""
    T = np.asarray(T, dtype=np.float64)
    nz = T[T > 0]
    return float(-(nz * np.log(nz)).sum())


def sml(U, V, C, cfg: SinkhornConfig | None = None) -> SmlResult:
    cfg = cfg or SinkhornConfig()
    tp = sinkhorn(U, V, C, cfg)
    C = np.asarray(C, dtype=np.float64)
    cost = float((C * tp.plan).sum())
    return SmlResult(
        transport_cost=cost,
        regularized_objective=cost - cfg.epsilon * entropy(tp.plan),
        iterations=tp.iterations,
        marginal_error=tp.marginal_error,
        converged=tp.converged,
        plan=tp,
    )


def sml_gradient(U, V, C, cfg: SinkhornConfig | None = None) -> SmlGradient:
    """Gradient of the regularised objective with respect to ``U``.

    This is the source dual potential, centred because the loss lives on the
    simplex (only differences along ``sum(dU) = 0`` are meaningful).
    """
    tp = sinkhorn(U, V, C, cfg)
    grad = tp.dual_u - tp.dual_u.mean()
    return SmlGradient(grad, tp.converged, tp.marginal_error)


def sml_channels(pred, true, C, cfg: SinkhornConfig | None = None) -> list[SmlResult]:
    """Per-channel loss between two ``IlluminationParams``."""
    if pred.n != true.n:
        raise ValueError(f"anchor counts differ: {pred.n} vs {true.n}")
    return [sml(pred.distribution[c], true.distribution[c], C, cfg) for c in range(3)]


def sml_rgb(pred, true, C, cfg: SinkhornConfig | None = None) -> float:
    """Mean transport cost over the three colour channels."""
    return float(np.mean([r.transport_cost for r in sml_channels(pred, true, C, cfg)]))


# -- exact EMD (transportation simplex) --------------------------------------


def _northwest_corner(a, b):
    m, k = a.size, b.size
    x = np.zeros((m, k))
    basis = []
    s, d = a.copy(), b.copy()
    i = j = 0
    while True:
        if i == m - 1 and j == k - 1:
            x[i, j] = max(s[i], 0.0)
            basis.append((i, j))
            break
        q = min(s[i], d[j])
        x[i, j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if (s[i] <= d[j] and i < m - 1) or j == k - 1:
            i += 1
        else:
            j += 1
    return x, basis


def _tree_potentials(C, basis, m, k):
    adj = [[] for _ in range(m + k)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot = np.full(m + k, np.nan)
    pot[0] = 0.0
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if np.isnan(pot[nb]):
                i, j = (node, nb - m) if node < m else (nb, node - m)
                pot[nb] = C[i, j] - pot[node]
                stack.append(nb)
    return pot[:m], pot[m:], adj


def _tree_path(adj, start, goal):
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                stack.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path[::-1]


def _transport_simplex(a, b, C, tol):
    m, k = a.size, b.size
    x, basis = _northwest_corner(a, b)
    in_basis = np.zeros((m, k), dtype=bool)
    for cell in basis:
        in_basis[cell] = True
    pivots = 0
    max_pivots = 100 * m * k + 1000
    while True:
        u, v, adj = _tree_potentials(C, basis, m, k)
        red = C - u[:, None] - v[None, :]
        cand = np.flatnonzero((red < -tol).ravel() & ~in_basis.ravel())
        if cand.size == 0:
            return x, u, v, red, pivots
        if pivots >= max_pivots:
            raise RuntimeError("transportation simplex did not terminate")
        ei, ej = divmod(int(cand[0]), k)  # Bland: lowest index enters
        # cycle: entering cell, then tree path from column ej back to row ei
        path = _tree_path(adj, m + ej, ei)
        cells = []
        for p, q in zip(path[:-1], path[1:]):
            cells.append((q, p - m) if q < m else (p, q - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(x[c] for c in minus)
        leave = min((c for c in minus if x[c] == theta), key=lambda c: c[0] * k + c[1])
        for c in plus:
            x[c] += theta
        for c in minus:
            x[c] -= theta
        x[leave] = 0.0
        x[ei, ej] = theta
        basis.remove(leave)
        basis.append((ei, ej))
        in_basis[leave] = False
        in_basis[ei, ej] = True
        pivots += 1


def exact_emd(U, V, C, max_support: int = EMD_MAX_SUPPORT) -> EmdResult:
    """Unregularised optimal transport cost by the transportation simplex.

    Bland's rule (lowest index enters, lowest index leaves on ties) prevents
    cycling on degenerate bases. Optimality is certified by complementary
    slackness before returning. Zero-weight points are dropped, so the size
    limit applies to the supports of ``U`` and ``V``.
    """
    U, V, C = _check_problem(U, V, C)
    ia = np.flatnonzero(U > 0)
    jb = np.flatnonzero(V > 0)
    if ia.size > max_support or jb.size > max_support:
        raise UnsupportedSizeError(
            f"exact EMD supports at most {max_support} points per side, got {ia.size} and {jb.size}"
        )
    Cr = C[np.ix_(ia, jb)]
    tol = 1e-12 * max(1.0, float(np.abs(C).max()))
    x, u, v, red, pivots = _transport_simplex(U[ia], V[jb], Cr, tol)

    if np.any(x < 0) or np.any(red < -tol) or np.any(np.abs(red[x > 0]) > 1e3 * tol):
        raise RuntimeError("exact EMD failed its optimality certificate")

    plan = np.zeros_like(C)
    plan[np.ix_(ia, jb)] = x
    rows = np.empty(U.size)
    cols = np.empty(V.size)
    rows[ia], cols[jb] = u, v
    # c-transforms keep the extended potentials dual feasible
    rest = np.setdiff1d(np.arange(U.size), ia)
    if rest.size:
        rows[rest] = (C[np.ix_(rest, jb)] - v[None, :]).min(axis=1)
    rest = np.setdiff1d(np.arange(V.size), jb)
    if rest.size:
        cols[rest] = (C[:, rest] - rows[:, None]).min(axis=0)
    return EmdResult(float((C * plan).sum()), plan, rows, cols, pivots)
