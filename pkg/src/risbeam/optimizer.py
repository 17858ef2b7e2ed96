"""Rate evaluation, MMSE combining, precoder solve, and the outer
alternating optimization loop.

The loop cycles RIS phases (beam training over the model's codebook),
the closed-form MMSE combiner, the inverse-MSE weight matrix, and the
power-constrained precoder, recording the achievable rate after every
full cycle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, PhaseShiftVector, cascade
from .codebook import SamplingGrid
from .geometry import SystemGeometry

_BUDGET_SLACK = 1e-9


@dataclass(frozen=True)
class Precoder:
    """Transmit precoder with its power budget; ||w||_F^2 <= p_max."""

    w: np.ndarray
    p_max: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim != 2:
            raise ValueError("precoder must be a matrix")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        power = float(np.sum(np.abs(w) ** 2))
        if power > self.p_max + _BUDGET_SLACK:
            raise ValueError(f"precoder power {power} exceeds budget {self.p_max}")
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class Combiner:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 2 or not np.all(np.isfinite(u.view(float))):
            raise ValueError("combiner must be a finite matrix")
        object.__setattr__(self, "u", u)


@dataclass
class AOState:
    """Result of one alternating-optimization run."""

    precoder: Precoder
    combiner: Combiner
    phases: PhaseShiftVector
    weight: np.ndarray
    rate_history: list[float]
    gamma: float
    iterations: int
    evaluations: int
    training_regressions: int = 0
    trace: list[tuple] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.rate_history[-1]

    def trace_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "rate_bps_hz", "gamma", "evaluations"])
            for row in self.trace:
                writer.writerow([row[0], f"{row[1]:.12g}", f"{row[2]:.12g}",
                                 row[3]])


def achievable_rate(h: np.ndarray, w: np.ndarray, noise_var: float) -> float:
    """log2 det(I + H W W^H H^H / noise_var), via singular values of HW."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    b = np.asarray(h, dtype=complex) @ np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(b.view(float))):
        raise ValueError("non-finite rate operands")
    s = np.linalg.svd(b, compute_uv=False)
    return float(np.sum(np.log2(1.0 + s * s / noise_var)))


def rates_for_phase_batch(realization: ChannelRealization, phis: np.ndarray,
                          w: np.ndarray, noise_var: float) -> np.ndarray:
    """Achievable rate for each row of `phis` applied as RIS coefficients.

    Vectorized over the candidate set: HW is assembled per candidate from
    the cached product G_bs_ris @ W and reduced through a batched SVD.
    """
    t = realization.g_bs_ris @ w                       # (M, q)
    bw = np.einsum("um,km,mq->kuq", realization.g_ris_ue, phis, t)
    if min(bw.shape[1], bw.shape[2]) == 1:
        # rank-one product: the single singular value is the Frobenius norm
        s2 = np.sum(np.abs(bw) ** 2, axis=(1, 2))
        return np.log2(1.0 + s2 / noise_var)
    s = np.linalg.svd(bw, compute_uv=False)
    return np.sum(np.log2(1.0 + s * s / noise_var), axis=1)


def mse_matrix(h: np.ndarray, w: np.ndarray, u: np.ndarray,
               noise_var: float) -> np.ndarray:
    """Error covariance (U^H H W - I)(.)^H + noise_var * U^H U."""
    q = w.shape[1]
    d = u.conj().T @ h @ w - np.eye(q)
    e = d @ d.conj().T + noise_var * (u.conj().T @ u)
    return 0.5 * (e + e.conj().T)


def optimal_combiner(h: np.ndarray, w: np.ndarray, noise_var: float) -> Combiner:
    """MMSE combiner (H W W^H H^H + noise_var I)^-1 H W."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    hw = h @ w
    cov = hw @ hw.conj().T + noise_var * np.eye(h.shape[0])
    return Combiner(u=np.linalg.solve(cov, hw))


def weight_update(e: np.ndarray) -> np.ndarray:
    """Inverse of the MSE matrix; raises if E is numerically singular."""
    e = 0.5 * (e + e.conj().T)
    eigs = np.linalg.eigvalsh(e)
    if eigs[0] <= 1e-14 * max(eigs[-1], 1e-300):
        raise ValueError(
            "MSE matrix is singular to working precision; the stream count "
            "q likely exceeds the usable channel rank")
    f = np.linalg.inv(e)
    return 0.5 * (f + f.conj().T)


def solve_precoder(h: np.ndarray, u: np.ndarray, f: np.ndarray, p_max: float,
                   budget_rel_tol: float = 1e-12,
                   max_bisect: int = 500) -> Precoder:
    """Minimize Tr(W^H A W) - 2 Tr(Re(F U^H H W)) s.t. ||W||_F^2 <= p_max.

    A = H^H U F U^H H.  Solved in closed form through the eigenbasis of A:
    W(mu) = (A + mu I)^-1 H^H U F with mu = 0 when the unconstrained
    solution fits the budget, otherwise mu > 0 found by bisection so the
    budget holds with equality.
    """
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    hu = h.conj().T @ u                      # (n_bs, q)
    b = hu @ f                               # linear-term matrix
    a = hu @ f @ hu.conj().T
    a = 0.5 * (a + a.conj().T)
    lam, basis = np.linalg.eigh(a)
    lam = np.maximum(lam, 0.0)
    bt = basis.conj().T @ b
    row_pow = np.sum(np.abs(bt) ** 2, axis=1)
    # A is often rank deficient; the linear term lies in range(A) up to
    # rounding dust, which must not masquerade as an unbounded direction
    null = lam <= lam.max() * lam.size * np.finfo(float).eps if lam.size else lam < 0
    dust = float(np.sqrt(row_pow[null].sum()))
    b_norm = float(np.sqrt(row_pow.sum()))
    if dust <= 1e-10 * max(b_norm, 1e-300):
        lam = np.where(null, 0.0, lam)
        bt[null] = 0.0
        row_pow = np.where(null, 0.0, row_pow)

    def norm_sq(mu: float) -> float:
        denom = (lam + mu) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(row_pow > 0.0, row_pow / denom, 0.0)
        return float(np.sum(terms))

    mu = 0.0
    if not norm_sq(0.0) <= p_max:            # also catches inf
        lo, hi = 0.0, float(np.sqrt(np.sum(row_pow) / p_max))
        for _ in range(max_bisect):
            mu = 0.5 * (lo + hi)
            val = norm_sq(mu)
            if val > p_max:
                lo = mu
            else:
                hi = mu
                if p_max - val <= budget_rel_tol * p_max:
                    break
        else:
            raise RuntimeError(
                f"power bisection did not converge in {max_bisect} steps")
        mu = hi                              # feasible side of the bracket

    denom = lam + mu
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where((row_pow > 0.0)[:, None], bt / denom[:, None], 0.0)
    w = basis @ scaled
    return Precoder(w=w, p_max=p_max)


def default_stream_count(tag: str, geometry: SystemGeometry,
                         l_b: int = 3, l_u: int = 3) -> int:
    """Stream count bounded by antenna counts and the model's rank budget.

    Planar-wave links cap the rank at their path count; the all-spherical
    model supports up to min(n_bs, n_ue, M) streams.
    """
    cap = min(geometry.n_bs, geometry.n_ue)
    if tag == "FF":
        return min(cap, l_b, l_u)
    if tag == "NF":
        return min(cap, l_u)
    if tag == "FN":
        return min(cap, l_b)
    if tag == "NN":
        return min(cap, geometry.m)
    raise ValueError(f"unknown model tag {tag!r}")


def _initial_precoder(h0: np.ndarray, q: int, p_max: float) -> np.ndarray:
    """Matched-filter columns of the zero-phase cascade, scaled to p_max."""
    w = h0.conj().T[:, :q].astype(complex).copy()
    norm = np.linalg.norm(w)
    if norm < 1e-300:
        w = np.zeros((h0.shape[1], q), dtype=complex)
        w[:q, :q] = np.eye(q)
        norm = np.linalg.norm(w)
    return w * (np.sqrt(p_max) / norm)


def ao_loop(realization: ChannelRealization, geometry: SystemGeometry, *,
            p_max: float, noise_var: float,
            grid_bs: SamplingGrid | None = None,
            grid_ue: SamplingGrid | None = None,
            budget=None, max_iters: int = 20, tol: float = 1e-4,
            scheme: str = "auto", q: int | None = None,
            l_b: int = 3, l_u: int = 3) -> AOState:
    """Alternate RIS training, combiner, weight, and precoder updates.

    scheme "auto" picks the training scheme for the realization's model
    tag (FF: angular sweep, NN: hierarchical, NF/FN: two-stage); "angular"
    forces the plain sweep on any model.  Terminates after max_iters
    cycles or when the relative rate change drops below tol.  The trained
    codeword is only adopted when it does not reduce the current rate;
    rejected retrainings are counted in training_regressions.
    """
    from . import training  # deferred: training builds on the rate helpers

    tag = realization.model_tag
    if scheme == "auto":
        scheme = {"FF": "angular", "NN": "hierarchical",
                  "NF": "two_stage", "FN": "two_stage"}[tag]
    if q is None:
        q = default_stream_count(tag, geometry, l_b=l_b, l_u=l_u)
    q = min(q, geometry.n_bs, geometry.n_ue)   # streams beyond this are dead
    if q < 1:
        raise ValueError("stream count must be at least 1")

    def train(w):
        if scheme == "angular":
            return training.angular_sweep(realization, w, noise_var, geometry)
        if scheme == "hierarchical":
            if grid_bs is None or grid_ue is None or budget is None:
                raise ValueError("hierarchical training needs both grids and a budget")
            return training.hierarchical_nn(realization, w, noise_var,
                                            grid_bs, grid_ue, budget, geometry)
        if scheme == "two_stage":
            side = "NF" if tag == "NF" else "FN"
            grid = grid_bs if side == "NF" else grid_ue
            if grid is None or budget is None:
                raise ValueError("two-stage training needs the near-side grid and a budget")
            return training.two_stage_hybrid(realization, w, noise_var,
                                             grid, budget, side, geometry)
        raise ValueError(f"unknown training scheme {scheme!r}")

    phi = np.ones(realization.m, dtype=complex)
    h = cascade(realization, phi)
    w = _initial_precoder(h, q, p_max)
    u = optimal_combiner(h, w, noise_var).u
    f = np.eye(q, dtype=complex)
    rate = achievable_rate(h, w, noise_var)
    history = [rate]
    evaluations = 0
    regressions = 0
    gamma = np.inf
    trace = [(0, rate, np.inf, 0)]

    t = 0
    while t < max_iters and gamma >= tol:
        report = train(w)
        evaluations += report.evaluations
        if report.best_rate >= rate:
            phi = report.best_codeword.coeffs
        else:
            regressions += 1
        h = cascade(realization, phi)
        u = optimal_combiner(h, w, noise_var).u
        e = mse_matrix(h, w, u, noise_var)
        f = weight_update(e)
        w = solve_precoder(h, u, f, p_max).w
        new_rate = achievable_rate(h, w, noise_var)
        gamma = abs(new_rate - rate) / max(abs(rate), 1e-300)
        rate = new_rate
        history.append(rate)
        t += 1
        trace.append((t, rate, gamma, evaluations))

    return AOState(
        precoder=Precoder(w=w, p_max=p_max),
        combiner=Combiner(u=u),
        phases=PhaseShiftVector.from_coefficients(phi),
        weight=f,
        rate_history=history,
        gamma=float(gamma),
        iterations=t,
        evaluations=evaluations,
        training_regressions=regressions,
        trace=trace,
    )
