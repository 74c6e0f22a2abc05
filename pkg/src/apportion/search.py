"""Numerical search for transforming matrices, as a one-sided oracle.

The objective is the variance of the squared entry moduli of M A M^-1 over M
parameterized by 2n^2 reals, with a log-barrier on |det M| and M held at unit
Frobenius norm (the image is scale invariant in M).  Multi-start BFGS with a
backtracking line search runs all restarts side by side on a batch axis; the
best candidates are then confirmed by Gauss-Newton refinement of the
uniformity residuals, re-measured with the true modulus spread, and
re-verified through the core checks, so the search can only err toward
"not found".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifier import classify, request_certificate
from .constructors import ApportionCertificate, CertTag
from .core import RCOND_THRESHOLD, Tolerance, as_matrix, is_uniform, reciprocal_condition
from .errors import ConstructionError, InvalidInputError, SearchBudgetError
from .jordan import JordanSpec, build_jordan
from .reports import Verdict

__all__ = [
    "SearchConfig",
    "SearchOutcome",
    "SigmaReport",
    "find_apportioning",
    "defect_objective",
    "sigma_estimate",
]

MAX_SEARCH_ORDER = 16


@dataclass(frozen=True)
class SearchConfig:
    """Search budget and optimizer hyperparameters; equal configs and inputs
    give identical outcomes."""

    restarts: int = 32
    max_iters: int = 2000
    seed: int = 0
    defect_target: float = 1e-8
    barrier_weight: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    gtol: float = 1e-8
    stall_iters: int = 5
    stall_rtol: float = 1e-10
    init_scale: float = 1.0
    candidate_window: float = 1e4
    candidates: int = 4
    confirm_factor: float = 3e-2
    confirm_steps: int = 6

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise InvalidInputError("restarts and max_iters must be positive")
        if self.defect_target <= 0:
            raise InvalidInputError("defect_target must be positive")


@dataclass(frozen=True)
class SearchOutcome:
    """Result of one search: best spread found and, on success, a certificate.

    ``found`` requires confirmation: the winning point must refine to well
    below the target under a Gauss-Newton pass on the uniformity residuals,
    so ``best_defect`` can sit below ``defect_target`` with ``found`` False
    near matrices that are uniformizable only in an unbounded-entry limit.
    ``restarts_used`` is the 1-based index of the winning restart, or the full
    restart count when nothing was found.  ``restart_defects`` holds each
    restart's best spread for transcript output.
    """

    found: bool
    best_defect: float
    certificate: Optional[ApportionCertificate]
    restarts_used: int
    restart_defects: tuple[float, ...] = field(default=())

    def to_json(self, with_transcript=False) -> dict:
        out = {
            "found": self.found,
            "best_defect": self.best_defect,
            "restarts_used": self.restarts_used,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }
        if with_transcript:
            out["restart_defects"] = list(self.restart_defects)
        return out


def _det_inv_batch(M: np.ndarray):
    """Batched determinant and inverse; closed adjugate form at order 2."""
    if M.shape[1] == 2:
        a, b = M[:, 0, 0], M[:, 0, 1]
        c, d = M[:, 1, 0], M[:, 1, 1]
        det = a * d - b * c
        safe = np.where(det == 0, 1.0, det)
        Minv = np.empty_like(M)
        Minv[:, 0, 0] = d
        Minv[:, 0, 1] = -b
        Minv[:, 1, 0] = -c
        Minv[:, 1, 1] = a
        Minv /= safe[:, None, None]
        return det, Minv
    det = np.linalg.det(M)
    bad = ~np.isfinite(det) | (np.abs(det) < 1e-280)
    if bad.any():
        M = M.copy()
        M[bad] = np.eye(M.shape[1])
        det = det.copy()
        det[bad] = np.nan
    return det, np.linalg.inv(M)


def _objective_batch(X: np.ndarray, A: np.ndarray, barrier: float):
    """Value, gradient, and modulus spread of the defect objective, batched.

    X has one restart per row; each row holds Re(M) then Im(M) flattened and
    is normalized to unit Frobenius norm before evaluation.  Rows whose M is
    numerically singular get value +inf and a zero gradient.
    """
    R = X.shape[0]
    n = A.shape[0]
    n2 = n * n
    norms = np.sqrt(np.einsum("ri,ri->r", X, X))
    norms = np.where(norms == 0.0, 1.0, norms)
    Xn = X / norms[:, None]
    M = Xn[:, :n2].reshape(R, n, n) + 1j * Xn[:, n2:].reshape(R, n, n)
    det, Minv = _det_inv_batch(M)
    bad = ~np.isfinite(det) | (np.abs(det) < 1e-280)
    if bad.any():
        det = np.where(bad, 1.0, det)
        Minv = Minv.copy()
        Minv[bad] = np.eye(n)
    B = M @ A @ Minv
    absB2 = B.real**2 + B.imag**2
    v = absB2.reshape(R, n2)
    dev = v - v.mean(axis=1)[:, None]
    f = (dev**2).mean(axis=1) - 2.0 * barrier * np.log(np.abs(det))
    W = dev.reshape(R, n, n) * B.conj()
    T = Minv @ np.swapaxes(W, 1, 2)
    K = A @ T - T @ B
    gM = (4.0 / n2) * np.swapaxes(K, 1, 2) - 2.0 * barrier * np.swapaxes(Minv, 1, 2)
    g = np.concatenate([gM.real.reshape(R, n2), -gM.imag.reshape(R, n2)], axis=1)
    # chain rule through the unit-norm projection of X
    g = (g - np.einsum("ri,ri->r", g, Xn)[:, None] * Xn) / norms[:, None]
    absB = np.sqrt(absB2).reshape(R, n2)
    spread = absB.max(axis=1) - absB.min(axis=1)
    if bad.any():
        f[bad] = np.inf
        g[bad] = 0.0
        spread[bad] = np.inf
    return f, g, spread


def defect_objective(x: np.ndarray, A, cfg: SearchConfig = SearchConfig()):
    """Single-point objective value and analytic gradient (for gradient checks)."""
    A = as_matrix(A, square=True, name="A")
    x = np.asarray(x, dtype=float)
    if x.size != 2 * A.shape[0] ** 2:
        raise InvalidInputError("parameter vector must have length 2 n^2")
    f, g, _ = _objective_batch(x[None, :], A, cfg.barrier_weight)
    return float(f[0]), g[0]


def _initial_points(cfg: SearchConfig, n: int) -> np.ndarray:
    X = np.empty((cfg.restarts, 2 * n * n))
    for r in range(cfg.restarts):
        rng = np.random.default_rng((cfg.seed, r))
        X[r] = cfg.init_scale * rng.standard_normal(2 * n * n)
    return X


def find_apportioning(A, cfg: SearchConfig = SearchConfig()) -> SearchOutcome:
    """Seek M making M A M^-1 uniform, up to the configured modulus spread.

    Runs the configured restarts in lockstep until one reaches the target
    spread, all stall or converge, or the iteration budget ends; the best few
    candidates are then confirmed by Gauss-Newton refinement of the
    uniformity residuals.  A success is accepted only if the refined M passes
    the nonsingularity gate and the image re-verifies as uniform at the
    target tolerance; failure to find is reported as evidence only, never as
    a verdict.
    """
    A = as_matrix(A, square=True, name="A")
    n = A.shape[0]
    if n > MAX_SEARCH_ORDER:
        raise SearchBudgetError(f"search is budgeted to order <= {MAX_SEARCH_ORDER}")
    R = cfg.restarts
    D = 2 * n * n
    X = _initial_points(cfg, n)
    f, g, spread = _objective_batch(X, A, cfg.barrier_weight)
    H = np.broadcast_to(np.eye(D), (R, D, D)).copy()
    frozen = ~np.isfinite(f)
    best_spread = spread.copy()
    best_X = X.copy()
    stall = np.zeros(R, dtype=int)

    for _ in range(cfg.max_iters):
        if (spread <= cfg.defect_target).any():
            break
        if frozen.all():
            break
        p = -np.einsum("rij,rj->ri", H, g)
        gTp = np.einsum("ri,ri->r", g, p)
        uphill = gTp >= 0
        if uphill.any():
            p[uphill] = -g[uphill]
            gTp[uphill] = -np.einsum("ri,ri->r", g[uphill], g[uphill])
            H[uphill] = np.eye(D)
        rows = np.where(~frozen)[0]
        t = np.ones(rows.size)
        pending = np.ones(rows.size, dtype=bool)
        new_X = X[rows].copy()
        new_f = f[rows].copy()
        new_g = g[rows].copy()
        new_s = spread[rows].copy()
        for _bt in range(cfg.max_backtracks):
            live = np.where(pending)[0]
            if live.size == 0:
                break
            sub = rows[live]
            Xc = X[sub] + t[live, None] * p[sub]
            fc, gc, sc = _objective_batch(Xc, A, cfg.barrier_weight)
            ok = fc <= f[sub] + cfg.armijo_c * t[live] * gTp[sub]
            acc = live[ok]
            new_X[acc] = Xc[ok]
            new_f[acc] = fc[ok]
            new_g[acc] = gc[ok]
            new_s[acc] = sc[ok]
            pending[acc] = False
            t[live[~ok]] *= cfg.backtrack_factor
        moved_local = np.where(~pending)[0]
        failed_local = np.where(pending)[0]
        frozen[rows[failed_local]] = True
        if moved_local.size:
            mrows = rows[moved_local]
            s_step = new_X[moved_local] - X[mrows]
            y_step = new_g[moved_local] - g[mrows]
            sy = np.einsum("ri,ri->r", s_step, y_step)
            upd = sy > 1e-14
            if upd.any():
                urows = mrows[upd]
                s_u = s_step[upd]
                y_u = y_step[upd]
                sy_u = sy[upd]
                Hy = np.einsum("rij,rj->ri", H[urows], y_u)
                yHy = np.einsum("ri,ri->r", y_u, Hy)
                coeff = (sy_u + yHy) / sy_u**2
                H[urows] += (
                    coeff[:, None, None] * np.einsum("ri,rj->rij", s_u, s_u)
                    - (np.einsum("ri,rj->rij", Hy, s_u)
                       + np.einsum("ri,rj->rij", s_u, Hy)) / sy_u[:, None, None]
                )
            improvement = f[mrows] - new_f[moved_local]
            stalled = improvement <= cfg.stall_rtol * np.maximum(1.0, np.abs(f[mrows]))
            stall[mrows] = np.where(stalled, stall[mrows] + 1, 0)
            X[mrows] = new_X[moved_local]
            f[mrows] = new_f[moved_local]
            g[mrows] = new_g[moved_local]
            spread[mrows] = new_s[moved_local]
            better = new_s[moved_local] < best_spread[mrows]
            best_spread[mrows[better]] = new_s[moved_local][better]
            best_X[mrows[better]] = new_X[moved_local][better]
            frozen[mrows[stall[mrows] >= cfg.stall_iters]] = True
            gnorm = np.abs(new_g[moved_local]).max(axis=1)
            frozen[mrows[gnorm <= cfg.gtol]] = True

    order = np.lexsort((np.arange(R), best_spread))
    defects = tuple(float(d) for d in best_spread)
    window = max(cfg.defect_target, cfg.candidate_window * cfg.defect_target)
    confirm_target = cfg.defect_target * cfg.confirm_factor
    best = float(best_spread[int(order[0])])
    # a candidate counts as found only if the equal-modulus residual system is
    # solvable right next to it: Gauss-Newton collapses the spread by orders
    # of magnitude near a genuine solution, while near-boundary pseudo
    # solutions (uniformizable only with unbounded entries) barely move
    for idx in order[: cfg.candidates]:
        idx = int(idx)
        if best_spread[idx] > window:
            break
        rx, rs = _uniformity_refine(best_X[idx], A, cfg.confirm_steps)
        best = min(best, rs)
        if rs <= confirm_target:
            cert = _certify_search_point(rx, A, cfg)
            if cert is not None:
                return SearchOutcome(True, rs, cert, idx + 1, defects)
    return SearchOutcome(False, best, None, R, defects)


def _normalized_image(x: np.ndarray, A: np.ndarray):
    n = A.shape[0]
    n2 = n * n
    xn = x / np.linalg.norm(x)
    M = xn[:n2].reshape(n, n) + 1j * xn[n2:].reshape(n, n)
    Minv = np.linalg.inv(M)
    return xn, M, Minv, M @ A @ Minv


def _uniformity_refine(x: np.ndarray, A: np.ndarray, steps: int):
    """Damped Gauss-Newton on the centered squared-modulus residuals.

    Each step linearizes the entry moduli of M A M^-1 around the current
    point and takes the least-squares step toward equal values, halving the
    step while the modulus spread does not improve.
    """
    n = A.shape[0]
    n2 = n * n

    def spread_of(z):
        B = _normalized_image(z, A)[3]
        mods = np.abs(B)
        return float(mods.max() - mods.min())

    try:
        best = spread_of(x)
    except np.linalg.LinAlgError:
        return x, math.inf
    for _ in range(steps):
        try:
            xn, _, Minv, B = _normalized_image(x, A)
        except np.linalg.LinAlgError:
            break
        v = (B.real ** 2 + B.imag ** 2).ravel()
        r = v - v.mean()
        AMinv = A @ Minv
        J = np.empty((n2, 2 * n2))
        for k in range(2 * n2):
            E = np.zeros((n, n), dtype=complex)
            if k < n2:
                E[k // n, k % n] = 1.0
            else:
                E[(k - n2) // n, (k - n2) % n] = 1j
            dB = E @ AMinv - B @ (E @ Minv)
            dv = 2.0 * (B.conj() * dB).real.ravel()
            J[:, k] = dv - dv.mean()
        try:
            delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        step_s = None
        for _ in range(20):
            try:
                step_s = spread_of(xn + t * delta)
            except np.linalg.LinAlgError:
                step_s = math.inf
            if step_s < best:
                break
            t *= 0.5
        else:
            break
        x = xn + t * delta
        best = min(best, step_s)
    return x, best


def _certify_search_point(x: np.ndarray, A: np.ndarray,
                          cfg: SearchConfig) -> Optional[ApportionCertificate]:
    n = A.shape[0]
    n2 = n * n
    xn = x / np.linalg.norm(x)
    M = xn[:n2].reshape(n, n) + 1j * xn[n2:].reshape(n, n)
    if reciprocal_condition(M) < RCOND_THRESHOLD:
        return None
    Minv = np.linalg.inv(M)
    B = M @ A @ Minv
    tol = Tolerance(rel=cfg.defect_target, abs=cfg.defect_target)
    rep = is_uniform(B, tol)
    if not rep.is_uniform:
        return None
    from .constructors import _make_certificate

    try:
        return _make_certificate(M, Minv, B, rep.kappa, CertTag.SEARCH, A, tol=tol,
                                 kappa_rtol=1e-6)
    except ConstructionError:
        return None


# ---------------------------------------------------------------------------
# least zero padding that makes a matrix apportionable
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaReport:
    """Per-padding outcomes and the resulting empirical/theory upper bounds."""

    outcomes: dict[int, SearchOutcome]
    sigma_upper_empirical: Optional[int]
    sigma_theory_upper: int

    def to_json(self, with_transcript=False) -> dict:
        return {
            "outcomes": {str(m): o.to_json(with_transcript) for m, o in self.outcomes.items()},
            "sigma_upper_empirical": self.sigma_upper_empirical,
            "sigma_theory_upper": self.sigma_theory_upper,
        }


def _coerce_sigma_spec(A_or_spec) -> JordanSpec:
    if isinstance(A_or_spec, JordanSpec):
        return A_or_spec
    M = as_matrix(A_or_spec, square=True, name="A")
    if M.shape[0] > 3:
        raise InvalidInputError("raw-entry input above order 3 needs a JordanSpec")
    from .jordan import eigenstructure_small

    return eigenstructure_small(M).spec


def sigma_estimate(A_or_spec, m_max: int,
                   cfg: SearchConfig = SearchConfig()) -> SigmaReport:
    """Estimate the least m with A + O_m apportionable, for m = 0 .. m_max.

    Classification is consulted first at each padding (a theory verdict beats
    any search); the numerical search runs only on Unknown cases.  The
    reported value is an upper bound: search misses never prove anything.
    """
    spec = _coerce_sigma_spec(A_or_spec)
    n, r = spec.order, spec.rank
    if n + m_max > MAX_SEARCH_ORDER:
        raise SearchBudgetError(
            f"order + m_max must stay within {MAX_SEARCH_ORDER}"
        )
    theory_upper = min(max(2 * r - n, 0), n)
    outcomes: dict[int, SearchOutcome] = {}
    empirical: Optional[int] = None
    for m in range(0, m_max + 1):
        padded = JordanSpec(spec.blocks + ((0j, 1),) * m)
        report = classify(padded)
        if report.verdict is Verdict.APPORTIONABLE:
            cert = request_certificate(padded, report=report)
            rep = is_uniform(cert.B)
            outcomes[m] = SearchOutcome(True, rep.defect, cert, 0, ())
        elif report.verdict is Verdict.NOT_APPORTIONABLE:
            outcomes[m] = SearchOutcome(False, math.inf, None, 0, ())
        else:
            outcomes[m] = find_apportioning(build_jordan(padded), cfg)
        if empirical is None and outcomes[m].found:
            empirical = m
    return SigmaReport(outcomes=outcomes, sigma_upper_empirical=empirical,
                       sigma_theory_upper=theory_upper)
