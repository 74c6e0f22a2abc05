"""Constructive apportionment routines.

Each public ``apportion_*`` function builds a transforming matrix M in closed
form for one matrix class and returns an ApportionCertificate holding M, its
inverse, the uniform image B = M A M^-1, and the achieved modulus.  Every
certificate is re-verified (inverse product, uniformity, similarity residual)
before it is returned.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import DEFAULT_TOL, INVERSE_PAIR_TOL, Tolerance, as_matrix, is_uniform
from .errors import (
    ConstantNotAchievableError,
    ConstructionError,
    InvalidInputError,
)
from .jordan import (
    JordanSpec,
    block_permutation,
    build_jordan,
    complete_inverse_pair,
    geometric_diagonal,
    input_ordered_spec,
)
from .reports import ClassificationReport, ConstantSet, Verdict

__all__ = [
    "CertTag",
    "ApportionCertificate",
    "verify_certificate",
    "reorder_certificate",
    "scale_certificate",
    "pad_by_zero",
    "apportion_nilpotent",
    "apportion_I_oplus_O",
    "HalfRankPlan",
    "half_rank_plan",
    "apportion_half_rank",
    "apportion_A_oplus_zeros",
    "SpiralSolution",
    "spiral_sum",
    "apportion_rank_one",
    "perturb_identity_constants",
    "apportion_perturb_identity",
    "TwoByTwoPlan",
    "two_by_two_plan",
    "two_by_two_constants",
    "apportion_2x2",
    "polar_condition_2x2",
    "TemplateKind",
    "apportion_3x3_template",
]

_SIXTH = cmath.exp(1j * math.pi / 3)        # primitive twelfth root, e^(i pi/3)
_THIRD = cmath.exp(2j * math.pi / 3)        # e^(2 pi i/3)
_ZERO_RTOL = 1e-12


class CertTag(str, enum.Enum):
    PAD_ZERO = "PadZero"
    NILPOTENT = "Nilpotent"
    I_OPLUS_O = "IOplusO"
    HALF_RANK = "HalfRank"
    RANK_ONE = "RankOne"
    PERTURB_IDENTITY = "PerturbIdentity"
    TWO_BY_TWO = "TwoByTwo"
    THREE_BY_THREE_TEMPLATE = "ThreeByThreeTemplate"
    SEARCH = "Search"


@dataclass(frozen=True)
class ApportionCertificate:
    """A transforming matrix, its inverse, the uniform image, and its modulus."""

    M: np.ndarray
    Minv: np.ndarray
    B: np.ndarray
    kappa: float
    theorem_tag: CertTag

    @property
    def order(self) -> int:
        return self.M.shape[0]

    def to_json(self) -> dict:
        def mat(x):
            return [[[z.real, z.imag] for z in row] for row in np.asarray(x, dtype=complex)]

        return {
            "order": self.order,
            "kappa": self.kappa,
            "theorem_tag": self.theorem_tag.value,
            "M": mat(self.M),
            "Minv": mat(self.Minv),
            "B": mat(self.B),
        }


def _residual_ok(B, M, A, tol: Tolerance) -> tuple[bool, float]:
    res = float(np.abs(B @ M - M @ A).max())
    n = M.shape[0]
    scale = n * max(1.0, float(np.abs(M).max()) * max(float(np.abs(A).max()),
                                                      float(np.abs(B).max())))
    return res <= tol.rel * scale + tol.abs, res


def _make_certificate(M, Minv, B, kappa, tag, A=None, tol: Tolerance = DEFAULT_TOL,
                      kappa_rtol=1e-9) -> ApportionCertificate:
    M = np.asarray(M, dtype=complex)
    Minv = np.asarray(Minv, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = M.shape[0]
    inv_err = float(np.abs(M @ Minv - np.eye(n)).max())
    if inv_err > n * INVERSE_PAIR_TOL:
        raise ConstructionError(f"inverse product check failed: {inv_err:.3e}")
    rep = is_uniform(B, tol)
    if not rep.is_uniform:
        raise ConstructionError(f"image is not uniform: defect {rep.defect:.3e}")
    if abs(rep.kappa - kappa) > kappa_rtol * max(1.0, abs(kappa)):
        raise ConstructionError(
            f"achieved modulus {rep.kappa!r} does not match requested {kappa!r}"
        )
    if A is not None:
        ok, res = _residual_ok(B, M, np.asarray(A, dtype=complex), tol)
        if not ok:
            raise ConstructionError(f"similarity residual too large: {res:.3e}")
    return ApportionCertificate(M=M, Minv=Minv, B=B, kappa=float(kappa), theorem_tag=tag)


def verify_certificate(cert: ApportionCertificate, A, tol: Tolerance = DEFAULT_TOL):
    """Re-check a certificate against the matrix it claims to apportion.

    Returns the UniformityReport of B; raises ConstructionError on any failure.
    """
    A = as_matrix(A, square=True, name="A")
    _make_certificate(cert.M, cert.Minv, cert.B, cert.kappa, cert.theorem_tag, A, tol)
    return is_uniform(cert.B, tol)


def reorder_certificate(cert: ApportionCertificate, Q: np.ndarray,
                         A=None) -> ApportionCertificate:
    """Conjugate by a permutation: a certificate for Q A Q^T becomes one for A."""
    return _make_certificate(cert.M @ Q, Q.T @ cert.Minv, cert.B, cert.kappa,
                             cert.theorem_tag, A)


def scale_certificate(cert: ApportionCertificate, mu: complex,
                      A=None) -> ApportionCertificate:
    """A certificate for A becomes one for mu*A; the same M works unchanged."""
    mu = complex(mu)
    if mu == 0:
        raise InvalidInputError("scale factor must be nonzero")
    return _make_certificate(cert.M, cert.Minv, mu * cert.B, abs(mu) * cert.kappa,
                             cert.theorem_tag, A)


def _coerce_spec(a) -> JordanSpec:
    """Raw entries must already be a Jordan arrangement (order preserved)."""
    if isinstance(a, JordanSpec):
        return a
    return input_ordered_spec(a)


def _canonical_permutation(spec: JordanSpec):
    def key(i):
        lam, size = spec.blocks[i]
        arg = cmath.phase(lam) % (2 * math.pi) if lam != 0 else 0.0
        return (-abs(lam), -size, arg)

    order = sorted(range(len(spec.blocks)), key=key)
    return block_permutation(spec, order)


# ---------------------------------------------------------------------------
# padding by a zero row/column
# ---------------------------------------------------------------------------

def pad_by_zero(cert: ApportionCertificate, A=None) -> ApportionCertificate:
    """Extend a certificate for A to one for A + [0] block, same modulus.

    The bordered transform N has closed-form inverse, so the padded M, its
    inverse, and the padded image are all assembled exactly from blocks of the
    original certificate.  When ``A`` is supplied the result is re-verified
    against A + [0].
    """
    n = cert.order
    om = _SIXTH
    M, Minv, B = cert.M, cert.Minv, cert.B

    Mp = np.zeros((n + 1, n + 1), dtype=complex)
    Mp[:n, :n] = M
    Mp[0, n] = -om
    Mp[n, :n] = om * M[0, :]
    Mp[n, n] = 1.0

    Minvp = np.zeros((n + 1, n + 1), dtype=complex)
    Minvp[:n, :n] = Minv
    Minvp[:n, 0] = Minv[:, 0] * om.conjugate()
    Minvp[:n, n] = Minv[:, 0]
    Minvp[n, 0] = -1.0
    Minvp[n, n] = om.conjugate()

    Bp = np.zeros((n + 1, n + 1), dtype=complex)
    Bp[:n, :n] = B
    Bp[:n, 0] = B[:, 0] * om.conjugate()
    Bp[:n, n] = B[:, 0]
    Bp[n, :n] = om * B[0, :]
    Bp[n, 0] = B[0, 0]
    Bp[n, n] = om * B[0, 0]

    Ap = None
    if A is not None:
        A = as_matrix(A, square=True, name="A")
        Ap = np.zeros((n + 1, n + 1), dtype=complex)
        Ap[:n, :n] = A
    return _make_certificate(Mp, Minvp, Bp, cert.kappa, CertTag.PAD_ZERO, Ap)


# ---------------------------------------------------------------------------
# nilpotent matrices
# ---------------------------------------------------------------------------

def _nilpotent_core(spec: JordanSpec, kappa: float) -> ApportionCertificate:
    """Apportion a nilpotent Jordan matrix whose blocks all have size >= 2.

    M = I + P D with P the cyclic shift and D a diagonal of unit-modulus
    phases stepping by pi/3, whose adjugate is the alternating geometric sum
    of powers of P D.  The raw image has common modulus 1/sqrt(3); a per-block
    geometric diagonal rescales it to the requested modulus.
    """
    n = spec.order
    angles = [(j - 1) * math.pi / 3 for j in range(1, n)]
    last = 2 * math.pi / 3 - math.pi * n - sum(angles)
    d = np.array([cmath.exp(1j * a) for a in angles] + [cmath.exp(1j * last)])
    P = np.zeros((n, n))
    for j in range(n):
        P[(j + 1) % n, j] = 1.0
    PD = P @ np.diag(d)
    M0 = np.eye(n, dtype=complex) + PD
    adj = np.eye(n, dtype=complex)
    power = np.eye(n, dtype=complex)
    for _ in range(n - 1):
        power = power @ (-PD)
        adj = adj + power
    det = 1.0 - _THIRD
    M0inv = adj / det
    A = build_jordan(spec)
    B0 = (M0 @ A) @ M0inv          # uniform, common modulus 1/sqrt(3)
    kappa0 = 1.0 / math.sqrt(3.0)
    factor = kappa0 / kappa
    svec = geometric_diagonal(spec, factor)
    M = M0 * svec[None, :]
    Minv = M0inv / svec[:, None]
    B = (kappa / kappa0) * B0
    return _make_certificate(M, Minv, B, kappa, CertTag.NILPOTENT, A)


def apportion_nilpotent(spec: JordanSpec, kappa: float) -> ApportionCertificate:
    """Apportion any nonzero nilpotent Jordan matrix at any modulus kappa > 0.

    Size-1 blocks are stripped, the core construction runs on the remaining
    blocks, the stripped blocks are re-attached by zero padding (modulus
    preserved at each step), and the result is permuted back to the input
    block order.
    """
    if not isinstance(spec, JordanSpec):
        spec = _coerce_spec(spec)
    if not spec.is_nilpotent():
        raise InvalidInputError("spectrum must be exactly zero")
    if not (isinstance(kappa, (int, float)) and kappa > 0):
        raise InvalidInputError("kappa must be a positive real")
    kappa = float(kappa)
    if spec.is_zero_matrix():
        raise ConstantNotAchievableError(
            "the zero matrix is already uniform and admits only kappa = 0",
            constants=ConstantSet.zero_only(),
        )
    big = [i for i, (_, s) in enumerate(spec.blocks) if s >= 2]
    ones = [i for i, (_, s) in enumerate(spec.blocks) if s == 1]
    perm_spec, Q = block_permutation(spec, big + ones)
    core = JordanSpec(perm_spec.blocks[: len(big)])
    cert = _nilpotent_core(core, kappa)
    A_run = build_jordan(core)
    for _ in ones:
        cert = pad_by_zero(cert, A=A_run)
        grown = np.zeros((A_run.shape[0] + 1, A_run.shape[0] + 1), dtype=complex)
        grown[: A_run.shape[0], : A_run.shape[0]] = A_run
        A_run = grown
    cert = reorder_certificate(cert, Q, A=build_jordan(spec))
    return ApportionCertificate(cert.M, cert.Minv, cert.B, cert.kappa, CertTag.NILPOTENT)


# ---------------------------------------------------------------------------
# identity plus zero block of equal size
# ---------------------------------------------------------------------------

def _split_vector(n2: int, cut: int, hi: complex, lo: complex) -> np.ndarray:
    """Vector with ``lo`` in entries below ``cut`` (0-based) and ``hi`` from it on."""
    v = np.empty(n2, dtype=complex)
    v[:cut] = lo
    v[cut:] = hi
    return v


def apportion_I_oplus_O(n: int, kappa: float) -> ApportionCertificate:
    """Certificate for I_n + O_n (order 2n) at any kappa >= 1/2.

    Columns u_k split at position 2k between -conj(zeta) and zeta with
    Re(zeta) = 1/2, |zeta| = kappa; rows v_k are the adjacent differences
    e_{2k} - e_{2k-1}.  Their outer-product sum is the uniform image.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidInputError("n must be a positive integer")
    kappa = float(kappa)
    if kappa < 0.5:
        raise ConstantNotAchievableError(
            f"kappa = {kappa!r} is below 1/2; achievable constants are [1/2, inf)",
            constants=ConstantSet.closed_half_line(0.5),
        )
    zeta = 0.5 + 1j * math.sqrt(max(0.0, kappa * kappa - 0.25))
    N = 2 * n
    U = np.empty((N, n), dtype=complex)
    V = np.zeros((n, N), dtype=complex)
    for k in range(1, n + 1):
        U[:, k - 1] = _split_vector(N, 2 * k - 1, zeta, -zeta.conjugate())
        V[k - 1, 2 * k - 1] = 1.0
        V[k - 1, 2 * k - 2] = -1.0
    pair = complete_inverse_pair(U, V)
    B = U @ V
    A = np.zeros((N, N), dtype=complex)
    A[:n, :n] = np.eye(n)
    return _make_certificate(pair.M, pair.Minv, B, kappa, CertTag.I_OPLUS_O, A)


# ---------------------------------------------------------------------------
# rank at most half the order
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfRankPlan:
    """Ingredients of the half-rank construction, for one sorted Jordan input.

    ``zetas``/``gammas`` are keyed by 1-based index k over the first r
    positions with nonzero (rescaled) eigenvalue; ``us`` holds all 2r columns
    (the hatted difference vectors occupy columns r+1..2r), ``vs`` the first r
    inverse rows.  ``phi`` maps each column index of the Jordan matrix to the
    column of ``us`` that carries it; restricted to ``omega_set`` it is the
    order-preserving enumeration onto 1..r.
    """

    zetas: dict[int, complex]
    gammas: dict[int, complex]
    us: np.ndarray
    vs: np.ndarray
    omega_set: tuple[int, ...]
    phi: tuple[int, ...]


def _half_rank_plan_sorted(spec: JordanSpec, kappa: float) -> HalfRankPlan:
    N = spec.order
    r = spec.rank
    if 2 * r != N:
        raise InvalidInputError("internal: plan needs rank exactly half the order")
    mu = spec.diagonal / kappa
    alphas = spec.alphas
    if np.any(np.abs(mu) >= 2.0):
        raise ConstantNotAchievableError(
            "kappa must exceed half the spectral radius",
            constants=ConstantSet.open_half_line(spec.spectral_radius / 2.0, exact=False),
        )
    us = np.empty((N, N), dtype=complex)
    vs = np.zeros((r, N), dtype=complex)
    zetas: dict[int, complex] = {}
    gammas: dict[int, complex] = {}
    for k in range(1, r + 1):
        m = mu[k - 1]
        if m != 0:
            am = abs(m)
            zeta = am / 2.0 + 1j * math.sqrt(4.0 - am * am) / 2.0
            gamma = ((zeta.conjugate() ** 2 - 1.0) * m) ** k
            zetas[k] = zeta
            gammas[k] = gamma
            us[:, k - 1] = _split_vector(N, 2 * k - 1, zeta, -zeta.conjugate()) / (gamma * am)
            vs[k - 1, 2 * k - 1] = gamma
            vs[k - 1, 2 * k - 2] = -gamma
        else:
            us[:, k - 1] = _split_vector(N, 2 * k - 1, _SIXTH,
                                         -cmath.exp(5j * math.pi / 3))
            vs[k - 1, 2 * k - 1] = 1.0
            vs[k - 1, 2 * k - 2] = -1.0
    for k in range(1, r + 1):
        us[:, r + k - 1] = _split_vector(N, 2 * k, 1.0, -1.0)
    omega = [1] + [
        ell for ell in range(2, N + 1)
        if mu[ell - 1] != 0 or (ell >= 2 and alphas[ell - 2] == 1)
    ]
    if len(omega) != r:
        raise InvalidInputError("internal: nonzero-column count differs from rank")
    phi = [0] * N
    for j, k in enumerate(omega, start=1):
        phi[k - 1] = j
    nxt = r + 1
    for k in range(1, N + 1):
        if phi[k - 1] == 0:
            phi[k - 1] = nxt
            nxt += 1
    return HalfRankPlan(zetas=zetas, gammas=gammas, us=us, vs=vs,
                        omega_set=tuple(omega), phi=tuple(phi))


def half_rank_plan(spec: JordanSpec, kappa: float) -> HalfRankPlan:
    """Plan for the canonically sorted version of ``spec`` (rank = order/2)."""
    sorted_spec, _ = _canonical_permutation(spec)
    return _half_rank_plan_sorted(sorted_spec, float(kappa))


def _half_rank_exact(spec: JordanSpec, kappa: float) -> ApportionCertificate:
    """Construction at rank exactly half the order (any block order)."""
    sorted_spec, Q = _canonical_permutation(spec)
    N = sorted_spec.order
    r = sorted_spec.rank
    plan = _half_rank_plan_sorted(sorted_spec, kappa)
    mu = sorted_spec.diagonal / kappa
    alphas = sorted_spec.alphas
    phi = plan.phi
    C = np.zeros((N, N), dtype=complex)
    for k in plan.omega_set:
        if mu[k - 1] != 0:
            C += mu[k - 1] * np.outer(plan.us[:, phi[k - 1] - 1], plan.vs[phi[k - 1] - 1])
    for k in range(2, N + 1):
        if alphas[k - 2] == 1:
            C += np.outer(plan.us[:, phi[k - 2] - 1], plan.vs[phi[k - 1] - 1])
    B = kappa * C
    P = np.zeros((N, N))
    for j in range(1, N + 1):
        P[phi[j - 1] - 1, j - 1] = 1.0
    M0 = plan.us
    bottom = np.linalg.solve(M0.T, np.eye(N, dtype=complex)[:, r:]).T
    M0inv = np.vstack([plan.vs, bottom])
    svec = geometric_diagonal(sorted_spec, 1.0 / kappa)
    M = (M0 @ P) * svec[None, :]
    Minv = (P.T @ M0inv) / svec[:, None]
    cert = _make_certificate(M, Minv, B, kappa, CertTag.HALF_RANK,
                             build_jordan(sorted_spec))
    return reorder_certificate(cert, Q, A=build_jordan(spec))


def apportion_half_rank(A_or_spec: Union[JordanSpec, np.ndarray],
                        kappa: float) -> ApportionCertificate:
    """Apportion a matrix of rank at most half its order at any kappa above
    half the spectral radius (strict).

    Nilpotent input is delegated to the nilpotent construction.  When the rank
    is strictly below half the order, zero 1-blocks are peeled off until rank
    equals half the order, the exact construction runs, and the peeled blocks
    are re-attached by zero padding.
    """
    spec = _coerce_spec(A_or_spec)
    kappa = float(kappa)
    if spec.is_nilpotent():
        return apportion_nilpotent(spec, kappa)
    n, r = spec.order, spec.rank
    if 2 * r > n:
        raise InvalidInputError(
            f"rank {r} exceeds half the order {n}; this construction does not apply"
        )
    rho = spec.spectral_radius
    if not kappa > rho / 2.0:
        raise ConstantNotAchievableError(
            f"kappa = {kappa!r} is not strictly above half the spectral radius "
            f"{rho / 2.0!r}; only the open half-line is guaranteed",
            constants=ConstantSet.open_half_line(rho / 2.0, exact=False),
        )
    m = n - 2 * r
    if m == 0:
        return _half_rank_exact(spec, kappa)
    zero_ones = [i for i, (lam, s) in enumerate(spec.blocks) if lam == 0 and s == 1]
    if len(zero_ones) < m:
        raise InvalidInputError("internal: not enough zero 1-blocks to peel")
    peel = zero_ones[-m:]
    keep = [i for i in range(len(spec.blocks)) if i not in peel]
    perm_spec, Q = block_permutation(spec, keep + peel)
    core = JordanSpec(perm_spec.blocks[: len(keep)])
    cert = _half_rank_exact(core, kappa)
    A_run = build_jordan(core)
    for _ in range(m):
        cert = pad_by_zero(cert, A=A_run)
        grown = np.zeros((A_run.shape[0] + 1, A_run.shape[0] + 1), dtype=complex)
        grown[: A_run.shape[0], : A_run.shape[0]] = A_run
        A_run = grown
    cert = reorder_certificate(cert, Q, A=build_jordan(spec))
    return ApportionCertificate(cert.M, cert.Minv, cert.B, cert.kappa, CertTag.HALF_RANK)


def apportion_A_oplus_zeros(A_or_spec: Union[JordanSpec, np.ndarray],
                            kappa: float) -> tuple[ApportionCertificate, int]:
    """Pad A (rank r >= order/2) with zeros up to order 2r and apportion.

    Returns the certificate together with the padding count m = 2r - n, an
    upper-bound witness for the least number of zero rows/columns that make
    the matrix apportionable.
    """
    spec = _coerce_spec(A_or_spec)
    n, r = spec.order, spec.rank
    if 2 * r < n:
        raise InvalidInputError("rank below half the order: no padding is needed")
    m = 2 * r - n
    padded = JordanSpec(spec.blocks + ((0j, 1),) * m)
    return apportion_half_rank(padded, float(kappa)), m


# ---------------------------------------------------------------------------
# rank one
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpiralSolution:
    """Angles theta_j with r * sum_j exp(i theta_j) = 1."""

    rho: float
    alpha: float
    thetas: tuple[float, ...]


def _phase_sum(n: int, theta: float) -> complex:
    return sum(cmath.exp(1j * j * theta) for j in range(1, n + 1))


def spiral_sum(n: int, r: float) -> SpiralSolution:
    """Find theta_1..theta_n with r * sum exp(i theta_j) = 1 for r >= 1/n.

    The modulus f(theta) = |sum_j exp(i j theta)| falls from n at 0 to 0 at
    2 pi / n; the first crossing of 1/r is bracketed by a scan and pinned by
    bisection, then all angles are rotated so the sum lands on the real axis.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidInputError("n must be an integer >= 2")
    r = float(r)
    if r < 1.0 / n:
        raise InvalidInputError(
            f"r = {r!r} is infeasible: the sum of {n} unit phasors cannot reach 1/r"
        )
    y = 1.0 / r
    upper = 2.0 * math.pi / n

    def g(theta: float) -> float:
        return abs(_phase_sum(n, theta)) - y

    if g(0.0) <= 0.0:
        rho = 0.0
    else:
        scan = 1024
        lo_t, hi_t = 0.0, upper
        for k in range(1, scan + 1):
            t = upper * k / scan
            if g(t) <= 0.0:
                lo_t, hi_t = upper * (k - 1) / scan, t
                break
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            if mid == lo_t or mid == hi_t:
                break
            if g(mid) <= 0.0:
                hi_t = mid
            else:
                lo_t = mid
        rho = hi_t if abs(g(hi_t)) <= abs(g(lo_t)) else lo_t
    total = _phase_sum(n, rho)
    if abs(abs(total) - y) > 1e-12 * max(1.0, y):
        raise ConstructionError(f"bisection failed to pin the crossing at r = {r!r}")
    alpha = cmath.phase(total)
    thetas = tuple(j * rho - alpha for j in range(1, n + 1))
    check = r * sum(cmath.exp(1j * t) for t in thetas)
    if abs(check - 1.0) > 1e-10:
        raise ConstructionError("phase-sum identity check failed")
    return SpiralSolution(rho=rho, alpha=alpha, thetas=thetas)


def apportion_rank_one(lam: complex, n: int, kappa: float) -> ApportionCertificate:
    """Certificate for diag(lam, 0, ..., 0) of order n at any kappa >= |lam|/n.

    The image is lam * u v^T with u all ones and v of constant modulus
    kappa/|lam|, phased so that v^T u = 1.
    """
    lam = complex(lam)
    if lam == 0:
        raise InvalidInputError("lam must be nonzero; zero spectrum is a nilpotent case")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidInputError("n must be a positive integer")
    kappa = float(kappa)
    target_set = ConstantSet.closed_half_line(abs(lam) / n, lower_bound=abs(lam) / n)
    if n == 1:
        if abs(kappa - abs(lam)) > 1e-12 * max(1.0, abs(lam)):
            raise ConstantNotAchievableError(
                "a 1x1 matrix is similar only to itself; kappa must equal |lam|",
                constants=ConstantSet.finite([abs(lam)]),
            )
        A = np.array([[lam]])
        return _make_certificate(np.eye(1), np.eye(1), A, abs(lam), CertTag.RANK_ONE, A)
    lo = abs(lam) / n
    if kappa < lo * (1.0 - _ZERO_RTOL):
        raise ConstantNotAchievableError(
            f"kappa = {kappa!r} is below the minimum |lam|/n = {lo!r}",
            constants=target_set,
        )
    r = max(kappa, lo) / abs(lam)
    sol = spiral_sum(n, max(r, 1.0 / n))
    u = np.ones((n, 1), dtype=complex)
    vraw = r * np.exp(1j * np.array(sol.thetas))
    v = (vraw / vraw.sum()).reshape(1, n)       # exact v^T u = 1
    pair = complete_inverse_pair(u, v)
    B = lam * (u @ v)
    A = np.zeros((n, n), dtype=complex)
    A[0, 0] = lam
    return _make_certificate(pair.M, pair.Minv, B, kappa, CertTag.RANK_ONE, A)


# ---------------------------------------------------------------------------
# rank-one perturbations of the identity
# ---------------------------------------------------------------------------

RE_CONDITION_ATOL = 1e-9


def perturb_identity_constants(n: int, lam: complex) -> Optional[ConstantSet]:
    """Constant set of I_(n-1) + [lam] for n >= 3, or None when Re(lam) != 1 - n/2.

    For even n with real lam the set is the closed half-line from 1/2;
    otherwise it is the finite family sqrt(Im(lam)^2/(n-2s)^2 + 1/4) over
    s = 0 .. floor((n-1)/2).
    """
    lam = complex(lam)
    if abs(lam.real - (1.0 - n / 2.0)) > RE_CONDITION_ATOL:
        return None
    im = lam.imag
    tb = math.hypot(n / 2.0, im) / n          # |trace| / n, the sharp floor
    if n % 2 == 0 and abs(im) <= RE_CONDITION_ATOL:
        return ConstantSet.closed_half_line(0.5, lower_bound=0.5)
    values = sorted({math.sqrt(im * im / (n - 2 * s) ** 2 + 0.25)
                     for s in range(0, (n - 1) // 2 + 1)})
    return ConstantSet.finite(values, lower_bound=tb)


def _i_oplus_lam(n: int, lam: complex) -> np.ndarray:
    A = np.eye(n, dtype=complex)
    A[n - 1, n - 1] = lam
    return A


def _dft_matrix(n: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * j * k / n) / math.sqrt(n)


def apportion_perturb_identity(
    n: int, lam: complex, target: Optional[float] = None
) -> Union[ApportionCertificate, ClassificationReport]:
    """Apportion I_(n-1) + [lam] (n >= 3) when Re(lam) = 1 - n/2.

    Without a target the unitary Fourier transform is the certificate, with
    diagonal entries 1/2 + (Im(lam)/n) i.  With a target it is validated
    against the constant set and realized by the bordered anti-identity whose
    last column holds the two conjugate diagonal values.  When Re(lam) misses
    1 - n/2 the refusal is returned as a NotApportionable report, not raised.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 3):
        raise InvalidInputError("this construction needs order n >= 3")
    lam = complex(lam)
    constants = perturb_identity_constants(n, lam)
    if constants is None:
        return ClassificationReport(
            verdict=Verdict.NOT_APPORTIONABLE,
            constants=ConstantSet.empty(),
            theorem_tag="perturb-identity",
        )
    A = _i_oplus_lam(n, lam)
    if target is None:
        F = _dft_matrix(n)
        f = F[:, n - 1]
        B = np.eye(n, dtype=complex) - (n / 2.0 - 1j * lam.imag) * np.outer(f, f.conjugate())
        kappa = math.hypot(0.5, lam.imag / n)
        return _make_certificate(F, F.conj().T, B, kappa, CertTag.PERTURB_IDENTITY, A)

    t = float(target)
    if constants.contains(t) is not True:
        raise ConstantNotAchievableError(
            f"kappa = {t!r} is not an achievable constant; K = {constants.describe()}",
            constants=constants,
        )
    im = lam.imag
    if constants.shape.value == "finite":
        # snap to the exact member and recover its index s
        t = min(constants.values, key=lambda v: abs(v - t))
        q = math.sqrt(max(0.0, t * t - 0.25))
        if q == 0.0:
            r_plus = n // 2
        else:
            s = round((n - im / q) / 2.0)
            if not 0 <= s <= n:
                raise ConstructionError("diagonal sign count out of range")
            r_plus = s
    else:
        t = max(t, 0.5)
        q = math.sqrt(max(0.0, t * t - 0.25))
        r_plus = n // 2
    q = math.sqrt(max(0.0, t * t - 0.25))
    w_hi = (0.5 + 1j * q) / (1.0 - lam)
    w_lo = (0.5 - 1j * q) / (1.0 - lam)
    w = np.array([w_hi] * r_plus + [w_lo] * (n - r_plus))
    if abs(w.sum() - 1.0) > 1e-9:
        raise ConstructionError("column sum check failed; target/spectrum mismatch")
    M = np.zeros((n, n), dtype=complex)
    M[0, : n - 1] = -1.0
    for i in range(1, n):
        M[i, n - 1 - i] = 1.0
    M[:, n - 1] = w
    Minv = np.linalg.solve(M, np.eye(n, dtype=complex))
    B = np.eye(n, dtype=complex) - (1.0 - lam) * np.outer(w, np.ones(n))
    return _make_certificate(M, Minv, B, t, CertTag.PERTURB_IDENTITY, A)


# ---------------------------------------------------------------------------
# order 2 with distinct nonzero eigenvalues
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoByTwoPlan:
    """Entries of the unit-determinant transform for the 2x2 construction."""

    gamma: complex
    omega: complex
    b: complex
    a: complex
    c: complex
    d: complex


def _gamma_is_zero(l1: complex, l2: complex) -> bool:
    return abs(l1 + l2) <= _ZERO_RTOL * max(abs(l1), abs(l2))


def _gamma_fourth_power(gamma: complex) -> float:
    """|gamma|^4, clamped to exactly 1 inside float noise.

    Pure-imaginary eigenvalue ratios sit exactly on |gamma| = 1; evaluation
    noise must not push them across the achievability boundary.
    """
    g4 = abs(gamma) ** 4
    return 1.0 if abs(g4 - 1.0) <= 4e-12 else g4


def _strictly_inside(gamma: complex, g4: float) -> bool:
    """Re(gamma^2) < |gamma|^4 with a noise margin on the strict inequality.

    Equality is the non-achievable boundary; deciding it from float noise
    would hand out certificates with unbounded entries, so a thin margin
    (far above evaluation noise, far below any honest gap) is excluded too.
    """
    margin = 1e-12 * max(1.0, g4)
    return (gamma * gamma).real < g4 - margin and g4 <= 1.0


def two_by_two_constants(l1: complex, l2: complex) -> Optional[ConstantSet]:
    """Constant set of diag(l1, l2) (distinct, nonzero), or None if empty.

    Achievability holds exactly when gamma = (l2+l1)/(l2-l1) vanishes or
    Re(gamma^2) < |gamma|^4 <= 1; the set is a closed half-line from
    rho/sqrt(2) when gamma = 0 and a singleton otherwise.
    """
    l1, l2 = complex(l1), complex(l2)
    if l1 == 0 or l2 == 0 or l1 == l2:
        raise InvalidInputError("needs distinct nonzero eigenvalues")
    tb = abs(l1 + l2) / 2.0
    hb = math.sqrt(abs(l1 * l2) / 2.0)
    bound = max(tb, hb)
    if _gamma_is_zero(l1, l2):
        rho = max(abs(l1), abs(l2))
        return ConstantSet.closed_half_line(rho / math.sqrt(2.0), lower_bound=bound)
    gamma = (l2 + l1) / (l2 - l1)
    g4 = _gamma_fourth_power(gamma)
    if _strictly_inside(gamma, g4):
        if g4 == 1.0:
            value = abs((l1 + l2) / 2.0)
        else:
            value = abs((l1 + l2) / 2.0) * math.sqrt(
                1.0 + (1.0 - g4) / (2.0 * (g4 - (gamma * gamma).real))
            )
        return ConstantSet.finite([value], lower_bound=bound)
    return None


def two_by_two_plan(l1: complex, l2: complex,
                    kappa: Optional[float] = None) -> TwoByTwoPlan:
    """Transform entries achieving the (validated) modulus for diag(l1, l2)."""
    l1, l2 = complex(l1), complex(l2)
    constants = two_by_two_constants(l1, l2)
    if constants is None:
        raise InvalidInputError("diag(l1, l2) is not apportionable")
    gamma = 0j if _gamma_is_zero(l1, l2) else (l2 + l1) / (l2 - l1)
    if gamma == 0:
        rho = max(abs(l1), abs(l2))
        lo = rho / math.sqrt(2.0)
        kappa = lo if kappa is None else float(kappa)
        if kappa < lo * (1.0 - _ZERO_RTOL):
            raise ConstantNotAchievableError(
                f"kappa = {kappa!r} is below the minimum {lo!r}", constants=constants
            )
        ratio2 = (max(kappa, lo) / rho) ** 2
        omega = math.sqrt(0.5 * ratio2 + 0.25) + 1j * math.sqrt(max(0.0, 0.5 * ratio2 - 0.25))
    else:
        value = constants.values[0]
        if kappa is not None and abs(float(kappa) - value) > 1e-9 * max(1.0, value):
            raise ConstantNotAchievableError(
                f"kappa = {kappa!r} is not the unique constant {value!r}",
                constants=constants,
            )
        g4 = _gamma_fourth_power(gamma)
        if g4 == 1.0:
            omega = 0j
        else:
            omega = gamma * math.sqrt(
                (1.0 - g4) / (2.0 * (g4 - (gamma * gamma).real))) * 1j
    b = cmath.sqrt((omega * omega - 1.0) / 4.0)
    if abs(b) <= 1e-12 * max(1.0, abs(omega)):
        raise ConstructionError("degenerate transform: omega^2 = 1 should be unreachable")
    c = (omega - 1.0) / (2.0 * b)
    d = (omega + 1.0) / 2.0
    return TwoByTwoPlan(gamma=gamma, omega=omega, b=b, a=1.0 + 0j, c=c, d=d)


def apportion_2x2(l1: complex, l2: complex,
                  target: Optional[float] = None) -> ClassificationReport:
    """Classify diag(l1, l2) with distinct nonzero eigenvalues and, when
    apportionable, attach a certificate at ``target`` (default: the smallest
    achievable constant)."""
    l1, l2 = complex(l1), complex(l2)
    constants = two_by_two_constants(l1, l2)
    if constants is None:
        return ClassificationReport(
            verdict=Verdict.NOT_APPORTIONABLE,
            constants=ConstantSet.empty(),
            theorem_tag="two-by-two",
        )
    kappa = constants.smallest_member() if target is None else float(target)
    plan = two_by_two_plan(l1, l2, kappa)
    gamma, omega, b = plan.gamma, plan.omega, plan.b
    M = np.array([[plan.a, b], [plan.c, plan.d]])
    # the determinant is 1 by construction; dividing the adjugate by its
    # computed value keeps M @ Minv at the exact identity in floats
    det = plan.a * plan.d - b * plan.c
    Minv = np.array([[plan.d, -b], [-plan.c, plan.a]]) / det
    B = (l2 - l1) * np.array([[(gamma - omega) / 2.0, b], [-b, (gamma + omega) / 2.0]])
    A = np.diag([l1, l2])
    kappa_built = float(np.abs(B).mean())
    cert = _make_certificate(M, Minv, B, kappa_built, CertTag.TWO_BY_TWO, A)
    return ClassificationReport(
        verdict=Verdict.APPORTIONABLE,
        constants=constants,
        theorem_tag="two-by-two",
        certificate=cert,
    )


def polar_condition_2x2(l1: complex, l2: complex) -> bool:
    """Polar form of the 2x2 achievability test for nonzero eigenvalues.

    True when l1 = -l2, when l1 is a real multiple of i*l2, or when the angle
    theta between them lies in (pi/2, 3pi/2) with |r cos(theta) + 1| <
    |sin(theta)| for the modulus ratio r.
    """
    l1, l2 = complex(l1), complex(l2)
    if l1 == 0 or l2 == 0:
        raise InvalidInputError("eigenvalues must be nonzero")
    if abs(l1 + l2) <= _ZERO_RTOL * max(abs(l1), abs(l2)):
        return True
    if abs((l1 * l2.conjugate()).real) <= _ZERO_RTOL * abs(l1) * abs(l2):
        return True
    r = abs(l2) / abs(l1)
    theta = (cmath.phase(l2) - cmath.phase(l1)) % (2.0 * math.pi)
    if not (math.pi / 2.0 < theta < 3.0 * math.pi / 2.0):
        return False
    return abs(r * math.cos(theta) + 1.0) < abs(math.sin(theta))


# ---------------------------------------------------------------------------
# the two explicit 3x3 families
# ---------------------------------------------------------------------------

class TemplateKind(str, enum.Enum):
    #: size-2 block with eigenvalue lam, plus a zero: modulus |lam|
    LAMBDA_J2_PLUS_ZERO = "LambdaJ2PlusZero"
    #: eigenvalue lam plus a size-2 nilpotent block: modulus |lam|/sqrt(3)
    LAMBDA_PLUS_N2 = "LambdaPlusN2"


def apportion_3x3_template(kind: TemplateKind, lam: complex) -> ApportionCertificate:
    """Fixed 3x3 transforms for the two explicitly solved singular families."""
    kind = TemplateKind(kind)
    lam = complex(lam)
    if lam == 0:
        spec = (JordanSpec(((0j, 2), (0j, 1))) if kind is TemplateKind.LAMBDA_J2_PLUS_ZERO
                else JordanSpec(((0j, 1), (0j, 2))))
        return apportion_nilpotent(spec, 1.0)
    w3, w6 = _THIRD, _SIXTH
    if kind is TemplateKind.LAMBDA_J2_PLUS_ZERO:
        A = np.array([[lam, 1, 0], [0, lam, 0], [0, 0, 0]], dtype=complex)
        M = np.array([[0, 1, 1], [w3, 0, 1], [1, 0, 0]], dtype=complex) @ np.diag([lam, 1, 1])
        Minv = np.diag([1 / lam, 1, 1]) @ np.array(
            [[0, 0, 1], [1, -1, w3], [0, 1, -w3]], dtype=complex
        )
        B = lam * np.array([[1, -1, w3], [w3, -w3, -1], [1, -1, 1 + w3]], dtype=complex)
        kappa = abs(lam)
    else:
        A = np.array([[lam, 0, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
        M = np.array([[0, 1, w3], [1, 0, w6], [1, 1, 0]], dtype=complex) @ np.diag([1, lam, 1])
        Minv = (1.0 / (1.0 + w6)) * np.diag([1, 1 / lam, 1]) @ np.array(
            [[-1, w6, 1], [1, -w6, w6],
             [w6.conjugate(), w6.conjugate(), -w6.conjugate()]], dtype=complex
        )
        # equals conj(w6) * (lam/(1+w6)) [[1,1,-1],[-w6,w3,w6],[1-w6,1+w3,w6-1]]
        B = (M @ A) @ Minv
        kappa = abs(lam) / math.sqrt(3.0)
    return _make_certificate(M, Minv, B, kappa, CertTag.THREE_BY_THREE_TEMPLATE, A)
