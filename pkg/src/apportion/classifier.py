"""Classification of matrices by apportionability.

``classify`` dispatches a JordanSpec (any order) or raw entries (order <= 3)
through the covered matrix classes, returning a verdict, a constant-set
description, and a certificate builder tag.  Orders 2 and 3 are resolved
completely up to the families that remain open; the admissible-eigenvalue
region for order 2 can be sampled and rendered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .constructors import (
    ApportionCertificate,
    CertTag,
    TemplateKind,
    apportion_2x2,
    apportion_3x3_template,
    apportion_half_rank,
    apportion_nilpotent,
    apportion_perturb_identity,
    apportion_rank_one,
    pad_by_zero,
    perturb_identity_constants,
    polar_condition_2x2,
    reorder_certificate,
    scale_certificate,
    two_by_two_constants,
)
from .core import as_matrix
from .errors import ConstantNotAchievableError, InvalidInputError, UnsupportedOrderError
from .jordan import (
    JordanSpec,
    block_permutation,
    build_jordan,
    eigenstructure_small,
    input_ordered_spec,
)
from .reports import ClassificationReport, ConstantSet, Verdict

__all__ = [
    "classify",
    "constant_set",
    "request_certificate",
    "RegionSample",
    "admissible_region",
    "region_to_csv",
    "region_to_svg",
]

MatrixLike = Union[JordanSpec, np.ndarray, list]


def _spec_bounds(spec: JordanSpec) -> float:
    """max(trace bound, determinant bound), computed exactly from the blocks."""
    n = spec.order
    tr = sum(lam * size for lam, size in spec.blocks)
    trace_bound = abs(tr) / n
    if any(lam == 0 for lam, _ in spec.blocks):
        det_bound = 0.0
    else:
        logdet = sum(size * math.log(abs(lam)) for lam, size in spec.blocks)
        det_bound = math.exp(logdet / n) / math.sqrt(n)
    return max(trace_bound, det_bound)


def _coerce(input_matrix: MatrixLike) -> tuple[JordanSpec, bool]:
    if isinstance(input_matrix, JordanSpec):
        return input_matrix, False
    M = as_matrix(input_matrix, square=True, name="A")
    if M.shape[0] > 3:
        raise UnsupportedOrderError(
            "raw-entry classification is limited to order 3; supply a JordanSpec"
        )
    result = eigenstructure_small(M)
    return result.spec, result.approximate


def _scalar_eigenvalue(spec: JordanSpec) -> Optional[complex]:
    """The eigenvalue when the blocks describe lam * I, else None."""
    lams = {lam for lam, _ in spec.blocks}
    if len(lams) == 1 and all(size == 1 for _, size in spec.blocks):
        return next(iter(lams))
    return None


def _perturb_shape(spec: JordanSpec) -> Optional[tuple[complex, complex, bool]]:
    """Detect mu * (rank-one perturbation of I): n-1 blocks share an eigenvalue.

    Returns (mu, other eigenvalue, has_size2_block) or None.  ``other`` is the
    odd eigenvalue out for the diagonalizable shape; for the one-size-2-block
    shape it equals mu.
    """
    n = spec.order
    if n < 3:
        return None
    counts: dict[complex, int] = {}
    for lam, _ in spec.blocks:
        counts[lam] = counts.get(lam, 0) + 1
    for mu, cnt in counts.items():
        if mu == 0 or cnt != n - 1:
            continue
        sizes = sorted(size for lam, size in spec.blocks if lam == mu)
        if len(spec.blocks) == n - 1:
            # all blocks share mu: sizes must be 1,...,1,2
            if sizes == [1] * (n - 2) + [2]:
                return mu, mu, True
        elif len(spec.blocks) == n:
            if sizes != [1] * (n - 1):
                continue
            other = next(lam for lam, _ in spec.blocks if lam != mu)
            return mu, other, False
    return None


def classify(input_matrix: MatrixLike) -> ClassificationReport:
    """Verdict, constant set, and certificate availability for a matrix.

    Raw entries are accepted up to order 3 (the Jordan structure is recovered
    by closed-form eigenvalues and rank tests, and near-degenerate spectra are
    flagged approximate); larger inputs must arrive as a JordanSpec.
    """
    spec, approximate = _coerce(input_matrix)
    report = _classify_spec(spec)
    if approximate:
        return ClassificationReport(
            verdict=report.verdict,
            constants=report.constants,
            theorem_tag=report.theorem_tag,
            certificate=report.certificate,
            approximate_eigen=True,
        )
    return report


def _classify_spec(spec: JordanSpec) -> ClassificationReport:
    n = spec.order

    if spec.is_zero_matrix():
        return ClassificationReport(Verdict.APPORTIONABLE, ConstantSet.zero_only(),
                                    "zero-matrix")
    if n == 1:
        lam = spec.blocks[0][0]
        return ClassificationReport(Verdict.APPORTIONABLE,
                                    ConstantSet.finite([abs(lam)]), "order-one")
    scalar = _scalar_eigenvalue(spec)
    if scalar is not None and scalar != 0:
        return ClassificationReport(Verdict.NOT_APPORTIONABLE, ConstantSet.empty(),
                                    "scalar-matrix")
    if spec.is_nilpotent():
        return ClassificationReport(Verdict.APPORTIONABLE,
                                    ConstantSet.open_half_line(0.0), "nilpotent")
    rho = spec.spectral_radius
    if spec.rank == 1:
        return ClassificationReport(Verdict.APPORTIONABLE,
                                    ConstantSet.closed_half_line(rho / n,
                                                                lower_bound=rho / n),
                                    "rank-one")
    if 2 * spec.rank <= n:
        return ClassificationReport(
            Verdict.APPORTIONABLE,
            ConstantSet.open_half_line(rho / 2.0, exact=False,
                                       lower_bound=_spec_bounds(spec)),
            "half-rank",
        )
    perturb = _perturb_shape(spec)
    if perturb is not None:
        mu, other, has_j2 = perturb
        if has_j2:
            return ClassificationReport(Verdict.NOT_APPORTIONABLE, ConstantSet.empty(),
                                        "perturb-identity")
        constants = perturb_identity_constants(n, other / mu)
        if constants is None:
            return ClassificationReport(Verdict.NOT_APPORTIONABLE, ConstantSet.empty(),
                                        "perturb-identity")
        return ClassificationReport(Verdict.APPORTIONABLE, constants.scaled(abs(mu)),
                                    "perturb-identity")
    if n == 2:
        return _classify_2x2(spec)
    if n == 3:
        return _classify_3x3(spec)
    return ClassificationReport(Verdict.UNKNOWN, ConstantSet.unknown(_spec_bounds(spec)),
                                "order-not-covered")


def _classify_2x2(spec: JordanSpec) -> ClassificationReport:
    blocks = spec.blocks
    if len(blocks) == 1:
        # one 2x2 block with nonzero eigenvalue: repeated eigenvalue, unresolvable
        return ClassificationReport(Verdict.NOT_APPORTIONABLE, ConstantSet.empty(),
                                    "repeated-eigenvalue")
    l1, l2 = blocks[0][0], blocks[1][0]
    return apportion_2x2(l1, l2)


def _classify_3x3(spec: JordanSpec) -> ClassificationReport:
    by_size = sorted(spec.blocks, key=lambda b: -b[1])
    sizes = tuple(size for _, size in by_size)
    lams = tuple(lam for lam, _ in by_size)
    bound = _spec_bounds(spec)

    if sizes == (2, 1):
        big, small = lams
        if big != 0 and small == 0:
            return ClassificationReport(
                Verdict.APPORTIONABLE,
                ConstantSet.finite([abs(big)], exact=False, lower_bound=bound),
                "3x3-template-j2-plus-zero",
            )
        if big == 0 and small != 0:
            return ClassificationReport(
                Verdict.APPORTIONABLE,
                ConstantSet.finite([abs(small) / math.sqrt(3.0)], exact=False,
                                   lower_bound=bound),
                "3x3-template-plus-nilpotent",
            )
        # distinct nonzero eigenvalues across a size-2 block: open family
        return ClassificationReport(Verdict.UNKNOWN, ConstantSet.unknown(bound),
                                    "open-3x3")
    if sizes == (1, 1, 1):
        nonzero = [lam for lam in lams if lam != 0]
        if len(nonzero) == 2:
            l1, l2 = nonzero
            base = two_by_two_constants(l1, l2)
            if base is not None:
                constants = ConstantSet(shape=base.shape, lo=base.lo,
                                        values=base.values, exact=False,
                                        lower_bound=min(base.lower_bound, bound))
                return ClassificationReport(Verdict.APPORTIONABLE, constants,
                                            "two-by-two-pad-zero")
            # padding preserves constants one way only: no verdict from failure
            return ClassificationReport(Verdict.UNKNOWN, ConstantSet.unknown(bound),
                                        "two-by-two-pad-zero-inconclusive")
        # three distinct nonzero eigenvalues: open family
        return ClassificationReport(Verdict.UNKNOWN, ConstantSet.unknown(bound),
                                    "open-3x3")
    # single 3x3 block with nonzero eigenvalue: open family
    return ClassificationReport(Verdict.UNKNOWN, ConstantSet.unknown(bound), "open-3x3")


def constant_set(input_matrix: MatrixLike,
                 report: Optional[ClassificationReport] = None) -> ConstantSet:
    """The constant-set description of a matrix (reusing a prior report)."""
    return (report or classify(input_matrix)).constants


def request_certificate(input_matrix: MatrixLike, kappa: Optional[float] = None,
                        report: Optional[ClassificationReport] = None
                        ) -> ApportionCertificate:
    """Build a certificate for an Apportionable input at ``kappa``.

    ``kappa`` defaults to a deterministic member of the constant set.  Raises
    ConstantNotAchievableError when kappa is outside the (known part of the)
    set, and InvalidInputError when the verdict is not Apportionable.  Raw
    entries must already sit in Jordan-block arrangement (certificates are
    built for the input matrix, in its own block order); conjugated raw input
    is refused since recovering a transforming basis for it is out of scope.
    """
    if isinstance(input_matrix, JordanSpec):
        spec = input_matrix
    else:
        spec = input_ordered_spec(input_matrix)
    report = report or _classify_spec(spec)
    if report.verdict is not Verdict.APPORTIONABLE:
        raise InvalidInputError(
            f"no constructive certificate: verdict is {report.verdict.value}"
        )
    constants = report.constants
    if kappa is None:
        kappa = constants.smallest_member()
        if kappa is None:
            raise InvalidInputError("no default constant available for this class")
    kappa = float(kappa)
    if constants.contains(kappa) is not True:
        raise ConstantNotAchievableError(
            f"kappa = {kappa!r} is outside the certified part of {constants.describe()}",
            constants=constants,
        )
    return _build_certificate(spec, report, kappa)


def _build_certificate(spec: JordanSpec, report: ClassificationReport,
                       kappa: float) -> ApportionCertificate:
    tag = report.theorem_tag
    n = spec.order
    if tag == "zero-matrix":
        A = build_jordan(spec)
        return ApportionCertificate(np.eye(n, dtype=complex), np.eye(n, dtype=complex),
                                    A, 0.0, CertTag.NILPOTENT)
    if tag == "order-one":
        A = build_jordan(spec)
        return ApportionCertificate(np.eye(1, dtype=complex), np.eye(1, dtype=complex),
                                    A, abs(spec.blocks[0][0]), CertTag.RANK_ONE)
    if tag == "nilpotent":
        return apportion_nilpotent(spec, kappa)
    if tag == "rank-one":
        lam = next(lam for lam, _ in spec.blocks if lam != 0)
        cert = apportion_rank_one(lam, n, kappa)
        return _align_rank_one(cert, spec, lam)
    if tag == "half-rank":
        return apportion_half_rank(spec, kappa)
    if tag == "perturb-identity":
        mu, other, _ = _perturb_shape(spec)
        cert = apportion_perturb_identity(n, other / mu, target=kappa / abs(mu))
        cert = scale_certificate(cert, mu, A=mu * _canonical_perturb_matrix(n, other / mu))
        return _align_perturb(cert, spec, mu, other)
    if tag == "two-by-two":
        rep = apportion_2x2(spec.blocks[0][0], spec.blocks[1][0], target=kappa)
        return rep.certificate
    if tag == "two-by-two-pad-zero":
        nz = [lam for lam, _ in spec.blocks if lam != 0]
        rep = apportion_2x2(nz[0], nz[1], target=kappa)
        cert = pad_by_zero(rep.certificate, A=np.diag([nz[0], nz[1]]))
        return _align_diag(cert, spec, (nz[0], nz[1], 0j))
    if tag == "3x3-template-j2-plus-zero":
        lam = next(lam for lam, _ in spec.blocks if lam != 0)
        cert = apportion_3x3_template(TemplateKind.LAMBDA_J2_PLUS_ZERO, lam)
        return _align_template(cert, spec, TemplateKind.LAMBDA_J2_PLUS_ZERO, lam)
    if tag == "3x3-template-plus-nilpotent":
        lam = next(lam for lam, _ in spec.blocks if lam != 0)
        cert = apportion_3x3_template(TemplateKind.LAMBDA_PLUS_N2, lam)
        return _align_template(cert, spec, TemplateKind.LAMBDA_PLUS_N2, lam)
    raise InvalidInputError(f"no constructive path for tag {tag!r}")


def _permute_to(cert: ApportionCertificate, built_spec: JordanSpec,
                target_spec: JordanSpec) -> ApportionCertificate:
    """Map a certificate built for one block order onto the requested order."""
    if built_spec.blocks == target_spec.blocks:
        return cert
    used = [False] * len(target_spec.blocks)
    order = []
    for blk in built_spec.blocks:
        idx = next(i for i, b in enumerate(target_spec.blocks)
                   if not used[i] and b == blk)
        used[idx] = True
        order.append(idx)
    # reordering target by `order` reproduces built: J_built = Q J_target Q^T
    _, Q = block_permutation(target_spec, order)
    return reorder_certificate(cert, Q, A=build_jordan(target_spec))


def _align_rank_one(cert, spec, lam):
    built = JordanSpec(((lam, 1),) + ((0j, 1),) * (spec.order - 1))
    return _permute_to(cert, built, spec)


def _canonical_perturb_matrix(n, lam_tilde):
    A = np.eye(n, dtype=complex)
    A[n - 1, n - 1] = lam_tilde
    return A


def _align_perturb(cert, spec, mu, other):
    built = JordanSpec(((mu, 1),) * (spec.order - 1) + ((other, 1),))
    return _permute_to(cert, built, spec)


def _align_diag(cert, spec, lams):
    built = JordanSpec(tuple((lam, 1) for lam in lams))
    return _permute_to(cert, built, spec)


def _align_template(cert, spec, kind, lam):
    if kind is TemplateKind.LAMBDA_J2_PLUS_ZERO:
        built = JordanSpec(((lam, 2), (0j, 1)))
    else:
        built = JordanSpec(((lam, 1), (0j, 2)))
    return _permute_to(cert, built, spec)


# ---------------------------------------------------------------------------
# admissible region for the second eigenvalue at order 2
# ---------------------------------------------------------------------------

#: grid points closer than this to 0 or to lambda1 are skipped as degenerate
DEGENERATE_ATOL = 1e-9


@dataclass(frozen=True)
class RegionSample:
    """One grid sample: admissible True/False, or None for degenerate points."""

    re: float
    im: float
    admissible: Optional[bool]


def admissible_region(lambda1: complex,
                      box: tuple[tuple[float, float], tuple[float, float]],
                      resolution: int) -> list[RegionSample]:
    """Sample the second-eigenvalue admissibility predicate on a grid.

    ``box`` is ((re_min, re_max), (im_min, im_max)); each axis carries
    ``resolution`` evenly spaced points (endpoints included).  Points within
    DEGENERATE_ATOL of 0 or of lambda1 are skipped.  Output order is
    row-major: the imaginary axis varies in the outer loop.
    """
    lambda1 = complex(lambda1)
    if lambda1 == 0:
        raise InvalidInputError("lambda1 must be nonzero")
    if not (isinstance(resolution, (int, np.integer)) and resolution >= 2):
        raise InvalidInputError("resolution must be an integer >= 2")
    (re_min, re_max), (im_min, im_max) = box
    if not (re_min < re_max and im_min < im_max):
        raise InvalidInputError("box must have positive extent on both axes")
    res = np.linspace(re_min, re_max, resolution)
    ims = np.linspace(im_min, im_max, resolution)
    samples = []
    for im in ims:
        for re in res:
            l2 = complex(re, im)
            if abs(l2) <= DEGENERATE_ATOL or abs(l2 - lambda1) <= DEGENERATE_ATOL:
                samples.append(RegionSample(float(re), float(im), None))
            else:
                samples.append(RegionSample(float(re), float(im),
                                            polar_condition_2x2(lambda1, l2)))
    return samples


def region_to_csv(samples: list[RegionSample]) -> str:
    """CSV rows ``re,im,admissible`` with admissible in {0, 1, skip}."""
    lines = ["re,im,admissible"]
    for s in samples:
        flag = "skip" if s.admissible is None else str(int(s.admissible))
        lines.append(f"{s.re:.17g},{s.im:.17g},{flag}")
    return "\n".join(lines) + "\n"


def region_to_svg(samples: list[RegionSample], cell_px: int = 8) -> str:
    """Self-contained SVG raster of the region: two cell colors plus axes."""
    if not samples:
        raise InvalidInputError("no samples to render")
    res = sorted({s.re for s in samples})
    ims = sorted({s.im for s in samples})
    ncols, nrows = len(res), len(ims)
    col_of = {v: i for i, v in enumerate(res)}
    row_of = {v: i for i, v in enumerate(ims)}
    w, h = ncols * cell_px, nrows * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    for s in samples:
        if s.admissible is None:
            continue
        x = col_of[s.re] * cell_px
        y = (nrows - 1 - row_of[s.im]) * cell_px  # imaginary axis points up
        color = "#2e7d32" if s.admissible else "#e0e0e0"
        parts.append(
            f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" fill="{color}"/>'
        )
    # axes through re = 0 and im = 0 when inside the box
    if res[0] <= 0.0 <= res[-1] and res[-1] > res[0]:
        fx = (0.0 - res[0]) / (res[-1] - res[0]) * (w - cell_px) + cell_px / 2
        parts.append(f'<line x1="{fx:.2f}" y1="0" x2="{fx:.2f}" y2="{h}" '
                     f'stroke="#000000" stroke-width="1"/>')
    if ims[0] <= 0.0 <= ims[-1] and ims[-1] > ims[0]:
        fy = h - ((0.0 - ims[0]) / (ims[-1] - ims[0]) * (h - cell_px) + cell_px / 2)
        parts.append(f'<line x1="0" y1="{fy:.2f}" x2="{w}" y2="{fy:.2f}" '
                     f'stroke="#000000" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
