"""Gap-spectrum location and certification.

Every eigenvalue is established twice, by independent routes:

  * a Sturm count bisection: the number of zeros of the regular shot is a
    step function of the spectral parameter, jumping by one as each
    eigenvalue is crossed, so bisecting the jump brackets the eigenvalue
    with no cancellation;
  * a matching refinement: the normalized Wronskian of the regular shot
    and the decaying tail shot changes sign across the eigenvalue, and a
    bracketed secant drives it below 1e-8.

A result is reported only when the two agree: the zero counts at the final
bracket ends must differ by exactly one (the oscillation certificate), and
the matched root must land inside the count bracket. Threshold behavior is
read off the affine tail of the shot at the continuum edge, whose slope b
vanishes exactly when a resonance sits at the edge. Scans below the gap and
into the continuum certify the absence of spurious point spectrum there.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, EigenvalueMissing, InconsistentCertificate
from .harmonic_maps import SPHERE, YANG_MILLS, sphere, yang_mills
from .ode_engine import (ThresholdFit, count_zeros, endpoint_state,
                         fit_threshold, integrate, series_start,
                         tail_start_decaying)
from .operators import (EUCLIDEAN, LARGE_K, RESCALED, OperatorSpec,
                        continuum_edge, half_line, large_k, op_code)

COUNT_MARGIN = 1e-6        # counting offset below the continuum edge
BRACKET_WIDTH = 1e-10      # count-bisection bracket width
NEAR_THRESHOLD = 1e-8      # closer than this to the edge: report the bracket
WRONSKIAN_TOL = 1e-8
EMBEDDED_FACTORS = (1.04, 1.2, 1.6, 2.0, 2.8, 4.0)
# 0.0 closes the sweep: the count there is exactly the number of
# eigenvalues below the gap
NEGATIVE_PROBES = (-4.0, -1.0, -0.25, -1e-3, 0.0)
EMBEDDED_FLATNESS_TOL = 1e-6


@dataclass(frozen=True)
class GapEigenvalue:
    """A certified eigenvalue in the spectral gap."""

    mu2: float
    bracket: tuple
    wronskian_residual: float
    index: int
    oscillation: tuple
    R_used: float
    near_threshold: bool = False


@dataclass
class SpectralReport:
    """Full account of one operator's gap spectrum."""

    operator: OperatorSpec
    edge: float
    count: int
    eigenvalues: list = field(default_factory=list)
    threshold: ThresholdFit = None
    negative_scan: list = field(default_factory=list)
    embedded_scan: list = field(default_factory=list)
    R_count: float = 0.0

    @property
    def negative_scan_clear(self):
        """True when every below-gap probe counted zero states."""
        return bool(self.negative_scan) and all(
            c == 0 for _, c in self.negative_scan)

    @property
    def embedded_scan_clear(self):
        """True when every continuum probe's WKB amplitude stayed flat.

        Scattering states hold the drift near 1e-11; a trapped component
        would push it to order one, so the tolerance is sharp."""
        return bool(self.embedded_scan) and all(
            f < EMBEDDED_FLATNESS_TOL for _, f in self.embedded_scan)


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    count: int
    resonance_a: float
    resonance_b: float
    fit_residual: float


@dataclass
class SweepReport:
    """Threshold slope and eigenvalue count along a family parameter."""

    kind: str
    k: int
    grid: list
    points: list
    slope_flip_bracket: tuple = None    # b changes sign inside
    onset_bracket: tuple = None         # eigenvalue count 0 -> 1 inside


@dataclass(frozen=True)
class MigrationPoint:
    lam: float
    mu2: float
    wronskian_residual: float
    R_used: float


@dataclass
class MigrationReport:
    kind: str
    k: int
    points: list
    doubling_ratios: list = field(default_factory=list)  # (lam, mu2(2l)/mu2(l))


@dataclass(frozen=True)
class LargeKPoint:
    k: float                 # math.inf for the limit member
    count: int
    mu2: float               # nan when the gap is empty
    resonance_b: float
    halfline_mu2: float      # nan for k = inf; pullback consistency check
    halfline_count: int


@dataclass
class LargeKReport:
    theta: float
    points: list


def default_count_radius(op):
    """Endpoint far enough that the zero count has saturated."""
    if op.family == RESCALED:
        return max(60.0, 2.0 * op.lam)
    if op.family == LARGE_K:
        return 20.0
    return 60.0


def count_eigenvalues_below(op, mu2, R=None, rtol=1e-11, atol=1e-13):
    """Sturm count: zeros of the regular shot on (0, R).

    Equals the number of eigenvalues below mu2 once R is past the region
    where the potential still sits below mu2.
    """
    if R is None:
        R = default_count_radius(op)
    start = series_start(op, mu2)
    return count_zeros(op, mu2, start, R, rtol=rtol, atol=atol)


def _bisect_count(op, target, lo, hi, R, rtol, atol):
    """Smallest mu2 with count >= target, bracketed to BRACKET_WIDTH.

    Assumes count(lo) < target <= count(hi)."""
    while hi - lo > BRACKET_WIDTH:
        mid = 0.5 * (lo + hi)
        if count_eigenvalues_below(op, mid, R, rtol, atol) >= target:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _matching_point(op, x0, R):
    """Abscissa for Wronskian matching: the potential minimum.

    Matching belongs at the well. Outside it the regular solution decays
    under the centrifugal barrier, so a forward shot carried further picks
    up the growing solution at the barrier's amplification factor and the
    mismatch turns noisy; at the minimum both legs still run in their
    stable directions (the outward decay is shot backward from R). Only a
    sliver is clamped off each end to keep both legs nonempty.

    The scan unions a uniform net with a geometric cluster at the left
    end: the wells narrow like 1/lambda around 2 artanh(1/lambda), so a
    uniform net alone steps straight over them once lambda is large."""
    code, kk, p = op_code(op)
    span = R - x0
    xs = np.concatenate([
        np.linspace(x0, R, 2001)[1:-1],
        x0 + span * np.geomspace(1e-6, 1.0, 1000)[:-1]])
    u = np.empty(xs.size)
    _kernels.pot_array(code, kk, p, xs, u)
    xm = float(xs[int(np.argmin(u))])
    return min(max(xm, x0 + 1e-4 * span), x0 + 0.5 * span)


def _wronskian_mismatch(op, mu2, xm, R, rtol, atol):
    """Signed normalized Wronskian of the regular and decaying shots at xm."""
    fwd = endpoint_state(op, mu2, series_start(op, mu2), xm,
                         rtol=rtol, atol=atol)
    bwd = endpoint_state(op, mu2, tail_start_decaying(op, mu2, R), xm,
                         rtol=rtol, atol=atol)
    m = math.sqrt(continuum_edge(op) - mu2)
    w = fwd.phi * bwd.phi_prime - fwd.phi_prime * bwd.phi
    denom = max(abs(fwd.phi) * abs(bwd.phi) * m, 1e-300)
    return w / denom


def _refine_eigenvalue(op, index, lo, hi, R, rtol, atol):
    """Bracketed secant on the Wronskian mismatch inside the count bracket."""
    # the mismatch loses relative accuracy as it crosses zero, so the
    # refinement shots run two decades tighter than the counting shots;
    # otherwise the located root inherits an O(rtol) bias that depends on
    # the matching point
    rtol = max(rtol * 1e-2, 1e-14)
    atol = max(atol * 1e-2, 1e-15)
    xm = _matching_point(op, series_start(op, 0.5 * (lo + hi)).x, R)
    fa = _wronskian_mismatch(op, lo, xm, R, rtol, atol)
    fb = _wronskian_mismatch(op, hi, xm, R, rtol, atol)
    grow = 0
    while fa * fb > 0.0 and grow < 10:
        # tail-matched root sits a hair outside the Dirichlet bracket
        width = (hi - lo) or BRACKET_WIDTH
        lo, hi = lo - width, hi + width
        fa = _wronskian_mismatch(op, lo, xm, R, rtol, atol)
        fb = _wronskian_mismatch(op, hi, xm, R, rtol, atol)
        grow += 1
    if fa * fb > 0.0:
        raise InconsistentCertificate(
            f"no Wronskian sign change around count bracket for index {index}")
    a, b, va, vb = lo, hi, fa, fb
    best, vbest = (a, va) if abs(va) < abs(vb) else (b, vb)
    last_side, stale = 0, 0
    for _ in range(80):
        if vb == va or stale >= 2:
            mid, stale = 0.5 * (a + b), 0
        else:
            mid = b - vb * (b - a) / (vb - va)
            if not (a < mid < b):
                mid = 0.5 * (a + b)
        vm = _wronskian_mismatch(op, mid, xm, R, rtol, atol)
        if abs(vm) < abs(vbest):
            best, vbest = mid, vm
        side = 1 if va * vm <= 0.0 else -1
        if side == 1:
            b, vb = mid, vm
        else:
            a, va = mid, vm
        stale = stale + 1 if side == last_side else 0
        last_side = side
        # termination is relative: small eigenvalues at the foot of a deep
        # well need mu2 resolved far below any absolute 1e-15
        if b - a < 1e-13 * max(abs(a), abs(b), 1e-12) or vm == 0.0:
            break
    if abs(vbest) >= WRONSKIAN_TOL:
        raise InconsistentCertificate(
            f"Wronskian residual {abs(vbest):.3g} not below {WRONSKIAN_TOL:g}")
    return best, abs(vbest)


def _locate_eigenvalue(op, index, base_count, edge, R_count, rtol, atol):
    """Full two-route location of the eigenvalue with the given index."""
    target = base_count + index + 1
    hi0 = edge - COUNT_MARGIN
    lo, hi = _bisect_count(op, target, 0.0, hi0, R_count, rtol, atol)
    if edge - hi < NEAR_THRESHOLD:
        return GapEigenvalue(0.5 * (lo + hi), (lo, hi), math.nan, index,
                             (target - 1, target), R_count,
                             near_threshold=True)
    m = math.sqrt(edge - 0.5 * (lo + hi))
    R_fin = max(R_count, min(200.0, 40.0 / m))
    if R_fin > R_count:
        lo, hi = _bisect_count(op, target, 0.0, hi0, R_fin, rtol, atol)
    c_lo = count_eigenvalues_below(op, lo, R_fin, rtol, atol)
    c_hi = count_eigenvalues_below(op, hi, R_fin, rtol, atol)
    if c_hi - c_lo != 1:
        raise InconsistentCertificate(
            f"zero count jumps by {c_hi - c_lo} across the bracket "
            f"({lo:.12g}, {hi:.12g}), expected 1")
    mu2, resid = _refine_eigenvalue(op, index, lo, hi, R_fin, rtol, atol)
    return GapEigenvalue(mu2, (lo, hi), resid, index, (c_lo, c_hi), R_fin)


def find_gap_eigenvalues(op, R=None, rtol=1e-11, atol=1e-13,
                         scans=True, threshold=True) -> SpectralReport:
    """Locate and certify every eigenvalue in the operator's spectral gap.

    Returns a SpectralReport carrying the certified eigenvalues, the affine
    threshold fit at the continuum edge (when `threshold`), and the below-gap
    and embedded-continuum clearance scans (when `scans`).
    """
    if op.family == EUCLIDEAN:
        raise DomainError("the euclidean family has no spectral gap")
    edge = continuum_edge(op)
    R_count = default_count_radius(op) if R is None else float(R)
    base = count_eigenvalues_below(op, 0.0, R_count, rtol, atol)
    n = count_eigenvalues_below(op, edge - COUNT_MARGIN, R_count,
                                rtol, atol) - base
    report = SpectralReport(operator=op, edge=edge, count=n, R_count=R_count)
    for j in range(n):
        report.eigenvalues.append(
            _locate_eigenvalue(op, j, base, edge, R_count, rtol, atol))
    if threshold:
        # cap the step so the fit window holds enough samples: at the edge
        # the far field is affine and the controller would stride across it
        tr = integrate(op, edge, series_start(op, edge), R_count,
                       rtol=rtol, atol=atol, max_step=R_count / 100.0)
        report.threshold = fit_threshold(tr)
    if scans:
        for mu2 in NEGATIVE_PROBES:
            report.negative_scan.append(
                (mu2, count_eigenvalues_below(op, mu2, R_count, rtol, atol)))
        for fac in EMBEDDED_FACTORS:
            mu2 = edge * fac
            report.embedded_scan.append(
                (mu2, _embedded_flatness(op, mu2, edge, R_count, rtol, atol)))
    return report


def _embedded_flatness(op, mu2, edge, R, rtol, atol):
    """Amplitude drift of the shot inside the continuum over [R/2, R].

    The WKB amplitude sqrt(phi^2 + (phi'/kappa)^2) of a scattering state is
    R-independent once the potential has flattened; a trapped component
    would make it drift. Returns max/min - 1 over the window.
    """
    kappa = math.sqrt(mu2 - edge)
    tr = integrate(op, mu2, series_start(op, mu2), R, rtol=rtol, atol=atol)
    xs = tr.grid
    lo = xs[0] + 0.5 * (xs[-1] - xs[0])
    sel = xs >= lo
    ref = float(np.max(tr.log_scale[sel]))
    scale = np.exp(tr.log_scale[sel] - ref)
    phi = tr.values[sel, 0] * scale
    dphi = tr.values[sel, 1] * scale
    amp = np.sqrt(phi * phi + (dphi / kappa) ** 2)
    return float(np.max(amp) / np.min(amp) - 1.0)


def _geometry(kind, k, lam):
    if kind == SPHERE:
        return sphere(k, lam)
    if kind == YANG_MILLS:
        return yang_mills(lam)
    raise DomainError(f"unknown geometry kind {kind!r}")


def _sweep_point(args):
    kind, k, lam, R, rtol, atol = args
    op = half_line(_geometry(kind, k, lam))
    edge = continuum_edge(op)
    Rc = default_count_radius(op) if R is None else R
    cnt = count_eigenvalues_below(op, edge - COUNT_MARGIN, Rc, rtol, atol)
    tr = integrate(op, edge, series_start(op, edge), Rc,
                   rtol=rtol, atol=atol, max_step=Rc / 100.0)
    fit = fit_threshold(tr)
    return SweepPoint(lam, cnt, fit.a, fit.b, fit.fit_residual)


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=1))


def sweep_lambda(kind, k, lam_grid, R=None, rtol=1e-11, atol=1e-13,
                 jobs=1, bisect_to=1e-4) -> SweepReport:
    """Track the threshold slope and gap count along a lambda grid.

    Two independent transition brackets are refined to width `bisect_to`:
    where the resonance slope b changes sign, and where the gap count first
    leaves zero. They are located separately and never assumed to coincide.
    """
    lams = [float(v) for v in lam_grid]
    if sorted(lams) != lams:
        raise DomainError("lambda grid must be increasing")
    pts = _pool_map(_sweep_point, [(kind, k, v, R, rtol, atol) for v in lams],
                    jobs)
    report = SweepReport(kind, k, lams, pts)

    def slope(lam):
        return _sweep_point((kind, k, lam, R, rtol, atol)).resonance_b

    for i in range(len(pts) - 1):
        if pts[i].resonance_b * pts[i + 1].resonance_b < 0.0:
            lo, hi = lams[i], lams[i + 1]
            slo = pts[i].resonance_b
            while hi - lo > bisect_to:
                mid = 0.5 * (lo + hi)
                if slope(mid) * slo > 0.0:
                    lo = mid
                else:
                    hi = mid
            report.slope_flip_bracket = (lo, hi)
            break

    def gapcount(lam):
        return _sweep_point((kind, k, lam, R, rtol, atol)).count

    for i in range(len(pts) - 1):
        if pts[i].count == 0 and pts[i + 1].count > 0:
            lo, hi = lams[i], lams[i + 1]
            while hi - lo > bisect_to:
                mid = 0.5 * (lo + hi)
                if gapcount(mid) == 0:
                    lo = mid
                else:
                    hi = mid
            report.onset_bracket = (lo, hi)
            break
    return report


def _migration_point(args):
    kind, k, lam, rtol, atol = args
    op = half_line(_geometry(kind, k, lam))
    rep = find_gap_eigenvalues(op, rtol=rtol, atol=atol,
                               scans=False, threshold=False)
    if not rep.eigenvalues:
        raise EigenvalueMissing(
            f"no gap eigenvalue for {kind} k={k} lambda={lam:g}")
    ev = rep.eigenvalues[0]
    return MigrationPoint(lam, ev.mu2, ev.wronskian_residual, ev.R_used)


def migration_curve(kind, k, lams, rtol=1e-11, atol=1e-13,
                    jobs=1) -> MigrationReport:
    """Ground eigenvalue along increasing lambda, certified decreasing.

    Raises EigenvalueMissing where the gap is empty and
    InconsistentCertificate if the curve fails to decrease strictly.
    Records mu2(2 lam)/mu2(lam) for every doubling pair present in the grid.
    """
    lams = [float(v) for v in lams]
    if sorted(lams) != lams or len(set(lams)) != len(lams):
        raise DomainError("lambda grid must be strictly increasing")
    pts = _pool_map(_migration_point,
                    [(kind, k, v, rtol, atol) for v in lams], jobs)
    for p, q in zip(pts, pts[1:]):
        if not q.mu2 < p.mu2:
            raise InconsistentCertificate(
                f"mu2 failed to decrease: {p.mu2:.12g} at lambda={p.lam:g} "
                f"-> {q.mu2:.12g} at lambda={q.lam:g}")
    ratios = []
    bylam = {p.lam: p.mu2 for p in pts}
    for lam in lams:
        if 2.0 * lam in bylam:
            ratios.append((lam, bylam[2.0 * lam] / bylam[lam]))
    return MigrationReport(kind, k, pts, ratios)


def _largek_point(args):
    k, theta, rtol, atol = args
    op = large_k(k, theta)
    rep = find_gap_eigenvalues(op, rtol=rtol, atol=atol,
                               scans=False, threshold=True)
    mu2 = rep.eigenvalues[0].mu2 if rep.eigenvalues else math.nan
    hl_mu2, hl_cnt = math.nan, -1
    if k != math.inf:
        pull = half_line(sphere(int(k), theta ** (1.0 / k)))
        hrep = find_gap_eigenvalues(pull, rtol=rtol, atol=atol,
                                    scans=False, threshold=False)
        hl_cnt = hrep.count
        if hrep.eigenvalues:
            hl_mu2 = hrep.eigenvalues[0].mu2
    return LargeKPoint(k, rep.count, mu2, rep.threshold.b, hl_mu2, hl_cnt)


def largek_gap_scan(ks, theta, rtol=1e-11, atol=1e-13,
                    jobs=1) -> LargeKReport:
    """Gap spectrum of the large-k normal form for each k (inf allowed).

    Finite-k rows carry the spectrum of the half-line operator at
    lambda = theta^(1/k), whose pullback the normal form is, as an exact
    consistency check.
    """
    rows = _pool_map(_largek_point,
                     [(float(k) if k != math.inf else math.inf, theta,
                       rtol, atol) for k in ks], jobs)
    return LargeKReport(theta, rows)
