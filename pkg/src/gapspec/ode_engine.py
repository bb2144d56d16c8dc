"""Shooting infrastructure for the operator families.

The integrator is a Dormand-Prince 5(4) pair with PI-free step control,
4th-order dense output for zero localization, and a running magnitude ledger:
whenever the state magnitude leaves [1e-100, 1e100] it is rescaled to 1 and
the log factor recorded, so exponentially growing or decaying solutions are
carried across hundreds of e-foldings without overflow. True values are
stored * exp(log_scale).

Regular starts come from the Frobenius series at the left endpoint,
phi = x^nu (1 + c2 x^2 + c4 x^4 + ...), nu = k + 1/2, with c2, c4 formed from
the constant and quadratic potential coefficients of each family and the
start radius chosen so the first dropped term is below 1e-12. Large-k members
start in their s coordinate: finite k is seeded through the exact coordinate
map from the half-line series (the finite-k normal form is the exact pullback
of the half-line problem at lambda = Theta^(1/k)), and k = inf starts on the
exact far-field solution rho log^(-1/2)(Theta/rho); either way the start sits
deep enough (log(Theta/rho) >= 22) that any admixture of the singular branch
dies off like exp(-2 (L0 - L)) long before the matching region.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (DomainError, FitUnreliable, GapspecError,
                     SeriesRadiusExceeded, StepSizeUnderflow,
                     TailNotAsymptotic, VolterraDiverged)
from .harmonic_maps import GeometrySpec, sphere
from .operators import (LARGE_K, RESCALED_RHO, OperatorSpec, continuum_edge,
                        half_line, op_code, zero_mode)

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class StartData:
    """Initial state for a shot: abscissa, stored value pair, log scale.

    phi_prime is d(phi)/dx for the second-order families and the invariant
    derivative omega^-1 rho d(phi)/drho (= gamma d(phi)/ds) for large-k.
    True values are (phi, phi_prime) * exp(log_scale).
    """

    x: float
    phi: float
    phi_prime: float
    log_scale: float = 0.0


@dataclass
class ShootingTrace:
    """One integrated shot, sampled at the accepted steps."""

    operator: OperatorSpec
    mu2: float
    direction: str
    grid: np.ndarray
    values: np.ndarray          # (n, 2) stored (phi, chi)
    log_scale: np.ndarray       # (n,) cumulative ledger log per sample
    scale_ledger: list = field(default_factory=list)
    zero_count: int = 0
    zeros: np.ndarray = None

    @property
    def end(self):
        return StartData(float(self.grid[-1]), float(self.values[-1, 0]),
                         float(self.values[-1, 1]), float(self.log_scale[-1]))


@dataclass(frozen=True)
class ThresholdFit:
    """Affine fit a + b x to a trace tail at the continuum edge."""

    a: float
    b: float
    fit_residual: float
    window: tuple


@dataclass
class RenormalizedSolution:
    """Gap-edge renormalization f = phi/zeta with f(0) = 1, f'(0) = 0."""

    geometry: GeometrySpec
    mu2: float
    grid: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    zeta: np.ndarray
    shoot_residual: float = math.nan


def _series_coeffs(op, mu2):
    """(nu, u0, u2): effective potential = (nu^2-1/4)/x^2 + u0 + mu2 + u2 x^2.

    u0 absorbs -mu2. Quadratic coefficients vanish for k >= 3 where the
    potential itself is O(x^(2k-2)).
    """
    code, kk, p = op_code(op)
    k = kk
    k2q = k * k - 0.25
    if code == _kernels.HALF_SPHERE:
        v0 = -2.0 * p * p if k == 1 else 0.0
        if k == 1:
            v2 = p * p * (1.0 + p * p)
        elif k == 2:
            v2 = -2.0 * p ** 4
        else:
            v2 = 0.0
        return k + 0.5, 0.25 - k2q / 3.0 + v0 - mu2, k2q / 15.0 + v2
    if code == _kernels.HALF_YM:
        return 2.5, -1.0 - 6.0 * p * p - mu2, 0.25 + 3.0 * p * p * (1.0 + p * p)
    if code == _kernels.RESC_SPHERE:
        v0 = -8.0 if k == 1 else 0.0
        if k == 1:
            v2 = 16.0 * (1.0 + p * p) / (p * p)
        elif k == 2:
            v2 = -32.0
        else:
            v2 = 0.0
        u0 = 1.0 / p ** 2 - k2q * 4.0 / (3.0 * p * p) + v0 - mu2
        return k + 0.5, u0, k2q * 16.0 / (15.0 * p ** 4) + v2
    if code == _kernels.RESC_YM:
        u0 = -4.0 / (p * p) - 24.0 - mu2
        return 2.5, u0, 4.0 / p ** 4 + 48.0 * (1.0 + p * p) / (p * p)
    if code == _kernels.EUCLIDEAN:
        v0 = -8.0 if k == 1 else 0.0
        if k == 1:
            v2 = 16.0
        elif k == 2:
            v2 = -32.0
        else:
            v2 = 0.0
        return k + 0.5, v0 - mu2, v2
    raise DomainError("large-k members start in s, not from a power series")


def _series_radius(nu, u0, u2):
    """Largest r0 with the dropped c6 term below 1e-12 of the kept ones."""
    kfac = nu - 0.5
    c2 = u0 / (4.0 * kfac + 4.0)
    c4 = (u0 * c2 + u2) / (8.0 * kfac + 16.0)
    c6 = (abs(u0 * c4) + abs(u2 * c2)) / (12.0 * kfac + 30.0)
    r0 = min(1e-3, (1e-12 / max(c6, 1e-12)) ** (1.0 / 6.0))
    return max(r0, 1e-7), c2, c4


def series_start(op, mu2, r0=None):
    """Frobenius start for the regular solution, leading coefficient 1.

    With no r0 the radius is chosen adaptively; an explicit r0 beyond the
    series' validity raises SeriesRadiusExceeded. For large-k operators this
    returns the s-coordinate start described in the module docstring (r0, if
    given, is the half-line seed radius of the finite-k pullback).
    """
    if op.family == LARGE_K:
        return _largek_start(op, mu2, r0)
    nu, u0, u2 = _series_coeffs(op, mu2)
    rmax, c2, c4 = _series_radius(nu, u0, u2)
    if r0 is None:
        r0 = rmax
    elif r0 > rmax * (1.0 + 1e-12):
        raise SeriesRadiusExceeded(
            f"r0={r0:g} beyond series radius {rmax:g} for this operator")
    elif r0 <= 0.0:
        raise DomainError(f"r0 must be positive, got {r0}")
    r2 = r0 * r0
    val = r0 ** nu * (1.0 + c2 * r2 + c4 * r2 * r2)
    der = r0 ** (nu - 1.0) * (nu + (nu + 2.0) * c2 * r2
                              + (nu + 4.0) * c4 * r2 * r2)
    return StartData(r0, val, der, 0.0)


def _largek_start(op, mu2, r0=None):
    if op.k == math.inf:
        # exact solution of the frozen far equation psi'' = (L^2 + 1/4) psi
        # is rho log^(-1/2)(Theta/rho); relative start error is O(mu2/L0)
        # in the singular direction only, crushed by exp(-2(L0-L)) downstream
        L0 = 25.0
        return StartData(-math.log(L0), 1.0, L0 + 0.5,
                         -L0 - 0.5 * math.log(L0))
    lam = op.theta ** (1.0 / op.k)
    pull = half_line(sphere(int(op.k), lam))
    nu, u0, u2 = _series_coeffs(pull, mu2)
    rmax, c2, c4 = _series_radius(nu, u0, u2)
    seed = min(rmax, 2.0 * math.atanh(math.exp(-22.0 / op.k)))
    if r0 is not None:
        if r0 > rmax * (1.0 + 1e-12):
            raise SeriesRadiusExceeded(
                f"r0={r0:g} beyond series radius {rmax:g}")
        seed = min(r0, seed)
    hs = series_start(pull, mu2, seed)
    L0 = -op.k * math.log(math.tanh(0.5 * seed))
    return StartData(-math.log(L0), hs.phi, hs.phi_prime, 0.0)


def _shoot(op, mu2, start, x_end, rtol, atol, max_steps, max_step,
           store, localize):
    """Kernel call with start normalization; returns the raw kernel tuple
    plus the pre-normalization ledger entry (or None)."""
    if not isinstance(start, StartData):
        start = StartData(*start)
    code, kk, p = op_code(op)
    if op.family != LARGE_K and (start.x <= 0.0 or x_end <= 0.0):
        raise DomainError("half-line coordinates must be positive")
    if x_end == start.x:
        raise DomainError("empty integration interval")
    phi, chi, lg = start.phi, start.phi_prime, start.log_scale
    pre = None
    mag = max(abs(phi), abs(chi))
    if mag > 0.0 and not (1e-2 <= mag <= 1e2):
        phi /= mag
        chi /= mag
        lg += math.log(mag)
        pre = (0, math.log(mag))
    out = _kernels.rk_shoot(code, kk, p, mu2, start.x, phi, chi, lg,
                            x_end, rtol, atol, max_steps, max_step,
                            store, localize)
    status = out[0]
    if status == _kernels.UNDERFLOW:
        raise StepSizeUnderflow(
            f"step underflow at x={out[11]:.6g} (mu2={mu2:g})")
    if status == _kernels.MAXSTEPS:
        raise GapspecError(f"step budget {max_steps} exhausted at x={out[11]:.6g}")
    return out, pre


def integrate(op, mu2, start, x_end, rtol=1e-11, atol=1e-13,
              max_steps=400_000, max_step=0.0) -> ShootingTrace:
    """Integrate the shooting system from `start` to x_end.

    Direction is inferred from the endpoints. Zeros of phi are localized to
    1e-10 in the integration coordinate (s for large-k members, the family's
    own x otherwise).
    """
    out, pre = _shoot(op, mu2, start, x_end, rtol, atol, max_steps, max_step,
                      store=True, localize=True)
    (_, nst, xs, phis, chis, lgs, nzero, zeros,
     nled, led_idx, led_lg, *_rest) = out
    ledger = [] if pre is None else [pre]
    ledger.extend((int(led_idx[i]), float(led_lg[i])) for i in range(nled))
    vals = np.empty((nst, 2))
    vals[:, 0] = phis[:nst]
    vals[:, 1] = chis[:nst]
    sx = float(start.x if isinstance(start, StartData) else start[0])
    return ShootingTrace(
        operator=op, mu2=mu2,
        direction=FORWARD if x_end > sx else BACKWARD,
        grid=xs[:nst].copy(), values=vals, log_scale=lgs[:nst].copy(),
        scale_ledger=ledger, zero_count=int(nzero),
        zeros=zeros[:min(nzero, _kernels.ZEROS_CAP)].copy())


def count_zeros(op, mu2, start, x_end, rtol=1e-11, atol=1e-13,
                max_steps=400_000):
    """Zero count of the shot without building a trace (Sturm counting)."""
    out, _ = _shoot(op, mu2, start, x_end, rtol, atol, max_steps, 0.0,
                    store=False, localize=False)
    return int(out[6])


def endpoint_state(op, mu2, start, x_end, rtol=1e-11, atol=1e-13,
                   max_steps=400_000):
    """End StartData of the shot without storing samples."""
    out, _ = _shoot(op, mu2, start, x_end, rtol, atol, max_steps, 0.0,
                    store=False, localize=False)
    return StartData(out[11], out[12], out[13], out[14])


def tail_start_decaying(op, mu2, R):
    """Decaying-branch start at x = R: stored (1, -m), true scale exp(-mR).

    m = sqrt(edge - mu2) with edge the family's continuum edge. Requires the
    potential to have reached its asymptote at R to 1e-12 m^2, else
    TailNotAsymptotic.
    """
    edge = continuum_edge(op)
    if not mu2 < edge:
        raise DomainError(f"need mu2 < {edge} for a decaying tail, got {mu2}")
    m = math.sqrt(edge - mu2)
    code, kk, p = op_code(op)
    u = _kernels.pot(code, kk, p, float(R))
    if abs(u - edge) >= 1e-12 * m * m:
        raise TailNotAsymptotic(
            f"|U(R) - {edge:g}| = {abs(u - edge):.3g} at R={R:g}, "
            f"not below 1e-12 m^2 = {1e-12 * m * m:.3g}")
    return StartData(float(R), 1.0, -m, -m * float(R))


def fit_threshold(trace, window=None):
    """Affine tail fit at the continuum edge: phi ~ a + b x on the window.

    Defaults to [0.5, 0.9] of the trace span. The residual is the RMS misfit
    relative to max(|a|, |b| * window length); FitUnreliable at >= 1e-6.
    """
    xs = trace.grid
    xmax = float(xs[-1])
    if window is None:
        window = (0.5 * xmax, 0.9 * xmax)
    w0, w1 = window
    sel = (xs >= w0) & (xs <= w1)
    if int(sel.sum()) < 8:
        raise FitUnreliable(
            f"only {int(sel.sum())} samples inside window {window}")
    x = xs[sel]
    ref = float(trace.log_scale[sel][0])
    v = trace.values[sel, 0] * np.exp(trace.log_scale[sel] - ref)
    xb = x.mean()
    vb = v.mean()
    dx = x - xb
    b = float(np.dot(dx, v - vb) / np.dot(dx, dx))
    a = float(vb - b * xb)
    resid = float(np.sqrt(np.mean((v - a - b * x) ** 2)))
    rel = resid / max(abs(a), abs(b) * (w1 - w0), 1e-300)
    if rel >= 1e-6:
        raise FitUnreliable(f"threshold fit residual {rel:.3g} >= 1e-6")
    return ThresholdFit(a, b, rel, (float(w0), float(w1)))


def _cumquad(x, y):
    """Cumulative integral on a nonuniform grid, local parabola per interval.

    Each subinterval [x_i, x_{i+1}] is integrated with the quadratic through
    its neighboring triple; the first interval uses the leading triple.
    Returns I with I[0] = 0.
    """
    h1 = np.diff(x[:-1])
    h2 = np.diff(x[1:])
    # weights for int_{x1}^{x2} over triples (y0, y1, y2)
    c0 = -h2 ** 3 / (6.0 * h1 * (h1 + h2))
    c1 = h2 * (3.0 * h1 + h2) / (6.0 * h1)
    c2 = h2 * (2.0 * h2 + 3.0 * h1) / (6.0 * (h1 + h2))
    seg = np.empty(x.size - 1)
    seg[1:] = c0 * y[:-2] + c1 * y[1:-1] + c2 * y[2:]
    # first interval from the same leading parabola
    a1, a2 = x[1] - x[0], x[2] - x[1]
    seg[0] = (a1 * (2.0 * a1 + 3.0 * a2) / (6.0 * (a1 + a2)) * y[0]
              + a1 * (a1 + 3.0 * a2) / (6.0 * a2) * y[1]
              - a1 ** 3 / (6.0 * (a1 + a2) * a2) * y[2])
    out = np.empty(x.size)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def renormalized_f(geometry, mu2, rho_max, n_grid=6000):
    """Renormalize the gap-edge shot by the zero mode: f = phi/zeta.

    Solves the Volterra form of (f' zeta^2)' = -(4 mu2/lambda^2) zeta^2 f
    with f(0) = 1, f'(0) = 0 by Picard sweeps on a geometric grid until
    successive sweeps differ by < 1e-10 uniformly (VolterraDiverged if they
    fail to contract). mu2 is in the half-line convention, so mu2 = 1/4
    probes the rescaled family's continuum edge 1/lambda^2 and mu2 = 0 gives
    f identically 1. The result carries the relative residual against an
    independent direct shot of the rescaled operator.
    """
    lam = geometry.lam
    if lam <= 0.0 or rho_max <= 0.0:
        raise DomainError("need lambda > 0 and rho_max > 0")
    eps = 4.0 * mu2 / lam ** 2
    k = geometry.k
    rho = np.geomspace(rho_max * 1e-8, rho_max, n_grid)
    zeta = zero_mode(geometry, RESCALED_RHO, rho)
    z2 = zeta * zeta
    inv_z2 = 1.0 / z2
    head_in = z2[0] * rho[0] / (2.0 * k + 2.0)

    f = np.ones(n_grid)
    inner = None
    for sweep in range(300):
        inner = head_in * f[0] + _cumquad(rho, z2 * f)
        integ = inner * inv_z2
        outer = integ[0] * rho[0] / 2.0 + _cumquad(rho, integ)
        f_new = 1.0 - eps * outer
        delta = float(np.max(np.abs(f_new - f)))
        f = f_new
        if not np.isfinite(delta) or np.max(np.abs(f)) > 1e8:
            raise VolterraDiverged(
                f"Picard sweeps blew up by sweep {sweep} (rho_max too large?)")
        if delta < 1e-10:
            break
    else:
        raise VolterraDiverged("Picard sweeps did not contract to 1e-10")
    inner = head_in * f[0] + _cumquad(rho, z2 * f)
    f_prime = -eps * inner * inv_z2

    sol = RenormalizedSolution(geometry, mu2, rho, f, f_prime, zeta)
    sol.shoot_residual = _renorm_crosscheck(geometry, eps, rho, f)
    return sol


def _interp4(x, xp, fp):
    """Piecewise 4-point Lagrange interpolation on a strictly increasing
    grid; one order beyond linear so smooth comparisons are not limited by
    the interpolant. x must lie inside [xp[0], xp[-1]]."""
    i = np.clip(np.searchsorted(xp, x) - 1, 1, xp.size - 3)
    x0, x1, x2, x3 = xp[i - 1], xp[i], xp[i + 1], xp[i + 2]
    y0, y1, y2, y3 = fp[i - 1], fp[i], fp[i + 1], fp[i + 2]
    d0, d1, d2, d3 = x - x0, x - x1, x - x2, x - x3
    return (y0 * d1 * d2 * d3 / ((x0 - x1) * (x0 - x2) * (x0 - x3))
            + y1 * d0 * d2 * d3 / ((x1 - x0) * (x1 - x2) * (x1 - x3))
            + y2 * d0 * d1 * d3 / ((x2 - x0) * (x2 - x1) * (x2 - x3))
            + y3 * d0 * d1 * d2 / ((x3 - x0) * (x3 - x1) * (x3 - x2)))


def _renorm_crosscheck(geometry, eps, rho, f):
    """Relative misfit of f against a direct rescaled-operator shot.

    The shot is divided by the closed-form zero mode at its own sample
    points, so the comparison interpolates only the slowly varying f and
    inherits no interpolation error from the fast profile itself.
    """
    from .operators import RESCALED_RHO, rescaled, zero_mode  # import cycle

    op = rescaled(geometry)
    start = series_start(op, eps)
    tr = integrate(op, eps, start, float(rho[-1]), rtol=1e-12, atol=1e-15)
    sel = (tr.grid >= rho[0]) & (tr.grid <= rho[-1])
    xs = tr.grid[sel]
    ref = float(np.max(tr.log_scale[sel]))
    phi = tr.values[sel, 0] * np.exp(tr.log_scale[sel] - ref)
    f_shot = phi / zero_mode(geometry, RESCALED_RHO, xs)
    f_ref = _interp4(xs, rho, f)
    scale = float(np.dot(f_shot, f_ref) / np.dot(f_ref, f_ref))
    return float(np.max(np.abs(f_shot - scale * f_ref))
                 / np.max(np.abs(f_shot)))
