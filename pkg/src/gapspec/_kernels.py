"""Hot numerical loops, jitted when numba is available.

Set GAPSPEC_NUMBA=0 to select the pure-Python/numpy fallback. The choice is
made once at import; every kernel below is either compiled or plain, never a
mix, so compiled kernels only ever call compiled kernels.

Operator families are encoded for dispatch inside compiled code as an integer
`code` plus two float parameters (kk, p):

    0  half-line sphere        kk = k,  p = lambda
    1  half-line Yang-Mills    kk = 2,  p = lambda
    2  rescaled sphere (rho)   kk = k,  p = lambda
    3  rescaled Yang-Mills     kk = 2,  p = lambda
    4  Euclidean limit (rho)   kk = k
    5  large-k, finite k (s)   kk = k,  p = Theta
    6  large-k, k = inf (s)    p = Theta

Codes 0-4 integrate phi'' = (U - mu2) phi in their own coordinate. Codes 5-6
integrate in s = -log log(Theta/rho), where with L = exp(-s) the problem is
the first-order system phi_s = chi/gamma, chi_s = (P - mu2) phi/gamma with
gamma = sinh(L/kk)/(L/kk) (gamma = 1 at k = inf); chi is the invariantly
weighted derivative omega^-1 rho d(phi)/d(rho).

Potentials are assembled from cancellation-free pieces: x^2/(1+x^2)^2 is
evaluated as 1/(x + 1/x)^2 and the Yang-Mills factor Q(Q-2) as -4y/(1+y)^2,
so no subtraction of nearly equal quantities occurs anywhere on the domain.
"""

import math
import os

import numpy as np

_flag = os.environ.get("GAPSPEC_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")
if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:
        USE_NUMBA = False

if USE_NUMBA:
    def _jit(fn):
        return _njit(cache=True, error_model="numpy")(fn)
else:
    def _jit(fn):
        return fn

# family codes
HALF_SPHERE = 0
HALF_YM = 1
RESC_SPHERE = 2
RESC_YM = 3
EUCLIDEAN = 4
LARGEK_FIN = 5
LARGEK_INF = 6

# integrator status
OK = 0
UNDERFLOW = 1
MAXSTEPS = 2

ZEROS_CAP = 8192
LEDGER_CAP = 4096

# Dormand-Prince 5(4) tableau, FSAL form
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                                -2187.0 / 6784.0, 11.0 / 84.0)
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_E1, _E3, _E4 = 71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0
_E5, _E6, _E7 = -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0
# 4th-order dense-output weights
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0


@_jit
def pot(code, kk, p, x):
    """Effective potential U at coordinate x (s for codes 5-6)."""
    if code == 0:
        sh = math.sinh(x)
        om2 = 1.0 / (sh * sh)
        xi = (p * math.tanh(0.5 * x)) ** kk
        if xi <= 0.0:
            v = 0.0
        else:
            s = xi + 1.0 / xi
            v = -8.0 * kk * kk * om2 / (s * s)
        return 0.25 + (kk * kk - 0.25) * om2 + v
    if code == 1:
        sh = math.sinh(x)
        om2 = 1.0 / (sh * sh)
        t = p * math.tanh(0.5 * x)
        y = t * t
        opy = 1.0 + y
        return 0.25 + 3.75 * om2 - 24.0 * y * om2 / (opy * opy)
    if code == 2:
        sh = math.sinh(2.0 * x / p)
        om2 = 1.0 / (sh * sh)
        xi = (p * math.tanh(x / p)) ** kk
        if xi <= 0.0:
            v = 0.0
        else:
            s = xi + 1.0 / xi
            v = -8.0 * kk * kk * om2 / (s * s)
        return (1.0 + (4.0 * kk * kk - 1.0) * om2) / (p * p) + 4.0 * v / (p * p)
    if code == 3:
        sh = math.sinh(2.0 * x / p)
        om2 = 1.0 / (sh * sh)
        t = p * math.tanh(x / p)
        y = t * t
        opy = 1.0 + y
        w = -24.0 * y * om2 / (opy * opy)
        return (1.0 + 15.0 * om2) / (p * p) + 4.0 * w / (p * p)
    if code == 4:
        xi = x ** kk
        s = xi + 1.0 / xi
        return (kk * kk - 0.25) / (x * x) - 8.0 * kk * kk / (x * x * s * s)
    # large-k families in s; L = log(Theta/rho)
    L = math.exp(-x)
    rho = p * math.exp(-L)
    r2 = rho * rho
    opr = 1.0 + r2
    cr = (1.0 - 6.0 * r2 + r2 * r2) / (opr * opr)
    if code == 6:
        return 0.25 + L * L * cr
    shk = math.sinh(L / kk)
    return 0.25 + (kk * shk) * (kk * shk) * cr - 0.25 * shk * shk


@_jit
def gamma_weight(code, kk, x):
    """First-order-system weight gamma(s); 1 except for finite-k large-k."""
    if code == 5:
        w = math.exp(-x) / kk
        if w == 0.0:
            return 1.0
        return math.sinh(w) / w
    return 1.0


@_jit
def pot_array(code, kk, p, xs, out):
    for i in range(xs.shape[0]):
        out[i] = pot(code, kk, p, xs[i])


@_jit
def _dense(c1, c2, c3, c4, c5, th):
    return c1 + th * (c2 + (1.0 - th) * (c3 + th * (c4 + (1.0 - th) * c5)))


@_jit
def rk_shoot(code, kk, p, mu2, x0, phi0, chi0, lg0, x1,
             rtol, atol, max_steps, max_step, store, localize):
    """Adaptive RK5(4) for the shooting system, with magnitude ledger.

    Integrates from x0 to x1 (either direction). Rescales the state into
    [1e-150, 1e150] whenever its magnitude leaves [1e-100, 1e100], recording
    (sample index, log factor) so true values are exp(log) * stored. Zeros of
    phi are counted at every sign change; when `localize` is set they are
    bisected on the 4th-order dense output to 1e-10 in x.

    Returns (status, nstored, xs, phis, chis, lgs, nzeros, zeros,
             nled, led_idx, led_lg, x_end, phi_end, chi_end, lg_end).
    """
    ssize = max_steps + 2 if store else 1
    xs = np.empty(ssize)
    phis = np.empty(ssize)
    chis = np.empty(ssize)
    lgs = np.empty(ssize)
    zeros = np.empty(ZEROS_CAP)
    led_idx = np.empty(LEDGER_CAP, np.int64)
    led_lg = np.empty(LEDGER_CAP)

    x = x0
    phi = phi0
    chi = chi0
    lg = lg0
    span = abs(x1 - x0)
    direc = 1.0 if x1 >= x0 else -1.0

    nst = 0
    if store:
        xs[0] = x
        phis[0] = phi
        chis[0] = chi
        lgs[0] = lg
        nst = 1
    nzero = 0
    nled = 0
    sgn = 1.0 if phi > 0.0 else (-1.0 if phi < 0.0 else 0.0)

    # first step: small relative to both the span and the start abscissa,
    # since near a regular singular point the solution varies on scale |x|
    h = min(0.01, 0.01 * span)
    if abs(x) > 0.0:
        h = min(h, 0.1 * abs(x))
    if max_step > 0.0:
        h = min(h, max_step)
    h *= direc

    g = gamma_weight(code, kk, x)
    k1p = chi / g
    k1c = (pot(code, kk, p, x) - mu2) * phi / g

    status = OK
    steps = 0
    rejects = 0
    while (x1 - x) * direc > 1e-14 * max(span, 1.0):
        if steps >= max_steps:
            status = MAXSTEPS
            break
        if abs(h) < 1e-14 * max(abs(x), 1.0):
            status = UNDERFLOW
            break
        if (x + h - x1) * direc > 0.0:
            h = x1 - x

        xa = x + _C2 * h
        yp = phi + h * _A21 * k1p
        yc = chi + h * _A21 * k1c
        g = gamma_weight(code, kk, xa)
        k2p = yc / g
        k2c = (pot(code, kk, p, xa) - mu2) * yp / g

        xa = x + _C3 * h
        yp = phi + h * (_A31 * k1p + _A32 * k2p)
        yc = chi + h * (_A31 * k1c + _A32 * k2c)
        g = gamma_weight(code, kk, xa)
        k3p = yc / g
        k3c = (pot(code, kk, p, xa) - mu2) * yp / g

        xa = x + _C4 * h
        yp = phi + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p)
        yc = chi + h * (_A41 * k1c + _A42 * k2c + _A43 * k3c)
        g = gamma_weight(code, kk, xa)
        k4p = yc / g
        k4c = (pot(code, kk, p, xa) - mu2) * yp / g

        xa = x + _C5 * h
        yp = phi + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p)
        yc = chi + h * (_A51 * k1c + _A52 * k2c + _A53 * k3c + _A54 * k4c)
        g = gamma_weight(code, kk, xa)
        k5p = yc / g
        k5c = (pot(code, kk, p, xa) - mu2) * yp / g

        xa = x + h
        yp = phi + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p
                        + _A65 * k5p)
        yc = chi + h * (_A61 * k1c + _A62 * k2c + _A63 * k3c + _A64 * k4c
                        + _A65 * k5c)
        g = gamma_weight(code, kk, xa)
        k6p = yc / g
        k6c = (pot(code, kk, p, xa) - mu2) * yp / g

        y1p = phi + h * (_A71 * k1p + _A73 * k3p + _A74 * k4p + _A75 * k5p
                         + _A76 * k6p)
        y1c = chi + h * (_A71 * k1c + _A73 * k3c + _A74 * k4c + _A75 * k5c
                         + _A76 * k6c)
        g = gamma_weight(code, kk, xa)
        k7p = y1c / g
        k7c = (pot(code, kk, p, xa) - mu2) * y1p / g

        ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p
                  + _E7 * k7p)
        ec = h * (_E1 * k1c + _E3 * k3c + _E4 * k4c + _E5 * k5c + _E6 * k6c
                  + _E7 * k7c)
        sp = atol + rtol * max(abs(phi), abs(y1p))
        sc = atol + rtol * max(abs(chi), abs(y1c))
        err = math.sqrt(0.5 * ((ep / sp) ** 2 + (ec / sc) ** 2))

        if err <= 1.0:
            # zero bookkeeping before any rescale (scale cancels in signs)
            news = 1.0 if y1p > 0.0 else (-1.0 if y1p < 0.0 else 0.0)
            if news != 0.0 and sgn != 0.0 and news != sgn:
                nzero += 1
                if localize and nzero <= ZEROS_CAP:
                    c1 = phi
                    c2 = y1p - phi
                    c3 = h * k1p - c2
                    c4 = c2 - h * k7p - c3
                    c5 = h * (_D1 * k1p + _D3 * k3p + _D4 * k4p + _D5 * k5p
                              + _D6 * k6p + _D7 * k7p)
                    ta, tb = 0.0, 1.0
                    va = phi
                    it = 0
                    while (tb - ta) * abs(h) > 1e-10 and it < 80:
                        tm = 0.5 * (ta + tb)
                        vm = _dense(c1, c2, c3, c4, c5, tm)
                        if vm == 0.0:
                            ta = tm
                            tb = tm
                            break
                        if (va > 0.0) == (vm > 0.0):
                            ta = tm
                            va = vm
                        else:
                            tb = tm
                        it += 1
                    zeros[nzero - 1] = x + 0.5 * (ta + tb) * h
            if news != 0.0:
                sgn = news

            x = xa
            if (x1 - x) * direc <= 0.0:
                x = x1
            phi = y1p
            chi = y1c
            k1p = k7p
            k1c = k7c

            mag = max(abs(phi), abs(chi))
            if mag > 1e100 or (0.0 < mag < 1e-100):
                f = 1.0 / mag
                phi *= f
                chi *= f
                k1p *= f
                k1c *= f
                lg += math.log(mag)
                if nled < LEDGER_CAP:
                    led_idx[nled] = nst
                    led_lg[nled] = math.log(mag)
                    nled += 1

            if store:
                xs[nst] = x
                phis[nst] = phi
                chis[nst] = chi
                lgs[nst] = lg
                nst += 1
            rejects = 0
            fac = 5.0
            if err > 0.0:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejects += 1
            if rejects > 60:
                status = UNDERFLOW
                break
            fac = max(0.2, min(1.0, 0.9 * err ** -0.2))
        h *= fac
        if max_step > 0.0 and abs(h) > max_step:
            h = max_step * direc
        steps += 1

    return (status, nst, xs, phis, chis, lgs, nzero, zeros,
            nled, led_idx, led_lg, x, phi, chi, lg)


@_jit
def leapfrog_chunk(w, v, a, ueff, inv_h2, dt, nsteps,
                   probe_idx, probe_out, out_off,
                   nonlin, geom, kk, inv_ss, inv_s32, sin2q, cos2q, qm1):
    """Velocity-Verlet chunk for w_tt = w_rr - ueff*w (+ source), Dirichlet.

    Mutates w, v, a in place; `a` must hold the acceleration of the incoming
    w. Records w[probe_idx] after each full step. The nonlinear source uses
    delta = w * inv_ss (= sinh^k u) with the cancellation-guarded remainder.
    """
    n = w.shape[0]
    for step in range(nsteps):
        for i in range(n):
            v[i] += 0.5 * dt * a[i]
            w[i] += dt * v[i]
        w[0] = 0.0
        w[n - 1] = 0.0
        for i in range(1, n - 1):
            acc = (w[i - 1] - 2.0 * w[i] + w[i + 1]) * inv_h2 \
                - ueff[i] * w[i]
            if nonlin:
                d = w[i] * inv_ss[i]
                if geom == 0:
                    sd = math.sin(d)
                    if abs(d) < 1e-4:
                        q = d * d * d * (-2.0 / 3.0 + 0.4 * d * d / 3.0)
                    else:
                        q = 0.5 * math.sin(2.0 * d) - d
                    rem = -sin2q[i] * sd * sd + cos2q[i] * q
                    acc += -kk * kk * rem * inv_s32[i]
                else:
                    rem = 0.5 * d * d * d + 1.5 * qm1[i] * d * d
                    acc += -4.0 * rem * inv_s32[i]
            a[i] = acc
        a[0] = 0.0
        a[n - 1] = 0.0
        for i in range(n):
            v[i] += 0.5 * dt * a[i]
        probe_out[out_off + step] = w[probe_idx]


def leapfrog_chunk_numpy(w, v, a, ueff, inv_h2, dt, nsteps,
                         probe_idx, probe_out, out_off,
                         nonlin, geom, kk, inv_ss, inv_s32,
                         sin2q, cos2q, qm1):
    """Vectorized twin of leapfrog_chunk; the pure-numpy fallback path."""
    n = w.shape[0]
    for step in range(nsteps):
        v += 0.5 * dt * a
        w += dt * v
        w[0] = 0.0
        w[n - 1] = 0.0
        a[1:-1] = (w[:-2] - 2.0 * w[1:-1] + w[2:]) * inv_h2 \
            - ueff[1:-1] * w[1:-1]
        if nonlin:
            d = w * inv_ss
            if geom == 0:
                sd = np.sin(d)
                small = np.abs(d) < 1e-4
                q = np.where(small,
                             d ** 3 * (-2.0 / 3.0 + 0.4 * d * d / 3.0),
                             0.5 * np.sin(2.0 * d) - d)
                rem = -sin2q * sd * sd + cos2q * q
                a[1:-1] += -kk * kk * rem[1:-1] * inv_s32[1:-1]
            else:
                rem = 0.5 * d ** 3 + 1.5 * qm1 * d * d
                a[1:-1] += -4.0 * rem[1:-1] * inv_s32[1:-1]
        a[0] = 0.0
        a[n - 1] = 0.0
        v += 0.5 * dt * a
        probe_out[out_off + step] = w[probe_idx]


# the stepper wave_sim actually binds: compiled loop or vectorized fallback
step_chunk = leapfrog_chunk if USE_NUMBA else leapfrog_chunk_numpy
