"""Hot loops for the sphere posterior and the adaptive Stern-Gerlach simulator.

Each kernel exists as ``*_numba`` (explicit loops, compiled) and ``*_numpy``
(vectorized over the grid).  Both evaluate the same floating-point expressions
in the same order, so with the MAP estimator they agree bit for bit on
identical inputs; the posterior-mean reduction differs in summation order.  The public
names pick one according to ``spinest._accel.USE_NUMBA``.
"""
import math

import numpy as np

from ._accel import njit, select

TIE_RTOL = 1e-9
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
MAX_CONSECUTIVE_DEGENERATE = 100

STATUS_OK = 0
STATUS_ABORTED = 1


def grid_directions(theta, phi):
    st = np.sin(theta)[:, None]
    gx = np.ascontiguousarray(st * np.cos(phi)[None, :])
    gy = np.ascontiguousarray(st * np.sin(phi)[None, :])
    gz = np.ascontiguousarray(np.repeat(np.cos(theta)[:, None], phi.shape[0], axis=1))
    return gx, gy, gz


def tie_separation_cos(theta, phi):
    """Cosine of the angle beyond which two near-maximal cells count as
    distinct modes (three grid spacings)."""
    dtheta = np.max(np.diff(theta)) if theta.shape[0] > 1 else math.pi
    spacing = max(dtheta, 2.0 * math.pi / phi.shape[0])
    return math.cos(min(math.pi, 3.0 * spacing))


def _parabola_vertex_py(x0, x1, x2, y0, y1, y2):
    """Abscissa of the vertex of the parabola through three points, clamped to
    the half-intervals around ``x1``; ``x1`` itself when ``y1`` is not a local
    maximum or a value is missing."""
    if not (math.isfinite(y0) and math.isfinite(y1) and math.isfinite(y2)):
        return x1
    if y1 < y0 or y1 < y2:
        return x1
    a = x1 - x0
    b = x1 - x2
    den = a * (y1 - y2) - b * (y1 - y0)
    if den == 0.0:
        return x1
    xv = x1 - 0.5 * (a * a * (y1 - y2) - b * b * (y1 - y0)) / den
    lo = 0.5 * (x0 + x1)
    hi = 0.5 * (x1 + x2)
    if xv < lo:
        return lo
    if xv > hi:
        return hi
    return xv


_parabola_vertex_nb = njit(_parabola_vertex_py)


def _safe_log_py(v):
    return math.log(v) if v > 0.0 else -math.inf


_safe_log_nb = njit(_safe_log_py)


def _refine_py(w, theta, phi, i, j, vertex, safe_log):
    nt = theta.shape[0]
    nphi = phi.shape[0]
    th = theta[i]
    if 0 < i < nt - 1:
        th = vertex(theta[i - 1], theta[i], theta[i + 1],
                    safe_log(w[i - 1, j]), safe_log(w[i, j]), safe_log(w[i + 1, j]))
    h = 2.0 * math.pi / nphi
    jm = (j - 1) % nphi
    jp = (j + 1) % nphi
    ph = phi[j] + vertex(-h, 0.0, h, safe_log(w[i, jm]), safe_log(w[i, j]), safe_log(w[i, jp]))
    st = math.sin(th)
    return st * math.cos(ph), st * math.sin(ph), math.cos(th)


@njit
def _refine_nb(w, theta, phi, i, j):
    nt = theta.shape[0]
    nphi = phi.shape[0]
    th = theta[i]
    if 0 < i < nt - 1:
        th = _parabola_vertex_nb(theta[i - 1], theta[i], theta[i + 1],
                                 _safe_log_nb(w[i - 1, j]), _safe_log_nb(w[i, j]),
                                 _safe_log_nb(w[i + 1, j]))
    h = 2.0 * math.pi / nphi
    jm = (j - 1) % nphi
    jp = (j + 1) % nphi
    ph = phi[j] + _parabola_vertex_nb(-h, 0.0, h, _safe_log_nb(w[i, jm]), _safe_log_nb(w[i, j]),
                                      _safe_log_nb(w[i, jp]))
    st = math.sin(th)
    return st * math.cos(ph), st * math.sin(ph), math.cos(th)


# -- mode finding -----------------------------------------------------------------


@njit
def _mode_candidates_numba(w, gx, gy, gz, sep_cos, cand):
    """Fill ``cand`` with the argmax flat index followed by every distant cell
    within ``TIE_RTOL`` of the maximum; return the count."""
    nt, nphi = w.shape
    best = -1.0
    bi = 0
    for i in range(nt):
        for j in range(nphi):
            if w[i, j] > best:
                best = w[i, j]
                bi = i * nphi + j
    thr = best * (1.0 - TIE_RTOL)
    i0 = bi // nphi
    j0 = bi % nphi
    x0 = gx[i0, j0]
    y0 = gy[i0, j0]
    z0 = gz[i0, j0]
    cand[0] = bi
    count = 1
    for i in range(nt):
        for j in range(nphi):
            if w[i, j] >= thr:
                if x0 * gx[i, j] + y0 * gy[i, j] + z0 * gz[i, j] < sep_cos:
                    cand[count] = i * nphi + j
                    count += 1
    return count


def _mode_candidates_numpy(w, gx, gy, gz, sep_cos, cand):
    nphi = w.shape[1]
    bi = int(np.argmax(w))
    i0, j0 = divmod(bi, nphi)
    thr = w[i0, j0] * (1.0 - TIE_RTOL)
    far = (w >= thr) & (gx[i0, j0] * gx + gy[i0, j0] * gy + gz[i0, j0] * gz < sep_cos)
    idx = np.flatnonzero(far)
    cand[0] = bi
    cand[1:1 + idx.shape[0]] = idx
    return 1 + idx.shape[0]


mode_candidates = select(_mode_candidates_numba, _mode_candidates_numpy)


def refine_mode(w, theta, phi, flat_index):
    """Sub-cell refinement of a mode by quadratic fits of log density along
    theta and phi."""
    i, j = divmod(int(flat_index), phi.shape[0])
    return _refine_py(w, theta, phi, i, j, _parabola_vertex_py, _safe_log_py)


# -- adaptive trials --------------------------------------------------------------


@njit
def _adaptive_numba(theta, phi, truth, triads, u_out, u_tie, perpendicular, posterior_mean,
                    fidelity, trace, status):
    trials = truth.shape[0]
    n_particles = u_out.shape[1]
    nt = theta.shape[0]
    nphi = phi.shape[0]
    st = np.sin(theta)
    ct = np.cos(theta)
    gx = np.empty((nt, nphi))
    gy = np.empty((nt, nphi))
    gz = np.empty((nt, nphi))
    for i in range(nt):
        for j in range(nphi):
            gx[i, j] = st[i] * math.cos(phi[j])
            gy[i, j] = st[i] * math.sin(phi[j])
            gz[i, j] = ct[i]
    dtheta = 0.0
    for i in range(nt - 1):
        dtheta = max(dtheta, theta[i + 1] - theta[i])
    if nt < 2:
        dtheta = math.pi
    sep_cos = math.cos(min(math.pi, 3.0 * max(dtheta, 2.0 * math.pi / nphi)))
    w = np.empty((nt, nphi))
    cand = np.empty(nt * nphi, dtype=np.int64)

    for t in range(trials):
        nx = truth[t, 0]
        ny = truth[t, 1]
        nz = truth[t, 2]
        for i in range(nt):
            for j in range(nphi):
                w[i, j] = 1.0
        mx_ = 0.0
        my_ = 0.0
        mz_ = 1.0
        consecutive = 0
        status[t] = STATUS_OK
        for k in range(n_particles):
            if k < 3:
                m0 = triads[t, k, 0]
                m1 = triads[t, k, 1]
                m2 = triads[t, k, 2]
            elif perpendicular:
                if abs(abs(mz_) - 1.0) <= 1e-9:
                    t1x, t1y, t1z = 1.0, 0.0, 0.0
                    t2x, t2y, t2z = 0.0, 1.0, 0.0
                else:
                    nrm = math.sqrt(mx_ * mx_ + my_ * my_)
                    t1x, t1y, t1z = -my_ / nrm, mx_ / nrm, 0.0
                    t2x = my_ * t1z - mz_ * t1y
                    t2y = mz_ * t1x - mx_ * t1z
                    t2z = mx_ * t1y - my_ * t1x
                    nrm = math.sqrt(t2x * t2x + t2y * t2y + t2z * t2z)
                    t2x /= nrm
                    t2y /= nrm
                    t2z /= nrm
                az = (k - 3) * GOLDEN_ANGLE
                ca = math.cos(az)
                sa = math.sin(az)
                m0 = ca * t1x + sa * t2x
                m1 = ca * t1y + sa * t2y
                m2 = ca * t1z + sa * t2z
            else:
                m0 = mx_
                m1 = my_
                m2 = mz_
            p_up = 0.5 * (1.0 + (m0 * nx + m1 * ny + m2 * nz))
            sgn = 1.0 if u_out[t, k] < p_up else -1.0
            top = 0.0
            for i in range(nt):
                for j in range(nphi):
                    v = w[i, j] * (0.5 * (1.0 + sgn * (m0 * gx[i, j] + m1 * gy[i, j] + m2 * gz[i, j])))
                    w[i, j] = v
                    if v > top:
                        top = v
            inv = 1.0 / top
            for i in range(nt):
                for j in range(nphi):
                    w[i, j] = w[i, j] * inv
            count = _mode_candidates_numba(w, gx, gy, gz, sep_cos, cand)
            if count > 1:
                consecutive += 1
                if consecutive > MAX_CONSECUTIVE_DEGENERATE:
                    status[t] = STATUS_ABORTED
                    break
                pick = cand[min(count - 1, int(u_tie[t, k] * count))]
            else:
                consecutive = 0
                pick = cand[0]
            mx_, my_, mz_ = _refine_nb(w, theta, phi, pick // nphi, pick % nphi)
            if posterior_mean:
                sx = 0.0
                sy = 0.0
                sz = 0.0
                for i in range(nt):
                    for j in range(nphi):
                        sx += w[i, j] * gx[i, j]
                        sy += w[i, j] * gy[i, j]
                        sz += w[i, j] * gz[i, j]
                nrm = math.sqrt(sx * sx + sy * sy + sz * sz)
                if nrm > 0.0:
                    ex, ey, ez = sx / nrm, sy / nrm, sz / nrm
                else:
                    ex, ey, ez = mx_, my_, mz_
            else:
                ex, ey, ez = mx_, my_, mz_
            trace[t, k] = 0.5 * (1.0 + (ex * nx + ey * ny + ez * nz))
        if status[t] == STATUS_OK and n_particles > 0:
            fidelity[t] = trace[t, n_particles - 1]
        else:
            fidelity[t] = math.nan


def _adaptive_numpy(theta, phi, truth, triads, u_out, u_tie, perpendicular, posterior_mean,
                    fidelity, trace, status):
    trials = truth.shape[0]
    n_particles = u_out.shape[1]
    nphi = phi.shape[0]
    st = np.sin(theta)[:, None]
    gx = st * np.cos(phi)[None, :]
    gy = st * np.sin(phi)[None, :]
    gz = np.cos(theta)[:, None] * np.ones((1, nphi))
    sep_cos = tie_separation_cos(theta, phi)
    cand = np.empty(gx.size, dtype=np.int64)
    for t in range(trials):
        nx, ny, nz = truth[t]
        w = np.ones_like(gx)
        est = (0.0, 0.0, 1.0)
        consecutive = 0
        status[t] = STATUS_OK
        for k in range(n_particles):
            if k < 3:
                m0, m1, m2 = triads[t, k]
            elif perpendicular:
                mx_, my_, mz_ = est
                if abs(abs(mz_) - 1.0) <= 1e-9:
                    t1 = (1.0, 0.0, 0.0)
                    t2 = (0.0, 1.0, 0.0)
                else:
                    nrm = math.sqrt(mx_ * mx_ + my_ * my_)
                    t1 = (-my_ / nrm, mx_ / nrm, 0.0)
                    t2 = (my_ * t1[2] - mz_ * t1[1], mz_ * t1[0] - mx_ * t1[2], mx_ * t1[1] - my_ * t1[0])
                    nrm = math.sqrt(t2[0] * t2[0] + t2[1] * t2[1] + t2[2] * t2[2])
                    t2 = (t2[0] / nrm, t2[1] / nrm, t2[2] / nrm)
                az = (k - 3) * GOLDEN_ANGLE
                ca = math.cos(az)
                sa = math.sin(az)
                m0 = ca * t1[0] + sa * t2[0]
                m1 = ca * t1[1] + sa * t2[1]
                m2 = ca * t1[2] + sa * t2[2]
            else:
                m0, m1, m2 = est
            p_up = 0.5 * (1.0 + (m0 * nx + m1 * ny + m2 * nz))
            sgn = 1.0 if u_out[t, k] < p_up else -1.0
            w = w * (0.5 * (1.0 + sgn * (m0 * gx + m1 * gy + m2 * gz)))
            w = w * (1.0 / w.max())
            count = _mode_candidates_numpy(w, gx, gy, gz, sep_cos, cand)
            if count > 1:
                consecutive += 1
                if consecutive > MAX_CONSECUTIVE_DEGENERATE:
                    status[t] = STATUS_ABORTED
                    break
                pick = cand[min(count - 1, int(u_tie[t, k] * count))]
            else:
                consecutive = 0
                pick = cand[0]
            est = refine_mode(w, theta, phi, pick)
            if posterior_mean:
                s = np.array([np.sum(w * gx), np.sum(w * gy), np.sum(w * gz)])
                nrm = math.sqrt(s @ s)
                e = tuple(s / nrm) if nrm > 0.0 else est
            else:
                e = est
            trace[t, k] = 0.5 * (1.0 + (e[0] * nx + e[1] * ny + e[2] * nz))
        if status[t] == STATUS_OK and n_particles > 0:
            fidelity[t] = trace[t, n_particles - 1]
        else:
            fidelity[t] = math.nan


adaptive_trials = select(_adaptive_numba, _adaptive_numpy)
