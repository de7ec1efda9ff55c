# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping loop; same statements and evaluation order as _kernel_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef enum:
    AT_TIME = 0
    GAP_BELOW = 1
    GAP_ABOVE = 2
    TRAVELED = 3

cdef enum:
    SET_SPEED = 0
    HOLD_GAP = 2
    LANE_CHANGE = 3

cdef enum:
    FREE = 0
    RAMPING = 1
    GAP = 2

cdef double RAMP = 2.0
cdef double GAP_GAIN = 0.5
cdef double GAP_TOL = 1e-6


cdef inline double _ramp(double v, double target, double rate, double dt) nogil:
    cdef double st = rate * dt
    cdef double d = target - v
    if d > st:
        return v + st
    if d < -st:
        return v - st
    return target


cdef inline double _gap(double[::1] s, double[::1] length, Py_ssize_t a, Py_ssize_t b) nogil:
    return fabs(s[b] - s[a]) - (length[a] + length[b]) * 0.5


def run(double dt, double t_end, double road_length, bint quiet_stop,
        const double[:, ::1] a_f, const long long[:, ::1] a_i,
        const double[::1] e_f, const long long[:, ::1] e_i,
        const double[:, ::1] x_f, const long long[:, ::1] x_i):
    cdef Py_ssize_t n = a_f.shape[0]
    cdef Py_ssize_t m = e_f.shape[0]
    cdef Py_ssize_t steps = <Py_ssize_t>(t_end / dt + 1e-9) + 1
    S_arr = np.empty((steps, n))
    V_arr = np.empty((steps, n))
    LN_arr = np.empty((steps, n), dtype=np.int64)
    fired_arr = np.full(m, -1, dtype=np.int64)
    cdef double[:, ::1] S = S_arr
    cdef double[:, ::1] V = V_arr
    cdef long long[:, ::1] LN = LN_arr
    cdef long long[::1] fired = fired_arr

    cdef double[::1] s = np.empty(n)
    cdef double[::1] v = np.empty(n)
    cdef double[::1] length = np.empty(n)
    cdef double[::1] dist = np.zeros(n)
    cdef double[::1] tgt = np.zeros(n)
    cdef double[::1] rate = np.full(n, RAMP)
    cdef double[::1] lc_dur = np.zeros(n)
    cdef double[::1] newv = np.zeros(n)
    cdef long long[::1] lane = np.empty(n, dtype=np.int64)
    cdef long long[::1] ptr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] prev = np.zeros(n, dtype=np.int64)
    cdef long long[::1] mode = np.zeros(n, dtype=np.int64)
    cdef long long[::1] leader = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] lc_k0 = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] lc_dir = np.zeros(n, dtype=np.int64)
    cdef long long[::1] lc_half = np.zeros(n, dtype=np.int64)
    cdef long long[::1] lc_count = np.zeros(n, dtype=np.int64)

    cdef Py_ssize_t a, b, e, x, k, nrec = 0
    cdef long long kind, who, other, x0, xn, xk
    cdef double t, val, r, el, want
    cdef bint cond, quiet, out

    for a in range(n):
        s[a] = a_f[a, 0]
        v[a] = a_f[a, 1]
        length[a] = a_f[a, 2]
        lane[a] = a_i[a, 0]

    for k in range(steps):
        t = k * dt
        for a in range(n):
            while ptr[a] < a_i[a, 2]:
                if (mode[a] == RAMPING and v[a] != tgt[a]) or lc_k0[a] >= 0:
                    break
                e = a_i[a, 1] + ptr[a]
                kind = e_i[e, 0]
                who = e_i[e, 1]
                other = e_i[e, 2]
                x0 = e_i[e, 3]
                xn = e_i[e, 4]
                val = e_f[e]
                if kind == AT_TIME:
                    cond = t >= val
                elif kind == GAP_BELOW:
                    cond = _gap(s, length, who, other) < val
                elif kind == GAP_ABOVE:
                    cond = _gap(s, length, who, other) > val
                elif kind == TRAVELED:
                    cond = dist[who] >= val
                else:
                    cond = lc_count[who] > 0 and lc_k0[who] < 0
                if cond and not prev[a]:
                    fired[e] = k
                    ptr[a] += 1
                    prev[a] = 0
                    for x in range(x0, x0 + xn):
                        xk = x_i[x, 0]
                        if xk == SET_SPEED:
                            mode[a] = RAMPING
                            tgt[a] = x_f[x, 0]
                            r = x_f[x, 1]
                            rate[a] = r if r > 0.0 else RAMP
                        elif xk == HOLD_GAP:
                            mode[a] = GAP
                            tgt[a] = x_f[x, 0]
                            rate[a] = RAMP
                            leader[a] = x_i[x, 2]
                        elif xk == LANE_CHANGE:
                            lc_k0[a] = k
                            lc_dur[a] = x_f[x, 2]
                            lc_dir[a] = x_i[x, 1]
                            lc_half[a] = 0
                    continue
                prev[a] = cond
                break

        for a in range(n):
            if lc_k0[a] >= 0:
                el = (k - lc_k0[a]) * dt
                if not lc_half[a] and el >= lc_dur[a] * 0.5:
                    lane[a] += lc_dir[a]
                    lc_half[a] = 1
                if el >= lc_dur[a]:
                    lc_k0[a] = -1
                    lc_count[a] += 1

        for a in range(n):
            S[k, a] = s[a]
            V[k, a] = v[a]
            LN[k, a] = lane[a]
        nrec = k + 1

        if quiet_stop:
            quiet = True
            for a in range(n):
                if ptr[a] < a_i[a, 2] or lc_k0[a] >= 0:
                    quiet = False
                elif mode[a] == RAMPING and v[a] != tgt[a]:
                    quiet = False
                elif mode[a] == GAP:
                    b = leader[a]
                    if fabs(_gap(s, length, a, b) - tgt[a]) > GAP_TOL or fabs(v[a] - v[b]) > GAP_TOL:
                        quiet = False
            if quiet:
                break

        for a in range(n):
            if mode[a] == GAP:
                b = leader[a]
                want = v[b] + GAP_GAIN * (_gap(s, length, a, b) - tgt[a])
                if want < 0.0:
                    want = 0.0
                newv[a] = _ramp(v[a], want, rate[a], dt)
            elif mode[a] == RAMPING:
                newv[a] = _ramp(v[a], tgt[a], rate[a], dt)
            else:
                newv[a] = v[a]
        out = False
        for a in range(n):
            if s[a] + newv[a] * dt > road_length:
                out = True
        if out:
            break
        for a in range(n):
            s[a] = s[a] + newv[a] * dt
            dist[a] = dist[a] + newv[a] * dt
            v[a] = newv[a]

    return nrec, S_arr[:nrec], V_arr[:nrec], LN_arr[:nrec], fired_arr
