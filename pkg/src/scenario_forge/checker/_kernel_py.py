"""Reference stepping loop. The Cython kernel mirrors this line for line.

Actors, events and actions arrive as flat numeric tables (see ``encode`` in
``simulate.py``); the loop only knows integers and doubles.
"""

import numpy as np

# trigger kinds
AT_TIME, GAP_BELOW, GAP_ABOVE, TRAVELED, LC_DONE = 0, 1, 2, 3, 4
# action kinds
SET_SPEED, HOLD_LANE, HOLD_GAP, LANE_CHANGE = 0, 1, 2, 3
# longitudinal modes
FREE, RAMPING, GAP = 0, 1, 2

RAMP = 2.0
GAP_GAIN = 0.5
GAP_TOL = 1e-6


def _ramp(v, target, rate, dt):
    st = rate * dt
    d = target - v
    if d > st:
        return v + st
    if d < -st:
        return v - st
    return target


def _gap(s, length, a, b):
    return abs(s[b] - s[a]) - (length[a] + length[b]) * 0.5


def run(dt, t_end, road_length, quiet_stop, a_f, a_i, e_f, e_i, x_f, x_i):
    n = a_f.shape[0]
    m = e_f.shape[0]
    steps = int(t_end / dt + 1e-9) + 1
    S = np.empty((steps, n))
    V = np.empty((steps, n))
    LN = np.empty((steps, n), dtype=np.int64)
    fired = np.full(m, -1, dtype=np.int64)

    s = [float(a_f[i, 0]) for i in range(n)]
    v = [float(a_f[i, 1]) for i in range(n)]
    length = [float(a_f[i, 2]) for i in range(n)]
    lane = [int(a_i[i, 0]) for i in range(n)]
    ev0 = [int(a_i[i, 1]) for i in range(n)]
    evn = [int(a_i[i, 2]) for i in range(n)]
    ev_val = [float(e_f[j]) for j in range(m)]
    ev_int = [[int(x) for x in e_i[j]] for j in range(m)]

    dist = [0.0] * n
    ptr = [0] * n
    prev = [False] * n
    mode = [FREE] * n
    tgt = [0.0] * n
    rate = [RAMP] * n
    leader = [-1] * n
    lc_k0 = [-1] * n
    lc_dur = [0.0] * n
    lc_dir = [0] * n
    lc_half = [False] * n
    lc_count = [0] * n
    newv = [0.0] * n
    nrec = 0

    for k in range(steps):
        t = k * dt
        for a in range(n):
            while ptr[a] < evn[a]:
                # the next event is armed once the previous one has ended
                if (mode[a] == RAMPING and v[a] != tgt[a]) or lc_k0[a] >= 0:
                    break
                e = ev0[a] + ptr[a]
                kind, who, other, x0, xn = ev_int[e]
                val = ev_val[e]
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
                    prev[a] = False
                    for x in range(x0, x0 + xn):
                        xk = int(x_i[x, 0])
                        if xk == SET_SPEED:
                            mode[a] = RAMPING
                            tgt[a] = float(x_f[x, 0])
                            r = float(x_f[x, 1])
                            rate[a] = r if r > 0.0 else RAMP
                        elif xk == HOLD_GAP:
                            mode[a] = GAP
                            tgt[a] = float(x_f[x, 0])
                            rate[a] = RAMP
                            leader[a] = int(x_i[x, 2])
                        elif xk == LANE_CHANGE:
                            lc_k0[a] = k
                            lc_dur[a] = float(x_f[x, 2])
                            lc_dir[a] = int(x_i[x, 1])
                            lc_half[a] = False
                    continue
                prev[a] = cond
                break

        for a in range(n):
            if lc_k0[a] >= 0:
                el = (k - lc_k0[a]) * dt
                if not lc_half[a] and el >= lc_dur[a] * 0.5:
                    lane[a] += lc_dir[a]
                    lc_half[a] = True
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
                if ptr[a] < evn[a] or lc_k0[a] >= 0:
                    quiet = False
                elif mode[a] == RAMPING and v[a] != tgt[a]:
                    quiet = False
                elif mode[a] == GAP:
                    b = leader[a]
                    if abs(_gap(s, length, a, b) - tgt[a]) > GAP_TOL or abs(v[a] - v[b]) > GAP_TOL:
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

    return nrec, S[:nrec], V[:nrec], LN[:nrec], fired
