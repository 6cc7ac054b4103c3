# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels; twin of ``_pycore``.  Keep the random-draw order identical."""

import numpy as np
cimport numpy as cnp

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, exp, INFINITY, NAN
from libc.stdint cimport int64_t, uint8_t, int8_t, INT64_MIN
from libcpp.vector cimport vector
from libcpp.set cimport set as cset
from numpy.random cimport bitgen_t

cnp.import_array()

cdef enum:
    BLOCK = 256
    JUMP_C = 0
    DEATH_C = 1
    ANNIHILATE_C = 2
    ST_OK = 0
    ST_EXIT = 1
    ST_CAPPED = 2


cdef extern from *:
    """
    #include <set>
    #include <cstdint>
    static inline int64_t deref_begin(const std::set<int64_t> &s) { return *s.begin(); }
    """
    int64_t deref_begin(const cset[int64_t] &s) nogil

OK = 0
WINDOW_EXIT = 1
CAPPED = 2
JUMP = 0
DEATH = 1
ANNIHILATE = 2
CEMETERY = np.iinfo(np.int64).min
BACKEND = "cython"

cdef int64_t _CEM = INT64_MIN


cdef struct Uniforms:
    bitgen_t *rng
    double buf[BLOCK]
    int i


cdef inline void _fill(Uniforms *u) noexcept nogil:
    cdef int k
    for k in range(BLOCK):
        u.buf[k] = u.rng.next_double(u.rng.state)
    u.i = 0


cdef inline double _u(Uniforms *u) noexcept nogil:
    if u.i == BLOCK:
        _fill(u)
    cdef double r = u.buf[u.i]
    u.i += 1
    return r


cdef inline double _exp1(Uniforms *u) noexcept nogil:
    return -log(1.0 - _u(u))


cdef bitgen_t *_bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef struct Table:
    const double *breaks
    int nbreaks
    const double *values
    int64_t ncols
    int64_t lo
    int k


cdef inline void _seek(Table *t, double s) noexcept nogil:
    while t.k < t.nbreaks and t.breaks[t.k] <= s:
        t.k += 1


cdef inline double _value(Table *t, double s, int64_t x) noexcept nogil:
    _seek(t, s)
    return t.values[t.k * t.ncols + (x - t.lo)]


cdef inline double _integral(Table *t, int64_t x, double a, double b) noexcept nogil:
    cdef int64_t col = x - t.lo
    cdef double total = 0.0
    while t.k < t.nbreaks and t.breaks[t.k] <= b:
        total += t.values[t.k * t.ncols + col] * (t.breaks[t.k] - a)
        a = t.breaks[t.k]
        t.k += 1
    total += t.values[t.k * t.ncols + col] * (b - a)
    return total


cdef Table _make_table(const double[::1] breaks, const double[:, ::1] values, int64_t lo):
    cdef Table tab
    tab.breaks = &breaks[0] if breaks.shape[0] > 0 else NULL
    tab.nbreaks = breaks.shape[0]
    tab.values = &values[0, 0]
    tab.ncols = values.shape[1]
    tab.lo = lo
    tab.k = 0
    return tab


def brw_batch(const double[::1] rates, int64_t lo, int64_t x0, double t_max,
              int64_t n_runs, int64_t cap, const double[::1] log_g, int64_t y_count, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef int64_t hi = lo + rates.shape[0] - 1
    max_pos_a = np.zeros(n_runs, dtype=np.int64)
    pop_a = np.zeros(n_runs, dtype=np.int64)
    capped_a = np.zeros(n_runs, dtype=np.uint8)
    log_prod_a = np.zeros(n_runs, dtype=np.float64)
    n_at_a = np.zeros(n_runs, dtype=np.int64)
    n_geq_a = np.zeros(n_runs, dtype=np.int64)
    cdef int64_t[::1] max_pos = max_pos_a
    cdef int64_t[::1] pop = pop_a
    cdef uint8_t[::1] capped = capped_a
    cdef double[::1] log_prod = log_prod_a
    cdef int64_t[::1] n_at = n_at_a
    cdef int64_t[::1] n_geq = n_geq_a
    cdef vector[int64_t] stack_x
    cdef vector[double] stack_s
    cdef int64_t run, x, leaves, best, at, geq
    cdef double s, rate, v, lp
    cdef bint is_capped
    cdef int status = ST_OK
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for run in range(n_runs):
                stack_x.clear()
                stack_s.clear()
                stack_x.push_back(x0)
                stack_s.push_back(0.0)
                leaves = 0
                best = _CEM
                lp = 0.0
                at = 0
                geq = 0
                is_capped = False
                while stack_x.size() > 0 and not is_capped:
                    x = stack_x.back()
                    stack_x.pop_back()
                    s = stack_s.back()
                    stack_s.pop_back()
                    while True:
                        rate = 1.0 + rates[x - lo]
                        s += _exp1(&U) / rate
                        if s >= t_max:
                            leaves += 1
                            if x > best:
                                best = x
                            lp += log_g[x - lo]
                            if x == y_count:
                                at += 1
                            if x >= y_count:
                                geq += 1
                            break
                        v = _u(&U) * rate
                        if v < 1.0:
                            if v < 0.5:
                                x = x + 1
                            else:
                                x = x - 1
                            if x < lo or x > hi:
                                status = ST_EXIT
                                break
                        else:
                            if leaves + <int64_t> stack_x.size() + 2 > cap:
                                is_capped = True
                                break
                            stack_x.push_back(x)
                            stack_s.push_back(s)
                    if status != ST_OK:
                        break
                if status != ST_OK:
                    break
                max_pos[run] = best
                if is_capped:
                    pop[run] = leaves + <int64_t> stack_x.size() + 1
                else:
                    pop[run] = leaves
                capped[run] = is_capped
                log_prod[run] = lp
                n_at[run] = at
                n_geq[run] = geq
    if status != ST_OK:
        return (status,) + (None,) * 6
    return OK, max_pos_a, pop_a, capped_a, log_prod_a, n_at_a, n_geq_a


def brw_positions(const double[::1] rates, int64_t lo, int64_t x0, double t_max, int64_t cap, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef int64_t hi = lo + rates.shape[0] - 1
    cdef vector[int64_t] stack_x
    cdef vector[double] stack_s
    cdef vector[int64_t] leaves
    cdef vector[double] branch_times
    cdef int64_t x
    cdef double s, rate, v
    cdef int status = ST_OK
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            stack_x.push_back(x0)
            stack_s.push_back(0.0)
            while stack_x.size() > 0 and status == ST_OK:
                x = stack_x.back()
                stack_x.pop_back()
                s = stack_s.back()
                stack_s.pop_back()
                while True:
                    rate = 1.0 + rates[x - lo]
                    s += _exp1(&U) / rate
                    if s >= t_max:
                        leaves.push_back(x)
                        break
                    v = _u(&U) * rate
                    if v < 1.0:
                        if v < 0.5:
                            x = x + 1
                        else:
                            x = x - 1
                        if x < lo or x > hi:
                            status = ST_EXIT
                            break
                    else:
                        if <int64_t> (leaves.size() + stack_x.size()) + 2 > cap:
                            status = ST_CAPPED
                            break
                        branch_times.push_back(s)
                        stack_x.push_back(x)
                        stack_s.push_back(s)
    if status == ST_EXIT:
        return WINDOW_EXIT, None, None
    pos = np.array([leaves[i] for i in range(leaves.size())], dtype=np.int64)
    bt = np.array([branch_times[i] for i in range(branch_times.size())], dtype=np.float64)
    return status, pos, bt


def srw_integral_batch(const double[::1] breaks, const double[:, ::1] values, int64_t lo,
                       int64_t x0, double t, int64_t n, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef Table tab = _make_table(breaks, values, lo)
    cdef int64_t hi = lo + values.shape[1] - 1
    if x0 < lo or x0 > hi:
        return WINDOW_EXIT, None, None
    ends_a = np.empty(n, dtype=np.int64)
    integ_a = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] ends = ends_a
    cdef double[::1] integ = integ_a
    cdef int64_t k, x
    cdef double s, acc, tau
    cdef int status = ST_OK
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for k in range(n):
                tab.k = 0
                x = x0
                s = 0.0
                acc = 0.0
                while True:
                    tau = _exp1(&U)
                    if s + tau >= t:
                        acc += _integral(&tab, x, s, t)
                        break
                    acc += _integral(&tab, x, s, s + tau)
                    s += tau
                    if _u(&U) < 0.5:
                        x = x + 1
                    else:
                        x = x - 1
                    if x < lo or x > hi:
                        status = ST_EXIT
                        break
                if status != ST_OK:
                    break
                ends[k] = x
                integ[k] = acc
    if status != ST_OK:
        return status, None, None
    return OK, ends_a, integ_a


def killed_batch(const double[::1] breaks, const double[:, ::1] values, int64_t lo, double k_hi,
                 int64_t x0, double t_max, int64_t n, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef Table tab = _make_table(breaks, values, lo)
    cdef int64_t hi = lo + values.shape[1] - 1
    life_a = np.empty(n, dtype=np.float64)
    integ_a = np.empty(n, dtype=np.float64)
    ends_a = np.empty(n, dtype=np.int64)
    cdef double[::1] life = life_a
    cdef double[::1] integ = integ_a
    cdef int64_t[::1] ends = ends_a
    cdef double R = 1.0 + k_hi
    cdef int64_t k, x
    cdef double s, acc, tau, v, dead_at
    cdef int status = ST_OK
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for k in range(n):
                tab.k = 0
                x = x0
                s = 0.0
                acc = 0.0
                dead_at = INFINITY
                while True:
                    tau = _exp1(&U) / R
                    if s + tau >= t_max:
                        acc += _integral(&tab, x, s, t_max)
                        break
                    acc += _integral(&tab, x, s, s + tau)
                    s += tau
                    v = _u(&U) * R
                    if v < 1.0:
                        if v < 0.5:
                            x = x + 1
                        else:
                            x = x - 1
                        if x < lo or x > hi:
                            status = ST_EXIT
                            break
                    elif dead_at == INFINITY:
                        if v - 1.0 < _value(&tab, s, x):
                            dead_at = s
                if status != ST_OK:
                    break
                life[k] = dead_at
                integ[k] = acc
                ends[k] = x
    if status != ST_OK:
        return status, None, None, None
    return OK, life_a, integ_a, ends_a


cdef inline void _drop(int64_t i, vector[int64_t] &alive, vector[int64_t] &slot) noexcept nogil:
    cdef int64_t j = slot[i]
    cdef int64_t last = alive.back()
    alive.pop_back()
    if last != i:
        alive[j] = last
        slot[last] = j


def annihilate(const double[::1] breaks, const double[:, ::1] values, int64_t lo, double k_hi,
               const int64_t[::1] pos0, const int8_t[::1] sign0, double t_max, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef Table tab = _make_table(breaks, values, lo)
    cdef int64_t hi = lo + values.shape[1] - 1
    cdef int64_t nsites = hi - lo + 1
    cdef int64_t n = pos0.shape[0]
    pos_a = np.array(pos0, dtype=np.int64)
    state_a = np.zeros(n, dtype=np.int8)
    frozen_a = np.full(n, np.nan)
    cdef int64_t[::1] pos = pos_a
    cdef int8_t[::1] state = state_a
    cdef double[::1] frozen = frozen_a
    cdef vector[int64_t] alive
    cdef vector[int64_t] slot
    # occupancy sets indexed by 2 * (site - lo) + (sign > 0)
    cdef vector[cset[int64_t]] occ
    cdef vector[double] ev_t
    cdef vector[int64_t] ev_i, ev_x, ev_p
    cdef vector[int8_t] ev_k
    cdef int64_t i, j, m, x, partner, q, cell
    cdef double R = 1.0 + k_hi
    cdef double s = 0.0, tau, v
    cdef int status = ST_OK
    for i in range(n):
        if pos[i] < lo or pos[i] > hi:
            return (WINDOW_EXIT,) + (None,) * 8
    occ.resize(2 * nsites)
    for i in range(n):
        alive.push_back(i)
        slot.push_back(i)
        occ[2 * (pos[i] - lo) + (1 if sign0[i] > 0 else 0)].insert(i)
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            while alive.size() > 0:
                m = alive.size()
                tau = _exp1(&U) / (m * R)
                if s + tau >= t_max:
                    break
                s += tau
                j = <int64_t> (_u(&U) * m)
                if j == m:
                    j = m - 1
                i = alive[j]
                v = _u(&U) * R
                x = pos[i]
                if v < 1.0:
                    occ[2 * (x - lo) + (1 if sign0[i] > 0 else 0)].erase(i)
                    if v < 0.5:
                        x = x + 1
                    else:
                        x = x - 1
                    if x < lo or x > hi:
                        status = ST_EXIT
                        break
                    pos[i] = x
                    cell = 2 * (x - lo) + (0 if sign0[i] > 0 else 1)
                    if occ[cell].size() > 0:
                        partner = deref_begin(occ[cell])
                        occ[cell].erase(partner)
                        state[i] = 2
                        frozen[i] = s
                        _drop(i, alive, slot)
                        state[partner] = 2
                        frozen[partner] = s
                        _drop(partner, alive, slot)
                        ev_t.push_back(s); ev_i.push_back(i); ev_k.push_back(ANNIHILATE_C)
                        ev_x.push_back(x); ev_p.push_back(partner)
                    else:
                        occ[2 * (x - lo) + (1 if sign0[i] > 0 else 0)].insert(i)
                        ev_t.push_back(s); ev_i.push_back(i); ev_k.push_back(JUMP_C)
                        ev_x.push_back(x); ev_p.push_back(-1)
                elif v - 1.0 < _value(&tab, s, x):
                    occ[2 * (x - lo) + (1 if sign0[i] > 0 else 0)].erase(i)
                    state[i] = 1
                    frozen[i] = s
                    _drop(i, alive, slot)
                    ev_t.push_back(s); ev_i.push_back(i); ev_k.push_back(DEATH_C)
                    ev_x.push_back(x); ev_p.push_back(-1)
    if status != ST_OK:
        return (status,) + (None,) * 8
    ne = ev_t.size()
    return (
        OK, pos_a, state_a, frozen_a,
        np.array([ev_t[k] for k in range(ne)], dtype=np.float64),
        np.array([ev_i[k] for k in range(ne)], dtype=np.int64),
        np.array([ev_k[k] for k in range(ne)], dtype=np.int8),
        np.array([ev_x[k] for k in range(ne)], dtype=np.int64),
        np.array([ev_p[k] for k in range(ne)], dtype=np.int64),
    )


def tilt_recursion(const double[::1] lam, double z_seed, double e_seed):
    cdef Py_ssize_t n = lam.shape[0]
    z_a = np.empty(n)
    pr_a = np.empty(n)
    pl_a = np.empty(n)
    e_a = np.empty(n)
    cdef double[::1] z = z_a
    cdef double[::1] pr = pr_a
    cdef double[::1] pl = pl_a
    cdef double[::1] e = e_a
    cdef double zprev = z_seed, eprev = e_seed, li, zi, left, right, ei
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            li = lam[i]
            zi = 1.0 / (2.0 * li - zprev)
            left = zprev / (2.0 * li)
            right = 1.0 / (2.0 * li * zi)
            ei = (1.0 / li + left * eprev) / right
            z[i] = zi
            pl[i] = left
            pr[i] = right
            e[i] = ei
            zprev = zi
            eprev = ei
    return z_a, pr_a, pl_a, e_a


def tilted_batch(const double[::1] p_right, const double[::1] lam, int64_t lo, int64_t x0,
                 int64_t target, double t_max, int64_t n, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef int64_t hi = lo + p_right.shape[0] - 1
    if x0 < lo or x0 > hi:
        return WINDOW_EXIT, None, None, None
    hits_a = np.empty(n)
    ends_a = np.empty(n, dtype=np.int64)
    jumps_a = np.empty(n, dtype=np.int64)
    cdef double[::1] hits = hits_a
    cdef int64_t[::1] ends = ends_a
    cdef int64_t[::1] jumps = jumps_a
    cdef int64_t k, x, nj
    cdef double s, tau, hit
    cdef int status = ST_OK
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for k in range(n):
                x = x0
                s = 0.0
                nj = 0
                hit = 0.0 if x0 == target else INFINITY
                while hit == INFINITY:
                    tau = _exp1(&U) / lam[x - lo]
                    if s + tau >= t_max:
                        break
                    s += tau
                    if _u(&U) < p_right[x - lo]:
                        x = x + 1
                    else:
                        x = x - 1
                    nj += 1
                    if x < lo or x > hi:
                        status = ST_EXIT
                        break
                    if x == target:
                        hit = s
                if status != ST_OK:
                    break
                hits[k] = hit
                ends[k] = x
                jumps[k] = nj
    if status != ST_OK:
        return status, None, None, None
    return OK, hits_a, ends_a, jumps_a


def coupled_steps(const double[:, ::1] p3, const double[:, ::1] lam3, int64_t lo, int64_t x0,
                  int64_t n_steps, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef int64_t hi = lo + p3.shape[1] - 1
    Y_a = np.empty((3, n_steps + 1), dtype=np.int64)
    T_a = np.empty((3, n_steps), dtype=np.float64)
    cdef int64_t[:, ::1] Y = Y_a
    cdef double[:, ::1] T = T_a
    cdef int64_t y[3]
    cdef double clock[3]
    cdef int c
    cdef int64_t m, yc
    cdef double u, e
    cdef int status = ST_OK
    for c in range(3):
        y[c] = x0
        clock[c] = 0.0
        Y[c, 0] = x0
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for m in range(n_steps):
                u = _u(&U)
                e = _exp1(&U)
                for c in range(3):
                    yc = y[c]
                    clock[c] += e / lam3[c, yc - lo]
                    T[c, m] = clock[c]
                    if u < p3[c, yc - lo]:
                        yc = yc + 1
                    else:
                        yc = yc - 1
                    if yc < lo or yc > hi:
                        status = ST_EXIT
                        break
                    y[c] = yc
                    Y[c, m + 1] = yc
                if status != ST_OK:
                    break
    if status != ST_OK:
        return status, None, None
    return OK, Y_a, T_a


def srw_tilt_weight_batch(const double[::1] zeta, int64_t lo, double eta, int64_t x0,
                          int64_t target, double t_cap, int64_t n, gen):
    cdef Uniforms U
    U.rng = _bitgen(gen)
    cdef int64_t hi = lo + zeta.shape[0] - 1
    w_a = np.empty(n)
    cens_a = np.zeros(n, dtype=np.uint8)
    cdef double[::1] w = w_a
    cdef uint8_t[::1] cens = cens_a
    cdef int64_t k, x
    cdef double s, acc, tau
    cdef bint ok
    with gen.bit_generator.lock:
        with nogil:
            _fill(&U)
            for k in range(n):
                x = x0
                s = 0.0
                acc = 0.0
                ok = True
                while x != target:
                    tau = _exp1(&U)
                    if s + tau >= t_cap:
                        ok = False
                        break
                    acc += (zeta[x - lo] + eta) * tau
                    s += tau
                    if _u(&U) < 0.5:
                        x = x + 1
                    else:
                        x = x - 1
                    if x < lo or x > hi:
                        ok = False
                        break
                if ok:
                    w[k] = exp(acc)
                else:
                    w[k] = 0.0
                    cens[k] = 1
    return OK, w_a, cens_a
