"""Pure-Python reference kernels.

Every function here has a twin in ``_core.pyx`` that consumes the random
stream in exactly the same order, so both backends produce identical output
for the same generator state.  Keep the two files in lockstep.
"""
from __future__ import annotations

import math

import numpy as np

BLOCK = 256

# error codes shared with the compiled core
OK = 0
WINDOW_EXIT = 1
CAPPED = 2

# annihilation event kinds
JUMP = 0
DEATH = 1
ANNIHILATE = 2

CEMETERY = np.iinfo(np.int64).min

BACKEND = "python"


class _Uniforms:
    """Block-buffered uniforms on [0, 1) drawn from a numpy Generator."""

    __slots__ = ("gen", "buf", "i")

    def __init__(self, gen: np.random.Generator):
        self.gen = gen
        self.buf = gen.random(BLOCK).tolist()
        self.i = 0

    def __call__(self) -> float:
        if self.i == BLOCK:
            self.buf = self.gen.random(BLOCK).tolist()
            self.i = 0
        u = self.buf[self.i]
        self.i += 1
        return u


def _exp(u: float) -> float:
    return -math.log(1.0 - u)


class _Table:
    """Piecewise-constant-in-time, per-site lookup with a monotone time cursor."""

    __slots__ = ("breaks", "values", "lo", "k")

    def __init__(self, breaks, values, lo):
        self.breaks = breaks.tolist()
        self.values = values.tolist()
        self.lo = lo
        self.k = 0

    def reset(self):
        self.k = 0

    def seek(self, t: float) -> None:
        b = self.breaks
        while self.k < len(b) and b[self.k] <= t:
            self.k += 1

    def value(self, t: float, x: int) -> float:
        self.seek(t)
        return self.values[self.k][x - self.lo]

    def integral(self, x: int, a: float, b: float) -> float:
        """Integral of the potential at site x over [a, b]; advances the cursor."""
        col = x - self.lo
        br = self.breaks
        total = 0.0
        while self.k < len(br) and br[self.k] <= b:
            total += self.values[self.k][col] * (br[self.k] - a)
            a = br[self.k]
            self.k += 1
        total += self.values[self.k][col] * (b - a)
        return total


def brw_batch(rates, lo, x0, t_max, n_runs, cap, log_g, y_count, gen):
    """Branching random walk, one depth-first tree per run.

    Returns (status, max_pos, pop, capped, log_prod, n_at, n_geq).
    ``log_g`` is the per-site log of the product weight (may hold -inf).
    """
    U = _Uniforms(gen)
    r = rates.tolist()
    lg = log_g.tolist()
    hi = lo + len(r) - 1
    max_pos = np.zeros(n_runs, dtype=np.int64)
    pop = np.zeros(n_runs, dtype=np.int64)
    capped = np.zeros(n_runs, dtype=np.uint8)
    log_prod = np.zeros(n_runs, dtype=np.float64)
    n_at = np.zeros(n_runs, dtype=np.int64)
    n_geq = np.zeros(n_runs, dtype=np.int64)
    for run in range(n_runs):
        stack_x = [x0]
        stack_s = [0.0]
        leaves = 0
        best = CEMETERY
        lp = 0.0
        at = 0
        geq = 0
        is_capped = False
        while stack_x and not is_capped:
            x = stack_x.pop()
            s = stack_s.pop()
            while True:
                rate = 1.0 + r[x - lo]
                s += _exp(U()) / rate
                if s >= t_max:
                    leaves += 1
                    if x > best:
                        best = x
                    lp += lg[x - lo]
                    if x == y_count:
                        at += 1
                    if x >= y_count:
                        geq += 1
                    break
                v = U() * rate
                if v < 1.0:
                    x = x + 1 if v < 0.5 else x - 1
                    if x < lo or x > hi:
                        return (WINDOW_EXIT,) + (None,) * 6
                else:
                    if leaves + len(stack_x) + 2 > cap:
                        is_capped = True
                        break
                    stack_x.append(x)
                    stack_s.append(s)
        max_pos[run] = best
        pop[run] = leaves if not is_capped else leaves + len(stack_x) + 1
        capped[run] = is_capped
        log_prod[run] = lp
        n_at[run] = at
        n_geq[run] = geq
    return OK, max_pos, pop, capped, log_prod, n_at, n_geq


def brw_positions(rates, lo, x0, t_max, cap, gen):
    """One branching random walk; returns (status, positions, branch_times)."""
    U = _Uniforms(gen)
    r = rates.tolist()
    hi = lo + len(r) - 1
    stack_x = [x0]
    stack_s = [0.0]
    leaves = []
    branch_times = []
    while stack_x:
        x = stack_x.pop()
        s = stack_s.pop()
        while True:
            rate = 1.0 + r[x - lo]
            s += _exp(U()) / rate
            if s >= t_max:
                leaves.append(x)
                break
            v = U() * rate
            if v < 1.0:
                x = x + 1 if v < 0.5 else x - 1
                if x < lo or x > hi:
                    return WINDOW_EXIT, None, None
            else:
                if len(leaves) + len(stack_x) + 2 > cap:
                    return CAPPED, np.array(leaves, dtype=np.int64), np.array(branch_times)
                branch_times.append(s)
                stack_x.append(x)
                stack_s.append(s)
    return OK, np.array(leaves, dtype=np.int64), np.array(branch_times)


def srw_integral_batch(breaks, values, lo, x0, t, n, gen):
    """Rate-one walks on [0, t]; returns (status, endpoints, integral of potential)."""
    U = _Uniforms(gen)
    tab = _Table(breaks, values, lo)
    hi = lo + values.shape[1] - 1
    ends = np.empty(n, dtype=np.int64)
    integ = np.empty(n, dtype=np.float64)
    if x0 < lo or x0 > hi:
        return WINDOW_EXIT, None, None
    for k in range(n):
        tab.reset()
        x = x0
        s = 0.0
        acc = 0.0
        while True:
            tau = _exp(U())
            if s + tau >= t:
                acc += tab.integral(x, s, t)
                break
            acc += tab.integral(x, s, s + tau)
            s += tau
            x = x + 1 if U() < 0.5 else x - 1
            if x < lo or x > hi:
                return WINDOW_EXIT, None, None
        ends[k] = x
        integ[k] = acc
    return OK, ends, integ


def killed_batch(breaks, values, lo, k_hi, x0, t_max, n, gen):
    """Killed walks by thinning against ``k_hi``.

    The underlying walk is followed to ``t_max`` even after death so that the
    path integral of the potential is available on the same path.
    Returns (status, lifetimes (inf if > t_max), integral, endpoints).
    """
    U = _Uniforms(gen)
    tab = _Table(breaks, values, lo)
    hi = lo + values.shape[1] - 1
    life = np.empty(n, dtype=np.float64)
    integ = np.empty(n, dtype=np.float64)
    ends = np.empty(n, dtype=np.int64)
    R = 1.0 + k_hi
    for k in range(n):
        tab.reset()
        x = x0
        s = 0.0
        acc = 0.0
        dead_at = math.inf
        while True:
            tau = _exp(U()) / R
            if s + tau >= t_max:
                acc += tab.integral(x, s, t_max)
                break
            acc += tab.integral(x, s, s + tau)
            s += tau
            v = U() * R
            if v < 1.0:
                x = x + 1 if v < 0.5 else x - 1
                if x < lo or x > hi:
                    return WINDOW_EXIT, None, None, None
            elif dead_at == math.inf:
                if v - 1.0 < tab.value(s, x):
                    dead_at = s
        life[k] = dead_at
        integ[k] = acc
        ends[k] = x
    return OK, life, integ, ends


def annihilate(breaks, values, lo, k_hi, pos0, sign0, t_max, gen):
    """Signed killed walks with pairwise annihilation.

    Returns (status, pos, state, frozen_at, ev_time, ev_idx, ev_kind, ev_site,
    ev_partner).  ``state`` is 0 alive, 1 dead (cemetery), 2 annihilated.
    """
    U = _Uniforms(gen)
    tab = _Table(breaks, values, lo)
    hi = lo + values.shape[1] - 1
    n = len(pos0)
    pos = pos0.tolist()
    sign = sign0.tolist()
    state = [0] * n
    frozen = [math.nan] * n
    alive = list(range(n))
    slot = list(range(n))
    occ: dict[tuple[int, int], set[int]] = {}
    for i in range(n):
        if pos[i] < lo or pos[i] > hi:
            return (WINDOW_EXIT,) + (None,) * 8
        occ.setdefault((pos[i], sign[i]), set()).add(i)
    ev_t, ev_i, ev_k, ev_x, ev_p = [], [], [], [], []

    def drop(i):
        j = slot[i]
        last = alive.pop()
        if last != i:
            alive[j] = last
            slot[last] = j

    R = 1.0 + k_hi
    s = 0.0
    while alive:
        m = len(alive)
        tau = _exp(U()) / (m * R)
        if s + tau >= t_max:
            break
        s += tau
        j = int(U() * m)
        if j == m:
            j = m - 1
        i = alive[j]
        v = U() * R
        x = pos[i]
        if v < 1.0:
            occ[(x, sign[i])].discard(i)
            x = x + 1 if v < 0.5 else x - 1
            if x < lo or x > hi:
                return (WINDOW_EXIT,) + (None,) * 8
            pos[i] = x
            opp = occ.get((x, -sign[i]))
            if opp:
                partner = min(opp)
                opp.discard(partner)
                for q in (i, partner):
                    state[q] = 2
                    frozen[q] = s
                    drop(q)
                ev_t.append(s); ev_i.append(i); ev_k.append(ANNIHILATE)
                ev_x.append(x); ev_p.append(partner)
            else:
                occ.setdefault((x, sign[i]), set()).add(i)
                ev_t.append(s); ev_i.append(i); ev_k.append(JUMP)
                ev_x.append(x); ev_p.append(-1)
        elif v - 1.0 < tab.value(s, x):
            occ[(x, sign[i])].discard(i)
            state[i] = 1
            frozen[i] = s
            drop(i)
            ev_t.append(s); ev_i.append(i); ev_k.append(DEATH)
            ev_x.append(x); ev_p.append(-1)
    return (
        OK,
        np.array(pos, dtype=np.int64),
        np.array(state, dtype=np.int8),
        np.array(frozen, dtype=np.float64),
        np.array(ev_t, dtype=np.float64),
        np.array(ev_i, dtype=np.int64),
        np.array(ev_k, dtype=np.int8),
        np.array(ev_x, dtype=np.int64),
        np.array(ev_p, dtype=np.int64),
    )


def tilt_recursion(lam, z_seed, e_seed):
    """Left-to-right recursions for Z_{x,x+1}, transition probabilities and E_x[H_{x+1}]."""
    lam_l = lam.tolist()
    n = len(lam_l)
    z = np.empty(n)
    pr = np.empty(n)
    pl = np.empty(n)
    e = np.empty(n)
    zprev = z_seed
    eprev = e_seed
    for i in range(n):
        li = lam_l[i]
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
    return z, pr, pl, e


def tilted_batch(p_right, lam, lo, x0, target, t_max, n, gen):
    """Tilted walks until hitting ``target`` or ``t_max``.

    Returns (status, hit_times (inf if censored), final positions, jump counts).
    """
    U = _Uniforms(gen)
    p = p_right.tolist()
    lm = lam.tolist()
    hi = lo + len(p) - 1
    hits = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    jumps = np.empty(n, dtype=np.int64)
    if x0 < lo or x0 > hi:
        return WINDOW_EXIT, None, None, None
    for k in range(n):
        x = x0
        s = 0.0
        nj = 0
        hit = 0.0 if x0 == target else math.inf
        while hit == math.inf:
            tau = _exp(U()) / lm[x - lo]
            if s + tau >= t_max:
                break
            s += tau
            x = x + 1 if U() < p[x - lo] else x - 1
            nj += 1
            if x < lo or x > hi:
                return WINDOW_EXIT, None, None, None
            if x == target:
                hit = s
        hits[k] = hit
        ends[k] = x
        jumps[k] = nj
    return OK, hits, ends, jumps


def coupled_steps(p3, lam3, lo, x0, n_steps, gen):
    """Three walks driven by one shared uniform and one shared exponential per step.

    Returns (status, Y with shape (3, n_steps + 1), jump times with shape (3, n_steps)).
    """
    U = _Uniforms(gen)
    p = p3.tolist()
    lm = lam3.tolist()
    hi = lo + p3.shape[1] - 1
    Y = np.empty((3, n_steps + 1), dtype=np.int64)
    T = np.empty((3, n_steps), dtype=np.float64)
    y = [x0, x0, x0]
    clock = [0.0, 0.0, 0.0]
    Y[:, 0] = x0
    for m in range(n_steps):
        u = U()
        e = _exp(U())
        for c in range(3):
            yc = y[c]
            clock[c] += e / lm[c][yc - lo]
            T[c, m] = clock[c]
            yc = yc + 1 if u < p[c][yc - lo] else yc - 1
            if yc < lo or yc > hi:
                return WINDOW_EXIT, None, None
            y[c] = yc
            Y[c, m + 1] = yc
    return OK, Y, T


def srw_tilt_weight_batch(zeta, lo, eta, x0, target, t_cap, n, gen):
    """Rate-one walks run until hitting ``target``; weight exp(int (zeta + eta)).

    Paths censored at ``t_cap`` or on leaving the window get weight 0.
    Returns (status, weights, censored flags).
    """
    U = _Uniforms(gen)
    z = zeta.tolist()
    hi = lo + len(z) - 1
    w = np.empty(n)
    cens = np.zeros(n, dtype=np.uint8)
    for k in range(n):
        x = x0
        s = 0.0
        acc = 0.0
        ok = True
        while x != target:
            tau = _exp(U())
            if s + tau >= t_cap:
                ok = False
                break
            acc += (z[x - lo] + eta) * tau
            s += tau
            x = x + 1 if U() < 0.5 else x - 1
            if x < lo or x > hi:
                ok = False
                break
        if ok:
            w[k] = math.exp(acc)
        else:
            w[k] = 0.0
            cens[k] = 1
    return OK, w, cens
