"""Compiled simulation core shared by the step/tick API and batch runners.

Everything that runs once per tick lives here as numba-jitted functions
over flat numpy arrays, so a single implementation serves both the
fine-grained operations (step, contact_graph, taps, bursts) and the
long-horizon batch drivers.  The Python-facing wrappers live in state.py
and rules.py; nothing in this module is public API.

State vectors (see state.py for the owning class):

    istate : int64   counters -- ball count, score, tick, ids, respawn
                     queues, fill latches, and audit totals
    fstate : float64 spawn credit per kind
    ustate : uint64  RNG state, rolling state-hash chain, contact-edge hash

Tick order is fixed: scheduled taps, physics (spawn, noise, integrate,
collide, walls/exits), exit scoring, contact components, bursts, hash
fold, clock advance.

Determinism notes: balls are stored in spawn order so array index order
equals id order; every loop iterates in index order; RNG draws happen in
a documented order (spawn positions per kind, then per-ball noise).  No
fastmath is enabled anywhere, so float results are reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TICKS_PER_SECOND = 60
DT = 1.0 / 60.0

FIELD_W = 9.0
FIELD_H = 16.0

NOISE_PROB = 0.1  # chance per ball per tick of one noise impulse
TAP_SLOP = 0.15  # extra hit-test radius around every ball
IMPULSE_KICK = 6.0  # upward velocity added by an Impulse tap
COLLISION_PASSES = 4

# --- istate slots ----------------------------------------------------------
I_N = 0  # live ball count
I_SCORE = 1
I_TICK = 2
I_NEXT_ID = 3
I_PEND = 4  # +kind: pending respawns
I_CONSUMED = 6  # +kind: respawn spawns performed
I_FILL = 8  # +kind: fill-phase spawns performed
I_FILL_DONE = 10  # +kind: 1 once the kind first reached its cap
I_FINISHED = 12
I_QUEUED = 13  # +kind: respawns ever enqueued
I_BURST_REM = 15  # +kind: balls removed by cluster bursts
I_DESTROY_REM = 17  # +kind: balls removed by Destroy taps
I_EXIT_REM = 19  # +kind: balls removed through exit regions
I_TAP_HITS = 21  # +kind: taps whose action fired
I_MAX_SEEN = 23  # +kind: max concurrent ball count observed
I_TAPEXP_REM = 25  # +kind: balls removed by Explode taps
ISTATE_LEN = 27

# --- fstate slots ----------------------------------------------------------
F_CREDIT = 0  # +kind
FSTATE_LEN = 2

# --- ustate slots ----------------------------------------------------------
U_RNG = 0
U_HASH = 1
U_CONTACT = 2
USTATE_LEN = 3

# tap sources / outcomes (wire values, also used in replay logs)
SRC_HUMAN = 0
SRC_ASSISTANT = 1
SRC_POLICY = 2

OUT_MISS = 0
OUT_EXPLODED = 1
OUT_DESTROYED = 2
OUT_IMPULSED = 3
OUT_NO_ACTION = 4

TAP_POSITIONAL = 0
TAP_TARGETED = 1

ACT_NONE = 0
ACT_EXPLODE = 1
ACT_DESTROY = 2
ACT_IMPULSE = 3

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
POSITION_QUANT = 1.0e6

# uint64 constants for jitted code (mixing uint64 with int literals would
# promote to float64 under numba's rules)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_FNV_PRIME_U = np.uint64(FNV_PRIME)
_UNIT = 2.0**-53


@njit(cache=True, nogil=True)
def rng_next(s):
    s = s + _GAMMA
    z = s
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return s, z


@njit(cache=True, nogil=True)
def _rng_unit(s):
    s, z = rng_next(s)
    return s, float(z >> _S11) * _UNIT


@njit(cache=True, nogil=True)
def _fnv(h, w):
    return (h ^ w) * _FNV_PRIME_U


@njit(cache=True, nogil=True)
def _quant(x):
    return np.int64(np.floor(x * POSITION_QUANT + 0.5))


@njit(cache=True, nogil=True)
def _in_exit_interval(ex_edge, ex_lo, ex_hi, edge, coord):
    """Index of the exit region on `edge` containing `coord`, or -1."""
    for e in range(ex_edge.shape[0]):
        if ex_edge[e] == edge and ex_lo[e] <= coord <= ex_hi[e]:
            return e
    return -1


@njit(cache=True, nogil=True)
def _compact(istate, bid, bkind, bx, by, bvx, bvy, brad, remove):
    """Drop flagged balls, preserving id order; updates the live count."""
    n = istate[I_N]
    w = 0
    for i in range(n):
        if not remove[i]:
            if w != i:
                bid[w] = bid[i]
                bkind[w] = bkind[i]
                bx[w] = bx[i]
                by[w] = by[i]
                bvx[w] = bvx[i]
                bvy[w] = bvy[i]
                brad[w] = brad[i]
            w += 1
    istate[I_N] = w


@njit(cache=True, nogil=True)
def _spawn_one(istate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
               drad, sp_lo, sp_hi, sp_off, k, ev_spawn, ev_counts, record):
    """Try to spawn one ball of kind k just above the top edge.

    x is drawn uniformly over the union of the kind's radius-inset spawn
    intervals.  A ball cannot materialize overlapping another ball: when
    the drawn spot is occupied the draw is spent but nothing spawns
    (returns -1; callers retry next tick).  Returns 0 when the kind has no
    spawnable width at all, 1 on success.
    """
    total = 0.0
    for r in range(sp_off[k], sp_off[k + 1]):
        total += sp_hi[r] - sp_lo[r]
    if total <= 0.0:
        return 0
    s, u = _rng_unit(ustate[U_RNG])
    ustate[U_RNG] = s
    t = u * total
    x = sp_lo[sp_off[k]] if sp_off[k] < sp_off[k + 1] else 0.0
    for r in range(sp_off[k], sp_off[k + 1]):
        w = sp_hi[r] - sp_lo[r]
        if t <= w or r == sp_off[k + 1] - 1:
            x = sp_lo[r] + min(t, w)
            break
        t -= w
    y = FIELD_H + drad[k]
    n = istate[I_N]
    for i in range(n):
        dx = bx[i] - x
        dy = by[i] - y
        rsum = brad[i] + drad[k]
        if dx * dx + dy * dy < rsum * rsum:
            return -1
    idx = n
    bid[idx] = istate[I_NEXT_ID]
    bkind[idx] = k
    bx[idx] = x
    by[idx] = y
    bvx[idx] = 0.0
    bvy[idx] = 0.0
    brad[idx] = drad[k]
    istate[I_NEXT_ID] += 1
    istate[I_N] += 1
    if record != 0:
        c = ev_counts[0]
        if c < ev_spawn.shape[0]:
            ev_spawn[c, 0] = istate[I_TICK]
            ev_spawn[c, 1] = bid[idx]
            ev_counts[0] = c + 1
    return 1


@njit(cache=True, nogil=True)
def _spawn_phase(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                 dcap, drad, spawn_rate, sp_lo, sp_hi, sp_off,
                 ev_spawn, ev_counts, record):
    """Per-kind spawning for one tick.

    Pending respawns are consumed immediately, limited only by the kind's
    on-screen cap (a removed ball is replaced as soon as there is room).
    The initial fill pours at spawn_rate via an accumulating credit until
    it has delivered the kind's cap worth of balls, then latches off for
    good; afterwards only queued respawns can spawn.
    """
    spawned = 0
    for k in range(2):
        count = 0
        n = istate[I_N]
        for i in range(n):
            if bkind[i] == k:
                count += 1
        while istate[I_PEND + k] > 0 and count < dcap[k]:
            got = _spawn_one(istate, ustate, bid, bkind, bx, by, bvx, bvy,
                             brad, drad, sp_lo, sp_hi, sp_off, k,
                             ev_spawn, ev_counts, record)
            if got != 1:
                break  # no width, or the spawn line is occupied: retry next tick
            istate[I_PEND + k] -= 1
            istate[I_CONSUMED + k] += 1
            count += 1
            spawned += 1
        if istate[I_FILL_DONE + k] == 0:
            fstate[F_CREDIT + k] += spawn_rate * DT
            while (fstate[F_CREDIT + k] >= 1.0 and count < dcap[k]
                   and istate[I_FILL + k] < dcap[k]):
                got = _spawn_one(istate, ustate, bid, bkind, bx, by, bvx, bvy,
                                 brad, drad, sp_lo, sp_hi, sp_off, k,
                                 ev_spawn, ev_counts, record)
                if got != 1:
                    break
                fstate[F_CREDIT + k] -= 1.0
                istate[I_FILL + k] += 1
                count += 1
                spawned += 1
            if fstate[F_CREDIT + k] > 1.0:
                fstate[F_CREDIT + k] = 1.0
            if istate[I_FILL + k] >= dcap[k]:
                istate[I_FILL_DONE + k] = 1
        if count > istate[I_MAX_SEEN + k]:
            istate[I_MAX_SEEN + k] = count
    return spawned


@njit(cache=True, nogil=True)
def _physics_core(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                  dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                  dsegs, ex_edge, ex_lo, ex_hi,
                  ev_spawn, ev_exit, ev_counts, remove, record):
    """One physics step: spawn, noise, integrate, collide, walls, exits.

    Exited balls are removed from the state; their (tick, id, region, kind)
    rows land in ev_exit so the caller can score them.  Returns the number
    of exited balls recorded this step.
    """
    gravity = dphys[0]
    restitution = dphys[1]
    noise_amp = dphys[2]
    spawn_rate = dphys[4]

    _spawn_phase(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                 dcap, drad, spawn_rate, sp_lo, sp_hi, sp_off,
                 ev_spawn, ev_counts, record)

    n = istate[I_N]

    # random impulses; balls still above the top edge fall in undisturbed
    if noise_amp > 0.0:
        s = ustate[U_RNG]
        for i in range(n):
            if by[i] > FIELD_H:
                continue
            s, u = _rng_unit(s)
            if u < NOISE_PROB:
                s, ud = _rng_unit(s)
                ang = 6.283185307179586 * ud
                bvx[i] += noise_amp * np.cos(ang)
                bvy[i] += noise_amp * np.sin(ang)
        ustate[U_RNG] = s

    # semi-implicit Euler
    for i in range(n):
        bvy[i] -= gravity * DT
        bx[i] += bvx[i] * DT
        by[i] += bvy[i] * DT

    n_seg = dsegs.shape[0]
    for _ in range(COLLISION_PASSES):
        # ball-ball: symmetric projection plus restitution-scaled impulse
        for i in range(n):
            for j in range(i + 1, n):
                dx = bx[i] - bx[j]
                dy = by[i] - by[j]
                rsum = brad[i] + brad[j]
                d2 = dx * dx + dy * dy
                if d2 < rsum * rsum:
                    d = np.sqrt(d2)
                    if d > 1e-12:
                        nx = dx / d
                        ny = dy / d
                    else:
                        nx = 1.0
                        ny = 0.0
                    half = 0.5 * (rsum - d)
                    bx[i] += nx * half
                    by[i] += ny * half
                    bx[j] -= nx * half
                    by[j] -= ny * half
                    vn = (bvx[i] - bvx[j]) * nx + (bvy[i] - bvy[j]) * ny
                    if vn < 0.0:
                        imp = -0.5 * (1.0 + restitution) * vn
                        bvx[i] += imp * nx
                        bvy[i] += imp * ny
                        bvx[j] -= imp * nx
                        bvy[j] -= imp * ny
        # grid segments as one-dimensional obstacles
        for i in range(n):
            for sgi in range(n_seg):
                ax = dsegs[sgi, 0]
                ay = dsegs[sgi, 1]
                abx = dsegs[sgi, 2] - ax
                aby = dsegs[sgi, 3] - ay
                ab2 = abx * abx + aby * aby
                if ab2 <= 0.0:
                    t = 0.0
                else:
                    t = ((bx[i] - ax) * abx + (by[i] - ay) * aby) / ab2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                cx = ax + t * abx
                cy = ay + t * aby
                dx = bx[i] - cx
                dy = by[i] - cy
                d2 = dx * dx + dy * dy
                r = brad[i]
                if d2 < r * r:
                    d = np.sqrt(d2)
                    if d > 1e-12:
                        nx = dx / d
                        ny = dy / d
                    else:
                        nx = 0.0
                        ny = 1.0
                    bx[i] += nx * (r - d)
                    by[i] += ny * (r - d)
                    vn = bvx[i] * nx + bvy[i] * ny
                    if vn < 0.0:
                        bvx[i] -= (1.0 + restitution) * vn * nx
                        bvy[i] -= (1.0 + restitution) * vn * ny
        # playfield walls; stretches covered by an exit region are open
        for i in range(n):
            r = brad[i]
            if bx[i] < r and _in_exit_interval(ex_edge, ex_lo, ex_hi, 1, by[i]) < 0:
                bx[i] = r
                if bvx[i] < 0.0:
                    bvx[i] = -restitution * bvx[i]
            if bx[i] > FIELD_W - r and _in_exit_interval(ex_edge, ex_lo, ex_hi, 2, by[i]) < 0:
                bx[i] = FIELD_W - r
                if bvx[i] > 0.0:
                    bvx[i] = -restitution * bvx[i]
            if by[i] < r and _in_exit_interval(ex_edge, ex_lo, ex_hi, 0, bx[i]) < 0:
                by[i] = r
                if bvy[i] < 0.0:
                    bvy[i] = -restitution * bvy[i]
            # the ceiling is solid only from inside; arriving spawns fall through
            if FIELD_H - r < by[i] <= FIELD_H and _in_exit_interval(ex_edge, ex_lo, ex_hi, 3, bx[i]) < 0:
                by[i] = FIELD_H - r
                if bvy[i] > 0.0:
                    bvy[i] = -restitution * bvy[i]

    # exits: a ball leaves when its center crosses an open edge stretch
    n_exited = 0
    if ex_edge.shape[0] > 0:
        for i in range(n):
            region = -1
            if by[i] < 0.0:
                region = _in_exit_interval(ex_edge, ex_lo, ex_hi, 0, bx[i])
            elif bx[i] < 0.0:
                region = _in_exit_interval(ex_edge, ex_lo, ex_hi, 1, by[i])
            elif bx[i] > FIELD_W:
                region = _in_exit_interval(ex_edge, ex_lo, ex_hi, 2, by[i])
            elif by[i] > FIELD_H and bvy[i] > 0.0:
                region = _in_exit_interval(ex_edge, ex_lo, ex_hi, 3, bx[i])
            if region >= 0:
                remove[i] = True
                istate[I_EXIT_REM + bkind[i]] += 1
                c = ev_counts[1]
                if c < ev_exit.shape[0]:
                    ev_exit[c, 0] = istate[I_TICK]
                    ev_exit[c, 1] = bid[i]
                    ev_exit[c, 2] = region
                    ev_exit[c, 3] = bkind[i]
                    ev_counts[1] = c + 1
                    n_exited += 1
            else:
                remove[i] = False
        if n_exited > 0:
            _compact(istate, bid, bkind, bx, by, bvx, bvy, brad, remove)
    return n_exited


@njit(cache=True, nogil=True)
def _components(istate, bid, bkind, bx, by, brad, slop, parent):
    """Union-find over same-kind contacts (distance <= r_i + r_j + slop).

    Fills `parent` with each ball's component root and returns an order-
    independent digest of the edge set (used for contacts_changed).
    """
    n = istate[I_N]
    for i in range(n):
        parent[i] = i
    h = np.uint64(FNV_OFFSET)
    for i in range(n):
        for j in range(i + 1, n):
            if bkind[i] != bkind[j]:
                continue
            dx = bx[i] - bx[j]
            dy = by[i] - by[j]
            rsum = brad[i] + brad[j] + slop
            if dx * dx + dy * dy <= rsum * rsum:
                ri = i
                while parent[ri] != ri:
                    parent[ri] = parent[parent[ri]]
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    parent[rj] = parent[parent[rj]]
                    rj = parent[rj]
                if ri != rj:
                    if ri < rj:
                        parent[rj] = ri
                    else:
                        parent[ri] = rj
                h = _fnv(h, np.uint64(bid[i]))
                h = _fnv(h, np.uint64(bid[j]))
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        parent[i] = r
    return h


@njit(cache=True, nogil=True)
def _burst_core(istate, bid, bkind, bx, by, bvx, bvy, brad,
                dthr, dburst, parent, sizes, remove,
                ev_burst, ev_counts, record):
    """Remove every component at or over its kind's threshold; score it.

    Score, pending-respawn queues, and audit counters update in place;
    returns the score delta.
    """
    n = istate[I_N]
    for i in range(n):
        sizes[i] = 0
    for i in range(n):
        sizes[parent[i]] += 1
    delta = 0
    any_removed = False
    for i in range(n):
        if sizes[parent[i]] >= dthr[bkind[i]]:
            remove[i] = True
            any_removed = True
        else:
            remove[i] = False
    # emit one event per bursting component, in first-member order
    for i in range(n):
        root = parent[i]
        if root == i and sizes[root] >= dthr[bkind[i]]:
            k = bkind[i]
            size = sizes[root]
            delta += size * dburst[k]
            istate[I_PEND + k] += size
            istate[I_QUEUED + k] += size
            istate[I_BURST_REM + k] += size
            if record != 0:
                c = ev_counts[2]
                if c < ev_burst.shape[0]:
                    ev_burst[c, 0] = istate[I_TICK]
                    ev_burst[c, 1] = k
                    ev_burst[c, 2] = size
                    ev_counts[2] = c + 1
    if any_removed:
        _compact(istate, bid, bkind, bx, by, bvx, bvy, brad, remove)
    istate[I_SCORE] += delta
    return delta


@njit(cache=True, nogil=True)
def _tap_core(istate, bid, bkind, bx, by, bvx, bvy, brad,
              dtapact, dtapscore, x, y, source, remove,
              ev_tap, ev_tap_xy, ev_counts):
    """Resolve one tap at (x, y): nearest hit ball wins, lower id on ties.

    Applies the hit kind's tap action and score; records the tap event.
    Returns the score delta.
    """
    n = istate[I_N]
    best = -1
    best_d2 = 1e300
    for i in range(n):
        dx = bx[i] - x
        dy = by[i] - y
        d2 = dx * dx + dy * dy
        lim = brad[i] + TAP_SLOP
        if d2 <= lim * lim and d2 < best_d2:
            best = i
            best_d2 = d2
    delta = 0
    outcome = OUT_MISS
    target = -1
    if best >= 0:
        k = bkind[best]
        target = bid[best]
        act = dtapact[k]
        if act == ACT_EXPLODE:
            # tap explosions do not queue a respawn; only cluster bursts
            # replace their balls
            delta = dtapscore[k]
            istate[I_TAPEXP_REM + k] += 1
            istate[I_TAP_HITS + k] += 1
            outcome = OUT_EXPLODED
            for i in range(n):
                remove[i] = i == best
            _compact(istate, bid, bkind, bx, by, bvx, bvy, brad, remove)
        elif act == ACT_DESTROY:
            delta = dtapscore[k]
            istate[I_DESTROY_REM + k] += 1
            istate[I_TAP_HITS + k] += 1
            outcome = OUT_DESTROYED
            for i in range(n):
                remove[i] = i == best
            _compact(istate, bid, bkind, bx, by, bvx, bvy, brad, remove)
        elif act == ACT_IMPULSE:
            delta = dtapscore[k]
            bvy[best] += IMPULSE_KICK
            istate[I_TAP_HITS + k] += 1
            outcome = OUT_IMPULSED
        else:
            outcome = OUT_NO_ACTION
    istate[I_SCORE] += delta
    c = ev_counts[3]
    if c < ev_tap.shape[0]:
        ev_tap[c, 0] = istate[I_TICK]
        ev_tap[c, 1] = source
        ev_tap[c, 2] = outcome
        ev_tap[c, 3] = target
        ev_tap[c, 4] = delta
        ev_tap_xy[c, 0] = x
        ev_tap_xy[c, 1] = y
        ev_counts[3] = c + 1
    return delta


@njit(cache=True, nogil=True)
def _hash_fold(istate, ustate, bid, bkind, bx, by):
    """Fold (tick, score, ball ids/kinds/quantized positions) into the chain."""
    h = ustate[U_HASH]
    h = _fnv(h, np.uint64(istate[I_TICK]))
    h = _fnv(h, np.uint64(istate[I_SCORE]))
    n = istate[I_N]
    h = _fnv(h, np.uint64(n))
    for i in range(n):
        h = _fnv(h, np.uint64(bid[i]))
        h = _fnv(h, np.uint64(bkind[i]))
        h = _fnv(h, np.uint64(_quant(bx[i])))
        h = _fnv(h, np.uint64(_quant(by[i])))
    ustate[U_HASH] = h


@njit(cache=True, nogil=True)
def _advance_clock(istate, duration_ticks):
    istate[I_TICK] += 1
    if duration_ticks > 0 and istate[I_TICK] >= duration_ticks:
        istate[I_FINISHED] = 1


@njit(cache=True, nogil=True)
def k_physics_step(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                   dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                   dsegs, ex_edge, ex_lo, ex_hi,
                   duration_ticks, ev_spawn, ev_exit, ev_counts,
                   scratch_remove, parent, hash_on):
    """Physics-only step: no taps, no exit scoring, no bursts.

    Advances the clock and, when hash_on, folds the post-physics state into
    the chain.  Also refreshes the contact-edge digest so contacts_changed
    can be reported.  Returns 1 if contacts changed.
    """
    _physics_core(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                  dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                  dsegs, ex_edge, ex_lo, ex_hi,
                  ev_spawn, ev_exit, ev_counts, scratch_remove, 1)
    h = _components(istate, bid, bkind, bx, by, brad, dphys[3], parent)
    changed = 1 if h != ustate[U_CONTACT] else 0
    ustate[U_CONTACT] = h
    if hash_on != 0:
        _hash_fold(istate, ustate, bid, bkind, bx, by)
    _advance_clock(istate, duration_ticks)
    return changed


@njit(cache=True, nogil=True)
def k_advance(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
              dthr, dburst, dtapact, dtapscore, dcap, drad, dphys,
              sp_lo, sp_hi, sp_off, dsegs,
              ex_edge, ex_lo, ex_hi, ex_score,
              duration_ticks, n_ticks,
              tap_tick, tap_mode, tap_x, tap_y, tap_target, tap_source, tap_start,
              ev_spawn, ev_exit, ev_burst, ev_tap, ev_tap_xy, ev_counts,
              scratch_remove, parent, sizes,
              record, hash_on, tick_deltas):
    """Run up to n_ticks full game ticks; the workhorse for batch play.

    Taps are consumed from the sorted schedule starting at tap_start.
    Returns (ticks_done, taps_consumed).  Stops early when the game
    finishes or when an event buffer is too full to guarantee the next
    tick fits (callers drain buffers and continue).

    When tick_deltas is non-empty it receives the per-tick score delta.
    """
    cap = bid.shape[0]
    ti = tap_start
    done = 0
    for _ in range(n_ticks):
        if istate[I_FINISHED] != 0:
            break
        # conservative headroom so a tick never overflows a buffer; the tap
        # buffer is caller-sized to hold the whole schedule
        if (ev_counts[0] + cap > ev_spawn.shape[0]
                or ev_counts[1] + cap > ev_exit.shape[0]
                or ev_counts[2] + cap > ev_burst.shape[0]):
            break
        tick = istate[I_TICK]
        delta = 0
        while ti < tap_tick.shape[0] and tap_tick[ti] <= tick:
            if tap_tick[ti] == tick:
                x = tap_x[ti]
                y = tap_y[ti]
                ok = True
                if tap_mode[ti] == TAP_TARGETED:
                    ok = False
                    for i in range(istate[I_N]):
                        if bid[i] == tap_target[ti]:
                            x = bx[i]
                            y = by[i]
                            ok = True
                            break
                if ok:
                    delta += _tap_core(istate, bid, bkind, bx, by, bvx, bvy, brad,
                                       dtapact, dtapscore, x, y, tap_source[ti],
                                       scratch_remove, ev_tap, ev_tap_xy, ev_counts)
            ti += 1
        exit_base = ev_counts[1]
        _physics_core(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                      dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                      dsegs, ex_edge, ex_lo, ex_hi,
                      ev_spawn, ev_exit, ev_counts, scratch_remove, record)
        for e in range(exit_base, ev_counts[1]):
            delta += ex_score[ev_exit[e, 2], ev_exit[e, 3]]
            istate[I_SCORE] += ex_score[ev_exit[e, 2], ev_exit[e, 3]]
        h = _components(istate, bid, bkind, bx, by, brad, dphys[3], parent)
        ustate[U_CONTACT] = h
        delta += _burst_core(istate, bid, bkind, bx, by, bvx, bvy, brad,
                             dthr, dburst, parent, sizes, scratch_remove,
                             ev_burst, ev_counts, record)
        if hash_on != 0:
            _hash_fold(istate, ustate, bid, bkind, bx, by)
        if tick_deltas.shape[0] > 0:
            tick_deltas[done] = delta
        _advance_clock(istate, duration_ticks)
        done += 1
    return done, ti - tap_start


@njit(cache=True, nogil=True)
def k_physics_raw(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy, brad,
                  dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                  dsegs, ex_edge, ex_lo, ex_hi,
                  ev_spawn, ev_exit, ev_counts, scratch_remove):
    """Physics core alone: no clock, no hash, no contact refresh.

    Lets the rules layer compose a full tick out of the same compiled
    pieces k_advance runs, in the same order.
    """
    return _physics_core(istate, fstate, ustate, bid, bkind, bx, by, bvx, bvy,
                         brad, dcap, drad, dphys, sp_lo, sp_hi, sp_off,
                         dsegs, ex_edge, ex_lo, ex_hi,
                         ev_spawn, ev_exit, ev_counts, scratch_remove, 1)


@njit(cache=True, nogil=True)
def k_refresh_contact_hash(istate, ustate, bid, bkind, bx, by, brad, slop, parent):
    """Recompute the contact-edge digest; returns 1 if it changed."""
    h = _components(istate, bid, bkind, bx, by, brad, slop, parent)
    changed = 1 if h != ustate[U_CONTACT] else 0
    ustate[U_CONTACT] = h
    return changed


@njit(cache=True, nogil=True)
def k_fold_hash(istate, ustate, bid, bkind, bx, by):
    _hash_fold(istate, ustate, bid, bkind, bx, by)


@njit(cache=True, nogil=True)
def k_advance_clock(istate, duration_ticks):
    _advance_clock(istate, duration_ticks)


@njit(cache=True, nogil=True)
def k_contact_edges(istate, bid, bkind, bx, by, brad, slop, edges_out):
    """Same-kind contact edges as (id_i, id_j) rows; returns the edge count."""
    n = istate[I_N]
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            if bkind[i] != bkind[j]:
                continue
            dx = bx[i] - bx[j]
            dy = by[i] - by[j]
            rsum = brad[i] + brad[j] + slop
            if dx * dx + dy * dy <= rsum * rsum:
                if m < edges_out.shape[0]:
                    edges_out[m, 0] = bid[i]
                    edges_out[m, 1] = bid[j]
                m += 1
    return m


@njit(cache=True, nogil=True)
def k_tap(istate, bid, bkind, bx, by, bvx, bvy, brad,
          dtapact, dtapscore, x, y, source,
          scratch_remove, ev_tap, ev_tap_xy, ev_counts):
    """Single-tap entry point used by the rules API."""
    return _tap_core(istate, bid, bkind, bx, by, bvx, bvy, brad,
                     dtapact, dtapscore, x, y, source,
                     scratch_remove, ev_tap, ev_tap_xy, ev_counts)
