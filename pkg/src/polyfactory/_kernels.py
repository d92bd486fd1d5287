"""Compiled round functions for the batch samplers.

Every round function mirrors its pure-Python sampler draw for draw.  Buffers
are the raw words of the coin stream (slot 0) and the external stream
(slot 1); ``st = [coin_pos, ext_pos, starved]``.  A round that runs out of
words sets ``starved`` to one plus its slot; the driver rewinds to the start of the round and
asks Python for more words, so outcomes never depend on buffer sizes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)

# The kernels never allocate, so reference counting is switched off; with it
# on, every helper call that takes arrays costs more than the work it does.
_jit = njit(cache=True, _nrt=False)


@_jit
def _word(buf, st, slot):
    p = st[slot]
    u = U0
    if p < buf.shape[0]:
        u = buf[p]
        st[slot] = p + 1
    else:
        st[2] = 1 + slot
    return u


@_jit
def _bern_tail(num, den, buf, st, slot):
    """Continue the comparison after the first 64 bits tied."""
    while True:
        chunk = U0
        for _ in range(64):
            num = num << U1
            chunk = chunk << U1
            if num >= den:
                num = num - den
                chunk = chunk | U1
        u = _word(buf, st, slot)
        if st[2]:
            return 0
        if u < chunk:
            return 1
        if u > chunk or num == U0:
            return 0


@_jit
def _bern(kind, t, r, den, buf, st, slot):
    res = 0
    if kind == U1:
        res = 1
    elif kind != U0:
        u = _word(buf, st, slot)
        if u < t:
            res = 1
        elif u == t and r != U0 and st[2] == 0:
            res = _bern_tail(r, den, buf, st, slot)
    return res


@_jit
def _uniform(m, buf, st):
    res = 0
    if m > 1:
        bits = 0
        v = m - 1
        while v > 0:
            bits += 1
            v >>= 1
        shift = np.uint64(64 - bits)
        um = np.uint64(m)
        u = um
        while u >= um and st[2] == 0:
            u = _word(buf, st, 1) >> shift
        res = np.int64(u)
    return res


@_jit
def _flip(i, cp, cbuf, st, tally):
    tally[i] += 1
    return _bern(cp[i, 0], cp[i, 1], cp[i, 2], cp[i, 3], cbuf, st, 0)


@_jit
def race_round(P, cp, cbuf, ebuf, st, tally):
    starts, chain, ea, eb = P
    nverts = starts.shape[0] - 1
    v = _uniform(nverts, ebuf, st)
    if st[2]:
        return -1
    chosen = -1
    for j in range(starts[v], starts[v + 1]):
        if _bern(chain[j, 0], chain[j, 1], chain[j, 2], chain[j, 3], ebuf, st, 1):
            chosen = j
            break
        if st[2]:
            return -1
    if chosen < 0:
        return -1
    n = ea.shape[1]
    for i in range(n):
        for _ in range(ea[chosen, i]):
            if _flip(i, cp, cbuf, st, tally) != 1:
                return -1
        for _ in range(eb[chosen, i]):
            if _flip(i, cp, cbuf, st, tally) != 0:
                return -1
    if st[2]:
        return -1
    return v


@_jit
def generic_round(P, cp, cbuf, ebuf, st, tally):
    """One iteration of the uniform-vertex generic sampler."""
    pattern, accept = P
    nverts, n = pattern.shape
    v = _uniform(nverts, ebuf, st)
    if st[2]:
        return -1
    for i in range(n):
        want = pattern[v, i]
        if want != 2:
            if _flip(i, cp, cbuf, st, tally) != want:
                return -1
    for i in range(n):
        if pattern[v, i] == 2:
            if _flip(i, cp, cbuf, st, tally) != 1:
                return -1
            if _flip(i, cp, cbuf, st, tally) != 0:
                return -1
    if _bern(accept[v, 0], accept[v, 1], accept[v, 2], accept[v, 3], ebuf, st, 1) != 1:
        return -1
    if st[2]:
        return -1
    return v


@_jit
def _prufer_parents(n, ebuf, st, parent, seq, degree, adj, queue):
    """Uniform labelled tree from a random Pruefer code, oriented toward vertex 0."""
    for i in range(n):
        degree[i] = 1
        parent[i] = -1
    for t in range(n - 2):
        seq[t] = _uniform(n, ebuf, st)
        if st[2]:
            return
        degree[seq[t]] += 1
    # adj[u, 0] holds the neighbour count
    for i in range(n):
        adj[i, 0] = 0
    for t in range(n - 2):
        leaf = 0
        while degree[leaf] != 1:
            leaf += 1
        x = seq[t]
        adj[leaf, 0] += 1
        adj[leaf, adj[leaf, 0]] = x
        adj[x, 0] += 1
        adj[x, adj[x, 0]] = leaf
        degree[leaf] -= 1
        degree[x] -= 1
    u = -1
    for i in range(n):
        if degree[i] == 1:
            if u < 0:
                u = i
            else:
                adj[u, 0] += 1
                adj[u, adj[u, 0]] = i
                adj[i, 0] += 1
                adj[i, adj[i, 0]] = u
                break
    head = 0
    tail = 1
    queue[0] = 0
    parent[0] = 0
    while head < tail:
        a = queue[head]
        head += 1
        for t in range(1, adj[a, 0] + 1):
            c = adj[a, t]
            if parent[c] < 0:
                parent[c] = a
                queue[tail] = c
                tail += 1


@_jit
def matching_round(P, cp, cbuf, ebuf, st, tally):
    perm, parent, seq, degree, adj, queue = P
    n = perm.shape[0]
    for i in range(n):
        perm[i] = i
    for i in range(n - 1, 0, -1):
        j = _uniform(i + 1, ebuf, st)
        if st[2]:
            return -1
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    for i in range(n):
        if _flip(i * n + perm[i], cp, cbuf, st, tally) != 1:
            return -1
    if n > 1:
        _prufer_parents(n, ebuf, st, parent, seq, degree, adj, queue)
        if st[2]:
            return -1
        for u in range(1, n):
            if _flip(u * n + perm[parent[u]], cp, cbuf, st, tally) != 1:
                return -1
    if st[2]:
        return -1
    code = 0
    for i in range(n - 1, -1, -1):
        code = code * n + perm[i]
    return code


@_jit
def subset_round(P, cp, cbuf, ebuf, st, tally):
    """Coin-first k-subset samplers.

    variant 0: k ones, one of them re-flipped must read 0 (output the k-set);
    variant 1: k+1 ones, re-flip must read 0, output the rest (k-set);
    variant 2: k+1 ones, re-flip must read 0, that index becomes fractional.
    Codes: ones-mask, plus ``frac * 2^n`` offset by one for variant 2.
    """
    params, ones = P
    n = params[0]
    k = params[1]
    variant = params[2]
    cnt = 0
    for i in range(n):
        if _flip(i, cp, cbuf, st, tally) == 1:
            ones[cnt] = i
            cnt += 1
    if st[2]:
        return -1
    need = k if variant == 0 else k + 1
    if cnt != need:
        return -1
    pick = ones[_uniform(cnt, ebuf, st)]
    if st[2]:
        return -1
    if _flip(pick, cp, cbuf, st, tally) != 0:
        return -1
    if st[2]:
        return -1
    mask = 0
    for t in range(cnt):
        mask |= 1 << ones[t]
    if variant == 0:
        return mask
    mask ^= 1 << pick
    if variant == 1:
        return mask
    return ((pick + 1) << n) | mask


@_jit
def pattern_round(P, cp, cbuf, ebuf, st, tally):
    """Uniform vertex, ones then zeros then the fractional index (0 then 1)."""
    pattern, = P
    nverts, n = pattern.shape
    v = _uniform(nverts, ebuf, st)
    if st[2]:
        return -1
    for want in (1, 0):
        for i in range(n):
            if pattern[v, i] == want:
                if _flip(i, cp, cbuf, st, tally) != want:
                    return -1
    for i in range(n):
        if pattern[v, i] == 2:
            if _flip(i, cp, cbuf, st, tally) != 0:
                return -1
            if _flip(i, cp, cbuf, st, tally) != 1:
                return -1
    if st[2]:
        return -1
    return v


@_jit
def drive(round_fn, P, cp, cbuf, ebuf, st, prog, counts, tally, out_code, out_rounds, out_flips, budget):
    """Run rounds until every requested sample is filled or a buffer runs dry.

    ``prog = [sample, rounds_so_far, flips_so_far]``.  Returns 0 when done,
    otherwise 1 + the slot of the buffer that needs more words.
    """
    total = out_code.shape[0]
    n = tally.shape[0]
    while prog[0] < total:
        c0 = st[0]
        e0 = st[1]
        for i in range(n):
            tally[i] = 0
        res = round_fn(P, cp, cbuf, ebuf, st, tally)
        if st[2]:
            starved = st[2]
            st[0] = c0
            st[1] = e0
            st[2] = 0
            return starved
        f = 0
        for i in range(n):
            counts[i] += tally[i]
            f += tally[i]
        prog[1] += 1
        prog[2] += f
        if res >= 0 or (budget > 0 and prog[1] >= budget):
            s = prog[0]
            out_code[s] = res
            out_rounds[s] = prog[1]
            out_flips[s] = prog[2]
            prog[0] = s + 1
            prog[1] = 0
            prog[2] = 0
    return 0
