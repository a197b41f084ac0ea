"""Pure-Python kernels; the fallback when the compiled ``_core`` is absent.

Both modules expose the same two functions with the same argument
layout and must agree bit-for-bit on ``run_events`` and to rounding on
``population_weights`` (same summation order, so in practice exactly).

Layout conventions shared with ``_core.pyx``:

* payoffs are integers (game payoffs times a common denominator), so
  ties between sample totals are detected exactly;
* a reviser population sees ``S`` opponent outcomes per trial.  Outcome
  ``s`` has probability ``coef[s] * prod_f alpha[f] ** counts[s, f]``
  over the flat state vector ``alpha``;
* ``tie_mode`` 0 splits uniformly among co-winners, 1 awards the
  co-winner with the smallest ``rank``.
"""
import numpy as np

OK = 0
CAP_EXCEEDED = 1


def _compress(pairs):
    out = {}
    for v, p in pairs:
        out[v] = out.get(v, 0.0) + p
    keys = sorted(out)
    return keys, [out[v] for v in keys]


def population_weights(alpha, opp_counts, coef, pay, k, tie_mode, rank, cap):
    """Probability that each tested action attains the best k-trial total.

    Returns ``(w, status)``; ``status`` is ``CAP_EXCEEDED`` when the joint
    support product exceeds ``cap``.
    """
    alpha = [float(x) for x in alpha]
    n_out, n_flat = opp_counts.shape
    m = pay.shape[0]
    q = []
    for s in range(n_out):
        prob = float(coef[s])
        row = opp_counts[s]
        for f in range(n_flat):
            c = int(row[f])
            if c:
                prob *= alpha[f] ** c
        q.append(prob)

    values, probs = [], []
    for a in range(m):
        tv, tp = _compress((int(pay[a, s]), q[s]) for s in range(n_out) if q[s] > 0.0)
        dv, dp = tv, tp
        for _ in range(k - 1):
            dv, dp = _compress(
                (x + y, px * py) for x, px in zip(dv, dp) for y, py in zip(tv, tp)
            )
        values.append(dv)
        probs.append(dp)

    total = 1
    for dv in values:
        total *= len(dv)
    w = np.zeros(m)
    if total > cap:
        return w, CAP_EXCEEDED

    sizes = [len(dv) for dv in values]
    idx = [0] * m
    winners = [0] * m
    for _ in range(total):
        prob = 1.0
        best = None
        nwin = 0
        for a in range(m):
            prob *= probs[a][idx[a]]
            v = values[a][idx[a]]
            if best is None or v > best:
                best = v
                winners[0] = a
                nwin = 1
            elif v == best:
                winners[nwin] = a
                nwin += 1
        if nwin == 1:
            w[winners[0]] += prob
        elif tie_mode == 0:
            share = prob / nwin
            for t in range(nwin):
                w[winners[t]] += share
        else:
            top = winners[0]
            for t in range(1, nwin):
                if rank[winners[t]] < rank[top]:
                    top = winners[t]
            w[top] += prob
        # odometer, last action fastest
        a = m - 1
        while a >= 0:
            idx[a] += 1
            if idx[a] < sizes[a]:
                break
            idx[a] = 0
            a -= 1
    return w, OK


def _draw(counts, off, size, pop_n, u):
    target = int(u * pop_n)
    acc = 0
    for b in range(size):
        acc += counts[off + b]
        if target < acc:
            return b
    return size - 1


def run_events(counts, offsets, sizes, pop_n, slot_pop, strides, pay, pay_off,
               k, tie_mode, rank, uniforms):
    """Apply ``len(uniforms)`` revision events to ``counts`` in place.

    Each row of ``uniforms`` drives one event: column 0 picks the
    revising population, column 1 the revising agent, column 2 breaks
    ties and the remaining columns draw opponents, ``k * n_slots`` per
    tested action.
    """
    n_pop = len(offsets)
    n_slots = slot_pop.shape[1]
    cnt = [int(c) for c in counts]
    offsets = [int(x) for x in offsets]
    sizes = [int(x) for x in sizes]
    pop_n = [int(x) for x in pop_n]
    slot_pop_l = [[int(x) for x in row] for row in slot_pop]
    strides_l = [[int(x) for x in row] for row in strides]
    pay_l = [int(x) for x in pay]
    pay_off_l = [int(x) for x in pay_off]
    rank_l = [int(x) for x in rank]
    ncode = [0] * n_pop
    for p in range(n_pop):
        c = 1
        for s in range(n_slots):
            c *= sizes[slot_pop_l[p][s]]
        ncode[p] = c
    totals = [0] * max(sizes)
    winners = [0] * max(sizes)
    for row in uniforms:
        row = row.tolist()
        p = min(int(row[0] * n_pop), n_pop - 1)
        off = offsets[p]
        m = sizes[p]
        old = _draw(cnt, off, m, pop_n[p], row[1])
        col = 3
        base = pay_off_l[p]
        for a in range(m):
            tot = 0
            for _ in range(k):
                code = 0
                for s in range(n_slots):
                    j = slot_pop_l[p][s]
                    b = _draw(cnt, offsets[j], sizes[j], pop_n[j], row[col])
                    col += 1
                    code += b * strides_l[p][s]
                tot += pay_l[base + a * ncode[p] + code]
            totals[a] = tot
        best = totals[0]
        nwin = 1
        winners[0] = 0
        for a in range(1, m):
            if totals[a] > best:
                best = totals[a]
                winners[0] = a
                nwin = 1
            elif totals[a] == best:
                winners[nwin] = a
                nwin += 1
        if nwin == 1:
            new = winners[0]
        elif tie_mode == 0:
            new = winners[min(int(row[2] * nwin), nwin - 1)]
        else:
            new = winners[0]
            for t in range(1, nwin):
                if rank_l[off + winners[t]] < rank_l[off + new]:
                    new = winners[t]
        cnt[off + old] -= 1
        cnt[off + new] += 1
    counts[:] = cnt
