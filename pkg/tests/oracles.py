"""Plain-Python reference implementations, written without reusing library code."""

import math


def scores_oracle(cos_rows, use_entropy=True):
    """Direct loop evaluation of the entropy-damped score matrix."""
    halves = [[(1.0 + c) / 2.0 for c in row] for row in cos_rows]
    ents = []
    probs = []
    for row in halves:
        z = sum(row)
        p = [h / z for h in row]
        probs.append(p)
        ents.append(-sum(q * math.log(q) for q in p if q > 0))
    hbar = sum(ents) / len(ents)
    out = []
    for row, h in zip(halves, ents):
        damp = 1.0 / (1.0 + math.exp(-(hbar - h))) if use_entropy else 1.0
        out.append([v * damp for v in row])
    return out, probs, ents


def lse(values):
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def objective_oracle(score_rows, col_of, edges, subset, clubsuit=1.0, coverage=True):
    """score_rows[k][col_of[d]]; edges is a dict {(a, b): w} with a < b."""
    o1 = 0.0
    for row in score_rows:
        vals = [row[col_of[d]] for d in subset]
        o1 += lse(vals) if coverage else sum(vals)
    o2 = 0.0
    for d in subset:
        ws = []
        for d2 in subset:
            if d2 == d:
                continue
            w = edges.get((min(d, d2), max(d, d2)), 0.0)
            if w > 0:
                ws.append(w)
        if ws:
            o2 += lse(ws)
    return o1 + clubsuit * o2


def round_robin_oracle(rank_lists, n_cand):
    """Cursor simulation: each pass gives every probe its next unseen document."""
    out = []
    cursors = [0] * len(rank_lists)
    while len(out) < n_cand:
        moved = False
        for i, r in enumerate(rank_lists):
            if len(out) == n_cand:
                break
            while cursors[i] < len(r) and r[cursors[i]] in out:
                cursors[i] += 1
            if cursors[i] < len(r):
                out.append(r[cursors[i]])
                cursors[i] += 1
                moved = True
        if not moved:
            break
    return out
