#!/usr/bin/env python3
"""Independent straight-line model of the sampling wrapper + binary-search
mechanism, used once to freeze the calibration golden file.

It shares no code with the Rust crate. It generates the calibration corpus
with its own RNG, computes OPT by subset DP, and computes the *exact*
expected welfare of the final mechanism by enumerating every realization of
the coins (sample membership, branch coin, round assignments, final round).

Usage: python3 straight_line_mechanism.py <out_dir>
"""

import json
import math
import os
import random
import sys
from itertools import product


def popcount(x):
    return bin(x).count("1")


def value_table(bidder, m):
    full = 1 << m
    table = [0.0] * full
    kind = bidder["kind"]
    for s in range(full):
        items = [e for e in range(m) if s >> e & 1]
        if kind == "additive":
            table[s] = float(sum(bidder["values"][e] for e in items))
        elif kind == "xos":
            table[s] = float(max(sum(c[e] for e in items) for c in bidder["clauses"]))
        else:
            raise ValueError(kind)
    return table


def candidate_prices(psi, m):
    logm = max(1, math.ceil(math.log2(m))) if m > 1 else 1
    raw = 3 * logm + 1
    size = 1
    while size < raw:
        size *= 2
    positives = sorted(psi * 2.0 ** (-j) for j in range(1, size))
    return [0.0] + positives


def price_of(prices, s, m):
    total = 0.0
    for e in range(m):
        if s >> e & 1:
            total += prices[e]
    return total


def demand(table, prices, available, m):
    best = 0
    best_u = table[0] - 0.0
    # submasks in increasing numeric order
    sub = 0
    while True:
        u = table[sub] - price_of(prices, sub, m)
        if u > best_u or (u == best_u and (popcount(sub) < popcount(best)
                                           or (popcount(sub) == popcount(best) and sub < best))):
            best, best_u = sub, u
        if sub == available:
            break
        sub = (sub - available) & available
    return best


def fpa(tables, order, prices, m):
    remaining = (1 << m) - 1
    alloc = {}
    for i in order:
        a = demand(tables[i], prices, remaining, m)
        alloc[i] = a
        remaining &= ~a
    return alloc


def welfare(tables, alloc):
    return sum(tables[i][a] for i, a in alloc.items())


def bsm_all_rounds(tables, participants, rounds, psi, m):
    """Run all beta+1 rounds for one round assignment; return the welfare of
    each round's allocation (index l-1 for round l)."""
    b = candidate_prices(psi, m)
    beta = int(math.log2(len(b)))
    lo = [0] * m
    k = len(b)
    out = []
    for ell in range(1, beta + 1):
        prices = [b[lo[e] + k // 2] for e in range(m)]
        order = [i for i in participants if rounds[i] == ell]
        alloc = fpa(tables, order, prices, m)
        sold = 0
        for a in alloc.values():
            sold |= a
        for e in range(m):
            if sold >> e & 1:
                lo[e] = lo[e] + k // 2
        k //= 2
        out.append(welfare(tables, alloc))
    assert k == 1
    prices = [b[lo[e]] for e in range(m)]
    order = [i for i in participants if rounds[i] == beta + 1]
    out.append(welfare(tables, fpa(tables, order, prices, m)))
    return out


def expected_bsm(tables, participants, psi, m):
    beta = int(math.log2(len(candidate_prices(psi, m))))
    total = 0.0
    count = 0
    for assign in product(range(1, beta + 2), repeat=len(participants)):
        rounds = dict(zip(participants, assign))
        per_round = bsm_all_rounds(tables, participants, rounds, psi, m)
        total += sum(per_round) / (beta + 1)
        count += 1
    return total / count


def expected_final(tables, m):
    n = len(tables)
    full = (1 << m) - 1
    grand = [t[full] for t in tables]
    total = 0.0
    for mask in range(1 << n):
        sample = [i for i in range(n) if mask >> i & 1]
        rest = [i for i in range(n) if not mask >> i & 1]
        sp = max((grand[i] for i in sample), default=0.0)
        psi = sp
        if not sample or psi == 0.0:
            mech = 0.0
        else:
            mech = expected_bsm(tables, rest, psi, m)
        total += 0.5 * sp + 0.5 * mech
    return total / (1 << n)


def optimum(tables, m):
    full = 1 << m
    best = [0.0] * full
    for t in tables:
        nxt = [0.0] * full
        for s in range(full):
            v = best[s]
            sub = s
            while True:
                cand = t[sub] + best[s & ~sub]
                if cand > v:
                    v = cand
                if sub == 0:
                    break
                sub = (sub - 1) & s
            nxt[s] = v
        best = nxt
    return best[full - 1]


def gen_additive(rng, n, m, hi):
    return {"m": m, "bidders": [{"kind": "additive", "values": [rng.randint(0, hi) for _ in range(m)]}
                                for _ in range(n)]}


def gen_xos(rng, n, m, k, hi):
    return {"m": m, "bidders": [{"kind": "xos",
                                 "clauses": [[rng.randint(0, hi) for _ in range(m)] for _ in range(k)]}
                                for _ in range(n)]}


def main():
    out_dir = sys.argv[1]
    inst_dir = os.path.join(out_dir, "instances")
    os.makedirs(inst_dir, exist_ok=True)
    rng = random.Random(20240607)
    corpus = [("two-by-two", {"m": 2, "bidders": [{"kind": "additive", "values": [3, 1]},
                                                  {"kind": "additive", "values": [2, 2]}]})]
    for idx in range(20):
        corpus.append((f"additive-{idx:02}", gen_additive(rng, 4, 8, 16)))
    for idx in range(20):
        corpus.append((f"xos-{idx:02}", gen_xos(rng, 4, 8, 3, 8)))

    golden = []
    for name, inst in corpus:
        with open(os.path.join(inst_dir, name + ".json"), "w") as fh:
            json.dump(inst, fh)
            fh.write("\n")
        tables = [value_table(b, inst["m"]) for b in inst["bidders"]]
        opt = optimum(tables, inst["m"])
        exp = expected_final(tables, inst["m"])
        golden.append({"instance_id": name, "opt_welfare": opt, "expected_welfare": exp,
                       "ratio": exp / opt if opt > 0 else 1.0})
        print(f"{name}: opt={opt} E[welfare]={exp:.6f} ratio={golden[-1]['ratio']:.6f}")

    with open(os.path.join(out_dir, "golden.json"), "w") as fh:
        json.dump({"mechanism": "final", "trials": 10000, "entries": golden}, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
