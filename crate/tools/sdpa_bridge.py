#!/usr/bin/env python3
"""Solve an SDPA sparse (.dat-s) file with cvxpy and write SDPA-style output.

usage: sdpa_bridge.py INPUT.dat-s OUTPUT

The LMI problem read is

    minimize  c^T x   subject to  sum_k F_k x_k - F_0  PSD (block diagonal)

and OUTPUT receives `phase.value`, `objValPrimal` and `objValDual` lines.
"""

import re
import sys

import cvxpy as cp
import numpy as np


def tokens(text):
    out = []
    for line in text.splitlines():
        if line.lstrip().startswith(('"', "*")):
            continue
        out.extend(re.sub(r"[,{}()]", " ", line).split())
    return out


def read(path):
    toks = tokens(open(path).read())
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return toks[pos - 1]

    m = int(take())
    nb = int(take())
    sizes = [int(take()) for _ in range(nb)]
    c = np.array([float(take()) for _ in range(m)])
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    while pos < len(toks):
        k, b, i, j = (int(take()) for _ in range(4))
        v = float(take())
        mats[k][b - 1][i - 1, j - 1] = v
        mats[k][b - 1][j - 1, i - 1] = v
    return c, sizes, mats


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    c, sizes, mats = read(sys.argv[1])
    m = len(c)
    x = cp.Variable(m)
    cons = []
    for b, s in enumerate(sizes):
        expr = -mats[0][b]
        for k in range(m):
            if np.any(mats[k + 1][b]):
                expr = expr + x[k] * mats[k + 1][b]
        if s < 0:
            # SDPA has no equality constraints; a pair of diagonal rows with
            # opposite coefficients stands for one. Clarabel needs it back as
            # an equality, since the pair leaves the LMI without interior.
            rows = np.array([[mats[k][b][i, i] for k in range(m + 1)] for i in range(-s)])
            paired = set()
            for i in range(-s):
                if i in paired or not np.any(rows[i]):
                    continue
                for j in range(i + 1, -s):
                    if j not in paired and np.array_equal(rows[j], -rows[i]):
                        paired.update((i, j))
                        cons.append(expr[i, i] == 0)
                        break
            rest = [i for i in range(-s) if i not in paired]
            if rest:
                cons.append(cp.hstack([expr[i, i] for i in rest]) >= 0)
        else:
            cons.append((expr + expr.T) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    # Clarabel sometimes stops just short of its tolerances on PSD blocks
    # (status optimal_inaccurate); CVXOPT is tried before giving up.
    for solver in (cp.CLARABEL, cp.CVXOPT):
        try:
            prob.solve(solver=solver)
        except cp.error.SolverError:
            continue
        if prob.status in (cp.OPTIMAL, cp.INFEASIBLE, cp.UNBOUNDED):
            break
    if prob.status == cp.OPTIMAL:
        phase, primal = "pdOPT", float(prob.value)
        dual = primal
    elif prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        phase, primal, dual = "pINF_dFEAS", float("inf"), float("inf")
    elif prob.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        phase, primal, dual = "pFEAS_dINF", float("-inf"), float("-inf")
    else:
        phase, primal, dual = "noINFO", float("nan"), float("nan")
    with open(sys.argv[2], "w") as f:
        f.write(f"phase.value  = {phase}\n")
        f.write(f"objValPrimal = {float(primal)!r}\n")
        f.write(f"objValDual   = {float(dual)!r}\n")


if __name__ == "__main__":
    main()
