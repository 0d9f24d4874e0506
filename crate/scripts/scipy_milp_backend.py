#!/usr/bin/env python3
"""External solver adapter backed by scipy.optimize.milp (HiGHS).

Usage: scipy_milp_backend.py MODEL.lp SOLUTION.txt

Reads the LP subset written by the ies-milp exporter and writes the
key=value solution file the external backend expects.
"""

import math
import os
import re
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

TOKEN = re.compile(r"<=|>=|=<|=>|=|<|>|:|[+-]|[^\s:+<>=-]+")
SECTIONS = {
    "minimize": "obj",
    "subject to": "st",
    "bounds": "bounds",
    "binaries": "bin",
    "end": "end",
}


def number(tok):
    low = tok.lower()
    if low in ("inf", "infinity"):
        return math.inf
    return float(tok)


def is_number(tok):
    try:
        number(tok)
        return True
    except ValueError:
        return False


def split_sections(text):
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0]
        key = line.strip().lower()
        if key in SECTIONS:
            current = SECTIONS[key]
            sections.setdefault(current, [])
            continue
        if line.strip() and current:
            sections[current].append(line)
    return sections


def parse_linear(tokens, index):
    """Returns (name, {var: coef}, constant, rel, rhs)."""
    name = None
    if len(tokens) > 1 and tokens[1] == ":":
        name = tokens[0]
        tokens = tokens[2:]
    coefs, constant, sign, coef = {}, 0.0, 1.0, None
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t == "+":
            pass
        elif t == "-":
            sign = -sign
        elif t in ("<=", ">=", "=", "<", ">", "=<", "=>"):
            if coef is not None:
                constant += sign * coef
            rel = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(t, t)
            rest = tokens[i + 1:]
            s = -1.0 if rest.count("-") % 2 else 1.0
            rhs = s * number([r for r in rest if r not in "+-"][0])
            return name, coefs, constant, rel, rhs
        elif is_number(t):
            coef = number(t)
        else:
            index.setdefault(t, len(index))
            coefs[t] = coefs.get(t, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        i += 1
    if coef is not None:
        constant += sign * coef
    return name, coefs, constant, None, None


def main():
    lp_path, sol_path = sys.argv[1], sys.argv[2]
    with open(lp_path, encoding="utf-8") as fh:
        sections = split_sections(fh.read())
    index = {}
    obj_tokens = TOKEN.findall(" ".join(sections.get("obj", [])))
    _, obj, offset, _, _ = parse_linear(obj_tokens, index)

    rows, stmt = [], []
    for line in sections.get("st", []):
        stmt.extend(TOKEN.findall(line))
        if any(t in ("<=", ">=", "=") for t in stmt) and is_number(stmt[-1]):
            rows.append(parse_linear(stmt, index))
            stmt = []

    bounds = {}
    for line in sections.get("bounds", []):
        toks = [t for t in TOKEN.findall(line)]
        folded, neg = [], False
        for t in toks:
            if t == "-":
                neg = not neg
            elif t == "+":
                continue
            elif is_number(t):
                folded.append(-number(t) if neg else number(t))
                neg = False
            else:
                folded.append(t)
        if len(folded) == 2 and str(folded[1]).lower() == "free":
            index.setdefault(folded[0], len(index))
            bounds[folded[0]] = (-math.inf, math.inf)
        elif len(folded) == 5:
            index.setdefault(folded[2], len(index))
            bounds[folded[2]] = (folded[0], folded[4])
        elif len(folded) == 3 and folded[1] == "=":
            index.setdefault(folded[0], len(index))
            bounds[folded[0]] = (folded[2], folded[2])
        else:
            raise SystemExit(f"unsupported bound line: {line}")
    binaries = set()
    for line in sections.get("bin", []):
        for t in line.split():
            index.setdefault(t, len(index))
            binaries.add(t)

    n = len(index)
    names = sorted(index, key=index.get)
    c = np.zeros(n)
    for v, a in obj.items():
        c[index[v]] = a
    A = np.zeros((len(rows), n))
    lo = np.full(len(rows), -np.inf)
    hi = np.full(len(rows), np.inf)
    for r, (_, coefs, const, rel, rhs) in enumerate(rows):
        for v, a in coefs.items():
            A[r, index[v]] = a
        rhs -= const
        if rel in ("<=", "="):
            hi[r] = rhs
        if rel in (">=", "="):
            lo[r] = rhs
    lb = np.array([bounds.get(v, (0.0, math.inf))[0] for v in names])
    ub = np.array([bounds.get(v, (0.0, math.inf))[1] for v in names])
    integrality = np.array([1 if v in binaries else 0 for v in names])

    options = {"mip_rel_gap": float(os.environ.get("IES_GAP_TOL", "1e-6"))}
    if "IES_TIME_LIMIT" in os.environ:
        options["time_limit"] = float(os.environ["IES_TIME_LIMIT"])
    constraints = [LinearConstraint(A, lo, hi)] if rows else []
    res = milp(c, constraints=constraints, integrality=integrality,
               bounds=Bounds(lb, ub), options=options)

    with open(sol_path, "w", encoding="utf-8") as out:
        if res.status == 0:
            out.write("status=optimal\n")
        elif res.status == 2:
            out.write("status=infeasible\n")
            return
        elif res.status == 3:
            out.write("status=unbounded\n")
            return
        elif res.x is not None:
            out.write("status=feasible\n")
        else:
            out.write("status=limit\n")
            return
        out.write(f"objective={res.fun + offset!r}\n")
        bound = getattr(res, "mip_dual_bound", None)
        if bound is not None and math.isfinite(bound):
            out.write(f"bound={min(bound + offset, res.fun + offset)!r}\n")
        for v, x in zip(names, res.x):
            if v in binaries:
                x = float(round(x))
            out.write(f"var:{v}={float(x)!r}\n")


if __name__ == "__main__":
    main()
