"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from SLPQUERY_NUMBA.

    python benchmarks/bench_backends.py [--n 16] [--states 4,8,16] [--repeat 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from slpquery import _accel
from slpquery.evaluation import build_query_structure
from slpquery.families import counter_automaton
from slpquery.slp import doubling_slp

n, states, repeat = json.loads(sys.argv[1])
slp = doubling_slp(n)
build_query_structure(counter_automaton(2), doubling_slp(2))  # warm up / load the jit cache
rows = []
for m in states:
    a = counter_automaton(m)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        qds = build_query_structure(a, slp)
        best = min(best, time.perf_counter() - t0)
    rows.append({"states": m, "ops": sum(qds.op_counts().values()), "ms": best * 1000})
print(json.dumps({"backend": _accel.BACKEND, "rows": rows}))
"""


def run_backend(flag: str, n: int, states: list[int], repeat: int) -> dict:
    env = dict(os.environ, SLPQUERY_NUMBA=flag)
    res = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps([n, states, repeat])],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(res.stdout)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=16, help="doubling grammar depth")
    p.add_argument("--states", type=lambda v: [int(x) for x in v.split(",")], default=[4, 8, 16])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    fast = run_backend("1", args.n, args.states, args.repeat)
    slow = run_backend("0", args.n, args.states, args.repeat)
    print(f"doubling grammar n={args.n}; best of {args.repeat}")
    print(f"{'states':>6} {'ops':>9} {fast['backend'] + ' ms':>11} {slow['backend'] + ' ms':>11} {'speedup':>8}")
    for a, b in zip(fast["rows"], slow["rows"]):
        if a["ops"] != b["ops"]:
            print(f"op counts differ for {a['states']} states: {a['ops']} vs {b['ops']}", file=sys.stderr)
            return 1
        print(f"{a['states']:>6} {a['ops']:>9} {a['ms']:>11.2f} {b['ms']:>11.2f} {b['ms'] / a['ms']:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
