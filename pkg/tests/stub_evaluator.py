"""Line-protocol evaluator used by the tests.

Usage: stub_evaluator.py MODE [LOGFILE]

MODE is ``score`` (OK with a deterministic score), ``const`` (always 0.5),
``err`` (always ERR), ``die`` (exit on the first request) or ``hang``.
Every received request is appended to LOGFILE when given.
"""

import sys
import time

mode = sys.argv[1]
log = open(sys.argv[2], "a") if len(sys.argv) > 2 else None

for line in sys.stdin:
    if log:
        log.write(line)
        log.flush()
    if mode == "die":
        sys.exit(3)
    if mode == "hang":
        time.sleep(60)
    if mode == "err":
        print("ERR out of memory", flush=True)
        continue
    if mode == "const":
        print("OK 0.5", flush=True)
        continue
    fields = dict(tok.split("=", 1) for tok in line.split()[3:])
    score = -sum((float(v) - i) ** 2 for i, v in enumerate(fields.values()))
    print(f"OK {score!r}", flush=True)
