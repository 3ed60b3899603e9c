#!/usr/bin/env python3
"""Brute-force fixed point of the 2x2 reference network.

Iterates x <- W tanh(x) + c from x = 0 until successive iterates differ by
less than 1e-15 (infinity norm) and prints the result as JSON. The committed
copy lives in fixtures/oracle_2x2.json; the acceptance suite re-runs this
script when python3 is available and compares.

    python3 scripts/fixed_point_oracle.py > fixtures/oracle_2x2.json
"""

import json
import math

W = [[0.0, 0.5], [0.5, 0.0]]
C = [0.1, 0.0]


def main():
    x = [0.0, 0.0]
    for iterations in range(1, 100_001):
        r = [math.tanh(v) for v in x]
        nxt = [sum(W[i][j] * r[j] for j in range(2)) + C[i] for i in range(2)]
        change = max(abs(a - b) for a, b in zip(nxt, x))
        x = nxt
        if change < 1e-15:
            break
    residual = max(
        abs(sum(W[i][j] * math.tanh(x[j]) for j in range(2)) + C[i] - x[i]) for i in range(2)
    )
    print(json.dumps({"W": W, "c": C, "x0": x, "iterations": iterations,
                      "residual": residual}, indent=1))


if __name__ == "__main__":
    main()
