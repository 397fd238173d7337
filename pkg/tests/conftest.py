"""Shared generators and oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from dlpc.ir import Circuit, GateOp, op

GATE_KINDS = ("RX", "RY", "RZ", "R", "XX", "CNOT")


def random_circuit(rng: np.random.Generator, n_qubits: int, depth: int) -> Circuit:
    """Random fully-literal circuit over the transpiler's input dictionary."""
    ops: list[GateOp] = []
    for _ in range(depth):
        kind = GATE_KINDS[rng.integers(len(GATE_KINDS))]
        if kind in ("XX", "CNOT"):
            if n_qubits < 2:
                kind = "RX"
            else:
                a, b = rng.choice(n_qubits, size=2, replace=False)
                if kind == "XX":
                    ops.append(op("XX", (int(a), int(b)), rng.uniform(-2 * math.pi, 2 * math.pi)))
                else:
                    ops.append(op("CNOT", (int(a), int(b))))
                continue
        q = int(rng.integers(n_qubits))
        if kind == "R":
            ops.append(op("R", q, rng.uniform(-2 * math.pi, 2 * math.pi), rng.uniform(0, 2 * math.pi)))
        else:
            ops.append(op(kind, q, rng.uniform(-2 * math.pi, 2 * math.pi)))
    return Circuit(n_qubits, ops)


def max_phase_aligned_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Elementwise max |a - e^{i t} b| after aligning global phase."""
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < 1e-12:
        return float(np.max(np.abs(a - b)))
    phase = a[k] / b[k]
    phase /= abs(phase) if abs(phase) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
