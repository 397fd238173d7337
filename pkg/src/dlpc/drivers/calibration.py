"""Calibration-day driver: one parameter sweep per device knob.

A full pass over an N-qubit device runs 2N single-qubit experiments (carrier
frequency, then drive amplitude, per qubit) and 5 experiments per coupled
pair, one per entangling-pulse parameter.  Every experiment is the same
segmented sweep kernel: prepare, play a fixed ladder of probe segments, read
out once per shot.  Because the kernel is retargeted purely through its slot
values (carrier in slot 0, segment profile after it), the streaming pipeline
compiles it exactly once for the whole day, while the baseline re-bakes and
re-uploads it for every experiment.

The simulator accounts time, not sweep physics: runs are cost-only and the
per-segment response curve is synthesized host-side from a quadratic peak
around a hidden true value plus measurement noise.  Fits land wherever the
response peaks, the dataset is updated in experiment order, and both modes
see the same synthetic data, so they produce identical fitted values.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from ..devcomp import (
    ALL_CHANNELS,
    CompileLog,
    CostModel,
    Instr,
    KernelBinary,
    KernelMode,
    Opcode,
)
from ..ir import SlotRef
from ..pulse import CalibrationDataset, LiteralUs
from ..rpc import TAG_PARAMS, TAG_RESULTS
from ..qpu import ExecutionTrace, execute
from ..rpc import HostEndpoint, Params, RendezvousCell, Sentinel, serve_host_with_worker
from .accounting import RunCosts, costs_from

__all__ = [
    "SEGMENTS",
    "SWEEP_SHOTS",
    "SEGMENT_US",
    "Experiment",
    "experiment_plan",
    "n_experiments",
    "sweep_slots",
    "build_sweep_partial",
    "build_sweep_full",
    "CalibrationReport",
    "run_calibration",
]

SEGMENTS = 67
SWEEP_SHOTS = 50
SEGMENT_US = 2.5


@dataclass(frozen=True, slots=True)
class Experiment:
    name: str
    kind: str  # "freq" | "amp" | "pair"
    target: tuple[int, ...]
    param_index: int = 0  # pair experiments: which of the 5 pulse parameters


def experiment_plan(calib: CalibrationDataset) -> list[Experiment]:
    plan = []
    for q in sorted(calib.qubits):
        plan.append(Experiment(f"q{q}/freq", "freq", (q,)))
        plan.append(Experiment(f"q{q}/amp", "amp", (q,)))
    for (i, j) in sorted(calib.pairs):
        for p in range(5):
            plan.append(Experiment(f"q{i}-q{j}/pair{p}", "pair", (i, j), p))
    return plan


def n_experiments(n_qubits: int) -> int:
    return 2 * n_qubits + 5 * math.comb(n_qubits, 2)


def _center(exp: Experiment, calib: CalibrationDataset) -> float:
    if exp.kind == "freq":
        return calib.qubit(exp.target[0]).omega
    if exp.kind == "amp":
        return calib.qubit(exp.target[0]).rabi
    return calib.pair_params(*exp.target)[exp.param_index]


def _scale(center: float) -> float:
    """Scan half-width: relative for live values, absolute around zero."""
    return 0.05 * abs(center) if center else 0.2


def _grid(exp: Experiment, calib: CalibrationDataset) -> np.ndarray:
    center = _center(exp, calib)
    return center + _scale(center) * np.linspace(-1.0, 1.0, SEGMENTS)


def _carrier(exp: Experiment, calib: CalibrationDataset) -> float:
    if exp.kind == "pair":
        a, b = exp.target
        return 0.5 * (calib.qubit(a).omega + calib.qubit(b).omega)
    return calib.qubit(exp.target[0]).omega


def sweep_slots(exp: Experiment, calib: CalibrationDataset) -> tuple[float, ...]:
    """Slot image of one experiment: carrier, then the probe ladder in [0, 1]."""
    return (_carrier(exp, calib), *(float(v) for v in np.linspace(0.0, 1.0, SEGMENTS)))


def _sweep_instrs(shots: int, prep_us: float, detect_us: float, segment_us: float):
    body = [Instr(Opcode.PREP, (prep_us,))]
    for i in range(SEGMENTS):
        body.append(Instr(Opcode.SET_AMP, (0, SlotRef(1 + i))))
        body.append(Instr(Opcode.PLAY, (LiteralUs(segment_us),)))
    body.append(Instr(Opcode.DETECT, (ALL_CHANNELS, detect_us)))
    header = [Instr(Opcode.SET_FREQ, (0, SlotRef(0)))]
    loop = [Instr(Opcode.LOOP_SHOTS, (shots, len(body)))]
    return header, loop, body


def build_sweep_partial(
    shots: int = SWEEP_SHOTS,
    *,
    prep_us: float,
    detect_us: float,
    segment_us: float = SEGMENT_US,
) -> KernelBinary:
    """The reusable sweep kernel; resuming at the loop re-runs the whole scan."""
    header, loop, body = _sweep_instrs(shots, prep_us, detect_us, segment_us)
    tail = [
        Instr(Opcode.RPC_ASYNC, (TAG_RESULTS,)),
        Instr(Opcode.RPC_SYNC, (TAG_PARAMS, len(header))),
        Instr(Opcode.HALT, ()),
    ]
    return KernelBinary(
        KernelMode.PARTIAL, 1, 1 + SEGMENTS, tuple(header + loop + body + tail), (), ()
    )


def build_sweep_full(
    slot_values: tuple[float, ...],
    shots: int = SWEEP_SHOTS,
    *,
    prep_us: float,
    detect_us: float,
    segment_us: float = SEGMENT_US,
) -> KernelBinary:
    if len(slot_values) != 1 + SEGMENTS:
        raise ValueError(f"sweep takes {1 + SEGMENTS} slot values, got {len(slot_values)}")
    header, loop, body = _sweep_instrs(shots, prep_us, detect_us, segment_us)
    baked = []
    for ins in header + loop + body:
        args = tuple(
            slot_values[a.index] if isinstance(a, SlotRef) else a for a in ins.args
        )
        baked.append(Instr(ins.op, args))
    baked.append(Instr(Opcode.HALT, ()))
    return KernelBinary(KernelMode.FULL, 1, 0, tuple(baked), (), ())


def _fit(exp: Experiment, calib: CalibrationDataset, run_seed: int, exp_idx: int) -> float:
    """Synthesize the sweep response and return the peak position.

    The hidden truth sits inside the scan window; the response is a clipped
    quadratic peak whose width covers a few segments, plus shot-scale noise.
    """
    rng = np.random.Generator(np.random.Philox(key=[run_seed, exp_idx]))
    grid = _grid(exp, calib)
    center = _center(exp, calib)
    scale = _scale(center)
    truth = center + scale * rng.uniform(-0.6, 0.6)
    response = np.clip(1.0 - ((grid - truth) / (0.25 * scale)) ** 2, 0.0, 1.0)
    response += rng.normal(0.0, 0.02, SEGMENTS)
    return float(grid[int(np.argmax(response))])


def _apply(exp: Experiment, calib: CalibrationDataset, fitted: float) -> None:
    if exp.kind == "freq":
        calib.recalibrate_qubit(exp.target[0], omega=fitted)
    elif exp.kind == "amp":
        calib.recalibrate_qubit(exp.target[0], rabi=fitted)
    else:
        params = list(calib.pair_params(*exp.target))
        params[exp.param_index] = fitted
        calib.recalibrate_pair(*exp.target, tuple(params))


@dataclass(slots=True)
class CalibrationReport:
    mode: str
    n_experiments: int
    costs: RunCosts
    version_advance: int
    fitted: dict[str, float]
    kernel_instructions: int

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_experiments": self.n_experiments,
            "version_advance": self.version_advance,
            "kernel_instructions": self.kernel_instructions,
            "costs": self.costs.to_json_dict(),
            "fitted": self.fitted,
        }


def run_calibration(
    calib: CalibrationDataset,
    mode: str,
    *,
    cost_model: CostModel,
    run_seed: int = 0,
) -> CalibrationReport:
    """Run a full calibration day over every qubit and pair in the dataset.

    Updates calib in place, one version bump per experiment.
    """
    if mode not in ("baseline", "dlpc"):
        raise ValueError(f"mode must be 'baseline' or 'dlpc', got {mode!r}")
    plan = experiment_plan(calib)
    version_before = calib.version
    log = CompileLog()
    fitted: dict[str, float] = {}
    prep_us, detect_us = calib.prep_us, calib.detect_us

    def analyze(exp_idx: int) -> None:
        exp = plan[exp_idx]
        value = _fit(exp, calib, run_seed, exp_idx)
        _apply(exp, calib, value)
        fitted[exp.name] = value

    if mode == "baseline":
        traces: list[ExecutionTrace] = []
        for k, exp in enumerate(plan):
            binary = build_sweep_full(
                sweep_slots(exp, calib), prep_us=prep_us, detect_us=detect_us
            )
            log.record(binary, cost_model, kind="full", label=exp.name)
            traces.append(execute(binary, run_seed=run_seed, iteration=k, cost_only=True))
            analyze(k)
        n_instr = len(binary.instructions)
        return CalibrationReport(
            mode, len(plan), costs_from(log, traces), calib.version - version_before,
            fitted, n_instr,
        )

    binary = build_sweep_partial(prep_us=prep_us, detect_us=detect_us)
    log.record(binary, cost_model, kind="partial", label="sweep")
    endpoint, handle = HostEndpoint.in_process()
    vm_out: dict = {}

    def vm_main() -> None:
        try:
            vm_out["trace"] = execute(
                binary,
                endpoint=handle,
                run_seed=run_seed,
                initial_slots=list(sweep_slots(plan[0], calib)),
                rpc_roundtrip_us=cost_model.rpc_roundtrip_s * 1e6,
                cost_only=True,
            )
        except BaseException as exc:
            vm_out["error"] = exc

    # Slots for experiment k+1 depend on fits applied through experiment k,
    # so the worker interleaves analysis with the parameter stream.
    def worker(results_buffer: RendezvousCell, parameter_buffer: RendezvousCell) -> None:
        for k in range(len(plan)):
            results_buffer.take()
            analyze(k)
            if k + 1 < len(plan):
                parameter_buffer.put(Params(sweep_slots(plan[k + 1], calib)))
        parameter_buffer.put(Sentinel())

    vm_thread = threading.Thread(target=vm_main, name="kernel-vm", daemon=True)
    vm_thread.start()
    serve = serve_host_with_worker(endpoint, worker)
    vm_thread.join()
    if "error" in vm_out:
        raise vm_out["error"]
    if serve.worker_error is not None:
        raise serve.worker_error
    return CalibrationReport(
        mode, len(plan), costs_from(log, [vm_out["trace"]]),
        calib.version - version_before, fitted, len(binary.instructions),
    )
