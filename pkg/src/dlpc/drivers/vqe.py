"""Variational eigensolver on the simulated stack, in both pipeline modes.

The physics is identical either way: the optimizer proposes parameters, the
device runs one measurement section per commuting group of Hamiltonian terms,
and counts come back as energies.  The modes differ only in how parameters
reach the device.  "baseline" bakes them into a fresh kernel per section per
evaluation; "dlpc" compiles one parameterized kernel up front and streams
values over the parameter channel.  Given the same seed, both modes sample
identical counts and therefore trace identical optimization paths, which is
what makes their cost accounting directly comparable.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Mapping

from ..devcomp import CompileLog, CostModel, compile_full, compile_partial
from ..ir import (
    BASES,
    Circuit,
    Hamiltonian,
    IrError,
    PauliTerm,
    SlotRef,
    expectation_from_counts,
    op,
)
from ..pulse import CalibrationDataset, PulseSchedule, lower_to_pulses
from ..qpu import ExecutionTrace, execute
from ..rpc import HostEndpoint, Results, ServeReport, serve_host_with_worker
from ..transpile import transpile
from .accounting import RunCosts, costs_from
from .optimizers import OptResult, nelder_mead, optimizer_worker

__all__ = [
    "MODES",
    "VqeProblem",
    "VqeReport",
    "one_param_problem",
    "two_param_problem",
    "measurement_sections",
    "section_schedules",
    "run_vqe",
]

MODES = ("baseline", "dlpc")


@dataclass(frozen=True, slots=True)
class VqeProblem:
    hamiltonian: Hamiltonian
    ansatz: Circuit  # slot-parameterized, measurement added per section
    x0: tuple[float, ...]
    shots: int
    max_evals: int

    def __post_init__(self) -> None:
        if any(g.kind == "MEASURE" for g in self.ansatz.ops):
            raise IrError("ansatz must not measure; sections add their own readout")
        if len(self.x0) != self.ansatz.n_slots:
            raise IrError(
                f"ansatz has {self.ansatz.n_slots} parameter slots, x0 has {len(self.x0)}"
            )

    @property
    def n_params(self) -> int:
        return self.ansatz.n_slots


def one_param_problem() -> VqeProblem:
    """Single qubit, H = Z, one rotation angle.

    One measurement section, so the baseline pays one compile per evaluation.
    """
    ham = Hamiltonian(1, [PauliTerm(1.0, "Z")])
    ansatz = Circuit(1, [op("RY", 0, SlotRef(0))])
    return VqeProblem(ham, ansatz, x0=(0.5,), shots=300, max_evals=25)


def two_param_problem() -> VqeProblem:
    """Single qubit, H = (X + Y + Z)/sqrt(3), two rotation angles.

    Three measurement bases, so the baseline compiles three kernels per
    evaluation while the streaming kernel carries all three sections at once.
    """
    c = 1.0 / math.sqrt(3.0)
    ham = Hamiltonian(1, [PauliTerm(c, "X"), PauliTerm(c, "Y"), PauliTerm(c, "Z")])
    ansatz = Circuit(1, [op("RY", 0, SlotRef(0)), op("RZ", 0, SlotRef(1))])
    return VqeProblem(ham, ansatz, x0=(0.5, 0.5), shots=100, max_evals=31)


def measurement_sections(ham: Hamiltonian) -> tuple[tuple[str, tuple[int, ...]], ...]:
    """Group terms by shared measurement basis, in fixed Z, X, Y order.

    Terms whose non-identity letters mix bases would need per-qubit basis
    changes this driver does not emit.
    """
    by_basis: dict[str, list[int]] = {}
    for i, term in enumerate(ham.terms):
        letters = {c for c in term.paulis if c != "I"}
        if len(letters) > 1:
            raise IrError(f"term {term.paulis!r} mixes measurement bases")
        basis = letters.pop() if letters else "Z"
        by_basis.setdefault(basis, []).append(i)
    return tuple((b, tuple(by_basis[b])) for b in BASES if b in by_basis)


def section_schedules(
    problem: VqeProblem, calib: CalibrationDataset
) -> list[PulseSchedule]:
    """One pulse schedule per measurement section, slots kept live."""
    scheds = []
    for basis, _terms in measurement_sections(problem.hamiltonian):
        circuit = Circuit(
            problem.ansatz.n_qubits,
            [*problem.ansatz.ops, op("MEASURE", (), basis=basis)],
        )
        scheds.append(lower_to_pulses(transpile(circuit), calib))
    return scheds


def _energy_closure(ham: Hamiltonian, sections):
    index = {}
    for sec_idx, (_basis, term_ids) in enumerate(sections):
        for t in term_ids:
            index[t] = sec_idx

    def to_energy(msg: Results) -> float:
        counts_by_term = {t: msg.counts[s] for t, s in index.items()}
        return expectation_from_counts(ham, counts_by_term)

    return to_energy


@dataclass(slots=True)
class VqeReport:
    mode: str
    result: OptResult
    trajectory: tuple[tuple[tuple[float, ...], float], ...]
    costs: RunCosts
    n_iterations: int
    serve: ServeReport | None = None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "x": list(self.result.x),
            "fun": self.result.fun,
            "n_evals": self.result.n_evals,
            "n_iterations": self.n_iterations,
            "trajectory": [{"x": list(x), "energy": e} for x, e in self.trajectory],
            "costs": self.costs.to_json_dict(),
        }


def run_vqe(
    problem: VqeProblem,
    mode: str,
    *,
    cost_model: CostModel,
    calib: CalibrationDataset | None = None,
    run_seed: int = 0,
    transport: str = "memory",
    depolarizing: float = 0.0,
    rabi_truth: Mapping[int, float] | float | None = None,
) -> VqeReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if calib is None:
        calib = CalibrationDataset.default(problem.ansatz.n_qubits)
    sections = measurement_sections(problem.hamiltonian)
    scheds = section_schedules(problem, calib)
    to_energy = _energy_closure(problem.hamiltonian, sections)
    log = CompileLog()
    trajectory: list[tuple[tuple[float, ...], float]] = []
    nq = problem.ansatz.n_qubits
    roundtrip_us = cost_model.rpc_roundtrip_s * 1e6

    if mode == "baseline":
        traces: list[ExecutionTrace] = []
        eval_idx = 0

        def evaluate(x) -> float:
            nonlocal eval_idx
            counts = []
            for j, sched in enumerate(scheds):
                binary = compile_full(sched, [float(v) for v in x], problem.shots, n_qubits=nq)
                log.record(binary, cost_model, kind="full", label=f"eval{eval_idx}/sec{j}")
                trace = execute(
                    binary,
                    run_seed=run_seed,
                    iteration=eval_idx,
                    first_section=j,
                    depolarizing=depolarizing,
                    rabi_truth=rabi_truth,
                )
                traces.append(trace)
                counts.append(trace.results[0].counts[0])
            msg = Results(eval_idx, nq, tuple(counts))
            energy = to_energy(msg)
            trajectory.append((tuple(float(v) for v in x), energy))
            eval_idx += 1
            return energy

        opt = nelder_mead(evaluate, problem.x0, max_evals=problem.max_evals)
        return VqeReport(
            mode=mode,
            result=opt,
            trajectory=tuple(trajectory),
            costs=costs_from(log, traces),
            n_iterations=eval_idx,
        )

    binary = compile_partial(scheds, problem.shots, n_qubits=nq)
    log.record(binary, cost_model, kind="partial", label="streamed")

    if transport == "memory":
        endpoint, handle = HostEndpoint.in_process()
        port = None
    elif transport == "socket":
        listener, port = HostEndpoint.socket_listener()
        endpoint = handle = None
    else:
        raise ValueError(f"transport must be 'memory' or 'socket', got {transport!r}")

    vm_out: dict = {}

    def vm_main() -> None:
        try:
            vm_out["trace"] = execute(
                binary,
                endpoint=handle if port is None else HostEndpoint.connect_kernel(port),
                run_seed=run_seed,
                initial_slots=list(problem.x0),
                depolarizing=depolarizing,
                rabi_truth=rabi_truth,
                rpc_roundtrip_us=roundtrip_us,
            )
        except BaseException as exc:  # reported from the caller thread
            vm_out["error"] = exc

    vm_thread = threading.Thread(target=vm_main, name="kernel-vm", daemon=True)
    vm_thread.start()
    if endpoint is None:
        endpoint = HostEndpoint.accept(listener)

    results: list[OptResult] = []

    def run_opt(evaluate) -> OptResult:
        def recording(x) -> float:
            energy = evaluate(x)
            trajectory.append((tuple(float(v) for v in x), energy))
            return energy

        return nelder_mead(recording, problem.x0, max_evals=problem.max_evals)

    serve = serve_host_with_worker(endpoint, optimizer_worker(run_opt, to_energy, results))
    vm_thread.join()

    if "error" in vm_out:
        raise vm_out["error"]
    if serve.worker_error is not None:
        raise serve.worker_error
    trace: ExecutionTrace = vm_out["trace"]
    return VqeReport(
        mode=mode,
        result=results[0],
        trajectory=tuple(trajectory),
        costs=costs_from(log, [trace]),
        n_iterations=trace.n_iterations,
        serve=serve,
    )
