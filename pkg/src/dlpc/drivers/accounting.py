"""Cost roll-up shared by the experiment drivers.

Wall-clock time in this stack is fully itemized: compile, upload, and
schedule come from the compile log, device busy time and RPC stalls from the
execution traces.  Total time is their sum by construction, so comparisons
between pipeline modes never depend on a stopwatch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..devcomp import CompileLog
from ..qpu import ExecutionTrace

__all__ = ["RunCosts", "costs_from", "speedup"]


@dataclass(frozen=True, slots=True)
class RunCosts:
    n_compiles: int
    compile_s: float
    upload_s: float
    schedule_s: float
    device_s: float
    rpc_s: float

    @property
    def overhead_s(self) -> float:
        """Everything the device spends not running shots."""
        return self.compile_s + self.upload_s + self.schedule_s + self.rpc_s

    @property
    def total_s(self) -> float:
        return self.device_s + self.overhead_s

    @property
    def device_fraction(self) -> float:
        return self.device_s / self.total_s

    @property
    def compile_fraction(self) -> float:
        return self.compile_s / self.total_s

    def to_json_dict(self) -> dict:
        return {
            "n_compiles": self.n_compiles,
            "compile_s": self.compile_s,
            "upload_s": self.upload_s,
            "schedule_s": self.schedule_s,
            "device_s": self.device_s,
            "rpc_s": self.rpc_s,
            "overhead_s": self.overhead_s,
            "total_s": self.total_s,
            "device_fraction": self.device_fraction,
            "compile_fraction": self.compile_fraction,
        }


def costs_from(log: CompileLog, traces: Iterable[ExecutionTrace]) -> RunCosts:
    device_us = 0.0
    rpc_us = 0.0
    for t in traces:
        device_us += t.busy_us
        rpc_us += t.rpc_us
    return RunCosts(
        n_compiles=log.n_compiles,
        compile_s=log.total_compile_s,
        upload_s=sum(e.upload_s for e in log.events),
        schedule_s=sum(e.schedule_s for e in log.events),
        device_s=device_us * 1e-6,
        rpc_s=rpc_us * 1e-6,
    )


def speedup(baseline: RunCosts, other: RunCosts) -> float:
    """How many times faster the second run finished the same workload."""
    return baseline.total_s / other.total_s
