"""Host-kernel boundary: framed binary messages and the two-buffer host loop.

Wire format: every frame is a u32 little-endian length (counting the tag byte),
a u8 type tag, then the payload.  Reals are 8-byte little-endian IEEE-754;
counts and indices are u32 little-endian.  SENTINEL is the five bytes
``01 00 00 00 02``.

The host runs exactly two execution contexts against one kernel VM: the main
context forwards kernel results into ResultsBuffer, blocks on ParameterBuffer,
and relays the reply; the worker context (the optimizer) consumes results and
produces PARAMS until it converges, then SENTINEL.  Both buffers are capacity-1
rendezvous cells, so the control flow is strictly alternating and every message
is delivered exactly once.

The kernel never sends an explicit request frame for its synchronous fetch: the
alternation means the next host-to-kernel frame is always the response.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
from dataclasses import dataclass, field
from typing import Callable, Protocol

__all__ = [
    "TAG_RESULTS",
    "TAG_PARAMS",
    "TAG_SENTINEL",
    "TAG_CIRCUIT_BLOCK",
    "RpcError",
    "FrameError",
    "ProtocolError",
    "ChannelClosed",
    "Results",
    "Params",
    "Sentinel",
    "CircuitBlock",
    "RpcMessage",
    "encode",
    "decode",
    "bits_to_key",
    "key_to_bits",
    "RendezvousCell",
    "HostEndpoint",
    "KernelHandle",
    "ServeReport",
    "serve_host",
    "serve_host_with_worker",
]

TAG_RESULTS = 0
TAG_PARAMS = 1
TAG_SENTINEL = 2
TAG_CIRCUIT_BLOCK = 3

_POLL_S = 0.05


class RpcError(Exception):
    """Protocol-level failure."""


class FrameError(RpcError):
    """Truncated or length-inconsistent frame."""


class ProtocolError(RpcError):
    """Structurally valid frame with an unknown tag or malformed payload."""


class ChannelClosed(RpcError):
    """Operation on a closed buffer or transport."""


def bits_to_key(bits: str) -> int:
    """Bitstring to integer; character q is qubit q, the q-th bit of the key."""
    key = 0
    for q, c in enumerate(bits):
        if c == "1":
            key |= 1 << q
    return key


def key_to_bits(key: int, n_qubits: int) -> str:
    return "".join("1" if (key >> q) & 1 else "0" for q in range(n_qubits))


@dataclass(frozen=True, slots=True)
class Results:
    """Outcome counts for one kernel iteration, one section per measured basis."""

    iteration: int
    n_qubits: int
    counts: tuple[dict[str, int], ...]


@dataclass(frozen=True, slots=True)
class Params:
    values: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class Sentinel:
    pass


@dataclass(frozen=True, slots=True)
class CircuitBlock:
    """One or more circuits, each a sequence of gate-pool indices."""

    circuits: tuple[tuple[int, ...], ...]


RpcMessage = Results | Params | Sentinel | CircuitBlock


def encode(m: RpcMessage) -> bytes:
    if isinstance(m, Results):
        parts = [struct.pack("<IBI", m.iteration, m.n_qubits, len(m.counts))]
        for section in m.counts:
            entries = sorted((bits_to_key(bits), n) for bits, n in section.items())
            parts.append(struct.pack("<I", len(entries)))
            for key, n in entries:
                parts.append(struct.pack("<II", key, n))
        payload, tag = b"".join(parts), TAG_RESULTS
    elif isinstance(m, Params):
        payload = struct.pack("<I", len(m.values)) + struct.pack(f"<{len(m.values)}d", *m.values)
        tag = TAG_PARAMS
    elif isinstance(m, Sentinel):
        payload, tag = b"", TAG_SENTINEL
    elif isinstance(m, CircuitBlock):
        parts = [struct.pack("<I", len(m.circuits))]
        for circ in m.circuits:
            parts.append(struct.pack("<I", len(circ)) + struct.pack(f"<{len(circ)}I", *circ))
        payload, tag = b"".join(parts), TAG_CIRCUIT_BLOCK
    else:
        raise ProtocolError(f"cannot encode {type(m).__name__}")
    return struct.pack("<I", len(payload) + 1) + bytes([tag]) + payload


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FrameError("truncated frame payload")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FrameError(f"{len(self.data) - self.pos} trailing bytes in frame")


def decode(frame: bytes) -> RpcMessage:
    """Inverse of encode; expects one complete frame including the length prefix."""
    if len(frame) < 5:
        raise FrameError(f"frame too short: {len(frame)} bytes")
    (length,) = struct.unpack_from("<I", frame, 0)
    if length != len(frame) - 4:
        raise FrameError(f"declared length {length} != actual {len(frame) - 4}")
    tag = frame[4]
    r = _Reader(frame[5:])
    if tag == TAG_RESULTS:
        iteration, n_qubits, n_sections = r.take("<IBI")
        sections = []
        for _ in range(n_sections):
            (n_entries,) = r.take("<I")
            section: dict[str, int] = {}
            for _ in range(n_entries):
                key, n = r.take("<II")
                section[key_to_bits(key, n_qubits)] = n
            sections.append(section)
        r.done()
        return Results(iteration, n_qubits, tuple(sections))
    if tag == TAG_PARAMS:
        (count,) = r.take("<I")
        values = r.take(f"<{count}d")
        r.done()
        return Params(values)
    if tag == TAG_SENTINEL:
        r.done()
        return Sentinel()
    if tag == TAG_CIRCUIT_BLOCK:
        (n_circuits,) = r.take("<I")
        circuits = []
        for _ in range(n_circuits):
            (n,) = r.take("<I")
            circuits.append(r.take(f"<{n}I"))
        r.done()
        return CircuitBlock(tuple(circuits))
    raise ProtocolError(f"unknown message tag {tag}")


class RendezvousCell:
    """Capacity-1 blocking cell; close() unblocks every waiter with ChannelClosed."""

    def __init__(self) -> None:
        self._q: queue.Queue = queue.Queue(maxsize=1)
        self._closed = threading.Event()

    def put(self, item: RpcMessage) -> None:
        while True:
            if self._closed.is_set():
                raise ChannelClosed("cell is closed")
            try:
                self._q.put(item, timeout=_POLL_S)
                return
            except queue.Full:
                continue

    def take(self) -> RpcMessage:
        while True:
            try:
                return self._q.get(timeout=_POLL_S)
            except queue.Empty:
                if self._closed.is_set():
                    raise ChannelClosed("cell is closed") from None

    def close(self) -> None:
        self._closed.set()

    @property
    def closed(self) -> bool:
        return self._closed.is_set()


class _Transport(Protocol):
    def send(self, m: RpcMessage) -> None: ...

    def recv(self) -> RpcMessage: ...

    def close(self) -> None: ...


class _CellTransport:
    """One direction-pair of rendezvous cells, shared by both in-process ends."""

    def __init__(self, tx: RendezvousCell, rx: RendezvousCell) -> None:
        self._tx = tx
        self._rx = rx

    def send(self, m: RpcMessage) -> None:
        self._tx.put(m)

    def recv(self) -> RpcMessage:
        return self._rx.take()

    def close(self) -> None:
        self._tx.close()
        self._rx.close()


def _recv_exactly(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except OSError as e:
            raise ChannelClosed(f"socket error: {e}") from e
        if not chunk:
            raise ChannelClosed("peer closed the stream")
        buf += chunk
    return bytes(buf)


class _SocketTransport:
    def __init__(self, sock: socket.socket) -> None:
        self._sock = sock
        self._send_lock = threading.Lock()

    def send(self, m: RpcMessage) -> None:
        with self._send_lock:
            try:
                self._sock.sendall(encode(m))
            except OSError as e:
                raise ChannelClosed(f"socket error: {e}") from e

    def recv(self) -> RpcMessage:
        prefix = _recv_exactly(self._sock, 4)
        (length,) = struct.unpack("<I", prefix)
        return decode(prefix + _recv_exactly(self._sock, length))

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class KernelHandle:
    """The VM's side of the channel: post results, await the next directive."""

    def __init__(self, transport: _Transport) -> None:
        self._transport = transport
        self._closed = False

    def post_results(self, m: Results) -> None:
        self._transport.send(m)

    def await_reply(self) -> RpcMessage:
        reply = self._transport.recv()
        if not isinstance(reply, (Params, Sentinel, CircuitBlock)):
            raise ProtocolError(f"kernel received {type(reply).__name__}")
        return reply

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._transport.close()


@dataclass(slots=True)
class ServeReport:
    iterations: int = 0
    results_received: int = 0
    replies_sent: int = 0
    worker_error: BaseException | None = None


class HostEndpoint:
    """Main-side handle plus the results/parameter buffer pair."""

    def __init__(self, transport: _Transport) -> None:
        self.transport = transport
        self.results_buffer = RendezvousCell()
        self.parameter_buffer = RendezvousCell()

    @classmethod
    def in_process(cls) -> tuple[HostEndpoint, KernelHandle]:
        kernel_to_host = RendezvousCell()
        host_to_kernel = RendezvousCell()
        host = cls(_CellTransport(host_to_kernel, kernel_to_host))
        kernel = KernelHandle(_CellTransport(kernel_to_host, host_to_kernel))
        return host, kernel

    @classmethod
    def socket_listener(cls) -> tuple[socket.socket, int]:
        """Bind a loopback listener; pair with accept()/connect_kernel()."""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.bind(("127.0.0.1", 0))
        listener.listen(1)
        return listener, listener.getsockname()[1]

    @classmethod
    def accept(cls, listener: socket.socket) -> HostEndpoint:
        conn, _ = listener.accept()
        listener.close()
        return cls(_SocketTransport(conn))

    @staticmethod
    def connect_kernel(port: int) -> KernelHandle:
        sock = socket.create_connection(("127.0.0.1", port))
        return KernelHandle(_SocketTransport(sock))

    def close(self) -> None:
        self.results_buffer.close()
        self.parameter_buffer.close()
        self.transport.close()


def serve_host_with_worker(
    endpoint: HostEndpoint, worker: Callable[[RendezvousCell, RendezvousCell], None]
) -> ServeReport:
    """Run the forwarding loop with ``worker`` in its own context.

    The worker reads from the results buffer and writes PARAMS, CIRCUIT_BLOCK,
    or SENTINEL to the parameter buffer; the loop ends once a SENTINEL has been
    relayed to the kernel.  A worker crash is converted into a SENTINEL so the
    kernel always terminates, and the error is reported to the caller.
    """
    report = ServeReport()

    def worker_main() -> None:
        try:
            worker(endpoint.results_buffer, endpoint.parameter_buffer)
        except ChannelClosed:
            pass  # session torn down under the worker; nothing to report
        except BaseException as e:  # noqa: BLE001 - must never strand the kernel
            report.worker_error = e
            try:
                endpoint.parameter_buffer.put(Sentinel())
            except ChannelClosed:
                pass

    t = threading.Thread(target=worker_main, name="host-worker", daemon=True)
    t.start()
    try:
        while True:
            try:
                msg = endpoint.transport.recv()
            except ChannelClosed:
                break
            report.results_received += 1
            endpoint.results_buffer.put(msg)
            reply = endpoint.parameter_buffer.take()
            endpoint.transport.send(reply)
            report.replies_sent += 1
            if isinstance(reply, Sentinel):
                break
        report.iterations = report.results_received
    finally:
        endpoint.results_buffer.close()
        endpoint.parameter_buffer.close()
        t.join()
    return report


def serve_host(
    endpoint: HostEndpoint, objective: Callable[[Results], RpcMessage]
) -> ServeReport:
    """Spec-shaped entry: the worker is a pure results -> reply function."""

    def worker(results: RendezvousCell, params: RendezvousCell) -> None:
        while True:
            r = results.take()
            assert isinstance(r, Results)
            reply = objective(r)
            params.put(reply)
            if isinstance(reply, Sentinel):
                return

    return serve_host_with_worker(endpoint, worker)
