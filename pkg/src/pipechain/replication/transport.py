"""Message transports: a deterministic in-process simulator and TCP.

The simulator delivers messages through a seeded event queue with random
per-message delay (which reorders), optional loss, and crash/revive of
nodes; with a fixed seed, every run is byte-identical. The TCP transport
frames messages as u32 length || bytes; the server answers each request's
reply messages on the same connection and dials everything else.
"""

from __future__ import annotations

import heapq
import random
import socket
import socketserver
import struct
import threading
from typing import Callable, Optional

from .node import Node

SIM_EPOCH = 1_700_000_000.0


class SimNetwork:
    """Seeded discrete-event network for a set of in-process nodes."""

    def __init__(
        self,
        seed: int = 0,
        min_delay: float = 0.001,
        max_delay: float = 0.050,
        loss: float = 0.0,
        start_time: float = SIM_EPOCH,
    ):
        self.rng = random.Random(seed)
        self.min_delay = min_delay
        self.max_delay = max_delay
        self.loss = loss
        self.now = float(start_time)
        self._queue: list[tuple[float, int, str, tuple]] = []
        self._seq = 0
        self._nodes: dict[str, Node] = {}
        self._crashed: set[str] = set()
        self.delivered = 0
        self.dropped = 0

    # -- topology ------------------------------------------------------

    def clock_for(self) -> Callable[[], int]:
        return lambda: int(self.now)

    def attach(self, node: Node) -> None:
        self._nodes[node.node_id] = node
        node.schedule_timer = self._timer_scheduler(node.node_id)

    def _timer_scheduler(self, node_id: str):
        def schedule(delay: float, tag) -> None:
            self._push(self.now + delay, "timer", (node_id, tag))

        return schedule

    def advance(self, seconds: float) -> None:
        """Move virtual time forward (batch windows, retry timers)."""
        self.now += seconds

    def crash(self, node_id: str) -> None:
        self._crashed.add(node_id)

    def revive(self, node_id: str) -> None:
        self._crashed.discard(node_id)

    def is_crashed(self, node_id: str) -> bool:
        return node_id in self._crashed

    def node(self, node_id: str) -> Node:
        return self._nodes[node_id]

    # -- event queue -----------------------------------------------------

    def _push(self, when: float, kind: str, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (when, self._seq, kind, payload))

    def send(self, src: str, dst: str, data: bytes) -> None:
        if src in self._crashed:
            self.dropped += 1
            return
        if self.loss and self.rng.random() < self.loss:
            self.dropped += 1
            return
        delay = self.rng.uniform(self.min_delay, self.max_delay)
        self._push(self.now + delay, "msg", (src, dst, data))

    def dispatch(self, src: str, outgoing: list[tuple[str, bytes]]) -> None:
        for dst, data in outgoing:
            self.send(src, dst, data)

    def step(self) -> bool:
        if not self._queue:
            return False
        when, _, kind, payload = heapq.heappop(self._queue)
        self.now = max(self.now, when)
        if kind == "msg":
            src, dst, data = payload
            node = self._nodes.get(dst)
            if node is None or dst in self._crashed:
                self.dropped += 1
                return True
            self.delivered += 1
            self.dispatch(dst, node.handle_raw(data))
        else:  # timer
            node_id, tag = payload
            node = self._nodes.get(node_id)
            if node is not None and node_id not in self._crashed:
                self.dispatch(node_id, node.on_timer(tag))
        return True

    def run(
        self,
        max_seconds: float | None = None,
        max_events: int = 1_000_000,
        until: Optional[Callable[[], bool]] = None,
    ) -> None:
        """Process events until the queue drains or a limit is hit."""
        deadline = None if max_seconds is None else self.now + max_seconds
        for _ in range(max_events):
            if until is not None and until():
                return
            if deadline is not None and self._queue and self._queue[0][0] > deadline:
                self.now = deadline
                return
            if not self.step():
                return


# -- TCP -----------------------------------------------------------------


def _read_frame(sock: socket.socket) -> bytes | None:
    header = _read_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > 64 * 1024 * 1024:
        return None
    return _read_exact(sock, length)


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def send_frames(address: tuple[str, int], frames: list[bytes], timeout: float = 5.0) -> list[bytes]:
    """Dial, send frames, collect reply frames until the server closes."""
    replies: list[bytes] = []
    with socket.create_connection(address, timeout=timeout) as sock:
        for data in frames:
            sock.sendall(struct.pack(">I", len(data)) + data)
        sock.shutdown(socket.SHUT_WR)
        while True:
            frame = _read_frame(sock)
            if frame is None:
                break
            replies.append(frame)
    return replies


class TcpTransport:
    """Serves one node over TCP and dials its peers."""

    def __init__(self, node: Node, retry_interval: float = 1.0):
        self.node = node
        self._addresses = {p.node_id: p.address for p in node.config.peers}
        self._retry_interval = retry_interval
        node.schedule_timer = lambda _delay, _tag: None  # ticker thread covers retries
        host, port = node.config.listen_address
        transport = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                while True:
                    frame = _read_frame(self.request)
                    if frame is None:
                        return
                    outgoing = transport.node.handle_raw(frame)
                    replies, others = transport._split_replies(frame, outgoing)
                    for data in replies:
                        self.request.sendall(struct.pack(">I", len(data)) + data)
                    transport.deliver(others)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._server_thread = threading.Thread(
            target=self._server.serve_forever, name=f"node-{node.node_id}", daemon=True
        )
        self._ticker_stop = threading.Event()
        self._ticker = threading.Thread(target=self._tick_loop, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address

    def start(self) -> None:
        self._server_thread.start()
        self._ticker.start()

    def stop(self) -> None:
        self._ticker_stop.set()
        self._server.shutdown()
        self._server.server_close()

    def _split_replies(self, request_frame: bytes, outgoing):
        from . import messages as m

        try:
            sender = m.decode_message(request_frame).sender_id
        except Exception:
            sender = None
        replies, others = [], []
        for dst, data in outgoing:
            if dst == sender:
                replies.append(data)
            else:
                others.append((dst, data))
        return replies, others

    def deliver(self, outgoing: list[tuple[str, bytes]]) -> None:
        for dst, data in outgoing:
            address = self._addresses.get(dst)
            if address is None:
                continue
            try:
                replies = send_frames(address, [data])
            except OSError:
                continue  # peer down; retry timer will resend proposals
            for reply in replies:
                self.deliver_one(reply)

    def deliver_one(self, data: bytes) -> None:
        self.deliver(self.node.handle_raw(data))

    def _tick_loop(self) -> None:
        while not self._ticker_stop.wait(self._retry_interval):
            with self.node._lock:
                tags = [
                    ("retry", name, state.pending.height)
                    for name, state in self.node.replicas.items()
                    if state.pending is not None
                ]
            for tag in tags:
                self.deliver(self.node.on_timer(tag))


class TcpPeer:
    """AuditPeer implementation querying a live node over TCP."""

    AUDITOR_ID = "auditor"

    def __init__(self, node_id: str, address: tuple[str, int], timeout: float = 5.0):
        self.node_id = node_id
        self.address = address
        self.timeout = timeout

    def _ask(self, ledger_name: str, start: int, end: int):
        from ..encoding import EncodingError
        from . import messages as m
        from .audit import PeerUnreachable

        request = m.sign_message(
            m.KIND_AUDIT_REQUEST,
            self.AUDITOR_ID,
            m.audit_request_payload(ledger_name, start, end),
            key=None,
        )
        try:
            replies = send_frames(self.address, [m.encode_message(request)], self.timeout)
        except OSError as exc:
            raise PeerUnreachable(f"{self.node_id}: {exc}") from exc
        for reply in replies:
            try:
                msg = m.decode_message(reply)
                if msg.kind == m.KIND_AUDIT_RESPONSE:
                    return m.parse_audit_response(msg.payload)
            except EncodingError:
                continue
        raise PeerUnreachable(f"{self.node_id}: no audit response")

    def head_height(self, ledger_name: str) -> int:
        _, head, _ = self._ask(ledger_name, 0, 0)
        return head

    def fetch_hashes(self, ledger_name: str, start: int, end: int):
        _, _, hashes = self._ask(ledger_name, start, end)
        return hashes
