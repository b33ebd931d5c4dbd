"""Socket transfer of generator models from the source node to the target.

Wire format: each message is framed as a 4-byte big-endian body length,
one type byte, then the body. Body size is capped at 64 MiB. A session is
exactly one Hello handshake followed by one ModelRequest, answered with the
model envelope bytes; any deviation gets an ErrorReply and the connection
is closed. The payload is the only application data that ever leaves the
source node, and the transfer log records every exchange as evidence.
"""

from __future__ import annotations

import json
import os
import socket
import struct
import threading
import time
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import (
    ConnectError,
    FrameTooLargeError,
    FtcaError,
    IncompleteFrameError,
    ProtocolError,
)
from .tabgen import GeneratorModel, deserialize_model

MAX_BODY_BYTES = 64 * 1024 * 1024
_HEADER = struct.Struct(">IB")
_SESSION_TIMEOUT_SECS = 10.0
DEFAULT_FETCH_TIMEOUT_SECS = 10.0
TIMEOUT_ENV_VAR = "FTCA_TIMEOUT_SECS"


class MessageType(IntEnum):
    HELLO = 0x01
    MODEL_REQUEST = 0x02
    MODEL_PAYLOAD = 0x03
    ERROR_REPLY = 0x04


@dataclass(frozen=True)
class WireMessage:
    type: MessageType
    body: bytes = b""


def encode_frame(msg: WireMessage) -> bytes:
    if len(msg.body) > MAX_BODY_BYTES:
        raise FrameTooLargeError(f"body of {len(msg.body)} bytes exceeds {MAX_BODY_BYTES}")
    return _HEADER.pack(len(msg.body), int(msg.type)) + msg.body


def decode_frame(data: bytes) -> tuple[WireMessage, bytes]:
    """Decode exactly one frame from a byte string; returns (message, rest)."""
    if len(data) < _HEADER.size:
        raise IncompleteFrameError(f"{len(data)} bytes is shorter than a frame header")
    length, type_byte = _HEADER.unpack_from(data)
    if length > MAX_BODY_BYTES:
        raise FrameTooLargeError(f"declared body of {length} bytes exceeds {MAX_BODY_BYTES}")
    if len(data) < _HEADER.size + length:
        raise IncompleteFrameError(
            f"frame declares {length} body bytes but only {len(data) - _HEADER.size} follow"
        )
    try:
        mtype = MessageType(type_byte)
    except ValueError:
        raise ProtocolError(f"unknown message type byte 0x{type_byte:02x}") from None
    body = data[_HEADER.size : _HEADER.size + length]
    return WireMessage(mtype, body), data[_HEADER.size + length :]


def _recv_exactly(sock: socket.socket, count: int) -> bytes:
    chunks = []
    got = 0
    while got < count:
        chunk = sock.recv(count - got)
        if not chunk:
            raise IncompleteFrameError(f"stream ended after {got} of {count} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def recv_frame(sock: socket.socket) -> WireMessage:
    header = _recv_exactly(sock, _HEADER.size)
    length, type_byte = _HEADER.unpack(header)
    if length > MAX_BODY_BYTES:
        raise FrameTooLargeError(f"declared body of {length} bytes exceeds {MAX_BODY_BYTES}")
    body = _recv_exactly(sock, length) if length else b""
    try:
        mtype = MessageType(type_byte)
    except ValueError:
        raise ProtocolError(f"unknown message type byte 0x{type_byte:02x}") from None
    return WireMessage(mtype, body)


def send_frame(sock: socket.socket, msg: WireMessage) -> int:
    data = encode_frame(msg)
    sock.sendall(data)
    return len(data)


@dataclass(frozen=True)
class LogRecord:
    timestamp: float
    peer: str
    connection_id: int
    event: str
    byte_count: int


class TransferLog:
    """Append-only, thread-safe record of every protocol exchange."""

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.Lock()
        self._records: list[LogRecord] = []
        self._path = Path(path) if path is not None else None

    def append(self, peer: str, connection_id: int, event: str, byte_count: int) -> None:
        rec = LogRecord(time.time(), peer, connection_id, event, byte_count)
        with self._lock:
            self._records.append(rec)
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec.__dict__) + "\n")

    @property
    def records(self) -> list[LogRecord]:
        with self._lock:
            return list(self._records)

    def connection_ids(self) -> set[int]:
        return {r.connection_id for r in self.records}


class SourceServer:
    """Serves one model file over the framed protocol; one session per connection."""

    def __init__(self, bind_address: tuple[str, int], model_path: str | Path, log: TransferLog):
        model_path = Path(model_path)
        try:
            payload = model_path.read_bytes()
        except OSError as exc:
            raise FtcaError(f"cannot read model file {model_path}: {exc}") from None
        deserialize_model(payload)  # fail fast, never serve garbage
        self._payload = payload
        self._log = log
        self._next_id = 0
        self._id_lock = threading.Lock()
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind(bind_address)
        except OSError as exc:
            self._listener.close()
            raise ConnectError(f"cannot bind {bind_address}: {exc}") from None
        self._listener.listen()
        self.address: tuple[str, int] = self._listener.getsockname()[:2]
        self._closing = threading.Event()
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closing.is_set():
            try:
                conn, peer = self._listener.accept()
            except OSError:
                return
            with self._id_lock:
                conn_id = self._next_id
                self._next_id += 1
            t = threading.Thread(target=self._serve_one, args=(conn, peer, conn_id), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve_one(self, conn: socket.socket, peer: tuple, conn_id: int) -> None:
        peer_name = f"{peer[0]}:{peer[1]}"
        log = self._log

        def reply_error(reason: str) -> None:
            try:
                sent = send_frame(conn, WireMessage(MessageType.ERROR_REPLY, reason.encode()))
                log.append(peer_name, conn_id, "sent-error-reply", sent)
            except OSError:
                pass

        try:
            conn.settimeout(_SESSION_TIMEOUT_SECS)
            msg = recv_frame(conn)
            log.append(peer_name, conn_id, f"recv-{msg.type.name.lower()}", len(msg.body))
            if msg.type != MessageType.HELLO:
                reply_error("handshake: expected Hello")
                return
            sent = send_frame(conn, WireMessage(MessageType.HELLO))
            log.append(peer_name, conn_id, "sent-hello", sent)
            msg = recv_frame(conn)
            log.append(peer_name, conn_id, f"recv-{msg.type.name.lower()}", len(msg.body))
            if msg.type != MessageType.MODEL_REQUEST:
                reply_error("expected ModelRequest")
                return
            sent = send_frame(conn, WireMessage(MessageType.MODEL_PAYLOAD, self._payload))
            log.append(peer_name, conn_id, "sent-model-payload", sent)
        except (FtcaError, OSError) as exc:
            log.append(peer_name, conn_id, "session-error", 0)
            if isinstance(exc, FtcaError):
                reply_error(f"protocol: {exc}")
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def close(self) -> None:
        self._closing.set()
        try:
            self._listener.close()
        except OSError:
            pass
        self._accept_thread.join(timeout=2.0)
        for t in self._threads:
            t.join(timeout=2.0)

    def __enter__(self) -> "SourceServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_source(
    bind_address: tuple[str, int], model_path: str | Path, log: TransferLog
) -> SourceServer:
    """Start a server for the given model file; returns a running handle."""
    return SourceServer(bind_address, model_path, log)


def _client_timeout(timeout: float | None) -> float:
    env = os.environ.get(TIMEOUT_ENV_VAR)
    if env is not None:
        try:
            return float(env)
        except ValueError:
            raise ConnectError(f"bad {TIMEOUT_ENV_VAR} value {env!r}") from None
    return DEFAULT_FETCH_TIMEOUT_SECS if timeout is None else timeout


def fetch_model_bytes(server_address: tuple[str, int], timeout: float | None = None) -> bytes:
    """Run one Hello/ModelRequest session and return the raw envelope bytes."""
    secs = _client_timeout(timeout)
    try:
        sock = socket.create_connection(server_address, timeout=secs)
    except OSError as exc:
        raise ConnectError(f"cannot connect to {server_address}: {exc}") from None
    try:
        sock.settimeout(secs)
        send_frame(sock, WireMessage(MessageType.HELLO))
        reply = recv_frame(sock)
        if reply.type == MessageType.ERROR_REPLY:
            raise ProtocolError(f"server rejected handshake: {reply.body.decode(errors='replace')}")
        if reply.type != MessageType.HELLO:
            raise ProtocolError(f"expected Hello reply, got {reply.type.name}")
        send_frame(sock, WireMessage(MessageType.MODEL_REQUEST))
        payload = recv_frame(sock)
        if payload.type == MessageType.ERROR_REPLY:
            raise ProtocolError(f"server error: {payload.body.decode(errors='replace')}")
        if payload.type != MessageType.MODEL_PAYLOAD:
            raise ProtocolError(f"expected ModelPayload, got {payload.type.name}")
        return payload.body
    except socket.timeout:
        raise ConnectError(f"timed out after {secs}s talking to {server_address}") from None
    finally:
        sock.close()


def fetch_model(server_address: tuple[str, int], timeout: float | None = None) -> GeneratorModel:
    """Fetch and deserialize a generator model from a source node."""
    return deserialize_model(fetch_model_bytes(server_address, timeout))
