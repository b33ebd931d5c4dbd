import os
import socket
import struct
import threading
import time

import numpy as np
import pytest

from ftca.data import DomainDataset, FeatureSchema
from ftca.errors import (
    ConnectError,
    FrameTooLargeError,
    FtcaError,
    IncompleteFrameError,
    ProtocolError,
)
from ftca.fednet import (
    MAX_BODY_BYTES,
    MessageType,
    TransferLog,
    WireMessage,
    decode_frame,
    encode_frame,
    fetch_model,
    fetch_model_bytes,
    recv_frame,
    send_frame,
    serve_source,
)
from ftca.tabgen import fit_statistical, sample, serialize_model

SCHEMA = FeatureSchema(("a", "b"), ("CPU",))


@pytest.fixture()
def model_file(tmp_path):
    rng = np.random.default_rng(0)
    feats = rng.normal(loc=3.0, size=(120, 2))
    labels = (feats @ np.array([0.5, 1.5]))[:, None] + 0.1 * rng.normal(size=(120, 1))
    ds = DomainDataset(SCHEMA, feats, labels)
    model = fit_statistical(ds)
    path = tmp_path / "model.ftcamodel"
    path.write_bytes(serialize_model(model))
    return path, ds, model


def test_encode_hello_golden():
    assert encode_frame(WireMessage(MessageType.HELLO)) == b"\x00\x00\x00\x00\x01"


def test_frame_round_trip():
    body = bytes(range(256)) * 4  # 1 KiB
    msg = WireMessage(MessageType.MODEL_PAYLOAD, body)
    decoded, rest = decode_frame(encode_frame(msg))
    assert decoded == msg
    assert rest == b""


def test_decode_consumes_exactly_one_frame():
    a = encode_frame(WireMessage(MessageType.HELLO))
    b = encode_frame(WireMessage(MessageType.MODEL_REQUEST, b"x"))
    first, rest = decode_frame(a + b)
    assert first.type == MessageType.HELLO
    second, rest = decode_frame(rest)
    assert second == WireMessage(MessageType.MODEL_REQUEST, b"x")
    assert rest == b""


def test_decode_truncated_stream():
    data = encode_frame(WireMessage(MessageType.MODEL_PAYLOAD, b"hello world"))
    with pytest.raises(IncompleteFrameError):
        decode_frame(data[:-3])


def test_decode_unknown_type():
    with pytest.raises(ProtocolError):
        decode_frame(b"\x00\x00\x00\x00\x7f")


def test_oversize_frames_rejected():
    huge = struct.pack(">IB", MAX_BODY_BYTES + 1, 1)
    with pytest.raises(FrameTooLargeError):
        decode_frame(huge)
    msg = WireMessage(MessageType.MODEL_PAYLOAD, b"")
    object.__setattr__(msg, "body", b"")  # keep dataclass frozen semantics
    with pytest.raises(FrameTooLargeError):
        encode_frame(WireMessage(MessageType.MODEL_PAYLOAD, b"x" * (MAX_BODY_BYTES + 1)))


def test_serve_fetch_round_trip(model_file):
    path, ds, model = model_file
    log = TransferLog()
    with serve_source(("127.0.0.1", 0), path, log) as server:
        blob = fetch_model_bytes(server.address)
        assert blob == path.read_bytes()
        fetched = fetch_model(server.address)
    a = sample(model, 50, 123)
    b = sample(fetched, 50, 123)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    events = [r.event for r in log.records]
    assert "sent-model-payload" in events


def test_payload_byte_identical_across_sessions(model_file):
    path, _, _ = model_file
    with serve_source(("127.0.0.1", 0), path, TransferLog()) as server:
        a = fetch_model_bytes(server.address)
        b = fetch_model_bytes(server.address)
    assert a == b


def test_request_before_hello_gets_handshake_error(model_file):
    path, _, _ = model_file
    with serve_source(("127.0.0.1", 0), path, TransferLog()) as server:
        with socket.create_connection(server.address, timeout=5) as sock:
            send_frame(sock, WireMessage(MessageType.MODEL_REQUEST))
            reply = recv_frame(sock)
            assert reply.type == MessageType.ERROR_REPLY
            assert b"handshake" in reply.body


def test_error_reply_surfaces_as_protocol_error(model_file):
    path, _, _ = model_file
    with serve_source(("127.0.0.1", 0), path, TransferLog()) as server:
        with socket.create_connection(server.address, timeout=5) as sock:
            send_frame(sock, WireMessage(MessageType.HELLO))
            recv_frame(sock)
            send_frame(sock, WireMessage(MessageType.HELLO))  # wrong second message
            reply = recv_frame(sock)
            assert reply.type == MessageType.ERROR_REPLY


def test_client_rejects_error_reply(model_file):
    path, _, _ = model_file

    # A fake "server" that always replies ErrorReply to the handshake.
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen()

    def run():
        conn, _ = listener.accept()
        recv_frame(conn)
        send_frame(conn, WireMessage(MessageType.ERROR_REPLY, b"go away"))
        conn.close()

    t = threading.Thread(target=run, daemon=True)
    t.start()
    with pytest.raises(ProtocolError, match="go away"):
        fetch_model_bytes(listener.getsockname())
    listener.close()


def test_two_sequential_clients_logged_independently(model_file):
    path, _, _ = model_file
    log = TransferLog()
    with serve_source(("127.0.0.1", 0), path, log) as server:
        fetch_model_bytes(server.address)
        fetch_model_bytes(server.address)
    assert len(log.connection_ids()) == 2


def test_concurrent_sessions(model_file):
    path, _, _ = model_file
    log = TransferLog()
    with serve_source(("127.0.0.1", 0), path, log) as server:
        s1 = socket.create_connection(server.address, timeout=5)
        send_frame(s1, WireMessage(MessageType.HELLO))
        assert recv_frame(s1).type == MessageType.HELLO
        # While s1 is mid-session, a second full session completes.
        blob = fetch_model_bytes(server.address)
        assert blob == path.read_bytes()
        send_frame(s1, WireMessage(MessageType.MODEL_REQUEST))
        assert recv_frame(s1).type == MessageType.MODEL_PAYLOAD
        s1.close()
    assert len(log.connection_ids()) == 2


def test_connect_error_on_closed_port():
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    addr = listener.getsockname()
    listener.close()
    with pytest.raises(ConnectError):
        fetch_model_bytes(addr, timeout=2.0)


def test_env_var_overrides_timeout(model_file, monkeypatch):
    path, _, _ = model_file
    monkeypatch.setenv("FTCA_TIMEOUT_SECS", "0.000001")
    with serve_source(("127.0.0.1", 0), path, TransferLog()) as server:
        with pytest.raises(ConnectError):
            fetch_model_bytes(server.address)
    monkeypatch.setenv("FTCA_TIMEOUT_SECS", "not-a-number")
    with pytest.raises(ConnectError):
        fetch_model_bytes(("127.0.0.1", 1))


def test_bad_model_file_fails_at_startup(tmp_path):
    bad = tmp_path / "bad.ftcamodel"
    bad.write_bytes(b"this is not an envelope")
    with pytest.raises(FtcaError):
        serve_source(("127.0.0.1", 0), bad, TransferLog())
    with pytest.raises(FtcaError):
        serve_source(("127.0.0.1", 0), tmp_path / "missing.ftcamodel", TransferLog())


def test_traffic_contains_no_training_floats(model_file):
    path, ds, _ = model_file
    with serve_source(("127.0.0.1", 0), path, TransferLog()) as server:
        traffic = bytearray()
        with socket.create_connection(server.address, timeout=5) as sock:
            for out in (WireMessage(MessageType.HELLO), WireMessage(MessageType.MODEL_REQUEST)):
                sock.sendall(encode_frame(out))
                header = b""
                while len(header) < 5:
                    header += sock.recv(5 - len(header))
                traffic += header
                (length,) = struct.unpack(">I", header[:4])
                body = b""
                while len(body) < length:
                    chunk = sock.recv(length - len(body))
                    assert chunk
                    body += chunk
                traffic += body
    windows = {bytes(traffic[i : i + 8]) for i in range(len(traffic) - 7)}
    cells = np.hstack([ds.features, ds.labels]).ravel()
    for value in cells:
        assert struct.pack("<d", value) not in windows
        assert struct.pack(">d", value) not in windows
    for value in cells:
        assert format(value, ".17g").encode() not in traffic


def test_fuzzed_streams_never_crash_server(model_file):
    path, _, _ = model_file
    log = TransferLog()
    rng = np.random.default_rng(99)
    with serve_source(("127.0.0.1", 0), path, log) as server:
        for trial in range(60):
            blob = rng.integers(0, 256, size=rng.integers(0, 400), dtype=np.uint8).tobytes()
            try:
                with socket.create_connection(server.address, timeout=5) as sock:
                    sock.sendall(blob)
                    sock.settimeout(0.3)
                    try:
                        while sock.recv(4096):
                            pass
                    except (socket.timeout, OSError):
                        pass
            except OSError:
                pass
        # Server still serves a clean session afterwards.
        assert fetch_model_bytes(server.address) == path.read_bytes()


def test_transfer_log_file_sink(model_file, tmp_path):
    path, _, _ = model_file
    log_path = tmp_path / "transfers.jsonl"
    log = TransferLog(log_path)
    with serve_source(("127.0.0.1", 0), path, log) as server:
        fetch_model_bytes(server.address)
    lines = log_path.read_text().strip().splitlines()
    assert len(lines) == len(log.records)
    assert any("sent-model-payload" in line for line in lines)
