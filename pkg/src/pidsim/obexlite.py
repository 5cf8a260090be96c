"""Framed file-push protocol: bit-exact codec plus client/server sessions.

Wire layout (normative; big-endian throughout)::

    frame   = opcode(1) length(2) [connect-block] header*
    length  = total frame length in bytes, opcode and length field included
    connect-block (only for opcode CONNECT) = version(1)=0x10 flags(1)=0x00
                                              max_packet(2)

    opcodes:   CONNECT=0x80  DISCONNECT=0x81  PUT=0x02  PUT_FINAL=0x82
    responses: CONTINUE=0x90 SUCCESS=0xA0 BAD_REQUEST=0xC0 FORBIDDEN=0xC3

    headers:
        0x01 Name          id(1) vlen(2) value   ascii text, no terminator
        0xC3 Length        id(1) uint32          total payload byte count
        0x48 Body          id(1) vlen(2) value   payload chunk
        0x49 EndOfBody     id(1) vlen(2) value   final payload chunk
        0xCB ConnectionId  id(1) uint32

A push is a PUT sequence: the first frame carries Name + Length + a chunk,
middle frames carry Body chunks, the final-bit frame carries EndOfBody.
When the whole payload fits in one frame the sequence is a single
PUT_FINAL carrying Name + Length + EndOfBody.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import PoweredOffError, ProtocolError, SimError
from .simnet import (
    LinkHandle,
    RadioDevice,
    RadioParams,
    SimTime,
    SimWorld,
    transfer_duration,
)

CONNECT = 0x80
DISCONNECT = 0x81
PUT = 0x02
PUT_FINAL = 0x82
CONTINUE = 0x90
SUCCESS = 0xA0
BAD_REQUEST = 0xC0
FORBIDDEN = 0xC3

KNOWN_OPCODES = frozenset({CONNECT, DISCONNECT, PUT, PUT_FINAL,
                           CONTINUE, SUCCESS, BAD_REQUEST, FORBIDDEN})

HDR_NAME = 0x01
HDR_LENGTH = 0xC3
HDR_BODY = 0x48
HDR_END_OF_BODY = 0x49
HDR_CONNECTION_ID = 0xCB

FRAME_PREFIX = 3        # opcode + 2-byte length field
VALUE_HEADER_PREFIX = 3  # header id + 2-byte value length
U32_HEADER_SIZE = 5      # header id + 4-byte value
CONNECT_BLOCK_SIZE = 4
OBEX_VERSION = 0x10
MAX_FRAME_LENGTH = 0xFFFF
DEFAULT_MAX_PACKET = 1024


@dataclass(frozen=True)
class Name:
    text: str


@dataclass(frozen=True)
class Length:
    value: int


@dataclass(frozen=True)
class Body:
    data: bytes


@dataclass(frozen=True)
class EndOfBody:
    data: bytes


@dataclass(frozen=True)
class ConnectionId:
    value: int


ObexHeader = Union[Name, Length, Body, EndOfBody, ConnectionId]


@dataclass(frozen=True)
class ConnectInfo:
    version: int = OBEX_VERSION
    flags: int = 0x00
    max_packet: int = DEFAULT_MAX_PACKET


@dataclass(frozen=True)
class ObexFrame:
    opcode: int
    headers: tuple[ObexHeader, ...] = ()
    connect: ConnectInfo | None = None


# -- codec -------------------------------------------------------------------


def _encode_header(header: ObexHeader) -> bytes:
    if isinstance(header, Name):
        try:
            raw = header.text.encode("ascii")
        except UnicodeEncodeError:
            raise ProtocolError(f"name is not ASCII: {header.text!r}") from None
        hid = HDR_NAME
    elif isinstance(header, Body):
        raw, hid = header.data, HDR_BODY
    elif isinstance(header, EndOfBody):
        raw, hid = header.data, HDR_END_OF_BODY
    elif isinstance(header, Length):
        if not 0 <= header.value <= 0xFFFFFFFF:
            raise ProtocolError("length header out of uint32 range")
        return bytes([HDR_LENGTH]) + header.value.to_bytes(4, "big")
    elif isinstance(header, ConnectionId):
        if not 0 <= header.value <= 0xFFFFFFFF:
            raise ProtocolError("connection id out of uint32 range")
        return bytes([HDR_CONNECTION_ID]) + header.value.to_bytes(4, "big")
    else:
        raise ProtocolError(f"unknown header type: {header!r}")
    if len(raw) > 0xFFFF:
        raise ProtocolError("oversize-frame: header value exceeds 65535 bytes")
    return bytes([hid]) + len(raw).to_bytes(2, "big") + raw


def encode_frame(frame: ObexFrame) -> bytes:
    if frame.opcode not in KNOWN_OPCODES:
        raise ProtocolError(f"unknown-opcode: {frame.opcode:#04x}")
    if (frame.opcode == CONNECT) != (frame.connect is not None):
        raise ProtocolError("connect block is required exactly for CONNECT frames")
    body = bytearray()
    if frame.connect is not None:
        info = frame.connect
        if not (0 <= info.version <= 0xFF and 0 <= info.flags <= 0xFF):
            raise ProtocolError("connect version/flags out of byte range")
        if not 0 <= info.max_packet <= 0xFFFF:
            raise ProtocolError("connect max_packet out of range")
        body += bytes([info.version, info.flags])
        body += info.max_packet.to_bytes(2, "big")
    for header in frame.headers:
        body += _encode_header(header)
    total = FRAME_PREFIX + len(body)
    if total > MAX_FRAME_LENGTH:
        raise ProtocolError(f"oversize-frame: {total} bytes exceeds {MAX_FRAME_LENGTH}")
    return bytes([frame.opcode]) + total.to_bytes(2, "big") + bytes(body)


def decode_frame(data: bytes) -> tuple[ObexFrame, bytes]:
    """Decode one frame; returns (frame, remainder-after-the-frame)."""
    if len(data) < FRAME_PREFIX:
        raise ProtocolError("truncated-frame: need at least 3 bytes")
    opcode = data[0]
    total = int.from_bytes(data[1:3], "big")
    if opcode not in KNOWN_OPCODES:
        raise ProtocolError(f"unknown-opcode: {opcode:#04x}")
    if total < FRAME_PREFIX:
        raise ProtocolError("length-mismatch: declared length below minimum")
    if len(data) < total:
        raise ProtocolError(
            f"truncated-frame: declared {total} bytes, have {len(data)}")
    pos = FRAME_PREFIX
    connect = None
    if opcode == CONNECT:
        if total < FRAME_PREFIX + CONNECT_BLOCK_SIZE:
            raise ProtocolError("length-mismatch: connect block missing")
        connect = ConnectInfo(data[3], data[4], int.from_bytes(data[5:7], "big"))
        pos = FRAME_PREFIX + CONNECT_BLOCK_SIZE
    headers: list[ObexHeader] = []
    while pos < total:
        hid = data[pos]
        if hid in (HDR_NAME, HDR_BODY, HDR_END_OF_BODY):
            if pos + VALUE_HEADER_PREFIX > total:
                raise ProtocolError("length-mismatch: header prefix overruns frame")
            vlen = int.from_bytes(data[pos + 1:pos + 3], "big")
            if pos + VALUE_HEADER_PREFIX + vlen > total:
                raise ProtocolError("length-mismatch: header value overruns frame")
            value = data[pos + 3:pos + 3 + vlen]
            pos += VALUE_HEADER_PREFIX + vlen
            if hid == HDR_NAME:
                try:
                    headers.append(Name(value.decode("ascii")))
                except UnicodeDecodeError:
                    raise ProtocolError("name is not ASCII") from None
            elif hid == HDR_BODY:
                headers.append(Body(bytes(value)))
            else:
                headers.append(EndOfBody(bytes(value)))
        elif hid in (HDR_LENGTH, HDR_CONNECTION_ID):
            if pos + U32_HEADER_SIZE > total:
                raise ProtocolError("length-mismatch: header value overruns frame")
            value = int.from_bytes(data[pos + 1:pos + 5], "big")
            pos += U32_HEADER_SIZE
            if hid == HDR_LENGTH:
                headers.append(Length(value))
            else:
                headers.append(ConnectionId(value))
        else:
            raise ProtocolError(f"unknown-header-id: {hid:#04x}")
    return ObexFrame(opcode, tuple(headers), connect), data[total:]


# -- chunking ------------------------------------------------------------


def first_frame_capacity(name: str, max_packet: int) -> int:
    """Payload bytes that fit in the sequence-opening frame."""
    overhead = (FRAME_PREFIX
                + VALUE_HEADER_PREFIX + len(name.encode("ascii"))
                + U32_HEADER_SIZE
                + VALUE_HEADER_PREFIX)
    return max_packet - overhead


def continuation_capacity(max_packet: int) -> int:
    """Payload bytes that fit in each Body/EndOfBody-only frame."""
    return max_packet - FRAME_PREFIX - VALUE_HEADER_PREFIX


def put_frames(name: str, payload: bytes, max_packet: int) -> list[ObexFrame]:
    """Split a named payload into the PUT frame sequence for ``max_packet``."""
    if not name:
        raise ValueError("file name must be non-empty")
    first_cap = first_frame_capacity(name, max_packet)
    cont_cap = continuation_capacity(max_packet)
    if first_cap < 0 or cont_cap < 1:
        raise ProtocolError("name too long for negotiated packet size")
    if len(payload) <= first_cap:
        return [ObexFrame(PUT_FINAL,
                          (Name(name), Length(len(payload)), EndOfBody(payload)))]
    frames = [ObexFrame(PUT, (Name(name), Length(len(payload)),
                              Body(payload[:first_cap])))]
    rest = payload[first_cap:]
    while len(rest) > cont_cap:
        frames.append(ObexFrame(PUT, (Body(rest[:cont_cap]),)))
        rest = rest[cont_cap:]
    frames.append(ObexFrame(PUT_FINAL, (EndOfBody(rest),)))
    return frames


def expected_frame_count(name: str, payload_len: int, max_packet: int) -> int:
    """Closed form for len(put_frames(...)); the brute-force tests check it."""
    first_cap = first_frame_capacity(name, max_packet)
    cont_cap = continuation_capacity(max_packet)
    if payload_len <= first_cap:
        return 1
    return 1 + -(-(payload_len - first_cap) // cont_cap)


# -- server side ------------------------------------------------------------


def _response(opcode: int) -> ObexFrame:
    return ObexFrame(opcode)


class ObexServer:
    """Receiving side: reassembles PUT sequences into the device inbox."""

    def __init__(self, device: RadioDevice,
                 max_packet: int = DEFAULT_MAX_PACKET) -> None:
        self.device = device
        self.max_packet = max_packet
        self._name: str | None = None
        self._chunks: list[bytes] = []

    def _reset(self) -> None:
        self._name = None
        self._chunks = []

    def serve_push(self, frame: ObexFrame) -> ObexFrame:
        """Handle one client frame and return the response frame.

        Continue for non-final PUT, Success after the final one (at which
        point the reassembled payload lands in the device inbox), Forbidden
        when the device refuses pushes, BadRequest on a malformed sequence.
        """
        if not self.device.powered:
            raise PoweredOffError(f"{self.device.mac} is powered off")
        if frame.opcode == CONNECT:
            self._reset()
            return _response(SUCCESS)
        if frame.opcode == DISCONNECT:
            self._reset()
            return _response(SUCCESS)
        if frame.opcode not in (PUT, PUT_FINAL):
            return _response(BAD_REQUEST)
        if self.device.refuse_push:
            self._reset()
            return _response(FORBIDDEN)

        final = frame.opcode == PUT_FINAL
        end_seen = False
        for header in frame.headers:
            if isinstance(header, Name):
                if self._name is not None or end_seen or not header.text:
                    self._reset()
                    return _response(BAD_REQUEST)
                self._name = header.text
            elif isinstance(header, Body):
                if self._name is None or end_seen:
                    self._reset()
                    return _response(BAD_REQUEST)
                self._chunks.append(header.data)
            elif isinstance(header, EndOfBody):
                if self._name is None or end_seen or not final:
                    self._reset()
                    return _response(BAD_REQUEST)
                self._chunks.append(header.data)
                end_seen = True
            # Length and ConnectionId are advisory metadata.
        if final:
            if self._name is None or not end_seen:
                self._reset()
                return _response(BAD_REQUEST)
            self.device.inbox[self._name] = b"".join(self._chunks)
            self._reset()
            return _response(SUCCESS)
        if self._name is None:
            self._reset()
            return _response(BAD_REQUEST)
        return _response(CONTINUE)


# -- client side -------------------------------------------------------------


@dataclass(frozen=True)
class TransferOutcome:
    status: str  # delivered | refused | link-lost
    file_name: str
    payload_bytes: int
    frames_sent: int
    started_at: SimTime
    finished_at: SimTime

    @property
    def duration(self) -> SimTime:
        return self.finished_at - self.started_at

    @property
    def delivered(self) -> bool:
        return self.status == "delivered"


class PushSession:
    """One client push session over an open piconet link.

    States: idle -> connected -> transferring -> done|failed, with
    connected -> done for a disconnect without a transfer.  One transfer
    per session; the controller opens a fresh session per attempt.
    """

    def __init__(self, world: SimWorld, link: LinkHandle,
                 params: RadioParams | None = None,
                 max_packet: int = DEFAULT_MAX_PACKET) -> None:
        self.world = world
        self.link = link
        self.params = params or world.params
        self.max_packet = max_packet
        self.negotiated: int | None = None
        self.state = "idle"
        self.server: ObexServer | None = None

    def _exchange(self, frame: ObexFrame) -> ObexFrame:
        raw = encode_frame(frame)
        if len(raw) > (self.negotiated or self.max_packet):
            raise ProtocolError("frame exceeds negotiated packet size")
        decoded, rest = decode_frame(raw)
        assert not rest
        assert self.server is not None
        return self.server.serve_push(decoded)

    def connect(self) -> None:
        if self.state != "idle":
            raise SimError(f"connect from state {self.state}")
        if not self.link.open:
            self.state = "failed"
            raise SimError("link is closed")
        device = self.world.device(self.link.slave)
        self.server = ObexServer(device, device.max_packet)
        self.negotiated = min(self.max_packet, device.max_packet)
        resp = self._exchange(ObexFrame(
            CONNECT, (), ConnectInfo(max_packet=self.max_packet)))
        if resp.opcode != SUCCESS:
            self.state = "failed"
            raise ProtocolError(f"connect rejected: {resp.opcode:#04x}")
        self.state = "connected"

    def push_file(self, name: str, payload: bytes) -> TransferOutcome:
        """Send one named payload; advances sim time by the transfer duration.

        Departures processed inside that window close the link and fail the
        transfer; nothing reaches the inbox unless the final frame is
        acknowledged with Success.
        """
        if self.state != "connected":
            raise SimError(f"push from state {self.state}")
        if not name:
            raise ValueError("file name must be non-empty")
        self.state = "transferring"
        world = self.world
        slave = self.link.slave
        device = world.device(slave)
        started = world.now
        world.emit("transfer_started", mac=slave, file=name, bytes=len(payload))

        if device.refuse_push:
            # Refusal comes back on the first frame: only the session
            # overhead is spent.
            world.advance(started + self.params.session_overhead)
            first = put_frames(name, payload, self.negotiated or self.max_packet)[0]
            resp = self._exchange(first)
            assert resp.opcode == FORBIDDEN
            self.state = "failed"
            world.emit("transfer_failed", mac=slave, file=name, reason="refused")
            return TransferOutcome("refused", name, len(payload), 1,
                                   started, world.now)

        world.advance(started + transfer_duration(len(payload), self.params))
        lost = not (self.link.open and device.powered
                    and device.present_at(world.now))
        if not lost and device.drop_transfers > 0:
            device.drop_transfers -= 1
            world.disconnect(self.link, reason="link-lost")
            lost = True
        if not lost and world.loss_probability > 0 \
                and world.rng.random() < world.loss_probability:
            world.disconnect(self.link, reason="link-lost")
            lost = True
        if lost:
            self.state = "failed"
            world.emit("transfer_failed", mac=slave, file=name, reason="link-lost")
            return TransferOutcome("link-lost", name, len(payload), 0,
                                   started, world.now)

        sent = 0
        for frame in put_frames(name, payload, self.negotiated or self.max_packet):
            resp = self._exchange(frame)
            sent += 1
            final = frame.opcode == PUT_FINAL
            expected = SUCCESS if final else CONTINUE
            if resp.opcode != expected:
                self.state = "failed"
                world.emit("transfer_failed", mac=slave, file=name,
                           reason=f"response_{resp.opcode:#04x}")
                return TransferOutcome("link-lost", name, len(payload), sent,
                                       started, world.now)
        self.state = "done"
        world.emit("transfer_completed", mac=slave, file=name,
                   bytes=len(payload), frames=sent)
        return TransferOutcome("delivered", name, len(payload), sent,
                               started, world.now)

    def disconnect(self) -> None:
        if self.state in ("connected", "done") and self.link.open:
            self._exchange(ObexFrame(DISCONNECT))
        if self.state == "connected":
            self.state = "done"
        if self.link.open:
            self.world.disconnect(self.link)
