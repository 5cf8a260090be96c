"""Deterministic event-driven radio world.

Devices sit on a 2-D plane and take part in inquiry (neighbor discovery),
master/slave piconet links, and timed transfers.  All times are integer
milliseconds, every random draw comes from one seeded generator, and every
observable action lands in an append-only log, so a given (scenario, seed)
pair replays to the same log byte for byte.

Log line format (stable, used by golden tests)::

    t=<millis> seq=<n> ev=<event-name> key=value ...

with keys sorted alphabetically, one event per line, LF terminated.
"""

from __future__ import annotations

import heapq
import math
import random
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .errors import (
    OutOfRangeError,
    PiconetFullError,
    PoweredOffError,
    SimError,
    UnknownDeviceError,
)

if TYPE_CHECKING:
    from .sdp import ServiceRecord

# Milliseconds since scenario epoch.
SimTime = int

MAX_SLAVES = 7

_MAC_PATTERN = re.compile(r"[0-9A-F]{12}")


class MacId(str):
    """48-bit device address as exactly 12 uppercase hex digits.

    Lowercase input is normalized once; construction is idempotent.
    """

    __slots__ = ()

    def __new__(cls, value: str) -> "MacId":
        text = str(value).upper()
        if not _MAC_PATTERN.fullmatch(text):
            raise ValueError(f"not a 12-hex-digit MAC: {value!r}")
        return super().__new__(cls, text)


@dataclass(frozen=True)
class RadioParams:
    """Tunable radio model: disc range, window lengths, link rate."""

    range_m: float = 10.0
    inquiry_duration: SimTime = 16_000
    service_search_per_device: SimTime = 2_000
    link_rate_bps: int = 3_000_000
    session_overhead: SimTime = 100

    def __post_init__(self) -> None:
        for name in ("range_m", "inquiry_duration", "service_search_per_device",
                     "link_rate_bps", "session_overhead"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class RadioDevice:
    """One simulated endpoint: identity, state, position, service records.

    ``arrival``/``departure`` script presence; a device takes part in
    discovery only while powered, discoverable, and present.
    """

    mac: MacId
    friendly_name: str
    position: tuple[float, float] = (0.0, 0.0)
    powered: bool = True
    discoverable: bool = True
    services: list["ServiceRecord"] = field(default_factory=list)
    arrival: SimTime = 0
    departure: SimTime | None = None
    refuse_push: bool = False
    drop_transfers: int = 0  # scripted link loss: first N pushes to this device fail
    max_packet: int = 1024
    inbox: dict[str, bytes] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.mac = MacId(self.mac)
        if self.arrival < 0:
            raise ValueError("arrival must be non-negative")
        if self.departure is not None and self.departure <= self.arrival:
            raise ValueError("departure must be after arrival")

    def present_at(self, t: SimTime) -> bool:
        if t < self.arrival:
            return False
        return self.departure is None or t < self.departure


@dataclass
class Piconet:
    master: MacId
    slaves: set[MacId] = field(default_factory=set)


@dataclass(frozen=True)
class LogEvent:
    """One logged world event; ``fields`` is pre-rendered and key-sorted."""

    time: SimTime
    seq: int
    name: str
    fields: tuple[tuple[str, str], ...]

    def line(self) -> str:
        parts = [f"t={self.time}", f"seq={self.seq}", f"ev={self.name}"]
        parts.extend(f"{k}={v}" for k, v in self.fields)
        return " ".join(parts)


@dataclass
class InquiryHandle:
    """Result carrier for one inquiry; filled in as the world advances."""

    initiator: MacId
    started_at: SimTime
    completes_at: SimTime
    discovered: list[tuple[MacId, SimTime]] = field(default_factory=list)
    done: bool = False

    def discovered_macs(self) -> list[MacId]:
        return [mac for mac, _ in self.discovered]


@dataclass
class LinkHandle:
    master: MacId
    slave: MacId
    opened_at: SimTime
    open: bool = True
    closed_reason: str | None = None


def _render(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


class SimWorld:
    """The single-threaded event loop holding devices, links, and the log."""

    def __init__(self, seed: int = 0, params: RadioParams | None = None,
                 loss_probability: float = 0.0) -> None:
        if not 0.0 <= loss_probability <= 1.0:
            raise ValueError("loss_probability must be in [0, 1]")
        self.now: SimTime = 0
        self.rng_seed = seed
        self.rng = random.Random(seed)
        self.params = params or RadioParams()
        self.loss_probability = loss_probability
        self.devices: dict[MacId, RadioDevice] = {}
        self.piconets: list[Piconet] = []
        self.log: list[LogEvent] = []
        self._links: list[LinkHandle] = []
        self._queue: list[tuple[SimTime, int, Callable[[SimWorld], None]]] = []
        self._sched_seq = 0

    # -- device registry -------------------------------------------------

    def add_device(self, device: RadioDevice) -> RadioDevice:
        if device.mac in self.devices:
            raise ValueError(f"duplicate MAC {device.mac}")
        self.devices[device.mac] = device
        if device.arrival > self.now:
            self.schedule(device.arrival,
                          lambda w, m=device.mac: w.emit("device_arrived", mac=m))
        if device.departure is not None:
            self.schedule(device.departure,
                          lambda w, m=device.mac: w._depart(m))
        return device

    def device(self, mac: MacId) -> RadioDevice:
        try:
            return self.devices[MacId(mac)]
        except KeyError:
            raise UnknownDeviceError(f"no device with MAC {mac}") from None

    # -- event loop --------------------------------------------------------

    def schedule(self, at: SimTime, action: Callable[["SimWorld"], None]) -> None:
        if at < self.now:
            raise ValueError("cannot schedule in the past")
        heapq.heappush(self._queue, (at, self._sched_seq, action))
        self._sched_seq += 1

    def emit(self, event_name: str, **fields: object) -> LogEvent:
        rendered = tuple(sorted((k, _render(v)) for k, v in fields.items()))
        event = LogEvent(self.now, len(self.log), event_name, rendered)
        self.log.append(event)
        return event

    def advance(self, until: SimTime) -> list[LogEvent]:
        """Process every queued event with time <= until, in (time, insertion)
        order, then set the clock to ``until``.  Returns the events emitted."""
        if until < self.now:
            raise ValueError("cannot advance backwards")
        mark = len(self.log)
        while self._queue and self._queue[0][0] <= until:
            at, _, action = heapq.heappop(self._queue)
            self.now = at
            action(self)
            self.check_invariants()
        self.now = until
        return self.log[mark:]

    def check_invariants(self) -> None:
        for net in self.piconets:
            if len(net.slaves) > MAX_SLAVES:
                raise AssertionError(f"piconet of {net.master} exceeds {MAX_SLAVES} slaves")
            if net.master in net.slaves:
                raise AssertionError("piconet master listed as its own slave")
        if len(self.log) >= 2 and self.log[-2].time > self.log[-1].time:
            raise AssertionError("event log went backwards in time")

    def render_log(self) -> str:
        return "".join(ev.line() + "\n" for ev in self.log)

    # -- piconet links -----------------------------------------------------

    def piconet_of(self, master: MacId) -> Piconet | None:
        for net in self.piconets:
            if net.master == master:
                return net
        return None

    def connect(self, master: MacId, slave: MacId) -> LinkHandle:
        """Attach ``slave`` to ``master``'s piconet and open a link."""
        master = MacId(master)
        slave = MacId(slave)
        m_dev = self.device(master)
        s_dev = self.device(slave)
        for dev in (m_dev, s_dev):
            if not dev.powered:
                raise PoweredOffError(f"{dev.mac} is powered off")
            if not dev.present_at(self.now):
                raise OutOfRangeError(f"{dev.mac} is not present")
        if not in_range(m_dev, s_dev, self.params):
            raise OutOfRangeError(f"{slave} is out of range of {master}")
        net = self.piconet_of(master)
        if net is None:
            net = Piconet(master)
            self.piconets.append(net)
        if slave in net.slaves:
            raise SimError(f"{slave} is already a slave of {master}")
        if len(net.slaves) >= MAX_SLAVES:
            raise PiconetFullError(
                f"piconet of {master} already has {MAX_SLAVES} slaves")
        net.slaves.add(slave)
        link = LinkHandle(master, slave, self.now)
        self._links.append(link)
        self.emit("link_connected", master=master, slave=slave)
        self.check_invariants()
        return link

    def disconnect(self, link: LinkHandle, reason: str = "disconnect") -> None:
        if not link.open:
            return
        link.open = False
        link.closed_reason = reason
        net = self.piconet_of(link.master)
        if net is not None:
            net.slaves.discard(link.slave)
            if not net.slaves:
                self.piconets.remove(net)
        self.emit("link_closed", master=link.master, slave=link.slave, reason=reason)

    def open_links(self) -> list[LinkHandle]:
        return [ln for ln in self._links if ln.open]

    def _depart(self, mac: MacId) -> None:
        for link in self._links:
            if link.open and mac in (link.master, link.slave):
                self.disconnect(link, reason="departed")
        self.emit("device_departed", mac=mac)


# -- module-level operations ----------------------------------------------


def advance(world: SimWorld, until: SimTime) -> list[LogEvent]:
    return world.advance(until)


def in_range(a: RadioDevice, b: RadioDevice, params: RadioParams) -> bool:
    return math.dist(a.position, b.position) <= params.range_m


def transfer_duration(nbytes: int, params: RadioParams) -> SimTime:
    """Session overhead plus payload air time, rounded up to whole ms."""
    if nbytes < 0:
        raise ValueError("byte count must be non-negative")
    bits = nbytes * 8
    return params.session_overhead + -(-bits * 1000 // params.link_rate_bps)


def start_inquiry(world: SimWorld, initiator: MacId,
                  params: RadioParams | None = None) -> InquiryHandle:
    """Begin neighbor discovery from ``initiator``.

    Every other device gets one uniform response instant inside
    (now, now+inquiry_duration], drawn in MAC order from the world RNG;
    whether it actually responds is decided at that instant (powered,
    discoverable, in range, present).  Advance the world past
    ``handle.completes_at`` to collect the result.
    """
    params = params or world.params
    initiator = MacId(initiator)
    dev = world.device(initiator)
    if not dev.powered:
        raise PoweredOffError(f"initiator {initiator} is powered off")
    handle = InquiryHandle(initiator, world.now, world.now + params.inquiry_duration)
    world.emit("inquiry_started", initiator=initiator)
    for mac in sorted(m for m in world.devices if m != initiator):
        at = world.now + 1 + world.rng.randrange(params.inquiry_duration)
        world.schedule(at, lambda w, m=mac, h=handle, p=params: _inquiry_response(w, h, m, p))
    world.schedule(handle.completes_at, lambda w, h=handle: _inquiry_complete(w, h))
    return handle


def _inquiry_response(world: SimWorld, handle: InquiryHandle,
                      mac: MacId, params: RadioParams) -> None:
    dev = world.devices.get(mac)
    ini = world.devices.get(handle.initiator)
    if dev is None or ini is None:
        return
    if not (ini.powered and ini.present_at(world.now)):
        return
    if dev.powered and dev.discoverable and dev.present_at(world.now) \
            and in_range(ini, dev, params):
        handle.discovered.append((mac, world.now))
        world.emit("device_discovered", mac=mac, name=dev.friendly_name)


def _inquiry_complete(world: SimWorld, handle: InquiryHandle) -> None:
    handle.done = True
    macs = sorted(m for m, _ in handle.discovered)
    world.emit("inquiry_completed", initiator=handle.initiator,
               count=len(macs), macs=",".join(macs))


def connect(world: SimWorld, master: MacId, slave: MacId) -> LinkHandle:
    return world.connect(master, slave)
