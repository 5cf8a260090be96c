"""Service records, per-device service search, and connection URLs.

A service is addressed by a connection URL of the form
``<scheme>://<MAC>:<channel>/<path>``; the scheme is carried but never
interpreted.  The file-transfer filter matches on the service name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import MalformedUrlError, PoweredOffError, UnknownDeviceError
from .simnet import MacId, RadioParams, SimWorld

# Case-insensitive fragment a service name must contain to count as the
# file-transfer profile.
FTP_NAME_FRAGMENT = "file transfer"

_CHANNEL_PATH = re.compile(r"(\d+)/(.*)", re.S)


@dataclass(frozen=True)
class ConnectionUrl:
    scheme: str
    mac: MacId
    channel: int
    path: str

    def __post_init__(self) -> None:
        if not self.scheme or any(c in self.scheme for c in ":/"):
            raise ValueError(f"bad scheme: {self.scheme!r}")
        if self.channel < 1:
            raise ValueError("channel must be a positive integer")
        object.__setattr__(self, "mac", MacId(self.mac))

    def render(self) -> str:
        return f"{self.scheme}://{self.mac}:{self.channel}/{self.path}"


def parse_url(text: str) -> ConnectionUrl:
    """Inverse of ConnectionUrl.render on its image."""
    if "://" not in text:
        raise MalformedUrlError(f"missing scheme separator in {text!r}")
    scheme, rest = text.split("://", 1)
    if ":" not in rest:
        raise MalformedUrlError(f"missing channel in {text!r}")
    authority, tail = rest.split(":", 1)
    m = _CHANNEL_PATH.fullmatch(tail)
    if m is None:
        raise MalformedUrlError(f"missing channel/path in {text!r}")
    try:
        mac = MacId(authority)
    except ValueError:
        raise MalformedUrlError(
            f"authority is not a 12-hex-digit MAC in {text!r}") from None
    try:
        return ConnectionUrl(scheme, mac, int(m.group(1)), m.group(2))
    except ValueError as exc:
        raise MalformedUrlError(str(exc)) from None


def parse_mac_from_url(url_text: str) -> MacId:
    return parse_url(url_text).mac


@dataclass(frozen=True)
class ServiceRecord:
    service_id: int
    service_name: str
    connection_url: ConnectionUrl

    def __post_init__(self) -> None:
        if self.service_id < 1:
            raise ValueError("service_id must be >= 1")

    def is_ftp(self) -> bool:
        return FTP_NAME_FRAGMENT in self.service_name.lower()


@dataclass
class ServiceCatalog:
    """Outcome of one service search: records per target, plus the targets
    that answered with nothing and the ones that were gone mid-search."""

    services: dict[MacId, list[ServiceRecord]] = field(default_factory=dict)
    empty: list[MacId] = field(default_factory=list)
    departed: list[MacId] = field(default_factory=list)

    def queried(self) -> set[MacId]:
        return set(self.services) | set(self.empty) | set(self.departed)

    def with_services(self) -> list[MacId]:
        return sorted(self.services)


def search_services(world: SimWorld, initiator: MacId, targets,
                    params: RadioParams | None = None) -> ServiceCatalog:
    """Query ``targets`` (a prior inquiry's discoveries) for their records.

    Targets are queried one at a time in MAC order, each consuming
    ``service_search_per_device`` of sim time; a target that is absent when
    its turn completes is reported under ``departed``.
    """
    params = params or world.params
    initiator = MacId(initiator)
    ini = world.device(initiator)
    if not ini.powered:
        raise PoweredOffError(f"initiator {initiator} is powered off")
    order = sorted(MacId(t) for t in targets)
    catalog = ServiceCatalog()
    if not order:
        return catalog
    for i, mac in enumerate(order):
        if mac not in world.devices:
            raise UnknownDeviceError(f"no device with MAC {mac}")
        at = world.now + (i + 1) * params.service_search_per_device
        world.schedule(at, lambda w, m=mac, c=catalog: _query_one(w, m, c))
    world.advance(world.now + len(order) * params.service_search_per_device)
    return catalog


def _query_one(world: SimWorld, mac: MacId, catalog: ServiceCatalog) -> None:
    dev = world.devices.get(mac)
    if dev is None or not dev.present_at(world.now) or not dev.powered:
        catalog.departed.append(mac)
        world.emit("service_search_completed", mac=mac, status="departed")
        return
    records = sorted(dev.services, key=lambda r: r.service_id)
    if records:
        catalog.services[mac] = records
        world.emit("services_discovered", mac=mac, count=len(records))
    else:
        catalog.empty.append(mac)
    world.emit("service_search_completed", mac=mac, services=len(records),
               status="ok")


def filter_ftp(catalog: ServiceCatalog) -> dict[MacId, ServiceRecord]:
    """Per device, the lowest-id record whose name matches the file-transfer
    profile; devices without a match are absent from the result."""
    out: dict[MacId, ServiceRecord] = {}
    for mac in sorted(catalog.services):
        for record in sorted(catalog.services[mac], key=lambda r: r.service_id):
            if record.is_ftp():
                out[mac] = record
                break
    return out
