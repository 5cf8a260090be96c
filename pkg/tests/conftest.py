"""Shared builders for the test suite."""

from __future__ import annotations

import pytest
from hypothesis import settings

from pidsim.sdp import ConnectionUrl, ServiceRecord
from pidsim.simnet import MacId, RadioDevice, RadioParams, SimWorld

# Property tests replay identically run to run, like the simulator itself.
settings.register_profile("repo", derandomize=True, max_examples=200)
settings.load_profile("repo")

LOCAL = MacId("001122334455")


def mac(n: int, prefix: str = "0019E3A2") -> MacId:
    return MacId(f"{prefix}{n:04X}")


def ftp_record(device_mac: MacId, service_id: int = 1,
               channel: int = 9) -> ServiceRecord:
    return ServiceRecord(service_id, "File Transfer Service",
                         ConnectionUrl("btgoep", device_mac, channel, "ftp/"))


def plain_record(device_mac: MacId, service_id: int = 1,
                 name: str = "Serial Port") -> ServiceRecord:
    return ServiceRecord(service_id, name,
                         ConnectionUrl("btgoep", device_mac, 3, "spp/"))


def make_device(device_mac: MacId, name: str = "dev", x: float = 1.0,
                y: float = 0.0, **kwargs) -> RadioDevice:
    return RadioDevice(mac=device_mac, friendly_name=name,
                       position=(x, y), **kwargs)


def make_world(n_others: int = 0, seed: int = 1, ftp: bool = False,
               params: RadioParams | None = None) -> SimWorld:
    """A world with the local client at the origin plus ``n_others`` devices
    spread inside radio range."""
    world = SimWorld(seed=seed, params=params)
    world.add_device(make_device(LOCAL, "PID-CLIENT", 0.0, 0.0))
    for i in range(1, n_others + 1):
        m = mac(i)
        services = [ftp_record(m)] if ftp else []
        world.add_device(make_device(m, f"dev-{i:02d}", 1.0 + i * 0.5, 0.0,
                                     services=services))
    return world


@pytest.fixture
def world() -> SimWorld:
    return make_world()
