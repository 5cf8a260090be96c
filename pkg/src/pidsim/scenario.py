"""Scenario files: strict JSON schema, validation, and world construction.

A scenario is a JSON document (conventionally ``*.scn``) gated by
``schema_version``; unknown keys anywhere are an error so that typos never
silently change a run.  The full schema is documented in the README.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

from .errors import ScenarioError
from .metrics import CourseUsage
from .pidctl import Roster
from .sdp import ConnectionUrl, ServiceRecord
from .simnet import MacId, RadioDevice, RadioParams, SimTime, SimWorld

SCHEMA_VERSION = 1

_SCENARIO_KEYS = {
    "schema_version", "seed", "mode", "local", "radio", "loss_probability",
    "devices", "roster", "file", "inquiry_interval", "step_target", "usage",
    "notes",
}
_RADIO_KEYS = {"range_m", "inquiry_duration", "service_search_per_device",
               "link_rate_bps", "session_overhead"}
_DEVICE_KEYS = {"mac", "name", "position", "powered", "discoverable",
                "arrival", "departure", "refuse_push", "drop_transfers",
                "services", "notes"}
_SERVICE_KEYS = {"id", "name", "channel", "path", "scheme", "notes"}
_ROSTER_KEYS = {"course_id", "members", "course_start", "window_before",
                "window_after", "late_cutoff", "max_retries", "notes"}
_FILE_KEYS = {"name", "text", "hex", "path", "notes"}
_USAGE_KEYS = {"students", "pages_per_week", "weeks", "notes"}


_REQUIRED = object()


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s): {', '.join(unknown)}")


def _expect(obj: dict, key: str, types, where: str, default=_REQUIRED):
    if key not in obj or obj[key] is None and default is not _REQUIRED:
        if default is _REQUIRED:
            raise ScenarioError(f"{where}: missing required field {key!r}")
        return default
    value = obj[key]
    type_tuple = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool) and bool not in type_tuple:
        raise ScenarioError(f"{where}.{key}: expected {types}, got a boolean")
    if not isinstance(value, types):
        raise ScenarioError(
            f"{where}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(value).__name__}")
    return value


@dataclass
class DeviceSpec:
    mac: MacId
    name: str
    position: tuple[float, float]
    powered: bool = True
    discoverable: bool = True
    arrival: SimTime = 0
    departure: SimTime | None = None
    refuse_push: bool = False
    drop_transfers: int = 0
    services: list[ServiceRecord] = field(default_factory=list)

    def build(self) -> RadioDevice:
        return RadioDevice(
            mac=self.mac, friendly_name=self.name, position=self.position,
            powered=self.powered, discoverable=self.discoverable,
            services=list(self.services), arrival=self.arrival,
            departure=self.departure, refuse_push=self.refuse_push,
            drop_transfers=self.drop_transfers)


@dataclass
class Scenario:
    schema_version: int
    mode: str
    local: MacId
    devices: list[DeviceSpec]
    seed: int | None = None
    radio: RadioParams = field(default_factory=RadioParams)
    loss_probability: float = 0.0
    roster: Roster | None = None
    file_name: str = "cpi.txt"
    file_payload: bytes | None = None
    file_path: str | None = None
    inquiry_interval: SimTime = 30_000
    step_target: MacId | None = None
    usage: CourseUsage | None = None
    base_dir: str = "."

    def build_world(self, seed: int) -> SimWorld:
        world = SimWorld(seed=seed, params=self.radio,
                         loss_probability=self.loss_probability)
        for spec in self.devices:
            world.add_device(spec.build())
        return world

    def resolve_payload(self) -> tuple[str, bytes]:
        """(file name, payload bytes); reads file_path relative to the
        scenario file when no inline payload was given."""
        if self.file_payload is not None:
            return self.file_name, self.file_payload
        if self.file_path is None:
            raise ScenarioError("scenario has neither inline payload nor file path")
        path = self.file_path
        if not os.path.isabs(path):
            path = os.path.join(self.base_dir, path)
        try:
            with open(path, "rb") as fh:
                return self.file_name, fh.read()
        except OSError as exc:
            raise ScenarioError(f"file-not-found: {path}") from exc


def parse_scenario(data: dict, base_dir: str = ".") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    _check_keys(data, _SCENARIO_KEYS, "scenario")

    version = _expect(data, "schema_version", int, "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"scenario.schema_version: {version} not supported "
            f"(this build understands {SCHEMA_VERSION})")
    mode = _expect(data, "mode", str, "scenario")
    if mode not in ("stepped", "proactive"):
        raise ScenarioError(f"scenario.mode: must be stepped or proactive, got {mode!r}")
    seed = _expect(data, "seed", int, "scenario", default=None)

    radio_obj = _expect(data, "radio", dict, "scenario", default={})
    _check_keys(radio_obj, _RADIO_KEYS, "scenario.radio")
    try:
        radio = RadioParams(
            range_m=float(radio_obj.get("range_m", 10.0)),
            inquiry_duration=int(radio_obj.get("inquiry_duration", 16_000)),
            service_search_per_device=int(
                radio_obj.get("service_search_per_device", 2_000)),
            link_rate_bps=int(radio_obj.get("link_rate_bps", 3_000_000)),
            session_overhead=int(radio_obj.get("session_overhead", 100)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"scenario.radio: {exc}") from None

    loss = _expect(data, "loss_probability", (int, float), "scenario", default=0.0)
    if not 0.0 <= float(loss) <= 1.0:
        raise ScenarioError("scenario.loss_probability: must be within [0, 1]")

    devices = _parse_devices(_expect(data, "devices", list, "scenario"))
    local = _parse_mac(_expect(data, "local", str, "scenario"), "scenario.local")
    if local not in {d.mac for d in devices}:
        raise ScenarioError(f"scenario.local: {local} is not in the device list")

    roster = None
    if "roster" in data:
        roster = _parse_roster(_expect(data, "roster", dict, "scenario"),
                               {d.mac for d in devices})
    if mode == "proactive" and roster is None:
        raise ScenarioError("scenario.roster: required for proactive mode")

    file_name, payload, file_path = _parse_file(
        _expect(data, "file", dict, "scenario", default={}))

    interval = _expect(data, "inquiry_interval", int, "scenario", default=30_000)
    if interval <= 0:
        raise ScenarioError("scenario.inquiry_interval: must be positive")

    step_target = None
    if "step_target" in data:
        step_target = _parse_mac(_expect(data, "step_target", str, "scenario"),
                                 "scenario.step_target")

    usage = None
    if "usage" in data:
        usage_obj = _expect(data, "usage", dict, "scenario")
        _check_keys(usage_obj, _USAGE_KEYS, "scenario.usage")
        try:
            usage = CourseUsage(
                students=_expect(usage_obj, "students", int, "scenario.usage"),
                pages_per_student_week=_expect(usage_obj, "pages_per_week", int,
                                               "scenario.usage"),
                weeks=_expect(usage_obj, "weeks", int, "scenario.usage"))
        except ValueError as exc:
            raise ScenarioError(f"scenario.usage: {exc}") from None

    return Scenario(
        schema_version=version, mode=mode, local=local, devices=devices,
        seed=seed, radio=radio, loss_probability=float(loss), roster=roster,
        file_name=file_name, file_payload=payload, file_path=file_path,
        inquiry_interval=interval, step_target=step_target, usage=usage,
        base_dir=base_dir)


def _parse_mac(text: str, where: str) -> MacId:
    try:
        return MacId(text)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_devices(items: list) -> list[DeviceSpec]:
    devices: list[DeviceSpec] = []
    seen: set[MacId] = set()
    for i, obj in enumerate(items):
        where = f"scenario.devices[{i}]"
        if not isinstance(obj, dict):
            raise ScenarioError(f"{where}: expected an object")
        _check_keys(obj, _DEVICE_KEYS, where)
        mac = _parse_mac(_expect(obj, "mac", str, where), f"{where}.mac")
        if mac in seen:
            raise ScenarioError(f"{where}.mac: duplicate MAC {mac}")
        seen.add(mac)
        pos = _expect(obj, "position", list, where)
        if len(pos) != 2 or not all(isinstance(c, (int, float)) for c in pos):
            raise ScenarioError(f"{where}.position: expected [x, y] in meters")
        services = _parse_services(
            _expect(obj, "services", list, where, default=[]), mac, where)
        try:
            devices.append(DeviceSpec(
                mac=mac,
                name=_expect(obj, "name", str, where),
                position=(float(pos[0]), float(pos[1])),
                powered=_expect(obj, "powered", bool, where, default=True),
                discoverable=_expect(obj, "discoverable", bool, where, default=True),
                arrival=_expect(obj, "arrival", int, where, default=0),
                departure=_expect(obj, "departure", int, where, default=None),
                refuse_push=_expect(obj, "refuse_push", bool, where, default=False),
                drop_transfers=_expect(obj, "drop_transfers", int, where, default=0),
                services=services,
            ))
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
    if not devices:
        raise ScenarioError("scenario.devices: at least one device required")
    return devices


def _parse_services(items: list, mac: MacId, where: str) -> list[ServiceRecord]:
    records: list[ServiceRecord] = []
    ids: set[int] = set()
    for j, obj in enumerate(items):
        swhere = f"{where}.services[{j}]"
        if not isinstance(obj, dict):
            raise ScenarioError(f"{swhere}: expected an object")
        _check_keys(obj, _SERVICE_KEYS, swhere)
        sid = _expect(obj, "id", int, swhere)
        if sid in ids:
            raise ScenarioError(f"{swhere}.id: duplicate service id {sid}")
        ids.add(sid)
        try:
            url = ConnectionUrl(
                scheme=_expect(obj, "scheme", str, swhere, default="http"),
                mac=mac,
                channel=_expect(obj, "channel", int, swhere, default=1),
                path=_expect(obj, "path", str, swhere, default=""))
            records.append(ServiceRecord(sid, _expect(obj, "name", str, swhere), url))
        except ValueError as exc:
            raise ScenarioError(f"{swhere}: {exc}") from None
    return records


def _parse_roster(obj: dict, device_macs: set[MacId]) -> Roster:
    where = "scenario.roster"
    _check_keys(obj, _ROSTER_KEYS, where)
    members = _expect(obj, "members", list, where)
    macs = []
    for i, m in enumerate(members):
        if not isinstance(m, str):
            raise ScenarioError(f"{where}.members[{i}]: expected a MAC string")
        macs.append(_parse_mac(m, f"{where}.members[{i}]"))
    if len(set(macs)) != len(macs):
        raise ScenarioError(f"{where}.members: duplicate MACs")
    try:
        return Roster(
            course_id=_expect(obj, "course_id", str, where),
            members=frozenset(macs),
            course_start=_expect(obj, "course_start", int, where),
            window_before=_expect(obj, "window_before", int, where,
                                  default=240_000),
            window_after=_expect(obj, "window_after", int, where,
                                 default=240_000),
            late_cutoff=_expect(obj, "late_cutoff", int, where, default=None),
            max_retries=_expect(obj, "max_retries", int, where, default=3),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_file(obj: dict) -> tuple[str, bytes | None, str | None]:
    where = "scenario.file"
    _check_keys(obj, _FILE_KEYS, where)
    text = _expect(obj, "text", str, where, default=None)
    hex_text = _expect(obj, "hex", str, where, default=None)
    path = _expect(obj, "path", str, where, default=None)
    if sum(x is not None for x in (text, hex_text, path)) > 1:
        raise ScenarioError(f"{where}: give exactly one of text, hex, path")
    payload: bytes | None = None
    if text is not None:
        payload = text.encode("utf-8")
    elif hex_text is not None:
        try:
            payload = bytes.fromhex(hex_text)
        except ValueError:
            raise ScenarioError(f"{where}.hex: not valid hex") from None
    default_name = os.path.basename(path) if path else "cpi.txt"
    name = _expect(obj, "name", str, where, default=default_name)
    if not name:
        raise ScenarioError(f"{where}.name: must be non-empty")
    return name, payload, path


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file; errors carry field diagnostics."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: parse error: {exc.msg}") from exc
    return parse_scenario(data, base_dir=os.path.dirname(os.path.abspath(path)))


def shipped_fixture_path(name: str) -> str:
    """Filesystem path of a fixture shipped inside the package."""
    if not name.endswith(".scn"):
        name += ".scn"
    ref = resources.files("pidsim") / "fixtures" / name
    if not ref.is_file():
        raise ScenarioError(f"no shipped fixture named {name}")
    return str(ref)


def shipped_fixture_names() -> list[str]:
    ref = resources.files("pidsim") / "fixtures"
    return sorted(p.name[:-4] for p in ref.iterdir() if p.name.endswith(".scn"))
