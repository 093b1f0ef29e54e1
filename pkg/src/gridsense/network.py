"""Network description and assembly of the complex topology matrix.

The measurement vector stacks L PMU voltage phasors on top of M line-current
phasors, ``z = H x`` with::

    H = [ Pi           ]    Pi : L x N voltage measurement-bus incidence
        [ Yl @ A + Ys  ]    A  : M x N current measurement-bus incidence
                            Yl : M x M diagonal series admittances
                            Ys : M x N shunt admittances at the sending end

Meter rows follow the file order of ``current_meters`` and PMU rows the file
order of ``pmu_buses``; both orders are part of the channel numbering used by
the measurement and selection code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    DanglingLineRef,
    DuplicateBusId,
    EmptyMeterSet,
    MissingPhaseBlock,
    NetworkError,
    Underdetermined,
)

FROM_TO = "from_to"
TO_FROM = "to_from"


@dataclass(frozen=True)
class Bus:
    id: int
    phase_count: int = 1


@dataclass(frozen=True)
class Line:
    """A pi-model line.

    Admittances are complex scalars for single-phase networks and 3x3 complex
    arrays for three-phase networks (per unit in both cases).
    """

    id: int
    from_bus: int
    to_bus: int
    series_admittance: complex | np.ndarray
    shunt_admittance_from: complex | np.ndarray = 0j
    shunt_admittance_to: complex | np.ndarray = 0j


@dataclass(frozen=True)
class CurrentMeter:
    """Current meter ``meter_index`` (1-based serial) on line ``line_ref``."""

    meter_index: int
    line_ref: int
    direction: str = FROM_TO

    def __post_init__(self):
        if self.direction not in (FROM_TO, TO_FROM):
            raise NetworkError(f"meter direction must be {FROM_TO!r} or {TO_FROM!r}")


@dataclass(frozen=True)
class SideChain:
    """A named group of buses off the main feeder and the meters it owns."""

    name: str
    buses: tuple[int, ...]
    meters: tuple[int, ...]


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    current_meters: tuple[CurrentMeter, ...]
    pmu_buses: tuple[int, ...]
    main_chain: tuple[int, ...] = ()
    side_chains: tuple[SideChain, ...] = ()
    k_ladder: dict = field(default_factory=dict)
    name: str = ""

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_pmus(self) -> int:
        return len(self.pmu_buses)

    @property
    def n_meters(self) -> int:
        return len(self.current_meters)

    @property
    def n_channels(self) -> int:
        return self.n_pmus + self.n_meters

    @property
    def phase_count(self) -> int:
        return self.buses[0].phase_count if self.buses else 1

    def line_by_id(self) -> dict[int, Line]:
        return {ln.id: ln for ln in self.lines}

    def meter_channel(self, meter_index: int) -> int:
        """0-based row of ``H`` carrying the given meter serial."""
        for pos, m in enumerate(self.current_meters):
            if m.meter_index == meter_index:
                return self.n_pmus + pos
        raise DanglingLineRef(f"no meter with serial {meter_index}")


@dataclass(frozen=True)
class ValidatedNetwork:
    model: NetworkModel
    N: int
    L: int
    M: int
    P: int


@dataclass(frozen=True)
class TopologyMatrix:
    H: np.ndarray
    Pi: np.ndarray
    A: np.ndarray
    Yl: np.ndarray
    Ys: np.ndarray


def validate_network(model: NetworkModel) -> ValidatedNetwork:
    ids = [b.id for b in model.buses]
    if len(set(ids)) != len(ids):
        raise DuplicateBusId("bus ids must be unique")
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise NetworkError("bus ids must be contiguous 1..N")
    if len({b.phase_count for b in model.buses}) > 1:
        raise NetworkError("all buses must share one phase count")
    if model.buses and model.phase_count not in (1, 3):
        raise NetworkError("phase count must be 1 or 3")

    bus_set = set(ids)
    line_ids = [ln.id for ln in model.lines]
    if len(set(line_ids)) != len(line_ids):
        raise NetworkError("line ids must be unique")
    for ln in model.lines:
        if ln.from_bus not in bus_set or ln.to_bus not in bus_set:
            raise DanglingLineRef(f"line {ln.id} references an unknown bus")
        if ln.from_bus == ln.to_bus:
            raise NetworkError(f"line {ln.id} is a self-loop")
        if np.all(np.asarray(ln.series_admittance) == 0):
            raise NetworkError(f"line {ln.id} has zero series admittance")

    if not model.current_meters:
        raise EmptyMeterSet("at least one current meter is required")
    known_lines = set(line_ids)
    serials = [m.meter_index for m in model.current_meters]
    if len(set(serials)) != len(serials):
        raise NetworkError("meter serials must be unique")
    for m in model.current_meters:
        if m.line_ref not in known_lines:
            raise DanglingLineRef(f"meter {m.meter_index} is on unknown line {m.line_ref}")

    if len(set(model.pmu_buses)) != len(model.pmu_buses):
        raise NetworkError("PMU buses must be distinct")
    for b in model.pmu_buses:
        if b not in bus_set:
            raise DanglingLineRef(f"PMU at unknown bus {b}")

    N, L, M = model.n_buses, model.n_pmus, model.n_meters
    if L + M < N:
        raise Underdetermined(f"L + M = {L + M} < N = {N}")
    return ValidatedNetwork(model, N, L, M, L + M)


def _oriented(meter: CurrentMeter, line: Line):
    """(sending bus, receiving bus, shunt admittance at the sending side)."""
    if meter.direction == FROM_TO:
        return line.from_bus, line.to_bus, line.shunt_admittance_from
    return line.to_bus, line.from_bus, line.shunt_admittance_to


def build_current_incidence(model: NetworkModel) -> np.ndarray:
    lines = model.line_by_id()
    A = np.zeros((model.n_meters, model.n_buses))
    for m, meter in enumerate(model.current_meters):
        src, dst, _ = _oriented(meter, lines[meter.line_ref])
        A[m, src - 1] = 1.0
        A[m, dst - 1] = -1.0
    return A


def build_voltage_incidence(model: NetworkModel) -> np.ndarray:
    Pi = np.zeros((model.n_pmus, model.n_buses))
    for l, bus in enumerate(model.pmu_buses):
        Pi[l, bus - 1] = 1.0
    return Pi


def build_series_admittance(model: NetworkModel) -> np.ndarray:
    lines = model.line_by_id()
    return np.diag([complex(lines[m.line_ref].series_admittance) for m in model.current_meters]).astype(complex)


def build_shunt_admittance(model: NetworkModel) -> np.ndarray:
    lines = model.line_by_id()
    Ys = np.zeros((model.n_meters, model.n_buses), dtype=complex)
    for m, meter in enumerate(model.current_meters):
        src, _, shunt = _oriented(meter, lines[meter.line_ref])
        Ys[m, src - 1] = complex(shunt)
    return Ys


def assemble_topology(model: NetworkModel) -> TopologyMatrix:
    """Build ``H`` and its four blocks for a single-phase network."""
    validate_network(model)
    if model.phase_count != 1:
        return expand_three_phase(model)
    Pi = build_voltage_incidence(model)
    A = build_current_incidence(model)
    Yl = build_series_admittance(model)
    Ys = build_shunt_admittance(model)
    H = np.vstack([Pi.astype(complex), Yl @ A + Ys])
    return TopologyMatrix(H=H, Pi=Pi, A=A, Yl=Yl, Ys=Ys)


def _block(value, name: str, line_id: int) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.shape != (3, 3):
        raise MissingPhaseBlock(f"line {line_id}: {name} must be a 3x3 block, got shape {arr.shape}")
    return arr


def expand_three_phase(model: NetworkModel) -> TopologyMatrix:
    """Three-phase ``H`` of size 3P x 3N, bus-major with phases a, b, c.

    Incidence entries become 3x3 identity or zero blocks and every admittance
    becomes its 3x3 block.
    """
    validate_network(model)
    if model.phase_count != 3:
        raise NetworkError("expand_three_phase needs a network with phase_count = 3")
    N, L, M = model.n_buses, model.n_pmus, model.n_meters
    lines = model.line_by_id()
    eye = np.eye(3)

    Pi = np.kron(build_voltage_incidence(model), eye)
    A = np.kron(build_current_incidence(model), eye)
    Yl = np.zeros((3 * M, 3 * M), dtype=complex)
    Ys = np.zeros((3 * M, 3 * N), dtype=complex)
    for m, meter in enumerate(model.current_meters):
        line = lines[meter.line_ref]
        src, _, shunt = _oriented(meter, line)
        rows = slice(3 * m, 3 * m + 3)
        Yl[rows, rows] = _block(line.series_admittance, "series admittance", line.id)
        shunt_name = "shunt_from" if meter.direction == FROM_TO else "shunt_to"
        Ys[rows, 3 * (src - 1) : 3 * src] = _block(shunt, shunt_name, line.id)
    H = np.vstack([Pi.astype(complex), Yl @ A + Ys])
    assert H.shape == (3 * (L + M), 3 * N)
    return TopologyMatrix(H=H, Pi=Pi, A=A, Yl=Yl, Ys=Ys)


def lift_to_three_phase(model: NetworkModel) -> NetworkModel:
    """Three-phase copy of a single-phase model with decoupled phases.

    Every scalar admittance y becomes ``y * I3``.
    """
    eye = np.eye(3, dtype=complex)
    buses = tuple(Bus(b.id, 3) for b in model.buses)
    lines = tuple(
        Line(
            ln.id,
            ln.from_bus,
            ln.to_bus,
            complex(ln.series_admittance) * eye,
            complex(ln.shunt_admittance_from) * eye,
            complex(ln.shunt_admittance_to) * eye,
        )
        for ln in model.lines
    )
    return NetworkModel(
        buses, lines, model.current_meters, model.pmu_buses,
        model.main_chain, model.side_chains, dict(model.k_ladder), model.name,
    )


# -- JSON --------------------------------------------------------------------


def _parse_admittance(value, three_phase: bool):
    if three_phase:
        arr = np.asarray(value, dtype=float)
        if arr.shape != (3, 3, 2):
            raise MissingPhaseBlock("three-phase admittances must be 3x3 arrays of [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    re, im = value
    return complex(re, im)


def _dump_admittance(value):
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def network_from_dict(doc: dict) -> NetworkModel:
    try:
        buses = tuple(Bus(int(b["id"]), int(b.get("phases", 1))) for b in doc["buses"])
        three = bool(buses) and buses[0].phase_count == 3
        zero = [[[0.0, 0.0]] * 3] * 3 if three else [0.0, 0.0]
        lines = tuple(
            Line(
                int(ln["id"]),
                int(ln["from"]),
                int(ln["to"]),
                _parse_admittance(ln["y_series"], three),
                _parse_admittance(ln.get("y_shunt_from", zero), three),
                _parse_admittance(ln.get("y_shunt_to", zero), three),
            )
            for ln in doc["lines"]
        )
        meters = tuple(
            CurrentMeter(int(m.get("serial", k + 1)), int(m["line"]), m.get("direction", FROM_TO))
            for k, m in enumerate(doc["current_meters"])
        )
        pmus = tuple(int(b) for b in doc["pmu_buses"])
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"malformed network document: {exc}") from exc

    side = tuple(
        SideChain(str(g["name"]), tuple(int(b) for b in g["buses"]), tuple(int(m) for m in g["meters"]))
        for g in doc.get("side_chains", [])
    )
    ladder = {int(k): tuple(v) for k, v in doc.get("k_ladder", {}).items()}
    return NetworkModel(
        buses, lines, meters, pmus,
        main_chain=tuple(int(b) for b in doc.get("main_chain", [])),
        side_chains=side,
        k_ladder=ladder,
        name=str(doc.get("name", "")),
    )


def network_to_dict(model: NetworkModel) -> dict:
    doc = {
        "name": model.name,
        "buses": [{"id": b.id, "phases": b.phase_count} for b in model.buses],
        "lines": [
            {
                "id": ln.id,
                "from": ln.from_bus,
                "to": ln.to_bus,
                "y_series": _dump_admittance(ln.series_admittance),
                "y_shunt_from": _dump_admittance(ln.shunt_admittance_from),
                "y_shunt_to": _dump_admittance(ln.shunt_admittance_to),
            }
            for ln in model.lines
        ],
        "current_meters": [
            {"serial": m.meter_index, "line": m.line_ref, "direction": m.direction}
            for m in model.current_meters
        ],
        "pmu_buses": list(model.pmu_buses),
    }
    if model.main_chain:
        doc["main_chain"] = list(model.main_chain)
    if model.side_chains:
        doc["side_chains"] = [
            {"name": g.name, "buses": list(g.buses), "meters": list(g.meters)} for g in model.side_chains
        ]
    if model.k_ladder:
        doc["k_ladder"] = {str(k): list(v) for k, v in sorted(model.k_ladder.items())}
    return doc


def load_network(path) -> NetworkModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{path}: {exc}") from exc
    return network_from_dict(doc)


def save_network(model: NetworkModel, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(model), indent=1))


_DATA = Path(__file__).parent / "data"


def builtin_network(name: str) -> NetworkModel:
    """Load one of the packaged fixture networks (``six_bus``, ``feeder69``)."""
    if name not in builtin_names():
        raise KeyError(f"no built-in network {name!r}; available: {builtin_names()}")
    return load_network(_DATA / f"{name}.json")


def builtin_names() -> list[str]:
    return sorted(p.stem for p in _DATA.glob("*.json"))
