import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridsense.exceptions import (
    DanglingLineRef,
    DuplicateBusId,
    EmptyMeterSet,
    MissingPhaseBlock,
    Underdetermined,
)
from gridsense.network import (
    Bus,
    CurrentMeter,
    Line,
    NetworkModel,
    assemble_topology,
    build_current_incidence,
    build_series_admittance,
    build_shunt_admittance,
    build_voltage_incidence,
    expand_three_phase,
    lift_to_three_phase,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    validate_network,
)


def two_bus(y=2 - 5j, yi0=0.01j, yj0=0.02j):
    return NetworkModel(
        buses=(Bus(1), Bus(2)),
        lines=(Line(1, 1, 2, y, yi0, yj0),),
        current_meters=(CurrentMeter(1, 1, "from_to"), CurrentMeter(2, 1, "to_from")),
        pmu_buses=(1, 2),
    )


def three_bus_chain(direction="from_to"):
    return NetworkModel(
        buses=(Bus(1), Bus(2), Bus(3)),
        lines=(Line(1, 1, 2, 1 - 2j), Line(2, 2, 3, 1 - 1j)),
        current_meters=(CurrentMeter(1, 1, direction), CurrentMeter(2, 2)),
        pmu_buses=(1,),
    )


def test_six_bus_dimensions(six_bus):
    v = validate_network(six_bus)
    assert (v.N, v.M, v.L, v.P) == (6, 5, 3, 8)
    assert assemble_topology(six_bus).H.shape == (8, 6)


def test_two_bus_reproduces_complete_state_equation():
    y, yi0, yj0 = 2 - 5j, 0.01j, 0.02j
    H = assemble_topology(two_bus(y, yi0, yj0)).H
    expected = np.array([[1, 0], [0, 1], [y + yi0, -y], [-y, y + yj0]])
    np.testing.assert_array_equal(H, expected)


def test_zero_shunt_two_bus():
    H = assemble_topology(two_bus(1.0, 0, 0)).H
    np.testing.assert_array_equal(H[2:], [[1, -1], [-1, 1]])


def test_current_incidence_orientation():
    assert build_current_incidence(three_bus_chain())[0].tolist() == [1, -1, 0]
    assert build_current_incidence(three_bus_chain("to_from"))[0].tolist() == [-1, 1, 0]


def test_voltage_incidence(six_bus):
    Pi = build_voltage_incidence(six_bus)
    np.testing.assert_array_equal(Pi, np.eye(6)[[0, 4, 5]])
    full = NetworkModel(six_bus.buses, six_bus.lines, six_bus.current_meters, tuple(range(1, 7)))
    np.testing.assert_array_equal(build_voltage_incidence(full), np.eye(6))


def test_series_admittance_single_and_shared():
    m = NetworkModel((Bus(1), Bus(2)), (Line(1, 1, 2, 1 - 2j),), (CurrentMeter(1, 1),), (1,))
    np.testing.assert_array_equal(build_series_admittance(m), [[1 - 2j]])
    Yl = build_series_admittance(two_bus())
    assert Yl[0, 0] == Yl[1, 1] == 2 - 5j and Yl[0, 1] == Yl[1, 0] == 0


def test_shunt_admittance(six_bus):
    Ys = build_shunt_admittance(six_bus)
    A = build_current_incidence(six_bus)
    assert np.count_nonzero(Ys) == six_bus.n_meters
    assert np.all((Ys != 0) <= (A == 1))
    m = NetworkModel((Bus(1), Bus(2)), (Line(1, 1, 2, 1.0, 0.01j, 0.5j),), (CurrentMeter(1, 1),), (1,))
    np.testing.assert_array_equal(build_shunt_admittance(m), [[0.01j, 0]])


def test_six_bus_block_invariants(six_bus):
    T = assemble_topology(six_bus)
    np.testing.assert_array_equal(T.A.sum(axis=1), 0)
    assert np.all((T.A == 1).sum(axis=1) == 1) and np.all((T.A == -1).sum(axis=1) == 1)
    np.testing.assert_array_equal(T.Pi.sum(axis=1), 1)
    assert np.count_nonzero(T.Yl - np.diag(np.diag(T.Yl))) == 0
    np.testing.assert_array_equal(T.H[:3], T.Pi)
    np.testing.assert_allclose(T.H[3:], T.Yl @ T.A + T.Ys)


def test_h_times_ones_isolates_shunts(six_bus):
    T = assemble_topology(six_bus)
    ones = T.H[3:] @ np.ones(6)
    np.testing.assert_allclose(ones, T.Ys.sum(axis=1))
    zero_shunt = NetworkModel(
        six_bus.buses,
        tuple(Line(l.id, l.from_bus, l.to_bus, l.series_admittance) for l in six_bus.lines),
        six_bus.current_meters, six_bus.pmu_buses,
    )
    np.testing.assert_allclose(assemble_topology(zero_shunt).H[3:] @ np.ones(6), 0, atol=1e-12)


def test_deterministic(six_bus):
    assert np.array_equal(assemble_topology(six_bus).H, assemble_topology(six_bus).H)


def test_validation_errors(six_bus):
    with pytest.raises(Underdetermined):
        validate_network(NetworkModel(six_bus.buses, six_bus.lines, six_bus.current_meters, ()))
    bad_meter = six_bus.current_meters + (CurrentMeter(99, 99),)
    with pytest.raises(DanglingLineRef):
        validate_network(NetworkModel(six_bus.buses, six_bus.lines, bad_meter, six_bus.pmu_buses))
    with pytest.raises(DuplicateBusId):
        validate_network(NetworkModel(six_bus.buses + (Bus(1),), six_bus.lines, six_bus.current_meters, six_bus.pmu_buses))
    with pytest.raises(EmptyMeterSet):
        validate_network(NetworkModel(six_bus.buses, six_bus.lines, (), tuple(range(1, 7))))


def test_json_round_trip(tmp_path, six_bus, feeder69):
    for model in (six_bus, feeder69):
        p = tmp_path / "net.json"
        save_network(model, p)
        again = load_network(p)
        assert network_to_dict(again) == network_to_dict(model)
        np.testing.assert_array_equal(assemble_topology(again).H, assemble_topology(model).H)


def test_feeder69_shape(feeder69):
    v = validate_network(feeder69)
    assert (v.N, v.L, v.M, v.P) == (69, 8, 68, 76)
    H = assemble_topology(feeder69).H
    assert np.linalg.matrix_rank(H) == 69


# -- three phase


def test_three_phase_toy_shape():
    m = lift_to_three_phase(two_bus())
    T = expand_three_phase(m)
    assert T.H.shape == (12, 6)
    np.testing.assert_array_equal(T.H[:3, :3], np.eye(3))
    np.testing.assert_array_equal(T.H[3:6, 3:6], np.eye(3))


def test_three_phase_permutation_similar(six_bus):
    H1 = assemble_topology(six_bus).H
    H3 = assemble_topology(lift_to_three_phase(six_bus)).H
    P, N = H1.shape
    rows = [3 * r + ph for ph in range(3) for r in range(P)]
    cols = [3 * c + ph for ph in range(3) for c in range(N)]
    permuted = H3[np.ix_(rows, cols)]
    np.testing.assert_array_equal(permuted, np.kron(np.eye(3), H1))


def test_three_phase_missing_block(six_bus):
    m = lift_to_three_phase(six_bus)
    first = m.lines[0]
    broken = Line(first.id, first.from_bus, first.to_bus, np.eye(2, dtype=complex),
                  first.shunt_admittance_from, first.shunt_admittance_to)
    m2 = NetworkModel(m.buses, (broken,) + m.lines[1:], m.current_meters, m.pmu_buses)
    with pytest.raises(MissingPhaseBlock):
        expand_three_phase(m2)
    doc = network_to_dict(m)
    doc["lines"][0]["y_series"] = [[1.0, 0.0]]
    with pytest.raises(MissingPhaseBlock):
        network_from_dict(doc)


def test_three_phase_json_round_trip(tmp_path, six_bus):
    m = lift_to_three_phase(six_bus)
    p = tmp_path / "net3.json"
    save_network(m, p)
    np.testing.assert_array_equal(assemble_topology(load_network(p)).H, assemble_topology(m).H)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_random_radial_invariants(data):
    n = data.draw(st.integers(2, 12))
    parents = [data.draw(st.integers(1, k)) for k in range(1, n)]
    lines = tuple(
        Line(k, parents[k - 1], k + 1, complex(data.draw(st.floats(0.1, 10)), -data.draw(st.floats(0.1, 10))),
             complex(0, data.draw(st.floats(0, 0.01))), complex(0, data.draw(st.floats(0, 0.01))))
        for k in range(1, n)
    )
    dirs = [data.draw(st.sampled_from(["from_to", "to_from"])) for _ in lines]
    meters = tuple(CurrentMeter(k + 1, ln.id, d) for k, (ln, d) in enumerate(zip(lines, dirs)))
    model = NetworkModel(tuple(Bus(i) for i in range(1, n + 1)), lines, meters, (1,))
    T = assemble_topology(model)
    assert T.H.shape == (n, n)
    np.testing.assert_array_equal(T.A.sum(axis=1), 0)
    assert np.all((T.Ys != 0) <= (T.A == 1))
