import random

import pytest

from sliceplace.metrics import write_csv
from sliceplace.resource import DcType, Psn, build_psn, desk_psn_config
from sliceplace.sim import SimConfig, SimulationError, replay_compare, run_simulation
from sliceplace.slices import ARRIVAL, DEPARTURE, Event, EventTrace, Nspr, NsprParams, generate_trace


def trace_of(slices, horizon):
    events = []
    for s in slices:
        events.append(Event(s.arrival_time, ARRIVAL, s.id, s))
        events.append(Event(s.arrival_time + s.holding_time, DEPARTURE, s.id))
    events.sort(key=Event.sort_key)
    return EventTrace(events, horizon)


def five_servers():
    """Three servers that each fit one slice, two that fit none."""
    psn = Psn()
    psn.add_dc(0, DcType.EDC)
    psn.add_switch(0, 0, is_access=True)
    for sid, cpu in [(1, 4), (2, 4), (3, 4), (4, 1), (5, 1)]:
        psn.add_server(sid, 0, cpu, 4)
        psn.add_link(0, sid, 100, 1)
    return psn


def one_slice(i, t, hold):
    return Nspr.chain(i, [(4, 1)], [(1, 10)], 10, access_node=0, arrival_time=t, holding_time=hold)


def test_empty_trace():
    res = run_simulation(five_servers(), EventTrace([], 100), SimConfig())
    assert len(res.series) == 1
    s = res.series.samples[0]
    assert (s.arrivals, s.accepts, s.rejects, s.acceptance_ratio) == (0, 0, 0, None)


def test_single_slice_conserves():
    psn = five_servers()
    initial = psn.to_json()
    res = run_simulation(psn, trace_of([one_slice(0, 5, 10)], 100), SimConfig())
    assert res.state.accepts == 1
    assert psn.to_json() == initial


def _counter_oracle(slices, capacity):
    """Ledger replay by hand: a slice fits iff fewer than ``capacity`` are active."""
    events = sorted([(s.arrival_time, 1, s.id, s) for s in slices]
                    + [(s.arrival_time + s.holding_time, 0, s.id, s) for s in slices])
    active, accepted = set(), []
    for _, kind, sid, s in events:
        if kind == 0:
            active.discard(sid)
        elif len(active) < capacity:
            active.add(sid)
            accepted.append(sid)
    return accepted


@pytest.mark.parametrize("algo", ["exact", "p2c"])
def test_ten_arrivals_three_slots(algo):
    rng = random.Random(4)
    slices = [one_slice(i, rng.randint(0, 40), rng.randint(1, 25)) for i in range(10)]
    slices = [Nspr.chain(i, [(4, 1)], [(1, 10)], 10, 0, s.arrival_time, s.holding_time)
              for i, s in enumerate(sorted(slices, key=lambda s: s.arrival_time))]
    want = _counter_oracle(slices, 3)
    assert 0 < len(want) < 10
    res = run_simulation(five_servers(), trace_of(slices, 1000), SimConfig(check_every_event=True), algo)
    assert [d["nspr"] for d in res.decisions if d["accepted"]] == want


def test_rejected_departure_is_dropped():
    slices = [one_slice(i, 0, 50) for i in range(4)]
    res = run_simulation(five_servers(), trace_of(slices, 100), SimConfig(check_every_event=True))
    assert (res.state.accepts, res.state.rejects) == (3, 1)
    assert res.state.active == {}


def test_active_at_horizon_keep_resources():
    psn = five_servers()
    res = run_simulation(psn, trace_of([one_slice(0, 5, 500)], 100), SimConfig())
    assert list(res.state.active) == [0]
    assert sum(s.cpu_used for s in psn.servers.values()) == 4


def test_periodic_ticks():
    res = run_simulation(five_servers(), trace_of([one_slice(0, 25, 10)], 100),
                         SimConfig(sample_interval=20))
    assert [s.t for s in res.series.samples] == [0, 20, 25, 35, 40, 60, 80, 100]
    res.series.check()


def test_compare_trivially_feasible():
    psn = five_servers()
    slices = [Nspr.chain(i, [(1, 1)], [(1, 10)], 10, 0, 10 * i, 5) for i in range(8)]
    cmp = replay_compare(psn, trace_of(slices, 1000), SimConfig(), SimConfig())
    for res in cmp.results.values():
        assert res.series.samples[-1].acceptance_ratio == 1
    assert psn.to_json() == five_servers().to_json()  # clones were used


def _desk_trace(seed, rate=3.0):
    psn = build_psn(desk_psn_config())
    return psn, generate_trace(NsprParams(chain_len=(1, 3), cpu=(1, 4), ram=(1, 8), mean_holding=8),
                               rate, 40, psn, seed)


def test_compare_rerun_is_byte_identical():
    psn, trace = _desk_trace(5)
    cfg = SimConfig(record_wall_time=False, seed=9)
    a, b = replay_compare(psn, trace, cfg, cfg), replay_compare(psn, trace, cfg, cfg)
    assert a.decision_log() == b.decision_log()
    assert a.results["p2c"].placement_log() == b.results["p2c"].placement_log()


def test_metrics_byte_identical(tmp_path):
    psn, trace = _desk_trace(6)
    cfg = SimConfig(record_wall_time=False, seed=1)
    for name in ("a", "b"):
        write_csv(run_simulation(psn.clone(), trace, cfg).series, tmp_path / f"{name}.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("algo", ["exact", "p2c"])
def test_state_coherent_after_every_event(algo):
    for seed in range(5):
        psn, trace = _desk_trace(seed, rate=4.0)
        res = run_simulation(psn, trace, SimConfig(check_every_event=True, seed=seed), algo)
        res.series.check()
        assert res.state.arrivals == len(trace.arrivals)


def test_incoherent_ledger_is_detected():
    psn = five_servers()
    res = run_simulation(psn, trace_of([one_slice(0, 5, 500)], 100), SimConfig())
    psn.servers[1].cpu_used += 1
    psn.servers[2].cpu_used += 1
    with pytest.raises(SimulationError) as info:
        res.state.check_coherence()
    assert '"active"' in info.value.dump


def test_both_requires_replay_compare():
    with pytest.raises(ValueError):
        run_simulation(five_servers(), EventTrace([], 10), SimConfig(algorithm="both"))
