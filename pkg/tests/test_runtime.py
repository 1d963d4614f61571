import json

import numpy as np
import pytest

from slidepipe import (
    IoModel,
    PipelineConfig,
    build_task_graph,
    make_synthetic_tile,
    reference_profile,
    run_real,
    schedule_fcfs,
    schedule_pats,
    simulate,
    weak_scaling,
)
from slidepipe.profiles import DeviceProfile
from slidepipe.taskgraph import FEATURE_OPS, OP_KINDS, SEGMENTATION_CHAIN, TaskGraph

from genutil import random_profile, random_task_graph
from oracles import check_trace


# --- task graph shape ------------------------------------------------------------

def test_single_tile_graph_counts():
    g = build_task_graph(1)
    assert g.task_count == 11 and g.edge_count == 10
    assert tuple(g.kinds) == OP_KINDS


def test_zero_tiles_rejected():
    with pytest.raises(ValueError):
        build_task_graph(0)


def test_tiles_are_independent_subgraphs():
    g = build_task_graph(5)
    assert g.task_count == 55 and g.edge_count == 50
    for p, t in g.edges():
        assert g.tile_of[p] == g.tile_of[t]


def test_chain_and_fanout_structure():
    g = build_task_graph(1)
    for k in range(1, len(SEGMENTATION_CHAIN)):
        assert list(g.predecessors(k)) == [k - 1]
    last_seg = len(SEGMENTATION_CHAIN) - 1
    for k in range(len(SEGMENTATION_CHAIN), 11):
        assert list(g.predecessors(k)) == [last_seg]
    assert [g.kinds[k] for k in range(7, 11)] == list(FEATURE_OPS)


def test_cycle_detection():
    g = TaskGraph.from_tasks([("a", -1, (1,)), ("a", -1, (0,))])
    with pytest.raises(ValueError, match="cycle"):
        g.topo_order()


# --- FCFS ---------------------------------------------------------------------------

def _independent(kinds):
    return TaskGraph.from_tasks([(k, -1, ()) for k in kinds])


def test_fcfs_single_device_serializes():
    prof = DeviceProfile({"cpu-core": 1}, {"a": 10.0, "b": 25.0})
    tr = schedule_fcfs(_independent(["a", "b", "a"]), prof)
    assert tr.makespan_ms == 45.0
    check_trace(_independent(["a", "b", "a"]), prof, tr)


def test_fcfs_two_devices_two_equal_tasks():
    prof = DeviceProfile({"cpu-core": 2}, {"a": 10.0})
    tr = schedule_fcfs(_independent(["a", "a"]), prof)
    assert tr.makespan_ms == 10.0


def test_fcfs_random_graphs_produce_valid_traces():
    rng = np.random.default_rng(40)
    for _ in range(40):
        g = random_task_graph(rng)
        prof = random_profile(rng)
        check_trace(g, prof, schedule_fcfs(g, prof))


# --- PATS ----------------------------------------------------------------------------

def test_pats_accelerator_takes_max_speedup_cpu_takes_min():
    prof = DeviceProfile(
        {"cpu-core": 1, "accelerator": 1},
        {"hot": 100.0, "cold": 100.0},
        {"hot": {"accelerator": 10.0}, "cold": {"accelerator": 1.1}},
    )
    g = _independent(["hot", "cold"])
    tr = schedule_pats(g, prof)
    by_task = {int(tr.task[i]): tr.device_class[int(tr.device[i])] for i in range(2)}
    assert by_task[0] == "accelerator"  # the 10x task
    assert by_task[1] == "cpu-core"  # the 1.1x task
    check_trace(g, prof, tr)


def test_pats_random_graphs_produce_valid_traces():
    rng = np.random.default_rng(41)
    for _ in range(40):
        g = random_task_graph(rng)
        prof = random_profile(rng, classes=int(rng.integers(1, 4)))
        check_trace(g, prof, schedule_pats(g, prof))


def test_policies_identical_under_single_device_class():
    rng = np.random.default_rng(42)
    for _ in range(20):
        g = random_task_graph(rng)
        prof = random_profile(rng, classes=1)
        assert schedule_fcfs(g, prof).makespan_ms == schedule_pats(g, prof).makespan_ms


def test_uniform_cost_scaling_scales_makespan_and_keeps_assignments():
    rng = np.random.default_rng(43)
    g = random_task_graph(rng)
    prof = random_profile(rng)
    scaled = DeviceProfile(
        prof.device_counts,
        {k: 2.0 * v for k, v in prof.base_cost_ms.items()},
        prof.speedup,
    )
    for policy, run in (("fcfs", schedule_fcfs), ("pats", schedule_pats)):
        a = run(g, prof)
        b = run(g, scaled)
        assert b.makespan_ms == 2.0 * a.makespan_ms
        assert np.array_equal(a.device, b.device) and np.array_equal(a.task, b.task)


def test_simulation_deterministic():
    rng = np.random.default_rng(44)
    g = random_task_graph(rng)
    prof = random_profile(rng)
    a = simulate(g, prof, "pats")
    b = simulate(g, prof, "pats")
    assert np.array_equal(a.trace.start, b.trace.start)
    assert np.array_equal(a.trace.device, b.trace.device)


def test_simulate_input_validation():
    g = build_task_graph(2)
    prof = reference_profile()
    with pytest.raises(ValueError):
        simulate(g, prof, "random")
    with pytest.raises(ValueError):
        simulate(g, prof, "pats", nodes=0)
    with pytest.raises(ValueError):
        simulate(g, prof, "pats", io_model="fast-disk")
    with pytest.raises(ValueError, match="single node"):
        simulate(_independent(["rgb2gray"]), prof, "pats", nodes=2)


# --- IO model --------------------------------------------------------------------------

def test_pure_io_run_matches_closed_form():
    # negligible compute: makespan = per-node reads serialized at the
    # steady-state latency base*(1 + alpha*(nodes-1))
    base_cost = {k: 1e-9 for k in OP_KINDS}
    prof = DeviceProfile({"cpu-core": 2}, base_cost)
    tiles_per_node, nodes, rd, alpha = 16, 4, 100.0, 0.25
    g = build_task_graph(tiles_per_node * nodes)
    res = simulate(g, prof, "fcfs", io_model=IoModel(rd, alpha), nodes=nodes)
    predicted = tiles_per_node * rd * (1.0 + alpha * (nodes - 1))
    assert res.makespan_ms == pytest.approx(predicted, rel=1e-9)


def test_zero_contention_efficiency_exactly_one():
    prof = reference_profile()
    rows = weak_scaling(prof, 4, [1, 2, 4, 8], policy="pats", io_model=None)
    for r in rows:
        assert abs(r["efficiency"] - 1.0) <= 1e-9
    rows = weak_scaling(prof, 4, [1, 3, 9], policy="fcfs", io_model=IoModel(25.0, 0.0))
    for r in rows:
        assert abs(r["efficiency"] - 1.0) <= 1e-9


def test_contention_reduces_efficiency():
    prof = reference_profile()
    rows = weak_scaling(prof, 16, [1, 4, 16], policy="pats", io_model=IoModel(150.0, 0.05))
    effs = [r["efficiency"] for r in rows]
    assert effs[0] == pytest.approx(1.0, abs=1e-9)
    assert effs[-1] < effs[0]


def test_malformed_io_model_rejected():
    with pytest.raises(ValueError):
        IoModel(-1.0, 0.0)
    with pytest.raises(ValueError):
        IoModel(10.0, -0.5)


# --- device profiles ----------------------------------------------------------------------

def test_profile_validation():
    with pytest.raises(ValueError, match="cpu-core"):
        DeviceProfile({"accelerator": 1}, {"a": 1.0})
    with pytest.raises(ValueError, match="count"):
        DeviceProfile({"cpu-core": 0}, {"a": 1.0})
    with pytest.raises(ValueError, match="> 0"):
        DeviceProfile({"cpu-core": 1}, {"a": 0.0})
    with pytest.raises(ValueError, match="> 0"):
        DeviceProfile({"cpu-core": 1}, {"a": 1.0}, {"a": {"acc": -2.0}})
    with pytest.raises(ValueError, match="definition"):
        DeviceProfile({"cpu-core": 1}, {"a": 1.0}, {"a": {"cpu-core": 2.0}})


def test_profile_durations_and_estimates():
    prof = DeviceProfile(
        {"cpu-core": 2, "acc": 1},
        {"a": 100.0, "b": 50.0},
        {"a": {"acc": 4.0}},
    )
    assert prof.duration_ms("a", "cpu-core") == 100.0
    assert prof.duration_ms("a", "acc") == 25.0
    assert prof.duration_ms("b", "acc") == 50.0  # unlisted -> speedup 1
    assert prof.accelerator_estimate("a") == 4.0
    assert prof.classes()[0] == "cpu-core"
    with pytest.raises(ValueError, match="base cost"):
        prof.duration_ms("zap", "cpu-core")


def test_packaged_profiles_load():
    ref = reference_profile()
    assert set(ref.base_cost_ms) == set(OP_KINDS)
    from slidepipe import default_profile

    assert set(default_profile().base_cost_ms) == set(OP_KINDS)


def test_stage_mapping():
    from slidepipe.taskgraph import stage_of

    assert stage_of("rgb2gray") == "segmentation"
    assert stage_of("pixel_stats") == "feature_computation"
    with pytest.raises(ValueError):
        stage_of("watershed")
    g = build_task_graph(1)
    # each tile's feature stage depends on its segmentation stage
    for t in range(g.task_count):
        if stage_of(g.kinds[t]) == "feature_computation":
            assert all(stage_of(g.kinds[int(p)]) == "segmentation" for p in g.predecessors(t))


# --- trace export ------------------------------------------------------------------------

def test_trace_jsonl_round_trip(tmp_path):
    g = build_task_graph(2)
    prof = reference_profile()
    tr = schedule_pats(g, prof)
    p = tmp_path / "trace.jsonl"
    tr.to_jsonl(p)
    rows = [json.loads(line) for line in p.read_text().splitlines()]
    assert len(rows) == g.task_count
    assert sorted(r["task"] for r in rows) == list(range(g.task_count))
    assert all(r["end"] >= r["start"] >= 0.0 for r in rows)


def test_utilization_bounded():
    g = build_task_graph(6)
    res = simulate(g, reference_profile(), "pats")
    assert (res.utilization >= 0.0).all() and (res.utilization <= 1.0 + 1e-12).all()


# --- real execution ------------------------------------------------------------------------

def test_run_real_bit_identical_across_worker_counts():
    tiles = [make_synthetic_tile(96, 96, 2, 50 + i) for i in range(4)]
    g = build_task_graph(4)
    results = {w: run_real(g, tiles, workers=w) for w in (1, 2, 8)}
    for tile in range(4):
        csvs = {results[w].feature_csv(tile) for w in (1, 2, 8)}
        assert len(csvs) == 1
        assert len(results[1].features[tile]) == 2


def test_run_real_rejects_cycles():
    g = TaskGraph.from_tasks([("rgb2gray", 0, (1,)), ("rgb2gray", 0, (0,))])
    with pytest.raises(ValueError, match="cycle"):
        run_real(g, [make_synthetic_tile(16, 16, 0, 0)])


def test_run_real_timing_table_has_eleven_rows():
    tiles = [make_synthetic_tile(64, 64, 2, i) for i in range(16)]
    result = run_real(build_task_graph(16), tiles, workers=2)
    lines = result.timing_csv().strip().splitlines()
    assert len(lines) == 1 + 11
    ops = [ln.split(",")[0] for ln in lines[1:]]
    assert tuple(ops) == OP_KINDS
    assert all(int(ln.split(",")[1]) == 16 for ln in lines[1:])


def test_kernel_failure_carries_task_identity(monkeypatch):
    import slidepipe.runtime as rt

    def boom(ctx, cfg):
        raise ValueError("injected fault")

    monkeypatch.setitem(rt.KERNELS, "fill_holes", boom)
    tiles = [make_synthetic_tile(32, 32, 1, 0)]
    with pytest.raises(RuntimeError, match=r"task 3 \(fill_holes, tile 0\)"):
        run_real(build_task_graph(1), tiles)


def test_run_real_unknown_kind_rejected():
    g = TaskGraph.from_tasks([("mystery_op", 0, ())])
    with pytest.raises(ValueError, match="no kernel"):
        run_real(g, [make_synthetic_tile(16, 16, 0, 0)])


def test_pipeline_config_knobs():
    tiles = [make_synthetic_tile(64, 64, 2, 9)]
    cfg = PipelineConfig(open_radius=4, tile_rows=2, min_area=10)
    result = run_real(build_task_graph(1), tiles, cfg=cfg)
    assert len(result.features[0]) == 2
