import numpy as np
import pytest

from zoar import bench
from zoar.bench import Aggregate, RunConfig, Theta0Mode, Theta0Spec
from zoar.estimators import EstimatorConfig
from zoar.objectives import ObjectiveKind, ObjectiveSpec
from zoar.optimizers import (EstimatorKind, OptimizerConfig, Trace, TraceRow,
                             UpdateRule)
from zoar.sampling import DistTag


def _cfg(est_kind=EstimatorKind.VANILLA, repeats=3, iterations=30, seed=5,
         eta=0.01, rule=UpdateRule.RADAZO, n=2):
    return RunConfig(
        objective=ObjectiveSpec(ObjectiveKind.QUADRATIC, 6),
        estimator_kind=est_kind,
        estimator=EstimatorConfig(mu=0.05, k=4, n=n, tag=DistTag.GAUSSIAN),
        optimizer=OptimizerConfig(rule=rule, eta=eta),
        iterations=iterations, repeats=repeats, master_seed=seed)


def _strip(trace):
    return [(r.iter, r.queries_cum, r.f_clean, r.gap) for r in trace.rows]


def test_run_experiment_repeats_and_determinism():
    traces = bench.run_experiment(_cfg())
    assert len(traces) == 3
    assert _strip(traces[0]) != _strip(traces[1])  # distinct per-repeat seeds
    again = bench.run_experiment(_cfg())
    for a, b in zip(traces, again):
        assert _strip(a) == _strip(b)


def test_threaded_run_matches_serial():
    serial = bench.run_experiment(_cfg(repeats=4))
    threaded = bench.run_experiment(_cfg(repeats=4), threads=4)
    for a, b in zip(serial, threaded):
        assert _strip(a) == _strip(b)


def test_initial_row_is_starting_value():
    cfg = _cfg(iterations=0, repeats=1)
    trace = bench.run_experiment(cfg)[0]
    assert len(trace.rows) == 1
    assert trace.rows[0].gap == trace.rows[0].f_clean


def test_matched_theta0_across_estimators():
    a = bench.run_experiment(_cfg(EstimatorKind.VANILLA, repeats=2))
    b = bench.run_experiment(_cfg(EstimatorKind.ZOAR, repeats=2))
    for ta, tb in zip(a, b):
        assert ta.rows[0].f_clean == tb.rows[0].f_clean


def _fake_trace(gaps):
    rows = [TraceRow(i, i, g, g, 0.0) for i, g in enumerate(gaps)]
    return Trace(rows=rows)


def test_aggregate_mean_and_population_std():
    agg = bench.aggregate([_fake_trace([1.0]), _fake_trace([3.0])])
    assert agg.mean_gap[0] == 2.0
    assert agg.std_gap[0] == 1.0  # population convention
    same = bench.aggregate([_fake_trace([5.0, 4.0])] * 3)
    assert np.all(same.std_gap == 0.0)


def test_aggregate_permutation_invariant():
    traces = [_fake_trace([1.0, 2.0]), _fake_trace([3.0, 1.0]), _fake_trace([0.5, 4.0])]
    a = bench.aggregate(traces)
    b = bench.aggregate(traces[::-1])
    assert np.array_equal(a.mean_gap, b.mean_gap)
    assert np.array_equal(a.std_gap, b.std_gap)


def test_aggregate_excludes_diverged():
    bad = _fake_trace([9.0])
    bad.status = "diverged"
    agg = bench.aggregate([_fake_trace([1.0]), bad])
    assert agg.n == 1 and agg.excluded == 1
    with pytest.raises(ValueError):
        bench.aggregate([bad])


def _agg_from(gaps):
    gaps = np.asarray(gaps, dtype=np.float64)
    return Aggregate(iters=np.arange(gaps.shape[0]), mean_gap=gaps,
                     std_gap=np.zeros_like(gaps), n=1)


def test_speedup_examples():
    ref = _agg_from(np.linspace(10, 0.5, 801))   # hits 1.0 late
    cand = _agg_from(np.concatenate([np.linspace(10, 1.0, 101), np.full(700, 0.9)]))
    r_it = np.nonzero(ref.mean_gap <= 1.0)[0][0]
    c_it = np.nonzero(cand.mean_gap <= 1.0)[0][0]
    assert bench.speedup(ref, cand, 1.0) == r_it / c_it
    assert bench.speedup(ref, ref, 1.0) == 1.0
    assert bench.speedup(ref, cand, 1e-9) is None


def test_speedup_hand_ratio():
    ref = _agg_from([10.0] * 800 + [1.0])
    cand = _agg_from([10.0] * 100 + [1.0] + [1.0] * 700)
    assert bench.speedup(ref, cand, 1.0) == 8.0


def test_trace_csv_roundtrip(tmp_path):
    trace = bench.run_experiment(_cfg(repeats=1, iterations=10))[0]
    path = tmp_path / "t.csv"
    bench.write_trace_csv(trace, path)
    back = bench.read_trace_csv(path)
    assert _strip(back) == _strip(trace)
    assert [r.wall_ms for r in back.rows] == [r.wall_ms for r in trace.rows]
    header = path.read_text().splitlines()[0]
    assert header == "iter,queries_cum,f_clean,gap,wall_ms"


def test_empty_trace_csv_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    bench.write_trace_csv(Trace(rows=[]), path)
    assert path.read_text() == "iter,queries_cum,f_clean,gap,wall_ms\n"


def test_aggregate_csv_roundtrip(tmp_path):
    agg = bench.aggregate(bench.run_experiment(_cfg(repeats=2, iterations=8)))
    path = tmp_path / "a.csv"
    bench.write_aggregate_csv(agg, path)
    back = bench.read_aggregate_csv(path)
    assert np.array_equal(back.mean_gap, agg.mean_gap)
    assert np.array_equal(back.std_gap, agg.std_gap)
    assert np.array_equal(back.iters, agg.iters)


def test_aggregate_csv_malformed_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("iter,mean_gap,std_gap,n\n0,1.0,0.0,2\n1,oops,0.0,2\n")
    with pytest.raises(ValueError, match="line 3"):
        bench.read_aggregate_csv(path)


def test_svg_output(tmp_path):
    agg = _agg_from([1.0, 0.1, 0.0])
    path = tmp_path / "plot.svg"
    bench.emit_plot_svg([("a", agg)], path, log_y=True)
    text = path.read_text()
    assert text.startswith("<svg ")
    assert "polyline" in text and "</svg>" in text
    single = _agg_from([2.0])
    bench.emit_plot_svg([("one", single)], path)
    assert path.read_text().startswith("<svg ")
    with pytest.raises(ValueError):
        bench.emit_plot_svg([], path)


def test_theta0_modes():
    fixed = Theta0Spec(mode=Theta0Mode.FIXED, value=0.25)
    assert np.array_equal(fixed.build(3, 1), np.full(3, 0.25))
    uni = Theta0Spec(mode=Theta0Mode.UNIFORM, lo=-2, hi=2)
    x = uni.build(1000, 7)
    assert x.min() >= -2 and x.max() < 2
    assert np.array_equal(x, uni.build(1000, 7))


def test_trailing_mean_decreases_on_quadratic_sgd():
    cfg = RunConfig(
        objective=ObjectiveSpec(ObjectiveKind.QUADRATIC, 100),
        estimator_kind=EstimatorKind.VANILLA,
        estimator=EstimatorConfig(mu=0.05, k=10, tag=DistTag.GAUSSIAN),
        optimizer=OptimizerConfig(rule=UpdateRule.SGD, eta=0.002),
        iterations=1000, repeats=1, master_seed=2)
    trace = bench.run_experiment(cfg)[0]
    gaps = np.array([r.gap for r in trace.rows])
    trailing = np.convolve(gaps, np.ones(100) / 100, mode="valid")
    for t in range(500, trailing.shape[0], 100):
        assert trailing[t] < trailing[t - 500]
