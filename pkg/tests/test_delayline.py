import numpy as np
import pytest

from viscobeam.delayline import (CoverageError, HistoryBuffer,
                                 uniform_history_times)

TAU = 0.5


def smooth_buffer(dt, order=1, n_future=10):
    times = np.arange(-TAU - 5 * dt, n_future * dt + dt / 2, dt)
    vals = np.stack([np.sin(2.0 * times), np.cos(3.0 * times)], axis=1)
    return HistoryBuffer(times, vals, TAU, interp_order=order), times, vals


@pytest.mark.parametrize("order", [1, 3])
def test_node_reads_are_bit_exact(order):
    buf, times, vals = smooth_buffer(1e-2, order)
    for i in (0, 3, len(times) - 1):
        out = buf.sample(times[i])
        assert np.array_equal(out, vals[i])


def test_vectorized_sampling_matches_scalar():
    buf, times, _ = smooth_buffer(1e-2)
    tq = times[0] + np.array([0.001, 0.0301, 0.1007, 0.499])
    batch = buf.sample(tq)
    single = np.stack([buf.sample(t) for t in tq])
    assert np.array_equal(batch, single)


def test_linear_interp_exact_for_linear_history():
    times = np.linspace(-TAU, 0.2, 40)
    vals = (2.0 * times + 1.0)[:, None]
    buf = HistoryBuffer(times, vals, TAU, interp_order=1)
    tq = np.linspace(-0.3, 0.15, 17)
    assert np.max(np.abs(buf.sample(tq)[:, 0] - (2.0 * tq + 1.0))) < 1e-14


def test_cubic_interp_exact_for_cubic_history():
    times = np.linspace(-TAU, 0.2, 40)
    poly = lambda t: 0.3 * t ** 3 - t ** 2 + 0.5 * t - 2.0
    buf = HistoryBuffer(times, poly(times)[:, None], TAU, interp_order=3)
    tq = np.linspace(-0.3, 0.15, 17)
    assert np.max(np.abs(buf.sample(tq)[:, 0] - poly(tq))) < 1e-12


def test_coverage_error_outside_window():
    buf, times, _ = smooth_buffer(1e-2)
    with pytest.raises(CoverageError):
        buf.sample(times[0] - 1.0)
    with pytest.raises(CoverageError):
        buf.sample(times[-1] + 1.0)


def test_push_must_be_monotone():
    buf, times, _ = smooth_buffer(1e-2)
    with pytest.raises(ValueError):
        buf.push(times[-1] - 1e-3, np.zeros(2))


def test_eviction_preserves_delay_coverage():
    dt = 1e-3
    times = uniform_history_times(TAU, dt)
    buf = HistoryBuffer(times, np.zeros((len(times), 3)), TAU)
    t = 0.0
    for k in range(5000):
        t += dt
        buf.push(t, np.full(3, np.sin(t)))
        # the delayed endpoint must always be readable
        buf.sample(t - TAU)
    # eviction bounds memory: far fewer records than pushes
    assert buf.n_records < len(times) + 2 * int(TAU / dt) + 16
    assert buf.oldest_time <= t - TAU


def test_from_initial_history_pins_newest_to_u1():
    dt = 1e-2
    times = uniform_history_times(TAU, dt)
    hist = np.zeros((len(times), 2))
    u1 = np.zeros(2)
    buf = HistoryBuffer.from_initial_history(times, hist, u1, TAU)
    assert np.array_equal(buf.sample(0.0), u1)
    with pytest.raises(ValueError):
        HistoryBuffer.from_initial_history(times, hist, np.ones(2), TAU)


def test_sample_delayed_endpoints():
    buf, times, vals = smooth_buffer(1e-2)
    t = times[-1]
    assert np.array_equal(buf.sample_delayed(t, 0.0), vals[-1])
    # t - tau lands on the uniform grid up to accumulated rounding
    idx = int(np.argmin(np.abs(times - (t - TAU))))
    assert np.allclose(buf.sample_delayed(t, 1.0), vals[idx],
                       rtol=0.0, atol=1e-12)


@pytest.mark.parametrize("order,lo,hi", [(1, 0.55, 1.6), (3, 1.7, 2.6)])
def test_transport_residual_convergence_order(order, lo, hi):
    rho = np.linspace(0.11, 0.87, 13) + 0.0123
    dts = (2e-2, 1e-2, 5e-3, 2.5e-3)
    res = []
    for dt in dts:
        buf, _, _ = smooth_buffer(dt, order)
        res.append(buf.transport_residual(3 * dt, rho, fd_step=0.9 * dt))
    slope = np.polyfit(np.log(dts), np.log(res), 1)[0]
    assert lo <= slope <= hi, f"observed order {slope:.2f}, residuals {res}"


def test_dump_format(tmp_path):
    buf, times, vals = smooth_buffer(1e-2)
    path = tmp_path / "history.tsv"
    buf.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    data = np.loadtxt(path)
    assert data.shape == (len(times), 3)
    assert np.array_equal(data[:, 0], times)
    assert np.array_equal(data[:, 1:], vals)


def test_initial_records_must_span_tau():
    with pytest.raises(ValueError):
        HistoryBuffer(np.linspace(-0.1, 0.0, 5), np.zeros((5, 1)), TAU)
    with pytest.raises(ValueError):
        HistoryBuffer(np.array([-TAU, -TAU, 0.0]), np.zeros((3, 1)), TAU)
