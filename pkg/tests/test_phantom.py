import math

import numpy as np
import pytest

from epiflow.phantom import (FlowWaveform, PhantomScene, TubeGeometry,
                             WaveformError, default_scene, flow_at,
                             velocity_at, velocity_field)

TUBE1 = TubeGeometry((15.3, 30.3), 9.5)


class TestFlowAt:
    def test_constant_flow_without_harmonics(self):
        w = FlowWaveform(mean_flow=1150.0, rate_bpm=99.0, harmonics=())
        for t in (0.0, 0.123, 7.0, 1e4):
            assert flow_at(w, t) == pytest.approx(1150.0)

    def test_default_waveform_average_is_mean_flow(self):
        w = FlowWaveform()
        t = np.linspace(0.0, w.period, 10_000, endpoint=False)
        assert np.mean(flow_at(w, t)) == pytest.approx(1150.0, abs=0.01)

    def test_zero_phase_sine_at_t0(self):
        w = FlowWaveform(harmonics=((0.5, 0.0),))
        assert flow_at(w, 0.0) == pytest.approx(1150.0)

    def test_mean_invariant_by_quadrature(self):
        # midpoint rule is spectrally accurate for a truncated Fourier series
        w = FlowWaveform(mean_flow=800.0, rate_bpm=72.0,
                         harmonics=((0.3, -np.pi / 2), (0.1, 0.4)))
        t = (np.arange(4096) + 0.5) * w.period / 4096
        assert np.mean(flow_at(w, t)) == pytest.approx(800.0, rel=1e-9)

    def test_negative_waveform_rejected_at_construction(self):
        with pytest.raises(WaveformError):
            FlowWaveform(harmonics=((1.5, 0.0),))

    def test_nonnegative_everywhere(self):
        w = FlowWaveform()
        t = np.linspace(0.0, 3 * w.period, 5000)
        assert np.min(flow_at(w, t)) >= 0.0

    def test_periodicity_bit_reproducible(self):
        # period exactly 1.0 s so that t + period is an exact float addition
        w = FlowWaveform(rate_bpm=60.0, harmonics=((0.45, -np.pi / 2),))
        for t in np.arange(0.0, 1.0, 1 / 64):
            assert flow_at(w, t) == flow_at(w, t + w.period)

    def test_periodicity_default_rate(self):
        w = FlowWaveform()
        t = np.linspace(0.0, w.period, 777)
        np.testing.assert_allclose(flow_at(w, t), flow_at(w, t + w.period), rtol=1e-12)

    def test_peak_timing_anchor(self):
        # single harmonic at phase -pi/2 peaks exactly at half period
        w = FlowWaveform(harmonics=((0.45, -np.pi / 2),))
        t = np.linspace(0.0, w.period, 10_000, endpoint=False)
        t_peak = t[np.argmax(flow_at(w, t))]
        assert abs(t_peak - w.period / 2) <= w.period / 10_000

    def test_rejects_non_finite_time(self):
        with pytest.raises(ValueError):
            flow_at(FlowWaveform(), float("nan"))


class TestVelocityAt:
    def test_no_slip_at_wall(self):
        point = (TUBE1.center[0] + TUBE1.radius, TUBE1.center[1])
        assert velocity_at(TUBE1, 1150.0, point) == pytest.approx(0.0, abs=1e-12)

    def test_centerline_velocity(self):
        # oracle: 2*q/A with A = pi*(d/2)^2
        expected = 2.0 * 1150.0 / (math.pi * 4.75**2)
        assert velocity_at(TUBE1, 1150.0, TUBE1.center) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(32.45, abs=0.01)

    def test_static_tube_everywhere_zero(self):
        static = TubeGeometry((15.3, 11.3), 9.5, is_static=True)
        for point in (static.center, (14.0, 11.0), (100.0, 50.0)):
            assert velocity_at(static, 987.0, point) == 0.0

    def test_outside_tube_zero(self):
        assert velocity_at(TUBE1, 1150.0, (60.0, 60.0)) == 0.0

    def test_negative_flow_rejected(self):
        with pytest.raises(ValueError):
            velocity_at(TUBE1, -1.0, TUBE1.center)

    def test_flow_conservation_midpoint_rule(self):
        # integrating the profile on a <= R/200 grid must recover q to 0.1%
        q = 1150.0
        h = TUBE1.radius / 200
        n = int(np.ceil(2 * TUBE1.radius / h)) + 2
        xs = TUBE1.center[0] - TUBE1.radius - h + (np.arange(n) + 0.5) * h
        ys = TUBE1.center[1] - TUBE1.radius - h + (np.arange(n) + 0.5) * h
        X, Y = np.meshgrid(xs, ys)
        integral = velocity_field(TUBE1, q, X, Y).sum() * h * h
        assert integral == pytest.approx(q, rel=1e-3)


class TestScene:
    def test_default_tube_diameters(self):
        scene = default_scene()
        assert [t.diameter for t in scene.tubes] == [9.5, 6.4, 4.4, 2.0]

    def test_default_rate(self):
        assert default_scene().waveform.rate_bpm == 99

    def test_static_tube_flag(self):
        scene = default_scene()
        assert scene.static_tube.is_static
        assert not any(t.is_static for t in scene.tubes)

    def test_tube1_analytic_area(self):
        assert default_scene().tubes[0].area == pytest.approx(70.88, abs=0.01)

    def test_deterministic(self):
        assert default_scene().scene_hash() == default_scene().scene_hash()

    def test_fov_default(self):
        assert default_scene().fov == (100.0, 60.0)

    def test_overlapping_tubes_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            PhantomScene(
                tubes=(TubeGeometry((20.0, 30.0), 9.5), TubeGeometry((24.0, 30.0), 9.5)),
                static_tube=TubeGeometry((80.0, 30.0), 9.5, is_static=True),
                waveform=FlowWaveform(),
            )

    def test_tube_outside_fov_rejected(self):
        with pytest.raises(ValueError, match="FOV"):
            PhantomScene(
                tubes=(TubeGeometry((2.0, 30.0), 9.5),),
                static_tube=TubeGeometry((80.0, 30.0), 9.5, is_static=True),
                waveform=FlowWaveform(),
            )
