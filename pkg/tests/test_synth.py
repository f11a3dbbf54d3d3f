import json

import numpy as np
import pytest

from wardflow.boxes import BoundingBox
from wardflow.detect import blob_detect
from wardflow.evaluation import counting_accuracy
from wardflow.frames import write_npy_frame
from wardflow.pipeline import SessionConfig, analyze_session
from wardflow.synth import (ActorScript, Keyframe, Scenario, export_session,
                            render, scenario_from_dict)


def static_patient(box=BoundingBox(20, 30, 30, 40)):
    return ActorScript([Keyframe(0.0, box)])


def basic_scenario(duration=10, workers=(), noise=0.0, resolution=(96, 96)):
    return Scenario(duration=duration, patient=static_patient(),
                    workers=list(workers), resolution=resolution,
                    noise_sigma_c=noise)


class TestScripts:
    def test_interpolation(self):
        script = ActorScript([Keyframe(0.0, BoundingBox(0, 0, 10, 10)),
                              Keyframe(10.0, BoundingBox(20, 0, 10, 10))])
        assert script.box_at(5.0) == BoundingBox(10, 0, 10, 10)

    def test_presence_window(self):
        script = ActorScript([Keyframe(0.0, BoundingBox(0, 0, 5, 5))],
                             enter=3.0, exit=7.0)
        assert script.box_at(2.0) is None
        assert script.box_at(3.0) is not None
        assert script.box_at(7.0) is None

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            Scenario(duration=5,
                     patient=ActorScript([Keyframe(0.0, BoundingBox(90, 90, 20, 20))]),
                     resolution=(96, 96))


class TestRender:
    def test_deterministic(self):
        scenario = basic_scenario(duration=4, noise=0.1)
        frames1, _ = render(scenario, seed=7)
        frames2, _ = render(scenario, seed=7)
        for a, b in zip(frames1, frames2):
            assert write_npy_frame(a) == write_npy_frame(b)

    def test_seed_changes_noise(self):
        scenario = basic_scenario(duration=2, noise=0.1)
        a, _ = render(scenario, seed=1)
        b, _ = render(scenario, seed=2)
        assert not np.array_equal(a[0].temps, b[0].temps)

    def test_static_patient_truth(self):
        _, truth = render(basic_scenario(duration=6), seed=0)
        assert truth.worker_counts == [0] * 6
        assert truth.interaction == [0] * 6
        assert truth.displacement == [0.0] * 6

    def test_zero_noise_exact_rectangle(self):
        frames, _ = render(basic_scenario(duration=1), seed=0)
        temps = frames[0].temps
        assert np.all(temps[30:70, 20:50] == 36.0)
        assert temps[0, 0] == 22.0

    def test_worker_approach_interaction_window(self):
        # worker overlaps 20% of the patient area during seconds 10..39
        patient_box = BoundingBox(20, 30, 30, 40)
        worker = ActorScript([Keyframe(0.0, BoundingBox(44, 30, 20, 40))],
                             enter=10.0, exit=40.0)
        scenario = Scenario(duration=60, patient=static_patient(patient_box),
                            workers=[worker], resolution=(96, 96),
                            noise_sigma_c=0.0)
        _, truth = render(scenario, seed=0, tau=0.1)
        assert sum(truth.interaction) == 30
        assert truth.interaction[10] == 1 and truth.interaction[9] == 0
        assert truth.worker_counts[10:40] == [1] * 30

    def test_oscillating_patient_displacement(self):
        keyframes = [Keyframe(float(t), BoundingBox(20.0 + (t % 8 if t % 8 < 4 else 8 - t % 8),
                                                    30, 30, 40))
                     for t in range(17)]
        scenario = Scenario(duration=16, patient=ActorScript(keyframes),
                            resolution=(96, 96), noise_sigma_c=0.0)
        _, truth = render(scenario, seed=0)
        assert truth.displacement[0] == 0.0
        assert all(d == pytest.approx(1.0) for d in truth.displacement[1:])

    def test_from_dict_roundtrip(self):
        doc = {
            "duration": 5,
            "resolution": [96, 96],
            "noise_sigma_c": 0.0,
            "patient": {"keyframes": [{"t": 0, "box": [20, 30, 30, 40]}]},
            "workers": [{"enter": 1, "exit": 4,
                         "keyframes": [{"t": 0, "box": [60, 30, 20, 40]}]}],
        }
        scenario = scenario_from_dict(doc)
        _, truth = render(scenario, seed=0)
        assert truth.worker_counts == [0, 1, 1, 1, 0]


class TestClosedLoop:
    def make_scenario(self):
        patient_box = BoundingBox(20, 30, 30, 40)
        near = ActorScript([Keyframe(0.0, BoundingBox(44, 30, 20, 40))],
                           enter=5.0, exit=15.0)
        far = ActorScript([Keyframe(0.0, BoundingBox(70, 5, 15, 20))],
                          enter=10.0, exit=25.0)
        return Scenario(duration=30, patient=static_patient(patient_box),
                        workers=[near, far], resolution=(96, 96),
                        noise_sigma_c=0.0)

    def test_truth_detections_reproduce_metrics(self):
        scenario = self.make_scenario()
        _, truth = render(scenario, seed=0)
        frames, _ = render(scenario, seed=0)
        report = analyze_session(frames, truth.frames, SessionConfig(),
                                 compute_motion=False)
        assert report.per_second_worker_counts == truth.worker_counts
        assert report.nursing_time_s == sum(truth.worker_counts)
        assert report.interaction_time_s == sum(truth.interaction)

    def test_blob_detector_counting(self):
        # actors kept apart so warm blobs never merge
        a = ActorScript([Keyframe(0.0, BoundingBox(60, 30, 20, 40))],
                        enter=5.0, exit=15.0)
        b = ActorScript([Keyframe(0.0, BoundingBox(70, 5, 15, 20))],
                        enter=10.0, exit=25.0)
        scenario = Scenario(duration=30, patient=static_patient(),
                            workers=[a, b], resolution=(96, 96),
                            noise_sigma_c=0.0)
        frames, truth = render(scenario, seed=0)
        bed = BoundingBox(20, 30, 30, 40)
        pred = [len([d for d in blob_detect(f, 30.0, 25.0, bed)
                     if d.cls.value == "worker"])
                for f in frames]
        assert counting_accuracy(pred, truth.worker_counts) >= 0.95


def test_export_session(tmp_path):
    scenario = basic_scenario(duration=3)
    frames, truth = render(scenario, seed=0)
    export_session(frames, truth, tmp_path / "out")
    out = tmp_path / "out"
    assert (out / "manifest.json").exists()
    assert (out / "frame_00000.npy").exists()
    assert (out / "truth_dets.jsonl").exists()
    doc = json.loads((out / "truth.json").read_text())
    assert doc["worker_counts"] == truth.worker_counts
