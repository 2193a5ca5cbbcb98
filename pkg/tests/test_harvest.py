import pytest

from charspot.annotation import CharBox, SceneAnnotation, TextAnnotation
from charspot.charset import class_of
from charspot.detections import CharDetection
from charspot.geometry import RotatedBox
from charspot.harvest import (
    DatasetState,
    EmptyDetector,
    NoiseModel,
    OracleDetector,
    accept_rule,
    harvest_step,
    improving_oracle_factory,
    run_iterations,
)
from charspot.synthgen import SynthConfig, generate_corpus

WORD = RotatedBox(50, 40, 64, 26)


def det(x, label=0, score=0.99):
    return CharDetection(RotatedBox(x, 40, 18, 20), score, label)


def word_scene(x0, text, y=40):
    chars = [CharBox(RotatedBox(x0 + 20 * i, y, 18, 20), class_of(ch)) for i, ch in enumerate(text)]
    w = 20 * len(text) + 4
    return TextAnnotation(RotatedBox(x0 + 10 * (len(text) - 1), y, w, 26), text, False, chars)


def three_words():
    return SceneAnnotation(400, 200, [word_scene(30, "CAT"), word_scene(30, "DOG", 100), word_scene(30, "HI", 160)])


class Fixed:
    def __init__(self, per_image):
        self.per_image = per_image

    def detect(self, index, scene=None):
        return list(self.per_image[index])


def test_accept_count_match_labels_positionally():
    # detections arrive shuffled with junk labels; reading order decides the labels
    res = accept_rule(WORD, "CAT", [det(50, 7), det(30, 7), det(70, 7)])
    assert res.eligible and res.accepted
    assert [c.label for c in res.chars] == [class_of(ch) for ch in "CAT"]
    assert [c.box.cx for c in res.chars] == [30, 50, 70]


def test_reject_count_mismatch():
    res = accept_rule(WORD, "CAT", [det(30), det(50)])
    assert res.eligible and not res.accepted and res.chars is None
    assert not accept_rule(WORD, "CAT", [det(30), det(40), det(50), det(70)]).accepted


@pytest.mark.parametrize("text,dc", [("###", False), ("CAT", True), ("€€", False)])
def test_ineligible_words(text, dc):
    res = accept_rule(WORD, text, [det(30), det(50), det(70)], dc)
    assert not res.eligible and not res.accepted


def test_one_word_missing_a_character():
    truth = three_words()
    dets = [det(30), det(50), det(70),
            CharDetection(RotatedBox(30, 100, 18, 20), 0.99, 0), CharDetection(RotatedBox(50, 100, 18, 20), 0.99, 0),
            CharDetection(RotatedBox(30, 160, 18, 20), 0.99, 0), CharDetection(RotatedBox(50, 160, 18, 20), 0.99, 0)]
    state = harvest_step(DatasetState([truth]), Fixed([dets]))
    assert state.stats[-1].words_accepted == 2 and state.stats[-1].words_total == 3
    assert state.stats[-1].ratio == pytest.approx(2 / 3)
    assert state.harvested[0][1] is None
    state.check()


def test_empty_detector_harvests_nothing():
    state = run_iterations(DatasetState([three_words()]), lambda f: EmptyDetector(), 3)
    assert [s.words_accepted for s in state.stats] == [0, 0, 0]


def test_constant_perfect_detector():
    truth = [three_words()]
    state = run_iterations(DatasetState(truth), lambda f: OracleDetector(truth), 3)
    assert [s.ratio for s in state.stats] == [1.0, 1.0, 1.0]
    early = run_iterations(DatasetState(truth), lambda f: OracleDetector(truth), 3, early_stop=True)
    assert len(early.stats) == 2 and early.stopped_early


def test_harvested_boxes_match_truth():
    truth = [three_words()]
    state = harvest_step(DatasetState(truth), OracleDetector(truth))
    for scene in state.harvested_scenes():
        for got, want in zip(scene.instances, truth[0].instances):
            assert got.chars == want.chars


def test_step_is_idempotent():
    truth = generate_corpus(SynthConfig(instance_count=(1, 4), seed=9), 10)
    detector = OracleDetector(truth, NoiseModel(miss_rate=0.2), seed=3)
    a = harvest_step(DatasetState(truth), detector)
    b = harvest_step(DatasetState(truth), detector)
    assert a.accepted_set() == b.accepted_set()
    assert a.harvested == b.harvested


def test_spurious_box_flips_acceptance():
    truth = [SceneAnnotation(400, 200, [word_scene(30, "CAT")])]
    # offset ~0.45 width keeps IoU with the real box well below the NMS threshold
    extra = CharDetection(RotatedBox(30 + 8, 40, 18, 20), 0.97, 0)
    base = OracleDetector(truth).detect(0)
    assert harvest_step(DatasetState(truth), Fixed([base])).stats[-1].words_accepted == 1
    assert harvest_step(DatasetState(truth), Fixed([base + [extra]])).stats[-1].words_accepted == 0


def test_failing_image_is_skipped():
    truth = [three_words(), three_words()]

    class Flaky(OracleDetector):
        def detect(self, index, scene=None):
            if index == 0:
                raise RuntimeError("boom")
            return super().detect(index, scene)

    state = harvest_step(DatasetState(truth), Flaky(truth))
    assert state.stats[-1].words_accepted == 3
    assert state.skipped == [(0, 0, "boom")]


def test_oracle_determinism_and_extremes():
    truth = generate_corpus(SynthConfig(instance_count=(2, 4), seed=4), 5)
    noise = NoiseModel(0.3, 0.5, 1.0, 0.05)
    a = OracleDetector(truth, noise, seed=11)
    b = OracleDetector(truth, noise, seed=11)
    for i in range(5):
        assert [d.box for d in a.detect(i)] == [d.box for d in b.detect(i)]
    assert all(OracleDetector(truth, NoiseModel(miss_rate=1.0)).detect(i) == [] for i in range(5))
    exact = OracleDetector(truth).detect(0)
    assert [d.box for d in exact] == [c.box for t in truth[0].instances for c in t.chars]


def test_lower_miss_rate_never_loses_characters():
    truth = generate_corpus(SynthConfig(instance_count=(2, 6), seed=5), 10)
    for i in range(10):
        hi = {(d.box.cx, d.box.cy) for d in OracleDetector(truth, NoiseModel(0.4), 2).detect(i)}
        lo = {(d.box.cx, d.box.cy) for d in OracleDetector(truth, NoiseModel(0.1), 2).detect(i)}
        assert hi <= lo


def test_improving_factory_reaches_zero_miss():
    truth = generate_corpus(SynthConfig(seed=6), 3)
    factory = improving_oracle_factory(truth, start_miss=0.15, full_at=0.6)
    assert factory(0.0).noise.miss_rate == pytest.approx(0.15)
    assert factory(0.3).noise.miss_rate == pytest.approx(0.075)
    assert factory(0.9).noise.miss_rate == 0.0


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(miss_rate=1.5)
    with pytest.raises(ValueError):
        run_iterations(DatasetState([]), lambda f: EmptyDetector(), 0)
