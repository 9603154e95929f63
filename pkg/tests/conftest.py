import pytest

from leftluggage import synth
from leftluggage.cascade import train_linear
from leftluggage.samplegen import augment, gen_stage1, gen_stage2, split

STAGE1_SIZE = (28, 22)
STAGE2_SIZE = (72, 36)
SEED = 7


def build_stage(stage, n_each=250, seed=SEED):
    """Generated samples, the 80/20 split, and a linear model trained on the augmented split."""
    bg = synth.station_background()
    if stage == 1:
        ss = gen_stage1(bg, synth.luggage_templates(), n_each, n_each, STAGE1_SIZE, seed)
    else:
        ss = gen_stage2(bg, synth.luggage_templates(), synth.attended_templates(), n_each, n_each, STAGE2_SIZE, seed)
    train, test = split(ss, 0.8, seed)
    model = train_linear(augment(train), epochs=30, learning_rate=0.05, seed=seed)
    return ss, train, test, model


@pytest.fixture(scope="session")
def stage1_bundle():
    return build_stage(1)


@pytest.fixture(scope="session")
def stage2_bundle():
    return build_stage(2)


@pytest.fixture(scope="session")
def drop_scene_frames():
    script = synth.drop_scene()
    frames, truth = synth.render_scene(script)
    return script, frames, truth


@pytest.fixture(scope="session")
def oracle_detections(drop_scene_frames):
    from leftluggage.pipeline import detect

    _, frames, _ = drop_scene_frames
    return detect(frames, synth.oracle_stage1(), synth.oracle_stage2())
