"""Oracle-classifier F1 on the drop scene as sensor noise grows.

    python3 scripts/noise_sweep.py --noise 0 4 8 12 16
"""

import argparse

from leftluggage import synth
from leftluggage.evaluation import evaluate
from leftluggage.pipeline import detect


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=int, nargs="+", default=[0, 4, 8, 12, 16])
    ap.add_argument("--grace", type=int, default=60)
    args = ap.parse_args()
    print(f"{'noise':>5} {'frame F1':>9} {'pixel F1':>9} {'detections':>10}")
    for a in args.noise:
        script = synth.drop_scene()
        script.noise_amplitude = a
        frames, truth = synth.render_scene(script)
        dets = detect(frames, synth.oracle_stage1(), synth.oracle_stage2())
        rep = evaluate(dets, truth, len(frames), grace=args.grace)
        print(f"{a:5d} {rep.frame_level.f1:9.4f} {rep.pixel_level.f1:9.4f} {len(dets):10d}")


if __name__ == "__main__":
    main()
