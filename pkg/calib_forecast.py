"""Calibration for acceptance criteria 5-7 (not part of the deliverable)."""
import time

import numpy as np

from posecast import eval_metrics as em
from posecast import pose_data as pd
from posecast import pose_forecaster as pf


def build_dataset(n=200, length=160, seed=11):
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(n):
        x0, x1 = rng.uniform(0.2, 0.4), rng.uniform(0.6, 0.8)
        y0, y1 = rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6)
        if rng.random() < 0.5:
            x0, x1 = x1, x0
        specs.append(pd.SynthSpec(category=i % 15,
                                  trajectory=pd.LineTrajectory((x0, y0), (x1, y1)),
                                  length=length, seed=int(rng.integers(2**31))))
    seqs = pd.synth_dataset(specs)
    pairs = []
    for s in seqs:
        pairs += pd.make_windows(s, hop=16)
    return pairs


def eval_diversity(gen, cfg, pairs, n_inputs=5, k=20, seed=123):
    vals = []
    for i in range(n_inputs):
        obs = pairs[i * 37 % len(pairs)].input
        samples = pf.sample_futures(gen, obs, k, seed=seed + i, cfg=cfg)
        vals.append(em.pose_diversity(samples))
    return float(np.mean(vals))


def waist_attract_distance(gen, cfg, pairs, n_inputs=5, k=20, seed=321):
    dists = []
    for i in range(n_inputs):
        obs = pairs[i * 37 % len(pairs)].input
        for s in pf.sample_futures(gen, obs, k, seed=seed + i, cfg=cfg):
            w = pf.waist_trajectory(s.poses.vectorized())
            dists.append(np.mean(np.linalg.norm(w - s.attract[None], axis=1)))
    return float(np.mean(dists))


def code_accuracy(gen, dg, cfg, pairs, n=300, seed=555):
    rng = np.random.default_rng(seed)
    correct = 0
    for i in range(n):
        obs = pairs[int(rng.integers(len(pairs)))].input
        z = rng.standard_normal(cfg.noise_dim)
        ci = int(rng.integers(cfg.n_codes))
        a = rng.uniform(0.1, 0.9, 2)
        sample = pf.generate(gen, obs, z, pf.one_hot(ci, cfg.n_codes), a, cfg)
        _, logits = pf.disc_global(dg, obs.vectorized(), sample.poses.vectorized())
        correct += int(np.argmax(logits) == ci)
    return correct / n


def main():
    pairs = build_dataset()
    print(f"dataset: {len(pairs)} windows", flush=True)
    steps = 2000
    results = {}
    for label, use in (("with", True), ("without", False)):
        cfg = pf.ForecastConfig(seed=0, use_latent_code=use, use_attraction=use)
        t0 = time.time()
        trainer = pf.ForecastTrainer(pairs, cfg)
        gen0, _, _ = pf.initial_networks(cfg)
        untrained_dist = waist_attract_distance(gen0, cfg, pairs)
        log = trainer.run(steps)
        dt = time.time() - t0
        div = eval_diversity(trainer.gen, cfg, pairs)
        dist = waist_attract_distance(trainer.gen, cfg, pairs)
        acc = code_accuracy(trainer.gen, trainer.d_global, cfg, pairs)
        results[label] = (div, dist, untrained_dist, acc)
        print(f"[{label} c,a] {steps} steps in {dt/60:.1f} min; diversity={div:.6f} "
              f"waist-dist={dist:.4f} (untrained {untrained_dist:.4f}) code-acc={acc:.3f}",
              flush=True)
        print("   last log row:", log[-1], flush=True)
    ratio = results["with"][0] / max(results["without"][0], 1e-12)
    print(f"diversity ratio with/without = {ratio:.1f} (need >= 5)")
    print(f"attract dist ratio trained/untrained = {results['with'][1]/results['with'][2]:.3f} (need <= 0.5)")
    print(f"code accuracy = {results['with'][3]:.3f} (need >= 0.8)")


if __name__ == "__main__":
    main()
