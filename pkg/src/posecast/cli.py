"""Command-line orchestration: synth, train, sample, render, evaluate.

Every command is driven by one YAML config (see run_config) and is
deterministic under fixed seeds. On failure the process exits nonzero after
printing a single machine-parsable line ``error:<category>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import eval_metrics as em
from . import pose_corrector as pc
from . import pose_data as pd
from . import pose_forecaster as pf
from . import video_generator as vg
from .heatmap_render import render_skeleton
from .nn import CheckpointError, load_checkpoint, save_checkpoint
from .run_config import ConfigError, load_config

SAMPLE_META = "samples_meta.json"


# ---------------------------------------------------------------------------
# shared data plumbing


def _prepared_sequences(cfg):
    """Manifest -> normalized, subsampled sequences (unit coordinates)."""
    seqs = pd.load_pose_sequences(cfg.paths.manifest)
    out = []
    for seq in seqs:
        if seq.frame_size is None:
            raise pd.PoseDataError(f"sequence {seq.source_id!r} lacks a frame size")
        seq = pd.normalize(seq, seq.frame_size)
        if cfg.data.subsample_stride > 1:
            seq = pd.subsample(seq, cfg.data.subsample_stride)
        out.append(seq)
    return out


def _forecast_windows(cfg, seqs):
    pairs = []
    for seq in seqs:
        pairs += pd.make_windows(seq, hop=cfg.data.window_hop)
    if cfg.data.augment_flip:
        pairs += [
            pd.WindowPair(pd.horizontal_flip(p.input), pd.horizontal_flip(p.target), p.start)
            for p in list(pairs)
        ]
    return pairs


def _video_pairs(cfg, seqs):
    pairs = []
    for i, seq in enumerate(seqs):
        if seq.frames_dir:
            provider = vg.DirFrameProvider(seq.frames_dir, cfg.videogen.image_size)
        else:
            provider = vg.SkeletonFrameProvider(
                seq, cfg.videogen.image_size, vg.palette_for_sequence(i, cfg.seed)
            )
        for window in pd.make_windows(seq, hop=cfg.data.window_hop):
            pairs.append(vg.VideoPair(window, provider))
    return pairs


def _find_sequence(seqs, sequence_id):
    for seq in seqs:
        if seq.source_id == sequence_id:
            return seq
    raise pd.PoseDataError(f"sequence {sequence_id!r} not found in manifest")


def _write_log(path, columns, rows, append=False):
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


# ---------------------------------------------------------------------------
# image/gif output helpers


def _to_uint8(img):
    return (np.clip(img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def save_png(path, img):
    from PIL import Image

    Image.fromarray(_to_uint8(img)).save(path)


def save_gif(path, frames, fps=12.0):
    from PIL import Image

    images = [Image.fromarray(_to_uint8(f)) for f in frames]
    duration = max(1, int(round(1000.0 / fps)))
    images[0].save(
        path, save_all=True, append_images=images[1:], duration=duration, loop=0
    )


def _bordered(img, color, width=3):
    out = img.copy()
    out[:width, :] = color
    out[-width:, :] = color
    out[:, :width] = color
    out[:, -width:] = color
    return out


def contact_sheet(input_frames, generated_frames):
    """One row: input frames bordered green, generated frames bordered red."""
    green, red = np.array([0.0, 0.9, 0.0]), np.array([0.9, 0.0, 0.0])
    tiles = [_bordered(f, green) for f in input_frames]
    tiles += [_bordered(f, red) for f in generated_frames]
    return np.concatenate(tiles, axis=1)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(cfg):
    rng = np.random.default_rng(cfg.seed)
    specs = []
    for i in range(cfg.synth.count):
        x0 = rng.uniform(0.2, 0.4)
        x1 = rng.uniform(0.6, 0.8)
        y0 = rng.uniform(0.4, 0.6)
        y1 = rng.uniform(0.4, 0.6)
        if rng.random() < 0.5:
            x0, x1 = x1, x0
        specs.append(
            pd.SynthSpec(
                category=i % cfg.synth.categories,
                trajectory=pd.LineTrajectory((x0, y0), (x1, y1)),
                length=cfg.synth.length,
                seed=int(rng.integers(2**31)),
                frame_rate=cfg.synth.fps,
            )
        )
    seqs = pd.synth_dataset(specs)

    manifest_path = Path(cfg.paths.manifest)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, seq in enumerate(seqs):
        pose_file = f"{seq.source_id}.csv"
        pd.write_pose_file(manifest_path.parent / pose_file, seq.joints * cfg.synth.frame_size)
        frames_dir = None
        if cfg.synth.render_frames:
            frames_dir = f"frames_{seq.source_id}"
            out = manifest_path.parent / frames_dir
            out.mkdir(parents=True, exist_ok=True)
            palette = vg.palette_for_sequence(i, cfg.seed)
            for t in range(len(seq)):
                save_png(
                    out / f"{t:05d}.png",
                    render_skeleton(seq.joints[t], cfg.synth.frame_size, palette),
                )
        entries.append(
            (seq.source_id, pose_file, cfg.synth.frame_size, cfg.synth.fps, frames_dir)
        )
    pd.write_manifest(manifest_path, entries)
    print(f"wrote {len(seqs)} sequences to {manifest_path}")
    return 0


def _train_with_checkpoints(trainer, steps, ckpt_path, log_path, columns, interval, resume):
    start_new_log = True
    if resume and ckpt_path.exists():
        trainer.load(ckpt_path)
        start_new_log = False
        print(f"resumed from {ckpt_path} at step {trainer.step_count}")
    done = trainer.step_count
    if done >= steps:
        print(f"checkpoint already at step {done}, nothing to do")
        return
    first = True
    while trainer.step_count < steps:
        n = min(interval, steps - trainer.step_count)
        rows = trainer.run(n)
        _write_log(log_path, columns, rows, append=not (first and start_new_log))
        first = False
        trainer.save(ckpt_path)
        print(f"step {trainer.step_count}/{steps} saved {ckpt_path.name}")


def cmd_train(cfg, stage, resume=False):
    ckpt_dir = Path(cfg.paths.checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    seqs = _prepared_sequences(cfg)
    if stage == "corrector":
        frames = np.concatenate([s.joints for s in seqs]).reshape(-1, 28)
        net, log = pc.train_corrector(
            frames,
            cfg.corrector.corruption(),
            epochs=cfg.corrector.epochs,
            seed=cfg.corrector.seed,
            batch_size=cfg.corrector.batch_size,
            lr=cfg.corrector.lr,
        )
        save_checkpoint(ckpt_dir / "corrector.npz", net.named_params(), step=cfg.corrector.epochs)
        _write_log(
            ckpt_dir / "corrector_log.csv",
            ("epoch", "mse"),
            [{"epoch": e, "mse": v} for e, v in enumerate(log)],
        )
        print(f"corrector trained: mse {log[0]:.6f} -> {log[-1]:.6f}")
    elif stage == "forecaster":
        pairs = _forecast_windows(cfg, seqs)
        trainer = pf.ForecastTrainer(pairs, cfg.forecast)
        _train_with_checkpoints(
            trainer,
            cfg.forecast.steps,
            ckpt_dir / "forecaster.npz",
            ckpt_dir / "forecaster_log.csv",
            pf.LOG_COLUMNS,
            cfg.train.checkpoint_interval,
            resume,
        )
    elif stage == "videogen":
        pairs = _video_pairs(cfg, seqs)
        trainer = vg.VideoTrainer(pairs, cfg.videogen, cfg.heatmap.spec())
        _train_with_checkpoints(
            trainer,
            cfg.videogen.steps,
            ckpt_dir / "videogen.npz",
            ckpt_dir / "videogen_log.csv",
            vg.VIDEO_LOG_COLUMNS,
            cfg.train.checkpoint_interval,
            resume,
        )
    else:
        raise ConfigError(f"unknown training stage {stage!r}")
    return 0


def _load_forecaster(cfg):
    path = Path(cfg.paths.checkpoint_dir) / "forecaster.npz"
    if not path.exists():
        raise CheckpointError(f"missing forecaster checkpoint: {path}")
    gen, d_global, d_local = pf.initial_networks(cfg.forecast)
    named = gen.named_params() + d_global.named_params() + d_local.named_params()
    load_checkpoint(path, named)
    return gen, d_global, d_local


def _load_videogen(cfg):
    path = Path(cfg.paths.checkpoint_dir) / "videogen.npz"
    if not path.exists():
        raise CheckpointError(f"missing videogen checkpoint: {path}")
    gen, disc = vg.initial_video_networks(cfg.videogen)
    load_checkpoint(path, gen.named_params() + disc.named_params())
    return gen, disc


def cmd_sample(cfg, sequence_id=None, count=None, window_start=None):
    sequence_id = sequence_id or cfg.sample.sequence
    count = count or cfg.sample.count
    start = cfg.sample.window_start if window_start is None else window_start
    if not sequence_id:
        raise ConfigError("no sequence id given (config sample.sequence or --sequence)")
    gen, _, _ = _load_forecaster(cfg)
    seq = _find_sequence(_prepared_sequences(cfg), sequence_id)
    if len(seq) < start + 16:
        raise pd.PoseDataError(
            f"sequence {sequence_id!r} too short for window start {start}"
        )
    obs = pd.PoseSequence(
        seq.joints[start : start + 16].copy(),
        frame_rate=seq.frame_rate,
        source_id=sequence_id,
    )
    samples = pf.sample_futures(gen, obs, count, seed=cfg.sample.seed, cfg=cfg.forecast)
    out_dir = Path(cfg.paths.output_dir) / f"samples_{sequence_id}"
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "sequence": sequence_id,
        "window_start": int(start),
        "count": int(count),
        "seed": int(cfg.sample.seed),
        "samples": [],
    }
    for i, sample in enumerate(samples):
        name = f"sample_{i:04d}.csv"
        pd.write_pose_file(out_dir / name, sample.poses.joints)
        meta["samples"].append(
            {
                "file": name,
                "code_index": sample.code_index,
                "attract": [float(v) for v in sample.attract],
                "noise": [float(v) for v in sample.noise],
            }
        )
    with open(out_dir / SAMPLE_META, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    print(f"wrote {count} samples to {out_dir}")
    return 0


def _read_samples(samples_dir):
    samples_dir = Path(samples_dir)
    meta_path = samples_dir / SAMPLE_META
    if not meta_path.exists():
        raise FileNotFoundError(f"missing {SAMPLE_META} in {samples_dir}")
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    poses = [
        pd._parse_pose_file(samples_dir / entry["file"], entry["file"])
        for entry in meta["samples"]
    ]
    return meta, poses


def cmd_render(cfg, samples_dir, videos=False):
    meta, poses = _read_samples(samples_dir)
    seq = _find_sequence(_prepared_sequences(cfg), meta["sequence"])
    start = meta["window_start"]
    obs_joints = seq.joints[start : start + 16]
    size = cfg.heatmap.size
    out_dir = Path(cfg.paths.output_dir) / f"render_{meta['sequence']}"
    out_dir.mkdir(parents=True, exist_ok=True)

    video_gen = None
    if videos:
        video_gen, _ = _load_videogen(cfg)

    n = min(len(poses), cfg.render.max_samples)
    for i in range(n):
        frames = [render_skeleton(p, size) for p in poses[i]]
        save_gif(out_dir / f"sample_{i:04d}_skeleton.gif", frames, cfg.render.fps)
        picks = np.linspace(0, len(frames) - 1, cfg.render.contact_frames).astype(int)
        sheet = contact_sheet(
            [render_skeleton(p, size) for p in obs_joints],
            [frames[j] for j in picks],
        )
        save_png(out_dir / f"sample_{i:04d}_sheet.png", sheet)
        if video_gen is not None:
            x_last = _last_observed_frame(cfg, seq, start)
            clip = vg.generate_video(video_gen, x_last, poses[i], cfg.heatmap.spec())
            frame_dir = out_dir / f"sample_{i:04d}_video"
            frame_dir.mkdir(exist_ok=True)
            for t, frame in enumerate(clip.frames):
                save_png(frame_dir / f"{t:05d}.png", frame)
            save_gif(out_dir / f"sample_{i:04d}_video.gif", clip.frames, cfg.render.fps)
    print(f"rendered {n} samples to {out_dir}")
    return 0


def _last_observed_frame(cfg, seq, window_start):
    """Source frame conditioning the video generator: real frames when the
    manifest provides them, otherwise a skeleton render of the last pose."""
    last = window_start + 15
    if seq.frames_dir:
        provider = vg.DirFrameProvider(seq.frames_dir, cfg.videogen.image_size)
        return provider.get(int(seq.frame_indices[last]))
    return render_skeleton(seq.joints[last], cfg.videogen.image_size)


def cmd_evaluate(cfg, samples_dir):
    meta, poses = _read_samples(samples_dir)
    seq = _find_sequence(_prepared_sequences(cfg), meta["sequence"])
    start = meta["window_start"]
    if len(seq) < start + 144:
        raise pd.PoseDataError(
            f"sequence {meta['sequence']!r} has no 128-frame ground truth after the window"
        )
    gt = seq.joints[start + 16 : start + 144].reshape(128, 28)
    sample_arrays = [p.reshape(len(p), 28) for p in poses]
    for arr in sample_arrays:
        if arr.shape != gt.shape:
            raise pd.PoseDataError(
                f"sample length {arr.shape} does not match ground truth {gt.shape}"
            )

    report = em.MetricReport(n=len(sample_arrays))
    if len(sample_arrays) >= 2:
        report.pose_diversity = em.pose_diversity(sample_arrays)
    report.best_mse, _ = em.best_of_n(sample_arrays, gt, em.pose_mse)

    n_video = min(cfg.evaluate.video_samples, len(sample_arrays))
    if n_video >= 1:
        video_gen, _ = _load_videogen(cfg)
        x_last = _last_observed_frame(cfg, seq, start)
        spec = cfg.heatmap.spec()
        clips = [
            vg.generate_video(video_gen, x_last, arr, spec).frames
            for arr in sample_arrays[:n_video]
        ]
        gt_clip = _ground_truth_clip(cfg, seq, start)
        fx = em.RandomProjectionExtractor(cfg.evaluate.extractor_seed, cfg.evaluate.feature_dim)
        if len(clips) >= 2:
            report.video_diversity = em.video_diversity(clips, fx)
        report.best_cosine, _ = em.best_of_n(
            clips, gt_clip, lambda a, b: em.video_cosine_distance(a, b, fx)
        )
        report.best_psnr, _ = em.best_of_n(clips, gt_clip, em.psnr, larger_is_better=True)

    out = Path(cfg.paths.output_dir) / f"report_{meta['sequence']}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.save(out)
    print(f"wrote {out}")
    for name in em.MetricReport.FIELDS:
        print(f"  {name} = {getattr(report, name)}")
    return 0


def _ground_truth_clip(cfg, seq, start):
    size = cfg.videogen.image_size
    if seq.frames_dir:
        provider = vg.DirFrameProvider(seq.frames_dir, size)
        idx = seq.frame_indices[start + 16 : start + 144]
        return np.stack([provider.get(int(i)) for i in idx])
    return np.stack([render_skeleton(p, size) for p in seq.joints[start + 16 : start + 144]])


# ---------------------------------------------------------------------------
# entry point


def _error_category(exc):
    if isinstance(exc, ConfigError):
        return "config", 2
    if isinstance(exc, pd.PoseDataError):
        return "data", 3
    if isinstance(exc, (FileNotFoundError, OSError)):
        return "io", 3
    if isinstance(exc, CheckpointError):
        return "checkpoint", 4
    if isinstance(exc, ValueError):
        return "validation", 5
    return "internal", 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="posecast",
        description="Multi-future pose forecasting and pose-conditioned video synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key, e.g. --set forecast.steps=100",
        )

    add_common(sub.add_parser("synth", help="generate the synthetic dataset"))

    p = sub.add_parser("train", help="train one stage")
    add_common(p)
    p.add_argument("--stage", required=True, choices=("corrector", "forecaster", "videogen"))
    p.add_argument("--resume", action="store_true", help="resume from the last checkpoint")

    p = sub.add_parser("sample", help="sample future pose sequences")
    add_common(p)
    p.add_argument("--sequence", help="source sequence id (default: config sample.sequence)")
    p.add_argument("--count", type=int, help="number of futures (default: config sample.count)")
    p.add_argument("--window-start", type=int, help="observation window start frame")

    p = sub.add_parser("render", help="render skeleton GIFs / videos for samples")
    add_common(p)
    p.add_argument("--samples", required=True, help="directory produced by `sample`")
    p.add_argument("--videos", action="store_true", help="also synthesize video frames")

    p = sub.add_parser("evaluate", help="diversity / best-of-N accuracy report")
    add_common(p)
    p.add_argument("--samples", required=True, help="directory produced by `sample`")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.stage, args.resume)
        if args.command == "sample":
            return cmd_sample(cfg, args.sequence, args.count, args.window_start)
        if args.command == "render":
            return cmd_render(cfg, args.samples, args.videos)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.samples)
        raise ConfigError(f"unknown command {args.command!r}")
    except Exception as exc:  # noqa: BLE001 - single reporting point
        category, code = _error_category(exc)
        print(f"error:{category}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
