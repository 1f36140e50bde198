//! Acceptance suite: one test per gate criterion, each printing a pass line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skillseg::heuristic::{base_window, heuristic_segment, HeuristicConfig};
use skillseg::metrics::{
    asf1, edge_distance_accuracy, masf1, merge_edge_bins, sf1, thresholds,
    DEFAULT_EDGE_BIN_WIDTH, DEFAULT_THRESHOLD_COUNT,
};
use skillseg::mlp::{gradient_check_stats, Activation, LabeledFrame, MlpModel, TrainConfig};
use skillseg::pose::FEATURE_DIM;
use skillseg::synth::{gen_bundle, SynthConfig};
use skillseg::timeline::{
    labels_to_segments, segments_to_labels, LabelSequence, Segment, SkillClass, Timeline,
    NUM_CLASSES,
};
use skillseg::viterbi::{
    brute_force_decode, sequence_score, viterbi_decode, TransitionModel,
};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect()
}

fn seq(ids: &[u8]) -> LabelSequence {
    let labels = ids.iter().map(|&i| SkillClass::from_id(i).unwrap()).collect();
    LabelSequence::with_default_fps(labels).unwrap()
}

fn class_ids(labels: &[SkillClass]) -> Vec<usize> {
    labels.iter().map(|c| c.id() as usize).collect()
}

#[test]
fn criterion_1_viterbi_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let trials = 200;
    for trial in 0..trials {
        let k = rng.gen_range(2..=4usize);
        let n = rng.gen_range(1..=8usize);
        let eps = rng.gen_range(1e-4..=1.0 / k as f64);
        let model = TransitionModel::new(k, eps).unwrap();
        let rows = random_rows(&mut rng, n, k);
        let fast = viterbi_decode(&rows, &model).unwrap();
        let brute = brute_force_decode(&rows, &model).unwrap();
        let s_fast = sequence_score(&rows, &model, &class_ids(&fast));
        let s_brute = sequence_score(&rows, &model, &class_ids(&brute));
        assert!(
            (s_fast - s_brute).abs() < 1e-9,
            "trial {trial}: viterbi score {s_fast} != brute-force optimum {s_brute}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("criterion 1 (viterbi oracle equivalence): PASS ({trials}/{trials} in {elapsed:?})");
}

#[test]
fn criterion_2_uniform_transition_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let trials = 100;
    for trial in 0..trials {
        let k = rng.gen_range(2..=NUM_CLASSES);
        let n = rng.gen_range(1..=60usize);
        // eps = 1/(M+1) with M = K-1: uniform transitions
        let model = TransitionModel::new(k, 1.0 / k as f64).unwrap();
        let rows = random_rows(&mut rng, n, k);
        let decoded = viterbi_decode(&rows, &model).unwrap();
        let argmax: Vec<usize> = rows
            .iter()
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect();
        assert_eq!(class_ids(&decoded), argmax, "trial {trial}");
    }
    println!("criterion 2 (uniform-transition reduction): PASS ({trials}/{trials} exact)");
}

#[test]
fn criterion_3_mlp_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let trials = 20;
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for trial in 0..trials {
        let activation = Activation::ALL[trial % Activation::ALL.len()];
        let model = MlpModel::new([8, 8, 8], activation, 0x3000 + trial as u64).unwrap();
        let sample = LabeledFrame {
            features: (0..FEATURE_DIM).map(|_| rng.gen_range(0.05..1.0)).collect(),
            label: SkillClass::from_id((trial % 10) as u8).unwrap(),
        };
        let stats = gradient_check_stats(&model, &sample).unwrap();
        assert!(
            stats.relative < 1e-4,
            "trial {trial} ({activation}): relative error {:.2e}",
            stats.relative
        );
        // backstop: a real gradient bug disagrees at the size of the
        // gradient itself (~1e-3); finite-difference noise sits near 1e-11
        assert!(
            stats.absolute < 1e-8,
            "trial {trial} ({activation}): gradients disagree by {:.2e} absolute",
            stats.absolute
        );
        worst_rel = worst_rel.max(stats.relative);
        worst_abs = worst_abs.max(stats.absolute);
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "criterion 3 (mlp gradient check): PASS (worst relative {worst_rel:.1e}, absolute {worst_abs:.1e}, over {trials} models in {elapsed:?})"
    );
}

#[test]
fn criterion_4_mlp_memorization() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let data: Vec<LabeledFrame> = (0..64)
        .map(|i| LabeledFrame {
            features: (0..FEATURE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect(),
            label: SkillClass::from_id((i % 10) as u8).unwrap(),
        })
        .collect();
    // the published recipe: batch 512, 500 epochs, Adam at lr 1e-4
    let cfg = TrainConfig {
        seed: 0xC4,
        ..TrainConfig::default()
    };
    assert_eq!(cfg.batch_size, 512);
    assert_eq!(cfg.epochs, 500);
    assert_eq!(cfg.learning_rate, 1e-4);
    let mut model = MlpModel::new([256, 128, 64], cfg.activation, 0xC4).unwrap();
    let history = model.train(&data, &cfg).unwrap();
    assert_eq!(history.len(), 500);
    let accuracy = model.accuracy(&data).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(accuracy, 1.0, "training accuracy {accuracy}");
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 4 (mlp memorization): PASS (100% on 64 samples, final loss {:.2e}, {elapsed:?})",
        history.last().unwrap()
    );
}

#[test]
fn criterion_5_base_window_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let cfg = HeuristicConfig::default();
    let trials = 1000;
    for trial in 0..trials {
        let n = rng.gen_range(32..=2000usize);
        let ids: Vec<u8> = match trial % 4 {
            // iid noise, constant, alternating, blocky runs
            0 => (0..n).map(|_| rng.gen_range(0..10u8)).collect(),
            1 => vec![rng.gen_range(0..10u8); n],
            2 => (0..n).map(|i| (i % 2) as u8).collect(),
            _ => {
                let mut v = Vec::with_capacity(n);
                while v.len() < n {
                    let run = rng.gen_range(1..=50usize).min(n - v.len());
                    v.extend(std::iter::repeat(rng.gen_range(0..10u8)).take(run));
                }
                v
            }
        };
        let wb = base_window(&seq(&ids), &cfg).unwrap();
        assert!(
            (11..=19).contains(&wb),
            "trial {trial}: w_b = {wb} outside [11, 19] for n = {n}"
        );
    }
    println!("criterion 5 (base window range): PASS ({trials}/{trials} inside [11, 19])");
}

#[test]
fn criterion_6_heuristic_idempotence() {
    let cfg = HeuristicConfig::default();
    let synth_cfg = SynthConfig {
        n_videos: 100,
        frames: (120, 700),
        segment_len: (46, 160),
        noise: 0.0,
        seed: 0xC6,
        ..SynthConfig::default()
    };
    let trials = gen_bundle(&synth_cfg).unwrap();
    assert_eq!(trials.len(), 100);
    for video in &trials {
        let labels = segments_to_labels(&video.gt).unwrap();
        let wb = base_window(&labels, &cfg).unwrap();
        // precondition: every segment longer than 2*w_b + 2*stride frames
        assert!(video
            .gt
            .segments
            .iter()
            .all(|s| s.duration_frames() > 2 * wb + 2 * cfg.stride));
        let got = heuristic_segment(&labels, &cfg).unwrap();
        assert_eq!(
            got.segments, video.gt.segments,
            "video {} not reconstructed exactly",
            video.gt.video_id
        );
        assert_eq!(got.n_frames, video.gt.n_frames);
    }
    println!("criterion 6 (heuristic idempotence): PASS (100/100 exact reconstructions)");
}

#[test]
fn criterion_7_metric_identities() {
    let grid = thresholds(DEFAULT_THRESHOLD_COUNT);
    assert_eq!(grid.len(), 100);

    // perfect prediction: SF1 = 1 at all 100 thresholds, ASF1 = mASF1 = 1
    let perfect = Timeline::new(
        "v0",
        24.0,
        200,
        vec![
            Segment::new(SkillClass::None, 0, 49).unwrap(),
            Segment::new(SkillClass::Planche, 50, 149).unwrap(),
            Segment::new(SkillClass::None, 150, 199).unwrap(),
        ],
    )
    .unwrap();
    let set = vec![perfect.clone()];
    for &t in &grid {
        for class in [SkillClass::Planche, SkillClass::None] {
            assert_eq!(sf1(&set, &set, class, t), Some(1.0), "t = {t}");
        }
    }
    for class in [SkillClass::Planche, SkillClass::None] {
        assert_eq!(asf1(&set, &set, class, &grid), Some(1.0));
    }
    assert_eq!(masf1(&set, &set, &grid), 1.0);

    // the IoU-0.5 hand case: ASF1 = 0.50 +- 0.01
    let gt = Timeline::new("v0", 24.0, 100, vec![Segment::new(SkillClass::Planche, 0, 99).unwrap()])
        .unwrap();
    let pred = Timeline::new(
        "v0",
        24.0,
        100,
        vec![
            Segment::new(SkillClass::Planche, 0, 49).unwrap(),
            Segment::new(SkillClass::None, 50, 99).unwrap(),
        ],
    )
    .unwrap();
    let a = asf1(&[pred], &[gt], SkillClass::Planche, &grid).unwrap();
    assert!((a - 0.50).abs() <= 0.01, "ASF1 = {a}");
    println!("criterion 7 (metric identities): PASS (perfect = 1.0, IoU-0.5 case ASF1 = {a:.2})");
}

#[test]
fn criterion_8_table_ordering_at_desk_scale() {
    let start = Instant::now();
    let cfg = SynthConfig {
        n_videos: 50,
        frames: (300, 600),
        segment_len: (72, 200),
        noise: 0.05,
        alpha: 0.9,
        seed: 0xC8,
        ..SynthConfig::default()
    };
    let bundle = gen_bundle(&cfg).unwrap();
    let heuristic_cfg = HeuristicConfig::default();
    let transition = TransitionModel::new(NUM_CLASSES, 0.01).unwrap();

    let mut gts = Vec::new();
    let mut raws = Vec::new();
    let mut heuristics = Vec::new();
    let mut viterbis = Vec::new();
    for video in &bundle {
        let argmax = video.probs.argmax_labels().unwrap();

        let mut raw = labels_to_segments(&argmax).unwrap();
        raw.video_id = video.gt.video_id.clone();
        raws.push(raw);

        let mut heu = heuristic_segment(&argmax, &heuristic_cfg).unwrap();
        heu.video_id = video.gt.video_id.clone();
        heuristics.push(heu);

        let decoded = viterbi_decode(&video.probs.probs, &transition).unwrap();
        let mut vit =
            labels_to_segments(&LabelSequence::new(decoded, video.gt.fps).unwrap()).unwrap();
        vit.video_id = video.gt.video_id.clone();
        viterbis.push(vit);

        gts.push(video.gt.clone());
    }

    let grid = thresholds(DEFAULT_THRESHOLD_COUNT);
    let raw_score = masf1(&raws, &gts, &grid);
    let heuristic_score = masf1(&heuristics, &gts, &grid);
    let viterbi_score = masf1(&viterbis, &gts, &grid);
    let elapsed = start.elapsed();

    assert!(
        heuristic_score - raw_score >= 0.15,
        "heuristic {heuristic_score:.3} not 0.15 above raw {raw_score:.3}"
    );
    assert!(
        viterbi_score - raw_score >= 0.15,
        "viterbi {viterbi_score:.3} not 0.15 above raw {raw_score:.3}"
    );
    assert!(heuristic_score >= 0.90, "heuristic mASF1 {heuristic_score:.3}");
    assert!(viterbi_score >= 0.90, "viterbi mASF1 {viterbi_score:.3}");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "criterion 8 (desk-scale ordering): PASS (raw {raw_score:.3} < heuristic {heuristic_score:.3}, viterbi {viterbi_score:.3}; {elapsed:?})"
    );
}

#[test]
fn criterion_9_edge_distance_shape() {
    let cfg = SynthConfig {
        n_videos: 50,
        frames: (300, 600),
        segment_len: (72, 120),
        noise: 0.05,
        alpha: 0.9,
        edge_bias: true,
        seed: 0xC9,
        ..SynthConfig::default()
    };
    let bundle = gen_bundle(&cfg).unwrap();
    let per_video: Vec<_> = bundle
        .iter()
        .map(|video| {
            let pred = video.probs.argmax_labels().unwrap();
            edge_distance_accuracy(&pred, &video.gt, DEFAULT_EDGE_BIN_WIDTH).unwrap()
        })
        .collect();
    let bins = merge_edge_bins(&per_video);
    assert!(bins.len() >= 2);
    let bin0 = bins[0].accuracy();
    for bin in &bins[1..] {
        if bin.total == 0 {
            continue;
        }
        assert!(
            bin0 < bin.accuracy(),
            "bin 0 ({bin0:.3}) not strictly below bin {}..{} ({:.3})",
            bin.lo,
            bin.hi,
            bin.accuracy()
        );
    }
    println!(
        "criterion 9 (edge-distance shape): PASS (bin 0 accuracy {bin0:.3} is the strict minimum of {} bins)",
        bins.len()
    );
}
