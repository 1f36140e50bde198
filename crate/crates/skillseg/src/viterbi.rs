//! Probabilistic temporal segmentation: a Markov chain over per-frame class
//! labels with a single switch probability ε, decoded exactly in the log
//! domain with the Viterbi algorithm.
//!
//! [`brute_force_decode`] enumerates every label sequence and exists as an
//! independent oracle for the dynamic program; it shares nothing with
//! [`viterbi_decode`] except the scoring definition.

use crate::error::{Error, Result};
use crate::mlp::{check_prob_row, ProbSequence, PROB_FLOOR};
use crate::timeline::{LabelSequence, SkillClass, NUM_CLASSES};

const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Label transition model: staying in a class has probability `1 - M*eps`
/// and switching to any one of the `M = K - 1` other classes has
/// probability `eps`, so each row sums to one. Valid for
/// `0 < eps <= 1/(M+1)`; at the upper bound transitions are uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    k: usize,
    eps: f64,
    log_switch: f64,
    log_self: f64,
}

impl TransitionModel {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        if !(2..=NUM_CLASSES).contains(&k) {
            return Err(Error::InvalidConfig(format!(
                "class count {k} outside [2, {NUM_CLASSES}]"
            )));
        }
        let m = (k - 1) as f64;
        let max = 1.0 / (m + 1.0);
        if !(eps > 0.0 && eps <= max) {
            return Err(Error::InvalidEpsilon { eps, max });
        }
        Ok(TransitionModel {
            k,
            eps,
            log_switch: eps.ln(),
            log_self: (1.0 - m * eps).ln(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Probability of keeping the same label between frames.
    pub fn self_weight(&self) -> f64 {
        1.0 - (self.k as f64 - 1.0) * self.eps
    }

    /// Log transition weight between two class indices.
    pub fn logprob(&self, from: usize, to: usize) -> f64 {
        debug_assert!(from < self.k && to < self.k);
        if from == to {
            self.log_self
        } else {
            self.log_switch
        }
    }
}

fn validate_rows(rows: &[Vec<f64>], k: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptySequence);
    }
    for (i, row) in rows.iter().enumerate() {
        check_prob_row(row, i, k)?;
    }
    Ok(())
}

fn log_emission(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Joint log score of a label sequence under the transition model and the
/// floored emission rows (uniform initial prior omitted as a constant).
pub fn sequence_score(rows: &[Vec<f64>], model: &TransitionModel, labels: &[usize]) -> f64 {
    let mut score = log_emission(rows[0][labels[0]]);
    for t in 1..labels.len() {
        score += model.logprob(labels[t - 1], labels[t]) + log_emission(rows[t][labels[t]]);
    }
    score
}

/// Exact maximum-score label sequence via dynamic programming.
///
/// Runs in `O(n K^2)` time and `O(n K)` space; ties (in the per-step
/// maxima and in the final state) break toward the lowest class id.
pub fn viterbi_decode(rows: &[Vec<f64>], model: &TransitionModel) -> Result<Vec<SkillClass>> {
    let k = model.k;
    validate_rows(rows, k)?;
    let n = rows.len();

    let mut delta: Vec<f64> = rows[0].iter().map(|&p| log_emission(p)).collect();
    let mut back = vec![vec![0usize; k]; n];

    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; k];
        for j in 0..k {
            let mut best_i = 0;
            let mut best = delta[0] + model.logprob(0, j);
            for (i, &d) in delta.iter().enumerate().skip(1) {
                let score = d + model.logprob(i, j);
                if score > best {
                    best = score;
                    best_i = i;
                }
            }
            next[j] = best + log_emission(rows[t][j]);
            back[t][j] = best_i;
        }
        delta = next;
    }

    let mut state = 0;
    for (j, &d) in delta.iter().enumerate().skip(1) {
        if d > delta[state] {
            state = j;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = state;
    for t in (1..n).rev() {
        state = back[t][state];
        path[t - 1] = state;
    }
    path.into_iter()
        .map(|id| SkillClass::from_id(id as u8))
        .collect()
}

/// Exhaustive-enumeration argmax over all `K^n` label sequences.
///
/// Test oracle only; refuses instances with more than a million candidate
/// sequences. Ties break toward the lexicographically smallest sequence.
pub fn brute_force_decode(rows: &[Vec<f64>], model: &TransitionModel) -> Result<Vec<SkillClass>> {
    let k = model.k;
    validate_rows(rows, k)?;
    let n = rows.len();

    let size = (k as u64).checked_pow(n as u32);
    if size.is_none() || size.unwrap() > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            k,
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mut labels = vec![0usize; n];
    let mut best = labels.clone();
    let mut best_score = sequence_score(rows, model, &labels);
    // odometer over all sequences in lexicographic order
    loop {
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            if pos == 0 {
                return best
                    .into_iter()
                    .map(|id| SkillClass::from_id(id as u8))
                    .collect();
            }
        }
        let score = sequence_score(rows, model, &labels);
        if score > best_score {
            best_score = score;
            best = labels.clone();
        }
    }
}

/// Decodes a classifier output sequence into per-frame labels.
pub fn decode_sequence(probs: &ProbSequence, model: &TransitionModel) -> Result<LabelSequence> {
    let labels = viterbi_decode(&probs.probs, model)?;
    LabelSequence::new(labels, probs.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::argmax;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(labels: &[SkillClass]) -> Vec<usize> {
        labels.iter().map(|c| c.id() as usize).collect()
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            })
            .collect()
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let m = TransitionModel::new(10, 0.01).unwrap();
        assert!((m.self_weight() - 0.91).abs() < 1e-12);
        let row_sum = 9.0 * 0.01 + m.self_weight();
        assert!((row_sum - 1.0).abs() < 1e-12);
        assert!((m.logprob(3, 3) - 0.91f64.ln()).abs() < 1e-12);
        assert_eq!(m.logprob(3, 4), 0.01f64.ln());
    }

    #[test]
    fn boundary_eps_collapses_to_uniform() {
        let m = TransitionModel::new(10, 0.1).unwrap();
        assert!((m.self_weight() - 0.1).abs() < 1e-12);
        assert!((m.logprob(0, 0) - m.logprob(0, 1)).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_eps_rejected() {
        assert!(matches!(
            TransitionModel::new(10, 0.2),
            Err(Error::InvalidEpsilon { .. })
        ));
        assert!(TransitionModel::new(10, 0.0).is_err());
        assert!(TransitionModel::new(10, -0.1).is_err());
    }

    #[test]
    fn uniform_transitions_reduce_to_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 2..=10usize {
            let model = TransitionModel::new(k, 1.0 / k as f64).unwrap();
            let rows = random_rows(&mut rng, 40, k);
            let decoded = viterbi_decode(&rows, &model).unwrap();
            let expect: Vec<usize> = rows.iter().map(|r| argmax(r)).collect();
            assert_eq!(ids(&decoded), expect);
        }
    }

    #[test]
    fn smoothing_overrides_weak_dissent() {
        // A favored everywhere except frame 2 (0.55 for B); eps = 0.01 keeps A
        let rows = vec![
            vec![0.8, 0.1, 0.1],
            vec![0.8, 0.1, 0.1],
            vec![0.45, 0.55, 0.0],
            vec![0.8, 0.1, 0.1],
            vec![0.8, 0.1, 0.1],
        ];
        let model = TransitionModel::new(3, 0.01).unwrap();
        let decoded = viterbi_decode(&rows, &model).unwrap();
        assert!(decoded.iter().all(|&c| c == SkillClass::BackLever));
        let brute = brute_force_decode(&rows, &model).unwrap();
        assert_eq!(decoded, brute);
    }

    #[test]
    fn single_frame_is_argmax() {
        let rows = vec![vec![0.2, 0.5, 0.3]];
        let model = TransitionModel::new(3, 0.05).unwrap();
        assert_eq!(
            brute_force_decode(&rows, &model).unwrap(),
            vec![SkillClass::FrontLever]
        );
        assert_eq!(
            viterbi_decode(&rows, &model).unwrap(),
            vec![SkillClass::FrontLever]
        );
    }

    #[test]
    fn hand_enumerated_two_class_table() {
        // 8 candidate sequences; the best is AAA:
        //   AAA: 0.6*0.4*0.55 * 0.9*0.9 = 0.10692   <- max
        //   BBB: 0.4*0.6*0.45 * 0.9*0.9 = 0.08748
        //   ABB: 0.6*0.6*0.45 * 0.1*0.9 = 0.01458
        //   BBA: 0.4*0.6*0.55 * 0.9*0.1 = 0.01188
        //   AAB: 0.6*0.4*0.45 * 0.9*0.1 = 0.00972
        //   BAA: 0.4*0.4*0.55 * 0.1*0.9 = 0.00792
        //   ABA: 0.6*0.6*0.55 * 0.1*0.1 = 0.00198  (frame-wise argmax!)
        //   BAB: 0.4*0.4*0.45 * 0.1*0.1 = 0.00072
        let rows = vec![vec![0.6, 0.4], vec![0.4, 0.6], vec![0.55, 0.45]];
        let model = TransitionModel::new(2, 0.1).unwrap();
        let want = vec![SkillClass::BackLever; 3];
        assert_eq!(brute_force_decode(&rows, &model).unwrap(), want);
        assert_eq!(viterbi_decode(&rows, &model).unwrap(), want);
        let score = sequence_score(&rows, &model, &[0, 0, 0]);
        assert!((score - 0.10692f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guards_instance_size() {
        let rows = vec![vec![0.1; 10]; 7];
        let model = TransitionModel::new(10, 0.01).unwrap();
        assert!(matches!(
            brute_force_decode(&rows, &model),
            Err(Error::InstanceTooLarge { k: 10, n: 7, .. })
        ));
    }

    #[test]
    fn empty_and_malformed_inputs_rejected() {
        let model = TransitionModel::new(3, 0.05).unwrap();
        assert!(matches!(
            viterbi_decode(&[], &model),
            Err(Error::EmptySequence)
        ));
        let bad = vec![vec![0.5, 0.5]];
        assert!(matches!(
            viterbi_decode(&bad, &model),
            Err(Error::MalformedProbRow { row: 0, .. })
        ));
        let neg = vec![vec![0.5, 0.7, -0.2]];
        assert!(viterbi_decode(&neg, &model).is_err());
    }

    fn count_switches(labels: &[SkillClass]) -> usize {
        labels.windows(2).filter(|p| p[0] != p[1]).count()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decode_matches_brute_force_score(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..=4usize);
            let n = rng.gen_range(1..=8usize);
            let eps = rng.gen_range(1e-4..=1.0 / k as f64);
            let model = TransitionModel::new(k, eps).unwrap();
            let rows = random_rows(&mut rng, n, k);
            let fast = viterbi_decode(&rows, &model).unwrap();
            let brute = brute_force_decode(&rows, &model).unwrap();
            let s_fast = sequence_score(&rows, &model, &ids(&fast));
            let s_brute = sequence_score(&rows, &model, &ids(&brute));
            prop_assert!((s_fast - s_brute).abs() < 1e-9, "{s_fast} vs {s_brute}");
        }

        #[test]
        fn smaller_eps_never_adds_switches(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..=5usize);
            let n = rng.gen_range(2..=40usize);
            let rows = random_rows(&mut rng, n, k);
            // ascending eps grid: the switch count may only grow
            let mut prev: Option<usize> = None;
            for i in 1..=6 {
                let eps = i as f64 / 6.0 * (1.0 / k as f64);
                let model = TransitionModel::new(k, eps).unwrap();
                let switches = count_switches(&viterbi_decode(&rows, &model).unwrap());
                if let Some(p) = prev {
                    prop_assert!(switches >= p, "eps {eps}: {switches} < {p}");
                }
                prev = Some(switches);
            }
        }

        #[test]
        fn decode_invariant_under_row_scaling(seed in 0u64..500, scale in 0.001f64..1000.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..=5usize);
            let n = rng.gen_range(1..=30usize);
            let rows = random_rows(&mut rng, n, k);
            let scaled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().map(|&v| v * scale).collect())
                .collect();
            let model = TransitionModel::new(k, 0.02).unwrap();
            prop_assert_eq!(
                viterbi_decode(&rows, &model).unwrap(),
                viterbi_decode(&scaled, &model).unwrap()
            );
        }
    }
}
