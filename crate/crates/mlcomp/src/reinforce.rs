//! Policy training. Each episode walks one program through sampled phases,
//! scoring every step by the estimated change in execution time and energy
//! plus the exact change in code size; batches of episodes drive plain
//! REINFORCE updates with a batch-mean baseline.

use crate::features::{extract_features, FeatureVector};
use crate::pe::PeBundle;
use crate::policy::{PhasePolicy, PssError, StatePrep, TerminalReason};
use mlkit::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tir::passes::apply_phase;
use tir::platform::PlatformModel;
use tir::TirModule;

#[derive(Debug, Clone, PartialEq)]
pub struct PssTrainConfig {
    pub num_episodes: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Episode budget of phase applications that changed the program.
    pub max_sequence_len: usize,
    /// Consecutive unchanged applications that end an episode.
    pub max_inactive_len: usize,
    /// Weight layers in the network.
    pub n_layers: usize,
    pub hidden_size: usize,
    /// Per-step discount on future rewards.
    pub gamma: f64,
    /// Objective weights (time, energy, code size); must sum to 1.
    pub weights: [f64; 3],
    /// Penalty factor on any per-objective degradation.
    pub kappa: f64,
    pub seed: u64,
}

impl Default for PssTrainConfig {
    fn default() -> Self {
        PssTrainConfig {
            num_episodes: 512,
            batch_size: 6,
            learning_rate: 0.1,
            max_sequence_len: 128,
            max_inactive_len: 8,
            n_layers: 3,
            hidden_size: 16,
            gamma: 0.99,
            weights: [0.4, 0.4, 0.2],
            kappa: 2.0,
            seed: 0,
        }
    }
}

impl PssTrainConfig {
    pub fn validate(&self) -> Result<(), PssError> {
        let bad = |m: &str| Err(PssError::BadConfig(m.into()));
        if self.num_episodes == 0 || self.batch_size == 0 {
            return bad("num_episodes and batch_size must be positive");
        }
        if self.max_sequence_len == 0 || self.max_inactive_len == 0 {
            return bad("sequence and inactive limits must be positive");
        }
        if self.n_layers == 0 || self.hidden_size == 0 {
            return bad("network shape must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("objective weights must be non-negative");
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("objective weights must sum to 1");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be non-negative");
        }
        Ok(())
    }
}

/// One training rollout. All vectors are step-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub program_id: String,
    /// Feature vector the action was chosen from.
    pub states: Vec<FeatureVector>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Discounted suffix sums of `rewards`.
    pub returns: Vec<f64>,
    pub terminal: TerminalReason,
}

/// (time, energy, size) metric triple used by the reward.
pub type Objectives = [f64; 3];

const OBJECTIVE_NAMES: [&str; 3] = ["exec_time_s", "energy_j", "code_size_bytes"];

/// Weighted relative improvement minus a hinge penalty on degradations,
/// everything measured against the episode-start values.
pub fn step_reward(
    prev: Objectives,
    cur: Objectives,
    baseline0: Objectives,
    weights: [f64; 3],
    kappa: f64,
) -> Result<f64, PssError> {
    let mut reward = 0.0;
    for i in 0..3 {
        if !(baseline0[i] > 0.0) {
            return Err(PssError::NonPositiveBaseline {
                metric: OBJECTIVE_NAMES[i],
                value: baseline0[i],
            });
        }
        let r = (prev[i] - cur[i]) / baseline0[i];
        reward += weights[i] * r - kappa * (-r).max(0.0);
    }
    Ok(reward)
}

/// G_t = sum_{k>=t} gamma^(k-t) * r_k.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut returns = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    returns
}

fn estimate_objectives(
    m: &TirModule,
    f: &FeatureVector,
    pe: &PeBundle,
    platform: &PlatformModel,
) -> Result<Objectives, PssError> {
    let size = platform.code_size_bytes(m);
    let est = pe.predict_dynamics(f, &m.kind_counts(), size)?;
    Ok([est.exec_time_s, est.energy_j, size as f64])
}

fn sample_action(probs: &mlkit::DVector<f64>, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Roll one program through sampled phases until a cap fires. Steps that do
/// not change the program contribute reward exactly zero but still count
/// toward the inactive streak.
pub fn run_episode(
    program_id: &str,
    program: &TirModule,
    policy: &PhasePolicy,
    pe: &PeBundle,
    platform: &PlatformModel,
    cfg: &PssTrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Episode, PssError> {
    let mut module = program.clone();
    let mut features = extract_features(&module);
    let baseline0 = estimate_objectives(&module, &features, pe, platform)?;
    for i in 0..3 {
        if !(baseline0[i] > 0.0) {
            return Err(PssError::NonPositiveBaseline {
                metric: OBJECTIVE_NAMES[i],
                value: baseline0[i],
            });
        }
    }
    let mut prev = baseline0;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    let mut changed_count = 0usize;
    let mut streak = 0usize;
    let terminal = loop {
        if changed_count >= cfg.max_sequence_len {
            break TerminalReason::LengthCap;
        }
        let probs = policy.forward(&features)?;
        let action = sample_action(&probs, rng);
        let result = apply_phase(&module, action)?;
        let (cur, next_features) = if result.changed {
            let nf = extract_features(&result.module);
            (estimate_objectives(&result.module, &nf, pe, platform)?, nf)
        } else {
            (prev, features.clone())
        };
        states.push(features);
        actions.push(action);
        rewards.push(step_reward(prev, cur, baseline0, cfg.weights, cfg.kappa)?);
        module = result.module;
        features = next_features;
        prev = cur;
        if result.changed {
            changed_count += 1;
            streak = 0;
        } else {
            streak += 1;
            if streak >= cfg.max_inactive_len {
                break TerminalReason::InactiveCap;
            }
        }
    };
    let returns = discounted_returns(&rewards, cfg.gamma);
    Ok(Episode {
        program_id: program_id.to_string(),
        states,
        actions,
        rewards,
        returns,
        terminal,
    })
}

/// One gradient-ascent step on `sum_episodes sum_t log pi(a_t|s_t) (G_t - b)`
/// where `b` is the mean episode return across the batch.
pub fn reinforce_update(
    policy: &mut PhasePolicy,
    batch: &[Episode],
    learning_rate: f64,
) -> Result<(), PssError> {
    let starts: Vec<f64> = batch
        .iter()
        .filter_map(|e| e.returns.first().copied())
        .collect();
    if starts.is_empty() {
        return Ok(());
    }
    let baseline = starts.iter().sum::<f64>() / starts.len() as f64;
    let mut grads = policy.mlp.zero_grads();
    for ep in batch {
        for t in 0..ep.actions.len() {
            let z = policy.prep.apply(&ep.states[t].values);
            policy
                .mlp
                .accumulate_log_prob_grad(&z, ep.actions[t], ep.returns[t] - baseline, &mut grads);
        }
    }
    policy.mlp.ascend(&grads, learning_rate);
    Ok(())
}

/// Per-episode log line of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub program_id: String,
    pub steps: usize,
    /// G_0; zero for an episode with no steps.
    pub episode_return: f64,
}

/// Train a fresh policy: fit the state projection on the start-state
/// features of every program, then run episode batches, each followed by one
/// update. Episode `e` draws from its own seeded stream, so a run is
/// deterministic in the config alone.
pub fn train_policy(
    programs: &[(String, TirModule)],
    pe: &PeBundle,
    platform: &PlatformModel,
    cfg: &PssTrainConfig,
) -> Result<(PhasePolicy, Vec<EpisodeLog>), PssError> {
    cfg.validate()?;
    if programs.is_empty() {
        return Err(PssError::BadConfig("no programs to train on".into()));
    }
    let rows: Vec<Vec<f64>> = programs
        .iter()
        .map(|(_, m)| extract_features(m).values)
        .collect();
    let x = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let prep = StatePrep::fit(&x)?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut policy = PhasePolicy::init(prep, cfg.n_layers, cfg.hidden_size, &mut init_rng);

    let mut log = Vec::with_capacity(cfg.num_episodes);
    let mut episode = 0usize;
    while episode < cfg.num_episodes {
        let batch_len = cfg.batch_size.min(cfg.num_episodes - episode);
        let mut batch = Vec::with_capacity(batch_len);
        for _ in 0..batch_len {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(episode as u64 + 1);
            let pick = rng.random_range(0..programs.len());
            let (id, module) = &programs[pick];
            let ep = run_episode(id, module, &policy, pe, platform, cfg, &mut rng)?;
            log.push(EpisodeLog {
                episode,
                program_id: ep.program_id.clone(),
                steps: ep.actions.len(),
                episode_return: ep.returns.first().copied().unwrap_or(0.0),
            });
            batch.push(ep);
            episode += 1;
        }
        reinforce_update(&mut policy, &batch, cfg.learning_rate)?;
    }
    Ok((policy, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::extract_dataset;
    use crate::pe::{model_search, PairSpec, PeSearchConfig};
    use crate::policy::{softmax, Mlp};
    use mlkit::DVector;
    use tir::parse_module;
    use tir::passes::NUM_PHASES;
    use tir::platform::parse_platform;

    fn flat_platform() -> PlatformModel {
        let mut text = String::from("name = flat\nclock_hz = 1000000\nstatic_power_mw = 5\n");
        for (i, k) in tir::InstKind::ALL.iter().enumerate() {
            text.push_str(&format!("cycles.{} = {}\n", k.name(), 2 + (i % 4) as u64));
            text.push_str(&format!("energy_nj.{} = {}\n", k.name(), 1 + (i % 3) as u64));
            text.push_str(&format!("bytes.{} = 4\n", k.name()));
        }
        parse_platform(&text).unwrap()
    }

    /// A load feeding a chain of additions nobody reads: only dead code
    /// elimination can change it.
    fn dead_chain_program() -> (String, TirModule) {
        let mut text = String::from("global @g[1]\nfunc @main(){ e: %x = load @g, 0\n");
        text.push_str("  %d0 = add %x, 1\n");
        for i in 1..24 {
            text.push_str(&format!("  %d{} = add %d{}, 1\n", i, i - 1));
        }
        text.push_str("  ret 0 }");
        ("deadchain".to_string(), parse_module(&text).unwrap())
    }

    fn small_corpus() -> Vec<(String, TirModule)> {
        vec![
            dead_chain_program(),
            (
                "arith".into(),
                parse_module("func @main(){ e: %a = const 6  %b = mul %a, 7  print %b  ret %b }")
                    .unwrap(),
            ),
        ]
    }

    fn memorizing_pe(corpus: &[(String, TirModule)], platform: &PlatformModel) -> PeBundle {
        let d = extract_dataset(corpus, platform, 40, 6, 11, 1_000_000).unwrap();
        let cfg = PeSearchConfig {
            pairs: vec![PairSpec {
                preprocessor: "max-abs".into(),
                regressor: "knn".into(),
            }],
            trials_per_pair: 6,
            accuracy_thr: 2.0,
            seed: 11,
            ..Default::default()
        };
        model_search(&d, &cfg).unwrap()
    }

    #[test]
    fn reward_matches_hand_computed_cases() {
        let b = [10.0, 20.0, 40.0];
        let w = [1.0 / 3.0; 3];
        assert_eq!(step_reward(b, b, b, w, 2.0).unwrap(), 0.0);

        // 10% faster, all else equal.
        let cur = [9.0, 20.0, 40.0];
        let r = step_reward(b, cur, b, w, 2.0).unwrap();
        assert!((r - 0.1 / 3.0).abs() < 1e-12, "reward {r}");

        // 10% faster but 10% larger: the penalty dominates.
        let cur = [9.0, 20.0, 44.0];
        let r = step_reward(b, cur, b, w, 2.0).unwrap();
        assert!((r + 0.2).abs() < 1e-12, "reward {r}");

        assert!(matches!(
            step_reward(b, b, [10.0, 0.0, 40.0], w, 2.0),
            Err(PssError::NonPositiveBaseline { metric: "energy_j", .. })
        ));
    }

    #[test]
    fn reward_is_positively_homogeneous_in_weights_and_penalty() {
        let prev = [10.0, 18.0, 40.0];
        let cur = [9.5, 19.0, 39.0];
        let base = [11.0, 20.0, 41.0];
        let w = [0.4, 0.4, 0.2];
        let r1 = step_reward(prev, cur, base, w, 2.0).unwrap();
        let c = 3.7;
        let wc = [w[0] * c, w[1] * c, w[2] * c];
        let rc = step_reward(prev, cur, base, wc, 2.0 * c).unwrap();
        assert!((rc - c * r1).abs() < 1e-12 * c.max(1.0));
    }

    #[test]
    fn returns_equal_a_direct_power_series() {
        let rewards = [0.5, -1.0, 2.0, 0.0, 0.25];
        let gamma = 0.9;
        let got = discounted_returns(&rewards, gamma);
        for t in 0..rewards.len() {
            let direct: f64 = (t..rewards.len())
                .map(|k| gamma.powi((k - t) as i32) * rewards[k])
                .sum();
            assert!((got[t] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    /// Policy whose logits pin almost all probability on one phase.
    fn pinned_policy(prep: StatePrep, action: usize) -> PhasePolicy {
        let d = prep.out_dim();
        let mut bias = DVector::zeros(NUM_PHASES);
        bias[action] = 50.0;
        PhasePolicy {
            feature_manifest_version: crate::features::FEATURE_MANIFEST_VERSION,
            registry: tir::passes::PHASE_NAMES.iter().map(|n| n.to_string()).collect(),
            prep,
            mlp: Mlp {
                layers: vec![(DMatrix::zeros(NUM_PHASES, d), bias)],
            },
        }
    }

    #[test]
    fn never_changing_phase_ends_episode_at_the_inactive_cap() {
        let corpus = small_corpus();
        let platform = flat_platform();
        let pe = memorizing_pe(&corpus, &platform);
        let rows = DMatrix::from_fn(1, crate::features::NUM_FEATURES, |_, c| {
            extract_features(&corpus[1].1).values[c]
        });
        let prep = StatePrep::fit(&rows).unwrap();
        // licm never changes a loop-free program.
        let licm = tir::passes::phase_index("licm").unwrap();
        let policy = pinned_policy(prep, licm);
        let cfg = PssTrainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ep = run_episode("arith", &corpus[1].1, &policy, &pe, &platform, &cfg, &mut rng)
            .unwrap();
        assert_eq!(ep.actions.len(), cfg.max_inactive_len);
        assert!(ep.actions.iter().all(|a| *a == licm));
        assert!(ep.rewards.iter().all(|r| *r == 0.0));
        assert!(ep.returns.iter().all(|g| *g == 0.0));
        assert_eq!(ep.terminal, TerminalReason::InactiveCap);
    }

    #[test]
    fn zero_sequence_budget_yields_an_empty_length_capped_episode() {
        let corpus = small_corpus();
        let platform = flat_platform();
        let pe = memorizing_pe(&corpus, &platform);
        let (policy, _) = train_policy(
            &corpus,
            &pe,
            &platform,
            &PssTrainConfig {
                num_episodes: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let cfg = PssTrainConfig {
            max_sequence_len: 0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ep = run_episode("deadchain", &corpus[0].1, &policy, &pe, &platform, &cfg, &mut rng)
            .unwrap();
        assert!(ep.states.is_empty() && ep.actions.is_empty() && ep.rewards.is_empty());
        assert_eq!(ep.terminal, TerminalReason::LengthCap);
    }

    #[test]
    fn episodes_are_seed_stable_and_internally_consistent() {
        let corpus = small_corpus();
        let platform = flat_platform();
        let pe = memorizing_pe(&corpus, &platform);
        let (policy, _) = train_policy(
            &corpus,
            &pe,
            &platform,
            &PssTrainConfig {
                num_episodes: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let cfg = PssTrainConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_episode("deadchain", &corpus[0].1, &policy, &pe, &platform, &cfg, &mut rng)
                .unwrap()
        };
        let a = run(7);
        assert_eq!(a, run(7));
        assert_ne!(a.states.len(), 0);
        assert_eq!(a.states.len(), a.actions.len());
        assert_eq!(a.actions.len(), a.rewards.len());
        assert_eq!(a.rewards.len(), a.returns.len());
        let fresh = discounted_returns(&a.rewards, cfg.gamma);
        for (g, f) in a.returns.iter().zip(&fresh) {
            assert!((g - f).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }

    #[test]
    fn update_shifts_probability_toward_positive_advantage() {
        let rows = corpus_rows();
        let prep = StatePrep::fit(&rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut policy = PhasePolicy::init(prep, 3, 16, &mut rng);
        let state = FeatureVector {
            values: rows.row(0).iter().cloned().collect(),
            manifest_version: crate::features::FEATURE_MANIFEST_VERSION,
        };
        let up = 4usize;
        let down = 9usize;
        let batch = vec![
            Episode {
                program_id: "a".into(),
                states: vec![state.clone()],
                actions: vec![up],
                rewards: vec![1.0],
                returns: vec![1.0],
                terminal: TerminalReason::InactiveCap,
            },
            Episode {
                program_id: "b".into(),
                states: vec![state.clone()],
                actions: vec![down],
                rewards: vec![-1.0],
                returns: vec![-1.0],
                terminal: TerminalReason::InactiveCap,
            },
        ];
        let before = policy.forward(&state).unwrap();
        reinforce_update(&mut policy, &batch, 0.05).unwrap();
        let after = policy.forward(&state).unwrap();
        assert!(after[up] > before[up], "{} !> {}", after[up], before[up]);
        assert!(after[down] < before[down]);
    }

    #[test]
    fn zero_advantage_batches_leave_the_policy_untouched() {
        let rows = corpus_rows();
        let prep = StatePrep::fit(&rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut policy = PhasePolicy::init(prep, 3, 16, &mut rng);
        let state = FeatureVector {
            values: rows.row(1).iter().cloned().collect(),
            manifest_version: crate::features::FEATURE_MANIFEST_VERSION,
        };
        // Both episodes return exactly 0.7, so every advantage is zero.
        let ep = |action| Episode {
            program_id: "a".into(),
            states: vec![state.clone()],
            actions: vec![action],
            rewards: vec![0.7],
            returns: vec![0.7],
            terminal: TerminalReason::LengthCap,
        };
        let before = policy.clone();
        reinforce_update(&mut policy, &vec![ep(1), ep(2)], 0.5).unwrap();
        assert_eq!(policy, before);

        reinforce_update(&mut policy, &[], 0.5).unwrap();
        assert_eq!(policy, before);
    }

    fn corpus_rows() -> DMatrix<f64> {
        let corpus = small_corpus();
        let rows: Vec<Vec<f64>> = corpus
            .iter()
            .map(|(_, m)| extract_features(m).values)
            .collect();
        DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mlp = Mlp::init(&[4, 6, 6, 3], &mut rng);
        // A fixed mini-batch: (input, action, coefficient).
        let steps: Vec<(DVector<f64>, usize, f64)> = (0..5)
            .map(|i| {
                let x = DVector::from_fn(4, |_, _| rng.random_range(-1.5..1.5));
                (x, i % 3, rng.random_range(-2.0..2.0))
            })
            .collect();
        let loss = |m: &Mlp| -> f64 {
            steps
                .iter()
                .map(|(x, a, c)| c * softmax(&m.logits(x))[*a].ln())
                .sum()
        };
        let mut grads = mlp.zero_grads();
        for (x, a, c) in &steps {
            mlp.accumulate_log_prob_grad(x, *a, *c, &mut grads);
        }
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for li in 0..mlp.layers.len() {
            let (rows, cols) = (mlp.layers[li].0.nrows(), mlp.layers[li].0.ncols());
            for r in 0..rows {
                for c in 0..cols + 1 {
                    let mut plus = mlp.clone();
                    let mut minus = mlp.clone();
                    let analytic = if c < cols {
                        plus.layers[li].0[(r, c)] += eps;
                        minus.layers[li].0[(r, c)] -= eps;
                        grads.layers[li].0[(r, c)]
                    } else {
                        plus.layers[li].1[r] += eps;
                        minus.layers[li].1[r] -= eps;
                        grads.layers[li].1[r]
                    };
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                    let rel = (fd - analytic).abs() / analytic.abs().max(1e-8);
                    worst = worst.max(rel);
                }
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn one_batch_training_equals_a_manual_update() {
        let corpus = small_corpus();
        let platform = flat_platform();
        let pe = memorizing_pe(&corpus, &platform);
        let cfg = PssTrainConfig {
            num_episodes: 4,
            batch_size: 4,
            ..Default::default()
        };
        let (trained, log) = train_policy(&corpus, &pe, &platform, &cfg).unwrap();
        assert_eq!(log.len(), 4);

        // Rebuild by hand: same init stream, four episode streams, one update.
        let rows = corpus_rows();
        let prep = StatePrep::fit(&rows).unwrap();
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut manual = PhasePolicy::init(prep, cfg.n_layers, cfg.hidden_size, &mut init_rng);
        let mut batch = Vec::new();
        for e in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(e + 1);
            let pick = rng.random_range(0..corpus.len());
            let (id, m) = &corpus[pick];
            batch.push(run_episode(id, m, &manual, &pe, &platform, &cfg, &mut rng).unwrap());
        }
        reinforce_update(&mut manual, &batch, cfg.learning_rate).unwrap();
        assert_eq!(trained, manual);
    }

    #[test]
    fn training_learns_the_only_rewarding_phase() {
        let corpus = vec![dead_chain_program()];
        let platform = flat_platform();
        let pe = memorizing_pe(&corpus, &platform);
        let cfg = PssTrainConfig {
            num_episodes: 160,
            seed: 5,
            ..Default::default()
        };
        let (policy, log) = train_policy(&corpus, &pe, &platform, &cfg).unwrap();
        assert_eq!(log.len(), 160);
        let start = extract_features(&corpus[0].1);
        let probs = policy.forward(&start).unwrap();
        let dce = tir::passes::phase_index("dce").unwrap();
        assert!(
            probs[dce] > 0.5,
            "dce probability only reached {}",
            probs[dce]
        );
        let uniform = 1.0 / NUM_PHASES as f64;
        assert!(probs[dce] > 2.0 * uniform);
    }

    #[test]
    fn invalid_configs_are_rejected_up_front() {
        let bad = |f: fn(&mut PssTrainConfig)| {
            let mut c = PssTrainConfig::default();
            f(&mut c);
            assert!(matches!(c.validate(), Err(PssError::BadConfig(_))), "{c:?}");
        };
        bad(|c| c.num_episodes = 0);
        bad(|c| c.batch_size = 0);
        bad(|c| c.learning_rate = 0.0);
        bad(|c| c.gamma = 0.0);
        bad(|c| c.gamma = 1.5);
        bad(|c| c.weights = [0.5, 0.5, 0.5]);
        bad(|c| c.weights = [1.2, -0.1, -0.1]);
        bad(|c| c.kappa = -1.0);
        bad(|c| c.max_sequence_len = 0);
        bad(|c| c.hidden_size = 0);
        assert!(PssTrainConfig::default().validate().is_ok());
    }
}
