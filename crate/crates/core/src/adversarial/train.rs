use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversarial::discriminator::{build_discriminator, DEFAULT_CLIP_BOUND, DEFAULT_MAX_WEIGHT};
use crate::adversarial::loss::{grad_generator_adjoint, AdversarialContext};
use crate::adversarial::optim::{Adam, AdamConfig, Direction};
use crate::ansatz::{
    build_generator_spec, circuit_unitary, extend_with_ancilla, init_params, AncillaConfig,
    InitMode,
};
use crate::error::{Error, Result};
use crate::sim::{choi_output_state, UnitaryMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub qubits: usize,
    pub layers: usize,
    /// Ancilla wired in from the first iteration.
    pub ancilla_config: AncillaConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            qubits: 3,
            layers: 3,
            ancilla_config: AncillaConfig::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleEvent {
    InsertAncilla { config: AncillaConfig, init: InitMode },
    RandomRestart { ratio: f64 },
}

/// Unknown keys are rejected by the flattened event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledEvent {
    /// Applied before this iteration's updates.
    pub iteration: usize,
    #[serde(flatten)]
    pub event: ScheduleEvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub generator: GeneratorConfig,
    pub max_iters_phase1: usize,
    pub max_iters_phase2: usize,
    pub fidelity_threshold: f64,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub disc_steps_per_iter: usize,
    pub gen_steps_per_iter: usize,
    pub clip_bound: f64,
    pub max_weight: usize,
    pub seed: u64,
    pub schedule: Vec<ScheduledEvent>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            max_iters_phase1: 3000,
            max_iters_phase2: 3000,
            fidelity_threshold: 0.99,
            lr_generator: 0.01,
            lr_discriminator: 0.001,
            disc_steps_per_iter: 1,
            gen_steps_per_iter: 1,
            clip_bound: DEFAULT_CLIP_BOUND,
            max_weight: DEFAULT_MAX_WEIGHT,
            seed: 0,
            schedule: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn total_iterations(&self) -> usize {
        self.max_iters_phase1 + self.max_iters_phase2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold <= 1.0) {
            return bad(format!(
                "fidelity_threshold must lie in (0, 1], got {}",
                self.fidelity_threshold
            ));
        }
        for (name, lr) in [
            ("lr_generator", self.lr_generator),
            ("lr_discriminator", self.lr_discriminator),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.clip_bound > 0.0 && self.clip_bound.is_finite()) {
            return bad(format!("clip_bound must be positive, got {}", self.clip_bound));
        }
        if self.max_weight < 1 {
            return bad("max_weight must be at least 1".into());
        }
        build_generator_spec(
            self.generator.qubits,
            self.generator.layers,
            self.generator.ancilla_config,
        )?;
        let mut has_ancilla = self.generator.ancilla_config.has_ancilla();
        for ev in self.sorted_schedule() {
            match ev.event {
                ScheduleEvent::InsertAncilla { config, .. } => {
                    if !config.has_ancilla() {
                        return bad(format!(
                            "insert_ancilla at iteration {} names configuration 'none'",
                            ev.iteration
                        ));
                    }
                    if has_ancilla {
                        return bad(format!(
                            "insert_ancilla at iteration {}: generator already has an ancilla",
                            ev.iteration
                        ));
                    }
                    has_ancilla = true;
                }
                ScheduleEvent::RandomRestart { ratio } => {
                    if !(0.0..=1.0).contains(&ratio) {
                        return bad(format!("random_restart ratio must lie in [0, 1], got {ratio}"));
                    }
                }
            }
        }
        Ok(())
    }

    fn sorted_schedule(&self) -> Vec<ScheduledEvent> {
        let mut events = self.schedule.clone();
        events.sort_by_key(|e| e.iteration);
        events
    }
}

/// Which player an optimizer step belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Player {
    Generator,
    Discriminator,
}

/// Everything that evolves during one training run.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub context: AdversarialContext,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub gen_opt: Adam,
    pub disc_opt: Adam,
    pub iteration: usize,
}

impl TrainState {
    /// Random generator angles on `[0, 2π)` and discriminator weights on
    /// `[−clip, clip]`, both from `rng`.
    pub fn initialize(config: &TrainConfig, target: &UnitaryMatrix, rng: &mut impl Rng) -> Result<Self> {
        let gen = build_generator_spec(
            config.generator.qubits,
            config.generator.layers,
            config.generator.ancilla_config,
        )?;
        let register = 2 * gen.n_system_qubits() + usize::from(gen.has_ancilla());
        let disc = build_discriminator(register, config.max_weight)?.with_clip_bound(config.clip_bound)?;
        let theta = init_params(&gen, InitMode::Random, rng);
        let clip = config.clip_bound;
        let phi: Vec<f64> = (0..disc.len()).map(|_| rng.gen_range(-clip..=clip)).collect();
        let gen_opt = Adam::new(AdamConfig::with_lr(config.lr_generator), theta.len());
        let disc_opt = Adam::new(AdamConfig::with_lr(config.lr_discriminator), phi.len());
        Ok(Self {
            context: AdversarialContext::new(target.clone(), gen, disc)?,
            theta,
            phi,
            gen_opt,
            disc_opt,
            iteration: 0,
        })
    }

    /// One Adam step: generator descends, discriminator ascends and is then
    /// clipped to `[−clip, clip]`.
    pub fn optimizer_step(&mut self, grads: &[f64], which: Player) -> Result<()> {
        match which {
            Player::Generator => self.gen_opt.step(&mut self.theta, grads, Direction::Descend),
            Player::Discriminator => {
                self.disc_opt.step(&mut self.phi, grads, Direction::Ascend)?;
                let clip = self.context.discriminator().clip_bound();
                self.phi.iter_mut().for_each(|w| *w = w.clamp(-clip, clip));
                Ok(())
            }
        }
    }

    pub fn fidelity(&self) -> Result<f64> {
        self.context.fidelity(&self.theta)
    }
}

/// Applies a schedule event in place.
pub fn apply_schedule_event(state: &mut TrainState, event: &ScheduleEvent, rng: &mut impl Rng) -> Result<()> {
    match *event {
        ScheduleEvent::InsertAncilla { config, init } => {
            let old_gen = state.context.generator().clone();
            let (gen, theta) = extend_with_ancilla(&old_gen, &state.theta, config, init, rng)?;
            let theta_map: Vec<Option<usize>> = gen
                .gates()
                .iter()
                .map(|g| old_gen.slot_of(g.layer, g.kind, &g.qubits))
                .collect();
            let old_disc = state.context.discriminator();
            let (disc, phi) = old_disc.widen(1, &state.phi)?;
            let index: std::collections::HashMap<_, _> = old_disc
                .terms()
                .iter()
                .enumerate()
                .map(|(k, p)| (p.padded(1), k))
                .collect();
            let phi_map: Vec<Option<usize>> = disc.terms().iter().map(|p| index.get(p).copied()).collect();
            state.gen_opt = state.gen_opt.remap(&theta_map);
            state.disc_opt = state.disc_opt.remap(&phi_map);
            state.context = AdversarialContext::new(state.context.target().clone(), gen, disc)?;
            state.theta = theta;
            state.phi = phi;
        }
        ScheduleEvent::RandomRestart { ratio } => {
            if !(0.0..=1.0).contains(&ratio) {
                return Err(Error::Invalid(format!("restart ratio {ratio} outside [0, 1]")));
            }
            let n = state.theta.len();
            let count = ((ratio * n as f64).ceil() as usize).min(n);
            for k in sample(rng, n, count).into_iter() {
                state.theta[k] = rng.gen_range(0.0..TAU);
                state.gen_opt.reset_slot(k);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub iteration: usize,
    pub event: ScheduleEvent,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// `fidelity_trace[i]` is the fidelity after `i` iterations.
    pub fidelity_trace: Vec<f64>,
    pub loss_trace: Vec<f64>,
    pub f_max: f64,
    pub stop_iteration: Option<usize>,
    pub events: Vec<EventRecord>,
    pub final_ancilla: AncillaConfig,
    pub final_theta: Vec<f64>,
    pub final_phi: Vec<f64>,
    pub aborted: Option<String>,
}

impl RunRecord {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity_trace.last().copied()
    }
}

struct Snapshot {
    fidelity: f64,
    loss: f64,
    generated: Vec<f64>,
}

fn snapshot(state: &TrainState) -> Result<Snapshot> {
    let ctx = &state.context;
    let u = circuit_unitary(ctx.generator(), &state.theta)?;
    let fidelity = ctx.fidelity_of(&u)?;
    let psi = choi_output_state(&u, ctx.generator().has_ancilla())?;
    let generated = ctx.generator_expectations(&psi)?;
    let loss = ctx.loss_from_expectations(&state.phi, &generated);
    if !fidelity.is_finite() || !loss.is_finite() {
        return Err(Error::NonFinite(format!("fidelity {fidelity}, loss {loss}")));
    }
    Ok(Snapshot {
        fidelity,
        loss,
        generated,
    })
}

/// One seeded training run. Configuration problems are errors; numerical
/// aborts are reported in [`RunRecord::aborted`] with the partial trace.
pub fn train_run(config: &TrainConfig, target: &UnitaryMatrix) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = TrainState::initialize(config, target, &mut rng)?;
    let mut record = RunRecord {
        seed: config.seed,
        fidelity_trace: Vec::new(),
        loss_trace: Vec::new(),
        f_max: f64::NAN,
        stop_iteration: None,
        events: Vec::new(),
        final_ancilla: state.context.generator().ancilla(),
        final_theta: Vec::new(),
        final_phi: Vec::new(),
        aborted: None,
    };
    if let Err(e) = run_loop(config, &mut state, &mut rng, &mut record) {
        match e {
            Error::NonFinite(_) => record.aborted = Some(e.to_string()),
            other => return Err(other),
        }
    }
    record.f_max = record
        .fidelity_trace
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    record.final_ancilla = state.context.generator().ancilla();
    record.final_theta = state.theta;
    record.final_phi = state.phi;
    Ok(record)
}

fn run_loop(
    config: &TrainConfig,
    state: &mut TrainState,
    rng: &mut ChaCha8Rng,
    record: &mut RunRecord,
) -> Result<()> {
    let threshold = config.fidelity_threshold;
    let mut snap = snapshot(state)?;
    record.fidelity_trace.push(snap.fidelity);
    record.loss_trace.push(snap.loss);
    if snap.fidelity >= threshold {
        record.stop_iteration = Some(0);
        return Ok(());
    }
    let schedule = config.sorted_schedule();
    let mut next_event = 0;
    for it in 0..config.total_iterations() {
        state.iteration = it;
        while next_event < schedule.len() && schedule[next_event].iteration <= it {
            let ev = schedule[next_event];
            let before = snap.fidelity;
            apply_schedule_event(state, &ev.event, rng)?;
            snap = snapshot(state)?;
            record.events.push(EventRecord {
                iteration: it,
                event: ev.event,
                fidelity_before: before,
                fidelity_after: snap.fidelity,
            });
            next_event += 1;
        }

        let ctx = &state.context;
        let disc_grad: Vec<f64> = ctx
            .target_expectations()
            .iter()
            .zip(&snap.generated)
            .map(|(t, g)| t - g)
            .collect();
        for _ in 0..config.disc_steps_per_iter {
            state.optimizer_step(&disc_grad, Player::Discriminator)?;
        }
        for _ in 0..config.gen_steps_per_iter {
            let g = grad_generator_adjoint(&state.theta, &state.phi, &state.context)?;
            state.optimizer_step(&g, Player::Generator)?;
        }

        snap = snapshot(state)?;
        record.fidelity_trace.push(snap.fidelity);
        record.loss_trace.push(snap.loss);
        if snap.fidelity >= threshold {
            record.stop_iteration = Some(it + 1);
            return Ok(());
        }
    }
    state.iteration = config.total_iterations();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::target_unitary_zzz;

    fn short(seed: u64) -> TrainConfig {
        TrainConfig {
            max_iters_phase1: 20,
            max_iters_phase2: 10,
            max_weight: 2,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_records_initial_fidelity() {
        let cfg = TrainConfig {
            max_iters_phase1: 0,
            max_iters_phase2: 0,
            ..short(4)
        };
        let r = train_run(&cfg, &target_unitary_zzz(1.0)).unwrap();
        assert_eq!(r.fidelity_trace.len(), 1);
        assert_eq!(r.stop_iteration, None);
        assert_eq!(r.f_max, r.fidelity_trace[0]);
    }

    #[test]
    fn runs_are_reproducible() {
        let t = target_unitary_zzz(1.0);
        let mut cfg = short(11);
        cfg.schedule.push(ScheduledEvent {
            iteration: 20,
            event: ScheduleEvent::InsertAncilla {
                config: AncillaConfig::A3,
                init: InitMode::Random,
            },
        });
        let a = train_run(&cfg, &t).unwrap();
        let b = train_run(&cfg, &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fidelity_trace.len(), 31);
        assert_eq!(a.final_ancilla, AncillaConfig::A3);
        assert_eq!(a.events.len(), 1);
        assert_eq!(a.events[0].iteration, 20);
    }

    #[test]
    fn threshold_stops_run() {
        // Threshold at the initial fidelity level stops immediately.
        let t = target_unitary_zzz(1.0);
        let probe = train_run(&TrainConfig { max_iters_phase1: 0, max_iters_phase2: 0, ..short(5) }, &t).unwrap();
        let cfg = TrainConfig {
            fidelity_threshold: probe.fidelity_trace[0] * 0.5,
            ..short(5)
        };
        let r = train_run(&cfg, &t).unwrap();
        assert_eq!(r.stop_iteration, Some(0));
        assert_eq!(r.fidelity_trace.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        let t = target_unitary_zzz(1.0);
        let mut cfg = short(0);
        cfg.fidelity_threshold = 1.5;
        assert!(train_run(&cfg, &t).is_err());
        let mut cfg = short(0);
        cfg.generator.ancilla_config = AncillaConfig::A1;
        cfg.schedule.push(ScheduledEvent {
            iteration: 3,
            event: ScheduleEvent::InsertAncilla {
                config: AncillaConfig::A2,
                init: InitMode::Zero,
            },
        });
        assert!(train_run(&cfg, &t).is_err());
        let mut cfg = short(0);
        cfg.schedule.push(ScheduledEvent {
            iteration: 3,
            event: ScheduleEvent::RandomRestart { ratio: 1.2 },
        });
        assert!(train_run(&cfg, &t).is_err());
    }

    #[test]
    fn restart_ratio_extremes() {
        let t = target_unitary_zzz(1.0);
        let cfg = short(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut state = TrainState::initialize(&cfg, &t, &mut rng).unwrap();
        let before = state.theta.clone();
        apply_schedule_event(&mut state, &ScheduleEvent::RandomRestart { ratio: 0.0 }, &mut rng).unwrap();
        assert_eq!(state.theta, before);
        apply_schedule_event(&mut state, &ScheduleEvent::RandomRestart { ratio: 1.0 }, &mut rng).unwrap();
        assert!(state.theta.iter().zip(&before).all(|(a, b)| a != b));
        let mut s2 = state.clone();
        apply_schedule_event(&mut s2, &ScheduleEvent::RandomRestart { ratio: 0.25 }, &mut rng).unwrap();
        let changed = s2.theta.iter().zip(&state.theta).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 6);
    }

    #[test]
    fn double_insertion_is_rejected() {
        let t = target_unitary_zzz(1.0);
        let cfg = short(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = TrainState::initialize(&cfg, &t, &mut rng).unwrap();
        let ev = ScheduleEvent::InsertAncilla {
            config: AncillaConfig::A4,
            init: InitMode::Zero,
        };
        apply_schedule_event(&mut state, &ev, &mut rng).unwrap();
        assert_eq!(state.theta.len(), 39);
        assert_eq!(state.phi.len(), 210);
        assert!(apply_schedule_event(&mut state, &ev, &mut rng).is_err());
    }

    #[test]
    fn clipping_holds_for_huge_learning_rate() {
        let t = target_unitary_zzz(1.0);
        let cfg = TrainConfig {
            lr_discriminator: 1e3,
            ..short(8)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = TrainState::initialize(&cfg, &t, &mut rng).unwrap();
        let g: Vec<f64> = (0..state.phi.len()).map(|k| if k % 2 == 0 { 1.0 } else { -3.0 }).collect();
        state.optimizer_step(&g, Player::Discriminator).unwrap();
        assert!(state.phi.iter().all(|w| w.abs() <= 1.0));
    }
}
