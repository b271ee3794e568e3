//! Adversarial training of a generator circuit against a Pauli-sum
//! discriminator on Choi states.

pub mod batch;
pub mod discriminator;
pub mod loss;
pub mod optim;
pub mod train;

pub use batch::{batch_experiment, batch_runs, config_hash, summarize, ExperimentSummary, RunDigest};
pub use discriminator::{build_discriminator, DiscriminatorSpec};
pub use loss::{
    grad_discriminator, grad_generator, grad_generator_adjoint, loss_value, AdversarialContext,
};
pub use optim::{Adam, AdamConfig, Direction};
pub use train::{
    apply_schedule_event, train_run, EventRecord, GeneratorConfig, Player, RunRecord,
    ScheduleEvent, ScheduledEvent, TrainConfig, TrainState,
};
