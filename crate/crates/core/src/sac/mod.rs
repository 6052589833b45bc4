//! Soft actor-critic over the live streaming environment.

mod agent;
mod checkpoint;
mod env;
mod per;
mod policy;
mod sum_tree;
mod trainer;

pub use agent::{Learner, SacConfig, UpdateStats};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use env::{build_trace_pools, BanditEnv, EnvFactory, EnvStep, Environment, StreamingEnv};
pub use per::{PerBuffer, PerSample, Transition};
pub use policy::{
    critic_input, draw_noise, log_one_minus_tanh2, new_critic, softplus, Actor, ActorSample,
    SquashedSample, ACTION_DIM, LOG_STD_MAX, LOG_STD_MIN,
};
pub use sum_tree::SumTree;
pub use trainer::{
    episodes_to_threshold, train, train_from, write_training_log, EpisodeRecord,
    RewardStandardizer, TrainOutcome, TrainReport, TRAINING_LOG_COLUMNS,
};
