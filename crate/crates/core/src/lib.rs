//! Furniture layout synthesis with a PPO agent trained against six
//! interior-design guideline rewards.

pub mod baselines;
pub mod cli;
pub mod env;
pub mod geometry;
pub mod nn;
pub mod pathfind;
pub mod ppo;
pub mod render;
pub mod rewards;
pub mod scene;
