pub mod catalog;
pub mod dataset;
pub mod domain;
pub mod engine;
pub mod harness;
pub mod metrics;
pub mod prompts;
pub mod simulator;
pub mod util;
