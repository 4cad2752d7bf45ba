pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod quantity;

/// Built-in two-field scenario used by `neqdeco fig2` without `--config`.
pub const FIG2: &str = include_str!("../../../scenarios/fig2.toml");
