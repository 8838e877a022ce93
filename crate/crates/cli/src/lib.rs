//! Experiment runner for the predictor-antenna link model.
//!
//! Each subcommand resolves a [`config::ScenarioConfig`], runs one or more
//! experiments from [`experiments`] and writes CSV tables plus a
//! `manifest.json` into the output directory.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod record;
