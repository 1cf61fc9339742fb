//! Walk-forward validation engine for interpretable, hypothesis-driven
//! trading strategies on daily OHLCV panels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod config;
pub mod execution;
pub mod features;
pub mod hypothesis;
pub mod marketdata;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod stats;
pub mod walkforward;
