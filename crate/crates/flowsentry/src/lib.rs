//! Flow-record intrusion detection toolkit: CSV ingestion, preprocessing,
//! a from-scratch neural kernel with eight optimizers, model training with
//! k-fold validation and an optimizer/activation grid, and ROC/confusion
//! evaluation with serialized report bundles.

pub mod evaluation;
pub mod flowdata;
pub mod modeling;
pub mod neuralcore;
pub mod optimizers;
pub mod preprocess;
pub mod seeds;
pub mod synth;
