//! Deterministic scoring engine for the speech-based subtests of two
//! cognitive screening batteries, working from time-aligned transcripts
//! (manual, or recognizer output with ranked word alternatives), plus an
//! evaluation harness that measures agreement with reference scores under
//! varying recognition quality and a synthetic-corpus generator that
//! provides ground truth.

pub mod cerad;
pub mod error;
pub mod evaluation;
pub mod lexicon;
pub mod matching;
pub mod session;
pub mod skt;
pub mod synth;
pub mod transcript;

pub use error::{Error, Result};
