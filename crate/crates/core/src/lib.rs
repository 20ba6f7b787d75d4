//! Hybrid multi-biometric fusion toolkit.
//!
//! Implements a verification pipeline that fuses two biometric modalities
//! at two levels:
//!
//! 1. **Score level** — each modality runs two matchers (Hamming/Jaccard
//!    on iris-style bit templates, Dice/Cosine on fingerprint-style
//!    descriptor matrices); their scores are combined per user with
//!    mean-closure weighting ([`score_fusion`]).
//! 2. **Decision level** — the fused modality scores induce basic belief
//!    assignments that are combined with Dempster's rule to a final
//!    accept/reject decision ([`ds_fusion`]).
//!
//! [`evaluation`] provides the comparison protocol and the verification
//! metrics (ROC/EER, GMR@FMR, decidability, HTER with confidence
//! intervals), [`datagen`] generates reproducible synthetic datasets, and
//! [`pipeline`] wires everything into a deterministic train/test run.

pub mod datagen;
pub mod ds_fusion;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod score_fusion;
pub mod scores;
pub mod similarity;
pub mod template;

pub use error::{Error, Result};
