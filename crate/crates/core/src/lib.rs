//! Synthetic text augmentation by SMOTE-style interpolation in embedding space.
//!
//! Texts are encoded into fixed-dimension vectors, pairs of same-class vectors
//! are mixed with a coefficient drawn from `[0, 1]`, the mixed vector is passed
//! through a linear bridge into the decoder's input space and finally turned
//! back into text by a generation backend. An evaluation harness compares
//! classifiers trained on real data, real plus synthetic data, and synthetic
//! data alone.
//!
//! The modules mirror the stages of that workflow:
//!
//! * [`corpus`]: loading, cleaning, subsampling and splitting labeled text.
//! * [`embedding`]: encoder backends, vectors and the binary vector store.
//! * [`latent`]: same-class neighbor search, mixing and augmentation plans.
//! * [`bridge`]: the linear projector applied before decoding.
//! * [`decode`]: remote and mock text generation from projected vectors.
//! * [`evaluate`]: classifier heads, metrics and the three-condition runner.
//! * [`pipeline`]: configuration and the batch commands behind the CLI.

pub mod bridge;
pub mod corpus;
pub mod decode;
pub mod embedding;
pub mod error;
pub mod evaluate;
pub mod latent;
pub mod pipeline;

mod http;
pub mod rng;

pub use error::{Error, Result};
