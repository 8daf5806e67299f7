pub mod augment;
pub mod confidence;
pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod imaging;
pub mod mask;
pub mod mrmser;
pub mod mser;
pub mod pipeline;
pub mod roughset;
pub mod synth;

pub use error::{Error, Result};

// Compile and run the guide's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/images.md")]
    mod images {}
    #[doc = include_str!("../../../book/src/mser.md")]
    mod mser {}
    #[doc = include_str!("../../../book/src/multiresolution.md")]
    mod multiresolution {}
    #[doc = include_str!("../../../book/src/rough-sets.md")]
    mod rough_sets {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    mod augmentation {}
    #[doc = include_str!("../../../book/src/confidence.md")]
    mod confidence {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
