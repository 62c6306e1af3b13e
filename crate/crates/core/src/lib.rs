pub mod error;
pub mod exterior;
pub mod feynman_kac;
pub mod gbc;
pub mod geometry;
pub mod quadrature;
pub mod stochastic;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/exterior.md")]
    mod exterior {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/integrands.md")]
    mod integrands {}
    #[doc = include_str!("../../../book/src/local_time.md")]
    mod local_time {}
    #[doc = include_str!("../../../book/src/feynman_kac.md")]
    mod feynman_kac {}
}
