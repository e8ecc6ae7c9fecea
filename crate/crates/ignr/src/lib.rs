//! Resolution-free graphon models learned from unaligned graph sets.
//!
//! A graphon — a symmetric function `W: [0,1]^2 -> [0,1]` — generates
//! unweighted graphs of any size. This crate learns graphons from observed
//! graphs by representing `W` directly as a sine-activated coordinate
//! network and minimizing the squared Gromov-Wasserstein distance between
//! the network (sampled on a regular grid) and each input graph. Because
//! the representation is a function rather than a fixed-resolution matrix,
//! the learned model can be re-sampled at any resolution and used to
//! generate graphs of sizes never seen during training.
//!
//! Two objectives are covered:
//!
//! * single-graphon learning — one network fit to a set of graphs drawn
//!   from one unknown graphon;
//! * families of graphons — an autoencoder whose GIN encoder maps a graph
//!   to a latent code and whose modulated-sine decoder maps (code,
//!   coordinates) to edge probabilities.
//!
//! The [`graphon`] module holds closed-form ground truths and samplers,
//! [`gw`] the distance and its two solvers, [`nn`] the networks with
//! analytic backward passes, [`train`] the alternating optimization loops,
//! [`eval`] the estimation-error protocols, and [`cli`] the `graphon-ignr`
//! command line.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graphon;
pub mod gw;
pub mod nn;
pub mod train;

pub use error::{Error, Result};

// Keep the guide's code blocks compiling against the current API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(unused)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(graphons, "../../../book/src/graphons.md");
    chapter!(gromov_wasserstein, "../../../book/src/gromov-wasserstein.md");
    chapter!(networks, "../../../book/src/networks.md");
    chapter!(training, "../../../book/src/training.md");
    chapter!(evaluation, "../../../book/src/evaluation.md");
    chapter!(cli_chapter, "../../../book/src/cli.md");
}
