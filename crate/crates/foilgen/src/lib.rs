//! Airfoil shape generation with conditional adversarial models.
//!
//! `foilgen` builds a labeled dataset of NACA 4-digit airfoils (each shape
//! discretized into 248 surface points and labeled with its lift coefficient
//! from an inviscid panel solver), trains conditional GAN and conditional
//! WGAN-gp generators on the continuous lift-coefficient label, and evaluates
//! generated shapes for smoothness (solver convergence), label fidelity (MSE)
//! and diversity (mu).
//!
//! The pipeline stages map onto the top-level modules:
//!
//! * [`geometry`] — NACA 4-digit surface construction and contour validation
//! * [`aero`] — lift-coefficient computation (internal panel method, optional
//!   external XFoil adapter)
//! * [`dataset`] — corpus enumeration, filtering and persistence
//! * [`nets`] — generator / critic multilayer perceptrons with exact
//!   gradients, including input gradients
//! * [`training`] — cGAN and cWGAN-gp losses, gradient penalty, Adam, and the
//!   adversarial training loop
//! * [`evaluation`] — the label sweep protocol and its report files
//!
//! Everything is seeded and deterministic: identical inputs and seeds produce
//! byte-identical artifacts on the same build.

pub mod aero;
pub mod config;
pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod nets;
pub mod seed;
pub mod training;

// The user guide in book/ doubles as a test suite: every Rust snippet in the
// chapters compiles and runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(geometry, "../../../book/src/geometry.md");
    chapter!(panel_method, "../../../book/src/panel-method.md");
    chapter!(dataset, "../../../book/src/dataset.md");
    chapter!(networks, "../../../book/src/networks.md");
    chapter!(losses, "../../../book/src/losses.md");
    chapter!(training, "../../../book/src/training.md");
    chapter!(evaluation, "../../../book/src/evaluation.md");
    chapter!(cli, "../../../book/src/cli.md");
}
