//! Ergodic sums of irrational circle rotations and their limit laws.
//!
//! The crate is organised bottom-up:
//!
//! * [`arithmetic`]: continued fractions, named rotation numbers, the Lévy constant.
//! * [`dynamics`]: the rotation, the sawtooth and indicator observables, exact ergodic sums.
//! * [`distributions`]: Cauchy and q-Gaussian laws, KS distance, moments, histograms, fits.
//! * [`experiments`]: seeded Monte Carlo drivers for the spatial, temporal and annealed statistics.
//! * [`kesten`]: Kesten's scale constant from the Lévy constant and a Fourier double integral.

pub mod arithmetic;
pub mod dynamics;
pub mod distributions;
pub mod experiments;
pub mod kesten;
pub mod seeding;
