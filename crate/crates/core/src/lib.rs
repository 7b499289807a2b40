//! Periodic orbits of the rotating n-body problem through a delay-equation
//! reduction, with computer-assisted proofs in weighted `l1` Fourier spaces.

pub mod choreography;
pub mod cli;
pub mod interval;
pub mod problem;
pub mod scalar;
pub mod seqspace;
pub mod solver;
pub mod validator;
