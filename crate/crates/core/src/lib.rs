//! Quantum Harmonic Sieve lab: Boolean-function utilities, a statevector
//! simulator for the Goldreich–Levin circuit, weak parity learners, SmoothBoost
//! and the end-to-end learner.

pub mod boolean_fn;
pub mod quantum_sim;
pub mod seeding;
pub mod weak_parity;
pub mod boosting;
pub mod qhs;
pub mod verify;
