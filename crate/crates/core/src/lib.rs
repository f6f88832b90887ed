//! Simulation and verification toolkit for one-dimensional partially dissipative
//! hyperbolic systems `U_t + A U_x = -B U` and two nonlinear relatives (damped Euler,
//! nonlinearly damped p-system).

pub mod analysis;
pub mod corrector;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod solvers;
