//! Growth-optimal trading under proportional transaction costs in the
//! Black–Scholes model, built on an explicit shadow price.
//!
//! * [`model`] validates `(mu, sigma, lambda)` and classifies the Merton
//!   proportion `theta = mu / sigma^2`.
//! * [`solver`] solves the scalar free-boundary equation for `c` and `s_bar`.
//! * [`shadow`] evaluates the closed-form shadow transform `g`.
//! * [`growth`] gives the optimal growth rate in closed form and by quadrature
//!   against the stationary law of the reflected ratio.
//! * [`series`] and [`asymptotics`] expand everything in powers of
//!   `lambda^{1/3}`.
//! * [`simulate`] runs Monte Carlo paths of the reflected price, shadow price
//!   and optimal portfolio.
//! * [`cli`] is the command-line front end.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod growth;
pub mod model;
pub mod quadrature;
pub mod roots;
pub mod series;
pub mod shadow;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
pub use model::{validate_params, MarketParams, Regime};
pub use shadow::ShadowTransform;
pub use solver::{admissibility_margin, friction_gap, s_bar_of_c, solve, solve_c, FrictionSolution};
