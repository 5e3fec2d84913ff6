//! Concrete state space models, data simulators, and exact oracles.
//!
//! Four model families back the experiment suite:
//!
//! - [`linear_gaussian`]: tractable end to end; the Kalman filter / RTS
//!   smoother here is the exactness oracle for everything else.
//! - [`rnn`]: a stochastic recurrent network state space model
//!   `X_k = tanh(W1 Y_{k-1} + W2 X_{k-1} + b + eta_k)`. The transition density
//!   exists in closed form through the tanh change of variables.
//! - [`sine`]: the diffusion `dX = sin(X - theta) dt + dW`, observed with
//!   Gaussian noise. No closed-form transition density; the model wires the
//!   positive GPE estimator, its draw bound (for accept-reject backward
//!   sampling), and the bridge-based score estimator.
//! - [`lotka_volterra`]: a bidimensional stochastic predator-prey diffusion
//!   observed through log-normal abundance indices. The drift is not of
//!   gradient form, so the model uses the signed parametrix estimator and
//!   exercises the Wald positivization path.
//!
//! [`oracles`] holds brute-force references (fine-Euler Monte Carlo
//! transition densities, dense joint-Gaussian conditioning) used only to
//! validate the fast paths; nothing in the library calls them.

pub mod error;
pub mod linear_gaussian;
pub mod lotka_volterra;
mod mvn;
pub mod oracles;
pub mod rnn;
pub mod sine;

pub use error::ModelError;
pub use linear_gaussian::{
    kalman_rts, lg_model, simulate_lg, KalmanRts, LgProposal, LgScalarFamily, LinearGaussianModel,
    LinearGaussianSpec,
};
pub use lotka_volterra::{
    lotka_volterra_model, lv_parametrix_config, simulate_lv, LotkaVolterraModel, LotkaVolterraSpec,
};
pub use rnn::{rnn_model, simulate_rnn_ssm, synthesize_rnn_spec, RnnModel, RnnSsmSpec};
pub use sine::{simulate_sine, sine_gpe_config, sine_model, SineFamily, SineModel, SineSpec};
