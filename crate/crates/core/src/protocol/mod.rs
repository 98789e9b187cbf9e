//! Exact execution of toy wiretap codes with public feedback.
//!
//! Timeline for a code of blocklength `n`: the receiver sends `F_0 = f_0(U_y)`;
//! then for `t = 1..n` the sender transmits `X_t = e_t(M, U_x, F_0..F_{t-1})`,
//! the channel emits `(Y_t, Z_t) ~ W(.,.|X_t)`, and for `t < n` the receiver
//! sends `F_t = f_t(Y^t, U_y)`. Finally `M_hat = d(Y^n)`.

mod code;
mod converse;
mod enumerate;
mod exact;
mod monte_carlo;

pub use code::WiretapCode;
pub use converse::{validate_converse, ConverseValidation, ConverseValidator};
pub use enumerate::DeterministicCodeSpace;
pub use exact::{
    execute_exact, factorization_check, message_decoder_cmi, metrics, CodeMetrics, ComponentMap, ProtocolJoint,
};
pub use monte_carlo::{simulate, Estimate, MonteCarloResult};
