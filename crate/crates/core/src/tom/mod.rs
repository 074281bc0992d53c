//! The parameterized Theory-of-Mind agent: strategic task choice composed
//! with noisy, partner-aware motion choice.

mod agent;
mod params;

pub use agent::{infer_partner_task, tom_act, ToMState, STUCK_WINDOW, THINK_TICKS};
pub use params::{ParamError, ToMParams};
