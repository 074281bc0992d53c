//! Live session server and subprocess agent bridge behind the `coopkitchen`
//! command.

pub mod agent;
pub mod server;
pub mod session;
