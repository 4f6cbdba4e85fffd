pub mod bridge;
pub mod cli;
pub mod cloud;
pub mod config;
pub mod density;
pub mod force;
pub mod geom;
pub mod oracle;
pub mod proxy;
pub mod session;
