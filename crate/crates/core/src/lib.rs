pub mod charge_flow;
pub mod error;
pub mod exec;
pub mod formulation;
pub mod fsutil;
pub mod instance_file;
pub mod model;
pub mod mps;
pub mod network;
pub mod render;
pub mod solver;
pub mod scenario;
pub mod solution;
