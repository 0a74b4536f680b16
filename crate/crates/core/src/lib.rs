pub mod catalog;
pub mod cli;
pub mod engine;
pub mod explain;
pub mod factors;
pub mod intake;
pub mod recommend;
pub mod risk;
pub mod service;
pub mod verification;
