pub mod bath;
pub mod control;
pub mod dynamics;
pub mod gate;
pub mod metrics;
pub mod qops;
pub mod quadrature;
pub mod scenarios;
