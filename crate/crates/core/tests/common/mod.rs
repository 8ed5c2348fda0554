pub mod oracles;
pub mod datasets;
pub mod criteria;
