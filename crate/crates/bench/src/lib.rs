pub mod config;
pub mod experiment;
pub mod problems;
pub mod props;
pub mod table1;
