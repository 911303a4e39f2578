pub mod error;
pub mod metric;
pub mod rational;
pub mod report;
pub mod group;
pub mod tree;
pub mod rotation;
pub mod oracle;
pub mod windmill;
pub mod cli;
