pub mod error;
pub mod exact;
pub mod forms;
pub mod gauss_weyl;
pub mod kloosterman;
pub mod maass;
pub mod ntcore;
pub mod num;
pub mod qseries;
pub mod report;
pub mod special;
pub mod suites;

pub use error::{Error, Result};
