//! Statistical checks: goodness-of-fit tests, exact enumerators used as
//! oracles, event frequencies, and the pass/fail report format.

pub mod enumerate;
pub mod events;
pub mod report;
pub mod stats;
pub mod suites;

pub use report::{CriterionResult, TestReport};
