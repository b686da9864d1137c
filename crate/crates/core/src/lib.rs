pub mod analyzer;
pub mod global;
pub mod pred;
pub mod reader;
pub mod report;
pub mod specdb;
pub mod typedom;
