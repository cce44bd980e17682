pub mod autocov;
pub mod blocks;
pub mod error;
pub mod hdtest;
pub mod io;
pub mod linalg;
pub mod procsim;
pub mod stats;
pub mod study;
