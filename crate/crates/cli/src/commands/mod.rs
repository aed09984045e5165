pub mod aggregate;
pub mod compare;
pub mod eval;
pub mod gen;
pub mod selftest;
pub mod solve;
pub mod train;
