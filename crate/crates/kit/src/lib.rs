pub mod bench;
pub mod compat;
pub mod conditions;
pub mod cylinder;
pub mod dft;
pub mod expr;
pub mod grid;
pub mod io;
pub mod problem;
pub mod quotient;
pub mod report;
pub mod run;
pub mod traces;
