pub mod catalog;
pub mod cli;
pub mod cstar;
pub mod numerics;
pub mod report;
pub mod sequences;
pub mod tensor_norms;
