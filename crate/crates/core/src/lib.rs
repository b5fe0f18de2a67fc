pub mod broker;
pub mod genbench;
pub mod policy;
pub mod reasoner;
pub mod samples;
pub mod splog;
pub mod vocab;
