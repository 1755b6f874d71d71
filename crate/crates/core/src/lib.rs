pub mod chem;
pub mod featurize;
pub mod datasplit;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod sar;
pub mod report;
pub mod synth;
