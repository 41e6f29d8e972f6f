pub mod assignment;
pub mod enumeration;
pub mod error;
pub mod flow;
pub mod instances;
pub mod krein;
pub mod linalg;
pub mod runner;
pub mod schatten;
pub mod spectral;
