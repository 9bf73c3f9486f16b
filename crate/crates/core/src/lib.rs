pub mod chart;
pub mod coincidence;
pub mod diameters;
pub mod generate;
pub mod geom;
pub mod index;
pub mod oracle;
pub mod report;
pub mod shape;
pub mod tracer;
