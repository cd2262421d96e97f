pub mod evolution;
pub mod llm;
pub mod matrix;
pub mod orchestrator;
pub mod problems;
pub mod prompt;
pub mod sandbox;
pub mod seed;
