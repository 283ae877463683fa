pub mod layout;
pub mod dsl;
pub mod llm;
pub mod store;
pub mod prompt;
pub mod agents;
pub mod synthetic;
pub mod metrics;
pub mod render;
pub mod workbench;
