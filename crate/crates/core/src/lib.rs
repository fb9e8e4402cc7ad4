pub mod sim;
pub mod llm;
pub mod prompts;
pub mod summarizer;
pub mod keyframe;
pub mod reflection;
pub mod agent;
pub mod harness;
pub mod policies;
