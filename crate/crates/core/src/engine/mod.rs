mod intent;
mod outcome;
mod session;
mod transcript;

pub use intent::{parse_intent, Intent};
pub use outcome::SessionOutcome;
pub use session::{
    DisplayPayload, Engine, EngineConfig, EngineError, FactCard, FactEvent, FactFeedback,
    SearchResult, Session, SessionPhase, Speaker, StepCard, Turn,
};
pub use transcript::render_transcript;
