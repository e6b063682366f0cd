//! Plain-text transcript rendering, stable enough for golden files.

use std::fmt::Write;

use super::session::{Session, Speaker};

/// One line per turn; assistant lines carry the phase and fact attribution.
pub fn render_transcript(session: &Session) -> String {
    let mut out = String::new();
    for t in &session.turn_log {
        match t.speaker {
            Speaker::User => {
                writeln!(out, "U{}: {}", t.index / 2 + 1, t.text).unwrap();
            }
            Speaker::Assistant => {
                write!(out, "A{}: {}", t.index / 2 + 1, t.text).unwrap();
                if let Some(phase) = t.phase {
                    write!(out, " [{phase}]").unwrap();
                }
                if let Some(card) = t.display_payload.as_ref().and_then(|d| d.fact_card.as_ref()) {
                    write!(out, " <fact {} via {} {}>", card.fact_id, card.provider, card.source_url).unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}
