//! The `.mdpw` text format and JSON rendering helpers.
//!
//! ```text
//! @initial s
//! @goal g
//! action s a 2      # state, label, integer weight
//! -> g 1/2
//! -> s 1/2
//! ```

mod json;
mod parse;
mod serialize;

use std::path::Path;

pub use json::{rational_json, SchedulerDoc};
pub use parse::{parse_mdp, parse_mdp_with, ParseError, ParseErrorKind, ParseOptions, SourceSpan};
pub use serialize::{serialize_mdp, structurally_equal};

use mdp_model::Mdp;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
}

pub fn load_mdp(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Mdp, LoadError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    parse_mdp_with(&text, opts).map_err(|source| LoadError::Parse { path: shown, source })
}
