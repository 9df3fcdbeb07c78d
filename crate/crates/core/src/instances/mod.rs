//! Concrete telescope constructors and the line-based spec-file format.
//!
//! Spec files are `key = value` lines with `#` comments:
//!
//! ```text
//! kind = alt        # alt | el | psl | embed
//! d = 5
//! r = 2
//! max_level = 6
//! ```
//!
//! `el`/`psl` take `d`, `q`, `max_level`; `embed` takes `group` (a built-in
//! name `alt5`, `alt6`, `sl2_5`, or a file of permutation generators,
//! resolved by the caller) and `max_level`.

mod alt;
mod controls;
mod el;
mod embed;

pub use alt::{alt_support, build_alt, AltSupportDescriptor, AltTelescopeParams};
pub use controls::{build_alt_phi_corrupted, build_nonflexible_toy};
pub use el::{
    build_el, build_psl, el_support, quotient, scalar_count, ElSupportDescriptor, NormalFamily,
};
pub use embed::{
    build_embed, builtin_group, EmbedBuild, EmbedTelescopeParams, FiniteGroup, L_ALPHA, L_DELTA,
    L_EPS, L_O, L_Y, L_Z,
};

use crate::telescope::Telescope;
use crate::{Error, Result};

/// Outcome of parsing a spec file: either a ready instance, or an embedding
/// spec that needs its generator file resolved by the caller.
pub enum ParsedSpec {
    Ready(Telescope),
    Embed(EmbedBuild),
    NeedsGroupFile { path: String, max_level: usize },
}

pub fn parse_spec_text(text: &str) -> Result<ParsedSpec> {
    let mut kind = None;
    let mut d = None;
    let mut r = None;
    let mut q = None;
    let mut max_level = None;
    let mut group = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            pos: lineno + 1,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim();
        let value = value.trim().to_string();
        let parse_num = |v: &str| -> Result<u32> {
            v.parse().map_err(|_| Error::Parse {
                pos: lineno + 1,
                msg: format!("bad number {v:?} for key {key}"),
            })
        };
        match key {
            "kind" => kind = Some(value),
            "d" => d = Some(parse_num(&value)?),
            "r" => r = Some(parse_num(&value)?),
            "q" => q = Some(parse_num(&value)? as u16),
            "max_level" => max_level = Some(parse_num(&value)? as usize),
            "group" => group = Some(value),
            other => {
                return Err(Error::Parse {
                    pos: lineno + 1,
                    msg: format!("unknown key {other:?}"),
                })
            }
        }
    }
    let kind = kind.ok_or(Error::Parse {
        pos: 0,
        msg: "missing key `kind`".into(),
    })?;
    let missing = |k: &str| Error::Parse {
        pos: 0,
        msg: format!("missing key `{k}` for kind {kind}"),
    };
    match kind.as_str() {
        "alt" => {
            let params = AltTelescopeParams {
                d: d.ok_or_else(|| missing("d"))?,
                r: r.ok_or_else(|| missing("r"))?,
                max_level: max_level.unwrap_or(6),
            };
            Ok(ParsedSpec::Ready(build_alt(params)?))
        }
        "el" => Ok(ParsedSpec::Ready(build_el(
            d.ok_or_else(|| missing("d"))?,
            q.ok_or_else(|| missing("q"))?,
            max_level.unwrap_or(4),
        )?)),
        "psl" => Ok(ParsedSpec::Ready(build_psl(
            d.ok_or_else(|| missing("d"))?,
            q.ok_or_else(|| missing("q"))?,
            max_level.unwrap_or(4),
        )?)),
        "embed" => {
            let group = group.ok_or_else(|| missing("group"))?;
            let max_level = max_level.unwrap_or(3);
            match builtin_group(&group) {
                Ok(g) => Ok(ParsedSpec::Embed(build_embed(
                    g,
                    EmbedTelescopeParams { max_level },
                )?)),
                Err(_) => Ok(ParsedSpec::NeedsGroupFile {
                    path: group,
                    max_level,
                }),
            }
        }
        other => Err(Error::Parse {
            pos: 0,
            msg: format!("unknown kind {other:?}"),
        }),
    }
}
