//! Computational toolkit for telescopes of groups.
//!
//! A telescope is a directed system of groups `Ω_1 → Ω_2 → …` together with
//! homomorphisms `φ_i : B → Ω_i` whose images commute across levels yet
//! normally generate each level. This crate builds concrete telescopes of
//! alternating groups, special linear groups over small finite fields, their
//! projective quotients, and embedding telescopes for finite perfect groups.
//! On top of that it provides lazy elements of the infinite product, exact
//! axiom/flexibility verifiers, two-generator constructions, weak and head
//! normal forms, consistency volumes, and actions on limit spaces.

pub mod action;
pub mod alphabet;
pub mod expr;
pub mod instances;
pub mod linfq;
pub mod normalform;
pub mod permgrp;
pub mod telescope;
pub mod verify;

pub(crate) mod util;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("letter {letter} out of range for alphabet of size {size}")]
    LetterOutOfRange { letter: u32, size: u32 },
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("field mismatch: F{left} vs F{right}")]
    FieldMismatch { left: u16, right: u16 },
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("unsupported field size q = {0}")]
    UnsupportedField(u16),
    #[error("matrix is singular")]
    Singular,
    #[error("row and column index coincide: {0}")]
    SamePosition(usize),
    #[error("index constraint violated: {0}")]
    IndexConstraint(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),
    #[error("level budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("engine mismatch: expected {expected}, found {found}")]
    EngineMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("group is not perfect")]
    NotPerfect,
    #[error("insufficient prefix: need {need} known letters, have {have}")]
    InsufficientPrefix { need: usize, have: usize },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
