//! Holds no code; the acceptance runner lives in `tests/acceptance.rs`.
