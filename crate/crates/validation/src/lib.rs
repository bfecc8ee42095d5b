//! Holds the workspace acceptance suite in `tests/acceptance.rs`. It lives in
//! its own package so that cargo runs it after every other test binary.
