//! Intentionally empty: this crate exists to host criterion benches.
