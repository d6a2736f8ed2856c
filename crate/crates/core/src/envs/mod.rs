//! Environment construction and model file formats.
