//! Flat `key = value` config files.
//!
//! Layout, pore and acquisition configs are flat tables; any missing key
//! falls back to the type's default.

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub fn parse_kv<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_kv<T: serde::Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(e.to_string()))
}
