//! In-memory output files and RNG accounting for one run.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamUse {
    /// Label passed to the stream-id hash.
    pub label: String,
    /// Integer coordinates hashed after the label.
    pub key: String,
    /// Number of distinct (stream, substream) generators drawn from.
    pub generators: u64,
}

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub streams: Vec<StreamUse>,
}

impl Outputs {
    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I)
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: Display,
    {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("outputs are plain data");
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn stream(&mut self, label: &str, key: &str, generators: u64) {
        self.streams.push(StreamUse {
            label: label.to_string(),
            key: key.to_string(),
            generators,
        });
    }
}

/// Cell text for an f64: shortest representation that round-trips.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}
