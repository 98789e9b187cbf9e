#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wiretap-converse"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("SOURCE_DATE_EPOCH").output().expect("binary runs")
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

pub struct Csv {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn parse(text: &str) -> Csv {
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(m) => {
                    let (k, v) = m.split_once(": ").expect("key: value");
                    meta.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd.headers().unwrap().iter().map(str::to_string).collect();
        let rows = rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
        Csv { meta, header, rows }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn get(&self, row: usize, name: &str) -> &str {
        &self.rows[row][self.col(name)]
    }

    pub fn num(&self, row: usize, name: &str) -> f64 {
        self.get(row, name).parse().unwrap_or_else(|_| panic!("{name} = {:?}", self.get(row, name)))
    }

    pub fn meta(&self, key: &str) -> &str {
        &self.meta.iter().find(|(k, _)| k == key).expect("metadata key").1
    }

    /// Rows of the long wiretap table matching `section` and `quantity`.
    pub fn find(&self, section: &str, quantity: &str) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| self.get(r, "section") == section && self.get(r, "quantity") == quantity)
            .collect()
    }
}

pub fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

pub const CASCADE_KERNEL: &str = r#"{"y_size":2,"z_size":2,"rows":[[0.72,0.18,0.02,0.08],[0.08,0.02,0.18,0.72]]}"#;
