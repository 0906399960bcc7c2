//! Shared oracles, generators and property bodies for the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

pub mod gen;
pub mod oracles;
pub mod pipe;
pub mod props;

use proptest::test_runner::{Config, RngAlgorithm, RngSeed};

/// Seeded proptest configuration with `cases` cases and no failure files.
pub fn seeded(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_algorithm: RngAlgorithm::ChaCha,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub mod cli {
    use std::collections::BTreeMap;
    use std::path::Path;
    use std::process::{Command, Output};

    pub fn csfdyn(args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_csfdyn"))
            .args(args)
            .output()
            .expect("binary runs")
    }

    pub fn ok(args: &[&str]) -> Output {
        let out = csfdyn(args);
        assert!(
            out.status.success(),
            "csfdyn {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }

    /// Relative path to bytes of every file under `dir`.
    pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in std::fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                    out.insert(rel, std::fs::read(&p).unwrap());
                }
            }
        }
        out
    }

    /// Parse as XML and check the SVG root.
    pub fn check_svg(text: &str) -> Result<(), String> {
        let doc = roxmltree::Document::parse(text).map_err(|e| e.to_string())?;
        let root = doc.root_element();
        if root.tag_name().name() != "svg" || root.tag_name().namespace() != Some("http://www.w3.org/2000/svg") {
            return Err(format!("root element is {:?}", root.tag_name()));
        }
        if root.attribute("version") != Some("1.1") {
            return Err("missing version=\"1.1\"".into());
        }
        Ok(())
    }

    pub fn p(path: &Path) -> &str {
        path.to_str().unwrap()
    }
}
