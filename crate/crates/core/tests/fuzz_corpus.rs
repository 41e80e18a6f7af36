//! Replays the checked-in fuzz seeds and a few generated inputs through the
//! parsers. Nothing here may panic; errors are fine.

use std::fs;
use std::path::{Path, PathBuf};

use fracdisc::config::{parse_config, parse_sweep};
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds_parse_without_panicking() {
    let paths = seeds("parse_config");
    assert!(!paths.is_empty());
    let mut accepted = 0;
    for path in paths {
        let text = fs::read_to_string(&path).unwrap();
        if let Ok(cfg) = parse_config(&text) {
            accepted += 1;
            assert!(!cfg.mode().columns().is_empty());
        }
    }
    assert!(accepted > 0);
}

#[test]
fn sweep_seeds_parse_without_panicking() {
    let paths = seeds("parse_sweep");
    assert!(!paths.is_empty());
    for path in paths {
        let _ = parse_sweep(&fs::read_to_string(&path).unwrap());
    }
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
        let _ = parse_sweep(&text);
    }

    #[test]
    fn mutated_seed_never_panics(
        cut in 0usize..400,
        insert in "[a-z_=.\\[\\]\"0-9 \n-]{0,20}",
    ) {
        let base = include_str!("../../../configs/example_loop.toml");
        let at = base.char_indices().map(|(i, _)| i).nth(cut).unwrap_or(base.len());
        let text = format!("{}{}{}", &base[..at], insert, &base[at..]);
        let _ = parse_config(&text);
    }

    #[test]
    fn sweep_like_strings_never_panic(s in "(sample_period|memory_length|k)?=?[-0-9.,eE+naif]{0,30}") {
        let _ = parse_sweep(&s);
    }
}
