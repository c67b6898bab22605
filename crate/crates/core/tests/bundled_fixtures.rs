//! The design files shipped in `fixtures/` and the pinned bookshelf plan.
//!
//! Set `OFFCUT_BLESS=1` to rewrite the pinned files after an intended change.

use std::path::PathBuf;

use offcut_core::design::DesignEvaluator;
use offcut_core::fixtures::{bookshelf, coffee_table, DesignFixture};
use offcut_core::io::{dock_document, load_design, save_design, DesignDocument};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn blessing() -> bool {
    std::env::var_os("OFFCUT_BLESS").is_some()
}

fn check_pinned(name: &str, bytes: &[u8]) {
    let path = fixture_dir().join(name);
    if blessing() {
        std::fs::write(&path, bytes).unwrap();
    }
    let pinned = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(pinned == bytes, "{name} differs from the pinned file");
}

fn bundled() -> Vec<(&'static str, DesignDocument, DesignFixture)> {
    let table = coffee_table();
    let shelf = bookshelf();
    vec![
        ("coffee-table.design.json", DesignDocument::from_problem("coffee table", 12.0, &table.problem, &table.x), table),
        ("bookshelf.design.json", DesignDocument::from_problem("bookshelf", 18.0, &shelf.problem, &shelf.x), shelf),
    ]
}

#[test]
fn code_fixtures_start_feasible() {
    for (name, _, f) in bundled() {
        let r = f.problem.system.residual_norm(&f.x);
        assert!(r < 1e-9, "{name}: residual {r}");
        assert!(f.problem.system.min_length_violations(&f.x).is_empty(), "{name}");
        assert!(f.problem.design.evaluate(&f.x).is_ok());
    }
}

#[test]
fn bundled_files_match_the_code_fixtures() {
    for (name, doc, f) in bundled() {
        check_pinned(name, &save_design(&doc));
        let bytes = std::fs::read(fixture_dir().join(name)).unwrap();
        let loaded = load_design(&bytes).unwrap();
        assert_eq!(loaded, doc, "{name}");
        assert_eq!(save_design(&loaded), bytes, "{name} is not in canonical form");
        let (problem, x) = loaded.to_problem().unwrap();
        assert_eq!(x, f.x);
        assert_eq!(problem.system, f.problem.system);
        assert_eq!(problem.boards, f.problem.boards);
    }
}

#[test]
fn bookshelf_plan_is_pinned() {
    let f = bookshelf();
    let res = 1.0;
    let docked = dock_document(&f.problem, &f.x, res).unwrap();
    assert_eq!(docked.layout.placements().count(), 5);
    let svgs = docked.svgs(&f.problem, res);
    assert_eq!(svgs.len(), 1);
    check_pinned("bookshelf.plan.svg", svgs[0].as_bytes());
    assert_eq!(docked.svgs(&f.problem, res), svgs);
}
