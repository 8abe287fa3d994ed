//! Compiles a small C program against the generated header and static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include "cecbs.h"

int main(void) {
    const char *json =
        "{\"world\": {\"width\": 100, \"height\": 100},"
        " \"agents\": [{\"id\": 0, \"start\": [10, 10], \"goal\": [90, 90], \"radius\": 2, \"speed\": 1}],"
        " \"params\": {\"eta_max\": 1000, \"eta_min\": 200, \"step_size\": 5, \"goal_tolerance\": 2}}";
    CecbsScenario *s = NULL;
    if (cecbs_scenario_from_json(json, &s) != CECBS_STATUS_OK) return 10;
    CecbsSolution *sol = NULL;
    if (cecbs_solve(s, 3, &sol) != CECBS_STATUS_OK) { fprintf(stderr, "%s\n", cecbs_last_error()); return 11; }
    size_t n = 0;
    if (cecbs_solution_path(sol, 0, NULL, &n) != CECBS_STATUS_OK) return 12;
    double *xy = malloc(2 * n * sizeof(double));
    if (cecbs_solution_path(sol, 0, xy, &n) != CECBS_STATUS_OK) return 13;
    printf("%zu %.3f %.3f %.3f\n", n, cecbs_solution_soc(sol), xy[2 * n - 2], xy[2 * n - 1]);
    free(xy);
    if (cecbs_scenario_load("/nonexistent.json", &s) != CECBS_STATUS_IO || cecbs_last_error() == NULL) return 14;
    cecbs_solution_free(sol);
    cecbs_scenario_free(s);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libcecbs_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap_or_else(|e| panic!("C compiler `{cc}` unavailable: {e}"));
    assert!(status.success(), "C compile failed");

    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<f64> = line.split_whitespace().map(|f| f.parse().unwrap()).collect();
    assert!(fields[0] >= 2.0);
    assert!(fields[1] >= 80.0 * 2f64.sqrt() - 1e-6);
    assert!((fields[2] - 90.0).abs() < 2.5 && (fields[3] - 90.0).abs() < 2.5);
}
