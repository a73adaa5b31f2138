//! Compiles and runs a small C program against the generated header and
//! the staticlib, proving the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "bgw_skeleton.h"

int main(void) {
    bgwsk_model *model = NULL;
    bgwsk_status status = bgwsk_model_from_json(
        "{ \"pmf\": [0.5, 0.0, 0.5], \"marking\": { \"kind\": \"constant\", \"value\": 0.02 } }",
        &model);
    if (status != BGWSK_OK) { fprintf(stderr, "parse: %s\n", bgwsk_status_message(status)); return 1; }

    double q = 0.0;
    status = bgwsk_model_survival(model, true, &q);
    if (status != BGWSK_OK) return 2;
    if (fabs(q - 0.18265049736869809) > 1e-10) return 3;

    bgwsk_regime_report report;
    status = bgwsk_model_regime(model, 0.0, &report);
    if (status != BGWSK_OK) return 4;
    if (report.regime != 1 || fabs(report.lambda - 0.5) > 1e-12) return 5;

    bgwsk_escape_law *law = NULL;
    if (bgwsk_escape_law_new(0.5, 1.0, &law) != BGWSK_OK) return 6;
    double tail = 0.0;
    if (bgwsk_escape_tail(law, 0.0, &tail) != BGWSK_OK || tail != 1.0) return 7;
    if (fabs(bgwsk_escape_mode(law) - 0.46209812037329684) > 1e-12) return 8;

    double w[3];
    if (bgwsk_leaf_count_pmf(w, 3) != BGWSK_OK) return 9;
    if (fabs(w[0] - 0.5) > 1e-15 || fabs(w[1] - 0.125) > 1e-15) return 10;

    bgwsk_escape_law_free(law);
    bgwsk_model_free(model);
    printf("q=%.12f lambda=%.4f\n", q, report.lambda);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(
        include_dir.join("bgw_skeleton.h").exists(),
        "header was not generated"
    );
    // the staticlib lands in target/<profile> for plain builds and in
    // target/<profile>/deps during test builds
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let target = manifest.join("../../target").join(profile);
    let lib_dir = [target.clone(), target.join("deps")]
        .into_iter()
        .find(|d| d.join("libbgw_skeleton_ffi.a").exists())
        .unwrap_or_else(|| panic!("staticlib missing under {}", target.display()));

    let work = tempdir();
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let compile = Command::new("cc")
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg(format!("-I{}", include_dir.display()))
        .arg(format!("-L{}", lib_dir.display()))
        .args(["-lbgw_skeleton_ffi", "-lpthread", "-ldl", "-lm"])
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&bin).output().expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke binary exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(out.contains("q=0.1826504973"), "{out}");
    std::fs::remove_dir_all(&work).ok();
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bgwsk-c-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
