//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler or static archive is around.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "fdm.h"

int main(void) {
    size_t caps[2] = {1, 1};
    FdmStream *s = NULL;
    if (fdm_stream_new(FDM_ALGORITHM_SFDM2, FDM_METRIC_EUCLIDEAN, caps, 2, 0.1, 1.0, 10.0, &s) != FDM_STATUS_OK)
        return 1;
    for (uint64_t i = 0; i < 10; i++) {
        double f[1] = {(double)i};
        if (fdm_stream_push(s, i, f, 1, (size_t)(i % 2)) != FDM_STATUS_OK)
            return 2;
    }
    uint64_t ids[2];
    size_t len = 0;
    double div = 0.0;
    if (fdm_stream_finalize(s, ids, 2, &len, &div) != FDM_STATUS_OK)
        return 3;
    fdm_stream_free(s);
    printf("%zu %g\n", len, div);
    return len == 2 ? 0 : 4;
}
"#;

fn target_dir() -> Option<PathBuf> {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    Some(exe.parent()?.parent()?.to_path_buf())
}

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .map(str::to_string)
}

#[test]
fn c_program_links_and_runs() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let Some(archive) = target_dir()
        .map(|d| d.join("libfdm_ffi.a"))
        .filter(|p| p.exists())
    else {
        eprintln!("skipping: static library not found");
        return;
    };
    let Some(cc) = compiler() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    let bin = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("2 "));
    let _ = std::fs::remove_dir_all(dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fdm-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
