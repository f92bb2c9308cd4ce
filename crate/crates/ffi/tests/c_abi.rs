//! Compiles and runs a C consumer against the generated header and the
//! static library, proving the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "photonic_rnn.h"

int main(void) {
    if (strlen(prnn_version()) == 0) return 10;

    PrnnSeries *series = NULL;
    if (prnn_mg_generate(0.2, 0.1, 10.0, 17.0, 0.1, 1.2, 60, 200, &series) != PRNN_STATUS_OK) {
        fprintf(stderr, "generate: %s\n", prnn_last_error());
        return 11;
    }
    size_t len = 0;
    if (prnn_series_len(series, &len) != PRNN_STATUS_OK || len != 60) return 12;
    double values[60];
    if (prnn_series_copy(series, values, 60) != PRNN_STATUS_OK) return 13;
    for (size_t i = 0; i < 60; i++) {
        if (!(values[i] > 0.0 && values[i] < 2.0)) return 14;
    }
    prnn_series_free(series);

    if (prnn_mg_generate(0.2, 0.1, 10.0, 17.0, 0.1, 1.2, 60, 200, NULL)
            != PRNN_STATUS_NULL_ARGUMENT) return 15;
    if (strlen(prnn_last_error()) == 0) return 16;

    PrnnCoupling *coupling = NULL;
    if (prnn_coupling_synthetic(4, 1, 0.5, 3, &coupling) != PRNN_STATUS_OK) return 17;
    size_t nodes = 0;
    if (prnn_coupling_n_nodes(coupling, &nodes) != PRNN_STATUS_OK || nodes != 16) return 18;
    double w = -1.0;
    if (prnn_coupling_entry(coupling, 5, 5, &w) != PRNN_STATUS_OK || w <= 0.0) return 19;
    prnn_coupling_free(coupling);

    const char *config =
        "[dataset]\n"
        "train_len = 40\n"
        "discard = 5\n"
        "test_len = 40\n"
        "[topology]\n"
        "grid_side = 4\n"
        "[learner]\n"
        "max_iterations = 80\n";
    PrnnRunSummary summary;
    memset(&summary, 0, sizeof summary);
    if (prnn_train_from_config(config, NULL, &summary) != PRNN_STATUS_OK) {
        fprintf(stderr, "train: %s\n", prnn_last_error());
        return 20;
    }
    if (summary.n_nodes != 16) return 21;
    if (!(summary.epsilon_train > 0.0 && summary.epsilon_train <= summary.epsilon_initial))
        return 22;
    if (strlen(summary.config_hash) != 16) return 23;

    printf("ok\n");
    return 0;
}
"#;

/// target/debug directory, derived from this test binary's location
/// (target/debug/deps/...).
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test binary path");
    exe.parent().and_then(|d| d.parent()).expect("target profile dir").to_path_buf()
}

#[test]
fn c_consumer_compiles_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(
        include_dir.join("photonic_rnn.h").is_file(),
        "header not generated at {}",
        include_dir.display()
    );
    let static_lib = lib_dir().join("libphotonic_rnn_ffi.a");
    assert!(static_lib.is_file(), "static library not built at {}", static_lib.display());

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("consumer.c");
    let binary = dir.path().join("consumer");
    std::fs::write(&source, C_PROGRAM).unwrap();

    let compile = Command::new("gcc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Wextra")
        .arg("-Werror")
        .arg("-I")
        .arg(&include_dir)
        .arg(&source)
        .arg(&static_lib)
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-lm")
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("gcc is available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("consumer runs");
    assert!(
        run.status.success(),
        "consumer exited with {:?}:\n{}{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
