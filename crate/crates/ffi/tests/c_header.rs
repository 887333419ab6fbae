use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include "groupoid_deconv.h"
#include <stdio.h>

int run(const char *instance_json, const char *config_json) {
    GdInstance *g = NULL;
    GdFactorization *r = NULL;
    GdGridFn *psi = NULL;
    size_t pairs = 0, ndim = 0, n0 = 0, n1 = 0;
    double residual = 0.0, x0 = 0.0, dx = 0.0, buf[4];
    bool hold = false;
    char *manifest = NULL;
    if (gd_instance_from_json(instance_json, &g) != GD_STATUS_OK) {
        fprintf(stderr, "%s\n", gd_last_error_message());
        return 1;
    }
    GdStatus s = gd_factorize(g, config_json, &r);
    if (s == GD_STATUS_OK) {
        gd_factorization_summary(r, &pairs, &residual, &hold);
        gd_factorization_get(r, GD_FACTOR_PSI, 0, &psi);
        gd_gridfn_shape(psi, &ndim, &n0, &n1);
        gd_gridfn_axis(psi, 0, &x0, &dx);
        gd_gridfn_copy_samples(psi, buf, 4);
        gd_factorization_manifest_json(r, 1e-4, &manifest);
        gd_string_free(manifest);
        gd_gridfn_free(psi);
        gd_factorization_free(r);
    }
    double exact = 0.0, cutoff = 0.0;
    gd_ck_weak_residual(0u, 0.5, 1.5, 1e-3, &residual);
    gd_dm_weak_residual((size_t)2, 1.0, 1e-3, &exact, &cutoff);
    gd_run_config_json("{}", &hold);
    gd_instance_free(g);
    printf("%s\n", gd_version());
    return s == GD_STATUS_OK ? 0 : (int)s;
}
"#;

fn compile(compiler: &str, lang: &str, std: &str) {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join(if lang == "c" { "use.c" } else { "use.cpp" });
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(compiler)
        .args(["-x", lang, std, "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output();
    match out {
        Ok(o) => assert!(o.status.success(), "{compiler} {lang}: {}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping {compiler}: {e}"),
    }
}

#[test]
fn header_compiles_as_c() {
    compile("cc", "c", "-std=c99");
}

#[test]
fn header_compiles_as_cpp() {
    compile("c++", "c++", "-std=c++11");
}
