//! Compiles a C program against the generated header and the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/c_client-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_plans() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let libdir = artifact_dir();
    assert!(libdir.join("liborbitope_mpc_ffi.so").exists(), "shared library not built in {}", libdir.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("client");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c11", "-Wall", "-Wextra", "-Werror"])
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/client.c"))
        .arg("-o")
        .arg(&exe)
        .arg(format!("-L{}", libdir.display()))
        .arg("-lorbitope_mpc_ffi")
        .arg(format!("-Wl,-rpath,{}", libdir.display()))
        .arg("-lm")
        .status()
        .expect("C compiler available");
    assert!(status.success());

    let out = Command::new(&exe)
        .arg(manifest.join("../core/scenarios/dubins.toml"))
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("rows 21\n"), "{stdout}");
    assert!(stdout.contains("end 5.000000 10.000000\n"), "{stdout}");
    // the zero matrix has no unique nearest rotation
    assert!(stdout.contains("zero 0 1.414214 0\n"), "{stdout}");
    assert!(stdout.contains("bad 4\n"), "{stdout}");
}
