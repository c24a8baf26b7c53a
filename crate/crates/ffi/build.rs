//! Generate the C header from the extern "C" surface.
//!
//! The header is written to `OUT_DIR` (authoritative for the build) and
//! mirrored into `include/quickspoof.h` so consumers browsing the source
//! tree get a current copy without running the build.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let out_dir = PathBuf::from(env::var("OUT_DIR").unwrap());

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let bindings = cbindgen::generate(&crate_dir)
        .expect("cbindgen failed to generate the C header");
    bindings.write_to_file(out_dir.join("quickspoof.h"));

    // Best effort: source checkouts can be read-only (e.g. vendored builds).
    let _ = std::fs::create_dir_all(crate_dir.join("include"));
    bindings.write_to_file(crate_dir.join("include").join("quickspoof.h"));
}
