use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let out_header = PathBuf::from(env::var("OUT_DIR").unwrap()).join("filippov_boost.h");
    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).unwrap())
        .generate()
        .expect("cbindgen header generation failed");
    bindings.write_to_file(&out_header);
    // Keep a copy in the source tree so C consumers can include it without
    // digging through the target directory.
    let committed = crate_dir.join("include").join("filippov_boost.h");
    std::fs::create_dir_all(committed.parent().unwrap()).unwrap();
    bindings.write_to_file(&committed);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
