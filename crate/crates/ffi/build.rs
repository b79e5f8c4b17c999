use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation");
    let header = crate_dir.join("include").join("randwalk.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();
    // Rewrites only on change so the header's mtime does not trigger rebuilds.
    bindings.write_to_file(header);
}
