fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("BGW_SKELETON_H".into()),
        cpp_compat: true,
        documentation: true,
        header: Some(
            "/* C interface to the bgw-skeleton branching-process toolkit.\n\
             * Generated by cbindgen; do not edit by hand. */"
                .into(),
        ),
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen header generation")
        .write_to_file(std::path::Path::new(&crate_dir).join("include/bgw_skeleton.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
}
