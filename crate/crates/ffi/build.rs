fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(cbindgen::Config {
            language: cbindgen::Language::C,
            cpp_compat: true,
            include_guard: Some("FMHSDM_H".into()),
            documentation: true,
            documentation_style: cbindgen::DocumentationStyle::C,
            enumeration: cbindgen::EnumConfig {
                prefix_with_name: false,
                ..Default::default()
            },
            ..Default::default()
        })
        .generate()
        .expect("unable to generate C bindings")
        .write_to_file(format!("{crate_dir}/include/fmhsdm.h"));
}
