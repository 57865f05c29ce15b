//! Build the JSON report of a command without going through the binary.

use suspension_escape::cli::{run_report, Command, Params, RunSpec};

fn main() {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let spec = RunSpec {
        command: Command::EscapeRate,
        params: Params {
            model: data.join("full2.json"),
            ceiling: Some(data.join("stepped.json")),
            hole: Some("00".into()),
            ..Default::default()
        },
    };
    match run_report(&spec) {
        Ok(r) => println!("{}", serde_json::to_string_pretty(&r.envelope).unwrap()),
        Err(e) => {
            eprintln!("{e:?}");
            std::process::exit(e.exit_code());
        }
    }
}
