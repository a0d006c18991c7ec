//! Scenario runs from a TOML configuration, the same path the command-line
//! tool takes.

use efres::config::RunConfig;

fn main() {
    let dir = std::env::temp_dir().join("efres_batch");
    let cfg = r#"
[run]
format = "csv+svg"

[spectrum]
method = "numeric"

[calibrate]
"#;
    let path = dir.join("run.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&path, cfg).unwrap();
    let parsed = RunConfig::load(&path).unwrap();
    println!("{}", parsed.to_toml());

    for cmd in ["spectrum", "calibrate"] {
        let out = dir.join(cmd);
        let argv = ["efres", "--config", path.to_str().unwrap(), "--output", out.to_str().unwrap(), "--synthetic", cmd];
        let code = efres::cli::run(argv);
        println!("{cmd}: exit {code}, files {:?}", std::fs::read_dir(&out).map(|d| d.count()).unwrap_or(0));
    }
}
