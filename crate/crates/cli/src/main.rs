mod args;
mod diag;
mod manifest;
mod phases;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, Settings, ToyArgs};
use manifest::RunManifest;

type Phase = fn(&Settings, &mut RunManifest) -> Result<()>;

const PIPELINE: [(&str, Phase); 6] = [
    ("profile", phases::profile),
    ("prepare", phases::prepare),
    ("preconfig", phases::preconfig),
    ("history", phases::history),
    ("pollute", phases::pollute),
    ("assemble", phases::assemble_phase),
];

fn run_phases(command: &str, s: &Settings, selected: &[(&str, Phase)]) -> Result<()> {
    if s.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(s.workers).build_global().context("start worker pool")?;
    }
    std::fs::create_dir_all(&s.out_dir).with_context(|| format!("create {}", s.out_dir.display()))?;
    let mut m = RunManifest::load_or_new(&s.out_dir);
    m.command = s.invocation(command);
    for (name, phase) in selected {
        let start = Instant::now();
        phase(s, &mut m).with_context(|| format!("phase {name}"))?;
        m.record_phase(name, start.elapsed().as_millis() as u64);
    }
    m.finish(&s.out_dir)
}

fn toy(a: &ToyArgs) -> Result<()> {
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
    }
    std::fs::write(&a.output, dupforge::toy::toy_csv(a.rows, a.seed))
        .with_context(|| format!("write {}", a.output.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return ExitCode::from(diag::report("usage", &diag::Invalid(e.render().to_string().trim_end().into()).into())),
    };
    let name = cli.command.name();
    let single = |s: &Settings| {
        let phase = PIPELINE.iter().find(|(n, _)| *n == name).expect("every phase subcommand is in the pipeline");
        run_phases(name, s, std::slice::from_ref(phase))
    };
    let result = match &cli.command {
        Command::All(s) => run_phases(name, s, &PIPELINE),
        Command::Toy(a) => toy(a),
        Command::Profile(s)
        | Command::Prepare(s)
        | Command::Preconfig(s)
        | Command::History(s)
        | Command::Pollute(s)
        | Command::Assemble(s) => single(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(diag::report(name, &e)),
    }
}
