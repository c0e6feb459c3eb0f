//! Experiment runner behind the `ssnmf` binary.

pub mod args;
pub mod commands;
pub mod experiment;
pub mod manifest;

pub use args::Cli;

pub fn run(cli: Cli) -> anyhow::Result<()> {
    use args::Command;
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Unmix(a) => commands::unmix(&a),
        Command::Sweep(a) => commands::sweep::sweep(&a),
        Command::ParamSweep(a) => commands::sweep::param_sweep(&a),
        Command::Convergence(a) => commands::convergence(&a),
        Command::GraphExport(a) => commands::graph_export(&a),
    }
}
