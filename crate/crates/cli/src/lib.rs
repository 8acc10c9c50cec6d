//! Command-line front end for `beaconmesh`: scenario loading and the
//! `link`, `sparams`, `mesh` and `simulate` subcommands.

use std::io::Write;

pub mod args;
pub mod cmd;
mod error;
pub mod scenario;

pub use args::Cli;
pub use error::CliError;

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = cli.out.as_deref();
    match &cli.command {
        args::Command::Link(a) => cmd::link::run(a, cli.json, out),
        args::Command::Sparams(a) => cmd::sparams::run(a, cli.json, dir, out),
        args::Command::Mesh(a) => cmd::mesh::run(a, cli.json, dir, out),
        args::Command::Simulate(a) => cmd::simulate::run(a, cli.json, dir, out),
    }
}
