//! `qbat`: charging runs, sweeps and consistency checks for the closed-loop
//! three-level battery, driven by a JSON config and writing CSV.

mod commands;
mod config;
mod error;
mod output;

fn main() {
    std::process::exit(commands::run());
}
