use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rbgc_lab::commands;
use rbgc_lab::lottery::LotteryParams;
use rbgc_lab::sweep::{SweepParams, DEFAULT_T_GEN_BASE_MS};

#[derive(Parser)]
#[command(
    name = "rbgc",
    version,
    about = "Random bit generator contract: equilibrium checks, simulations and demos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the uniform profile admits no profitable coalition deviation.
    VerifyEquilibrium {
        #[arg(long)]
        players: usize,
        /// Also search this many random biased profiles for a deviation.
        #[arg(long, default_value_t = 0)]
        falsify: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file on the simulated chain.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed stored in the scenario.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the block interval and report latency and throughput.
    Throughput {
        /// Requested random bits per simulated second.
        #[arg(long, default_value_t = 256.0)]
        rate: f64,
        #[arg(long = "tgen-base", default_value_t = DEFAULT_T_GEN_BASE_MS)]
        tgen_base: u64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Simulated milliseconds during which requests are sent.
        #[arg(long)]
        duration: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        agents: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one lottery draw backed by the bit generator.
    LotteryDemo {
        #[arg(long)]
        participants: u64,
        #[arg(long)]
        price: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::VerifyEquilibrium {
            players,
            falsify,
            seed,
            out,
        } => {
            let outcome = commands::verify_equilibrium(players, falsify, seed)?;
            print!("{}", outcome.summary());
            if let Some(dir) = out {
                commands::write_equilibrium(&dir, &outcome)?;
            }
            Ok(outcome.success())
        }
        Command::Simulate {
            scenario,
            out,
            seed,
        } => {
            let (_, result) = commands::simulate(&scenario, seed)?;
            rbgc_lab::export::write_run(&out, &result)?;
            print!("{}", commands::simulate_summary(&result));
            Ok(result.audit.passed())
        }
        Command::Throughput {
            rate,
            tgen_base,
            speed,
            duration,
            seed,
            agents,
            out,
        } => {
            let params = SweepParams {
                rate_bits_per_s: rate,
                t_gen_base_ms: tgen_base,
                speed,
                duration_ms: duration,
                seed,
                honest_agents: agents,
            };
            let result = commands::throughput(&params)?;
            print!("{}", commands::throughput_table(&result));
            if let Some(dir) = out {
                commands::write_throughput(&dir, &result)?;
            }
            Ok(result.audit.supply_conserved)
        }
        Command::LotteryDemo {
            participants,
            price,
            seed,
            out,
        } => {
            let result = commands::lottery_demo(&LotteryParams::new(participants, price, seed))?;
            print!("{}", commands::lottery_announcement(&result));
            if let Some(dir) = out {
                commands::write_lottery(&dir, &result)?;
            }
            Ok(result.audit.pot_conserved && result.audit.generator_supply_conserved)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("audit failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
