//! `bdou`: batch evaluation, loss computation, loss curves, adaptive-α
//! inspection and mask fitting from the command line.
//!
//! Exit status is 0 on success, 1 for invalid input or configuration, and 2
//! for failures while computing (non-finite values, I/O errors on output).

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CurveArgs, EvalArgs, FileConfig, FitArgs, GlobalArgs, LossArgs};

#[derive(Parser)]
#[command(name = "bdou", version, about = "Boundary DoU loss and boundary metrics for segmentation masks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score prediction masks against ground-truth masks with matching filenames.
    Eval {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        #[command(flatten)]
        args: EvalArgs,
    },
    /// Dice and DoU losses of two unit-area regions as their overlap grows.
    Curve {
        #[command(flatten)]
        args: CurveArgs,
    },
    /// Contour length, area and adaptive α for each class of a label mask.
    Alpha { gt: PathBuf },
    /// Evaluate one loss on a probability tensor.
    Loss {
        tensor: PathBuf,
        gt: PathBuf,
        /// Write the gradient with respect to the probabilities to this tensor file.
        #[arg(long)]
        grad: Option<PathBuf>,
        #[command(flatten)]
        args: LossArgs,
    },
    /// Fit a logit field to a target mask by gradient descent.
    Fit {
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        loss: LossArgs,
    },
}

/// Invalid input or configuration; exits with status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Some evaluation pairs failed; the rest were reported.
#[derive(Debug)]
pub struct EvalFailed {
    pub count: usize,
    pub runtime: bool,
}

impl fmt::Display for EvalFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pair(s) could not be evaluated", self.count)
    }
}

impl std::error::Error for EvalFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<EvalFailed>() {
            return if e.runtime { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<bdou::Error>() {
            return if e.is_validation() { 1 } else { 2 };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let global = file.global(cli.global);
    match cli.command {
        Command::Eval { pred_dir, gt_dir, args } => commands::eval(&pred_dir, &gt_dir, file.eval(args), &global),
        Command::Curve { args } => commands::curve(file.curve(args), &global),
        Command::Alpha { gt } => commands::alpha(&gt, &global),
        Command::Loss { tensor, gt, grad, args } => {
            commands::loss(&tensor, &gt, grad.as_deref(), file.loss(args), &global)
        }
        Command::Fit { fit, loss } => commands::fit_cmd(file.fit(fit), file.loss(loss), &global),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
