//! The admissible `(a, p)` region of the convex regime and a CSV sweep over
//! `a` through the command-line front end.

use clap::Parser;
use sharpineq::inequalities::{param_region, region_boundary};
use sharpineq::report::{cmd_sweep, Cli, Command};

fn main() -> sharpineq::Result<()> {
    let n = 3;
    for (a, p) in region_boundary(n, 3.9, 4) {
        println!("a = {a:.3}: p < {p:.4}");
    }
    for (a, p) in [(3.0, 2.9), (3.5, 5.0), (4.5, 20.0), (2.5, 2.0)] {
        let v = param_region(n, a, p);
        println!("(a, p) = ({a}, {p}): {} ({})", v.admissible, v.reason);
    }

    let cli = Cli::try_parse_from(["sharpineq", "sweep", "--vary", "a", "--from", "3", "--to", "4.5", "--steps", "7", "--n", "3", "--p", "2"])
        .expect("valid arguments");
    if let Command::Sweep(args) = cli.command {
        print!("{}", cmd_sweep(&args)?.body);
    }
    Ok(())
}
