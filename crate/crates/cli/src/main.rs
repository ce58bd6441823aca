use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracbvp::regularity::Sampling;
use fracbvp::solver::{NonlinearitySpec, PicardOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use fracbvp::{Error, Order};
use fracbvp_cli::{cmd_classify, cmd_figure1, cmd_solve, CliError, ProblemSpec, Source, EXIT_OK, EXIT_PARSE};

/// Riemann–Liouville fractional Dirichlet problems with singular weights.
#[derive(Parser)]
#[command(name = "fracbvp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write `t,u,du,q` at the mesh nodes.
    Solve(ProblemArgs),
    /// Decide E_alpha and C1_{2-alpha} membership and write `t,q,p` samples.
    Classify(ProblemArgs),
    /// Solve the four alpha = 1.6 weights and plot them.
    Figure1 {
        #[arg(long, default_value = "figure1")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Order in (1, 2].
    #[arg(long)]
    alpha: f64,
    /// `power:<beta>` or `power:<beta>*sum:<c>,<l>;...`
    #[arg(long, required_unless_present = "forcing", conflicts_with = "forcing")]
    weight: Option<String>,
    /// Signed power sum `g` of `D^alpha u + g = 0`, e.g. `0.5*t^-1.3 - 2*t^0.7`.
    #[arg(long, allow_hyphen_values = true)]
    forcing: Option<String>,
    /// `const:<c>`, `linear:<a>`, `power:<p>` or `affine:<a>,<b>`.
    #[arg(long = "f", default_value = "const:1")]
    f: String,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
    #[arg(long, default_value = "out.csv")]
    out: PathBuf,
}

impl ProblemArgs {
    fn into_spec(self) -> Result<ProblemSpec, Error> {
        let source = match (&self.weight, &self.forcing) {
            (Some(w), _) => Source::parse(w)?,
            (None, Some(g)) => Source::parse(&format!("forcing:{g}"))?,
            (None, None) => unreachable!("clap requires one of --weight / --forcing"),
        };
        Ok(ProblemSpec {
            alpha: Order::new(self.alpha)?,
            source,
            nonlinearity: self.f.parse::<NonlinearitySpec>()?,
            n: self.n,
            picard: PicardOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                damping: self.damping,
            },
            out: self.out,
        })
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => {
            let spec = args.into_spec()?;
            let outcome = cmd_solve(&spec)?;
            println!("{}", outcome.summary());
            println!("wrote {}", spec.out.display());
            Ok(outcome.exit_code())
        }
        Command::Classify(args) => {
            let spec = args.into_spec()?;
            let outcome = cmd_classify(&spec, Sampling::default())?;
            println!("{}", outcome.summary());
            println!("wrote {}", spec.out.display());
            Ok(outcome.exit_code())
        }
        Command::Figure1 { out } => {
            let fig = cmd_figure1(&out)?;
            for c in &fig.curves {
                println!("{}: p(t) settles: {} -> {}", c.label, c.p_verdict, c.csv_path.display());
            }
            println!("wrote {}", fig.svg_path.display());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let CliError::Core(Error::ConditionHViolated { margin }) = &e {
                eprintln!("condition (H) violated: alpha - beta + lambda_min = {margin}");
            } else {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
