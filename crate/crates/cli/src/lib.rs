//! Problem specs, the `solve` / `classify` / `figure1` workflows and their
//! CSV and SVG outputs.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fracbvp::regularity::{classify, judge, p_profile, Problem, RegularityReport, Sampling, Verdict};
use fracbvp::solver::{
    gl_residual, solve_linear, solve_nonlinear, GridFunction, NonlinearitySpec, PicardOptions,
};
use fracbvp::{Error, Order, PowerSum, WeightSpec};
use thiserror::Error as ThisError;

pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONDITION_H: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::ConditionHViolated { .. }) => EXIT_CONDITION_H,
            CliError::Core(Error::Parse { .. } | Error::InvalidOrder(_)) | CliError::Usage(_) => EXIT_PARSE,
            _ => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn parse_error(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

fn parse_number(text: &str, position: usize) -> Result<f64, Error> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(position, format!("invalid number {text:?}")))
}

/// `power:<beta>` or `power:<beta>*sum:<c1>,<l1>;<c2>,<l2>;...`, for
/// `h(t) = t^{−β} Σ cᵢ t^{lᵢ}` with every `lᵢ ≥ 0`.
pub fn parse_weight(text: &str) -> Result<WeightSpec, Error> {
    const HEAD: &str = "power:";
    const SUM: &str = "*sum:";
    let body = text
        .strip_prefix(HEAD)
        .ok_or_else(|| parse_error(0, "weight must start with 'power:'"))?;
    let (beta_text, sum_text) = match body.find(SUM) {
        Some(i) => (&body[..i], Some(&body[i + SUM.len()..])),
        None => (body, None),
    };
    let beta = parse_number(beta_text, HEAD.len())?;
    if beta < 0.0 {
        return Err(parse_error(HEAD.len(), "beta must be >= 0"));
    }
    let regular = match sum_text {
        None => PowerSum::constant(1.0),
        Some(items) => {
            let mut pos = HEAD.len() + beta_text.len() + SUM.len();
            let mut terms = Vec::new();
            for item in items.split(';') {
                let (c, l) = item
                    .split_once(',')
                    .ok_or_else(|| parse_error(pos, "expected <coefficient>,<exponent>"))?;
                let coefficient = parse_number(c, pos)?;
                let exponent_pos = pos + c.len() + 1;
                let exponent = parse_number(l, exponent_pos)?;
                if exponent < 0.0 {
                    return Err(parse_error(exponent_pos, "regular exponents must be >= 0"));
                }
                terms.push((coefficient, exponent));
                pos += item.len() + 1;
            }
            PowerSum::from_terms(terms)
        }
    };
    WeightSpec::new(beta, regular)
}

/// Canonical text of a weight; [`parse_weight`] inverts it.
pub fn format_weight(w: &WeightSpec) -> String {
    let mut out = format!("power:{}", w.beta());
    if *w.regular() != PowerSum::constant(1.0) {
        let items: Vec<String> = w
            .regular()
            .terms()
            .iter()
            .map(|t| format!("{},{}", t.coefficient, t.exponent))
            .collect();
        out.push_str("*sum:");
        out.push_str(&items.join(";"));
    }
    out
}

/// Right-hand side of the problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// nonnegative weight `h` of `D^α u + h f(u) = 0`
    Weight(WeightSpec),
    /// signed forcing `g` of the linear problem `D^α u + g = 0`
    Forcing(PowerSum),
}

impl Source {
    /// `power:...` or `forcing:<power sum>`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        const FORCING: &str = "forcing:";
        match text.strip_prefix(FORCING) {
            Some(rest) => rest.parse::<PowerSum>().map(Source::Forcing).map_err(|e| match e {
                Error::Parse { position, message } => parse_error(position + FORCING.len(), message),
                other => other,
            }),
            None => parse_weight(text).map(Source::Weight),
        }
    }

    /// The source as a weight (the forcing split as `s^{−β}` times a
    /// regular factor).
    pub fn effective(&self) -> WeightSpec {
        match self {
            Source::Weight(w) => w.clone(),
            Source::Forcing(g) => WeightSpec::from_power_sum(g),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Weight(w) => f.write_str(&format_weight(w)),
            Source::Forcing(g) => write!(f, "forcing:{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: Order,
    pub source: Source,
    pub nonlinearity: NonlinearitySpec,
    pub n: usize,
    pub picard: PicardOptions,
    pub out: PathBuf,
}

impl ProblemSpec {
    /// Linear problem with default controls.
    pub fn linear(alpha: f64, source: &str, out: impl Into<PathBuf>) -> Result<Self, Error> {
        Ok(ProblemSpec {
            alpha: Order::new(alpha)?,
            source: Source::parse(source)?,
            nonlinearity: NonlinearitySpec::Constant(1.0),
            n: 512,
            picard: PicardOptions::default(),
            out: out.into(),
        })
    }

    /// `f ≡ 1` (or a forcing) is the linear problem.
    pub fn is_linear(&self) -> bool {
        matches!(self.source, Source::Forcing(_)) || self.nonlinearity == NonlinearitySpec::Constant(1.0)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} source={} f={} n={}",
            self.alpha.value(),
            self.source,
            self.nonlinearity,
            self.n
        )
    }
}

/// A solved problem: node values plus the profile integrals.
pub struct Solved {
    pub solution: GridFunction,
    pub problem: Problem,
    pub converged: bool,
    pub picard_iterations: Option<usize>,
    pub residual_median_rel: f64,
}

pub fn solve_spec(spec: &ProblemSpec) -> CliResult<Solved> {
    if matches!(spec.source, Source::Forcing(_)) && spec.nonlinearity != NonlinearitySpec::Constant(1.0) {
        return Err(CliError::Usage("a forcing term only supports the linear problem".into()));
    }
    let w = spec.source.effective();
    if spec.is_linear() {
        let solution = solve_linear(&w, spec.alpha, spec.n)?;
        let problem = Problem::linear(&w, spec.alpha, spec.n)?;
        let g = w.to_power_sum();
        let residual = gl_residual(&solution, |t| g.eval_positive(t), fracbvp::solver::RESIDUAL_STEPS)?;
        Ok(Solved {
            solution,
            problem,
            converged: true,
            picard_iterations: None,
            residual_median_rel: residual.median_rel,
        })
    } else {
        let report = solve_nonlinear(&w, spec.nonlinearity, spec.alpha, spec.n, spec.picard)?;
        let problem = Problem::nonlinear(&w, spec.nonlinearity, &report.solution)?;
        Ok(Solved {
            problem,
            converged: report.converged,
            picard_iterations: Some(report.picard_iterations),
            residual_median_rel: report.residual_median_rel,
            solution: report.solution,
        })
    }
}

/// One CSV row: `t, u, u′, q`; the derivative columns are empty at the
/// endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionRow {
    pub t: f64,
    pub u: f64,
    pub du: Option<f64>,
    pub q: Option<f64>,
}

pub struct SolveOutcome {
    pub rows: Vec<SolutionRow>,
    pub sup_norm: f64,
    /// `max|u| + max|q|` over the nodes.
    pub e_alpha_grid_norm: f64,
    pub converged: bool,
    pub picard_iterations: Option<usize>,
    pub residual_median_rel: f64,
}

impl SolveOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NONCONVERGENCE
        }
    }

    pub fn summary(&self) -> String {
        let picard = match self.picard_iterations {
            Some(k) => format!(" picard_iterations={k}"),
            None => String::new(),
        };
        format!(
            "sup|u|={:.6e} E_alpha_grid_norm={:.6e} converged={}{} gl_residual_median={:.3e}",
            self.sup_norm, self.e_alpha_grid_norm, self.converged, picard, self.residual_median_rel
        )
    }
}

pub fn solution_rows(solved: &Solved) -> CliResult<Vec<SolutionRow>> {
    let nodes = solved.solution.nodes();
    let last = nodes.len() - 1;
    nodes
        .iter()
        .zip(&solved.solution.values)
        .enumerate()
        .map(|(i, (&t, &u))| {
            let (du, q) = if i == 0 || i == last {
                (None, None)
            } else {
                (Some(solved.problem.du(t)?), Some(solved.problem.q(t)?))
            };
            Ok(SolutionRow { t, u, du, q })
        })
        .collect()
}

/// Solves, writes `t,u,du,q` to `spec.out`, and summarizes.
pub fn cmd_solve(spec: &ProblemSpec) -> CliResult<SolveOutcome> {
    let solved = solve_spec(spec)?;
    let rows = solution_rows(&solved)?;
    write_solution_csv(&spec.out, &rows)?;
    let sup_norm = solved.solution.sup_norm();
    let q_max = rows.iter().filter_map(|r| r.q).fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(SolveOutcome {
        rows,
        sup_norm,
        e_alpha_grid_norm: sup_norm + q_max,
        converged: solved.converged,
        picard_iterations: solved.picard_iterations,
        residual_median_rel: solved.residual_median_rel,
    })
}

pub struct ClassifyOutcome {
    pub report: RegularityReport,
    pub converged: bool,
}

impl ClassifyOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NONCONVERGENCE
        }
    }

    pub fn summary(&self) -> String {
        let r = &self.report;
        let norm = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
        format!(
            "in_E_alpha={} q_limit={} e_alpha_norm={}\nin_C1_2ma={} p_limit={} c1_norm={}\ntotal_variation={:.6e}",
            r.in_e_alpha,
            r.q_limit_estimate,
            norm(r.e_alpha_norm),
            r.in_c1_2ma,
            r.p_limit_estimate,
            norm(r.c1_norm),
            r.total_variation
        )
    }
}

/// Classifies the solution and writes the `t,q,p` samples to `spec.out`.
pub fn cmd_classify(spec: &ProblemSpec, sampling: Sampling) -> CliResult<ClassifyOutcome> {
    let solved = solve_spec(spec)?;
    let report = classify(&solved.problem, sampling)?;
    let mut wtr = csv_writer(&spec.out)?;
    let csv_err = |e| CliError::Csv {
        path: spec.out.clone(),
        source: e,
    };
    wtr.write_record(["t", "q", "p"]).map_err(csv_err)?;
    for &(t, q, p) in &report.samples {
        wtr.write_record([num(t), num(q), num(p)]).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| io_err(&spec.out, e))?;
    Ok(ClassifyOutcome {
        report,
        converged: solved.converged,
    })
}

/// One curve of the four-weight figure.
pub struct FigureCurve {
    pub label: &'static str,
    pub weight: WeightSpec,
    pub rows: Vec<SolutionRow>,
    /// `(t, u′(t))` at `t = 10⁻¹, 10⁻², 10⁻³`
    pub slopes: Vec<(f64, f64)>,
    /// Verdict on `p(t) = t^{2−α}u′(t)` settling as `t → 0`.
    pub p_verdict: Verdict,
    pub csv_path: PathBuf,
}

pub struct FigureOutcome {
    pub curves: Vec<FigureCurve>,
    pub svg_path: PathBuf,
}

pub const FIGURE_ALPHA: f64 = 1.6;
pub const FIGURE_PANELS: usize = 512;

/// Weights `t^{0.6}, 1, t^{−0.6}, t^{−1.2}` with file stems.
pub fn figure_weights() -> Vec<(&'static str, &'static str, WeightSpec)> {
    vec![
        ("h = t^0.6", "h_t0.6", WeightSpec::new(0.0, PowerSum::monomial(1.0, 0.6)).expect("valid weight")),
        ("h = 1", "h_1", WeightSpec::power(0.0).expect("valid weight")),
        ("h = t^-0.6", "h_t-0.6", WeightSpec::power(0.6).expect("valid weight")),
        ("h = t^-1.2", "h_t-1.2", WeightSpec::power(1.2).expect("valid weight")),
    ]
}

/// Solves the four linear problems at `α = 1.6`, writes one CSV per weight
/// and an overlay plot of `u`.
pub fn cmd_figure1(out_dir: &Path) -> CliResult<FigureOutcome> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let alpha = Order::new(FIGURE_ALPHA)?;
    let mut curves = Vec::new();
    for (label, stem, weight) in figure_weights() {
        let solution = solve_linear(&weight, alpha, FIGURE_PANELS)?;
        let problem = Problem::linear(&weight, alpha, FIGURE_PANELS)?;
        let solved = Solved {
            solution,
            problem,
            converged: true,
            picard_iterations: None,
            residual_median_rel: f64::NAN,
        };
        let rows = solution_rows(&solved)?;
        let csv_path = out_dir.join(format!("figure1_{stem}.csv"));
        write_solution_csv(&csv_path, &rows)?;
        let slopes = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&t| Ok((t, solved.problem.du(t)?)))
            .collect::<CliResult<Vec<_>>>()?;
        let p: Vec<f64> = p_profile(&solved.problem, &Sampling::default().points())?
            .into_iter()
            .map(|v| v.1)
            .collect();
        curves.push(FigureCurve {
            label,
            weight,
            rows,
            slopes,
            p_verdict: judge(&p).0,
            csv_path,
        });
    }
    let svg_path = out_dir.join("figure1.svg");
    let series: Vec<svg::Series<'_>> = curves
        .iter()
        .map(|c| svg::Series {
            label: c.label,
            points: c.rows.iter().map(|r| (r.t, r.u)).collect(),
        })
        .collect();
    let doc = svg::line_plot(&series, "t", "u(t)");
    fs::write(&svg_path, doc).map_err(|e| io_err(&svg_path, e))?;
    Ok(FigureOutcome { curves, svg_path })
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: e,
        })
}

/// 17 significant digits: enough to read back the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_solution_csv(path: &Path, rows: &[SolutionRow]) -> CliResult<()> {
    let mut wtr = csv_writer(path)?;
    let csv_err = |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    wtr.write_record(["t", "u", "du", "q"]).map_err(csv_err)?;
    for r in rows {
        wtr.write_record([num(r.t), num(r.u), opt_num(r.du), opt_num(r.q)])
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| io_err(path, e))
}

pub fn read_solution_csv(path: &Path) -> CliResult<Vec<SolutionRow>> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    })?;
    let field = |s: &str| -> CliResult<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>().map(Some).map_err(|_| bad(format!("invalid number {s:?}")))
        }
    };
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        if record.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", record.len())));
        }
        let t = field(&record[0])?.ok_or_else(|| bad("missing t".into()))?;
        let u = field(&record[1])?.ok_or_else(|| bad("missing u".into()))?;
        rows.push(SolutionRow {
            t,
            u,
            du: field(&record[2])?,
            q: field(&record[3])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let w = parse_weight("power:1.2").unwrap();
        assert_eq!(w.beta(), 1.2);
        assert_eq!(*w.regular(), PowerSum::constant(1.0));
        let w = parse_weight("power:0").unwrap();
        assert_eq!(w.eval(0.3), 1.0);
        let w = parse_weight("power:0*sum:1,0.6").unwrap();
        assert!((w.eval(0.5) - 0.5f64.powf(0.6)).abs() < 1e-15);
        let w = parse_weight("power:1.5*sum:2,0;-1,1").unwrap();
        assert_eq!(format_weight(&w), "power:1.5*sum:2,0;-1,1");
    }

    #[test]
    fn weight_errors_carry_positions() {
        assert!(matches!(parse_weight("pow:1"), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_weight("power:x"), Err(Error::Parse { position: 6, .. })));
        assert!(matches!(parse_weight("power:-1"), Err(Error::Parse { position: 6, .. })));
        // "power:1*sum:1,0;2,-0.5": the second exponent starts at 18
        assert!(matches!(
            parse_weight("power:1*sum:1,0;2,-0.5"),
            Err(Error::Parse { position: 18, .. })
        ));
        assert!(matches!(parse_weight("power:1*sum:1"), Err(Error::Parse { position: 12, .. })));
    }

    #[test]
    fn forcing_source() {
        let s = Source::parse("forcing:0.5*t^-1.3 - 2*t^0.7").unwrap();
        let w = s.effective();
        assert_eq!(w.beta(), 1.3);
        assert_eq!(s.to_string(), "forcing:0.5*t^-1.3 - 2*t^0.7");
        match Source::parse("forcing:0.5*t^") {
            Err(Error::Parse { position, .. }) => assert!(position >= 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(Error::ConditionHViolated { margin: -0.1 }).exit_code(), 2);
        assert_eq!(CliError::Core(parse_error(0, "x")).exit_code(), 3);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 3);
    }

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
