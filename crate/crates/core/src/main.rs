use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polydil::colligation::UnitaryColligation;
use polydil::dilation::{self, DilationMode, DilationOptions, DilationReport};
use polydil::io::{self, JsonMatrix};
use polydil::linalg;
use polydil::operator_core::{self, ClassReport};
use polydil::vn::{self, VnMode, VnReport};
use polydil::{generators, Error, Execution, OperatorTuple, Result, ToleranceConfig};

const OUT_DIR_VAR: &str = "POLYDIL_OUT_DIR";

/// Dilations, symbols and von Neumann bounds for commuting contraction tuples.
///
/// Operator indices on the command line are one-based. Exit status: 0 when
/// every check passes, 1 when a mathematical check fails, 2 on bad input.
#[derive(Parser)]
#[command(name = "polydil", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    tol: TolArgs,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long, global = true)]
    tol_contraction: Option<f64>,
    #[arg(long, global = true)]
    tol_commute: Option<f64>,
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    #[arg(long, global = true)]
    tol_sym: Option<f64>,
    #[arg(long, global = true)]
    tol_mat: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    tol_unitary: Option<f64>,
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    #[arg(long, global = true)]
    tol_pure_margin: Option<f64>,
}

impl TolArgs {
    fn config(&self) -> Result<ToleranceConfig> {
        let mut t = ToleranceConfig::default();
        let slots = [
            (self.tol_contraction, &mut t.contraction),
            (self.tol_commute, &mut t.commute),
            (self.tol_psd, &mut t.psd),
            (self.tol_sym, &mut t.sym),
            (self.tol_mat, &mut t.mat),
            (self.tol_rank, &mut t.rank),
            (self.tol_unitary, &mut t.unitary),
            (self.tol_residual, &mut t.residual),
            (self.tol_pure_margin, &mut t.pure_margin),
        ];
        for (given, field) in slots {
            if let Some(v) = given {
                *field = v;
            }
        }
        t.validate()?;
        Ok(t)
    }
}

#[derive(Args, Clone, Copy)]
struct Pair {
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
}

impl Pair {
    fn zero_based(self) -> Result<(usize, usize)> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::Input("--p and --q are one-based".into()));
        }
        if self.p >= self.q {
            return Err(Error::Input(format!("expected p < q, got p = {}, q = {}", self.p, self.q)));
        }
        Ok((self.p - 1, self.q - 1))
    }

    /// Zero-based pair, checked against a tuple of length `n`.
    fn within(self, n: usize) -> Result<(usize, usize)> {
        if self.q > n {
            return Err(Error::Input(format!("q = {} exceeds the tuple length {n}", self.q)));
        }
        self.zero_based()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FiniteRank,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Diag,
    Model,
}

#[derive(Subcommand)]
enum Command {
    /// Test membership in the dilation class for (p, q).
    Check {
        file: PathBuf,
        #[command(flatten)]
        pair: Pair,
    },
    /// Build and verify a dilation.
    Dilate {
        file: PathBuf,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "finite-rank")]
        mode: ModeArg,
        /// Minimum per-variable degree of the truncated model.
        #[arg(long, default_value_t = 8)]
        degree: usize,
        /// Extra zero dimensions in the colligation space.
        #[arg(long, default_value_t = 0)]
        pad: usize,
        /// Number of Taylor coefficients of each symbol to write.
        #[arg(long, default_value_t = 8)]
        taylor_terms: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare operator norms of polynomials with their suprema.
    Vn {
        file: PathBuf,
        #[arg(long)]
        polys: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Also compare with the supremum over the distinguished variety.
        #[arg(long)]
        refined: bool,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the distinguished variety of a finite-rank dilation with (p, q) = (1, 2).
    Variety {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Grid for the angles beyond the first; defaults to --grid.
        #[arg(long)]
        trailing_grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random tuple.
    Random {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Matrix size (diag).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Radius bound of the diagonal entries (diag).
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// Coefficient dimension (model).
        #[arg(long, default_value_t = 2)]
        e: usize,
        /// Degree cutoff (model).
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Where to write: the explicit path, else `$POLYDIL_OUT_DIR/<default_name>`.
fn output_path(explicit: Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    explicit.or_else(|| std::env::var_os(OUT_DIR_VAR).map(|d| Path::new(&d).join(default_name)))
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("finite floats serialize"));
    } else {
        print!("{}", text());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("polydil: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let tol = cli.tol.config()?;
    match cli.command {
        Command::Check { file, pair } => check(&file, pair, &tol, cli.json),
        Command::Dilate { file, pair, mode, degree, pad, taylor_terms, out } => {
            dilate(&file, pair, mode, degree, pad, taylor_terms, out, &tol, cli.json)
        }
        Command::Vn { file, polys, grid, refined, pair, out } => vn_cmd(&file, &polys, grid, refined, pair, out, &tol, cli.json),
        Command::Variety { file, grid, trailing_grid, out } => variety(&file, grid, trailing_grid.unwrap_or(grid), out, &tol),
        Command::Random { kind, n, dim, rho, e, degree, pair, seed, out } => random(kind, n, dim, rho, e, degree, pair, seed, out, &tol),
    }
}

fn check(file: &Path, pair: Pair, tol: &ToleranceConfig, json: bool) -> Result<bool> {
    let t = io::read_tuple(file)?;
    let (p, q) = pair.within(t.len())?;
    let mut report = operator_core::class_membership(&t, p, q, tol)?;
    report.p += 1;
    report.q += 1;
    emit(json, &report, || class_text(&report));
    Ok(report.in_class)
}

fn class_text(r: &ClassReport) -> String {
    let mut s = format!("class (p, q) = ({}, {})\n", r.p, r.q);
    s += &format!("  contractive       {} (max norm {:.6e})\n", r.is_contractive, r.max_norm);
    s += &format!("  commuting         {} (max commutator {:.3e})\n", r.is_commuting, r.max_commutator);
    for (i, (pure, rho)) in r.pure_flags.iter().zip(&r.spectral_radii).enumerate() {
        s += &format!("  T_{}               pure {pure}, spectral radius {rho:.6}\n", i + 1);
    }
    for (label, v) in &r.szego_min_eig {
        s += &format!("  defect of {label:<7} min eigenvalue {v:.6e}\n");
    }
    s += &format!("  in class          {}\n", r.in_class);
    s
}

#[derive(Serialize)]
struct ColligationBlocks {
    outer: usize,
    pad_dim: usize,
    a: JsonMatrix,
    b: JsonMatrix,
    c: JsonMatrix,
    d: JsonMatrix,
}

impl ColligationBlocks {
    fn of(u: &UnitaryColligation) -> Self {
        Self {
            outer: u.outer(),
            pad_dim: u.pad_dim(),
            a: io::matrix_to_json(&u.a()),
            b: io::matrix_to_json(&u.b()),
            c: io::matrix_to_json(&u.c()),
            d: io::matrix_to_json(&u.d()),
        }
    }
}

#[derive(Serialize)]
struct SymbolSummary {
    coordinate: usize,
    slot: usize,
    taylor: Vec<JsonMatrix>,
}

#[derive(Serialize)]
struct DilationSummary {
    mode: DilationMode,
    p: usize,
    q: usize,
    extents: Vec<usize>,
    colligation: ColligationBlocks,
    symbols: Vec<SymbolSummary>,
    report: DilationReport,
}

#[allow(clippy::too_many_arguments)]
fn dilate(
    file: &Path,
    pair: Pair,
    mode: ModeArg,
    degree: usize,
    pad: usize,
    taylor_terms: usize,
    out: Option<PathBuf>,
    tol: &ToleranceConfig,
    json: bool,
) -> Result<bool> {
    let t = io::read_tuple(file)?;
    let (p, q) = pair.within(t.len())?;
    let mode = match mode {
        ModeArg::FiniteRank => DilationMode::FiniteRank,
        ModeArg::General => DilationMode::General,
    };
    let opts = DilationOptions { base_degree: degree, extra_pad: pad, ..DilationOptions::default() };
    let pkg = dilation::build_dilation(mode, &t, p, q, tol, &opts)?;
    let probes = linalg::identity(t.dim());
    let report = dilation::verify_dilation(&pkg, &t, &probes, tol, Execution::default())?;
    let symbols = [p, q]
        .into_iter()
        .filter_map(|i| {
            pkg.symbol(i).map(|phi| SymbolSummary {
                coordinate: i + 1,
                slot: phi.slot + 1,
                taylor: phi.taylor_coeffs(taylor_terms.saturating_sub(1)).iter().map(io::matrix_to_json).collect(),
            })
        })
        .collect();
    let summary = DilationSummary {
        mode,
        p: p + 1,
        q: q + 1,
        extents: pkg.extents.clone(),
        colligation: ColligationBlocks::of(&pkg.colligation),
        symbols,
        report,
    };
    if let Some(path) = output_path(out, "dilation.json") {
        io::save_report(&path, &summary)?;
        eprintln!("wrote {}", path.display());
    }
    emit(json, &summary.report, || dilation_text(&summary));
    Ok(summary.report.passed)
}

fn dilation_text(s: &DilationSummary) -> String {
    let r = &s.report;
    let mut out = format!("dilation ({:?}) for (p, q) = ({}, {}), box {:?}\n", s.mode, s.p, s.q, s.extents);
    out += &format!(
        "  colligation       {}x{} (outer {}, pad {})\n",
        s.colligation.a.len() + s.colligation.d.len(),
        s.colligation.a.len() + s.colligation.d.len(),
        s.colligation.outer,
        s.colligation.pad_dim
    );
    for (i, (a, b)) in r.coordinate_residuals.iter().zip(&r.compression_residuals).enumerate() {
        out += &format!("  T_{:<3} intertwining {a:.3e}  compression {b:.3e}\n", i + 1);
    }
    out += &format!("  isometry          {:.3e}\n", r.isometry_residual);
    let label = if r.contractive_only { "symbol contractivity" } else { "symbol innerness" };
    out += &format!("  {label:<17} {:.3e}\n", r.symbol_deviation);
    if let Some(v) = r.bcl_residual {
        out += &format!("  symbol product    {v:.3e}\n");
    }
    if let Some(v) = r.symbol_realization_residual {
        out += &format!("  realization       {v:.3e}\n");
    }
    out += &format!("  unitarity         {:.3e}\n", r.unitarity_defect);
    out += &format!("  passed            {}\n", r.passed);
    out
}

#[allow(clippy::too_many_arguments)]
fn vn_cmd(
    file: &Path,
    polys: &Path,
    grid: usize,
    refined: bool,
    pair: Pair,
    out: Option<PathBuf>,
    tol: &ToleranceConfig,
    json: bool,
) -> Result<bool> {
    if grid == 0 {
        return Err(Error::Input("--grid must be positive".into()));
    }
    let t = io::read_tuple(file)?;
    let polys = io::read_polynomials(polys)?;
    let (p, q) = pair.within(t.len())?;
    let mode = if refined { VnMode::Refined } else { VnMode::Classical };
    let report = vn::vn_report(&t, p, q, &polys, grid, mode, tol, Execution::default())?;
    if let Some(notice) = &report.notice {
        eprintln!("polydil: {notice}");
    }
    if let Some(path) = output_path(out, "vn.json") {
        io::save_report(&path, &report)?;
        eprintln!("wrote {}", path.display());
    }
    emit(json, &report, || vn_text(&report));
    Ok(report.violations == 0)
}

fn vn_text(r: &VnReport) -> String {
    let mut s = format!("{:>5} {:>14} {:>14} {:>14} {:>11}  violation\n", "poly", "||p(T)||", "torus sup", "variety sup", "slack");
    for e in &r.entries {
        let var = e.variety_sup.map_or("-".to_string(), |v| format!("{v:.8}"));
        let flag = e.violation || e.refined_violation == Some(true);
        s += &format!("{:>5} {:>14.8} {:>14.8} {:>14} {:>11.3e}  {}\n", e.index + 1, e.op_norm, e.torus_sup, var, e.slack, flag);
    }
    if let Some(u) = r.u_part_samples {
        s += &format!("u-part samples: {u}\n");
    }
    s += &format!("violations: {}\n", r.violations);
    s
}

fn variety(file: &Path, grid: usize, trailing_grid: usize, out: Option<PathBuf>, tol: &ToleranceConfig) -> Result<bool> {
    if grid == 0 || trailing_grid == 0 {
        return Err(Error::Input("grids must be positive".into()));
    }
    let path = output_path(out, "variety.csv").ok_or_else(|| Error::Input(format!("--out is required unless {OUT_DIR_VAR} is set")))?;
    let t = io::read_tuple(file)?;
    let pkg = dilation::build_finite_rank_dilation(&t, 0, 1, tol, &DilationOptions::default())?;
    let set = vn::variety_for_package(&pkg, grid, trailing_grid, tol)?;
    let file = std::fs::File::create(&path)?;
    io::write_variety_csv(std::io::BufWriter::new(file), set.n, &set.expanded())?;
    eprintln!(
        "wrote {} ({} u-part, {} c-part samples per trailing angle set)",
        path.display(),
        set.count(vn::VarietyPart::U),
        set.count(vn::VarietyPart::C)
    );
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn random(
    kind: KindArg,
    n: usize,
    dim: usize,
    rho: f64,
    e: usize,
    degree: usize,
    pair: Pair,
    seed: u64,
    out: Option<PathBuf>,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let (t, meta): (OperatorTuple, serde_json::Value) = match kind {
        KindArg::Diag => (
            generators::gen_diagonal(n, dim, rho, seed)?,
            serde_json::json!({"generator": "diagonal", "seed": seed, "rho_max": rho}),
        ),
        KindArg::Model => {
            let (p, q) = pair.within(n)?;
            (
                generators::gen_model_compression(n, p, q, e, degree, seed)?,
                serde_json::json!({"generator": "model", "seed": seed, "e": e, "degree": degree, "p": p + 1, "q": q + 1}),
            )
        }
    };
    let check = operator_core::validate_tuple(&t, tol);
    if !(check.is_contractive && check.is_commuting) {
        eprintln!("polydil: generated tuple fails validation");
        return Ok(false);
    }
    match output_path(out, "tuple.json") {
        Some(path) => {
            io::write_tuple(&path, &t, Some(meta))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{}", io::tuple_to_json(&t, Some(meta))),
    }
    Ok(true)
}
