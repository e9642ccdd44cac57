//! Command-line front end of the `tps` binary.
//!
//! Every subcommand builds an [`Output`]: a table (written as CSV or as a
//! JSON array of rows) plus summary fields, and a pass flag that decides the
//! exit code. Exit codes: 0 all assertions hold, 2 an assertion failed,
//! 1 usage, domain or I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::chart::{PointBox, TpsPoint};
use crate::dynamics::{integrate, lt_generator, mrugala_hamiltonians};
use crate::fields::{constant_field, Field, SharedPotential, Smooth};
use crate::gauge::representation_change_demo;
use crate::legendre::{legendre_isometry_check, IndexSet};
use crate::metric::{structure_suite, SuiteTolerances};
use crate::models::{coexistence_locus, gibbs_phase_rule, IdealGas, Vdw};
use crate::processes::{classify, entropy_production, integrability_report, thermo_hamiltonian_field, EQUILIBRIUM_TOL};
use crate::{Result, TpsError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tps", version, about = "Contact geometry of the thermodynamic phase space", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed of the random point generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Assertion tolerance; each subcommand has its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeModel {
    IdealGas,
    Vdw,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegendreModel {
    IdealGas,
    Vdw,
    Quadratic,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Verify the contact-metric structure on seeded random points.
    CheckStructure {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0.5)]
        p_min: f64,
        #[arg(long, default_value_t = 5.0)]
        p_max: f64,
    },
    /// Energy to entropy representation change by the gauge 1/p_1.
    Gauge {
        #[arg(long, value_enum, default_value_t = GaugeModel::IdealGas)]
        model: GaugeModel,
        /// Points per axis of the (S, V) grid.
        #[arg(long, default_value_t = 6)]
        grid: usize,
        /// S range as `lo:hi`.
        #[arg(long)]
        s_range: Option<String>,
        /// V range as `lo:hi`.
        #[arg(long)]
        v_range: Option<String>,
    },
    /// Legendre isometry test on a grid of equilibrium states.
    Legendre {
        #[arg(long, value_enum, default_value_t = LegendreModel::IdealGas)]
        potential: LegendreModel,
        /// One-based indices to exchange, comma separated; all when absent.
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
        /// Points per axis.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Reduced temperature of the van der Waals isotherm.
        #[arg(long, default_value_t = 0.9)]
        tr: f64,
        /// Treat the grid as convex: any breakdown is an assertion failure.
        #[arg(long)]
        convex: bool,
    },
    /// Integrate a contact Hamiltonian flow.
    Flow {
        /// reeb, neg-w, lt, mrugala:ideal-gas or mrugala:vdw.
        #[arg(long, default_value = "neg-w")]
        hamiltonian: String,
        /// Initial point, `w=..,q=a;b,p=a;b` or a raw coordinate list.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, default_value_t = 5.0)]
        tf: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Emit every k-th sample.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Classify an orbit of H = -w and compute its entropy production.
    Process {
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, default_value_t = 50.0)]
        tf: f64,
        /// Step of the integrability check.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Entropy production against the closed form over a grid of H0.
    EntropyProduction {
        /// H0 grid as `lo:hi:count`.
        #[arg(long, default_value = "0:2:5", allow_hyphen_values = true)]
        h0: String,
        #[arg(long, default_value_t = 50.0)]
        tf: f64,
    },
    /// Van der Waals coexistence by the equal-area rule.
    Maxwell {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long = "R", default_value_t = 1.0)]
        r: f64,
        /// Absolute temperature.
        #[arg(long = "T")]
        t: Option<f64>,
        /// Reduced temperature.
        #[arg(long = "Tr")]
        tr: Option<f64>,
        /// Number of reduced temperatures in [0.55, 0.98].
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Dimension C - r + 2 of an r-phase region.
    PhaseRule {
        #[arg(long = "C")]
        c: i64,
        #[arg(long = "r")]
        r: i64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckStructure { .. } => "check-structure",
            Command::Gauge { .. } => "gauge",
            Command::Legendre { .. } => "legendre",
            Command::Flow { .. } => "flow",
            Command::Process { .. } => "process",
            Command::EntropyProduction { .. } => "entropy-production",
            Command::Maxwell { .. } => "maxwell",
            Command::PhaseRule { .. } => "phase-rule",
        }
    }
}

const SUBCOMMANDS: [&str; 8] =
    ["check-structure", "gauge", "legendre", "flow", "process", "entropy-production", "maxwell", "phase-rule"];

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:.16e}"),
            Cell::I(i) => i.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::I(i) => json!(i),
            Cell::S(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>()))
                .collect(),
        )
    }
}

/// Finished report of one subcommand.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    /// Extra top-level fields of the JSON form.
    pub summary: Map<String, Value>,
    pub pass: bool,
    pub default_format: Format,
    /// Bare text printed instead of the table when no format is requested.
    pub text: Option<String>,
    /// Assertion messages for stderr.
    pub failures: Vec<String>,
}

impl Output {
    fn new(table: Table, default_format: Format) -> Self {
        Self { table, summary: Map::new(), pass: true, default_format, text: None, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.failures.push(message());
        }
    }

    /// Renders the report; JSON keys are sorted and floats are shortest
    /// round-trip.
    pub fn render(&self, format: Option<Format>) -> String {
        if let (None, Some(text)) = (format, &self.text) {
            return format!("{text}\n");
        }
        match format.unwrap_or(self.default_format) {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut obj = self.summary.clone();
                obj.insert("pass".into(), json!(self.pass));
                obj.insert("rows".into(), self.table.to_json_rows());
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Writes a rendered report to `path`, or stdout when `None`.
pub fn emit(output: &Output, format: Option<Format>, path: Option<&Path>) -> Result<()> {
    let text = output.render(format);
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b] => Ok((parse_f64(a)?, parse_f64(b)?)),
        _ => Err(TpsError::InvalidInput(format!("expected lo:hi, got {s:?}"))),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| TpsError::InvalidInput(format!("not a number: {s:?}")))
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => {
            let count = c.trim().parse::<usize>().map_err(|_| TpsError::InvalidInput(format!("bad count in {s:?}")))?;
            Ok(linspace(parse_f64(a)?, parse_f64(b)?, count))
        }
        _ => Err(TpsError::InvalidInput(format!("expected lo:hi:count, got {s:?}"))),
    }
}

/// Parses `w=..,q=a;b,p=a;b` or a plain list `w,q..,p..`.
pub fn parse_point(s: &str) -> Result<TpsPoint> {
    if s.contains('=') {
        let (mut w, mut q, mut p) = (None, None, None);
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| TpsError::InvalidInput(format!("expected key=value, got {part:?}")))?;
            let values = value.split(';').map(parse_f64).collect::<Result<Vec<f64>>>()?;
            match key.trim() {
                "w" if values.len() == 1 => w = Some(values[0]),
                "q" => q = Some(values),
                "p" => p = Some(values),
                k => return Err(TpsError::InvalidInput(format!("unknown or malformed key {k:?}"))),
            }
        }
        match (w, q, p) {
            (Some(w), Some(q), Some(p)) => TpsPoint::new(w, &q, &p),
            _ => Err(TpsError::InvalidInput(format!("point needs w, q and p: {s:?}"))),
        }
    } else {
        let coords = s.split(',').map(parse_f64).collect::<Result<Vec<f64>>>()?;
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(TpsError::InvalidDimension(format!("{} coordinates", coords.len())));
        }
        TpsPoint::from_slice((coords.len() - 1) / 2, &coords)
    }
}

fn check_structure(global: &GlobalArgs, n: usize, points: usize, p_min: f64, p_max: f64) -> Result<Output> {
    if n == 0 {
        return Err(TpsError::InvalidDimension("n must be at least 1".into()));
    }
    if points == 0 {
        return Err(TpsError::InvalidInput("need at least one point".into()));
    }
    if !(p_min > 0.0 && p_max > p_min) {
        return Err(TpsError::InvalidInput(format!("need 0 < p-min < p-max, got {p_min}, {p_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let bx = PointBox { p: (p_min, p_max), ..PointBox::default() };
    let pts = bx.sample_many(&mut rng, n, points);
    let tol = SuiteTolerances { identities: global.tol.unwrap_or(1e-8), ..SuiteTolerances::default() };
    let report = structure_suite(n, &pts, tol);
    let mut table = Table::new(&["check", "max_residual", "tol", "pass"]);
    for c in &report.checks {
        table.push(vec![Cell::S(c.name.clone()), Cell::F(c.max_residual), Cell::F(c.tol), Cell::S(c.pass.to_string())]);
    }
    let mut out = Output::new(table, Format::Json);
    out.summary.insert("n".into(), json!(n));
    out.summary.insert("points".into(), json!(points));
    out.summary.insert("seed".into(), json!(global.seed));
    out.summary.insert("failures".into(), json!(report.failures));
    for c in &report.checks {
        out.check(c.pass, || format!("{}: {:e} exceeds {:e}", c.name, c.max_residual, c.tol));
    }
    out.check(report.failures.is_empty(), || format!("{} points failed to evaluate", report.failures.len()));
    Ok(out)
}

fn gauge(global: &GlobalArgs, model: GaugeModel, grid: usize, s_range: Option<&str>, v_range: Option<&str>) -> Result<Output> {
    let (energy, s_default, v_default): (SharedPotential, _, _) = match model {
        GaugeModel::IdealGas => (Smooth::shared(IdealGas::default().energy()), (0.5, 2.0), (1.0, 4.0)),
        GaugeModel::Vdw => (Smooth::shared(Vdw::default().energy()), (1.0, 2.0), (2.0, 5.0)),
    };
    let (s_lo, s_hi) = s_range.map(parse_range).transpose()?.unwrap_or(s_default);
    let (v_lo, v_hi) = v_range.map(parse_range).transpose()?.unwrap_or(v_default);
    if grid == 0 {
        return Err(TpsError::InvalidInput("grid must be nonempty".into()));
    }
    let pts: Vec<(f64, f64)> =
        linspace(s_lo, s_hi, grid).into_iter().flat_map(|s| linspace(v_lo, v_hi, grid).into_iter().map(move |v| (s, v))).collect();
    let report = representation_change_demo(energy.as_ref(), &pts)?;
    let tol = global.tol.unwrap_or(1e-8);
    let mut table = Table::new(&[
        "S",
        "V",
        "T",
        "ratio_max_deviation",
        "conformal_residual",
        "reeb_residual",
        "closed_form_residual",
        "structure_residual",
    ]);
    for p in &report.points {
        table.push(
            [p.s, p.v, p.t, p.ratio_max_deviation, p.conformal_residual, p.reeb_residual, p.closed_form_residual, p.structure_residual]
                .into_iter()
                .map(Cell::F)
                .collect(),
        );
    }
    let mut out = Output::new(table, Format::Csv);
    let worst = report.worst().max(report.max_of(|p| p.ratio_max_deviation));
    out.summary.insert("skipped".into(), json!(report.skipped));
    out.summary.insert("worst_residual".into(), json!(worst));
    out.check(worst <= tol, || format!("gauge residual {worst:e} exceeds {tol:e}"));
    Ok(out)
}

fn legendre(global: &GlobalArgs, model: LegendreModel, indices: Option<&[usize]>, grid: usize, tr: f64, convex: bool) -> Result<Output> {
    if grid == 0 {
        return Err(TpsError::InvalidInput("grid must be nonempty".into()));
    }
    let (w, axes): (SharedPotential, Vec<(f64, f64)>) = match model {
        LegendreModel::IdealGas => (Smooth::shared(IdealGas::default()), vec![(1.0, 3.0), (1.0, 3.0)]),
        LegendreModel::Quadratic => (Smooth::shared(crate::fields::Quadratic::negative_unit(2)), vec![(-1.0, 1.0), (-1.0, 1.0)]),
        LegendreModel::Vdw => {
            let m = Vdw::default();
            if !(tr > 0.0) {
                return Err(TpsError::InvalidInput(format!("reduced temperature must be positive, got {tr}")));
            }
            (Smooth::shared(m.isotherm(tr * m.critical().t)), vec![(1.2 * m.b, 8.0 * m.b)])
        }
    };
    let n = w.arity();
    let set = match indices {
        Some(idx) => IndexSet::from_one_based(n, idx)?,
        None => IndexSet::all(n),
    };
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in &axes {
        pts = pts.into_iter().flat_map(|p| linspace(lo, hi, grid).into_iter().map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    let report = legendre_isometry_check(w, &set, &pts)?;
    let mut columns: Vec<String> = (1..=n).map(|k| format!("q{k}")).collect();
    columns.extend(["residual_plus", "residual_minus", "embedding_mismatch", "breakdown"].map(String::from));
    let mut table = Table { columns, rows: Vec::new() };
    for p in &report.points {
        let mut row: Vec<Cell> = p.q.iter().map(|x| Cell::F(*x)).collect();
        row.extend([Cell::F(p.residual_plus), Cell::F(p.residual_minus), Cell::F(p.embedding_mismatch)]);
        row.push(Cell::I(p.breakdown.is_some() as i64));
        table.push(row);
    }
    let tol = global.tol.unwrap_or(1e-6);
    let mut out = Output::new(table, Format::Csv);
    out.summary.insert("indices".into(), json!(set.indices().iter().map(|i| i + 1).collect::<Vec<_>>()));
    out.summary.insert("sign".into(), json!(report.sign));
    out.summary.insert("residual".into(), json!(report.residual));
    out.summary.insert("breakdowns".into(), json!(report.breakdowns()));
    if convex {
        out.check(report.breakdowns() == 0, || format!("{} breakdowns in a region declared convex", report.breakdowns()));
    }
    if set.len() == n && report.breakdowns() < report.points.len() {
        out.check(report.residual <= tol, || format!("total transform residual {:e} exceeds {tol:e}", report.residual));
    }
    Ok(out)
}

fn flow_hamiltonian(name: &str, n: usize) -> Result<Field> {
    match name {
        "reeb" => Ok(constant_field(n, 1.0)),
        "neg-w" => Ok(thermo_hamiltonian_field(n)),
        "lt" => Ok(lt_generator(n)),
        other => {
            let model = other
                .strip_prefix("mrugala:")
                .ok_or_else(|| TpsError::InvalidInput(format!("unknown hamiltonian {other:?}")))?;
            if n != 2 {
                return Err(TpsError::DimensionMismatch { expected: 2, got: n });
            }
            let empty = IndexSet::empty();
            match model {
                "ideal-gas" => Ok(mrugala_hamiltonians(IdealGas::default(), &empty)?.h0),
                "vdw" => Ok(mrugala_hamiltonians(Vdw::default().entropy(), &empty)?.h0),
                m => Err(TpsError::InvalidInput(format!("unknown model {m:?}"))),
            }
        }
    }
}

fn flow(hamiltonian: &str, x0: &str, tf: f64, dt: f64, stride: usize) -> Result<Output> {
    let x0 = parse_point(x0)?;
    let n = x0.n();
    let h = flow_hamiltonian(hamiltonian, n)?;
    let traj = integrate(&h, &x0, tf, dt)?;
    let mut columns = vec!["t".to_string(), "w".to_string()];
    columns.extend((1..=n).map(|k| format!("q{k}")));
    columns.extend((1..=n).map(|k| format!("p{k}")));
    columns.push("h".into());
    let mut table = Table { columns, rows: Vec::new() };
    let stride = stride.max(1);
    for k in (0..traj.len()).filter(|k| k % stride == 0 || *k + 1 == traj.len()) {
        let mut row = vec![Cell::F(traj.t[k])];
        row.extend(traj.points[k].as_slice().iter().map(|x| Cell::F(*x)));
        row.push(Cell::F(traj.h[k]));
        table.push(row);
    }
    let mut out = Output::new(table, Format::Csv);
    out.summary.insert("hamiltonian".into(), json!(hamiltonian));
    out.summary.insert("samples".into(), json!(traj.len()));
    Ok(out)
}

fn process(global: &GlobalArgs, x0: &str, tf: f64, dt: f64) -> Result<Output> {
    let x0 = parse_point(x0)?;
    let tol = global.tol.unwrap_or(EQUILIBRIUM_TOL);
    let class = classify(&x0, tol)?;
    let ep = entropy_production(&x0, tf)?;
    let integ = integrability_report(&x0, tf, dt)?;
    let mut table = Table::new(&["class", "H0", "entropy_production", "closed_form", "q_drift_max", "involution_max", "rank"]);
    table.push(vec![
        Cell::S(class.kind.to_string()),
        Cell::F(class.h0),
        Cell::F(ep.value),
        Cell::F(ep.closed_form),
        Cell::F(integ.q_drift_max),
        Cell::F(integ.involution_max),
        Cell::I(integ.rank as i64),
    ]);
    let mut out = Output::new(table, Format::Json);
    out.summary.insert("class".into(), json!(class.kind.to_string()));
    out.summary.insert("H0".into(), json!(class.h0));
    out.summary.insert("entropy_production".into(), json!(ep.value));
    out.summary.insert("q_drift_max".into(), json!(integ.q_drift_max));
    let gap = (ep.value - ep.closed_form).abs();
    out.check(gap <= 1e-8, || format!("entropy production off the closed form by {gap:e}"));
    out.check(integ.q_drift_max <= 1e-12, || format!("q drift {:e}", integ.q_drift_max));
    out.check(integ.rank == x0.n() + 1, || format!("first integrals have rank {}", integ.rank));
    Ok(out)
}

fn entropy_sweep(global: &GlobalArgs, h0: &str, tf: f64) -> Result<Output> {
    let grid = parse_grid(h0)?;
    let rows: Vec<Result<(f64, f64, f64)>> = grid
        .par_iter()
        .map(|&h| {
            let x0 = TpsPoint::new(-h, &[1.0], &[1.0])?;
            let e = entropy_production(&x0, tf)?;
            Ok((h, e.value, e.closed_form))
        })
        .collect();
    let tol = global.tol.unwrap_or(1e-8);
    let mut table = Table::new(&["H0", "t_f", "S_num", "S_closed", "residual"]);
    let mut out_rows = Vec::new();
    for r in rows {
        out_rows.push(r?);
    }
    let mut out = Output::new(Table::default(), Format::Csv);
    for (h, num, closed) in out_rows {
        let residual = (num - closed).abs();
        table.push(vec![Cell::F(h), Cell::F(tf), Cell::F(num), Cell::F(closed), Cell::F(residual)]);
        out.check(residual <= tol, || format!("H0 = {h}: residual {residual:e}"));
    }
    out.table = table;
    Ok(out)
}

fn maxwell(global: &GlobalArgs, a: f64, b: f64, r: f64, t: Option<f64>, tr: Option<f64>, grid: Option<usize>) -> Result<Output> {
    let model = Vdw::new(a, b, r)?;
    let crit = model.critical();
    let temps: Vec<f64> = match (t, tr, grid) {
        (Some(t), None, None) => vec![t],
        (None, Some(tr), None) => vec![tr * crit.t],
        (None, None, Some(count)) => linspace(0.55, 0.98, count).into_iter().map(|x| x * crit.t).collect(),
        (None, None, None) => vec![0.9 * crit.t],
        _ => return Err(TpsError::InvalidInput("give at most one of --T, --Tr, --grid".into())),
    };
    let locus = coexistence_locus(&model, &temps)?;
    let tol = global.tol.unwrap_or(1e-8);
    let mut table = Table::new(&["T", "p_coex", "v_l", "v_g", "area_residual", "mu_residual", "T_r", "p_r", "v_l_r", "v_g_r"]);
    let mut out = Output::new(Table::default(), Format::Csv);
    for c in &locus {
        table.push(
            [
                c.t,
                c.p_coex,
                c.v_liquid,
                c.v_gas,
                c.equal_area_residual,
                c.mu_residual,
                c.t / crit.t,
                c.p_coex / crit.p,
                c.v_liquid / crit.v,
                c.v_gas / crit.v,
            ]
            .into_iter()
            .map(Cell::F)
            .collect(),
        );
        out.check(c.equal_area_residual <= tol && c.mu_residual <= tol, || {
            format!("T = {}: residuals {:e}, {:e}", c.t, c.equal_area_residual, c.mu_residual)
        });
    }
    out.table = table;
    out.summary.insert("critical".into(), json!({"v": crit.v, "p": crit.p, "T": crit.t}));
    Ok(out)
}

fn phase_rule(c: i64, r: i64) -> Result<Output> {
    let dim = gibbs_phase_rule(c, r)?;
    let mut table = Table::new(&["C", "r", "N"]);
    table.push(vec![Cell::I(c), Cell::I(r), Cell::I(dim)]);
    let mut out = Output::new(table, Format::Csv);
    out.text = Some(dim.to_string());
    Ok(out)
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t > 0.0) {
            return Err(TpsError::InvalidInput(format!("tolerance must be positive, got {t}")));
        }
    }
    match &cli.command {
        Command::CheckStructure { n, points, p_min, p_max } => check_structure(g, *n, *points, *p_min, *p_max),
        Command::Gauge { model, grid, s_range, v_range } => gauge(g, *model, *grid, s_range.as_deref(), v_range.as_deref()),
        Command::Legendre { potential, indices, grid, tr, convex } => legendre(g, *potential, indices.as_deref(), *grid, *tr, *convex),
        Command::Flow { hamiltonian, x0, tf, dt, stride } => flow(hamiltonian, x0, *tf, *dt, *stride),
        Command::Process { x0, tf, dt } => process(g, x0, *tf, *dt),
        Command::EntropyProduction { h0, tf } => entropy_sweep(g, h0, *tf),
        Command::Maxwell { a, b, r, t, tr, grid } => maxwell(g, *a, *b, *r, *t, *tr, *grid),
        Command::PhaseRule { c, r } => phase_rule(*c, *r),
    }
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Splices the flags of a JSON config file in front of the command-line
/// flags, right after the subcommand, so that explicit flags override it.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| TpsError::InvalidInput(format!("config {path}: {e}")))?;
    let Value::Object(map) = value else {
        return Err(TpsError::InvalidInput(format!("config {path}: expected a JSON object")));
    };
    let mut tokens = Vec::new();
    for (key, v) in map {
        let flag = format!("--{key}");
        match v {
            Value::Bool(true) => tokens.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(x) => tokens.push(format!("{flag}={x}")),
            Value::String(s) => tokens.push(format!("{flag}={s}")),
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(|i| i.as_str().map(String::from).unwrap_or_else(|| i.to_string())).collect();
                tokens.push(format!("{flag}={}", joined.join(",")));
            }
            Value::Object(_) => return Err(TpsError::InvalidInput(format!("config {path}: nested value for {key}"))),
        }
    }
    let at = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())).map_or(args.len(), |k| k + 1);
    let mut out = args[..at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

/// Parses, runs and emits; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let raw: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let args = match expand_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let output = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error [{}]: {e}", cli.command.name());
            return EXIT_USAGE;
        }
    };
    if let Err(e) = emit(&output, cli.global.format, cli.global.out.as_deref()) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    for f in &output.failures {
        eprintln!("assertion failed [{}]: {f}", cli.command.name());
    }
    if output.pass {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tps").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn point_parsing() {
        let p = parse_point("w=-1,q=1;2,p=0.5;3").unwrap();
        assert_eq!(p.as_slice(), &[-1.0, 1.0, 2.0, 0.5, 3.0]);
        assert_eq!(parse_point("0,1,2").unwrap().as_slice(), &[0.0, 1.0, 2.0]);
        assert!(parse_point("w=1,q=1").is_err());
        assert!(parse_point("1,2").is_err());
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        assert_eq!(Cell::F(0.1).csv(), "1.0000000000000001e-1");
    }

    #[test]
    fn phase_rule_prints_bare_integer() {
        let out = run(&cli(&["phase-rule", "--C", "1", "--r", "3"])).unwrap();
        assert_eq!(out.render(None), "0\n");
        assert!(run(&cli(&["phase-rule", "--C", "1", "--r", "4"])).is_err());
    }

    #[test]
    fn process_reports_admissible() {
        let out = run(&cli(&["process", "--x0", "w=-1,q=1,p=1", "--tf", "50"])).unwrap();
        assert!(out.pass);
        let v: Value = serde_json::from_str(&out.render(None)).unwrap();
        assert_eq!(v["class"], "admissible");
        assert_eq!(v["entropy_production"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn config_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"C": 1, "r": 2, "format": "json"}"#).unwrap();
        let args: Vec<String> =
            ["tps", "--config", path.to_str().unwrap(), "phase-rule", "--r", "3"].iter().map(|s| s.to_string()).collect();
        let c = Cli::try_parse_from(expand_config(args).unwrap()).unwrap();
        assert!(matches!(c.command, Command::PhaseRule { c: 1, r: 3 }));
        assert_eq!(c.global.format, Some(Format::Json));
    }
}
