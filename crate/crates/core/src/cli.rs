//! Command-line front end.
//!
//! ```text
//! recruit validate      <scenario> [--set k=v]...
//! recruit indices       <scenario> [--depth 3]
//! recruit action-trace  <scenario> [--depth 4]
//! recruit exact         <scenario>
//! recruit simulate      <scenario> --trials N [--seed S] [--horizon H]
//! recruit repro         [--conditions]
//! recruit sweep         <scenario> --vary key=v1,v2,... [--shift expansion|reallocation] [--zeta z]
//! ```
//!
//! `<scenario>` is a builtin id (`P1`..`P4`, optionally `.before` or
//! `.after`) or a path to a scenario document (see [`crate::scenario_io`]).
//! Every verb takes `--format table|csv|json`.
//!
//! Numbers are rounded to 12 significant digits. csv output has a header
//! row; json output is `{"meta": {version, seed, tolerances}, "results": [...]}`
//! with one object per row, keys in column order.
//!
//! Exit status is 0 on success, 1 when a computation or input fails, and 2
//! for usage errors.

use std::io::Write;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evaluator::{self, Comparison};
use crate::experiments::{self, SaaShift, SweepSpec};
use crate::indices;
use crate::model::{self, Category, CategoryParams, NumericalConfig, Policy, Scenario, Signal};
use crate::policies::{self, Action, Draw, PoolState, Recruiter};
use crate::scenario_io;

#[derive(Parser, Debug)]
#[command(name = "recruit", version, about = "Search, evaluation and selection of candidates")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// List the scenario's invariant and assumption violations.
    Validate(ScenarioArgs),
    /// Candidate indices for short histories, the search index and myopic values.
    Indices {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value_t = 3)]
        depth: u32,
    },
    /// The rule's action at every node of the decision tree up to a depth.
    ActionTrace {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value_t = 4)]
        depth: u32,
    },
    /// Certified outcome probabilities.
    Exact(ScenarioArgs),
    /// Monte Carlo estimate of the outcome probabilities.
    Simulate {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Periods per trial before it is counted as censored.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: u64,
    },
    /// The four reference cases with their verdicts and condition margins.
    Repro {
        /// One row per condition instead of one row per case.
        #[arg(long)]
        conditions: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Before/after comparison over a parameter grid.
    Sweep {
        #[command(flatten)]
        sc: ScenarioArgs,
        /// `key=v1,v2,...`; repeat for more axes, the first varies slowest.
        #[arg(long = "vary", value_name = "KEY=VALUES")]
        vary: Vec<String>,
        #[arg(long, value_enum, default_value_t = ShiftKind::Expansion)]
        shift: ShiftKind,
        /// Shift size for reallocation.
        #[arg(long)]
        zeta: Option<f64>,
        /// Overrides the scenario's rule.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, default_value_t = SweepSpec::DEFAULT_CAP)]
        cap: usize,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Builtin id or scenario file.
    scenario: String,
    /// Override one key, applied before validation.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ShiftKind {
    Expansion,
    Reallocation,
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Rounds to 12 significant digits.
fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) if *x != 0.0 && (x.abs() < 1e-5 || x.abs() >= 1e15) => format!("{:e}", round12(*x)),
            Cell::Num(x) => format!("{}", round12(*x)),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(round12(*x)).map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

struct Meta {
    seed: Option<u64>,
    tolerances: NumericalConfig,
}

fn render(table: &Table, format: Format, meta: &Meta, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("cannot format output: {e}"));
    match format {
        Format::Table => {
            let cells: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::text).collect())
                .collect();
            let mut width: Vec<usize> = table.columns.iter().map(|c| c.len()).collect();
            for r in &cells {
                for (w, c) in width.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |fields: &[String]| {
                let padded: Vec<String> = fields
                    .iter()
                    .zip(&width)
                    .map(|(f, w)| format!("{f:<w$}"))
                    .collect();
                padded.join("  ").trim_end().to_string()
            };
            writeln!(out, "{}", line(&table.columns)).map_err(io)?;
            for r in &cells {
                writeln!(out, "{}", line(r)).map_err(io)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::InvalidArgument(format!("cannot write csv: {e}"));
            w.write_record(&table.columns).map_err(csv_err)?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::text)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            out.write_all(&bytes).map_err(io)?;
        }
        Format::Json => {
            let results: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = table
                        .columns
                        .iter()
                        .cloned()
                        .zip(r.iter().map(Cell::json))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let t = &meta.tolerances;
            let doc = json!({
                "meta": {
                    "version": env!("CARGO_PKG_VERSION"),
                    "seed": meta.seed,
                    "tolerances": {
                        "index_tol": Cell::Num(t.index_tol).json(),
                        "horizon_cap": t.horizon_cap,
                        "prob_tol": Cell::Num(t.prob_tol).json(),
                    },
                },
                "results": results,
            });
            let s = serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            writeln!(out, "{s}").map_err(io)?;
        }
    }
    Ok(())
}

/// Runs one command line (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                }
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let mut buf = Vec::new();
    match dispatch(cli.verb, &mut buf) {
        Ok(()) => match out.write_all(&buf).and_then(|_| out.flush()) {
            Ok(()) => 0,
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write output: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn load(sc: &ScenarioArgs) -> Result<Scenario> {
    let overrides = sc
        .set
        .iter()
        .map(|s| scenario_io::parse_assignment(s))
        .collect::<Result<Vec<_>>>()?;
    scenario_io::load_scenario(&sc.scenario, &overrides)
}

fn require_valid(s: &Scenario) -> Result<()> {
    let v = model::invariant_violations(s);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(v))
    }
}

fn meta_for(s: &Scenario) -> Meta {
    Meta {
        seed: None,
        tolerances: s.tolerances,
    }
}

fn dispatch(verb: Verb, out: &mut dyn Write) -> Result<()> {
    match verb {
        Verb::Validate(sc) => {
            let s = load(&sc)?;
            let mut t = Table::new(["severity", "code", "message"]);
            for v in model::validate(&s) {
                let sev = match v.severity {
                    model::Severity::Invariant => "invariant",
                    model::Severity::Assumption => "assumption",
                };
                t.push(vec![sev.into(), v.code.into(), v.message.into()]);
            }
            render(&t, sc.format, &meta_for(&s), out)
        }
        Verb::Indices { sc, depth } => {
            let s = load(&sc)?;
            require_valid(&s)?;
            render(&indices_table(&s, depth)?, sc.format, &meta_for(&s), out)
        }
        Verb::ActionTrace { sc, depth } => {
            let s = load(&sc)?;
            require_valid(&s)?;
            render(&trace_table(&s, depth)?, sc.format, &meta_for(&s), out)
        }
        Verb::Exact(sc) => {
            let s = load(&sc)?;
            let d = evaluator::exact_outcome(&s, &s.tolerances)?;
            let mut t = Table::new(["outcome", "lower", "upper", "midpoint"]);
            for c in Category::ALL {
                let (lo, hi) = d.category(c);
                t.push(vec![c.to_string().into(), lo.into(), hi.into(), d.mid(c).into()]);
            }
            let (lo, hi) = d.none();
            t.push(vec!["none".into(), lo.into(), hi.into(), d.none_mid().into()]);
            t.push(vec![
                "truncation".into(),
                Cell::Empty,
                d.truncation_mass.into(),
                Cell::Empty,
            ]);
            render(&t, sc.format, &meta_for(&s), out)
        }
        Verb::Simulate {
            sc,
            trials,
            seed,
            horizon,
        } => {
            let s = load(&sc)?;
            let m = evaluator::monte_carlo(&s, trials, seed, horizon)?;
            let mut t = Table::new(["outcome", "estimate", "stderr", "trials", "censored"]);
            for (name, p, se) in [
                ("A", m.pa, m.stderr_a),
                ("B", m.pb, m.stderr_b),
                ("none", m.pnone, m.stderr_none),
            ] {
                t.push(vec![name.into(), p.into(), se.into(), m.n.into(), m.censored.into()]);
            }
            let meta = Meta {
                seed: Some(seed),
                tolerances: s.tolerances,
            };
            render(&t, sc.format, &meta, out)
        }
        Verb::Repro { conditions, format } => {
            let cfg = NumericalConfig::default();
            let t = if conditions {
                conditions_table()?
            } else {
                repro_table(&cfg)?
            };
            let meta = Meta {
                seed: None,
                tolerances: cfg,
            };
            render(&t, format, &meta, out)
        }
        Verb::Sweep {
            sc,
            vary,
            shift,
            zeta,
            policy,
            cap,
        } => {
            let s = load(&sc)?;
            let shift = match (shift, zeta) {
                (ShiftKind::Expansion, None) => SaaShift::Expansion,
                (ShiftKind::Expansion, Some(_)) => {
                    return Err(Error::InvalidArgument("--zeta only applies to reallocation".into()))
                }
                (ShiftKind::Reallocation, Some(z)) => SaaShift::Reallocation { zeta: z },
                (ShiftKind::Reallocation, None) => {
                    return Err(Error::InvalidArgument("reallocation needs --zeta".into()))
                }
            };
            let policy = match policy {
                Some(p) => Policy::from_name(&p)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{p}`")))?,
                None => s.policy,
            };
            let varying = vary.iter().map(|v| parse_axis(v)).collect::<Result<Vec<_>>>()?;
            let spec = SweepSpec {
                varying,
                fixed: s.clone(),
                shift,
                policy,
                cap,
            };
            render(&sweep_table(&spec)?, sc.format, &meta_for(&s), out)
        }
    }
}

fn parse_axis(s: &str) -> Result<(String, Vec<f64>)> {
    let (key, values) = scenario_io::parse_assignment(s)?;
    let grid = values
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad value `{x}` for {key}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((key, grid))
}

/// States reachable from a blank candidate within `depth` evaluations.
fn reachable_states(cat: &CategoryParams, depth: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut frontier = vec![(0u32, 0u32)];
    for _ in 0..=depth {
        let mut next = Vec::new();
        for &(n1, n0) in &frontier {
            let Ok(acceptable) = model::is_acceptable(cat, n1, n0) else {
                continue;
            };
            out.push((n1, n0));
            if !acceptable {
                for child in [(n1 + 1, n0), (n1, n0 + 1)] {
                    if !next.contains(&child) && model::posterior(cat, child.0, child.1).is_ok() {
                        next.push(child);
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

fn indices_table(s: &Scenario, depth: u32) -> Result<Table> {
    let cfg = &s.tolerances;
    let mut t = Table::new(["category", "n1", "n0", "posterior", "myopic", "index", "index_tol"]);
    for c in Category::ALL {
        let cat = s.cat(c);
        for (n1, n0) in reachable_states(cat, depth) {
            let g = indices::gittins_index(cat, n1, n0, s.delta, cfg)?;
            t.push(vec![
                c.to_string().into(),
                n1.into(),
                n0.into(),
                model::posterior(cat, n1, n0)?.into(),
                indices::myopic_value(cat, n1, n0)?.into(),
                g.value.into(),
                g.achieved_tol.into(),
            ]);
        }
    }
    let vs = indices::search_index(s, cfg)?;
    t.push(vec![
        "search".into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        indices::myopic_search_value(s)?.into(),
        vs.value.into(),
        vs.achieved_tol.into(),
    ]);
    Ok(t)
}

fn pool_text(pool: &PoolState) -> String {
    pool.candidates
        .iter()
        .map(|c| {
            let mark = if c.retired { "x" } else { "" };
            format!("{}({},{}){mark}", c.category, c.n1, c.n0)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn trace_table(s: &Scenario, depth: u32) -> Result<Table> {
    let rec = Recruiter::new(s)?;
    let mut t = Table::new(["node", "depth", "probability", "pool", "action", "retired"]);
    let mut stack = vec![("root".to_string(), 0u32, 1.0f64, PoolState::initial(s))];
    while let Some((node, d, prob, mut pool)) = stack.pop() {
        let mut row = vec![node.clone().into(), d.into(), prob.into()];
        if let Some(h) = pool.terminated {
            row.extend([
                pool_text(&pool).into(),
                format!("hired {}@{}", h.category, h.position).into(),
                Cell::Empty,
            ]);
            t.push(row);
            continue;
        }
        let decision = rec.decide(&pool.candidates)?;
        pool.commit(&decision);
        let action = match decision.action {
            Action::Evaluate(i) => format!("evaluate {i}"),
            Action::Search => "search".to_string(),
        };
        let retired = decision
            .retire
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        row.extend([pool_text(&pool).into(), action.into(), retired.into()]);
        t.push(row);
        if d >= depth {
            continue;
        }
        let draws: Vec<(Draw, f64, &str)> = match decision.action {
            Action::Evaluate(i) => {
                let c = &pool.candidates[i];
                let p1 = model::signal_prob(s.cat(c.category), c.n1, c.n0, Signal::One)?;
                vec![
                    (Draw::Signal(Signal::One), p1, "1"),
                    (Draw::Signal(Signal::Zero), 1.0 - p1, "0"),
                ]
            }
            Action::Search => vec![
                (Draw::Arrival(Some(Category::A)), s.mu_a, "A"),
                (Draw::Arrival(Some(Category::B)), s.mu_b, "B"),
                (Draw::Arrival(None), 1.0 - s.mu_total(), "-"),
            ],
        };
        // pushed in reverse so the stack yields them in draw order
        for (draw, p, label) in draws.into_iter().rev() {
            if p <= 0.0 {
                continue;
            }
            let step = policies::apply(&pool, decision.action, draw, s)?;
            let child = if node == "root" {
                label.to_string()
            } else {
                format!("{node}.{label}")
            };
            stack.push((child, d + 1, prob * p, step.next));
        }
    }
    Ok(t)
}

fn outcome_cells(c: &Comparison) -> Vec<Cell> {
    let (b, a) = (&c.before, &c.after);
    let width = [b, a]
        .iter()
        .flat_map(|d| {
            [
                d.pa_hi - d.pa_lo,
                d.pb_hi - d.pb_lo,
                d.pnone_hi - d.pnone_lo,
            ]
        })
        .fold(0.0, f64::max);
    vec![
        b.mid(Category::A).into(),
        a.mid(Category::A).into(),
        b.mid(Category::B).into(),
        a.mid(Category::B).into(),
        b.none_mid().into(),
        a.none_mid().into(),
        width.into(),
        c.verdict.name().into(),
    ]
}

const OUTCOME_COLUMNS: [&str; 8] = [
    "gammaA_before",
    "gammaA_after",
    "gammaB_before",
    "gammaB_after",
    "none_before",
    "none_after",
    "max_width",
    "verdict",
];

fn repro_table(cfg: &NumericalConfig) -> Result<Table> {
    let mut cols = vec!["case", "policy", "shift", "zeta"];
    cols.extend(OUTCOME_COLUMNS);
    cols.extend(["expected", "conditions_hold", "min_margin", "tightest_condition"]);
    let mut t = Table::new(cols);
    for case in experiments::builtin_cases() {
        let cmp = experiments::reproduce(&case, cfg)?;
        let report = experiments::check_conditions(&case)?;
        let zeta = match case.shift {
            SaaShift::Expansion => None,
            SaaShift::Reallocation { zeta } => Some(zeta),
        };
        let mut row: Vec<Cell> = vec![
            case.id.name().into(),
            case.before.policy.name().into(),
            case.shift.name().into(),
            zeta.into(),
        ];
        row.extend(outcome_cells(&cmp));
        let tight = report.min_margin();
        row.extend([
            case.expected_direction.name().into(),
            report.all_hold().into(),
            tight.map(|c| c.margin()).into(),
            tight.map(|c| c.id).into(),
        ]);
        t.push(row);
    }
    Ok(t)
}

fn conditions_table() -> Result<Table> {
    let mut t = Table::new(["case", "condition", "inequality", "lhs", "rhs", "margin", "holds"]);
    for case in experiments::builtin_cases() {
        for c in experiments::check_conditions(&case)?.conditions {
            t.push(vec![
                case.id.name().into(),
                c.id.into(),
                c.description.into(),
                c.lhs.into(),
                c.rhs.into(),
                c.margin().into(),
                c.holds().into(),
            ]);
        }
    }
    Ok(t)
}

fn sweep_table(spec: &SweepSpec) -> Result<Table> {
    let rows = experiments::sweep(spec)?;
    let cond_ids: Vec<&'static str> = rows
        .iter()
        .find(|r| !r.conditions.is_empty())
        .map(|r| r.conditions.iter().map(|c| c.id).collect())
        .unwrap_or_default();
    let mut cols: Vec<String> = spec.varying.iter().map(|(k, _)| k.clone()).collect();
    cols.extend(OUTCOME_COLUMNS.iter().map(|s| s.to_string()));
    cols.extend(cond_ids.iter().map(|id| format!("margin:{id}")));
    cols.push("error".into());
    let mut t = Table::new(cols);
    for r in rows {
        let mut row: Vec<Cell> = r.params.iter().map(|&x| x.into()).collect();
        match &r.comparison {
            Some(c) => row.extend(outcome_cells(c)),
            None => row.extend(std::iter::repeat_n(Cell::Empty, OUTCOME_COLUMNS.len())),
        }
        for id in &cond_ids {
            row.push(r.conditions.iter().find(|c| c.id == *id).map(|c| c.margin()).into());
        }
        row.push(r.error.clone().into());
        t.push(row);
    }
    Ok(t)
}
