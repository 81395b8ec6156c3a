//! Markovian / non-Markovian optimize-then-evaluate scenarios and the two
//! result tables built from them.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::control::{optimize_with, template_for, Objective, ObjectiveSpec, OptimizeOptions, Waveform};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Markovian,
    NonMarkovian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub cutoff: f64,
}

pub const MARKOVIAN_CUTOFF: f64 = 100.0;
pub const NON_MARKOVIAN_CUTOFF: f64 = 1.0;

impl Regime {
    pub fn markovian() -> Self {
        Regime {
            kind: RegimeKind::Markovian,
            cutoff: MARKOVIAN_CUTOFF,
        }
    }

    pub fn non_markovian() -> Self {
        Regime {
            kind: RegimeKind::NonMarkovian,
            cutoff: NON_MARKOVIAN_CUTOFF,
        }
    }

    pub fn new(kind: RegimeKind, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::invalid("cutoff", format!("must be positive, got {cutoff}")));
        }
        Ok(Regime { kind, cutoff })
    }
}

/// Regimes of the mechanical and the optical bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePair {
    pub mech: Regime,
    pub cav: Regime,
}

impl RegimePair {
    pub fn new(mech: Regime, cav: Regime) -> Self {
        RegimePair { mech, cav }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    I,
    II,
    III,
    IV,
    V,
}

impl Label {
    pub const ALL: [Label; 5] = [Label::I, Label::II, Label::III, Label::IV, Label::V];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::I => "i",
            Label::II => "ii",
            Label::III => "iii",
            Label::IV => "iv",
            Label::V => "v",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSource {
    Optimize(RegimePair),
    ReuseFrom(Label),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub label: Label,
    pub source: CouplingSource,
    pub eval: RegimePair,
}

impl ScenarioSpec {
    /// Fixed mapping: (i) optimize M+M; (ii) reuse (i) under nM+nM;
    /// (iii) optimize nM+nM; (iv) reuse (i) under mech nM + cavity M;
    /// (v) optimize mech nM + cavity M. Each is evaluated under its own regimes.
    pub fn standard(label: Label, markovian: Regime, non_markovian: Regime) -> Self {
        let mm = RegimePair::new(markovian, markovian);
        let nn = RegimePair::new(non_markovian, non_markovian);
        let nm = RegimePair::new(non_markovian, markovian);
        let (source, eval) = match label {
            Label::I => (CouplingSource::Optimize(mm), mm),
            Label::II => (CouplingSource::ReuseFrom(Label::I), nn),
            Label::III => (CouplingSource::Optimize(nn), nn),
            Label::IV => (CouplingSource::ReuseFrom(Label::I), nm),
            Label::V => (CouplingSource::Optimize(nm), nm),
        };
        ScenarioSpec { label, source, eval }
    }
}

/// Physical parameters of one table cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub gamma: f64,
    pub kappa: f64,
    pub t_cool: f64,
    pub n_t: f64,
    pub n_c: f64,
}

impl CellParams {
    pub fn config(&self, regimes: RegimePair) -> Result<SystemConfig<f64>> {
        SystemConfig::resonant(
            self.gamma,
            self.kappa,
            regimes.mech.cutoff,
            regimes.cav.cutoff,
            self.n_t,
            self.n_c,
            self.t_cool,
        )
    }

    pub fn objective(&self, regimes: RegimePair) -> Result<Objective> {
        Objective::from_config(&self.config(regimes)?, ObjectiveSpec::Terminal { t_cool: self.t_cool })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub label: Label,
    pub source: CouplingSource,
    pub eval: RegimePair,
    pub params: CellParams,
    pub options: OptimizeOptions,
    pub dt: f64,
    pub n_steps: usize,
    /// Evaluations spent by the optimization that produced the coupling.
    pub evaluation_count: usize,
    pub start_index: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub n_final: f64,
    pub coupling: Waveform,
    pub provenance: Provenance,
}

/// Optimizes (or reuses) the coupling and evaluates `n_mech(t_cool)` under the
/// evaluation regimes. `reuse` must hold the source result for reusing specs.
pub fn run_scenario(
    spec: &ScenarioSpec,
    params: &CellParams,
    options: &OptimizeOptions,
    reuse: Option<&ScenarioResult>,
) -> Result<ScenarioResult> {
    let eval = params.objective(spec.eval)?;
    let (coupling, evaluation_count, start_index, iterations, converged) = match spec.source {
        CouplingSource::Optimize(regimes) => {
            let objective = if regimes == spec.eval { eval.clone() } else { params.objective(regimes)? };
            let spec_t = ObjectiveSpec::Terminal { t_cool: params.t_cool };
            let template = template_for(&spec_t, options)?;
            let r = optimize_with(&objective, &template, options)?;
            (r.best_waveform, r.evaluation_count, r.start_index, r.iterations, r.converged)
        }
        CouplingSource::ReuseFrom(src) => {
            let source = reuse
                .filter(|r| r.provenance.label == src)
                .ok_or(Error::MissingReuseSource(spec.label.as_str()))?;
            let p = &source.provenance;
            (source.coupling.clone(), p.evaluation_count, p.start_index, p.iterations, p.converged)
        }
    };
    let n_final = eval.evaluate(&coupling)?;
    let grid = eval.config().grid;
    Ok(ScenarioResult {
        n_final,
        coupling,
        provenance: Provenance {
            label: spec.label,
            source: spec.source,
            eval: spec.eval,
            params: *params,
            options: *options,
            dt: grid.dt,
            n_steps: grid.n_steps,
            evaluation_count,
            start_index,
            iterations,
            converged,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub gamma_list: Vec<f64>,
    pub kappa_list: Vec<f64>,
    pub t_cool_list: Vec<f64>,
    pub n_t: f64,
    pub n_c: f64,
    pub options: OptimizeOptions,
    pub markovian: Regime,
    pub non_markovian: Regime,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("gamma_list", &self.gamma_list),
            ("kappa_list", &self.kappa_list),
            ("t_cool_list", &self.t_cool_list),
        ] {
            if list.is_empty() {
                return Err(Error::invalid(name, "must not be empty"));
            }
            if let Some(v) = list.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(name, format!("entries must be finite and >= 0, got {v}")));
            }
        }
        if let Some(t) = self.t_cool_list.iter().find(|t| **t <= 0.0) {
            return Err(Error::invalid("t_cool_list", format!("entries must be positive, got {t}")));
        }
        self.options.validate()
    }

    fn spec(&self, label: Label) -> ScenarioSpec {
        ScenarioSpec::standard(label, self.markovian, self.non_markovian)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub params: CellParams,
    pub cells: Vec<ScenarioResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Label>,
    pub rows: Vec<TableRow>,
}

/// Runs `labels` on one row: scenario (i) first when anything reuses it, the
/// rest concurrently, merged in column order.
fn run_row(sweep: &SweepSpec, params: CellParams, labels: &[Label]) -> Result<TableRow> {
    let needs_source = labels
        .iter()
        .any(|l| matches!(sweep.spec(*l).source, CouplingSource::ReuseFrom(_)));
    let source = if needs_source || labels.contains(&Label::I) {
        Some(run_scenario(&sweep.spec(Label::I), &params, &sweep.options, None)?)
    } else {
        None
    };
    let rest: Vec<Result<ScenarioResult>> = labels
        .par_iter()
        .filter(|l| **l != Label::I)
        .map(|l| run_scenario(&sweep.spec(*l), &params, &sweep.options, source.as_ref()))
        .collect();
    let mut rest = rest.into_iter();
    let mut cells = Vec::with_capacity(labels.len());
    for l in labels {
        if *l == Label::I {
            cells.push(source.clone().expect("scenario (i) computed"));
        } else {
            cells.push(rest.next().expect("one result per label")?);
        }
    }
    Ok(TableRow { params, cells })
}

/// Rows over `gamma_list` at the single `kappa` and `t_cool`, all five scenarios.
pub fn table_one(sweep: &SweepSpec) -> Result<Table> {
    sweep.validate()?;
    if sweep.kappa_list.len() != 1 || sweep.t_cool_list.len() != 1 {
        return Err(Error::invalid("kappa_list", "table one takes a single kappa and t_cool"));
    }
    let rows: Vec<Result<TableRow>> = sweep
        .gamma_list
        .par_iter()
        .map(|&gamma| {
            let params = CellParams {
                gamma,
                kappa: sweep.kappa_list[0],
                t_cool: sweep.t_cool_list[0],
                n_t: sweep.n_t,
                n_c: sweep.n_c,
            };
            run_row(sweep, params, &Label::ALL)
        })
        .collect();
    Ok(Table {
        columns: Label::ALL.to_vec(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Columns of table two: all-Markovian, all-non-Markovian, and non-Markovian
/// mechanics with a Markovian cavity.
pub const TABLE_TWO_COLUMNS: [Label; 3] = [Label::I, Label::III, Label::V];

/// Rows over paired `(t_cool, kappa)` entries at the single `gamma`.
pub fn table_two(sweep: &SweepSpec) -> Result<Table> {
    sweep.validate()?;
    if sweep.gamma_list.len() != 1 {
        return Err(Error::invalid("gamma_list", "table two takes a single gamma"));
    }
    if sweep.kappa_list.len() != sweep.t_cool_list.len() {
        return Err(Error::invalid(
            "kappa_list",
            format!(
                "needs one kappa per t_cool ({} vs {})",
                sweep.kappa_list.len(),
                sweep.t_cool_list.len()
            ),
        ));
    }
    let rows: Vec<Result<TableRow>> = sweep
        .t_cool_list
        .par_iter()
        .zip(sweep.kappa_list.par_iter())
        .map(|(&t_cool, &kappa)| {
            let params = CellParams {
                gamma: sweep.gamma_list[0],
                kappa,
                t_cool,
                n_t: sweep.n_t,
                n_c: sweep.n_c,
            };
            run_row(sweep, params, &TABLE_TWO_COLUMNS)
        })
        .collect();
    Ok(Table {
        columns: TABLE_TWO_COLUMNS.to_vec(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

impl Table {
    /// CSV body: parameter columns, then one `n_<label>` column per scenario.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,kappa,t_cool_over_tau_m,n_T,n_c");
        for c in &self.columns {
            let _ = write!(s, ",n_{c}");
        }
        s.push('\n');
        let tau = crate::config::tau_m::<f64>();
        for row in &self.rows {
            let p = &row.params;
            let _ = write!(s, "{},{},{},{},{}", p.gamma, p.kappa, p.t_cool / tau, p.n_t, p.n_c);
            for cell in &row.cells {
                let _ = write!(s, ",{}", cell.n_final);
            }
            s.push('\n');
        }
        s
    }

    pub fn cell(&self, row: usize, label: Label) -> Option<&ScenarioResult> {
        let col = self.columns.iter().position(|l| *l == label)?;
        self.rows.get(row)?.cells.get(col)
    }

    /// Provenance of every cell, row-major, as pretty JSON, tagged with the
    /// tool version, configuration hash and seed.
    pub fn provenance_json(&self, config_hash: &str, seed: u64) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            tool: &'static str,
            version: &'static str,
            config_sha256: &'a str,
            seed: u64,
            cells: Vec<Cell<'a>>,
        }
        #[derive(Serialize)]
        struct Cell<'a> {
            row: usize,
            n_final: f64,
            provenance: &'a Provenance,
            coupling: &'a Waveform,
        }
        let cells: Vec<Cell<'_>> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.cells.iter().map(move |c| Cell {
                    row: i,
                    n_final: c.n_final,
                    provenance: &c.provenance,
                    coupling: &c.coupling,
                })
            })
            .collect();
        let sidecar = Sidecar {
            tool: "optocool",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash,
            seed,
            cells,
        };
        serde_json::to_string_pretty(&sidecar).expect("provenance serialises")
    }
}
