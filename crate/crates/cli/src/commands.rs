use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use svi2r::bifurcation::{self, BifurcationReport, Strain};
use svi2r::calibration::{fit, generate_synthetic, CaseSeries, FitConfig, FreeParameter, ObservableKind};
use svi2r::equilibria::{disease_free, endemic, EquilibriumPoint};
use svi2r::odeint::{integrate, Method};
use svi2r::reproduction::{reproduction_numbers, ReproductionNumbers};
use svi2r::sensitivity::{sensitivity_indices, SensitivityReport};
use svi2r::stability::{self, StabilityReport};
use svi2r::{ModelParameters, ParamName, State, Trajectory};

use crate::args::{Cli, Command, FitArgs, MethodArg, ObservableArg, SimulateArgs};
use crate::config::{column_index, CasesConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{line_chart, Series};

/// Outcome of one part of a multi-part report.
#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum Section<T> {
    Ok { result: T },
    Failed { error: String },
}

impl<T> Section<T> {
    fn from(r: svi2r::Result<T>) -> Self {
        match r {
            Ok(result) => Section::Ok { result },
            Err(e) => Section::Failed { error: e.to_string() },
        }
    }

    fn failure(&self) -> Option<&str> {
        match self {
            Section::Ok { .. } => None,
            Section::Failed { error } => Some(error),
        }
    }
}

#[derive(Debug, Serialize)]
struct Equilibria {
    disease_free: EquilibriumPoint,
    /// `None` when no endemic point exists.
    endemic: Option<EquilibriumPoint>,
    endemic_note: Option<String>,
}

fn equilibria(p: &ModelParameters) -> svi2r::Result<Equilibria> {
    let dfe = disease_free(p)?;
    match endemic(p, None) {
        Ok(e) => Ok(Equilibria { disease_free: dfe, endemic: Some(e), endemic_note: None }),
        Err(e @ (svi2r::Error::NoEndemicEquilibrium(_) | svi2r::Error::DfeCoincident)) => {
            Ok(Equilibria { disease_free: dfe, endemic: None, endemic_note: Some(e.to_string()) })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct Stability {
    disease_free: StabilityReport,
    endemic: Option<StabilityReport>,
}

fn stability_of(p: &ModelParameters, eq: &Equilibria) -> svi2r::Result<Stability> {
    Ok(Stability {
        disease_free: stability::analyze(p, &eq.disease_free)?,
        endemic: eq.endemic.as_ref().map(|e| stability::analyze(p, e)).transpose()?,
    })
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let common = cli.command.common();
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.apply_common(common)?;
    match &cli.command {
        Command::Simulate(a) => apply_simulate(&mut cfg, a)?,
        Command::Fit(a) => apply_fit(&mut cfg, a)?,
        _ => {}
    }
    cfg.validate()?;
    if cfg.sweep.is_some() && !matches!(cli.command, Command::Simulate(_)) {
        return Err(CliError::Input(format!("`{}` does not take a sweep", cli.command.name())));
    }
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", cfg.out.display())))?;
    log::info!("{} with output in {}", cli.command.name(), cfg.out.display());

    match &cli.command {
        Command::Simulate(_) => simulate(&cfg),
        Command::Analyze(_) => analyze(&cfg),
        Command::Fit(a) => fit_series(&cfg, &a.data),
        Command::Sensitivity(_) => sensitivity(&cfg),
        Command::Bifurcation(_) => bifurcation_cmd(&cfg),
        Command::Equilibria(_) => equilibria_cmd(&cfg),
    }
}

fn apply_simulate(cfg: &mut RunConfig, a: &SimulateArgs) -> CliResult<()> {
    if let Some(c) = &a.column {
        cfg.column = c.clone();
    }
    let i = &mut cfg.integrator;
    if let Some(t) = a.t_end {
        i.t_end = t;
    }
    if let Some(m) = a.method {
        i.method = match m {
            MethodArg::Rk4 => Method::Rk4,
            MethodArg::Dp45 => Method::DormandPrince45,
        };
    }
    if let Some(h) = a.step {
        i.step = h;
    }
    if let Some(d) = a.output_interval {
        i.output_interval = d;
    }
    match (a.cases, a.noise, &mut cfg.cases) {
        (Some(days), noise, slot) => {
            let noise_rel = noise.or(slot.as_ref().map(|c| c.noise_rel)).unwrap_or(0.0);
            *slot = Some(CasesConfig { days, noise_rel });
        }
        (None, Some(noise), Some(c)) => c.noise_rel = noise,
        (None, Some(_), None) => return Err(CliError::Input("--noise needs --cases".into())),
        (None, None, _) => {}
    }
    Ok(())
}

fn apply_fit(cfg: &mut RunConfig, a: &FitArgs) -> CliResult<()> {
    if let Some(o) = a.observable {
        cfg.observable = match o {
            ObservableArg::ActiveInfectedTotal => ObservableKind::ActiveInfectedTotal,
            ObservableArg::DailyNewInfections => ObservableKind::DailyNewInfections,
        };
    }
    if let Some(list) = &a.free {
        cfg.fit.free_parameters = free_parameters(list, &cfg.parameters)?;
    }
    if let Some(n) = a.max_evals {
        cfg.fit.max_evals = n;
    }
    Ok(())
}

/// Free parameters named in a comma list. The usual three keep their stock
/// starting values and bounds; anything else starts from its current value
/// with four decades of room either side.
fn free_parameters(list: &str, p: &ModelParameters) -> CliResult<Vec<FreeParameter>> {
    let list = list.trim();
    if list.is_empty() || list.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let stock = FitConfig::default().free_parameters;
    list.split(',')
        .map(|key| {
            let name: ParamName = key.trim().parse().map_err(|e: svi2r::Error| CliError::Input(e.to_string()))?;
            Ok(stock.iter().find(|f| f.name == name).copied().unwrap_or_else(|| {
                let v = p.get(name);
                FreeParameter { name, initial: v, lower: v * 1e-4, upper: v * 1e4 }
            }))
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(f)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct Peak {
    t_peak: f64,
    value_peak: f64,
}

struct Member {
    label: String,
    suffix: String,
    params: ModelParameters,
}

fn members(cfg: &RunConfig) -> Vec<Member> {
    match &cfg.sweep {
        None => vec![Member { label: "baseline".into(), suffix: String::new(), params: cfg.parameters }],
        Some(s) => s
            .values
            .iter()
            .map(|&v| Member {
                label: format!("{}={v}", s.parameter),
                suffix: format!("_{}_{v}", s.parameter),
                params: cfg.parameters.with(s.parameter, v),
            })
            .collect(),
    }
}

fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let col = column_index(&cfg.column)?;
    let column = State::COLUMNS[col];
    let members = members(cfg);
    let x0 = cfg.initial_conditions;

    // Each member is independent; results come back in sweep order and are
    // written by this thread alone.
    let runs: Vec<(svi2r::Result<Trajectory>, Option<svi2r::Result<CaseSeries>>)> = members
        .par_iter()
        .map(|m| {
            let traj = integrate(&m.params, &x0, &cfg.integrator);
            let cases = cfg.cases.as_ref().map(|c| generate_synthetic(&m.params, &x0, c.days, c.noise_rel, cfg.seed));
            (traj, cases)
        })
        .collect();

    let mut peaks = BTreeMap::new();
    let mut series = Vec::new();
    let mut failures = Vec::new();
    for (m, (traj, cases)) in members.iter().zip(runs) {
        match traj {
            Ok(traj) => {
                let path = write_text(&cfg.out, &format!("trajectory{}.csv", m.suffix), &traj.to_csv_string())?;
                if let Some((t_peak, value_peak)) = traj.peak(col) {
                    println!("{}: peak {column} = {value_peak:.6e} at t = {t_peak} ({})", m.label, path.display());
                    peaks.insert(m.label.clone(), Peak { t_peak, value_peak });
                }
                if cfg.svg {
                    let points = traj.times.iter().zip(traj.column(col)).map(|(t, v)| (*t, v)).collect();
                    series.push(Series { label: m.label.clone(), points });
                }
            }
            Err(e) => failures.push(format!("{}: {e}", m.label)),
        }
        match cases {
            Some(Ok(c)) => {
                let (_, mut w) = create(&cfg.out, &format!("cases{}.csv", m.suffix))?;
                c.write_csv(&mut w)?;
                w.flush()?;
            }
            Some(Err(e)) => failures.push(format!("{} cases: {e}", m.label)),
            None => {}
        }
    }
    write_json(&cfg.out, "peaks.json", &peaks)?;
    if cfg.svg {
        let svg = line_chart(&format!("{column}(t)"), "t (days)", &format!("{column} (persons)"), &series);
        write_text(&cfg.out, &format!("plot_{column}.svg"), &svg)?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Analysis(failures.join("; ")))
    }
}

#[derive(Serialize)]
struct Analysis {
    parameters: ModelParameters,
    initial_conditions: State,
    reproduction_numbers: Section<ReproductionNumbers>,
    equilibria: Section<Equilibria>,
    stability: Section<Stability>,
    sensitivity: Section<SensitivityReport>,
    bifurcation_strain_1: Section<BifurcationReport>,
    bifurcation_strain_2: Section<BifurcationReport>,
}

fn analyze(cfg: &RunConfig) -> CliResult<()> {
    let p = &cfg.parameters;
    let eq = equilibria(p);
    let stab = match &eq {
        Ok(e) => Section::from(stability_of(p, e)),
        Err(_) => Section::Failed { error: "equilibria unavailable".into() },
    };
    let report = Analysis {
        parameters: *p,
        initial_conditions: cfg.initial_conditions,
        reproduction_numbers: Section::from(reproduction_numbers(p)),
        equilibria: Section::from(eq),
        stability: stab,
        sensitivity: Section::from(sensitivity_indices(p)),
        bifurcation_strain_1: Section::from(bifurcation::analyze(p, Strain::One)),
        bifurcation_strain_2: Section::from(bifurcation::analyze(p, Strain::Two)),
    };
    let path = write_json(&cfg.out, "analysis.json", &report)?;

    if let Section::Ok { result: r } = &report.reproduction_numbers {
        println!("R01 = {:.6}, R02 = {:.6}", r.r01, r.r02);
    }
    if let Section::Ok { result: s } = &report.stability {
        println!("disease-free point: {:?}", s.disease_free.classification);
        if let Some(e) = &s.endemic {
            println!("endemic point: {:?}", e.classification);
        }
    }
    println!("wrote {}", path.display());

    let failed: Vec<String> = [
        ("reproduction_numbers", report.reproduction_numbers.failure()),
        ("equilibria", report.equilibria.failure()),
        ("stability", report.stability.failure()),
        ("sensitivity", report.sensitivity.failure()),
        ("bifurcation_strain_1", report.bifurcation_strain_1.failure()),
        ("bifurcation_strain_2", report.bifurcation_strain_2.failure()),
    ]
    .into_iter()
    .filter_map(|(name, f)| f.map(|e| format!("{name}: {e}")))
    .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Analysis(failed.join("; ")))
    }
}

fn sensitivity(cfg: &RunConfig) -> CliResult<()> {
    let report = sensitivity_indices(&cfg.parameters)?;
    let (_, mut w) = create(&cfg.out, "sensitivity.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    write_json(&cfg.out, "sensitivity.json", &report)?;
    println!("R01 = {:.6}, R02 = {:.6}", report.r01, report.r02);
    println!("{:<18} {:>12} {:>12}", "parameter", "Z(R01)", "Z(R02)");
    for e in &report.entries {
        println!("{:<18} {:>12.5} {:>12.5}", e.parameter.key(), e.index_r01, e.index_r02);
    }
    Ok(())
}

fn bifurcation_cmd(cfg: &RunConfig) -> CliResult<()> {
    let p = &cfg.parameters;
    let reports: BTreeMap<String, Section<BifurcationReport>> = Strain::BOTH
        .into_iter()
        .map(|s| (format!("strain_{s}"), Section::from(bifurcation::analyze(p, s))))
        .collect();
    write_json(&cfg.out, "bifurcation.json", &reports)?;
    let mut failed = Vec::new();
    for (name, r) in &reports {
        match r {
            Section::Ok { result } => println!(
                "{name}: beta* = {:.6e}, a = {:.6e}, b = {:.6e}, {:?}",
                result.beta_star, result.a, result.b, result.regime
            ),
            Section::Failed { error } => failed.push(format!("{name}: {error}")),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Analysis(failed.join("; ")))
    }
}

fn equilibria_cmd(cfg: &RunConfig) -> CliResult<()> {
    let p = &cfg.parameters;
    let eq = equilibria(p)?;
    let stab = stability_of(p, &eq)?;
    #[derive(Serialize)]
    struct Out<'a> {
        equilibria: &'a Equilibria,
        stability: &'a Stability,
    }
    write_json(&cfg.out, "equilibria.json", &Out { equilibria: &eq, stability: &stab })?;
    println!("disease-free: {:?} ({:?})", eq.disease_free.state, stab.disease_free.classification);
    match (&eq.endemic, &stab.endemic) {
        (Some(e), Some(s)) => println!("endemic: {:?} ({:?})", e.state, s.classification),
        _ => println!("endemic: none ({})", eq.endemic_note.as_deref().unwrap_or("not found")),
    }
    Ok(())
}

fn fit_series(cfg: &RunConfig, data: &Path) -> CliResult<()> {
    let file = File::open(data).map_err(|e| CliError::Input(format!("cannot read {}: {e}", data.display())))?;
    let series = CaseSeries::read_csv(file, cfg.observable)
        .map_err(|e| CliError::Input(format!("{}: {e}", data.display())))?;
    if series.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", data.display())));
    }
    let result = fit(&series, &cfg.fit, &cfg.parameters, &cfg.initial_conditions)?;
    write_json(&cfg.out, "fit.json", &result)?;
    let (_, mut w) = create(&cfg.out, "fit.csv")?;
    writeln!(w, "day,observed,predicted")?;
    for r in &result.residuals {
        writeln!(w, "{},{},{}", r.day, r.observed, r.predicted)?;
    }
    w.flush()?;
    if cfg.svg {
        let obs = result.residuals.iter().map(|r| (r.day as f64, r.observed)).collect();
        let pred = result.residuals.iter().map(|r| (r.day as f64, r.predicted)).collect();
        let svg = line_chart(
            "fit",
            "day",
            "persons",
            &[Series { label: "observed".into(), points: obs }, Series { label: "model".into(), points: pred }],
        );
        write_text(&cfg.out, "fit.svg", &svg)?;
    }
    for (name, v) in &result.fitted {
        println!("{} = {v:.10e}", name.key());
    }
    println!(
        "objective {:.6e} (start {:.6e}) after {} evaluations",
        result.objective, result.initial_objective, result.evaluations
    );
    if result.converged {
        Ok(())
    } else {
        Err(CliError::Analysis(format!(
            "simplex did not converge within {} evaluations; best point written",
            cfg.fit.max_evals
        )))
    }
}
