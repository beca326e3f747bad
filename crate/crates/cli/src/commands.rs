use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::SystemTime;

use heat_threshold::io::{float, norm_series_csv, scan_csv, table_csv, to_json, ArtifactSet, Csv};
use heat_threshold::monotone::{
    run_ladder_with, sandwich_violation, DuhamelOperator, DuhamelOptions, LadderOptions, Seed,
};
use heat_threshold::nonlinearity::{check_admissibility, eval_ln_F, AdmissibilityReport};
use heat_threshold::radial::{EvolveOptions, OuterBoundary, RadialGrid};
use heat_threshold::singular::{
    build_singular, trace_pohozaev, verify_flux_identity, SingularOptions, SingularSolutionTable,
};
use heat_threshold::threshold::{
    run_case, threshold_scan, CapRun, CaseSetup, Classification, ClassifyOptions, PerturbationSpec, ScanOptions,
};
use heat_threshold::Nonlinearity;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, GridKind, PerturbationKind, RunConfig};

/// Why a command did not succeed; maps onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Solver(heat_threshold::Error),
    Io(std::io::Error),
}

impl From<heat_threshold::Error> for Failure {
    fn from(e: heat_threshold::Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub struct Context {
    pub config: RunConfig,
    pub spec: Nonlinearity,
    pub verbose: bool,
    pub run_dir: PathBuf,
}

impl Context {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn artifacts(&self) -> Result<ArtifactSet, Failure> {
        Ok(ArtifactSet::new(&self.run_dir)?)
    }

    /// `{"config": ..., "result": ...}`
    fn json<S: Serialize>(&self, result: &S) -> String {
        to_json(&json!({ "config": self.config, "result": result }))
    }

    fn singular_options(&self) -> SingularOptions<f64> {
        let s = &self.config.solver;
        SingularOptions {
            rtol: s.rtol,
            atol: s.atol,
            patch_tol: s.patch_tol,
            check_patch: s.check_patch,
            ..SingularOptions::default()
        }
    }

    fn table(&self, r_max: f64) -> Result<SingularSolutionTable<f64>, Failure> {
        let d = &self.config.domain;
        self.note(format!("building the singular solution on [{:e}, {r_max}]", d.r_patch));
        Ok(build_singular(&self.spec, d.dim, d.r_patch, r_max, &self.singular_options())?)
    }

    fn admissibility(&self) -> Result<AdmissibilityReport, Failure> {
        let s = &self.config.solver;
        Ok(check_admissibility(&self.spec, self.config.domain.dim, s.u_min, s.u_max, s.samples, s.tol_q)?)
    }

    fn evolution_grid(&self, table: &SingularSolutionTable<f64>) -> Result<RadialGrid<f64>, Failure> {
        let d = &self.config.domain;
        let outer = OuterBoundary::DirichletValue(table.u_at(d.r_outer));
        Ok(match d.grid {
            GridKind::Graded => RadialGrid::graded(d.dim, d.r_outer, d.r1, d.n_inner, d.n_outer, outer)?,
            GridKind::Uniform => RadialGrid::uniform(d.dim, d.r_outer, d.n_intervals, outer)?,
        })
    }

    fn case_setup<'a>(&self, table: &'a SingularSolutionTable<f64>, grid: RadialGrid<f64>) -> CaseSetup<'a, f64> {
        let s = &self.config.solver;
        CaseSetup {
            spec: &table.spec,
            table,
            grid: Arc::new(grid),
            pure_heat: self.config.experiment.pure_heat,
            evolve: EvolveOptions {
                horizon: s.horizon,
                dt_max: s.dt_max,
                safety: s.safety,
                ..EvolveOptions::default()
            },
            classify: ClassifyOptions::default(),
        }
    }
}

/// Creates `<out_dir>/<UTC timestamp>-<command>`, suffixed if it exists.
pub fn run_directory(out_dir: &Path, command: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let stamp: String = humantime::format_rfc3339_seconds(SystemTime::now())
        .to_string()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    for n in 0.. {
        let name = if n == 0 { format!("{stamp}-{command}") } else { format!("{stamp}-{command}-{n}") };
        let dir = out_dir.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

pub fn check(ctx: &Context, out: Option<&Path>) -> Result<Verdict, Failure> {
    let mut set = ctx.artifacts()?;
    let report = ctx.admissibility()?;
    for c in &report.conditions {
        println!("{:?} {:?}", c.condition, c.verdict);
    }
    let text = ctx.json(&report);
    set.write("admissibility.json", &text)?;
    set.commit()?;
    if let Some(path) = out {
        fs::write(path, &text)?;
    }
    Ok(Verdict::from_bool(report.all_pass()))
}

pub fn singular(ctx: &Context) -> Result<Verdict, Failure> {
    let mut set = ctx.artifacts()?;
    let report = ctx.admissibility()?;
    if !report.all_pass() {
        eprintln!("warning: the nonlinearity fails admissibility; tabulating anyway");
    }
    set.write("admissibility.json", ctx.json(&report))?;
    let dim = ctx.config.domain.dim;
    let table = ctx.table(ctx.config.domain.r_outer)?;
    set.write("singular_table.csv", table_csv(&table).as_str())?;

    let mut ratio = Csv::new(&["r", "u_star", "ratio"]);
    let scale = (2.0 * dim as f64 - 4.0).ln();
    for (&r, &u) in table.r.iter().zip(&table.u) {
        let value = (eval_ln_F(&ctx.spec, u)? + scale - 2.0 * r.ln()).exp();
        ratio.floats(&[r, u, value]);
    }
    set.write("asymptotic_ratio.csv", ratio.as_str())?;

    ctx.note("verifying the flux identity and the Pohozaev trace");
    let flux = verify_flux_identity(&table, &ctx.spec)?;
    let mut flux_csv = Csv::new(&["r", "flux", "reaction_integral"]);
    for &(r, a, b) in &flux.rows {
        flux_csv.floats(&[r, a, b]);
    }
    set.write("flux.csv", flux_csv.as_str())?;
    let s = &ctx.config.solver;
    let poh = trace_pohozaev(&table, &ctx.spec, s.slope_tol)?;
    let mut poh_csv = Csv::new(&["r", "pohozaev"]);
    for (&r, &p) in poh.r.iter().zip(&poh.p) {
        poh_csv.floats(&[r, p]);
    }
    set.write("pohozaev.csv", poh_csv.as_str())?;

    let flux_ok = flux.max_relative_residual <= s.flux_tol;
    let poh_ok = poh.max_slope <= s.slope_tol;
    println!("flux residual {} ({})", float(flux.max_relative_residual), if flux_ok { "PASS" } else { "FAIL" });
    println!("Pohozaev max slope {} ({})", float(poh.max_slope), if poh_ok { "PASS" } else { "FAIL" });
    let result = json!({
        "admissible": report.all_pass(),
        "table": table.metadata(),
        "flux": {
            "max_relative_residual": flux.max_relative_residual,
            "residual_at_patch": flux.residual_at_patch,
            "patch_contribution": flux.patch_contribution,
            "pass": flux_ok,
        },
        "pohozaev": {
            "max_slope": poh.max_slope,
            "nonincreasing": poh.nonincreasing,
            "p_at_patch": poh.p_at_patch,
            "spread": poh.spread,
            "identity_residual": poh.identity_residual,
            "pass": poh_ok,
        },
    });
    set.write("singular.json", ctx.json(&result))?;
    set.commit()?;
    Ok(Verdict::from_bool(flux_ok && poh_ok))
}

fn cap_label(cap: f64) -> String {
    format!("{cap:e}").replace('.', "p")
}

fn run_field_csv(run: &CapRun) -> Csv {
    let mut csv = Csv::new(&["t", "r", "u", "u_base"]);
    for (t, values) in &run.snapshots {
        for ((&r, &u), &b) in run.grid_nodes.iter().zip(values).zip(&run.base) {
            csv.floats(&[*t, r, u, b]);
        }
    }
    csv
}

pub fn evolve(ctx: &Context) -> Result<Verdict, Failure> {
    let mut set = ctx.artifacts()?;
    let table = ctx.table(ctx.config.domain.r_outer)?;
    let setup = ctx.case_setup(&table, ctx.evolution_grid(&table)?);
    let e = &ctx.config.experiment;
    let pert = match e.perturbation {
        PerturbationKind::Bump => PerturbationSpec::bump(e.center, e.width, e.amplitude * table.u_at(e.center)),
        PerturbationKind::Scaling => PerturbationSpec::scaling(e.factor),
        PerturbationKind::Truncation => PerturbationSpec::truncation(e.truncation),
    };
    ctx.note(format!("evolving {:?} for caps {:?}", pert.steps, ctx.config.solver.caps));
    let outcome = run_case(&setup, &pert, &ctx.config.solver.caps)?;
    for run in &outcome.runs {
        let label = cap_label(run.cap);
        set.write(&format!("field_cap{label}.csv"), run_field_csv(run).as_str())?;
        set.write(&format!("norms_cap{label}.csv"), norm_series_csv(&run.series).as_str())?;
    }
    println!("{:?} side, {}", outcome.side, outcome.classification.label());
    set.write("evolve.json", ctx.json(&json!({ "perturbation": pert, "outcome": outcome })))?;
    set.commit()?;
    Ok(Verdict::from_bool(outcome.classification != Classification::Undetermined))
}

/// Gaps decrease over the final three iterates.
fn settling(gaps: &[f64]) -> bool {
    gaps[gaps.len().saturating_sub(3)..].windows(2).all(|w| w[1] < w[0])
}

pub fn iterate(ctx: &Context) -> Result<Verdict, Failure> {
    let mut set = ctx.artifacts()?;
    let (d, s, e) = (&ctx.config.domain, &ctx.config.solver, &ctx.config.experiment);
    let table = ctx.table(d.r_outer.max(e.ladder_r_outer))?;
    let outer = OuterBoundary::DirichletValue(table.u_at(e.ladder_r_outer));
    let grid = Arc::new(RadialGrid::uniform(d.dim, e.ladder_r_outer, d.n_intervals, outer)?);
    let cap = s.caps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u_star = table.to_field(grid.clone(), cap)?;
    let u0 = u_star.with_values(u_star.values.iter().map(|v| e.scale * v).collect())?;
    let duhamel = DuhamelOptions { slices: s.slices, ..DuhamelOptions::default() };
    let opts = LadderOptions { k_max: e.k_max, duhamel, ..LadderOptions::default() };
    ctx.note("assembling the Duhamel operator");
    let op = DuhamelOperator::new(grid.clone(), e.t_obs, duhamel)?;
    let below = run_ladder_with(&op, Seed::FromBelow, &u0, &u_star, &ctx.spec, &opts)?;
    let above = run_ladder_with(&op, Seed::FromAbove, &u0, &u_star, &ctx.spec, &opts)?;
    let sandwich = sandwich_violation(&below, &above)?;
    let (sb, sa) = (below.summary(), above.summary());

    let mut gaps = Csv::new(&["k", "gap_below", "gap_above"]);
    for k in 0..sb.cauchy_gaps.len().max(sa.cauchy_gaps.len()) {
        let cell = |g: &[f64]| g.get(k).copied().map(float).unwrap_or_default();
        gaps.row([(k + 1).to_string(), cell(&sb.cauchy_gaps), cell(&sa.cauchy_gaps)]);
    }
    set.write("ladder_gaps.csv", gaps.as_str())?;
    let mut limits = Csv::new(&["r", "u_star", "u0", "from_below", "from_above"]);
    let (vb, va) = (below.limit(), above.limit());
    for i in 0..grid.len() {
        limits.floats(&[grid.nodes()[i], u_star.values[i], u0.values[i], vb.values[i], va.values[i]]);
    }
    set.write("ladder_limits.csv", limits.as_str())?;

    let settled = settling(&sb.cauchy_gaps) && settling(&sa.cauchy_gaps);
    let sandwiched = sandwich <= opts.ladder_tol;
    println!("sandwich violation {} ({})", float(sandwich), if sandwiched { "PASS" } else { "FAIL" });
    println!("Cauchy gaps decreasing over the final three iterates: {settled}");
    let result = json!({
        "from_below": sb,
        "from_above": sa,
        "sandwich_violation": sandwich,
        "gaps_settling": settled,
    });
    set.write("ladder.json", ctx.json(&result))?;
    set.commit()?;
    Ok(Verdict::from_bool(settled && sandwiched))
}

pub fn scan(ctx: &Context) -> Result<Verdict, Failure> {
    let mut set = ctx.artifacts()?;
    let table = ctx.table(ctx.config.domain.r_outer)?;
    let setup = ctx.case_setup(&table, ctx.evolution_grid(&table)?);
    let e = &ctx.config.experiment;
    let opts = ScanOptions::relative(&table, e.center, e.width, &e.amplitudes, ctx.config.solver.caps.clone());
    ctx.note(format!("scanning {} amplitudes", opts.amplitudes.len()));
    let report = threshold_scan(&setup, &opts)?;
    set.write("scan.csv", scan_csv(&report).as_str())?;
    for case in &report.cases {
        println!("amplitude {} {}", float(case.amplitude), case.outcome.classification.label());
    }
    set.write("scan.json", ctx.json(&report))?;
    set.commit()?;
    let decided = report.classifications().iter().all(|c| *c != Classification::Undetermined);
    Ok(Verdict::from_bool(decided))
}
