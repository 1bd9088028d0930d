//! Scenario runner behind the `wvt` binary: every subcommand turns a
//! [`ScenarioConfig`] into an [`OutputBundle`] of CSV tables and a JSON
//! summary.
//!
//! CSV schema (version 1): comma-separated, one header row, numbers with
//! 12 significant digits, empty field for undefined values.
//!
//! | file | columns |
//! |---|---|
//! | `pwv.csv` | `p,pwv` (density of the continuous part) |
//! | `p_initial.csv`, `p_final.csv` | `p,p_initial` / `p,p_final` |
//! | `atoms.csv` | `location,weight` |
//! | `widths.csv` | `eps,halfwidth` |
//! | `moments.csv` | `n,value,residual,defined_without_apodization,unapodized` |
//! | `compare.csv` | `formalism,m1,m2,m3,divergent,sigma_dependence` |
//! | `ladder.csv` | `sigma,estimate,stderr` |
//! | `reconstruction.csv` | `center,estimate,stderr,oracle,chi2,flagged` |
//! | `catalog.csv` | `case,atom_weight,unit_confidence,one_norm,moments_defined` |

mod config;

pub use config::{config_hash, MeasurementDesc, Route, ScenarioConfig, SimMode, CASES};

use crate::analysis::{apodized_moment, confidence_halfwidth, n_norm, width_report};
use crate::formalisms::{compare_report, DeltaSlitEnsemble, MomentTable};
use crate::numerics::{sine_integral, GridSpec};
use crate::physics::{final_momentum_distribution, momentum_distribution, visibility, MeasurementSet, Wavefunction};
use crate::transfer::{char_function, closed_form_for, compute_pwv, default_q_grid, pwv_from_char, MixedDistribution};
use crate::weaksim::{
    anomalous_two_level, bin_masses, reconstruct_pwv, simulate_ladder, simulate_postselected_mean, strong_value,
    weak_value, MeterSpec, DEFAULT_LADDER,
};
use crate::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Check that fails when some bin saw too few outcomes.
pub const STATISTICS_CHECK: &str = "sufficient_statistics";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Pwv,
    Widths,
    Moments,
    Compare,
    Simulate,
    Figures,
    Catalog,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Pwv => "pwv",
            Subcommand::Widths => "widths",
            Subcommand::Moments => "moments",
            Subcommand::Compare => "compare",
            Subcommand::Simulate => "simulate",
            Subcommand::Figures => "figures",
            Subcommand::Catalog => "catalog",
        }
    }
}

/// Files of one run plus the physics checks it made.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputBundle {
    pub files: BTreeMap<String, String>,
    pub checks: BTreeMap<String, bool>,
}

impl OutputBundle {
    /// 0 when every check passed, 3 when the statistics check failed,
    /// 2 for any other failure.
    pub fn exit_code(&self) -> i32 {
        if self.checks.get(STATISTICS_CHECK) == Some(&false) {
            3
        } else if self.checks.values().all(|&c| c) {
            0
        } else {
            2
        }
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, body)?;
            fs::rename(&tmp, dir.join(name))?;
        }
        Ok(())
    }
}

/// Process exit code for an error: 1 for configuration and I/O problems,
/// 3 for insufficient statistics, 2 for any failed physics check.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Io(_) => 1,
        Error::InsufficientStatistics(_) => 3,
        _ => 2,
    }
}

/// `%.12g`-style number.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn to_json(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    files: BTreeMap<String, String>,
    checks: BTreeMap<String, bool>,
    summary: BTreeMap<String, Value>,
}

impl Ctx<'_> {
    fn file(&mut self, name: &str, body: String) {
        self.files.insert(name.into(), body);
    }

    fn check(&mut self, name: &str, pass: bool) {
        self.checks.insert(name.into(), pass);
    }

    fn put(&mut self, key: &str, v: Value) {
        self.summary.insert(key.into(), v);
    }

    fn psi(&self) -> Result<Wavefunction> {
        Wavefunction::new(&self.cfg.state()?, self.cfg.hbar)
    }

    fn measurement(&self) -> Result<MeasurementSet> {
        let m = self.cfg.measurement.build();
        m.check_complete(self.cfg.s, &[])?;
        Ok(m)
    }

    fn pwv(&self, psi: &Wavefunction, m: &MeasurementSet) -> Result<MixedDistribution> {
        match self.cfg.route {
            Route::Direct => compute_pwv(psi, m),
            Route::Char => {
                let phi = char_function(psi, m, default_q_grid(psi))?;
                pwv_from_char(&phi, Some(self.plot_grid()?))
            }
        }
    }

    fn plot_grid(&self) -> Result<GridSpec> {
        let r = 20.0 * self.cfg.hbar / self.cfg.s;
        self.cfg.p_grid_or((-r, r, 801))
    }
}

fn atoms_csv(d: &MixedDistribution) -> String {
    csv(&["location", "weight"], d.atoms.iter().map(|a| vec![fmt_num(a.location), fmt_num(a.weight)]))
}

fn curve_csv(name: &str, grid: &GridSpec, f: impl Fn(f64) -> f64) -> String {
    csv(&["p", name], grid.points().map(|p| vec![fmt_num(p), fmt_num(f(p))]))
}

/// Trapezoid integral of `f` over the grid.
fn window_mass(grid: &GridSpec, f: impl Fn(f64) -> f64) -> f64 {
    let h = grid.spacing();
    let v: Vec<f64> = grid.points().map(f).collect();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

const PLOT_TEMPLATE: &str = "\
import csv
import matplotlib.pyplot as plt

def load(name):
    with open(name) as f:
        rows = list(csv.reader(f))[1:]
    return [float(r[0]) for r in rows], [float(r[1]) for r in rows]

for name, style in [('pwv.csv', '-'), ('p_initial.csv', '--'), ('p_final.csv', ':')]:
    x, y = load(name)
    plt.plot(x, y, style, label=name[:-4])
for loc, w in zip(*load('atoms.csv')):
    plt.annotate('', xy=(loc, w / 2), xytext=(loc, 0), arrowprops=dict(arrowstyle='->'))
plt.xlabel('momentum')
plt.legend()
plt.savefig('figure.pdf')
";

fn figures(ctx: &mut Ctx) -> Result<()> {
    let psi = ctx.psi()?;
    let m = ctx.measurement()?;
    let grid = ctx.plot_grid()?;
    let d = closed_form_for(&psi, &m).or_else(|_| ctx.pwv(&psi, &m))?;
    let pi = momentum_distribution(&psi);
    let pf = final_momentum_distribution(&psi, &m)?;
    // narrow slits: P_i and P_f spread over all momenta, so show them
    // normalized over the plotted window
    let (ni, nf) = if ctx.cfg.is_narrow() {
        (window_mass(&grid, |p| pi.density_at(p)), window_mass(&grid, |p| pf.density_at(p)))
    } else {
        (1.0, 1.0)
    };
    ctx.file("pwv.csv", curve_csv("pwv", &grid, |p| d.density_at(p)));
    ctx.file("p_initial.csv", curve_csv("p_initial", &grid, |p| pi.density_at(p) / ni));
    ctx.file("p_final.csv", curve_csv("p_final", &grid, |p| pf.density_at(p) / nf));
    ctx.file("atoms.csv", atoms_csv(&d));
    ctx.file("plot_template.py", PLOT_TEMPLATE.into());
    ctx.put("atoms", to_json(&d.atoms));
    ctx.put("window_normalization", json!({ "p_initial": ni, "p_final": nf }));
    ctx.put("pwv_mass_in_window", json!(window_mass(&grid, |p| d.density_at(p)) + d.atom_mass()));
    Ok(())
}

fn pwv(ctx: &mut Ctx) -> Result<()> {
    let psi = ctx.psi()?;
    let m = ctx.measurement()?;
    let grid = ctx.plot_grid()?;
    let d = ctx.pwv(&psi, &m)?;
    ctx.file("pwv.csv", curve_csv("pwv", &grid, |p| d.density_at(p)));
    ctx.file("atoms.csv", atoms_csv(&d));
    ctx.put("atoms", to_json(&d.atoms));
    ctx.put("total_mass", json!(d.total_mass()));
    ctx.put("max_imag", json!(d.max_imag));
    ctx.check("normalized", (d.total_mass() - 1.0).abs() <= 1e-6);
    Ok(())
}

/// x* with Si(x*) = π/2, by bisection.
fn si_root() -> f64 {
    let (mut a, mut b) = (1.0, 2.0);
    for _ in 0..80 {
        let c = 0.5 * (a + b);
        if sine_integral(c) < 0.5 * PI {
            a = c
        } else {
            b = c
        }
    }
    0.5 * (a + b)
}

fn widths(ctx: &mut Ctx) -> Result<()> {
    let psi = ctx.psi()?;
    let m = ctx.measurement()?;
    let (s, hbar) = (ctx.cfg.s, ctx.cfg.hbar);
    let d = ctx.pwv(&psi, &m)?;
    let v = visibility(&m, s);
    let report = width_report(&d, v, s, hbar, &ctx.cfg.apodization()?, &ctx.cfg.eps_levels)?;
    ctx.file(
        "widths.csv",
        csv(&["eps", "halfwidth"], report.confidence_halfwidth.iter().map(|(e, w)| vec![fmt_num(*e), opt_num(*w)])),
    );
    ctx.check("support_bound_h_over_6s", report.bound_h_over_6s.pass);
    let h = 2.0 * PI * hbar;
    let unit = confidence_halfwidth(&d, 1.0)?;
    let one_norm = report.n_norms.first().and_then(|e| e.value);
    ctx.put("visibility", json!(v));
    ctx.put("width_report", to_json(&report));
    ctx.put(
        "unit_confidence",
        json!({
            "computed": unit,
            "si_root_oracle_2xhbar_over_s": 2.0 * si_root() * hbar / s,
            "paper_h_over_1_59s": h / (1.59 * s),
        }),
    );
    ctx.put(
        "one_norm",
        json!({
            "computed": one_norm,
            "oracle_2hbar_over_pi_s": 2.0 * hbar / (PI * s),
            "paper_2h_over_pi_s": 2.0 * h / (PI * s),
            "status": "unreconciled discrepancy; the paper value is not asserted",
        }),
    );
    Ok(())
}

fn moment_table(ctx: &Ctx, psi: &Wavefunction, m: &MeasurementSet) -> Result<MomentTable> {
    let st = ctx.cfg.state()?;
    if ctx.cfg.is_narrow() {
        let e = DeltaSlitEnsemble::twin(st.s, st.sigma_slit)?.with_hbar(ctx.cfg.hbar);
        compare_report(&e, m)
    } else {
        compare_report(psi, m)
    }
}

fn table_csv(t: &MomentTable) -> String {
    csv(
        &["formalism", "m1", "m2", "m3", "divergent", "sigma_dependence"],
        t.rows.iter().map(|r| {
            let name = to_json(&r.formalism).as_str().unwrap_or_default().to_string();
            vec![name, opt_num(r.m1), opt_num(r.m2), opt_num(r.m3), r.divergent.to_string(), fmt_num(r.sigma_dependence)]
        }),
    )
}

fn moments(ctx: &mut Ctx) -> Result<()> {
    let psi = ctx.psi()?;
    let m = ctx.measurement()?;
    let d = ctx.pwv(&psi, &m)?;
    let spec = ctx.cfg.apodization()?;
    let results = (1..=ctx.cfg.max_moment).map(|n| apodized_moment(&d, n, &spec)).collect::<Result<Vec<_>>>()?;
    ctx.file(
        "moments.csv",
        csv(
            &["n", "value", "residual", "defined_without_apodization", "unapodized"],
            results.iter().map(|r| {
                vec![
                    r.order.to_string(),
                    opt_num(r.value),
                    fmt_num(r.residual),
                    r.defined_without_apodization.to_string(),
                    opt_num(r.unapodized),
                ]
            }),
        ),
    );
    ctx.put("apodized_moments", to_json(&results));
    if let Ok(t) = moment_table(ctx, &psi, &m) {
        ctx.put("moment_table", to_json(&t));
    }
    Ok(())
}

fn compare(ctx: &mut Ctx) -> Result<()> {
    let psi = ctx.psi()?;
    let m = ctx.cfg.measurement.build();
    let t = moment_table(ctx, &psi, &m)?;
    ctx.file("compare.csv", table_csv(&t));
    ctx.put("moment_table", to_json(&t));
    ctx.put("input", json!(if ctx.cfg.is_narrow() { "delta_slit_ensemble" } else { "state" }));
    Ok(())
}

fn simulate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let meter = MeterSpec::new(cfg.meter_sigma(), cfg.trials(), cfg.seed)?;
    match cfg.sim_mode {
        SimMode::Anomalous => {
            let sys = anomalous_two_level();
            let (wv, sv) = (weak_value(&sys)?, strong_value(&sys)?);
            let ladder = simulate_ladder(&sys, &meter, &DEFAULT_LADDER)?;
            let strong = simulate_postselected_mean(&sys, &MeterSpec { sigma: 0.01, ..meter })?;
            ctx.file(
                "ladder.csv",
                csv(
                    &["sigma", "estimate", "stderr"],
                    ladder.sigmas.iter().zip(&ladder.rungs).map(|(s, (e, se))| vec![fmt_num(*s), fmt_num(*e), fmt_num(*se)]),
                ),
            );
            ctx.check("weak_value_within_3se", (ladder.estimate - wv).abs() <= 3.0 * ladder.stderr);
            ctx.check("strong_value_within_3se", (strong.0 - sv).abs() <= 3.0 * strong.1);
            ctx.put("weak_value", json!(wv));
            ctx.put("strong_value", json!(sv));
            ctx.put("ladder", to_json(&ladder));
            ctx.put("strong_run", json!({ "sigma": 0.01, "estimate": strong.0, "stderr": strong.1 }));
        }
        SimMode::Reconstruct => {
            let psi = ctx.psi()?;
            let m = ctx.measurement()?;
            let grid = cfg.p_grid_or((-16.0 * cfg.hbar / cfg.s, 15.5 * cfg.hbar / cfg.s, 64))?;
            let r = reconstruct_pwv(&psi, &m, grid, &meter)?;
            let oracle_d = closed_form_for(&psi, &m).or_else(|_| compute_pwv(&psi, &m))?;
            let oracle = bin_masses(&oracle_d, &r.centers, r.bin_width);
            let chi2 = r.chi2_against(&oracle);
            let rows = (0..r.centers.len()).map(|i| {
                vec![
                    fmt_num(r.centers[i]),
                    fmt_num(r.estimates[i]),
                    fmt_num(r.stderr[i]),
                    fmt_num(oracle[i]),
                    fmt_num(chi2[i]),
                    r.flagged[i].to_string(),
                ]
            });
            ctx.file("reconstruction.csv", csv(&["center", "estimate", "stderr", "oracle", "chi2", "flagged"], rows));
            let max_chi2 = chi2.iter().copied().fold(0.0, f64::max);
            let negative = r.estimates.iter().zip(&r.stderr).filter(|(e, s)| **e < -3.0 * **s).count();
            ctx.check(STATISTICS_CHECK, !r.flagged.iter().any(|&f| f));
            ctx.check("per_bin_chi2_le_9", max_chi2 <= 9.0);
            ctx.check("significantly_negative_bin", negative > 0);
            ctx.put("max_chi2", json!(max_chi2));
            ctx.put("chi2_sum", json!(chi2.iter().sum::<f64>()));
            ctx.put("negative_bins_below_3se", json!(negative));
            ctx.put("reconstruction", to_json(&r));
        }
    }
    Ok(())
}

fn catalog(ctx: &mut Ctx) -> Result<()> {
    let mut rows = Vec::new();
    let mut entries = BTreeMap::new();
    for case in CASES {
        let cfg = ScenarioConfig { case: case.into(), kind: None, ..ctx.cfg.clone() };
        let psi = Wavefunction::new(&cfg.state()?, cfg.hbar)?;
        let d = closed_form_for(&psi, &MeasurementSet::heaviside_sign())?;
        let spec = cfg.apodization()?;
        let unit = confidence_halfwidth(&d, 1.0)?;
        let one = n_norm(&d, 1, &spec)?.value;
        let defined = (1..=8).take_while(|&n| apodized_moment(&d, n, &spec).map(|r| r.defined_without_apodization).unwrap_or(false)).count();
        let weight = d.atoms.iter().map(|a| a.weight).sum::<f64>();
        rows.push(vec![case.to_string(), fmt_num(weight), opt_num(unit), opt_num(one), defined.to_string()]);
        entries.insert(
            case.to_string(),
            json!({
                "state": to_json(&cfg.state()?),
                "atom_weight": weight,
                "unit_confidence": unit,
                "one_norm": one,
                "moments_defined_without_apodization": defined,
            }),
        );
    }
    ctx.file("catalog.csv", csv(&["case", "atom_weight", "unit_confidence", "one_norm", "moments_defined"], rows));
    ctx.put("catalog", to_json(&entries));
    Ok(())
}

/// Runs one subcommand. Errors are returned for configurations the
/// command cannot evaluate; failed physics checks are recorded in the
/// bundle instead.
pub fn run(cmd: Subcommand, cfg: &ScenarioConfig) -> Result<OutputBundle> {
    let mut ctx = Ctx { cfg, files: BTreeMap::new(), checks: BTreeMap::new(), summary: BTreeMap::new() };
    match cmd {
        Subcommand::Pwv => pwv(&mut ctx)?,
        Subcommand::Widths => widths(&mut ctx)?,
        Subcommand::Moments => moments(&mut ctx)?,
        Subcommand::Compare => compare(&mut ctx)?,
        Subcommand::Simulate => simulate(&mut ctx)?,
        Subcommand::Figures => figures(&mut ctx)?,
        Subcommand::Catalog => catalog(&mut ctx)?,
    }
    let canonical = cfg.canonical();
    ctx.put(
        "provenance",
        json!({
            "command": cmd.name(),
            "config": canonical,
            "config_hash": config_hash(&canonical),
            "seed": cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "csv_schema": CSV_SCHEMA_VERSION,
        }),
    );
    ctx.put("checks", to_json(&ctx.checks));
    let summary = serde_json::to_string_pretty(&to_json(&ctx.summary)).expect("serializable") + "\n";
    ctx.files.insert("summary.json".into(), summary);
    Ok(OutputBundle { files: ctx.files, checks: ctx.checks })
}

/// Whether a summary's embedded configuration still matches its hash.
pub fn verify_summary(summary_json: &str) -> bool {
    let Ok(v) = serde_json::from_str::<Value>(summary_json) else { return false };
    let p = &v["provenance"];
    match (p["config"].as_str(), p["config_hash"].as_str()) {
        (Some(c), Some(h)) => config_hash(c) == h,
        _ => false,
    }
}
