//! The five subcommands. Each writes its files into the output directory
//! and returns the internal checks it evaluated.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use subcell_sbp::diagnostics::{spectrum, DiagnosticsRecord, Spectrum};
use subcell_sbp::experiments::{convergence_study, run, semidiscretization, MeshSpec, Problem, RunResult};
use subcell_sbp::mesh::{CouplingMode, OversetMesh};
use subcell_sbp::subcell::{existence_residuals, structural_check, tolerance_for_degree};
use subcell_sbp::{
    assemble_subcell, gauss_lobatto_operator, gauss_radau_operator, verify_subcell, Law, RadauEnd, SplitFamily,
    SubcellOperator,
};

use crate::config::{Config, FluxSwitch};
use crate::output::{cols, num, opt_num, write_json, CsvFile};

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<CheckLine>,
}

impl Outcome {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

// ---------------------------------------------------------------- verify

fn block_diag(l: [[f64; 2]; 2], r: [[f64; 2]; 2], scale: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = scale * l[i][j];
            m[(i + 2, j + 2)] = scale * r[i][j];
        }
    }
    m
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deviation of a `d = 1` operator on `[-1, 0] | [0, 1]` from reference
/// nodes, weights and `B`, `S`, `D` matrices.
fn golden_deviation(
    op: &SubcellOperator,
    x: [f64; 4],
    p: [f64; 4],
    b: &DMatrix<f64>,
    s: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> f64 {
    let pw = op.p();
    let nodal = (0..4)
        .map(|i| (op.x[i] - x[i]).abs().max((pw[i] - p[i]).abs()))
        .fold(0.0, f64::max);
    nodal
        .max(max_diff(&op.b(), b))
        .max(max_diff(&op.s(), s))
        .max(max_diff(&op.d, d))
}

fn golden_checks(out: &mut Outcome) -> Result<()> {
    let skew = [[0.0, 1.0], [-1.0, 0.0]];
    let diff = [[-1.0, 1.0], [-1.0, 1.0]];
    let ends = [[-1.0, 0.0], [0.0, 1.0]];
    let lobatto = assemble_subcell(
        &gauss_lobatto_operator(1, (-1.0, 0.0))?,
        &gauss_lobatto_operator(1, (0.0, 1.0))?,
    )?;
    let radau = assemble_subcell(
        &gauss_radau_operator(1, (-1.0, 0.0), RadauEnd::Left)?,
        &gauss_radau_operator(1, (0.0, 1.0), RadauEnd::Right)?,
    )?;
    let cases = [
        (
            "golden lobatto d=1",
            &lobatto,
            golden_deviation(
                &lobatto,
                [-1.0, 0.0, 0.0, 1.0],
                [0.5; 4],
                &block_diag(ends, ends, 1.0),
                &block_diag(skew, skew, 0.5),
                &block_diag(diff, diff, 1.0),
            ),
        ),
        (
            "golden radau d=1",
            &radau,
            golden_deviation(
                &radau,
                [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0],
                [0.25, 0.75, 0.75, 0.25],
                &block_diag([[-1.0, -1.0], [-1.0, 3.0]], [[-3.0, 1.0], [1.0, 1.0]], 0.75),
                &block_diag(skew, skew, 0.75),
                &block_diag(diff, diff, 1.5),
            ),
        ),
    ];
    for (name, op, dev) in cases {
        println!("{name}: nodes {:?}", op.x);
        println!("  P = {:?}", op.p());
        println!("  D = {:.6}", op.d);
        out.check(name, dev <= 1e-14, format!("max deviation {dev:.2e} (tol 1e-14)"));
    }
    Ok(())
}

fn split_operator(d: usize, family: SplitFamily, l: f64, m: f64, r: f64) -> Result<SubcellOperator> {
    let (left, right) = match family {
        SplitFamily::Lobatto => (gauss_lobatto_operator(d, (l, m))?, gauss_lobatto_operator(d, (m, r))?),
        SplitFamily::Radau => (
            gauss_radau_operator(d, (l, m), RadauEnd::Left)?,
            gauss_radau_operator(d, (m, r), RadauEnd::Right)?,
        ),
    };
    Ok(assemble_subcell(&left, &right)?)
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
}

/// Largest normalised defect of the discrete integration-by-parts rules on
/// both sub-cells over random polynomial pairs in the exactness space.
fn random_ibp_defect(op: &SubcellOperator, degree: usize, pairs: usize, rng: &mut StdRng) -> f64 {
    let n = op.len();
    let (l, m, r) = (op.cell.0, op.split, op.cell.1);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let cf: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cg: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: Vec<f64> = op.x.iter().map(|&x| poly(&cf, x)).collect();
        let g: Vec<f64> = op.x.iter().map(|&x| poly(&cg, x)).collect();
        let df: Vec<f64> = (0..n).map(|i| (0..n).map(|j| op.d[(i, j)] * f[j]).sum()).collect();
        let dg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| op.d[(i, j)] * g[j]).sum()).collect();
        let form = |p: &[f64]| (0..n).map(|i| p[i] * (f[i] * dg[i] + df[i] * g[i])).sum::<f64>();
        let fg = |x: f64| poly(&cf, x) * poly(&cg, x);
        let scale = 1.0 + f.iter().chain(&g).fold(0.0f64, |a, v| a.max(v.abs())).powi(2);
        worst = worst
            .max((form(&op.p_left) - (fg(m) - fg(l))).abs() / scale)
            .max((form(&op.p_right) - (fg(r) - fg(m))).abs() / scale);
    }
    worst
}

pub fn verify(cfg: &Config, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    golden_checks(&mut out)?;
    let v = &cfg.verify;
    let [l, r] = v.cell;
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut csv = CsvFile::create(
        dir,
        "verify.csv",
        "verify",
        &cols(&["degree", "family", "split", "check", "value", "tolerance", "passed"]),
    )?;
    println!(
        "{:>6} {:>8} {:>8} {:>7} {:>10}  result",
        "degree", "family", "split", "checks", "worst"
    );
    for &d in &v.degrees {
        let tol = tolerance_for_degree(d);
        for &family in &v.families {
            let fam = match family {
                SplitFamily::Lobatto => "lobatto",
                SplitFamily::Radau => "radau",
            };
            for &m in &v.splits {
                if !(l < m && m < r) {
                    bail!("verify.splits: {m} is not inside the cell [{l}, {r}]");
                }
                let op = split_operator(d, family, l, m, r)?;
                let mut report = verify_subcell(&op, tol);
                report.merge(structural_check(&op));
                let (r1, r2) = existence_residuals(&op);
                report.residual("existence R1", r1.amax(), tol);
                report.residual("existence R2", r2.amax(), tol);
                if v.random_pairs > 0 {
                    report.residual("random ibp", random_ibp_defect(&op, d, v.random_pairs, &mut rng), tol);
                }
                let mut worst = 0.0f64;
                for c in &report.checks {
                    if c.tolerance.is_finite() {
                        worst = worst.max(c.value);
                    }
                    csv.row(&[
                        d.to_string(),
                        fam.into(),
                        num(m),
                        c.name.clone(),
                        num(c.value),
                        num(c.tolerance),
                        c.passed.to_string(),
                    ])?;
                }
                let passed = report.passed();
                println!(
                    "{d:>6} {fam:>8} {m:>8} {:>7} {worst:>10.2e}  {}",
                    report.checks.len(),
                    if passed { "PASS" } else { "FAIL" }
                );
                let failed: Vec<String> = report
                    .failures()
                    .map(|c| format!("{} = {:.2e}", c.name, c.value))
                    .collect();
                out.check(
                    format!("operator d={d} {fam} split={m}"),
                    passed,
                    if passed {
                        format!("{} checks", report.checks.len())
                    } else {
                        failed.join("; ")
                    },
                );
            }
        }
    }
    csv.finish()?;
    Ok(out)
}

// ----------------------------------------------------------- convergence

pub fn convergence(cfg: &Config, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let problem = cfg.problem()?;
    let names = problem.law.variable_names();
    let degrees = cfg.convergence.degrees.clone().unwrap_or_else(|| vec![cfg.mesh.degree]);
    let mut summary = Vec::new();
    for d in degrees {
        let base = MeshSpec {
            degree: d,
            ..cfg.mesh.spec()
        };
        let rows = convergence_study(
            &problem,
            cfg.domain,
            base,
            &cfg.convergence.elements,
            cfg.integrate.t_final,
            cfg.integrate.tol,
        )
        .with_context(|| format!("convergence study for degree {d}"))?;
        let mut csv = CsvFile::create(
            dir,
            &format!("convergence_d{d}.csv"),
            "convergence",
            &cols(&["N", "var", "error", "eoc"]),
        )?;
        println!("\n{} d = {d}, t = {}", problem.name, cfg.integrate.t_final);
        let mut header = format!("{:>5}", "N");
        for n in names {
            header += &format!(" {:>12} {:>6}", n, "EOC");
        }
        println!("{header}");
        for row in &rows {
            let mut line = format!("{:>5}", row.n);
            for (k, n) in names.iter().enumerate() {
                csv.row(&[
                    row.n.to_string(),
                    n.to_string(),
                    num(row.errors[k]),
                    opt_num(row.eoc[k]),
                ])?;
                let eoc = row.eoc[k].map(|o| format!("{o:.2}")).unwrap_or_else(|| "---".into());
                line += &format!(" {:>12.2e} {eoc:>6}", row.errors[k]);
            }
            println!("{line}");
        }
        csv.finish()?;
        if let (Some(tol), Some(last)) = (cfg.convergence.eoc_tolerance, rows.last()) {
            let target = d as f64 + 1.0;
            for (k, n) in names.iter().enumerate() {
                let ok = last.eoc[k].is_some_and(|o| o >= target - tol);
                out.check(
                    format!("eoc d={d} {n}"),
                    ok,
                    format!("final EOC {:?}, required >= {:.2}", last.eoc[k], target - tol),
                );
            }
        }
        summary.push(serde_json::json!({ "degree": d, "rows": rows }));
    }
    write_json(dir, "convergence.json", &summary)?;
    Ok(out)
}

// ------------------------------------------------------------------- run

fn write_diagnostics(dir: &Path, name: &str, law: &Law, records: &[DiagnosticsRecord]) -> Result<()> {
    let vars = law.variable_names();
    let mut header = vec!["time".to_string()];
    header.extend(vars.iter().map(|v| format!("integral_{v}")));
    header.extend(cols(&["energy", "energy_rate", "entropy", "entropy_rate"]));
    for prefix in ["max", "l2_error", "linf_error"] {
        header.extend(vars.iter().map(|v| format!("{prefix}_{v}")));
    }
    let mut csv = CsvFile::create(dir, name, "diagnostics", &header)?;
    let nv = vars.len();
    for r in records {
        let mut row = vec![num(r.time)];
        row.extend(r.integral.iter().map(|&x| num(x)));
        row.extend([
            num(r.energy),
            num(r.energy_rate),
            opt_num(r.entropy),
            opt_num(r.entropy_rate),
        ]);
        row.extend(r.max_norm.iter().map(|&x| num(x)));
        for e in [&r.l2_error, &r.linf_error] {
            match e {
                Some(v) => row.extend(v.iter().map(|&x| num(x))),
                None => row.extend(std::iter::repeat_n(String::new(), nv)),
            }
        }
        csv.row(&row)?;
    }
    csv.finish()?;
    Ok(())
}

fn write_solution(dir: &Path, mesh: &OversetMesh, problem: &Problem, t: f64, state: &[f64]) -> Result<()> {
    let vars = problem.law.variable_names();
    let mut header = cols(&["x", "element", "mesh"]);
    header.extend(vars.iter().map(|v| v.to_string()));
    if problem.exact.is_some() {
        header.extend(vars.iter().map(|v| format!("exact_{v}")));
    }
    let mut csv = CsvFile::create(dir, "solution.csv", "solution", &header)?;
    let nv = vars.len();
    for (id, el) in mesh.elements.iter().enumerate() {
        for (i, &x) in el.operator.x().iter().enumerate() {
            let k = el.offset + i;
            let mut row = vec![num(x), id.to_string(), el.mesh.name().to_string()];
            row.extend(state[k * nv..(k + 1) * nv].iter().map(|&w| num(w)));
            if let Some(ex) = &problem.exact {
                row.extend(ex(x, t).iter().map(|&w| num(w)));
            }
            csv.row(&row)?;
        }
    }
    csv.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    problem: &'a str,
    coupling: &'a str,
    final_time: f64,
    completed: bool,
    failure: Option<&'a str>,
    conservation_drift: f64,
    max_energy_rate: f64,
    entropy_rate_range: Option<(f64, f64)>,
    amplitude_growth: f64,
    accepted_steps: usize,
    rejected_steps: usize,
}

fn coupling_name(mode: CouplingMode) -> &'static str {
    match mode {
        CouplingMode::Subcell => "subcell",
        CouplingMode::Baseline => "baseline",
    }
}

fn summarise<'a>(problem: &'a Problem, mode: CouplingMode, res: &'a RunResult) -> RunSummary<'a> {
    RunSummary {
        problem: &problem.name,
        coupling: coupling_name(mode),
        final_time: res.final_time,
        completed: res.failure.is_none(),
        failure: res.failure.as_deref(),
        conservation_drift: res.conservation_drift(),
        max_energy_rate: res.max_energy_rate(),
        entropy_rate_range: res.entropy_rate_range(),
        amplitude_growth: res.amplitude_growth(),
        accepted_steps: res.stats.accepted,
        rejected_steps: res.stats.rejected,
    }
}

fn print_summary(label: &str, s: &RunSummary) {
    println!(
        "{label}: t = {:.6} ({})",
        s.final_time,
        s.failure.unwrap_or("completed")
    );
    println!("  max |I(t) - I(0)|   {:.3e}", s.conservation_drift);
    println!("  max dE/dt           {:.3e}", s.max_energy_rate);
    if let Some((lo, hi)) = s.entropy_rate_range {
        println!("  dS/dt range         [{lo:.3e}, {hi:.3e}]");
    }
    println!("  amplitude growth    {:.4}", s.amplitude_growth);
    println!(
        "  steps               {} accepted, {} rejected",
        s.accepted_steps, s.rejected_steps
    );
}

pub fn run_cmd(cfg: &Config, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let problem = cfg.problem()?;
    let spec = cfg.mesh.spec();
    let sd = semidiscretization(&problem, cfg.domain, &spec)?;
    let it = &cfg.integrate;
    let res = run(&sd, &problem, it.t_final, it.tol, it.samples, it.stop_growth)?;
    // Partial output is written before any check can fail.
    write_diagnostics(dir, "diagnostics.csv", &problem.law, &res.records)?;
    write_solution(dir, &sd.mesh, &problem, res.final_time, &res.final_state)?;
    let s = summarise(&problem, spec.coupling, &res);
    write_json(dir, "summary.json", &s)?;
    print_summary(&problem.name, &s);

    out.check(
        "integration",
        res.failure.is_none(),
        res.failure.clone().unwrap_or_else(|| "completed".into()),
    );
    let c = &cfg.checks;
    if let Some(tol) = c.max_conservation_drift {
        out.check(
            "conservation",
            s.conservation_drift <= tol,
            format!("{:.3e} <= {tol:.1e}", s.conservation_drift),
        );
    }
    if let Some(tol) = c.max_energy_rate {
        out.check(
            "energy rate",
            s.max_energy_rate <= tol,
            format!("{:.3e} <= {tol:.1e}", s.max_energy_rate),
        );
    }
    if let Some(tol) = c.max_entropy_rate {
        let hi = s.entropy_rate_range.map(|r| r.1);
        out.check(
            "entropy rate",
            hi.is_some_and(|h| h <= tol),
            format!("{hi:?} <= {tol:.1e}"),
        );
    }
    if let Some(g) = c.max_amplitude_growth {
        out.check(
            "amplitude growth",
            s.amplitude_growth <= g,
            format!("{:.4} <= {g}", s.amplitude_growth),
        );
    }
    if let Some(g) = c.min_amplitude_growth {
        out.check(
            "amplitude growth",
            s.amplitude_growth > g,
            format!("{:.4} > {g}", s.amplitude_growth),
        );
    }
    Ok(out)
}

// -------------------------------------------------------------- spectrum

fn analyse(cfg: &Config, problem: &Problem, spec: &MeshSpec, dir: &Path, name: &str) -> Result<(Spectrum, f64)> {
    let sd = semidiscretization(problem, cfg.domain, spec)?;
    let w0 = sd.project(|x| (problem.initial)(x));
    let jac = sd.jacobian(0.0, &w0, 1e-7)?;
    let spec_out = spectrum(&jac)?;
    let mut csv = CsvFile::create(dir, name, "spectrum", &cols(&["re", "im"]))?;
    for &(re, im) in &spec_out.eigenvalues {
        csv.row(&[num(re), num(im)])?;
    }
    csv.finish()?;
    let sum: f64 = spec_out.eigenvalues.iter().map(|e| e.0).sum();
    let trace_defect = (jac.trace() - sum).abs() / jac.norm().max(1.0);
    Ok((spec_out, trace_defect))
}

pub fn spectrum_cmd(cfg: &Config, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let problem = cfg.problem()?;
    let spec = cfg.mesh.spec();
    let (s, defect) = analyse(cfg, &problem, &spec, dir, "spectrum.csv")?;
    let label = format!(
        "{} {}/{} d={}",
        coupling_name(spec.coupling),
        spec.n_u,
        spec.n_v,
        spec.degree
    );
    println!(
        "{label}: {} eigenvalues, spectral abscissa {:.3e}",
        s.eigenvalues.len(),
        s.abscissa
    );
    out.check(
        "trace identity",
        defect <= 1e-9,
        format!("relative defect {defect:.2e}"),
    );
    if let Some(tol) = cfg.checks.max_abscissa {
        out.check(
            "abscissa",
            s.abscissa <= tol,
            format!("{:.3e} <= {tol:.1e}", s.abscissa),
        );
    }
    let mut summary =
        vec![serde_json::json!({ "mesh": label, "abscissa": s.abscissa, "eigenvalues": s.eigenvalues.len() })];
    if let Some([nu, nv]) = cfg.spectrum.baseline_elements {
        let base = MeshSpec::new(nu, nv, spec.degree).baseline();
        let (b, defect) = analyse(cfg, &problem, &base, dir, "spectrum_baseline.csv")?;
        let label = format!("baseline {nu}/{nv} d={}", spec.degree);
        println!(
            "{label}: {} eigenvalues, spectral abscissa {:.3e}",
            b.eigenvalues.len(),
            b.abscissa
        );
        out.check(
            "baseline trace identity",
            defect <= 1e-9,
            format!("relative defect {defect:.2e}"),
        );
        if let Some(min) = cfg.checks.min_baseline_abscissa {
            out.check(
                "baseline abscissa",
                b.abscissa > min,
                format!("{:.3e} > {min:.1e}", b.abscissa),
            );
        }
        summary.push(serde_json::json!({ "mesh": label, "abscissa": b.abscissa, "eigenvalues": b.eigenvalues.len() }));
    }
    write_json(dir, "spectrum.json", &summary)?;
    Ok(out)
}

// -------------------------------------------------------- compare-fluxes

pub fn compare_fluxes(cfg: &Config, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let base = cfg.problem()?;
    let spec = cfg.mesh.spec();
    let it = &cfg.integrate;
    let mut table = CsvFile::create(
        dir,
        "compare_summary.csv",
        "compare-summary",
        &cols(&[
            "flux",
            "conservation_drift",
            "min_entropy_rate",
            "max_entropy_rate",
            "max_energy_rate",
        ]),
    )?;
    let mut results = Vec::new();
    for &flux in &cfg.compare.fluxes {
        let surface = match cfg.compare.switch {
            FluxSwitch::Both => flux,
            FluxSwitch::Subcell => base.surface_flux,
        };
        let problem = base.clone().with_fluxes(surface, flux);
        let sd = semidiscretization(&problem, cfg.domain, &spec)?;
        let res = run(&sd, &problem, it.t_final, it.tol, it.samples, it.stop_growth)?;
        write_diagnostics(dir, &format!("compare_{}.csv", flux.name()), &problem.law, &res.records)?;
        let range = res.entropy_rate_range();
        table.row(&[
            flux.name().to_string(),
            num(res.conservation_drift()),
            opt_num(range.map(|r| r.0)),
            opt_num(range.map(|r| r.1)),
            num(res.max_energy_rate()),
        ])?;
        print_summary(
            &format!(
                "{} (surface {}, sub-cell {})",
                problem.name,
                surface.name(),
                flux.name()
            ),
            &summarise(&problem, spec.coupling, &res),
        );
        out.check(
            format!("{} integration", flux.name()),
            res.failure.is_none(),
            res.failure.clone().unwrap_or_else(|| "completed".into()),
        );
        results.push((flux, res.conservation_drift(), range));
    }
    table.finish()?;

    let (ref_flux, ref_drift, ref_range) = results[0];
    let c = &cfg.checks;
    if let Some(tol) = c.max_conservation_drift {
        out.check(
            format!("{} conservation", ref_flux.name()),
            ref_drift <= tol,
            format!("{ref_drift:.3e} <= {tol:.1e}"),
        );
    }
    if let Some(tol) = c.max_entropy_rate {
        let hi = ref_range.map(|r| r.1);
        out.check(
            format!("{} entropy rate", ref_flux.name()),
            hi.is_some_and(|h| h <= tol),
            format!("{hi:?} <= {tol:.1e}"),
        );
    }
    for &(flux, drift, range) in &results[1..] {
        if let Some(ratio) = cfg.compare.min_drift_ratio {
            out.check(
                format!("{} drift ratio", flux.name()),
                drift >= ratio * ref_drift,
                format!("{drift:.3e} >= {ratio} x {ref_drift:.3e}"),
            );
        }
        if cfg.compare.expect_anti_dissipation {
            let hi = range.map(|r| r.1);
            out.check(
                format!("{} anti-dissipation", flux.name()),
                hi.is_some_and(|h| h > 0.0),
                format!("max dS/dt {hi:?} > 0"),
            );
        }
    }
    let json: Vec<_> = results
        .iter()
        .map(|(f, d, r)| serde_json::json!({ "flux": f.name(), "conservation_drift": d, "entropy_rate_range": r }))
        .collect();
    write_json(dir, "compare.json", &json)?;
    Ok(out)
}
