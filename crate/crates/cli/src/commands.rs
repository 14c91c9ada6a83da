use std::fmt::Write as _;
use std::path::Path;

use ocs_core::control::{
    canonical_equations, hamiltonianize, pontryagin_function, solve_synthesis, HamiltonianSystem,
};
use ocs_core::expr::{Expr, Point};
use ocs_core::factorization::{
    build_gbar, classify_boundary, declared_factor_hamiltonian, express_through_map, reconstruct_qtilde,
    reduce as reduce_candidate, sample_canonical, sample_fibers, verify as verify_candidate, Determinacy,
    FactorizationCandidate, ReduceError, VerificationReport, VerifyOptions,
};
use ocs_core::format::{parse_system_file, render_candidate, SystemFile};
use ocs_core::numeric::{conservation_drift, integrate, map_trajectory, residual_dynamics, NumericError};
use serde::Serialize;
use serde_json::json;

use crate::Common;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn failed(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type Outcome = Result<u8, Failure>;

struct Loaded {
    text: String,
    file: SystemFile,
    hs: HamiltonianSystem,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let file = parse_system_file(&text).map_err(|e| usage(format!("{}:{}:{}: {}", path.display(), e.line, e.col, e.message)))?;
    let pd = pontryagin_function(&file.system);
    let synthesis = match &file.synthesis {
        Some(s) => s.clone(),
        None => solve_synthesis(&pd).map_err(|e| failed(e.to_string()))?,
    };
    let hs = hamiltonianize(&file.system, &pd, &synthesis).map_err(|e| failed(e.to_string()))?;
    Ok(Loaded { text, file, hs })
}

fn pick<'a>(file: &'a SystemFile, name: Option<&str>) -> Result<&'a FactorizationCandidate, Failure> {
    let names = || file.candidates.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ");
    match name {
        Some(n) => file.candidate(n).ok_or_else(|| usage(format!("no candidate `{n}`; available: {}", names()))),
        None => match file.candidates.as_slice() {
            [c] => Ok(c),
            [] => Err(usage("the file has no candidate blocks")),
            _ => Err(usage(format!("several candidates; choose one with --candidate: {}", names()))),
        },
    }
}

fn options(c: &Common) -> VerifyOptions {
    VerifyOptions { samples: c.samples, seed: c.seed, tol: c.tol, horizon: c.horizon, step: c.h, trajectory: true }
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(v).map_err(|e| failed(e.to_string()))?;
    println!("{s}");
    Ok(())
}

pub fn parse(path: &Path, json: bool) -> Outcome {
    let Loaded { file, hs, .. } = load(path)?;
    let ls = &file.system;
    let synthesis = hs.synthesis().expect("pipeline attaches the synthesis");
    if json {
        print_json(&json!({
            "system": ls.name,
            "states": ls.states,
            "controls": ls.controls,
            "dynamics": ls.dynamics.iter().map(Expr::to_string).collect::<Vec<_>>(),
            "cost": ls.cost.to_string(),
            "charts": ls.charts.iter().map(Expr::to_string).collect::<Vec<_>>(),
            "synthesis": synthesis.values.iter().map(Expr::to_string).collect::<Vec<_>>(),
            "hamiltonian": hs.hamiltonian.to_string(),
            "candidates": file.candidates.iter().map(|c| json!({"name": c.name, "nu": c.nu()})).collect::<Vec<_>>(),
        }))?;
        return Ok(0);
    }
    let k = file.candidates.len();
    println!(
        "system {}: {} states, {} controls, {} candidate{}",
        ls.name,
        ls.n(),
        ls.m(),
        k,
        if k == 1 { "" } else { "s" }
    );
    for (q, f) in ls.states.iter().zip(&ls.dynamics) {
        println!("dyn {q}' = {f}");
    }
    println!("cost {}", ls.cost);
    for c in &ls.charts {
        println!("chart {c} > 0");
    }
    for (u, v) in synthesis.controls.iter().zip(&synthesis.values) {
        println!("synth {u} = {v}");
    }
    println!("# H = {}", hs.hamiltonian);
    for c in &file.candidates {
        println!("candidate {} (nu = {})", c.name, c.nu());
    }
    Ok(0)
}

fn render_report(r: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {}, candidate {} (nu = {})", r.system, r.candidate, r.nu);
    for c in &r.checks {
        let res = c.numeric_residual.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        let _ = write!(out, "  {:<24} {:<15} residual {:<9}", c.name, c.status.to_string(), res);
        if let Some(d) = &c.detail {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        if let Some(w) = &c.witness {
            let pts: Vec<String> = w.iter().map(|(s, v)| format!("{s}={v:.6}")).collect();
            let _ = writeln!(out, "  {:<24} witness {}", "", pts.join(" "));
        }
    }
    if let Some(q) = &r.qtilde {
        let tag = if r.qtilde_reconstructed { " (reconstructed)" } else { "" };
        let _ = writeln!(out, "qtilde = {q}{tag}");
    }
    if let Some(g) = &r.gbar {
        let _ = writeln!(out, "Gbar = {g}");
    }
    if let Some(g) = &r.g {
        let _ = writeln!(out, "G = {g}");
    }
    let _ = writeln!(out, "overall: {}", r.overall);
    out
}

pub fn verify(path: &Path, common: &Common) -> Outcome {
    let l = load(path)?;
    let c = pick(&l.file, common.candidate.as_deref())?;
    let report = verify_candidate(&l.hs, c, &options(common)).map_err(|e| failed(e.to_string()))?;
    if common.json {
        print_json(&report)?;
    } else {
        print!("{}", render_report(&report));
    }
    Ok(report.exit_code() as u8)
}

pub fn reduce(path: &Path, common: &Common, output: Option<&Path>) -> Outcome {
    let l = load(path)?;
    let c = pick(&l.file, common.candidate.as_deref())?;
    let red = match reduce_candidate(&l.hs, c, &options(common)) {
        Ok(r) => r,
        Err(ReduceError::Rejected(report)) => {
            if common.json {
                print_json(&report)?;
            } else {
                print!("{}", render_report(&report));
            }
            return Err(Failure { code: report.exit_code() as u8, message: "candidate did not pass verification".into() });
        }
        Err(ReduceError::Failed(e)) => return Err(failed(e.to_string())),
    };
    let fs = &red.factor;
    let block = render_candidate(&format!("{}_factor", c.name), c, Some(&red.qtilde), fs);
    if let Some(out) = output {
        let mut text = l.text.clone();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        text.push('\n');
        text.push_str(&block);
        std::fs::write(out, text).map_err(|e| failed(format!("{}: {e}", out.display())))?;
    }
    if common.json {
        print_json(&json!({
            "system": l.file.system.name,
            "candidate": c.name,
            "nu": fs.nu,
            "mu": fs.mu,
            "qtilde": red.qtilde.to_string(),
            "gbar": red.gbar.to_string(),
            "g": fs.g.to_string(),
            "synthesis": fs.vs.iter().zip(&fs.synthesis).map(|(v, e)| json!({"control": v, "value": e.to_string()})).collect::<Vec<_>>(),
            "dynamics": fs.ys.iter().zip(&fs.dynamics).map(|(y, f)| json!({"state": y, "rhs": f.to_string()})).collect::<Vec<_>>(),
            "cost": fs.cost.to_string(),
            "candidate_block": block,
        }))?;
        return Ok(0);
    }
    println!("factor system of {} via {} (nu = {}, mu = {})", l.file.system.name, c.name, fs.nu, fs.mu);
    println!("  G = {}", fs.g);
    for (v, e) in fs.vs.iter().zip(&fs.synthesis) {
        println!("  synthesis {v} = {e}");
    }
    for (y, f) in fs.ys.iter().zip(&fs.dynamics) {
        println!("  dyn {y}' = {f}");
    }
    println!("  cost {}", fs.cost);
    println!();
    print!("{block}");
    Ok(0)
}

fn parse_init(text: &str, hs: &HamiltonianSystem) -> Result<Point, Failure> {
    let coords = hs.coords();
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| usage(format!("--init: `{}`: {e}", s.trim()))))
        .collect::<Result<_, _>>()?;
    if vals.len() != coords.len() {
        let names: Vec<&str> = coords.iter().map(|s| s.name()).collect();
        return Err(usage(format!("--init needs {} values ({})", coords.len(), names.join(","))));
    }
    Ok(Point::from_slices(&coords, &vals))
}

fn fmt_point(p: &Point) -> String {
    p.iter().map(|(s, v)| format!("{s}={v:.9}")).collect::<Vec<_>>().join(" ")
}

pub fn simulate(path: &Path, common: &Common, init: Option<&str>) -> Outcome {
    let l = load(path)?;
    let hs = &l.hs;
    let coords = hs.coords();
    let z0 = match init {
        Some(t) => parse_init(t, hs)?,
        None => Point::from_slices(&coords, &vec![1.0; coords.len()]),
    };
    let rhs: Vec<Expr> = canonical_equations(hs).into_iter().map(|(_, e)| e).collect();
    let tr = integrate(&coords, &rhs, &z0, common.horizon, common.h, &hs.charts).map_err(|e| match e {
        NumericError::ChartExit { t, state } => failed(format!("chart exit at t = {t}: {}", fmt_point(&state))),
        other => failed(other.to_string()),
    })?;
    let num = |e: NumericError| failed(e.to_string());
    let drift_h = conservation_drift(&hs.hamiltonian, &tr).map_err(num)?;
    let mut result = json!({
        "system": l.file.system.name,
        "T": tr.horizon,
        "h": tr.step,
        "steps": tr.len() - 1,
        "start": tr.first(),
        "end": tr.last(),
        "drift_h": drift_h,
    });
    let candidate = if l.file.candidates.is_empty() && common.candidate.is_none() {
        None
    } else {
        Some(pick(&l.file, common.candidate.as_deref())?)
    };
    if let Some(c) = candidate {
        let samples = sample_canonical(hs, common.samples, common.seed).map_err(num)?;
        let qtilde = match &c.qtilde {
            Some(q) => Some(q.clone()),
            None => reconstruct_qtilde(hs, c, &samples).ok(),
        };
        result["candidate"] = json!(c.name);
        let mapped = map_trajectory(&c.maps(), &tr).map_err(num)?;
        result["mapped_start"] = json!(mapped.first());
        result["mapped_end"] = json!(mapped.last());
        if let Some(q) = qtilde {
            let gbar = build_gbar(hs, c, &q);
            result["drift_gbar"] = json!(conservation_drift(&gbar, &tr).map_err(num)?);
            let g = express_through_map(&gbar, c, hs, &samples)
                .ok()
                .or_else(|| c.declared.as_ref().and_then(|d| declared_factor_hamiltonian(d, c.nu()).ok()).map(|p| p.0));
            if let Some(g) = g {
                let factor = HamiltonianSystem::from_parts(c.x_symbols(), c.y_symbols(), g, vec![]);
                result["mapped_residual"] =
                    json!(residual_dynamics(&canonical_equations(&factor), &mapped).map_err(num)?);
            }
        }
    }
    if common.json {
        print_json(&result)?;
        return Ok(0);
    }
    println!("system {}: T = {}, h = {}, {} steps", l.file.system.name, tr.horizon, tr.step, tr.len() - 1);
    println!("  start {}", fmt_point(&tr.first()));
    println!("  end   {}", fmt_point(&tr.last()));
    println!("  drift(H)    = {drift_h:.3e}");
    if let Some(c) = candidate {
        println!("candidate {}", c.name);
        if let Some(d) = result.get("drift_gbar").and_then(|v| v.as_f64()) {
            println!("  drift(Gbar) = {d:.3e}");
        }
        if let Some(r) = result.get("mapped_residual").and_then(|v| v.as_f64()) {
            println!("  mapped residual = {r:.3e}");
        }
        let ms: Point = serde_json::from_value(result["mapped_start"].clone()).unwrap_or_default();
        let me: Point = serde_json::from_value(result["mapped_end"].clone()).unwrap_or_default();
        println!("  mapped start {}", fmt_point(&ms));
        println!("  mapped end   {}", fmt_point(&me));
    }
    Ok(0)
}

pub fn boundary(path: &Path, common: &Common, fibers: usize) -> Outcome {
    let l = load(path)?;
    let c = pick(&l.file, common.candidate.as_deref())?;
    let (fs, ps) = sample_fibers(&l.hs, fibers, 10, common.seed).map_err(|e| failed(e.to_string()))?;
    let verdicts = classify_boundary(c, &l.hs, &fs, &ps).map_err(|e| failed(e.to_string()))?;
    if common.json {
        print_json(&json!({"system": l.file.system.name, "candidate": c.name, "fibers": verdicts}))?;
        return Ok(0);
    }
    println!("system {}, candidate {} (nu = {})", l.file.system.name, c.name, c.nu());
    for v in &verdicts {
        println!("  {:<40} rank {}  {}", fmt_point(&v.fiber), v.rank, v.class);
    }
    for class in [Determinacy::OverDetermined, Determinacy::WellDetermined, Determinacy::UnderDetermined] {
        let k = verdicts.iter().filter(|v| v.class == class).count();
        if k > 0 {
            println!("{class} on {k}/{} fibers", verdicts.len());
        }
    }
    Ok(0)
}
