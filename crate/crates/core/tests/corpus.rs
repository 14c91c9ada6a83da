use std::path::PathBuf;

use ocs_core::control::{
    canonical_equations, check_regularity, hamiltonianize, pontryagin_function, solve_synthesis, HamiltonianSystem,
    Synthesis,
};
use ocs_core::expr::{is_zero, jacobian_rank, Expr, OneForm, Point, Symbol};
use ocs_core::factorization::{
    build_gbar, classify_boundary, reconstruct_qtilde, reduce, sample_canonical, sample_fibers, verify,
    verify_factorization_equation, verify_via_interior_product, Determinacy, FactorizationCandidate, Status,
    Symbolic, VerifyOptions,
};
use ocs_core::format::{parse_system_file, render_candidate, SystemFile};
use ocs_core::numeric::{
    conservation_drift, integrate, on_charts, sample_points, step_halving_ratio, SamplePlan, CHART_MARGIN,
};
use ocs_core::symplectic::{interior_product, lie_derivative_fn, lie_derivative_oneform, reconstruct_potential};

const FILES: [&str; 9] = [
    "e1.ocs",
    "e1_identity.ocs",
    "e1_negative.ocs",
    "e2.ocs",
    "e2_identity.ocs",
    "e3.ocs",
    "e3_identity.ocs",
    "e4.ocs",
    "e4_identity.ocs",
];

struct Loaded {
    text: String,
    file: SystemFile,
    synthesis: Synthesis,
    hs: HamiltonianSystem,
}

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn load_text(text: &str) -> Loaded {
    let file = parse_system_file(text).unwrap();
    let pd = pontryagin_function(&file.system);
    let synthesis = file.synthesis.clone().unwrap_or_else(|| solve_synthesis(&pd).unwrap());
    let hs = hamiltonianize(&file.system, &pd, &synthesis).unwrap();
    Loaded { text: text.to_string(), file, synthesis, hs }
}

fn load(name: &str) -> Loaded {
    load_text(&std::fs::read_to_string(path(name)).unwrap())
}

fn all() -> Vec<(&'static str, Loaded)> {
    FILES.iter().map(|f| (*f, load(f))).collect()
}

fn passing() -> Vec<(&'static str, Loaded, String)> {
    [
        ("e1.ocs", "reduce1"),
        ("e2.ocs", "reconstructed"),
        ("e4.ocs", "reduce1"),
        ("e1_identity.ocs", "identity"),
        ("e2_identity.ocs", "identity"),
        ("e3_identity.ocs", "identity"),
        ("e4_identity.ocs", "identity"),
    ]
    .into_iter()
    .map(|(f, c)| (f, load(f), c.to_string()))
    .collect()
}

fn ones(hs: &HamiltonianSystem) -> Point {
    let c = hs.coords();
    Point::from_slices(&c, &vec![1.0; c.len()])
}

#[test]
fn synthesis_is_stationary() {
    for (name, l) in all() {
        let pd = pontryagin_function(&l.file.system);
        let samples = sample_canonical(&l.hs, 50, 3).unwrap();
        for eq in &pd.stationarity {
            let at = eq.substitute(&l.synthesis.substitution()).unwrap();
            assert!(is_zero(&at, &samples).holds(), "{name}: {eq}");
        }
        for u in &l.file.system.controls {
            assert!(!l.hs.hamiltonian.depends_on(u), "{name}: H depends on {u}");
        }
    }
}

#[test]
fn hamiltonian_is_conserved_along_flows() {
    for (name, l) in all() {
        let coords = l.hs.coords();
        let rhs: Vec<Expr> = canonical_equations(&l.hs).into_iter().map(|(_, e)| e).collect();
        let tr = integrate(&coords, &rhs, &ones(&l.hs), 1.0, 1e-3, &l.hs.charts).unwrap();
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        let drift = conservation_drift(&l.hs.hamiltonian, &tr).unwrap();
        assert!(drift <= 1e-6, "{name}: {drift}");
    }
}

#[test]
fn regularity_at_documented_point() {
    let l = load("e4.ocs");
    let pt = Point::from_slices(&l.hs.coords(), &[1.0, 1.0, 0.0, 0.0]);
    let r = check_regularity(&l.hs, &pt, None).unwrap();
    assert_eq!(r.field, vec![0.0, 1.0, 1.0, 1.0]);
}

#[test]
fn cartan_relation_for_every_candidate() {
    for (name, l) in all() {
        let coords = l.hs.coords();
        let samples = sample_canonical(&l.hs, 50, 5).unwrap();
        for c in &l.file.candidates {
            let omega = c.two_form();
            let lhs = lie_derivative_oneform(&l.hs, &omega.primitive(&coords));
            let xyh: Expr = c.xs.iter().zip(&c.ys).map(|(x, y)| x * &lie_derivative_fn(&l.hs, y)).sum();
            let rhs = OneForm::exact(&xyh, &coords).sub(&interior_product(&l.hs, &omega));
            assert!(lhs.sub(&rhs).is_zero(&samples).holds(), "{name}/{}", c.name);
        }
    }
}

#[test]
fn both_factorization_routes_agree() {
    for (name, l) in all() {
        let samples = sample_canonical(&l.hs, 50, 11).unwrap();
        for c in &l.file.candidates {
            let qtilde = match &c.qtilde {
                Some(q) => q.clone(),
                None => match reconstruct_qtilde(&l.hs, c, &samples) {
                    Ok(q) => q,
                    Err(_) => continue,
                },
            };
            let a = verify_factorization_equation(&l.hs, c, &qtilde, &samples).verdict.holds();
            let b = verify_via_interior_product(&l.hs, c, &qtilde, &samples).verdict.holds();
            assert_eq!(a, b, "{name}/{}", c.name);
        }
    }
}

#[test]
fn reconstructed_potential_is_a_first_integral() {
    for (name, l) in all() {
        let coords = l.hs.coords();
        let samples = sample_canonical(&l.hs, 50, 13).unwrap();
        for c in &l.file.candidates {
            let ip = interior_product(&l.hs, &c.two_form());
            let Ok(g) = reconstruct_potential(&ip, &ones(&l.hs), &samples) else { continue };
            assert!(OneForm::exact(&g, &coords).sub(&ip).is_zero(&samples).holds(), "{name}/{}", c.name);
            assert!(is_zero(&lie_derivative_fn(&l.hs, &g), &samples).holds(), "{name}/{}", c.name);
        }
    }
}

#[test]
fn gbar_is_conserved_for_passing_candidates() {
    for (name, l, cand) in passing() {
        let c = l.file.candidate(&cand).unwrap();
        let samples = sample_canonical(&l.hs, 50, 17).unwrap();
        let qtilde = c.qtilde.clone().unwrap_or_else(|| reconstruct_qtilde(&l.hs, c, &samples).unwrap());
        let gbar = build_gbar(&l.hs, c, &qtilde);
        let coords = l.hs.coords();
        let rhs: Vec<Expr> = canonical_equations(&l.hs).into_iter().map(|(_, e)| e).collect();
        let tr = integrate(&coords, &rhs, &ones(&l.hs), 1.0, 1e-3, &l.hs.charts).unwrap();
        let d = conservation_drift(&gbar, &tr).unwrap();
        assert!(d <= 1e-6, "{name}/{cand}: {d}");
    }
}

#[test]
fn reports_respect_verdict_rules() {
    let opts = VerifyOptions::default();
    for (name, l) in all() {
        for c in &l.file.candidates {
            let r = verify(&l.hs, c, &opts).unwrap();
            let any_fail = r.checks.iter().any(|k| k.status.is_fail());
            assert_eq!(r.overall.is_fail(), any_fail, "{name}/{}", c.name);
            for k in &r.checks {
                if k.symbolic == Symbolic::Yes {
                    assert!(k.numeric_residual.unwrap_or(0.0) <= 1e-8, "{name}/{}: {}", c.name, k.name);
                }
                if k.symbolic == Symbolic::No {
                    assert!(k.numeric_residual.unwrap_or(0.0) >= 1e-4, "{name}/{}: {}", c.name, k.name);
                    assert_eq!(k.status, Status::Fail);
                }
            }
            let json = serde_json::to_value(&r).unwrap();
            for k in json["checks"].as_array().unwrap() {
                for field in ["name", "symbolic", "numeric_residual", "status"] {
                    assert!(k.get(field).is_some(), "{name}: check without {field}");
                }
            }
        }
    }
}

#[test]
fn reduced_candidates_reverify() {
    let opts = VerifyOptions::default();
    for (name, l, cand) in passing() {
        let c = l.file.candidate(&cand).unwrap();
        if c.nu() == l.hs.n() {
            continue;
        }
        let red = reduce(&l.hs, c, &opts).unwrap();
        let fs = &red.factor;
        assert!(fs.mu <= fs.nu);
        let plan = SamplePlan::new([fs.ys.clone(), fs.vs.clone()].concat(), vec![]).count(20).seed(1).bound(&fs.ys[0], 0.1, 2.0);
        let pts = sample_points(&plan).unwrap();
        assert_eq!(jacobian_rank(&fs.dynamics, &fs.vs, &pts).unwrap(), fs.mu, "{name}");

        let block = render_candidate("roundtrip", c, Some(&red.qtilde), fs);
        let again = load_text(&format!("{}\n{block}", l.text));
        let rc = again.file.candidate("roundtrip").unwrap();
        let r = verify(&again.hs, rc, &opts).unwrap();
        assert_eq!(r.overall, Status::Pass, "{name}: {r:#?}");
        for k in ["phi-related", "first-integral", "observability", "declared-factor-system"] {
            assert!(!r.check(k).unwrap().status.is_fail(), "{name}: {k}");
        }
    }
}

#[test]
fn boundary_verdict_is_seed_invariant() {
    for (file, cand) in [("e4.ocs", "reduce1"), ("e1.ocs", "reduce1"), ("e2.ocs", "reconstructed")] {
        let l = load(file);
        let c = l.file.candidate(cand).unwrap();
        let classes: Vec<Determinacy> = (0..10)
            .flat_map(|seed| {
                let (f, p) = sample_fibers(&l.hs, 5, 10, seed).unwrap();
                classify_boundary(c, &l.hs, &f, &p).unwrap().into_iter().map(|v| v.class)
            })
            .collect();
        assert!(classes.windows(2).all(|w| w[0] == w[1]), "{file}: {classes:?}");
    }
}

#[test]
fn identity_candidate_is_well_determined() {
    for f in ["e1.ocs", "e2.ocs", "e3.ocs", "e4.ocs"] {
        let l = load(f);
        let id = FactorizationCandidate::identity(&l.hs);
        let (fib, ps) = sample_fibers(&l.hs, 5, 10, 2).unwrap();
        for v in classify_boundary(&id, &l.hs, &fib, &ps).unwrap() {
            assert_eq!(v.class, Determinacy::WellDetermined, "{f}");
        }
    }
}

#[test]
fn step_halving_is_fourth_order() {
    for (f, h) in [("e1.ocs", 1e-3), ("e2.ocs", 0.05), ("e3.ocs", 0.05)] {
        let l = load(f);
        let coords = l.hs.coords();
        let rhs: Vec<Expr> = canonical_equations(&l.hs).into_iter().map(|(_, e)| e).collect();
        let r = step_halving_ratio(&coords, &rhs, &ones(&l.hs), 1.0, h, &l.hs.charts).unwrap();
        assert!((12.0..=20.0).contains(&r), "{f}: {r}");
    }
}

#[test]
fn samples_keep_chart_margin() {
    let l = load("e1.ocs");
    let pts = sample_canonical(&l.hs, 200, 9).unwrap();
    assert!(pts.iter().all(|p| on_charts(&l.hs.charts, p, CHART_MARGIN)));
    let q1 = Symbol::new("q1");
    let plan = SamplePlan::new(l.hs.coords(), l.hs.charts.clone()).count(5).bound(&q1, -2.0, -1.0);
    assert!(sample_points(&plan).is_err());
}
