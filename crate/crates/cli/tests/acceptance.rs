//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so every line is printed even when an earlier criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{Matrix2, Matrix4};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kahler_core::dombrowski::{self, Chart, TangentState};
use kahler_core::jacobi::{self, Generator, JacobiElement};
use kahler_core::kahler_functions::{self as kf, family_member, BundleMap, KahlerCandidate};
use kahler_core::manifold;
use kahler_core::report::{self, random_states, Settings, Status, Suite};
use kahler_core::schrodinger::{self as sch, ConventionFlags, LogGrid, SchrodingerParams};
use kahler_core::QuadratureSpec;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20240917;

fn states(n: usize, salt: u64) -> Vec<TangentState> {
    random_states(&mut ChaCha8Rng::seed_from_u64(SEED ^ salt), n)
}

fn st(a: f64, b: f64, c: f64, d: f64) -> TangentState {
    TangentState::new(a, b, c, d).unwrap()
}

fn gate(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs4(a: [f64; 4], b: [f64; 4]) -> f64 {
    (0..4).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

fn c01_fisher_quadrature() -> Outcome {
    let q = QuadratureSpec::new(40).map_err(|e| e.to_string())?;
    let (mut hess, mut cov) = (0.0f64, 0.0f64);
    for p in manifold::validation_grid() {
        let h = manifold::fisher_metric(&p);
        hess = hess.max((manifold::fisher_metric_oracle(&p, q).unwrap() - h).amax());
        cov = cov.max((manifold::score_covariance(&p, q).unwrap() - h).amax());
    }
    gate(
        hess <= 1e-8 && cov <= 1e-8,
        format!("-E[Hessian] dev {hess:.2e}, E[score score^T] dev {cov:.2e} (tol 1e-8, 20 points, order 40)"),
    )
}

fn c02_inverse() -> Outcome {
    let worst = manifold::validation_grid()
        .iter()
        .map(|p| {
            (manifold::fisher_metric(p) * manifold::inverse_metric(p) - Matrix2::identity()).amax()
        })
        .fold(0.0, f64::max);
    gate(
        worst <= 1e-12,
        format!("|h h^-1 - I| {worst:.2e} (tol 1e-12)"),
    )
}

fn c03_dual() -> Outcome {
    let (mut g, mut j) = (0.0f64, 0.0f64);
    for p in manifold::validation_grid() {
        let eta = manifold::dual_coordinates(&p).as_array();
        let fd = manifold::potential_gradient_fd(&p, 1e-4).unwrap();
        g = g.max((fd[0] - eta[0]).abs()).max((fd[1] - eta[1]).abs());
        j = j.max(
            (manifold::dual_jacobian_fd(&p, 1e-4).unwrap() - manifold::fisher_metric(&p)).amax(),
        );
    }
    gate(
        g <= 1e-6 && j <= 1e-6,
        format!("|eta - grad Phi| {g:.2e}, |D eta - h| {j:.2e} (tol 1e-6)"),
    )
}

fn c04_christoffel() -> Outcome {
    let q = QuadratureSpec::new(40).unwrap();
    let worst = manifold::validation_grid()
        .iter()
        .flat_map(|p| {
            manifold::christoffel_e(p, q)
                .unwrap()
                .into_iter()
                .flatten()
                .flatten()
        })
        .fold(0.0f64, |m, v| m.max(v.abs()));
    gate(worst <= 1e-8, format!("max |Gamma| {worst:.2e} (tol 1e-8)"))
}

fn c05a_axioms() -> Outcome {
    let id = Matrix4::<f64>::identity();
    let mut worst = [0.0f64; 4];
    for s in states(100, 5) {
        for chart in [Chart::Natural, Chart::Mixed] {
            let k = dombrowski::kahler(&s, chart);
            let r = [
                (k.j * k.j + id).amax(),
                (k.j.transpose() * k.g * k.j - k.g).amax(),
                (k.omega - k.j.transpose() * k.g).amax(),
                (k.omega + k.omega.transpose()).amax(),
            ];
            for i in 0..4 {
                worst[i] = worst[i].max(r[i]);
            }
        }
    }
    gate(
        worst.iter().all(|v| *v <= 1e-10),
        format!(
            "|J^2+I| {:.1e}, |J^T g J - g| {:.1e}, |omega - g(J.,.)| {:.1e}, |omega + omega^T| {:.1e} (tol 1e-10, 100 states x 2 charts)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c05b_literal_product() -> Outcome {
    let mut worst = 0.0f64;
    for s in states(100, 5) {
        for chart in [Chart::Natural, Chart::Mixed] {
            let k = dombrowski::kahler(&s, chart);
            worst = worst.max((k.omega - k.g * k.j).amax());
        }
    }
    gate(
        worst <= 1e-10,
        format!("|omega - g J| {worst:.3e} (tol 1e-10); the tabulated omega equals -gJ = J^T g"),
    )
}

fn c05c_det_omega() -> Outcome {
    let (mut quoted, mut exact) = (0.0f64, 0.0f64);
    for s in states(100, 5) {
        let det = dombrowski::kahler_natural(&s).omega.determinant();
        quoted = quoted.max((det / dombrowski::det_omega_quoted(s.theta()) - 1.0).abs());
        exact = exact.max((det / dombrowski::det_omega_natural(s.theta()) - 1.0).abs());
    }
    gate(
        quoted <= 1e-10,
        format!("relative dev from 1/(4 theta2^6) {quoted:.3e} (tol 1e-10); from det(h)^2 = 1/(16 theta2^6) {exact:.1e}"),
    )
}

fn c05d_closed() -> Outcome {
    let mut worst = 0.0f64;
    for s in states(100, 5) {
        for chart in [Chart::Natural, Chart::Mixed] {
            worst = worst.max(dombrowski::closedness_residual(&s, 1e-4, chart).unwrap());
        }
    }
    gate(worst <= 1e-6, format!("|d omega| {worst:.2e} (tol 1e-6)"))
}

fn c06_family() -> Outcome {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let pts = states(50, 6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..=2.0));
        let f = family_member(a);
        for s in &pts {
            let r = kf::kahler_pde_residual(&|x: &[f64; 4]| f.eval(x), s, 1e-3).unwrap();
            worst = r.iter().fold(worst, |m, v| m.max(v.abs()));
        }
    }
    let bad = KahlerCandidate::with_alpha9([0.0; 6], 1.0);
    let line4 = pts
        .iter()
        .map(|s| kf::kahler_pde_residual(&|x: &[f64; 4]| bad.eval(x), s, 1e-3).unwrap()[3])
        .fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    gate(
        worst <= 1e-7 && line4 <= 1e-7,
        format!(
            "family residual {worst:.2e} (tol 1e-7, 20 x 50); alpha9 line-4 |r - 1| {line4:.2e}"
        ),
    )
}

fn c07_fields() -> Outcome {
    let pts = states(100, 7);
    let mut worst = 0.0f64;
    for g in Generator::ALL {
        let l = JacobiElement::basis(g);
        let obs = jacobi::psi(l);
        for s in &pts {
            worst = worst.max(max_abs4(
                jacobi::hamiltonian_field(&obs, s),
                jacobi::closed_form_field(&l, s),
            ));
        }
    }
    gate(
        worst <= 1e-10,
        format!("|X_psi(L) - tabulated| {worst:.2e} (tol 1e-10, 6 x 100)"),
    )
}

fn c08_flows() -> Outcome {
    let p0 = st(1.0, -1.0, 0.0, 0.0);
    let g0 = st(1.0, -1.0, 0.0, 1.0);
    let flow = |g: Generator, s, len, h| jacobi::integrate_flow(g.into(), s, len, h).unwrap();
    let drift = jacobi::conservation_report(&flow(Generator::P, p0, 0.1, 1e-3))
        .unwrap()
        .max(jacobi::conservation_report(&flow(Generator::G, g0, 0.1, 1e-3)).unwrap());
    let (ratio, _, _) = jacobi::rk4_order_ratio(Generator::G.into(), g0, 0.1, 1e-2).unwrap();
    let symp = [Generator::Q, Generator::P, Generator::G]
        .into_iter()
        .map(|g| jacobi::symplecticity_residual(&flow(g, p0, 0.1, 1e-3), 1e-4).unwrap())
        .fold(0.0, f64::max);
    let end_q = max_abs4(
        flow(Generator::Q, p0, 1.0, 1e-3).last().unwrap().as_array(),
        [1.0, -1.0, 2.0, -2.0],
    );
    let end_h = max_abs4(
        flow(Generator::H, p0, 0.5, 1e-3).last().unwrap().as_array(),
        [1.0, -1.0, -2.0, 1.0],
    );
    gate(
        drift <= 1e-8 && (12.0..=20.0).contains(&ratio) && symp <= 1e-5 && end_q.max(end_h) <= 1e-10,
        format!(
            "drift {drift:.2e} (1e-8), RK4 ratio {ratio:.2} ([12,20]), symplectic {symp:.2e} (1e-5), endpoints {:.2e} (1e-10)",
            end_q.max(end_h)
        ),
    )
}

fn c09_quantization() -> Outcome {
    let grid = LogGrid::default();
    let s = st(0.0, -0.5, 0.0, 0.0);
    let disc = |g: Generator| sch::operator_discrepancy(&g.into(), &s, &grid).unwrap();
    let mult = [Generator::F, Generator::Q, Generator::R]
        .map(disc)
        .into_iter()
        .fold(0.0, f64::max);
    let order = sch::plane_wave_order(1.0, -4.0, 4.0, 33).unwrap();
    let deriv = [Generator::P, Generator::G, Generator::H].map(disc);
    let v = report::run_suite(Suite::Schrodinger, &Settings::default()).unwrap();
    let reported = v.iter().find(|x| x.claim == "eq22.deriv").unwrap();
    gate(
        mult <= 1e-10
            && (3.5..=4.5).contains(&order)
            && deriv.iter().all(|d| *d > 0.0)
            && reported.status == Status::Reported
            && reported.residual > 0.0,
        format!(
            "multiplication {mult:.1e} (1e-10), P order {order:.3} ([3.5,4.5]), REPORTED P/G/H {:.3e}/{:.3e}/{:.3e}",
            deriv[0], deriv[1], deriv[2]
        ),
    )
}

fn c10_evolution() -> Outcome {
    let grid = LogGrid::default();
    let start = st(1.0, -1.0, 0.0, 0.0);
    let mut cal = 0.0f64;
    let mut literal = 0.0f64;
    let lit = SchrodingerParams::default().with_flags(ConventionFlags::as_printed());
    for g in [Generator::F, Generator::Q, Generator::H] {
        let c = jacobi::integrate_flow(g.into(), start, 0.1, 1e-3).unwrap();
        cal = cal.max(
            sch::schrodinger_residual(&c, &grid, &SchrodingerParams::default())
                .unwrap()
                .max_reduced(),
        );
        literal = literal.max(
            sch::schrodinger_residual(&c, &grid, &lit)
                .unwrap()
                .max_reduced(),
        );
    }
    let p_curve = jacobi::integrate_flow(Generator::P.into(), start, 0.3, 1e-3).unwrap();
    let ev = sch::energy_variation(
        &p_curve,
        1.0,
        &SchrodingerParams::from_element(&Generator::P.into()),
    )
    .unwrap();
    gate(
        cal <= 1e-6 && ev.spread > 0.1,
        format!(
            "calibrated residual {cal:.2e} (1e-6); displayed-convention residual REPORTED {literal:.3e}; energy spread {:.3} (> 0.1, s in [0, 0.3])",
            ev.spread
        ),
    )
}

fn c11_translations() -> Outcome {
    let pts = states(20, 11);
    let mut fiber = 0.0f64;
    let mut holo = 0.0f64;
    for k in [[0.0; 4], [0.0, 0.0, 1.5, -2.0], [0.0, 0.0, -0.3, 0.7]] {
        let m = BundleMap::translation(k);
        for s in &pts {
            fiber = fiber
                .max(kf::isometry_residual(&m, s, 1e-5).unwrap())
                .max(kf::holomorphy_residual(&m, s, 1e-5).unwrap());
        }
    }
    let id = BundleMap::identity();
    for s in &pts {
        fiber = fiber.max(kf::isometry_residual(&id, s, 1e-5).unwrap());
    }
    let rep = kf::reproduce_translation_claim(
        &pts,
        &[[1.0, 0.0, 0.0, 0.0], [0.0, -0.5, 0.0, 0.0]],
        1e-5,
        1e-10,
    )
    .unwrap();
    holo = holo.max(rep.max_holomorphy());
    let base = rep.max_isometry_where(|_| true);
    let noted = rep.outcomes.iter().all(|o| o.note.is_some());
    let v = report::run_suite(Suite::IsometryCheck, &Settings::default()).unwrap();
    let iso = v.iter().find(|x| x.claim == "pro400.isometry").unwrap();
    gate(
        fiber <= 1e-10 && holo == 0.0 && base > 0.0 && noted && iso.status == Status::Reported && !iso.notes.is_empty(),
        format!("identity/fiber {fiber:.1e} (1e-10), holomorphy {holo:.1e}, base isometry REPORTED {base:.3e}"),
    )
}

fn c12_determinism() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_kahler"))
            .args(["report-all", "--seed", "7", "--out-dir"])
            .arg(dir.path())
            .env_remove("KAHLER_OUT_DIR")
            .output()
            .unwrap();
        let bytes = std::fs::read(dir.path().join("report-all.verdicts.json")).unwrap();
        (status.status.code(), bytes)
    };
    let (c1, a) = run();
    let (c2, b) = run();
    let doc: serde_json::Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    let claims: Vec<&str> = doc["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["claim"].as_str().unwrap())
        .collect();
    let missing: Vec<_> = report::REQUIRED_CLAIMS
        .iter()
        .filter(|c| !claims.contains(c))
        .collect();
    gate(
        a == b && missing.is_empty() && c1 == Some(0) && c2 == Some(0),
        format!(
            "identical bytes: {}, {} verdicts, missing {missing:?}, exit codes {c1:?}/{c2:?}",
            a == b,
            claims.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 15] = [
        ("01 Fisher metric vs quadrature", c01_fisher_quadrature),
        ("02 metric times inverse", c02_inverse),
        ("03 dual coordinates", c03_dual),
        ("04 e-connection Christoffels", c04_christoffel),
        ("05a Kähler axioms", c05a_axioms),
        ("05b omega equals literal gJ", c05b_literal_product),
        ("05c det omega = 1/(4 theta2^6)", c05c_det_omega),
        ("05d omega closed", c05d_closed),
        ("06 Kähler family system", c06_family),
        ("07 Hamiltonian fields", c07_fields),
        ("08 flow quality", c08_flows),
        ("09 quantization operators", c09_quantization),
        ("10 evolution residual", c10_evolution),
        ("11 translations", c11_translations),
        ("12 CLI determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.2}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{secs:.2}s]");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
