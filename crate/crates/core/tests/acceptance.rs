use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rtf_local::group::{convolve_double_cosets, satake_transform};
use rtf_local::orbital::{fw0_closed, fw0_series, sx_from_baby, o0_formula, o01_formula, o0kappa_formula, ou_formula};
use rtf_local::singular::g_eval_sx;
use rtf_local::*;
use std::io::Write;
use std::time::{Duration, Instant};

struct Outcome {
    id: u32,
    name: &'static str,
    error: f64,
    tolerance: f64,
    elapsed: Duration,
    budget: Duration,
    note: String,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.error <= self.tolerance && self.elapsed <= self.budget
    }

    fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<4} {:<34} max_error={:.3e} tol={:.0e} time={:.2}s budget={}s {}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.tolerance,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.note
        )
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn gauss<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_fn<R: Rng>(rng: &mut R, p: u32) -> BruhatFn {
    let lo = rng.gen_range(-2..=0);
    let level = rng.gen_range(lo + 1..=lo + 3);
    let n = (p as usize).pow((level - lo) as u32);
    let data: Vec<C64> = (0..n).map(|_| gauss(rng)).collect();
    BruhatFn::from_dense(p, lo, level, &data)
}

fn point(p: u32, v: i32, u: i64) -> PadicScalar {
    PadicScalar::new(p, v, u, 24)
}

fn run(id: u32, name: &'static str, tolerance: f64, budget_s: u64, body: impl FnOnce() -> (f64, String)) -> Outcome {
    let t0 = Instant::now();
    let (error, note) = body();
    Outcome { id, name, error, tolerance, elapsed: t0.elapsed(), budget: Duration::from_secs(budget_s), note }
}

fn fourier_involution() -> Outcome {
    run(1, "fourier involution", 1e-10, 5, || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut err: f64 = 0.0;
        for p in [3u32, 5, 7] {
            for _ in 0..200 {
                let f = random_fn(&mut rng, p);
                err = err.max(f.fourier().fourier().dist_sup(&f.reflect()));
            }
        }
        (err, "200 functions per prime".into())
    })
}

fn tate_functional_equation() -> Outcome {
    run(2, "tate functional equation", 1e-8, 10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = 3;
        let q = p as f64;
        let ts: Vec<C64> = (0..20).map(|k| C64::from_polar(0.45 + 0.01 * k as f64, 0.3 * k as f64 + 0.1)).collect();
        let mut err: f64 = 0.0;
        for (chi, kind) in [(MellinCharacter::Trivial, ExtKind::Split), (MellinCharacter::Trivial, ExtKind::Inert), (MellinCharacter::Eta, ExtKind::Inert)] {
            let g = gamma_factor(p, chi, kind).unwrap();
            for _ in 0..50 {
                let f = random_fn(&mut rng, p);
                let z = tate_zeta(&f, chi, kind);
                let zh = tate_zeta(&f.fourier(), chi, kind);
                for &t in &ts {
                    let lhs = g.eval(t).unwrap() * z.eval(t).unwrap();
                    let rhs = zh.eval(c(1.0 / q) / t).unwrap();
                    err = err.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
                }
            }
        }
        (err, "50 functions, 20 points, trivial and eta".into())
    })
}

/// Germ `a + b nu(v)` fitted at shells `v0, v0 + 1` and checked on two further shells and units.
fn deep_fit(kind: ExtKind, p: u32, v0: i32, f: impl Fn(&PadicScalar) -> C64) -> (C64, C64, f64) {
    let nu = |v: i32| match kind {
        ExtKind::Split => v as f64,
        ExtKind::Inert => if v % 2 == 0 { 1.0 } else { -1.0 },
    };
    let (f0, f1) = (f(&point(p, v0, 1)), f(&point(p, v0 + 1, 1)));
    let b = (f1 - f0) / (nu(v0 + 1) - nu(v0));
    let a = f0 - b * nu(v0);
    let mut res: f64 = 0.0;
    for v in v0..v0 + 4 {
        for u in [1i64, 2, p as i64 + 1] {
            res = res.max((f(&point(p, v, u)) - a - b * nu(v)).norm());
        }
    }
    (a, b, res)
}

fn baby_germs() -> Outcome {
    run(3, "baby germ formulas", 1e-9, 30, || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 3;
        let lnq = (p as f64).ln();
        let mut err: f64 = 0.0;
        for _ in 0..50 {
            let BabyInput::Split(phi) = BabyInput::random(&mut rng, p, ExtKind::Split) else { unreachable!() };
            let (a, b, res) = deep_fit(ExtKind::Split, p, 7, |x| o_baby_split(&phi, x).unwrap());
            err = err.max(res).max((b / lnq - o0_formula(&phi)).norm()).max((a - ou_formula(&phi).unwrap()).norm());
        }
        for _ in 0..50 {
            let phi = BabyInput::random(&mut rng, p, ExtKind::Inert);
            let (a, b, res) = deep_fit(ExtKind::Inert, p, 7, |x| o_baby_nonsplit(&phi, x).unwrap());
            err = err.max(res).max((a - o01_formula(&phi).unwrap()).norm()).max((b - o0kappa_formula(&phi).unwrap()).norm());
        }
        (err, "50 split, 50 nonsplit".into())
    })
}

fn fourier_baby() -> Outcome {
    run(4, "fourier of baby orbital integrals", 1e-9, 120, || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = 3;
        let mut err: f64 = 0.0;
        for i in 0..50 {
            let kind = if i % 2 == 0 { ExtKind::Split } else { ExtKind::Inert };
            let phi = BabyInput::random(&mut rng, p, kind);
            let hat = phi.fourier().unwrap();
            let f = sx_from_baby(&phi).unwrap();
            for v in -4..=4 {
                for u in [1i64, 2, 4] {
                    let x = point(p, v, u);
                    err = err.max((hat.orbital(&x).unwrap() - g_eval_sx(&f, &x).unwrap()).norm());
                }
            }
        }
        (err, "25 split, 25 nonsplit".into())
    })
}

fn kuznetsov_engines() -> Outcome {
    run(5, "kuznetsov direct vs closed", 1e-10, 60, || {
        let mut err: f64 = 0.0;
        for p in [3u32, 5] {
            for m in 0..=4u32 {
                for v in -4..=4 {
                    for u in [1i64, 2, p as i64 - 1] {
                        let x = point(p, v, u);
                        let d = o_kuz_direct(p, &KSection::basis(m), &KSection::basis(0), &x).unwrap();
                        err = err.max((d - o_kuz_closed(p, m, &x).unwrap()).norm());
                    }
                }
            }
        }
        (err, "m=0 branch confirmed".into())
    })
}

fn basic_kuznetsov_closed_form() -> Outcome {
    run(6, "basic kuznetsov closed form", 1e-8, 60, || {
        let mut err: f64 = 0.0;
        let p = 3;
        for kind in [ExtKind::Split, ExtKind::Inert] {
            for s in [1.0, 1.5] {
                for v in -4..=4 {
                    for u in [1i64, 2] {
                        let x = point(p, v, u);
                        let a = fw0_closed(p, kind, c(s), &x).unwrap();
                        let b = fw0_series(p, kind, c(s), &x).unwrap();
                        err = err.max((a - b).norm());
                    }
                }
            }
        }
        (err, "s = 1, 3/2".into())
    })
}

fn whittaker_unfolding() -> Outcome {
    run(7, "whittaker unfolding", 1e-8, 10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut err: f64 = 0.0;
        for _ in 0..20 {
            let r: f64 = rng.gen_range(0.8..1.25);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (lhs, rhs) = whittaker_unfolding_check(3, C64::from_polar(r, th), c(1.0)).unwrap();
            err = err.max((lhs - rhs).norm());
        }
        (err, "20 Satake parameters".into())
    })
}

fn matching() -> Outcome {
    run(8, "matching theorem", 1e-8, 300, || {
        let mut err: f64 = 0.0;
        for kind in [ExtKind::Split, ExtKind::Inert] {
            let r = verify_matching(3, kind, 50, 8, 1e-8).unwrap();
            err = err.max(r.max_error);
        }
        (err, "50 samples per kind".into())
    })
}

fn fundamental_lemma() -> Outcome {
    run(9, "fundamental lemma", 1e-8, 600, || {
        let mut err: f64 = 0.0;
        let mut literal = [0.0f64; 2];
        for p in [3u32, 5] {
            for kind in [ExtKind::Split, ExtKind::Inert] {
                let hs = [HeckeElt::basis(0), HeckeElt::basis(1), HeckeElt::basis(2), HeckeElt::double_coset(p, 1)];
                for h in &hs {
                    let r = verify_fl(p, kind, h, (-4, 4), 1e-8).unwrap();
                    err = err.max(r.max_error);
                    let k = (kind == ExtKind::Inert) as usize;
                    literal[k] = literal[k].max(r.literal_error);
                }
            }
        }
        (err, format!("untwisted error: split {:.1e}, inert {:.1e} (odd degree sign)", literal[0], literal[1]))
    })
}

fn satake_multiplicative() -> Outcome {
    run(10, "satake multiplicativity", 1e-9, 120, || {
        let p = 3;
        let mut err: f64 = 0.0;
        for m1 in 0..=3u32 {
            for m2 in 0..=3u32 {
                let conv = convolve_double_cosets(p, m1, m2).unwrap();
                let lhs = satake_transform(p, &conv).unwrap();
                let a = satake_transform(p, &[(m1, c(1.0))].into_iter().collect()).unwrap();
                let b = satake_transform(p, &[(m2, c(1.0))].into_iter().collect()).unwrap();
                err = err.max(lhs.dist(&a.mul(&b)));
            }
        }
        (err, "double cosets m <= 3".into())
    })
}

#[test]
fn acceptance() {
    let outcomes = vec![
        fourier_involution(),
        tate_functional_equation(),
        baby_germs(),
        fourier_baby(),
        kuznetsov_engines(),
        basic_kuznetsov_closed_form(),
        whittaker_unfolding(),
        matching(),
        fundamental_lemma(),
        satake_multiplicative(),
    ];
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        writeln!(err, "{}", o.line()).unwrap();
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass()).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
