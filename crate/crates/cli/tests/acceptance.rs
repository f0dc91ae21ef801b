//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use specconv::criteria::{check_cube_conditions, find_isolating_digit, scan_zero_set, CubeSpec};
use specconv::fixtures::*;
use specconv::fourier::{mu_n_hat, FourierTransform, GridSpec, MaskProductEvaluator, QFunction};
use specconv::gram::{empirical_cf, gram_matrix_int};
use specconv::hadamard::{check_pair, Mode};
use specconv::linalg::{operator_norm, q_int, IVec};
use specconv::measure::{build_mu_n, sample, DiscreteMeasure, DEFAULT_ATOM_CAP};
use specconv::pipeline::{certify_spectrality, Grade, PipelineParams, Strategy};
use specconv::spectrum::canonical_spectrum;
use specconv::system::{certify_cycle_contraction, ConvolutionSystem};
use specconv::types::{check_dd_membership, AdmissiblePair};
use specconv::IMatrix;

const NORM_TOL: f64 = 1e-9;
const Q_EXACT_TOL: f64 = 1e-10;
const Q_UPPER_SLACK: f64 = 1e-9;
const JP_Q_MIN: f64 = 0.99;
const EXAMPLE1_Q_MIN: f64 = 0.98;
const ZERO_HALF_TOL: f64 = 1e-12;
const JP_SCAN_TOL: f64 = 1e-6;
const MC_TOL: f64 = 0.02;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_admissibility() -> Outcome {
    let start = Instant::now();
    for p in [example1_p1(), example1_p2()] {
        let rep = check_pair(&p, Mode::Exact).map_err(|e| e.to_string())?;
        ensure(rep.admissible && rep.exact == Some(true), format!("{} not admissible", p.name))?;
    }
    let rep = check_pair(&cantor3_pair(), Mode::Exact).map_err(|e| e.to_string())?;
    ensure(!rep.admissible, "(3,{0,2},{0,1}) reported admissible")?;
    let t = start.elapsed().as_secs_f64();
    ensure(t < 1.0, format!("took {t:.2}s"))?;
    Ok(format!("exact verdicts true, true, false in {t:.3}s"))
}

fn c2_norms() -> Outcome {
    let a = operator_norm(&example1_p1().r().inverse().to_f64());
    let b = operator_norm(&example1_p2().r().inverse().to_f64());
    let ea = (a - (1.0 + 5f64.sqrt()) / 8.0).abs();
    let eb = (b - 2f64.sqrt() / 6.0).abs();
    ensure(ea < NORM_TOL && eb < NORM_TOL, format!("errors {ea:e} {eb:e}"))?;
    Ok(format!("errors {ea:.1e}, {eb:.1e} (tol {NORM_TOL:e})"))
}

fn example1_words() -> Vec<Vec<usize>> {
    vec![
        vec![0],
        vec![1],
        vec![0, 1],
        vec![1, 0],
        vec![0, 0],
        vec![1, 1],
        vec![0, 1, 0],
        vec![1, 1, 0],
        vec![0, 1, 0, 1],
        vec![1, 0, 0, 1],
    ]
}

fn c3_gram() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut systems: Vec<(ConvolutionSystem, usize)> = example1_words()
        .into_iter()
        .map(|w| {
            let n = w.len();
            (example1_word(&w), n)
        })
        .collect();
    systems.extend((1..=6).map(|n| (jp(), n)));
    for (sys, n) in systems {
        let mu = build_mu_n(&sys, n, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
        let lambda = canonical_spectrum(&sys, n).map_err(|e| e.to_string())?;
        let rep = gram_matrix_int(&mu, &lambda, false).map_err(|e| e.to_string())?;
        ensure(rep.exact && rep.identity, format!("Gram not identity at depth {n}"))?;
        checked += 1;
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 30.0, format!("took {t:.1}s"))?;
    Ok(format!("{checked} exact identities in {t:.2}s"))
}

fn c4_q_exact() -> Outcome {
    let fixtures: Vec<(&str, ConvolutionSystem, usize)> = vec![
        ("jp", jp(), 5),
        ("example1", example1_alternating(), 3),
        ("example2", example2_prefix(4), 4),
    ];
    let mut worst: f64 = 0.0;
    for (name, sys, n) in fixtures {
        let ev = MaskProductEvaluator::new(&sys, n).map_err(|e| e.to_string())?;
        let lambda = canonical_spectrum(&sys, n).map_err(|e| e.to_string())?;
        let q = QFunction::new(&ev, &lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let xi: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let err = (q.value(&xi) - 1.0).abs();
            worst = worst.max(err);
            ensure(err < Q_EXACT_TOL, format!("{name}: |Q - 1| = {err:e} at {xi:?}"))?;
        }
    }
    Ok(format!("max |Q - 1| = {worst:.1e} over 300 points (tol {Q_EXACT_TOL:e})"))
}

fn c5_partial_sums() -> Outcome {
    let fixtures: Vec<(&str, ConvolutionSystem)> = vec![("jp", jp()), ("example1", example1_alternating())];
    let mut max_q: f64 = 0.0;
    for (name, sys) in fixtures {
        let ev = MaskProductEvaluator::new(&sys, 40).map_err(|e| e.to_string())?;
        let lambda = canonical_spectrum(&sys, 4).map_err(|e| e.to_string())?;
        let sizes: Vec<usize> = (1..=4)
            .map(|n| canonical_spectrum(&sys, n).map(|l| l.len()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let q = QFunction::new(&ev, &lambda);
        let grid = GridSpec::unit(sys.dim(), 64).map_err(|e| e.to_string())?;
        let bad: Vec<String> = (0..grid.len())
            .into_par_iter()
            .filter_map(|i| {
                let x = grid.point(i);
                let v = q.nested_values(&x, &sizes);
                let ok = v.iter().all(|&s| (0.0..=1.0 + Q_UPPER_SLACK).contains(&s)) && v.windows(2).all(|w| w[1] >= w[0]);
                (!ok).then(|| format!("{name} at {x:?}: {v:?}"))
            })
            .collect();
        ensure(bad.is_empty(), bad.first().cloned().unwrap_or_default())?;
        let m = (0..grid.len())
            .into_par_iter()
            .map(|i| q.nested_values(&grid.point(i), &sizes)[3])
            .reduce(|| 0.0, f64::max);
        max_q = max_q.max(m);
    }
    Ok(format!("bounded and nondecreasing for n = 1..4; max Q = {max_q:.12}"))
}

fn q_min_centered(sys: &ConvolutionSystem, depth: usize, res: usize) -> Result<f64, String> {
    let ev = MaskProductEvaluator::new(sys, 40).map_err(|e| e.to_string())?;
    let lambda = canonical_spectrum(sys, depth).map_err(|e| e.to_string())?;
    let q = QFunction::new(&ev, &lambda);
    let grid = GridSpec::centered(sys.dim(), res).map_err(|e| e.to_string())?;
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| q.value(&grid.point(i)))
        .reduce(|| f64::INFINITY, f64::min))
}

fn c6_completeness() -> Outcome {
    let jp_min = q_min_centered(&jp(), 6, 256)?;
    let ex_min = q_min_centered(&example1_alternating(), 4, 64)?;
    ensure(jp_min >= JP_Q_MIN, format!("jp min Q = {jp_min}"))?;
    ensure(ex_min >= EXAMPLE1_Q_MIN, format!("example1 min Q = {ex_min}"))?;
    Ok(format!(
        "jp Λ_6 min Q = {jp_min:.5} (>= {JP_Q_MIN}); example1 depth 4 min Q = {ex_min:.5} (>= {EXAMPLE1_Q_MIN}); centered cell"
    ))
}

fn c7_cube() -> Outcome {
    let sys = example1_alternating();
    let power = certify_cycle_contraction(&sys, 16).ok_or("no contraction certificate")?;
    let rep = check_cube_conditions(&sys, &CubeSpec::unit(2), None).map_err(|e| e.to_string())?;
    ensure(rep.holds(), "example 1 cube conditions fail")?;
    let d = rep.distinguished.clone().expect("distinguished");
    let p1 = AdmissiblePair::from_raw(
        "p1",
        &[vec![4, 0], vec![4, -4]],
        &[vec![2, 0], vec![3, 0], vec![2, 1], vec![3, 1], vec![7, 0]],
        None,
    )
    .map_err(|e| e.to_string())?;
    let bad = ConvolutionSystem::from_names(vec![p1, example1_p2()], &[], &["p1", "p2"]).map_err(|e| e.to_string())?;
    let rep = check_cube_conditions(&bad, &CubeSpec::unit(2), None).map_err(|e| e.to_string())?;
    ensure(!rep.all_contained, "perturbed digit set passes containment")?;
    Ok(format!(
        "(i) exact at cycle power {power}; (ii) holds; (iii) pair {} digit {:?}; B_1 ∪ {{(7,0)}} fails (ii)",
        d.name, d.digit
    ))
}

fn dd_cases(d: usize) -> Vec<(IVec, Vec<IVec>)> {
    let mut out = Vec::new();
    for m in lattice_box(d, 5).into_iter().filter(|m| m.iter().all(|&x| x >= d as i64 + 1)) {
        let pts: Vec<IVec> = lattice_box(d, 4)
            .into_iter()
            .filter(|v| v.iter().zip(&m).all(|(&x, &mi)| x >= 0 && x < mi) && v.iter().any(|&x| x != 0))
            .collect();
        let zero = vec![0; d];
        let n = pts.len();
        out.push((m.clone(), vec![zero.clone()]));
        for i in 0..n {
            out.push((m.clone(), vec![zero.clone(), pts[i].clone()]));
            for j in i + 1..n {
                out.push((m.clone(), vec![zero.clone(), pts[i].clone(), pts[j].clone()]));
                for k in j + 1..n {
                    out.push((m.clone(), vec![zero.clone(), pts[i].clone(), pts[j].clone(), pts[k].clone()]));
                }
            }
        }
    }
    out
}

fn c8_dd_chain() -> Outcome {
    let start = Instant::now();
    let rep = certify_spectrality(&example2_prefix(6), Strategy::Dd, &PipelineParams::default()).map_err(|e| e.to_string())?;
    ensure(
        rep.hypotheses.iter().all(|r| r.grade == Grade::Pass),
        format!("example 2 hypotheses:\n{}", rep.render_text()),
    )?;
    let digit = find_isolating_digit(&IMatrix::diag(&[3, 3]), &[vec![0, 0], vec![0, 1], vec![1, 0]]).map_err(|e| e.to_string())?;
    ensure(digit == Some(vec![0, 0]), format!("isolating digit {digit:?}"))?;
    let mut total = 0;
    for d in 1..=3 {
        let cases = dd_cases(d);
        total += cases.len();
        let missing = cases.par_iter().find_any(|(m, b)| {
            let r = IMatrix::diag(m);
            !check_dd_membership(&r, b) || !matches!(find_isolating_digit(&r, b), Ok(Some(_)))
        });
        if let Some((m, b)) = missing {
            return Err(format!("no isolating digit for diag{m:?}, B = {b:?}"));
        }
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 120.0, format!("took {t:.1}s"))?;
    Ok(format!("example 2 prefix passes; digit (0,0); {total} exhaustive cases (d <= 3) in {t:.1}s"))
}

fn c9_zero_set() -> Outcome {
    let two = DiscreteMeasure::uniform(vec![vec![q_int(0)], vec![q_int(1)]]).map_err(|e| e.to_string())?;
    let rep = scan_zero_set(&two, &GridSpec::unit(1, 64).map_err(|e| e.to_string())?, 8, ZERO_HALF_TOL, None);
    let xs: Vec<f64> = rep.candidates.iter().map(|c| c.0[0]).collect();
    ensure(xs == vec![0.5], format!("candidates {xs:?}"))?;
    let worst = (-8..=8)
        .map(|k| two.eval(&[0.5 + k as f64]).norm())
        .fold(0.0, f64::max);
    ensure(worst < ZERO_HALF_TOL, format!("max |μ̂(1/2 + k)| = {worst:e}"))?;
    let ev = MaskProductEvaluator::new(&jp(), 40).map_err(|e| e.to_string())?;
    let rep = scan_zero_set(&ev, &GridSpec::unit(1, 1024).map_err(|e| e.to_string())?, 8, JP_SCAN_TOL, Some(40));
    ensure(rep.candidates.is_empty(), format!("jp candidates {:?}", rep.candidates))?;
    Ok(format!(
        "½δ_0+½δ_1 finds x = 1/2 (max {worst:.1e}); jp none at K 8 tol {JP_SCAN_TOL:e} T 40 grid 1024"
    ))
}

fn c10_monte_carlo() -> Outcome {
    let xis: Vec<Vec<f64>> = (0..10).map(|i| vec![0.37 * i as f64 - 1.3, 0.21 * i as f64 + 0.4]).collect();
    let mut worst: f64 = 0.0;
    for (name, sys) in [("jp", jp()), ("example1", example1_alternating())] {
        for seed in 1..=5u64 {
            let pts = sample(&sys, 8, 100_000, seed).map_err(|e| e.to_string())?;
            for xi in &xis {
                let xi = &xi[..sys.dim()];
                let emp: Complex64 = empirical_cf(&pts, xi).map_err(|e| e.to_string())?;
                let exact = mu_n_hat(&sys, 8, xi).map_err(|e| e.to_string())?;
                let err = (emp - exact).norm();
                worst = worst.max(err);
                ensure(err < MC_TOL, format!("{name} seed {seed} xi {xi:?}: error {err}"))?;
            }
        }
    }
    Ok(format!("max error {worst:.4} (tol {MC_TOL}) over 2 fixtures, 5 seeds, 10 frequencies"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(threads: usize, args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_specconv"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.code() == Some(0) || status.code() == Some(2), format!("{args:?} exited with {status}"))?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = configs_dir();
    let ex1 = cfg.join("example1.json");
    let jpc = cfg.join("jp.json");
    let (ex1, jpc) = (ex1.to_str().unwrap(), jpc.to_str().unwrap());
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("sample.csv", vec!["sample", ex1, "--depth", "8", "--count", "2000", "--seed", "11"]),
        ("build.csv", vec!["build", ex1, "--depth", "3"]),
        ("render.pgm", vec!["render", ex1, "--quantity", "Q", "--depth", "3", "--res", "48"]),
        ("render5.pgm", vec!["render", jpc, "--quantity", "muhat2", "--res", "512", "--binary"]),
        ("zeros.csv", vec!["zeroscan", jpc, "--grid", "128", "--lattice", "4"]),
        ("equipos.csv", vec!["equipos", ex1, "--tails", "0,1", "--grid", "16", "--depth", "20"]),
    ];
    for (file, args) in &runs {
        let mut outputs = Vec::new();
        for threads in [1, 3, 8] {
            let path = dir.path().join(format!("{threads}-{file}"));
            outputs.push(run_cli(threads, args, &path)?);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), format!("{file} differs across thread counts"))?;
    }
    Ok(format!("{} commands byte-identical at 1, 3 and 8 threads", runs.len()))
}

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "admissibility fixtures", c1_admissibility),
        (2, "operator norms", c2_norms),
        (3, "Gram exactness", c3_gram),
        (4, "criterion consistency", c4_q_exact),
        (5, "partial-sum bound", c5_partial_sums),
        (6, "completeness evidence", c6_completeness),
        (7, "cube checker", c7_cube),
        (8, "diagonal-class chain", c8_dd_chain),
        (9, "zero-set evidence", c9_zero_set),
        (10, "Monte Carlo consistency", c10_monte_carlo),
        (11, "determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        match f() {
            Ok(msg) => println!("PASS criterion {n:>2} ({name}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {n:>2} ({name}): {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
