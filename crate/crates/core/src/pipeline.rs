//! End-to-end certification runs and the hypothesis table.
//!
//! Grades: PASS for exact checks, EVIDENCE for grid or truncated numerics,
//! FAIL otherwise. A run's verdict is the lowest grade among its hypothesis
//! rows; numeric diagnostics (Gram and Q checks on a finite level) can only
//! lower it to FAIL.

use std::fmt;
use std::str::FromStr;

use crate::criteria::{
    check_cube_conditions, estimate_equipositivity, find_isolating_digit, recurring_indices, scan_zero_set, CubeSpec,
    EquiPositivityParams,
};
use crate::error::{Error, Result};
use crate::fourier::{GridSpec, MaskProductEvaluator};
use crate::hadamard::{check_pair, find_spectra, Mode};
use crate::linalg::{IVec, QVec};
use crate::output::{fmt_f64, fmt_ivec, CsvTable};
use crate::spectrum::{canonical_spectrum, corrected_spectrum, verify_lambda, verify_level, CorrectionParams, LevelDepths, LevelReport};
use crate::system::{certify_cycle_contraction, contraction_norms, ConvolutionSystem};
use crate::types::checked_count_product;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grade {
    Fail,
    Evidence,
    Pass,
}

impl Grade {
    pub fn label(self) -> &'static str {
        match self {
            Grade::Fail => "FAIL",
            Grade::Evidence => "EVIDENCE",
            Grade::Pass => "PASS",
        }
    }

    /// 0 = PASS, 1 = FAIL, 2 = EVIDENCE.
    pub fn exit_code(self) -> i32 {
        match self {
            Grade::Pass => 0,
            Grade::Fail => 1,
            Grade::Evidence => 2,
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Cube,
    Dd,
    EquiPositivity,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Strategy::Cube),
            "dd" => Ok(Strategy::Dd),
            "equipos" => Ok(Strategy::EquiPositivity),
            _ => Err(Error::InvalidParameter(format!("unknown strategy `{s}` (cube, dd, equipos)"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cube => "cube",
            Strategy::Dd => "dd",
            Strategy::EquiPositivity => "equipos",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub stage: String,
    pub check: String,
    pub grade: Grade,
    pub detail: String,
}

fn row(stage: &str, check: &str, grade: Grade, detail: impl Into<String>) -> Row {
    Row {
        stage: stage.into(),
        check: check.into(),
        grade,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub cube_t0: Option<QVec>,
    pub distinguished: Option<(String, IVec)>,
    pub contraction_power: usize,
    pub contraction_depth: usize,
    /// Depth of the canonical level checked; `None` picks the largest depth
    /// up to 6 with at most `max_level_size` frequencies.
    pub spectrum_depth: Option<usize>,
    pub max_level_size: usize,
    pub corrected: Option<(LevelDepths, CorrectionParams)>,
    pub grid_res: usize,
    pub truncation: usize,
    pub q_threshold: f64,
    pub tails: Vec<usize>,
    pub equipos: EquiPositivityParams,
    pub zero_lattice: i64,
    pub zero_tol: f64,
    pub zero_grid: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            cube_t0: None,
            distinguished: None,
            contraction_power: 64,
            contraction_depth: 12,
            spectrum_depth: None,
            max_level_size: 512,
            corrected: None,
            grid_res: 32,
            truncation: 40,
            q_threshold: 0.98,
            tails: vec![0],
            equipos: EquiPositivityParams {
                grid_res: 64,
                ..Default::default()
            },
            zero_lattice: 8,
            zero_tol: 1e-6,
            zero_grid: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub strategy: Strategy,
    pub hypotheses: Vec<Row>,
    pub diagnostics: Vec<Row>,
    pub level: Option<LevelReport>,
    pub verdict: Grade,
}

impl CertificationReport {
    pub fn render_text(&self) -> String {
        let mut out = format!("strategy: {}\n", self.strategy);
        for (title, rows) in [("hypotheses", &self.hypotheses), ("diagnostics", &self.diagnostics)] {
            out.push_str(&format!("{title}:\n"));
            for r in rows.iter() {
                out.push_str(&format!("  [{}] {} / {}: {}\n", r.grade, r.stage, r.check, r.detail));
            }
        }
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }

    pub fn csv(&self) -> String {
        let mut t = CsvTable::new(&["kind", "stage", "check", "grade", "detail"]);
        t.meta("strategy", self.strategy).meta("verdict", self.verdict);
        for (kind, rows) in [("hypothesis", &self.hypotheses), ("diagnostic", &self.diagnostics)] {
            for r in rows.iter() {
                t.push(vec![
                    kind.into(),
                    csv_field(&r.stage),
                    csv_field(&r.check),
                    r.grade.label().into(),
                    csv_field(&r.detail),
                ]);
            }
        }
        t.render()
    }
}

fn csv_field(s: &str) -> String {
    s.replace(',', ";")
}

/// Every used pair with a verified spectrum attached. A pair without `L`
/// gets the first spectrum found by search.
pub fn with_verified_spectra(system: &ConvolutionSystem) -> Result<(ConvolutionSystem, Vec<Row>)> {
    let mut menu = system.menu().to_vec();
    let mut rows = Vec::new();
    for i in system.used_indices() {
        let pair = &menu[i];
        let name = pair.name.clone();
        let (ok, note) = match pair.l() {
            Some(_) => (check_pair(pair, Mode::Exact)?.admissible, "attached spectrum".to_string()),
            None => match find_spectra(pair.r(), pair.b().digits(), 1)?.into_iter().next() {
                Some(l) => {
                    let detail = format!("spectrum found by search: {}", l.iter().map(|v| fmt_ivec(v)).collect::<Vec<_>>().join("; "));
                    menu[i] = pair.with_spectrum(l)?;
                    (true, detail)
                }
                None => (false, "no spectrum among residues".to_string()),
            },
        };
        if !ok {
            return Err(Error::NotAdmissible(name));
        }
        rows.push(row("admissibility", &name, Grade::Pass, format!("exact; {note}")));
    }
    let sys = ConvolutionSystem::new(menu, system.prefix().to_vec(), system.cycle().to_vec())?;
    Ok((sys, rows))
}

fn all_dd(system: &ConvolutionSystem) -> bool {
    system.used_indices().iter().all(|&i| system.menu()[i].in_dd_class())
}

fn contraction_row(system: &ConvolutionSystem, params: &PipelineParams) -> Result<Row> {
    const STAGE: &str = "contraction";
    const CHECK: &str = "inverse products tend to 0";
    if all_dd(system) {
        return Ok(row(STAGE, CHECK, Grade::Pass, "diagonal entries >= 2 give norm <= 2^-n"));
    }
    if !system.is_finite() {
        return Ok(match certify_cycle_contraction(system, params.contraction_power) {
            Some(k) => row(STAGE, CHECK, Grade::Pass, format!("cycle inverse product P has |P^{k}|_F < 1 (exact)")),
            None => row(
                STAGE,
                CHECK,
                Grade::Fail,
                format!("no power up to {} of the cycle inverse product has Frobenius norm < 1", params.contraction_power),
            ),
        });
    }
    let depth = system.max_depth().unwrap_or(0).min(params.contraction_depth);
    if depth == 0 {
        return Ok(row(STAGE, CHECK, Grade::Fail, "empty word"));
    }
    let rep = contraction_norms(system, depth, 1.0)?;
    let decreasing = rep.norms.windows(2).all(|w| w[1] <= w[0]);
    let last = *rep.norms.last().expect("nonempty");
    let grade = if decreasing && last < 1.0 { Grade::Evidence } else { Grade::Fail };
    Ok(row(STAGE, CHECK, grade, format!("finite word; norm at depth {depth} = {}", fmt_f64(last))))
}

fn cube_rows(system: &ConvolutionSystem, params: &PipelineParams) -> Result<Vec<Row>> {
    let cube = match &params.cube_t0 {
        Some(t0) => CubeSpec { t0: t0.clone() },
        None => CubeSpec::unit(system.dim()),
    };
    let dist = params.distinguished.as_ref().map(|(n, b)| (n.as_str(), b.as_slice()));
    let rep = check_cube_conditions(system, &cube, dist)?;
    let mut rows = Vec::new();
    let contained = match rep.containment.iter().find(|c| !c.contained) {
        None => row("cube", "every image inside the cube", Grade::Pass, "exact vertex check"),
        Some(c) => row(
            "cube",
            "every image inside the cube",
            Grade::Fail,
            format!("pair {} digit ({}) maps outside", c.name, fmt_ivec(c.failing_digit.as_deref().unwrap_or(&[]))),
        ),
    };
    rows.push(contained);
    let strict = match &rep.distinguished {
        Some(d) if d.strictly_inside && d.recurs => row(
            "cube",
            "recurring pair maps a digit into the interior",
            Grade::Pass,
            format!("pair {} digit ({})", d.name, fmt_ivec(&d.digit)),
        ),
        Some(d) => row(
            "cube",
            "recurring pair maps a digit into the interior",
            Grade::Fail,
            format!(
                "pair {} digit ({}): interior {} recurring {}",
                d.name,
                fmt_ivec(&d.digit),
                d.strictly_inside,
                d.recurs
            ),
        ),
        None => row(
            "cube",
            "recurring pair maps a digit into the interior",
            Grade::Fail,
            "no recurring pair has a digit mapped into the interior",
        ),
    };
    rows.push(strict);
    Ok(rows)
}

fn large_recurring_pair(system: &ConvolutionSystem) -> Option<usize> {
    let d = system.dim() as i64;
    recurring_indices(system).into_iter().find(|&i| {
        let p = &system.menu()[i];
        p.in_dd_class() && p.r().matrix().diagonal().iter().all(|&m| m >= d + 1)
    })
}

fn dd_rows(system: &ConvolutionSystem) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let outside: Vec<String> = system
        .used_indices()
        .into_iter()
        .filter(|&i| !system.menu()[i].in_dd_class())
        .map(|i| system.menu()[i].name.clone())
        .collect();
    if outside.is_empty() {
        rows.push(row("diagonal", "every pair in the diagonal digit-box class", Grade::Pass, "exact"));
    } else {
        rows.push(row(
            "diagonal",
            "every pair in the diagonal digit-box class",
            Grade::Fail,
            format!("outside the class: {}", outside.join(" ")),
        ));
        return Ok(rows);
    }
    match large_recurring_pair(system) {
        Some(i) => {
            let p = &system.menu()[i];
            rows.push(row(
                "diagonal",
                "recurring pair with diagonal entries >= d+1",
                Grade::Pass,
                format!("pair {} diag({})", p.name, fmt_ivec(&p.r().matrix().diagonal())),
            ));
            let digit = find_isolating_digit(p.r().matrix(), p.b().digits())?;
            rows.push(match digit {
                Some(b) => row("diagonal", "isolating digit", Grade::Pass, format!("({}) of pair {}", fmt_ivec(&b), p.name)),
                None => row(
                    "diagonal",
                    "isolating digit",
                    Grade::Evidence,
                    "none against the cover R^-1 B + R^-1 [0;1]^d; the cover is a superset of the support so this does not refute",
                ),
            });
        }
        None => rows.push(bounded_menu_row(system)),
    }
    Ok(rows)
}

fn bounded_menu_row(system: &ConvolutionSystem) -> Row {
    const CHECK: &str = "bounded matrix norms over the word";
    if !all_dd(system) {
        row("diagonal", CHECK, Grade::Fail, "a pair is outside the diagonal digit-box class")
    } else if system.is_finite() {
        row("diagonal", CHECK, Grade::Fail, "not determined by finite prefix")
    } else {
        row("diagonal", CHECK, Grade::Pass, "eventually periodic word over a finite menu")
    }
}

fn equipos_rows(system: &ConvolutionSystem, params: &PipelineParams) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &n in &params.tails {
        let check = format!("equi-positive tail {n}");
        let room = system.max_depth().map_or(usize::MAX, |m| m.saturating_sub(n));
        let mut ep = params.equipos.clone();
        ep.tail_depth = ep.tail_depth.min(room);
        if ep.tail_depth == 0 {
            rows.push(row("equi-positivity", &check, Grade::Fail, "not determined by finite prefix"));
            continue;
        }
        let cert = estimate_equipositivity(system, n, &ep)?;
        let detail = format!(
            "eps {} gamma {} grid {} box {} depth {} worst x ({})",
            fmt_f64(cert.eps),
            fmt_f64(cert.gamma),
            cert.grid_res,
            cert.box_radius,
            cert.truncation,
            cert.worst.0.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
        );
        rows.push(row(
            "equi-positivity",
            &check,
            if cert.passed { Grade::Evidence } else { Grade::Fail },
            detail,
        ));
    }
    Ok(rows)
}

/// Largest depth `<= 6` whose canonical level has at most `cap` elements.
pub fn default_level_depth(system: &ConvolutionSystem, cap: usize) -> usize {
    let max = system.max_depth().unwrap_or(6).min(6);
    let mut best = 1;
    for n in 1..=max {
        let size = checked_count_product((1..=n).map(|k| system.pair_at(k).map_or(usize::MAX, |p| p.b().len())));
        if size <= cap as u128 {
            best = n;
        }
    }
    best
}

fn level_rows(system: &ConvolutionSystem, params: &PipelineParams) -> Result<(Vec<Row>, LevelReport)> {
    let truncation = system.max_depth().map_or(params.truncation, |m| m.min(params.truncation));
    let report = match &params.corrected {
        Some((depths, cp)) => {
            let cand = corrected_spectrum(system, depths, cp)?;
            verify_level(system, &cand, cand.len(), params.grid_res, truncation)?
        }
        None => {
            let n = params.spectrum_depth.unwrap_or_else(|| default_level_depth(system, params.max_level_size));
            let lambda = canonical_spectrum(system, n)?;
            verify_lambda(system, &lambda, n, params.grid_res, truncation)?
        }
    };
    let gram = row(
        "spectrum",
        &format!("Gram identity at depth {}", report.depth),
        if report.gram.identity && report.gram.exact { Grade::Pass } else { Grade::Fail },
        format!("{} frequencies; exact {}", report.size, report.gram.exact),
    );
    let q = row(
        "spectrum",
        "Q on the centered grid",
        if report.q_min >= params.q_threshold && report.q_max <= 1.0 + 1e-9 { Grade::Evidence } else { Grade::Fail },
        format!(
            "min {} max {} threshold {} grid {} truncation {}",
            fmt_f64(report.q_min),
            fmt_f64(report.q_max),
            fmt_f64(params.q_threshold),
            report.grid_res,
            report.truncation
        ),
    );
    Ok((vec![gram, q], report))
}

/// Admissibility, contraction, the strategy's hypotheses, then a finite
/// level check of the canonical (or corrected) spectrum.
pub fn certify_spectrality(system: &ConvolutionSystem, strategy: Strategy, params: &PipelineParams) -> Result<CertificationReport> {
    let (system, mut hypotheses) = with_verified_spectra(system)?;
    let system = &system;
    hypotheses.push(contraction_row(system, params)?);
    hypotheses.extend(match strategy {
        Strategy::Cube => cube_rows(system, params)?,
        Strategy::Dd => dd_rows(system)?,
        Strategy::EquiPositivity => equipos_rows(system, params)?,
    });
    let (diagnostics, level) = level_rows(system, params)?;
    let mut verdict = hypotheses.iter().map(|r| r.grade).min().unwrap_or(Grade::Fail);
    if diagnostics.iter().any(|r| r.grade == Grade::Fail) {
        verdict = Grade::Fail;
    }
    Ok(CertificationReport {
        strategy,
        hypotheses,
        diagnostics,
        level: Some(level),
        verdict,
    })
}

/// One row per sufficient condition, naming the failing clause.
pub fn hypothesis_matrix(system: &ConvolutionSystem, params: &PipelineParams) -> Result<Vec<Row>> {
    const NAMES: [&str; 5] = [
        "equi-positive tails",
        "tail with empty integral periodic zero set",
        "cube conditions",
        "diagonal class with a recurring large pair",
        "diagonal class with bounded norms",
    ];
    let system = match with_verified_spectra(system) {
        Ok((s, _)) => s,
        Err(Error::NotAdmissible(name)) => {
            return Ok(NAMES
                .iter()
                .map(|n| row("hypotheses", n, Grade::Fail, format!("not admissible: pair {name}")))
                .collect())
        }
        Err(e) => return Err(e),
    };
    let system = &system;
    let contraction = contraction_row(system, params)?;
    let with_contraction = |mut r: Row| {
        if contraction.grade < r.grade {
            r.grade = contraction.grade;
            r.detail = format!("{}; contraction: {}", r.detail, contraction.detail);
        }
        r
    };
    let mut rows = Vec::new();

    let ep = equipos_rows(system, params)?;
    let ep_grade = ep.iter().map(|r| r.grade).min().unwrap_or(Grade::Fail);
    let ep_detail = ep.iter().map(|r| format!("{}: {}", r.check, r.detail)).collect::<Vec<_>>().join(" | ");
    rows.push(with_contraction(row("hypotheses", NAMES[0], ep_grade, ep_detail)));

    let n = params.tails.first().copied().unwrap_or(0);
    let room = system.max_depth().map_or(usize::MAX, |m| m.saturating_sub(n));
    let t = params.truncation.min(room);
    let zero = if t == 0 {
        row("hypotheses", NAMES[1], Grade::Fail, "not determined by finite prefix")
    } else {
        let ev = MaskProductEvaluator::tail(system, n, t)?;
        let grid = GridSpec::unit(system.dim(), params.zero_grid)?;
        let scan = scan_zero_set(&ev, &grid, params.zero_lattice, params.zero_tol, Some(t));
        let detail = format!(
            "tail {n}: {} candidates below {} with K {} T {t} grid {}",
            scan.candidates.len(),
            fmt_f64(params.zero_tol),
            params.zero_lattice,
            params.zero_grid
        );
        row("hypotheses", NAMES[1], if scan.candidates.is_empty() { Grade::Evidence } else { Grade::Fail }, detail)
    };
    rows.push(with_contraction(zero));

    let cube = cube_rows(system, params)?;
    let cube_grade = cube.iter().map(|r| r.grade).min().unwrap_or(Grade::Fail);
    let cube_detail = cube
        .iter()
        .filter(|r| r.grade == cube_grade)
        .map(|r| format!("{}: {}", r.check, r.detail))
        .collect::<Vec<_>>()
        .join(" | ");
    rows.push(with_contraction(row("hypotheses", NAMES[2], cube_grade, cube_detail)));

    let large = if !all_dd(system) {
        row("hypotheses", NAMES[3], Grade::Fail, "a pair is outside the diagonal digit-box class")
    } else {
        match large_recurring_pair(system) {
            Some(i) => {
                let p = &system.menu()[i];
                row("hypotheses", NAMES[3], Grade::Pass, format!("pair {} diag({})", p.name, fmt_ivec(&p.r().matrix().diagonal())))
            }
            None => row("hypotheses", NAMES[3], Grade::Fail, "no recurring pair with all diagonal entries >= d+1"),
        }
    };
    rows.push(large);

    let mut bounded = bounded_menu_row(system);
    bounded.stage = "hypotheses".into();
    bounded.check = NAMES[4].into();
    rows.push(bounded);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::types::AdmissiblePair;

    #[test]
    fn grade_order_and_codes() {
        assert!(Grade::Fail < Grade::Evidence && Grade::Evidence < Grade::Pass);
        assert_eq!(
            [Grade::Pass, Grade::Fail, Grade::Evidence].map(Grade::exit_code),
            [0, 1, 2]
        );
        assert_eq!("dd".parse::<Strategy>().unwrap(), Strategy::Dd);
        assert!("x".parse::<Strategy>().is_err());
    }

    #[test]
    fn example1_cube() {
        let rep = certify_spectrality(&example1_alternating(), Strategy::Cube, &PipelineParams::default()).unwrap();
        assert!(rep.hypotheses.iter().all(|r| r.grade == Grade::Pass), "{}", rep.render_text());
        assert_eq!(rep.verdict, Grade::Pass);
        let level = rep.level.unwrap();
        assert_eq!(level.depth, 4);
        assert!(level.gram.identity);
        assert!(level.q_min >= 0.98);
    }

    #[test]
    fn example2_dd() {
        let rep = certify_spectrality(&example2_prefix(6), Strategy::Dd, &PipelineParams::default()).unwrap();
        let text = rep.render_text();
        assert!(text.contains("[PASS] diagonal / isolating digit: (0 0) of pair odd"), "{text}");
        assert!(rep
            .hypotheses
            .iter()
            .filter(|r| r.stage == "diagonal")
            .all(|r| r.grade == Grade::Pass));
    }

    #[test]
    fn jp_dd() {
        let rep = certify_spectrality(&jp(), Strategy::Dd, &PipelineParams::default()).unwrap();
        assert_eq!(rep.verdict, Grade::Pass, "{}", rep.render_text());
    }

    #[test]
    fn equipositivity_caps_at_evidence() {
        let rep = certify_spectrality(&jp(), Strategy::EquiPositivity, &PipelineParams::default()).unwrap();
        assert_eq!(rep.verdict, Grade::Evidence);
    }

    #[test]
    fn non_admissible_aborts() {
        let sys = ConvolutionSystem::constant(cantor3_pair());
        assert!(matches!(
            certify_spectrality(&sys, Strategy::Cube, &PipelineParams::default()),
            Err(Error::NotAdmissible(_))
        ));
        let rows = hypothesis_matrix(&sys, &PipelineParams::default()).unwrap();
        assert!(rows.iter().all(|r| r.grade == Grade::Fail && r.detail.contains("not admissible")));
    }

    #[test]
    fn matrix_rows() {
        let params = PipelineParams::default();
        let rows = hypothesis_matrix(&example2_prefix(6), &params).unwrap();
        assert_eq!(rows[2].grade, Grade::Fail);
        assert_eq!(rows[3].grade, Grade::Pass);
        assert_eq!(rows[4].grade, Grade::Fail);

        let rows = hypothesis_matrix(&jp(), &params).unwrap();
        assert_eq!(rows[4].grade, Grade::Pass);
        assert_eq!(rows[1].grade, Grade::Evidence);
    }

    #[test]
    fn missing_spectrum_is_searched() {
        let p = AdmissiblePair::from_raw("q", &[vec![4]], &[vec![0], vec![2]], None).unwrap();
        let (sys, rows) = with_verified_spectra(&ConvolutionSystem::constant(p)).unwrap();
        assert_eq!(sys.menu()[0].l().unwrap(), &[vec![0], vec![1]]);
        assert!(rows[0].detail.contains("search"));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = certify_spectrality(&jp(), Strategy::EquiPositivity, &PipelineParams::default()).unwrap();
        let b = certify_spectrality(&jp(), Strategy::EquiPositivity, &PipelineParams::default()).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.render_text(), b.render_text());
    }
}
