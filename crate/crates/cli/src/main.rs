use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use specconv::config::{load_config, parse_int_list, Config};
use specconv::criteria::{estimate_equipositivity, scan_zero_set, EquiPositivityParams};
use specconv::fourier::{grid_eval, GridSpec, MaskProductEvaluator, Quantity, Raster};
use specconv::hadamard::{check_pair, find_spectra, Mode};
use specconv::measure::{build_mu_n, sample, DEFAULT_ATOM_CAP};
use specconv::output::{atoms_csv, fmt_f64, pgm, CsvTable};
use specconv::pipeline::{certify_spectrality, default_level_depth, Grade, PipelineParams, Strategy};
use specconv::spectrum::{canonical_spectrum, corrected_spectrum, CorrectionParams, LevelDepths};
use specconv::AdmissiblePair;

#[derive(Parser)]
#[command(name = "specconv", version, about = "Spectra and spectrality checks for infinite convolutions of admissible pairs")]
struct Cli {
    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Out {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a menu pair is admissible with its spectrum.
    CheckPair {
        config: PathBuf,
        #[arg(long)]
        pair: String,
        /// Decide with exact cyclotomic arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// List spectra of `δ_{R^{-1}B}` among the residues of `R^T`.
    FindSpectra {
        config: PathBuf,
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 10)]
        max: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Atoms of `μ_n` as exact rationals.
    Build {
        config: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Canonical or corrected spectrum table.
    Spectrum {
        config: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        corrected: bool,
        /// Level depths m_1 < m_2 < ... for the corrected spectrum.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "box")]
        box_radius: Option<i64>,
        #[command(flatten)]
        out: Out,
    },
    /// Run the hypothesis chain for a strategy and report PASS / EVIDENCE / FAIL.
    Certify {
        config: PathBuf,
        #[arg(long)]
        strategy: String,
        /// Grid points per axis for the Q check.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        truncation: Option<usize>,
        /// Allowed shortfall of Q below 1 on the grid.
        #[arg(long)]
        tol: Option<f64>,
        /// Depth of the canonical level checked.
        #[arg(long)]
        depth: Option<usize>,
        /// Also write the report table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Grid points whose integer translates all have small tail transform.
    Zeroscan {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        tail: usize,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        lattice: Option<i64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        truncation: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Equi-positivity certificate rows for the chosen tails.
    Equipos {
        config: PathBuf,
        #[arg(long)]
        tails: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "box")]
        box_radius: Option<i64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        eps_min: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// 16-bit PGM raster of |μ̂|² or Q.
    Render {
        config: PathBuf,
        #[arg(long, default_value = "muhat2")]
        quantity: String,
        /// "x0,x1" in one dimension, "x0,x1,y0,y1" in two.
        #[arg(long = "box", allow_hyphen_values = true)]
        bounds: Option<String>,
        #[arg(long, default_value_t = 256)]
        res: usize,
        #[arg(long)]
        truncation: Option<usize>,
        /// Depth of the canonical level used for Q.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        binary: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo points of `μ_n`.
    Sample {
        config: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
}

fn emit(out: &Out, text: &[u8]) -> Result<()> {
    match &out.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text)?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Config> {
    load_config(path).with_context(|| format!("loading {}", path.display()))
}

fn find_pair<'a>(cfg: &'a Config, name: &str) -> Result<&'a AdmissiblePair> {
    cfg.system
        .menu()
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| anyhow!("unknown pair `{name}`"))
}

fn depth_or(cfg: &Config, flag: Option<usize>, fallback: usize) -> usize {
    flag.or(cfg.params.depth).unwrap_or(fallback)
}

fn truncation_or(cfg: &Config, flag: Option<usize>) -> usize {
    flag.or(cfg.params.truncation).unwrap_or_else(|| cfg.system.default_truncation())
}

fn list_or(flag: Option<&str>, param: Option<&Vec<usize>>, fallback: Vec<usize>) -> Result<Vec<usize>> {
    match flag {
        Some(s) => parse_int_list(s)?
            .into_iter()
            .map(|v| usize::try_from(v).map_err(|_| anyhow!("negative entry in `{s}`")))
            .collect(),
        None => Ok(param.cloned().unwrap_or(fallback)),
    }
}

fn coords(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| fmt_f64(*x)).collect()
}

fn axis_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn table(parts: &[Vec<String>]) -> CsvTable {
    let header: Vec<String> = parts.iter().flatten().cloned().collect();
    CsvTable {
        header,
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::CheckPair { config, pair, exact } => {
            let cfg = load(&config)?;
            let p = find_pair(&cfg, &pair)?;
            let mode = if exact { Mode::Exact } else { Mode::Float };
            let (ok, note) = match p.l() {
                Some(_) => {
                    let rep = check_pair(p, mode)?;
                    (rep.admissible, format!("max off-diagonal modulus {}", fmt_f64(rep.max_modulus)))
                }
                None => {
                    let found = find_spectra(p.r(), p.b().digits(), 1)?;
                    (!found.is_empty(), "no L given; searched residues".to_string())
                }
            };
            let mode_name = if exact { "exact" } else { "float" };
            println!(
                "pair {pair}: {} ({mode_name}; {note})",
                if ok { "admissible" } else { "not admissible" }
            );
            Ok(if ok { 0 } else { 1 })
        }
        Command::FindSpectra { config, pair, max, out } => {
            let cfg = load(&config)?;
            let p = find_pair(&cfg, &pair)?;
            let spectra = find_spectra(p.r(), p.b().digits(), max)?;
            let dim = p.dim();
            let mut t = table(&[vec!["spectrum".into(), "element".into()], axis_names("l", dim)]);
            t.meta("pair", &pair).meta("max", max).meta("found", spectra.len());
            for (i, l) in spectra.iter().enumerate() {
                for (j, v) in l.iter().enumerate() {
                    let mut row = vec![i.to_string(), j.to_string()];
                    row.extend(v.iter().map(|x| x.to_string()));
                    t.push(row);
                }
            }
            emit(&out, t.render().as_bytes())?;
            Ok(0)
        }
        Command::Build { config, depth, out } => {
            let cfg = load(&config)?;
            let n = depth_or(&cfg, depth, 1);
            let mu = build_mu_n(&cfg.system, n, DEFAULT_ATOM_CAP)?;
            emit(&out, atoms_csv(&mu).as_bytes())?;
            Ok(0)
        }
        Command::Spectrum {
            config,
            depth,
            corrected,
            levels,
            gamma,
            eps,
            box_radius,
            out,
        } => {
            let cfg = load(&config)?;
            let dim = cfg.system.dim();
            let mut t = table(&[vec!["level".into()], axis_names("lambda", dim), axis_names("k", dim)]);
            if corrected {
                let defaults = CorrectionParams::default();
                let params = CorrectionParams {
                    gamma: gamma.or(cfg.params.gamma).unwrap_or(defaults.gamma),
                    eps: eps.or(cfg.params.eps).unwrap_or(defaults.eps),
                    box_radius: box_radius.or(cfg.params.box_radius).unwrap_or(defaults.box_radius),
                    tail_depth: defaults.tail_depth,
                };
                let depths = match (levels.as_deref(), &cfg.params.levels) {
                    (None, None) => LevelDepths::Auto {
                        first: depth_or(&cfg, depth, 1),
                        levels: 3,
                    },
                    (flag, param) => LevelDepths::Explicit(list_or(flag, param.as_ref(), vec![])?),
                };
                let cand = corrected_spectrum(&cfg.system, &depths, &params)?;
                t.meta("mode", "corrected")
                    .meta("depths", cand.depths.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "))
                    .meta("gamma", fmt_f64(params.gamma))
                    .meta("eps", fmt_f64(params.eps))
                    .meta("box", params.box_radius)
                    .meta("tail_depth", params.tail_depth);
                for (level, lambda, k) in cand.table() {
                    let mut row = vec![level.to_string()];
                    row.extend(lambda.iter().map(|x| x.to_string()));
                    row.extend(k.iter().map(|x| x.to_string()));
                    t.push(row);
                }
            } else {
                let n = depth_or(&cfg, depth, 1);
                let lambda = canonical_spectrum(&cfg.system, n)?;
                t.meta("mode", "canonical").meta("depth", n);
                for v in lambda {
                    let mut row = vec!["1".to_string()];
                    row.extend(v.iter().map(|x| x.to_string()));
                    row.extend(std::iter::repeat("0".to_string()).take(dim));
                    t.push(row);
                }
            }
            emit(&out, t.render().as_bytes())?;
            Ok(0)
        }
        Command::Certify {
            config,
            strategy,
            grid,
            truncation,
            tol,
            depth,
            csv,
        } => {
            let cfg = load(&config)?;
            let strategy: Strategy = strategy.parse()?;
            let mut params = PipelineParams::default();
            params.cube_t0 = cfg.cube_corner()?;
            params.distinguished = cfg.params.distinguished.as_ref().map(|d| (d.pair.clone(), d.digit.clone()));
            if let Some(g) = grid.or(cfg.params.grid) {
                params.grid_res = g;
            }
            if let Some(t) = truncation.or(cfg.params.truncation) {
                params.truncation = t;
                params.equipos.tail_depth = t;
            }
            if let Some(t) = tol {
                params.q_threshold = 1.0 - t;
            } else if let Some(q) = cfg.params.q_threshold {
                params.q_threshold = q;
            }
            params.spectrum_depth = depth.or(cfg.params.depth);
            if let Some(tails) = &cfg.params.tails {
                params.tails = tails.clone();
            }
            if let Some(b) = cfg.params.box_radius {
                params.equipos.box_radius = b;
            }
            if let Some(e) = cfg.params.eps_min {
                params.equipos.eps_min = e;
            }
            let rep = certify_spectrality(&cfg.system, strategy, &params)?;
            print!("{}", rep.render_text());
            if let Some(p) = csv {
                std::fs::write(&p, rep.csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(rep.verdict.exit_code())
        }
        Command::Zeroscan {
            config,
            tail,
            grid,
            lattice,
            tol,
            truncation,
            out,
        } => {
            let cfg = load(&config)?;
            let dim = cfg.system.dim();
            let res = grid.or(cfg.params.grid).unwrap_or(if dim == 1 { 256 } else { 64 });
            let k = lattice.or(cfg.params.lattice).unwrap_or(8);
            let tol = tol.or(cfg.params.tol).unwrap_or(1e-6);
            let room = cfg.system.max_depth().map_or(usize::MAX, |m| m.saturating_sub(tail));
            let t = truncation_or(&cfg, truncation).min(room);
            let ev = MaskProductEvaluator::tail(&cfg.system, tail, t)?;
            let rep = scan_zero_set(&ev, &GridSpec::unit(dim, res)?, k, tol, Some(t));
            let mut tab = table(&[axis_names("x", dim), vec!["max_abs".into()]]);
            tab.meta("tail", tail)
                .meta("grid", res)
                .meta("lattice", k)
                .meta("tol", fmt_f64(tol))
                .meta("truncation", t)
                .meta("candidates", rep.candidates.len())
                .meta("note", "an empty list is evidence only");
            for (x, v) in &rep.candidates {
                let mut row = coords(x);
                row.push(fmt_f64(*v));
                tab.push(row);
            }
            emit(&out, tab.render().as_bytes())?;
            Ok(0)
        }
        Command::Equipos {
            config,
            tails,
            grid,
            box_radius,
            depth,
            eps_min,
            out,
        } => {
            let cfg = load(&config)?;
            let dim = cfg.system.dim();
            let tails = list_or(tails.as_deref(), cfg.params.tails.as_ref(), vec![0])?;
            let defaults = EquiPositivityParams::default();
            let base = EquiPositivityParams {
                grid_res: grid.or(cfg.params.grid).unwrap_or(defaults.grid_res),
                box_radius: box_radius.or(cfg.params.box_radius).unwrap_or(defaults.box_radius),
                tail_depth: depth.or(cfg.params.truncation).unwrap_or(defaults.tail_depth),
                eps_min: eps_min.or(cfg.params.eps_min).unwrap_or(defaults.eps_min),
                support_radius: None,
            };
            let mut t = table(&[vec!["tail".into()], axis_names("x", dim), axis_names("k", dim), vec!["value".into()]]);
            t.meta("grid", base.grid_res)
                .meta("box", base.box_radius)
                .meta("eps_min", fmt_f64(base.eps_min))
                .meta("empirical", true);
            let mut all_passed = true;
            let mut rows = Vec::new();
            for &n in &tails {
                let mut p = base.clone();
                p.tail_depth = p.tail_depth.min(cfg.system.max_depth().map_or(usize::MAX, |m| m.saturating_sub(n)));
                let cert = estimate_equipositivity(&cfg.system, n, &p)?;
                all_passed &= cert.passed;
                t.meta(
                    &format!("tail{n}"),
                    format!(
                        "eps {} gamma {} depth {} passed {}",
                        fmt_f64(cert.eps),
                        fmt_f64(cert.gamma),
                        cert.truncation,
                        cert.passed
                    ),
                );
                for (x, k, v) in &cert.table {
                    let mut row = vec![n.to_string()];
                    row.extend(coords(x));
                    row.extend(k.iter().map(|v| v.to_string()));
                    row.push(fmt_f64(*v));
                    rows.push(row);
                }
            }
            for r in rows {
                t.push(r);
            }
            emit(&out, t.render().as_bytes())?;
            Ok(if all_passed { Grade::Evidence } else { Grade::Fail }.exit_code())
        }
        Command::Render {
            config,
            quantity,
            bounds,
            res,
            truncation,
            depth,
            binary,
            out,
        } => {
            let cfg = load(&config)?;
            let dim = cfg.system.dim();
            if dim > 2 {
                bail!("render needs dimension 1 or 2");
            }
            let b: Vec<f64> = match bounds {
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("bad box entry `{t}`")))
                    .collect::<Result<_>>()?,
                None if dim == 1 => vec![0.0, 4.0],
                None => vec![-2.0, 2.0, -2.0, 2.0],
            };
            if b.len() != 2 * dim {
                bail!("--box needs {} numbers", 2 * dim);
            }
            let lo: Vec<f64> = (0..dim).map(|i| b[2 * i]).collect();
            let hi: Vec<f64> = (0..dim).map(|i| b[2 * i + 1]).collect();
            let grid = GridSpec::new(lo, hi, vec![res; dim])?;
            let t = truncation_or(&cfg, truncation);
            let ev = MaskProductEvaluator::new(&cfg.system, t)?;
            let q = match quantity.as_str() {
                "muhat2" => Quantity::MuHat2,
                "Q" | "q" => {
                    let n = depth.or(cfg.params.depth).unwrap_or_else(|| default_level_depth(&cfg.system, 512));
                    Quantity::Q(canonical_spectrum(&cfg.system, n)?)
                }
                other => bail!("unknown quantity `{other}` (muhat2, Q)"),
            };
            let values = grid_eval(&ev, &grid, &q)?;
            let raster = Raster::from_grid(&grid, values)?;
            std::fs::write(&out, pgm(&raster, binary)).with_context(|| format!("writing {}", out.display()))?;
            Ok(0)
        }
        Command::Sample {
            config,
            depth,
            count,
            seed,
            out,
        } => {
            let cfg = load(&config)?;
            let n = depth_or(&cfg, depth, 8.min(cfg.system.max_depth().unwrap_or(8)));
            let seed = seed.or(cfg.params.seed).unwrap_or(0);
            let pts = sample(&cfg.system, n, count, seed)?;
            let mut t = table(&[axis_names("x", cfg.system.dim())]);
            t.meta("depth", n).meta("count", count).meta("seed", seed);
            for p in &pts {
                t.push(coords(p));
            }
            emit(&out, t.render().as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
