//! JSON configuration: menu of pairs, word, and run parameters.
//!
//! Rationals are written as `"p/q"` strings. Unknown keys are rejected.

use std::path::Path;

use num_rational::BigRational;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{parse_q, IMatrix, IVec, QVec};
use crate::system::ConvolutionSystem;
use crate::types::{AdmissiblePair, DigitSet, ExpandingMatrix};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dimension: usize,
    pub pairs: Vec<PairSpec>,
    pub word: WordSpec,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    #[serde(rename = "R")]
    pub r: Vec<Vec<i64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<i64>>,
    #[serde(rename = "L", default)]
    pub l: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub weights: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordSpec {
    #[serde(default)]
    pub prefix: Vec<String>,
    #[serde(default)]
    pub cycle: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistinguishedSpec {
    pub pair: String,
    pub digit: Vec<i64>,
}

/// Optional defaults for the commands; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub depth: Option<usize>,
    pub truncation: Option<usize>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub lattice: Option<i64>,
    #[serde(rename = "box")]
    pub box_radius: Option<i64>,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub eps_min: Option<f64>,
    pub levels: Option<Vec<usize>>,
    pub tails: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub q_threshold: Option<f64>,
    /// Corner `t_0` of the cube `t_0 + [0,1]^d`, as rational strings.
    pub cube: Option<Vec<String>>,
    pub distinguished: Option<DistinguishedSpec>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub system: ConvolutionSystem,
    pub params: Params,
}

impl Config {
    pub fn cube_corner(&self) -> Result<Option<QVec>> {
        let Some(t0) = &self.params.cube else {
            return Ok(None);
        };
        if t0.len() != self.system.dim() {
            return Err(Error::Config(format!(
                "params.cube has {} entries, expected {}",
                t0.len(),
                self.system.dim()
            )));
        }
        t0.iter()
            .map(|s| parse_q(s).ok_or_else(|| Error::Config(format!("params.cube: `{s}` is not a rational"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn check_vectors(name: &str, key: &str, vs: &[Vec<i64>], dim: usize) -> Result<()> {
    for (i, v) in vs.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Config(format!(
                "pair `{name}`: {key}[{i}] has dimension {}, expected {dim}",
                v.len()
            )));
        }
    }
    Ok(())
}

fn build_pair(spec: &PairSpec, dim: usize) -> Result<AdmissiblePair> {
    let name = &spec.name;
    if spec.r.len() != dim {
        return Err(Error::Config(format!("pair `{name}`: R has {} rows, expected {dim}", spec.r.len())));
    }
    check_vectors(name, "R", &spec.r, dim)?;
    check_vectors(name, "B", &spec.b, dim)?;
    if let Some(l) = &spec.l {
        check_vectors(name, "L", l, dim)?;
    }
    let ctx = |e: Error| Error::Config(format!("pair `{name}`: {e}"));
    let m = IMatrix::from_rows(&spec.r).ok_or_else(|| Error::Config(format!("pair `{name}`: R is not square")))?;
    let r = ExpandingMatrix::new(m).map_err(ctx)?;
    let weights = match &spec.weights {
        None => None,
        Some(ws) => Some(
            ws.iter()
                .map(|s| parse_q(s).ok_or_else(|| Error::Config(format!("pair `{name}`: weight `{s}` is not a rational"))))
                .collect::<Result<Vec<BigRational>>>()?,
        ),
    };
    let b = DigitSet::with_weights(spec.b.clone(), weights).map_err(ctx)?;
    AdmissiblePair::new(name, r, b, spec.l.clone()).map_err(ctx)
}

/// Parse a configuration document.
pub fn parse_config_str(text: &str) -> Result<Config> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.dimension == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let mut menu = Vec::with_capacity(file.pairs.len());
    for spec in &file.pairs {
        if menu.iter().any(|p: &AdmissiblePair| p.name == spec.name) {
            return Err(Error::Config(format!("duplicate pair name `{}`", spec.name)));
        }
        menu.push(build_pair(spec, file.dimension)?);
    }
    if file.word.prefix.is_empty() && file.word.cycle.is_empty() {
        return Err(Error::Config("word: prefix and cycle are both empty".into()));
    }
    let prefix: Vec<&str> = file.word.prefix.iter().map(String::as_str).collect();
    let cycle: Vec<&str> = file.word.cycle.iter().map(String::as_str).collect();
    let system = ConvolutionSystem::from_names(menu, &prefix, &cycle).map_err(|e| Error::Config(format!("word: {e}")))?;
    Ok(Config {
        system,
        params: file.params,
    })
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parse `"a,b,c"` into integers.
pub fn parse_int_list(s: &str) -> Result<IVec> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidParameter(format!("`{t}` is not an integer")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE1: &str = r#"{
  "dimension": 2,
  "pairs": [
    {"name": "p1", "R": [[4,0],[4,-4]], "B": [[2,0],[3,0],[2,1],[3,1]], "L": [[0,0],[2,0],[2,-2],[4,-2]]},
    {"name": "p2", "R": [[3,-3],[3,3]], "B": [[0,2],[1,2],[0,3]], "L": [[0,0],[3,1],[3,-1]]}
  ],
  "word": {"prefix": [], "cycle": ["p1", "p2"]}
}"#;

    #[test]
    fn parses_example1() {
        let cfg = parse_config_str(EXAMPLE1).unwrap();
        assert_eq!(cfg.system.menu().len(), 2);
        assert!(!cfg.system.is_finite());
        assert_eq!(cfg.system.index_at(2).unwrap(), 1);
    }

    #[test]
    fn finite_word() {
        let text = EXAMPLE1.replace(r#""prefix": [], "cycle": ["p1", "p2"]"#, r#""prefix": ["p1", "p2", "p1"]"#);
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.system.max_depth(), Some(3));
    }

    #[test]
    fn rejects_bad_input() {
        let bad_dim = EXAMPLE1.replace("[0,3]]", "[0,3,1]]");
        let e = parse_config_str(&bad_dim).unwrap_err().to_string();
        assert!(e.contains("pair `p2`") && e.contains("B[2]"), "{e}");

        let unknown = EXAMPLE1.replace(r#""dimension": 2"#, r#""dimension": 2, "dim": 2"#);
        let e = parse_config_str(&unknown).unwrap_err().to_string();
        assert!(e.contains("unknown field `dim`") && e.contains("line"), "{e}");

        let not_expanding = EXAMPLE1.replace("[[3,-3],[3,3]]", "[[1,0],[0,1]]");
        assert!(parse_config_str(&not_expanding).is_err());

        let short_l = EXAMPLE1.replace(r#", "L": [[0,0],[3,1],[3,-1]]"#, r#", "L": [[0,0],[3,1]]"#);
        let e = parse_config_str(&short_l).unwrap_err().to_string();
        assert!(e.contains("#L"), "{e}");

        let unknown_pair = EXAMPLE1.replace(r#"["p1", "p2"]"#, r#"["p1", "p3"]"#);
        assert!(parse_config_str(&unknown_pair).is_err());
    }

    #[test]
    fn weights_and_params() {
        let text = r#"{"dimension": 1,
          "pairs": [{"name": "w", "R": [[4]], "B": [[0],[2]], "weights": ["1/3", "2/3"]}],
          "word": {"cycle": ["w"]},
          "params": {"depth": 3, "cube": ["-1/2"], "box": 2}}"#;
        let cfg = parse_config_str(text).unwrap();
        assert!(!cfg.system.menu()[0].b().is_uniform());
        assert_eq!(cfg.params.depth, Some(3));
        assert_eq!(cfg.params.box_radius, Some(2));
        assert_eq!(cfg.cube_corner().unwrap().unwrap(), vec![crate::linalg::q_frac(-1, 2)]);
    }

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("1, 2,-3").unwrap(), vec![1, 2, -3]);
        assert!(parse_int_list("1,x").is_err());
    }
}
