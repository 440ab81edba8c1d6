//! Scenario file parsing and validation.
//!
//! A scenario is a JSON object selecting one of three modes and carrying the
//! protocol parameters. Schmidt input may be given as amplitudes (default)
//! or squared weights (`"squared": true`), and as a single vector or a list
//! of vectors where a mode accepts several.

use bellshare::SchmidtVector;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SchmidtSpec {
    One(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

/// Raw scenario file as it appears on disk.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mode: String,
    pub d: usize,
    pub schmidt: SchmidtSpec,
    #[serde(default)]
    pub squared: bool,
    #[serde(default)]
    pub theta: Option<OneOrMany>,
    #[serde(default)]
    pub gamma1: Option<OneOrMany>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub output: Option<String>,
}

/// Validated scenario, ready to run.
#[derive(Debug)]
pub enum Scenario {
    Verify {
        d: usize,
        schmidt_list: Vec<SchmidtVector>,
        thetas: Vec<f64>,
        gammas: Vec<f64>,
        output: Option<String>,
    },
    Sweep {
        d: usize,
        schmidt_list: Vec<SchmidtVector>,
        thetas: Vec<f64>,
        gammas: Vec<f64>,
        output: Option<String>,
    },
    Optimize {
        d: usize,
        schmidt: SchmidtVector,
        restarts: usize,
        budget: usize,
        output: Option<String>,
    },
}

fn convert_schmidt(values: &[f64], squared: bool) -> Result<SchmidtVector, String> {
    let result = if squared {
        SchmidtVector::from_weights(values)
    } else {
        SchmidtVector::new(values.to_vec())
    };
    result.map_err(|e| format!("invalid schmidt entry: {e}"))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed scenario file: {e}"))
    }

    pub fn validate(self) -> Result<Scenario, String> {
        let schmidt_list: Vec<SchmidtVector> = match &self.schmidt {
            SchmidtSpec::One(v) => vec![convert_schmidt(v, self.squared)?],
            SchmidtSpec::Many(vs) => {
                if vs.is_empty() {
                    return Err("schmidt list must be nonempty".into());
                }
                vs.iter()
                    .map(|v| convert_schmidt(v, self.squared))
                    .collect::<Result<_, _>>()?
            }
        };
        for sv in &schmidt_list {
            if sv.len() > self.d {
                return Err(format!(
                    "schmidt vector of length {} does not fit dimension {}",
                    sv.len(),
                    self.d
                ));
            }
        }
        if self.d < 2 {
            return Err(format!("d must be >= 2, got {}", self.d));
        }

        match self.mode.as_str() {
            "verify" | "sweep" => {
                let thetas = self
                    .theta
                    .ok_or_else(|| format!("mode '{}' requires 'theta'", self.mode))?
                    .into_vec();
                let gammas = self
                    .gamma1
                    .ok_or_else(|| format!("mode '{}' requires 'gamma1'", self.mode))?
                    .into_vec();
                if thetas.is_empty() || gammas.is_empty() {
                    return Err("'theta' and 'gamma1' must be nonempty".into());
                }
                for &t in &thetas {
                    if !(t > 0.0 && t <= std::f64::consts::FRAC_PI_4 + 1e-12) {
                        return Err(format!("theta {t} outside (0, pi/4]"));
                    }
                }
                for &g in &gammas {
                    if !(0.0..=1.0).contains(&g) {
                        return Err(format!("gamma1 {g} outside [0, 1]"));
                    }
                }
                if self.mode == "verify" {
                    Ok(Scenario::Verify {
                        d: self.d,
                        schmidt_list,
                        thetas,
                        gammas,
                        output: self.output,
                    })
                } else {
                    Ok(Scenario::Sweep {
                        d: self.d,
                        schmidt_list,
                        thetas,
                        gammas,
                        output: self.output,
                    })
                }
            }
            "optimize" => {
                let schmidt = if schmidt_list.len() == 1 {
                    schmidt_list.into_iter().next().unwrap()
                } else {
                    return Err("mode 'optimize' takes a single schmidt vector".into());
                };
                let restarts = self
                    .restarts
                    .ok_or_else(|| "mode 'optimize' requires 'restarts'".to_string())?;
                let budget = self
                    .budget
                    .ok_or_else(|| "mode 'optimize' requires 'budget'".to_string())?;
                Ok(Scenario::Optimize {
                    d: self.d,
                    schmidt,
                    restarts,
                    budget,
                    output: self.output,
                })
            }
            other => Err(format!(
                "unknown mode '{other}' (expected verify, sweep or optimize)"
            )),
        }
    }
}
