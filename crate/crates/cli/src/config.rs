//! TOML experiment configuration.
//!
//! ```toml
//! [kernel]
//! kind = "combined"
//! alpha = 0.75
//! a = 1.0
//! b = 1.0
//! inner_a = { kind = "bspline", order = 2 }
//! inner_b = { kind = "bspline", order = 2 }
//!
//! [signal]
//! breakpoints = [1.5, 3.5, 5.5]
//! pieces = ["11/(2*t^2+1)", "3", "2", "12/(1+2*t)"]
//! window = [0.5, 8.0]
//!
//! [experiment]
//! w = [5.0, 10.0]
//! t = [1.5]
//! ```

use expsamp_core::kernel::build_combined;
use expsamp_core::{KernelSpec, PiecewiseSignal};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelDecl {
    Builtin {
        name: String,
    },
    Bspline {
        order: u32,
    },
    Jackson {
        gamma: f64,
        beta: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trunc_epsilon: Option<f64>,
    },
    Combined {
        alpha: f64,
        a: f64,
        b: f64,
        inner_a: Box<KernelDecl>,
        inner_b: Box<KernelDecl>,
    },
}

pub const BUILTIN_KERNELS: [&str; 4] = ["combo", "bspline2", "bspline3", "jackson"];

impl KernelDecl {
    pub fn builtin(name: &str) -> Result<Self, String> {
        let bspline = |order| KernelDecl::Bspline { order };
        Ok(match name {
            "combo" => KernelDecl::Combined {
                alpha: 0.75,
                a: 1.0,
                b: 1.0,
                inner_a: Box::new(bspline(2)),
                inner_b: Box::new(bspline(2)),
            },
            "bspline2" => bspline(2),
            "bspline3" => bspline(3),
            "jackson" => KernelDecl::Jackson {
                gamma: 1.0,
                beta: 1,
                trunc_epsilon: None,
            },
            other => {
                return Err(format!(
                    "unknown kernel '{other}' (known: {})",
                    BUILTIN_KERNELS.join(", ")
                ))
            }
        })
    }

    pub fn build(&self) -> Result<KernelSpec, String> {
        let built = match self {
            KernelDecl::Builtin { name } => return KernelDecl::builtin(name)?.build(),
            KernelDecl::Bspline { order } => KernelSpec::bspline(*order),
            KernelDecl::Jackson {
                gamma,
                beta,
                trunc_epsilon,
            } => match trunc_epsilon {
                Some(eps) => KernelSpec::jackson_with_tolerance(*gamma, *beta, *eps),
                None => KernelSpec::jackson(*gamma, *beta),
            },
            KernelDecl::Combined {
                alpha,
                a,
                b,
                inner_a,
                inner_b,
            } => build_combined(inner_a.build()?, *a, inner_b.build()?, *b, *alpha),
        };
        built.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDecl {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pieces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point_values: Vec<[f64; 2]>,
}

pub const BUILTIN_SIGNALS: [&str; 4] = ["worked-example", "unit-step", "log", "linear"];
const DEFAULT_WINDOW: [f64; 2] = [0.5, 8.0];

impl SignalDecl {
    pub fn builtin(name: &str) -> Result<Self, String> {
        let (breakpoints, pieces): (Vec<f64>, Vec<&str>) = match name {
            "worked-example" => (
                vec![1.5, 3.5, 5.5],
                vec!["11/(2*t^2+1)", "3", "2", "12/(1+2*t)"],
            ),
            "unit-step" => (vec![2.0], vec!["0", "1"]),
            "log" => (vec![], vec!["log(t)"]),
            "linear" => (vec![], vec!["t"]),
            other => {
                return Err(format!(
                    "unknown signal '{other}' (known: {})",
                    BUILTIN_SIGNALS.join(", ")
                ))
            }
        };
        Ok(SignalDecl {
            builtin: None,
            breakpoints,
            pieces: pieces.into_iter().map(String::from).collect(),
            window: Some(DEFAULT_WINDOW),
            point_values: vec![],
        })
    }

    pub fn build(&self) -> Result<PiecewiseSignal, String> {
        let resolved;
        let decl = match &self.builtin {
            Some(name) => {
                if !self.pieces.is_empty() || !self.breakpoints.is_empty() {
                    return Err("a builtin signal cannot also declare breakpoints or pieces".into());
                }
                let mut b = SignalDecl::builtin(name)?;
                if self.window.is_some() {
                    b.window = self.window;
                }
                b.point_values = self.point_values.clone();
                resolved = b;
                &resolved
            }
            None => self,
        };
        if decl.pieces.is_empty() {
            return Err("signal needs either 'builtin' or 'pieces'".into());
        }
        let [lo, hi] = decl.window.unwrap_or(DEFAULT_WINDOW);
        let pieces: Vec<&str> = decl.pieces.iter().map(String::as_str).collect();
        let mut signal = PiecewiseSignal::from_strings(&decl.breakpoints, &pieces, (lo, hi))
            .map_err(|e| e.to_string())?;
        for &[t, v] in &decl.point_values {
            signal = signal.with_point_value(t, v).map_err(|e| e.to_string())?;
        }
        Ok(signal)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentDecl {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalDecl>,
    #[serde(default)]
    pub experiment: ExperimentDecl,
}

/// 1-based line of byte `offset` in `text`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `[section]` header, if present.
fn section_line(text: &str, section: &str) -> Option<usize> {
    let header = format!("[{section}]");
    text.lines().position(|l| l.trim() == header).map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        // Validate the declarations now so errors point at their section.
        if let Some(k) = &config.kernel {
            k.build().map_err(|message| CliError::Config {
                line: section_line(text, "kernel"),
                message,
            })?;
        }
        if let Some(s) = &config.signal {
            s.build().map_err(|message| CliError::Config {
                line: section_line(text, "signal"),
                message,
            })?;
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The declaration behind the built-in experiments: example kernel and
    /// example signal.
    pub fn worked_example() -> Self {
        ExperimentConfig {
            kernel: Some(KernelDecl::builtin("combo").expect("builtin")),
            signal: Some(SignalDecl::builtin("worked-example").expect("builtin")),
            experiment: ExperimentDecl::default(),
        }
    }
}
