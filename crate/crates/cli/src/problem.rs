//! Problem files: a versioned envelope around a kind-specific payload.

use blkit_core::gaussian_opt::ReferenceMeasure;
use blkit_core::linalg::{Matrix, Vector};
use blkit_core::{DiscreteDistribution, DiscreteMeasure, GaussianChannel, GaussianMeasure, Kernel};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ForwardBl,
    Frbl,
    Sdpi,
    HcDiscrete,
    Rhc,
    Rhcn,
    GaussianF0,
    GaussianBl,
    Wyner,
    HcGaussian,
    Keygen,
    CrOnecom,
    T2Gaussian,
    Transport,
    Shearer,
    Renyi,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ForwardBl => "forward_bl",
            Kind::Frbl => "frbl",
            Kind::Sdpi => "sdpi",
            Kind::HcDiscrete => "hc_discrete",
            Kind::Rhc => "rhc",
            Kind::Rhcn => "rhcn",
            Kind::GaussianF0 => "gaussian_f0",
            Kind::GaussianBl => "gaussian_bl",
            Kind::Wyner => "wyner",
            Kind::HcGaussian => "hc_gaussian",
            Kind::Keygen => "keygen",
            Kind::CrOnecom => "cr_onecom",
            Kind::T2Gaussian => "t2_gaussian",
            Kind::Transport => "transport",
            Kind::Shearer => "shearer",
            Kind::Renyi => "renyi",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub kind: Kind,
    pub payload: serde_json::Value,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Invalid(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn payload<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| CliError::Invalid(format!("{} payload: {e}", self.kind.name())))
    }
}

/// Row-major matrix with explicit dimensions.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn matrix(&self) -> Result<Matrix, CliError> {
        if self.rows * self.cols != self.data.len() {
            return Err(CliError::Invalid(format!(
                "matrix declared {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Invalid("matrix entries must be finite".into()));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        Ok(Kernel::from_flat(self.rows, self.cols, self.data.clone())?)
    }
}

pub fn distribution(w: &[f64]) -> Result<DiscreteDistribution, CliError> {
    Ok(DiscreteDistribution::new(w.to_vec())?)
}

pub fn measure(w: &[f64]) -> Result<DiscreteMeasure, CliError> {
    Ok(DiscreteMeasure::new(w.to_vec())?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardChannelSpec {
    pub kernel: MatrixSpec,
    /// Defaults to the pushforward of `nu`.
    pub mu: Option<Vec<f64>>,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardBl {
    pub nu: Vec<f64>,
    pub cost: Option<Vec<f64>>,
    pub channels: Vec<ForwardChannelSpec>,
    pub check: Option<CheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Against `other`, or against the problem itself when absent.
    Tensorization { other: Option<Box<ForwardBl>> },
    Convexity { samples: Vec<Vec<f64>> },
    DataProcessing { post: Vec<MatrixSpec> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReverseSpec {
    pub nu: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrblForwardSpec {
    pub kernel: MatrixSpec,
    pub mu: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frbl {
    pub reverse: Vec<ReverseSpec>,
    pub forward: Vec<FrblForwardSpec>,
    #[serde(default)]
    pub d: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sdpi {
    pub q_x: Vec<f64>,
    pub kernel: MatrixSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HcDiscrete {
    pub q: Vec<f64>,
    pub sizes: [usize; 2],
    pub p: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rhc {
    pub q: Vec<f64>,
    pub sizes: [usize; 2],
    pub b: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rhcn {
    pub q: Vec<f64>,
    pub sizes: [usize; 2],
    pub b1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianChannelSpec {
    pub b: MatrixSpec,
    pub noise: MatrixSpec,
    pub c: f64,
}

impl GaussianChannelSpec {
    pub fn build(list: &[Self]) -> Result<Vec<(GaussianChannel, f64)>, CliError> {
        list.iter()
            .map(|s| Ok((GaussianChannel::new(s.b.matrix()?, s.noise.matrix()?)?, s.c)))
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianF0 {
    pub dim: usize,
    pub channels: Vec<GaussianChannelSpec>,
    pub c0: f64,
    pub m: MatrixSpec,
    pub cap: MatrixSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub cov: MatrixSpec,
}

impl GaussianSpec {
    pub fn measure(&self) -> Result<GaussianMeasure, CliError> {
        Ok(GaussianMeasure::new(Vector::from_vec(self.mean.clone()), self.cov.matrix()?)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBl {
    /// Lebesgue measure when absent.
    pub reference: Option<GaussianSpec>,
    pub channels: Vec<GaussianChannelSpec>,
}

impl GaussianBl {
    pub fn reference(&self) -> Result<ReferenceMeasure, CliError> {
        Ok(match &self.reference {
            Some(g) => ReferenceMeasure::Gaussian(g.measure()?),
            None => ReferenceMeasure::Lebesgue,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wyner {
    pub sigma: MatrixSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HcGaussian {
    pub sigma: MatrixSpec,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keygen {
    pub sigma: MatrixSpec,
    pub r: Option<f64>,
    pub rl: Option<Vec<f64>>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrOnecom {
    pub sigma: MatrixSpec,
    pub sizes: Vec<usize>,
    pub sigma_prime: MatrixSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T2Gaussian {
    pub mean: Vec<f64>,
    pub cov: MatrixSpec,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transport {
    pub points: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub p_law: Vec<f64>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shearer {
    pub set: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Renyi {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub alpha: f64,
}
