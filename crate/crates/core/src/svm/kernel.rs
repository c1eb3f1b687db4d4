use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorizer::SparseVector;

/// RBF width. `Auto` resolves to `1 / n_features` at training time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GammaMode {
    #[default]
    Auto,
    Fixed(f64),
}

impl GammaMode {
    pub fn resolve(self, n_features: usize) -> Result<f64> {
        match self {
            GammaMode::Auto if n_features == 0 => {
                Err(Error::Parameter("gamma=auto needs at least one feature".into()))
            }
            GammaMode::Auto => Ok(1.0 / n_features as f64),
            GammaMode::Fixed(g) => Ok(g),
        }
    }
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaMode::Auto => f.write_str("auto"),
            GammaMode::Fixed(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(GammaMode::Auto);
        }
        let g: f64 = s
            .parse()
            .map_err(|_| Error::Parameter(format!("gamma must be 'auto' or a number, got '{s}'")))?;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
        }
        Ok(GammaMode::Fixed(g))
    }
}

impl From<GammaMode> for String {
    fn from(g: GammaMode) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for GammaMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: GammaMode,
    /// Box constraint on the dual variables.
    pub c: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            gamma: GammaMode::Auto,
            c: 1.0,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Parameter(format!("C must be positive, got {}", self.c)));
        }
        if let GammaMode::Fixed(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

/// `‖x − y‖²` by a merged walk over both entry lists. Dimensions are not checked.
pub fn squared_distance(x: &SparseVector, y: &SparseVector) -> f64 {
    let (a, b) = (x.entries(), y.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0f64;
    while i < a.len() && j < b.len() {
        let (ca, va) = a[i];
        let (cb, vb) = b[j];
        if ca == cb {
            let d = va as f64 - vb as f64;
            acc += d * d;
            i += 1;
            j += 1;
        } else if ca < cb {
            acc += (va as f64) * (va as f64);
            i += 1;
        } else {
            acc += (vb as f64) * (vb as f64);
            j += 1;
        }
    }
    acc += a[i..].iter().map(|&(_, v)| (v as f64) * (v as f64)).sum::<f64>();
    acc += b[j..].iter().map(|&(_, v)| (v as f64) * (v as f64)).sum::<f64>();
    acc
}

#[inline]
pub(crate) fn rbf_unchecked(x: &SparseVector, y: &SparseVector, gamma: f64) -> f64 {
    (-gamma * squared_distance(x, y)).exp()
}

/// `exp(−gamma ‖x − y‖²)`.
pub fn rbf_kernel(x: &SparseVector, y: &SparseVector, gamma: f64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(rbf_unchecked(x, y, gamma))
}
