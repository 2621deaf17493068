//! Kernel description documents.
//!
//! ```json
//! {"type": "exp_poly", "terms": [{"poly_re": [1.0], "poly_im": [0.0], "z_re": -1.0, "z_im": 0.0}]}
//! {"type": "sampled_builtin", "name": "gaussian", "C": 3.5, "delta": 1.0}
//! ```
//!
//! `exp_poly` terms are complex (`P_j(t) e^{z_j t}`, coefficients in ascending
//! degree) and must form a conjugate-closed list.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{builtin, builtin_default_bound, DecayBound, ExpPolyKernel, Kernel};
use crate::error::{Error, Result};
use crate::poly::ComplexPoly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexTermDoc {
    pub poly_re: Vec<f64>,
    #[serde(default)]
    pub poly_im: Vec<f64>,
    pub z_re: f64,
    #[serde(default)]
    pub z_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelDocument {
    ExpPoly {
        terms: Vec<ComplexTermDoc>,
    },
    SampledBuiltin {
        name: String,
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
}

impl KernelDocument {
    pub fn to_kernel(&self) -> Result<Kernel> {
        match self {
            KernelDocument::ExpPoly { terms } => {
                let terms: Vec<(ComplexPoly, Complex64)> = terms
                    .iter()
                    .map(|t| {
                        let n = t.poly_re.len().max(t.poly_im.len());
                        let p = (0..n)
                            .map(|k| {
                                Complex64::new(
                                    t.poly_re.get(k).copied().unwrap_or(0.0),
                                    t.poly_im.get(k).copied().unwrap_or(0.0),
                                )
                            })
                            .collect();
                        (ComplexPoly::new(p), Complex64::new(t.z_re, t.z_im))
                    })
                    .collect();
                Ok(Kernel::ExpPoly(ExpPolyKernel::from_complex_terms(&terms)?))
            }
            KernelDocument::SampledBuiltin { name, c, delta } => {
                let default = builtin_default_bound(name);
                let bound = match (c, delta, default) {
                    (Some(c), Some(d), _) => DecayBound::new(*c, *d)?,
                    (None, None, Some(b)) => b,
                    (Some(c), None, Some(b)) => DecayBound::new(*c, b.delta)?,
                    (None, Some(d), Some(b)) => DecayBound::new(b.c, *d)?,
                    (_, _, None) => {
                        return Err(Error::InvalidKernel(format!("unknown builtin kernel `{name}`")))
                    }
                };
                Ok(Kernel::Sampled(builtin(name, bound)?))
            }
        }
    }

    pub fn from_kernel(kernel: &Kernel) -> Self {
        match kernel {
            Kernel::ExpPoly(k) => KernelDocument::ExpPoly {
                terms: k
                    .complex_terms()
                    .into_iter()
                    .map(|(p, z)| ComplexTermDoc {
                        poly_re: p.coeffs().iter().map(|c| c.re).collect(),
                        poly_im: p.coeffs().iter().map(|c| c.im).collect(),
                        z_re: z.re,
                        z_im: z.im,
                    })
                    .collect(),
            },
            Kernel::Sampled(k) => KernelDocument::SampledBuiltin {
                name: k.name().to_string(),
                c: Some(k.bound().c),
                delta: Some(k.bound().delta),
            },
        }
    }
}
