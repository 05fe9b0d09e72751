use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Rates swept for the RBF width and the diffusion kernels: 10⁻⁵ … 10².
pub const RATE_GRID: [f64; 8] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
/// Polynomial degrees.
pub const DEGREE_GRID: [u32; 5] = [1, 2, 3, 4, 5];
/// Substring lengths (p-spectrum) and decay bases (exponential decay).
pub const SUBSTRING_GRID: [u32; 6] = [1, 2, 5, 10, 15, 20];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorKernel {
    /// `(⟨x, y⟩ + offset)^degree`.
    Poly { degree: u32, offset: f64 },
    /// `exp(−gamma ‖x − y‖²)`.
    Rbf { gamma: f64 },
    /// Cosine of the angle between rows.
    Bow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StringVariant {
    /// Every common substring weighs 1.
    Constant,
    /// Only substrings of exactly this length count.
    Spectrum(usize),
    /// Substring `s` weighs `lambda^|s|`.
    ExpDecay(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringKernelConfig {
    pub variant: StringVariant,
    pub normalize: bool,
}

impl StringKernelConfig {
    pub fn new(variant: StringVariant) -> Self {
        StringKernelConfig {
            variant,
            normalize: true,
        }
    }

    pub fn raw(variant: StringVariant) -> Self {
        StringKernelConfig {
            variant,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKernel {
    /// `exp(alpha · sym(A))`.
    ExpDiffusion(f64),
    /// `exp(−alpha · L)` with `L` the Laplacian of `sym(A)`.
    LaplacianDiffusion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Vector(VectorKernel),
    String(StringKernelConfig),
    Graph(GraphKernel),
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Vector(VectorKernel::Bow) => "bow",
            KernelSpec::Vector(VectorKernel::Poly { .. }) => "poly",
            KernelSpec::Vector(VectorKernel::Rbf { .. }) => "rbf",
            KernelSpec::String(c) => match c.variant {
                StringVariant::Constant => "cons",
                StringVariant::Spectrum(_) => "spec",
                StringVariant::ExpDecay(_) => "exp",
            },
            KernelSpec::Graph(GraphKernel::ExpDiffusion(_)) => "ed",
            KernelSpec::Graph(GraphKernel::LaplacianDiffusion(_)) => "led",
        }
    }

    /// The single tunable parameter, if any.
    pub fn param(&self) -> Option<f64> {
        match *self {
            KernelSpec::Vector(VectorKernel::Bow) => None,
            KernelSpec::Vector(VectorKernel::Poly { degree, .. }) => Some(degree as f64),
            KernelSpec::Vector(VectorKernel::Rbf { gamma }) => Some(gamma),
            KernelSpec::String(c) => match c.variant {
                StringVariant::Constant => None,
                StringVariant::Spectrum(p) => Some(p as f64),
                StringVariant::ExpDecay(l) => Some(l),
            },
            KernelSpec::Graph(GraphKernel::ExpDiffusion(a)) | KernelSpec::Graph(GraphKernel::LaplacianDiffusion(a)) => {
                Some(a)
            }
        }
    }

    /// Builds a kernel from its short name and optional parameter.
    pub fn parse(name: &str, param: Option<f64>) -> Result<KernelSpec> {
        let need =
            |what: &str| param.ok_or_else(|| Error::invalid(format!("kernel `{name}` needs a {what} parameter")));
        let positive_int = |v: f64, what: &str| -> Result<u32> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(Error::invalid(format!("{what} must be a positive integer, got {v}")))
            }
        };
        let positive = |v: f64, what: &str| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        let no_param = |spec: KernelSpec| -> Result<KernelSpec> {
            match param {
                None => Ok(spec),
                Some(_) => Err(Error::invalid(format!("kernel `{name}` takes no parameter"))),
            }
        };
        match name {
            "bow" => no_param(KernelSpec::Vector(VectorKernel::Bow)),
            "poly" => Ok(KernelSpec::Vector(VectorKernel::Poly {
                degree: positive_int(need("degree")?, "degree")?,
                offset: 0.0,
            })),
            "rbf" => Ok(KernelSpec::Vector(VectorKernel::Rbf {
                gamma: positive(need("gamma")?, "gamma")?,
            })),
            "cons" => no_param(KernelSpec::String(StringKernelConfig::new(StringVariant::Constant))),
            "spec" => Ok(KernelSpec::String(StringKernelConfig::new(StringVariant::Spectrum(
                positive_int(need("substring length")?, "p")? as usize,
            )))),
            "exp" => {
                let lambda = need("decay base")?;
                if !(lambda >= 1.0 && lambda.is_finite()) {
                    return Err(Error::invalid(format!("lambda must be >= 1, got {lambda}")));
                }
                Ok(KernelSpec::String(StringKernelConfig::new(StringVariant::ExpDecay(
                    lambda,
                ))))
            }
            "ed" => Ok(KernelSpec::Graph(GraphKernel::ExpDiffusion(positive(
                need("alpha")?,
                "alpha",
            )?))),
            "led" => Ok(KernelSpec::Graph(GraphKernel::LaplacianDiffusion(positive(
                need("alpha")?,
                "alpha",
            )?))),
            other => Err(Error::Unknown {
                kind: "kernel",
                name: other.to_string(),
            }),
        }
    }

    /// File-name friendly identifier, e.g. `ed_1` or `rbf_0.001`.
    pub fn slug(&self) -> String {
        match self.param() {
            None => self.name().to_string(),
            Some(p) => format!("{}_{}", self.name(), p),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Vector(VectorKernel::Poly { degree, offset }) if offset != 0.0 => {
                write!(f, "poly(d={degree},r={offset})")
            }
            KernelSpec::Vector(VectorKernel::Poly { degree, .. }) => write!(f, "poly(d={degree})"),
            KernelSpec::Vector(VectorKernel::Rbf { gamma }) => write!(f, "rbf(gamma={gamma})"),
            KernelSpec::Vector(VectorKernel::Bow) => write!(f, "bow"),
            KernelSpec::String(c) => {
                match c.variant {
                    StringVariant::Constant => write!(f, "cons")?,
                    StringVariant::Spectrum(p) => write!(f, "spec(p={p})")?,
                    StringVariant::ExpDecay(l) => write!(f, "exp(lambda={l})")?,
                }
                if !c.normalize {
                    write!(f, "[raw]")?;
                }
                Ok(())
            }
            KernelSpec::Graph(GraphKernel::ExpDiffusion(a)) => write!(f, "ed(alpha={a})"),
            KernelSpec::Graph(GraphKernel::LaplacianDiffusion(a)) => write!(f, "led(alpha={a})"),
        }
    }
}

/// The three representations of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    /// Call dependencies.
    Struct,
    /// Co-change history.
    Evol,
    /// Source text.
    Lex,
}

impl View {
    pub const ALL: [View; 3] = [View::Struct, View::Evol, View::Lex];

    pub fn as_str(&self) -> &'static str {
        match self {
            View::Struct => "struct",
            View::Evol => "evol",
            View::Lex => "lex",
        }
    }

    /// Whether a kernel family may be applied to this view. Graph kernels
    /// need the call graph, string kernels need text, vector kernels need a
    /// vectorized view (transaction incidence or LSI features).
    pub fn accepts(&self, spec: &KernelSpec) -> bool {
        matches!(
            (self, spec),
            (View::Struct, KernelSpec::Graph(_))
                | (View::Evol, KernelSpec::Vector(VectorKernel::Poly { .. }))
                | (View::Evol, KernelSpec::Vector(VectorKernel::Rbf { .. }))
                | (View::Lex, KernelSpec::Vector(_))
                | (View::Lex, KernelSpec::String(_))
        )
    }

    /// Every kernel configuration swept for this view.
    pub fn grid(&self) -> Vec<KernelSpec> {
        let rates = RATE_GRID.iter().copied();
        let degrees = DEGREE_GRID
            .iter()
            .map(|&d| KernelSpec::Vector(VectorKernel::Poly { degree: d, offset: 0.0 }));
        let rbf = rates
            .clone()
            .map(|g| KernelSpec::Vector(VectorKernel::Rbf { gamma: g }));
        match self {
            View::Struct => rates
                .clone()
                .map(|a| KernelSpec::Graph(GraphKernel::ExpDiffusion(a)))
                .chain(rates.map(|a| KernelSpec::Graph(GraphKernel::LaplacianDiffusion(a))))
                .collect(),
            View::Evol => degrees.chain(rbf).collect(),
            View::Lex => std::iter::once(KernelSpec::Vector(VectorKernel::Bow))
                .chain(degrees)
                .chain(rbf)
                .chain(std::iter::once(KernelSpec::String(StringKernelConfig::new(
                    StringVariant::Constant,
                ))))
                .chain(
                    SUBSTRING_GRID
                        .iter()
                        .map(|&p| KernelSpec::String(StringKernelConfig::new(StringVariant::Spectrum(p as usize)))),
                )
                .chain(
                    SUBSTRING_GRID
                        .iter()
                        .map(|&l| KernelSpec::String(StringKernelConfig::new(StringVariant::ExpDecay(l as f64)))),
                )
                .collect(),
        }
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<View> {
        match s {
            "struct" => Ok(View::Struct),
            "evol" => Ok(View::Evol),
            "lex" => Ok(View::Lex),
            other => Err(Error::Unknown {
                kind: "view",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let k = KernelSpec::parse("ed", Some(1.0)).unwrap();
        assert_eq!(k.to_string(), "ed(alpha=1)");
        assert_eq!(k.slug(), "ed_1");
        assert_eq!(
            KernelSpec::parse("rbf", Some(1e-5)).unwrap().to_string(),
            "rbf(gamma=0.00001)"
        );
        assert!(KernelSpec::parse("poly", Some(1.5)).is_err());
        assert!(KernelSpec::parse("poly", None).is_err());
        assert!(KernelSpec::parse("bow", Some(1.0)).is_err());
        assert!(KernelSpec::parse("exp", Some(0.5)).is_err());
        assert!(KernelSpec::parse("nope", None).is_err());
    }

    #[test]
    fn compatibility_table() {
        let spec = KernelSpec::parse("spec", Some(2.0)).unwrap();
        assert!(View::Lex.accepts(&spec));
        assert!(!View::Evol.accepts(&spec));
        let ed = KernelSpec::parse("ed", Some(1.0)).unwrap();
        assert!(View::Struct.accepts(&ed));
        assert!(!View::Lex.accepts(&ed));
        let bow = KernelSpec::parse("bow", None).unwrap();
        assert!(!View::Evol.accepts(&bow));
        for view in View::ALL {
            assert!(view.grid().iter().all(|k| view.accepts(k)));
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(View::Struct.grid().len(), 16);
        assert_eq!(View::Evol.grid().len(), 13);
        assert_eq!(View::Lex.grid().len(), 27);
    }
}
