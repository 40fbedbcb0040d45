use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{GaussRule, Grid};

/// Shape of a potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Constant { value: f64 },
    /// `amplitude * cos(frequency * x)`.
    Cosine { amplitude: f64, frequency: f64 },
    /// `c[0] + c[1] x + c[2] x² + …`.
    Polynomial { coefficients: Vec<f64> },
    /// Linear interpolation between `(nodes[i], values[i])`.
    PiecewiseLinear { nodes: Vec<f64>, values: Vec<f64> },
}

/// Real, absolutely continuous potential on `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Potential {
    kind: PotentialKind,
    s_max: f64,
    /// `(min V, max V)`, fixed at construction.
    #[serde(skip)]
    bounds: (f64, f64),
}

impl Potential {
    pub fn new(kind: PotentialKind, s_max: f64) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("extent must be positive, got {s_max}")));
        }
        match &kind {
            PotentialKind::Constant { value } if !value.is_finite() => {
                return Err(Error::NonFinite("constant potential".into()))
            }
            PotentialKind::Cosine {
                amplitude,
                frequency,
            } if !amplitude.is_finite() || !frequency.is_finite() => {
                return Err(Error::NonFinite("cosine potential".into()))
            }
            PotentialKind::Polynomial { coefficients }
                if coefficients.iter().any(|c| !c.is_finite()) =>
            {
                return Err(Error::NonFinite("polynomial coefficients".into()))
            }
            PotentialKind::PiecewiseLinear { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::InvalidArgument(
                        "piecewise-linear potential needs at least two (x, value) pairs".into(),
                    ));
                }
                if nodes[0] != 0.0 {
                    return Err(Error::InvalidArgument(
                        "piecewise-linear potential must start at x = 0".into(),
                    ));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument(
                        "piecewise-linear nodes must be strictly increasing".into(),
                    ));
                }
                if values.iter().chain(nodes).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("piecewise-linear potential".into()));
                }
                if (nodes[nodes.len() - 1] - s_max).abs() > 1e-12 * s_max {
                    return Err(Error::InvalidArgument(format!(
                        "piecewise-linear potential ends at {} but extent is {s_max}",
                        nodes[nodes.len() - 1]
                    )));
                }
            }
            _ => {}
        }
        let mut pot = Potential {
            kind,
            s_max,
            bounds: (0.0, 0.0),
        };
        pot.bounds = pot.scan_range();
        Ok(pot)
    }

    pub fn zero(s_max: f64) -> Self {
        Potential::new(PotentialKind::Zero, s_max).expect("valid extent")
    }

    pub fn constant(value: f64, s_max: f64) -> Result<Self> {
        Potential::new(PotentialKind::Constant { value }, s_max)
    }

    pub fn cosine(amplitude: f64, frequency: f64, s_max: f64) -> Result<Self> {
        Potential::new(
            PotentialKind::Cosine {
                amplitude,
                frequency,
            },
            s_max,
        )
    }

    /// `2 cos(2x)`, the default smooth test potential.
    pub fn cosine_preset(s_max: f64) -> Self {
        Potential::cosine(2.0, 2.0, s_max).expect("valid extent")
    }

    pub fn polynomial(coefficients: Vec<f64>, s_max: f64) -> Result<Self> {
        Potential::new(PotentialKind::Polynomial { coefficients }, s_max)
    }

    pub fn piecewise_linear(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s_max = nodes.last().copied().unwrap_or(0.0);
        Potential::new(PotentialKind::PiecewiseLinear { nodes, values }, s_max)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::Constant { value } => *value == 0.0,
            PotentialKind::Cosine { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::Polynomial { coefficients } => coefficients.iter().all(|c| *c == 0.0),
            PotentialKind::PiecewiseLinear { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// `Some(c)` when the potential is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.kind {
            PotentialKind::Zero => Some(0.0),
            PotentialKind::Constant { value } => Some(*value),
            _ if self.is_zero() => Some(0.0),
            _ => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => *value,
            PotentialKind::Cosine {
                amplitude,
                frequency,
            } => amplitude * (frequency * x).cos(),
            PotentialKind::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            PotentialKind::PiecewiseLinear { nodes, values } => {
                let i = segment(nodes, x);
                let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Derivative; piecewise constant for the piecewise-linear kind (right-continuous).
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero | PotentialKind::Constant { .. } => 0.0,
            PotentialKind::Cosine {
                amplitude,
                frequency,
            } => -amplitude * frequency * (frequency * x).sin(),
            PotentialKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
            PotentialKind::PiecewiseLinear { nodes, values } => {
                let i = segment(nodes, x);
                (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i])
            }
        }
    }

    /// Points where the derivative jumps; integrators place panel edges there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::PiecewiseLinear { nodes, .. } => {
                nodes[1..nodes.len() - 1].to_vec()
            }
            _ => Vec::new(),
        }
    }

    /// Exact `∫_lo^hi V`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => value * (hi - lo),
            PotentialKind::Cosine {
                amplitude,
                frequency,
            } => {
                if *frequency == 0.0 {
                    amplitude * (hi - lo)
                } else {
                    amplitude * ((frequency * hi).sin() - (frequency * lo).sin()) / frequency
                }
            }
            PotentialKind::Polynomial { coefficients } => {
                let anti = |x: f64| {
                    coefficients
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
                        * x
                };
                anti(hi) - anti(lo)
            }
            PotentialKind::PiecewiseLinear { .. } => {
                let mut pts = vec![lo];
                pts.extend(self.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
                pts.push(hi);
                pts.windows(2)
                    .map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1])))
                    .sum()
            }
        }
    }

    /// Mean value over `[0, π]` (or the extent, when shorter).
    pub fn mean(&self) -> f64 {
        let end = PI.min(self.s_max);
        self.integral(0.0, end) / end
    }

    fn fine_grid(&self, lo: f64, hi: f64) -> Grid {
        let omega = match &self.kind {
            PotentialKind::Cosine { frequency, .. } => frequency.abs() + 1.0,
            _ => 1.0,
        };
        Grid::with_breakpoints(
            lo,
            hi,
            &self.breakpoints(),
            (0.05 / omega).min(0.05),
            GaussRule::tabulation(),
        )
        .expect("valid interval")
    }

    /// `∫_lo^hi |V|`.
    pub fn l1_norm(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let g = self.fine_grid(lo, hi);
        g.integrate_all(&g.sample(|x| self.value(x).abs()))
    }

    /// `∫_lo^hi |V'|`; finite for every representable potential.
    pub fn derivative_l1(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let g = self.fine_grid(lo, hi);
        g.integrate_all(&g.sample(|x| self.derivative(x).abs()))
    }

    /// `(min V, max V)` over the extent, sampled densely (exact at breakpoints).
    pub fn range(&self) -> (f64, f64) {
        self.bounds
    }

    fn scan_range(&self) -> (f64, f64) {
        let g = self.fine_grid(0.0, self.s_max);
        let mut lo = self.value(0.0).min(self.value(self.s_max));
        let mut hi = self.value(0.0).max(self.value(self.s_max));
        for x in g.nodes().iter().copied().chain(self.breakpoints()) {
            let v = self.value(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }

    /// Parses the potential text format: either a single `preset NAME PARAMS…`
    /// line (optionally followed by `extent X`) or one `x value` pair per line.
    /// Blank lines and `#` comments are ignored. `default_extent` applies to
    /// presets without an `extent` line.
    pub fn parse(text: &str, default_extent: Option<f64>) -> Result<Self> {
        let mut preset: Option<(usize, Vec<String>)> = None;
        let mut extent = default_extent;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "preset" => {
                    if preset.is_some() || !nodes.is_empty() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "only one preset line is allowed, without x/value pairs".into(),
                        });
                    }
                    preset = Some((line_no, fields[1..].iter().map(|s| s.to_string()).collect()));
                }
                "extent" => {
                    let v = fields.get(1).ok_or(Error::Parse {
                        line: line_no,
                        msg: "extent needs a value".into(),
                    })?;
                    extent = Some(parse_number(v, line_no)?);
                }
                _ => {
                    if fields.len() != 2 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("expected `x value`, got `{line}`"),
                        });
                    }
                    nodes.push(parse_number(fields[0], line_no)?);
                    values.push(parse_number(fields[1], line_no)?);
                }
            }
        }

        if let Some((line, args)) = preset {
            if !nodes.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "preset potentials cannot also list x/value pairs".into(),
                });
            }
            let s_max = extent.ok_or(Error::Parse {
                line,
                msg: "preset potential needs an extent".into(),
            })?;
            let nums = args[1.min(args.len())..]
                .iter()
                .map(|a| parse_number(a, line))
                .collect::<Result<Vec<f64>>>()?;
            let name = args.first().map(String::as_str).unwrap_or("");
            let arity = |n: usize| -> Result<()> {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::Parse {
                        line,
                        msg: format!("preset `{name}` takes {n} parameter(s)"),
                    })
                }
            };
            let kind = match name {
                "zero" => {
                    arity(0)?;
                    PotentialKind::Zero
                }
                "constant" => {
                    arity(1)?;
                    PotentialKind::Constant { value: nums[0] }
                }
                "cosine" => {
                    arity(2)?;
                    PotentialKind::Cosine {
                        amplitude: nums[0],
                        frequency: nums[1],
                    }
                }
                "polynomial" => {
                    if nums.is_empty() {
                        return Err(Error::Parse {
                            line,
                            msg: "polynomial preset needs coefficients".into(),
                        });
                    }
                    PotentialKind::Polynomial {
                        coefficients: nums,
                    }
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown preset `{other}`"),
                    })
                }
            };
            return Potential::new(kind, s_max);
        }

        if nodes.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty potential description".into(),
            });
        }
        let pot = Potential::piecewise_linear(nodes, values)?;
        if let Some(e) = extent {
            if e > pot.s_max * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "piecewise-linear data ends at {} before the requested extent {e}",
                    pot.s_max
                )));
            }
        }
        Ok(pot)
    }
}

impl fmt::Display for Potential {
    /// Writes the text format accepted by [`Potential::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Zero => writeln!(f, "preset zero")?,
            PotentialKind::Constant { value } => writeln!(f, "preset constant {value:e}")?,
            PotentialKind::Cosine {
                amplitude,
                frequency,
            } => writeln!(f, "preset cosine {amplitude:e} {frequency:e}")?,
            PotentialKind::Polynomial { coefficients } => {
                write!(f, "preset polynomial")?;
                for c in coefficients {
                    write!(f, " {c:e}")?;
                }
                writeln!(f)?;
            }
            PotentialKind::PiecewiseLinear { nodes, values } => {
                for (x, v) in nodes.iter().zip(values) {
                    writeln!(f, "{x:e} {v:e}")?;
                }
                return Ok(());
            }
        }
        writeln!(f, "extent {:e}", self.s_max)
    }
}

fn segment(nodes: &[f64], x: f64) -> usize {
    nodes
        .partition_point(|&n| n <= x)
        .saturating_sub(1)
        .min(nodes.len() - 2)
}

/// Numbers with an optional `pi` factor: `1.5`, `pi`, `3*pi/2`, `pi/4`, `-2pi`.
pub fn parse_number(s: &str, line: usize) -> Result<f64> {
    let err = || Error::Parse {
        line,
        msg: format!("cannot parse number `{s}`"),
    };
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let lower = t.to_ascii_lowercase();
    let Some(pos) = lower.find("pi") else {
        return Err(err());
    };
    let (head, tail) = (&lower[..pos], &lower[pos + 2..]);
    let head = head.trim_end_matches('*').trim();
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| err())?,
    };
    let divisor = match tail.trim() {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .ok_or_else(err)?
            .trim()
            .parse::<f64>()
            .map_err(|_| err())?,
    };
    Ok(factor * PI / divisor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let c = Potential::cosine_preset(PI);
        assert!((c.value(0.0) - 2.0).abs() < 1e-15);
        assert!((c.derivative(PI / 4.0) + 4.0).abs() < 1e-14);
        assert!(c.integral(0.0, PI).abs() < 1e-14);
        let p = Potential::polynomial(vec![1.0, -2.0, 3.0], 2.0).unwrap();
        assert_eq!(p.value(2.0), 9.0);
        assert_eq!(p.derivative(2.0), 10.0);
        assert!((p.integral(0.0, 2.0) - (2.0 - 4.0 + 8.0)).abs() < 1e-14);
    }

    #[test]
    fn piecewise_linear_pieces() {
        let p = Potential::piecewise_linear(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, -2.0]).unwrap();
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(2.0), 0.0);
        assert_eq!(p.derivative(0.5), 2.0);
        assert_eq!(p.derivative(2.0), -2.0);
        assert_eq!(p.breakpoints(), vec![1.0]);
        assert!((p.integral(0.0, 3.0) - 1.0).abs() < 1e-15);
        assert!((p.l1_norm(0.0, 3.0) - 3.0).abs() < 1e-9);
        assert!((p.derivative_l1(0.0, 3.0) - 6.0).abs() < 1e-9);
        assert_eq!(p.range(), (-2.0, 2.0));
    }

    #[test]
    fn parse_formats() {
        let p = Potential::parse("# test\npreset cosine 2 2\n", Some(PI)).unwrap();
        assert_eq!(p, Potential::cosine_preset(PI));
        let p = Potential::parse("preset constant 4\nextent 3*pi/2\n", None).unwrap();
        assert_eq!(p.as_constant(), Some(4.0));
        assert!((p.s_max() - 1.5 * PI).abs() < 1e-15);
        let p = Potential::parse("0 1\n1.5 2\npi 0\n", None).unwrap();
        assert!((p.s_max() - PI).abs() < 1e-15);
        let round = Potential::parse(&p.to_string(), None).unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn parse_errors() {
        assert!(Potential::parse("preset cosine 2\n", Some(1.0)).is_err());
        assert!(Potential::parse("preset wobbly 1\n", Some(1.0)).is_err());
        assert!(Potential::parse("preset zero\n", None).is_err());
        assert!(Potential::parse("0 1 2\n", None).is_err());
        assert!(Potential::parse("0.5 1\n1 2\n", None).is_err());
        assert!(Potential::parse("", None).is_err());
        assert!(matches!(
            Potential::parse("0 1\n1 x\n", None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn pi_numbers() {
        assert_eq!(parse_number("pi", 1).unwrap(), PI);
        assert_eq!(parse_number("3*pi/2", 1).unwrap(), 1.5 * PI);
        assert_eq!(parse_number("-pi/4", 1).unwrap(), -PI / 4.0);
        assert_eq!(parse_number("2pi", 1).unwrap(), 2.0 * PI);
        assert!(parse_number("pie", 1).is_err());
    }
}
