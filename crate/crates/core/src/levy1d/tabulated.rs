//! Jump laws given as a tabulated quantile function.
//!
//! File format: plain text, one `u quantile(u)` pair per line, whitespace
//! separated, `u` strictly ascending from 0 to 1. Everything after a `#`
//! is a comment. The quantile function is linearly interpolated between
//! rows, so the law is a mixture of uniform pieces (and atoms, where two
//! consecutive quantiles coincide).

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedLaw {
    u: Vec<f64>,
    q: Vec<f64>,
}

/// Integrals of `1`, `x` and `x^2` over a set, under the law.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl TabulatedLaw {
    pub fn new(u: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidModel(format!("tabulated law: {msg}"));
        if u.len() != q.len() {
            return Err(bad("column lengths differ"));
        }
        if u.len() < 2 {
            return Err(bad("need at least two rows"));
        }
        if u.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(bad("non-finite entry"));
        }
        if u[0] != 0.0 || *u.last().unwrap() != 1.0 {
            return Err(bad("u must run from 0 to 1"));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("u must be strictly ascending"));
        }
        if q.windows(2).any(|w| w[1] < w[0]) {
            return Err(bad("quantiles must be nondecreasing"));
        }
        Ok(Self { u, q })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut u = Vec::new();
        let mut q = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse_col = |c: Option<&str>, name: &str| -> Result<f64> {
                let c = c.ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("missing {name} column"),
                })?;
                c.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("{name}: {e}"),
                })
            };
            u.push(parse_col(cols.next(), "u")?);
            q.push(parse_col(cols.next(), "quantile")?);
            if cols.next().is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
        }
        Self::new(u, q)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# u quantile(u)\n");
        for (u, q) in self.u.iter().zip(&self.q) {
            let _ = writeln!(out, "{u:?} {q:?}");
        }
        out
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.q.iter().copied())
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = match self.u.partition_point(|&v| v <= p) {
            0 => 0,
            i if i >= self.u.len() => self.u.len() - 2,
            i => i - 1,
        };
        let (u0, u1, q0, q1) = (self.u[i], self.u[i + 1], self.q[i], self.q[i + 1]);
        q0 + (q1 - q0) * (p - u0) / (u1 - u0)
    }

    /// `u`-intervals on which `q(u)` lies in the closed value range `[lo, hi]`.
    fn u_ranges(&self, lo: f64, hi: f64) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.u.len() - 1).filter_map(move |i| {
            let (u0, u1, q0, q1) = (self.u[i], self.u[i + 1], self.q[i], self.q[i + 1]);
            if q1 == q0 {
                return (q0 >= lo && q0 <= hi).then_some((i, u0, u1));
            }
            let (a, b) = (lo.max(q0), hi.min(q1));
            if a >= b {
                return None;
            }
            let slope = (u1 - u0) / (q1 - q0);
            Some((i, u0 + (a - q0) * slope, u0 + (b - q0) * slope))
        })
    }

    fn moments_on(&self, lo: f64, hi: f64) -> Moments {
        let mut m = Moments::default();
        for (i, ua, ub) in self.u_ranges(lo, hi) {
            let xa = self.eval_segment(i, ua);
            let xb = self.eval_segment(i, ub);
            let du = ub - ua;
            m.mass += du;
            if xa == xb {
                m.first += xa * du;
                m.second += xa * xa * du;
            } else {
                // x is affine in u on the piece: average of x and x^2 over [xa, xb]
                m.first += du * (xa + xb) / 2.0;
                m.second += du * (xa * xa + xa * xb + xb * xb) / 3.0;
            }
        }
        m
    }

    fn eval_segment(&self, i: usize, u: f64) -> f64 {
        let (u0, u1, q0, q1) = (self.u[i], self.u[i + 1], self.q[i], self.q[i + 1]);
        q0 + (q1 - q0) * (u - u0) / (u1 - u0)
    }

    /// Moments over `{a < |x| <= b}` with `0 <= a < b <= inf`.
    ///
    /// Boundary points matter only for atoms; atoms exactly at `|x| = a`
    /// are excluded and at `|x| = b` included.
    pub(crate) fn annulus(&self, a: f64, b: f64) -> Moments {
        let pos = self.moments_on(a, b);
        let neg = self.moments_on(-b, -a);
        let mut m = Moments {
            mass: pos.mass + neg.mass,
            first: pos.first + neg.first,
            second: pos.second + neg.second,
        };
        // remove atoms sitting on |x| = a, counted by the closed ranges above
        // (an atom at the origin is seen by both sides)
        let times = if a == 0.0 { 2.0 } else { 1.0 };
        for (i, w) in self.q.windows(2).enumerate() {
            if w[0] == w[1] && w[0].abs() == a {
                let du = times * (self.u[i + 1] - self.u[i]);
                m.mass -= du;
                m.first -= w[0] * du;
                m.second -= w[0] * w[0] * du;
            }
        }
        m
    }

    /// Draw `X` conditioned on `|X| > threshold`. `None` if that event is null.
    pub(crate) fn sample_above<R: Rng + ?Sized>(&self, threshold: f64, rng: &mut R) -> Option<f64> {
        let ranges: Vec<(usize, f64, f64)> = self
            .u_ranges(f64::NEG_INFINITY, -threshold)
            .chain(self.u_ranges(threshold, f64::INFINITY))
            .filter(|&(i, ua, ub)| {
                ub > ua && {
                    let mid = self.eval_segment(i, 0.5 * (ua + ub));
                    mid.abs() > threshold
                }
            })
            .collect();
        let total: f64 = ranges.iter().map(|r| r.2 - r.1).sum();
        if total <= 0.0 {
            return None;
        }
        let mut pick = rng.random::<f64>() * total;
        for &(i, ua, ub) in &ranges {
            let len = ub - ua;
            if pick < len {
                return Some(self.eval_segment(i, ua + pick));
            }
            pick -= len;
        }
        let &(i, ua, ub) = ranges.last().unwrap();
        Some(self.eval_segment(i, 0.5 * (ua + ub)))
    }
}

impl FromStr for TabulatedLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
