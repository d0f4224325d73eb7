//! Gradient Young measures of periodic sawtooth deformations, computed
//! exactly.
//!
//! A deformation `u(x) = sum_i a_i h(x . n_i + c_i)` with `h` the 1-periodic
//! sawtooth has a.e. gradient `sum_i eps_i(x) a_i (x) n_i` with signs
//! `eps_i(x) = h'(x . n_i + c_i)`. The induced measure on the `2^N` vertices
//! of the rank-one hypercube assigns each sign pattern the area of the torus
//! region realizing it. Those areas are computed by cutting the unit square
//! along every line `x . n_i + c_i = m/2` (the breakpoints of `h'`), so each
//! resulting cell carries a constant sign vector, and summing exact shoelace
//! areas per pattern.

use crate::mat2::{tensor, Mat2, Vec2};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum PeriodicError {
    #[error("deformation must contain at least one mode")]
    Empty,
    #[error("mode {0} has zero frequency")]
    ZeroFrequency(usize),
    #[error("mode {0} has a non-rational phase; exact weights need exact phases")]
    NonRationalPhase(usize),
    #[error("correlation integral requires k, l >= 1 (got {k}, {l})")]
    NonPositiveFrequency { k: i64, l: i64 },
    #[error("sawtooth slope queried at a breakpoint (t = {0} mod 1/2): measure-zero set")]
    Breakpoint(Scalar),
}

/// One sawtooth mode `a h(x . n + c)` with integer frequency `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SawtoothMode {
    #[serde(rename = "a")]
    pub amplitude: Vec2,
    #[serde(rename = "n")]
    pub frequency: [i64; 2],
    #[serde(rename = "c")]
    pub phase: Scalar,
}

impl SawtoothMode {
    pub fn new(amplitude: Vec2, frequency: [i64; 2], phase: Scalar) -> Self {
        SawtoothMode {
            amplitude,
            frequency,
            phase,
        }
    }
}

/// An ordered list of sawtooth modes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicDeformation {
    pub modes: Vec<SawtoothMode>,
}

impl PeriodicDeformation {
    pub fn new(modes: Vec<SawtoothMode>) -> Result<Self, PeriodicError> {
        if modes.is_empty() {
            return Err(PeriodicError::Empty);
        }
        for (i, m) in modes.iter().enumerate() {
            if m.frequency == [0, 0] {
                return Err(PeriodicError::ZeroFrequency(i));
            }
        }
        Ok(PeriodicDeformation { modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// The 1-periodic sawtooth: `h(t) = t` on `[0, 1/2]`, `1 - t` on `[1/2, 1]`.
pub fn sawtooth(t: &Scalar) -> Scalar {
    let r = t.fract_mod_one();
    if r <= Scalar::ratio(1, 2) {
        r
    } else {
        Scalar::one() - r
    }
}

/// Slope of the sawtooth: `+1` on `(0, 1/2)` mod 1, `-1` on `(1/2, 1)` mod 1.
/// Breakpoints (`t = 0` or `1/2` mod 1) are a measure-zero set and get an
/// explicit error instead of an arbitrary sign.
pub fn sawtooth_slope(t: &Scalar) -> Result<Scalar, PeriodicError> {
    let r = t.fract_mod_one();
    let half = Scalar::ratio(1, 2);
    if r.is_zero() || r == half {
        return Err(PeriodicError::Breakpoint(r));
    }
    Ok(if r < half {
        Scalar::one()
    } else {
        Scalar::from_int(-1)
    })
}

/// A sign pattern in `{-1,+1}^N`, displayed as a string of `+`/`-`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignPattern(pub Vec<i8>);

impl SignPattern {
    pub fn from_mask(mask: usize, n: usize) -> Self {
        SignPattern(
            (0..n)
                .map(|i| if mask & (1 << i) != 0 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn mask(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &s)| if s > 0 { m | (1 << i) } else { m })
    }

    /// Product of the signs: `+1` on the even class, `-1` on the odd class.
    pub fn parity(&self) -> i8 {
        self.0.iter().product()
    }

    pub fn negated(&self) -> SignPattern {
        SignPattern(self.0.iter().map(|s| -s).collect())
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", if s > 0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SignPattern {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(format!("invalid sign character `{other}`")),
            })
            .collect::<Result<Vec<i8>, _>>()
            .map(SignPattern)
    }
}

/// Probability weights indexed by sign patterns in `{-1,+1}^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignPatternMeasure {
    n: usize,
    weights: BTreeMap<SignPattern, Scalar>,
}

impl SignPatternMeasure {
    pub fn new(n: usize, weights: BTreeMap<SignPattern, Scalar>) -> Self {
        assert!(
            weights.values().all(|w| !w.is_negative()),
            "sign-pattern weights must be nonnegative"
        );
        let total = weights
            .values()
            .fold(Scalar::zero(), |acc, w| acc + w);
        assert!(
            total.approx_eq(&Scalar::one()),
            "sign-pattern weights must sum to one (got {total})"
        );
        SignPatternMeasure { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, signs: &[i8]) -> Scalar {
        self.weights
            .get(&SignPattern(signs.to_vec()))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SignPattern, &Scalar)> {
        self.weights.iter()
    }

    pub fn total(&self) -> Scalar {
        self.weights
            .values()
            .fold(Scalar::zero(), |acc, w| acc + w)
    }

    /// All `2^N` patterns, including those with zero weight.
    pub fn all_patterns(&self) -> Vec<SignPattern> {
        (0..(1usize << self.n))
            .map(|m| SignPattern::from_mask(m, self.n))
            .collect()
    }

    /// String-keyed view used by the JSON encodings.
    pub fn to_string_map(&self) -> BTreeMap<String, Scalar> {
        self.all_patterns()
            .into_iter()
            .map(|p| {
                let w = self.weight(&p.0);
                (p.to_string(), w)
            })
            .collect()
    }
}

// --- exact arrangement ----------------------------------------------------

/// A convex cell of the subdivision, counter-clockwise vertices.
type Cell = Vec<[Scalar; 2]>;

/// Oriented line `a x + b y = d`.
struct CutLine {
    a: Scalar,
    b: Scalar,
    d: Scalar,
}

fn side(line: &CutLine, p: &[Scalar; 2]) -> Scalar {
    &line.a * &p[0] + &line.b * &p[1] - &line.d
}

/// Split a convex cell along a line into the (<= 0) and (>= 0) parts.
/// Returns the surviving pieces; zero-area slivers are dropped later when
/// areas are summed.
fn split_cell(cell: &Cell, line: &CutLine) -> Vec<Cell> {
    let sides: Vec<Scalar> = cell.iter().map(|p| side(line, p)).collect();
    let any_neg = sides.iter().any(|s| s.is_negative());
    let any_pos = sides.iter().any(|s| s.is_positive());
    if !any_neg || !any_pos {
        return vec![cell.clone()];
    }
    let mut lo: Cell = Vec::new();
    let mut hi: Cell = Vec::new();
    let k = cell.len();
    for i in 0..k {
        let j = (i + 1) % k;
        let (p, sp) = (&cell[i], &sides[i]);
        let (q, sq) = (&cell[j], &sides[j]);
        if !sp.is_positive() {
            lo.push(p.clone());
        }
        if !sp.is_negative() {
            hi.push(p.clone());
        }
        if (sp.is_negative() && sq.is_positive()) || (sp.is_positive() && sq.is_negative()) {
            // Exact intersection point of segment [p, q] with the line.
            let t = sp / (sp - sq);
            let x = &p[0] + &(&t * &(&q[0] - &p[0]));
            let y = &p[1] + &(&t * &(&q[1] - &p[1]));
            lo.push([x.clone(), y.clone()]);
            hi.push([x, y]);
        }
    }
    let mut out = Vec::new();
    if lo.len() >= 3 {
        out.push(lo);
    }
    if hi.len() >= 3 {
        out.push(hi);
    }
    out
}

/// Twice the signed shoelace area.
fn double_area(cell: &Cell) -> Scalar {
    let mut acc = Scalar::zero();
    let k = cell.len();
    for i in 0..k {
        let j = (i + 1) % k;
        acc = acc + &cell[i][0] * &cell[j][1] - &cell[j][0] * &cell[i][1];
    }
    acc
}

/// Arithmetic mean of the vertices; lies in the interior of a convex cell
/// with positive area, hence never on a cut line.
fn centroid(cell: &Cell) -> [Scalar; 2] {
    let k = Scalar::from_int(cell.len() as i64);
    let mut x = Scalar::zero();
    let mut y = Scalar::zero();
    for p in cell {
        x = x + &p[0];
        y = y + &p[1];
    }
    [x / &k, y / &k]
}

/// Exact Young-measure weights of a periodic sawtooth deformation.
///
/// Requires integer frequencies and exact rational phases; the result does
/// not depend on the amplitudes. Weights are nonnegative rationals summing
/// to exactly one.
pub fn exact_weights(d: &PeriodicDeformation) -> Result<SignPatternMeasure, PeriodicError> {
    let n = d.len();
    let half = Scalar::ratio(1, 2);
    let mut phases = Vec::with_capacity(n);
    for (i, m) in d.modes.iter().enumerate() {
        if !m.phase.is_exact() {
            return Err(PeriodicError::NonRationalPhase(i));
        }
        if m.frequency == [0, 0] {
            return Err(PeriodicError::ZeroFrequency(i));
        }
        // h' has period 1, so phases reduce mod 1.
        phases.push(m.phase.fract_mod_one());
    }

    // Unroll each breakpoint family k x + l y + c = m/2 into the finitely
    // many lines meeting the unit square.
    let mut lines = Vec::new();
    for (mode, c) in d.modes.iter().zip(&phases) {
        let [k, l] = mode.frequency;
        let lo = c + Scalar::from_int(k.min(0) + l.min(0));
        let hi = c + Scalar::from_int(k.max(0) + l.max(0));
        // All integers m with lo <= m/2 <= hi.
        let mut m = (2.0 * lo.to_f64()).floor() as i64 - 2;
        loop {
            let level = Scalar::ratio(m, 2);
            if level > hi {
                break;
            }
            if level >= lo {
                lines.push(CutLine {
                    a: Scalar::from_int(k),
                    b: Scalar::from_int(l),
                    d: &level - c,
                });
            }
            m += 1;
        }
    }

    let unit_square: Cell = vec![
        [Scalar::zero(), Scalar::zero()],
        [Scalar::one(), Scalar::zero()],
        [Scalar::one(), Scalar::one()],
        [Scalar::zero(), Scalar::one()],
    ];
    let mut cells = vec![unit_square];
    for line in &lines {
        cells = cells.iter().flat_map(|c| split_cell(c, line)).collect();
    }

    let mut weights: BTreeMap<SignPattern, Scalar> = BTreeMap::new();
    for cell in &cells {
        let area2 = double_area(cell);
        if area2.is_zero() {
            continue;
        }
        debug_assert!(area2.is_positive(), "cells stay counter-clockwise");
        let c = centroid(cell);
        let mut signs = Vec::with_capacity(n);
        for (mode, phase) in d.modes.iter().zip(&phases) {
            let [k, l] = mode.frequency;
            let v = Scalar::from_int(k) * &c[0] + Scalar::from_int(l) * &c[1] + phase;
            let r = v.fract_mod_one();
            debug_assert!(!r.is_zero() && r != half, "centroid off the cut lines");
            signs.push(if r < half { 1i8 } else { -1i8 });
        }
        let w = weights
            .entry(SignPattern(signs))
            .or_insert_with(Scalar::zero);
        *w = &*w + &(&area2 / &Scalar::from_int(2));
    }

    Ok(SignPatternMeasure::new(n, weights))
}

// --- Monte-Carlo oracle ----------------------------------------------------

/// Sample `j` of the stream keyed by `seed`: a counter-based draw, so the
/// result is independent of how samples are sharded across workers.
fn mc_sample(base: &ChaCha8Rng, j: u64) -> (f64, f64) {
    use rand::Rng;
    let mut rng = base.clone();
    rng.set_stream(j.wrapping_add(1));
    (rng.random::<f64>(), rng.random::<f64>())
}

/// Empirical sign-pattern frequencies from uniform samples of the torus.
/// Deterministic for a given seed, for any shard count.
pub fn mc_weights(d: &PeriodicDeformation, samples: u64, seed: u64) -> SignPatternMeasure {
    assert!(samples >= 1, "need at least one sample");
    let n = d.len();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<[f64; 2]> = d
        .modes
        .iter()
        .map(|m| [m.frequency[0] as f64, m.frequency[1] as f64])
        .collect();
    let phases: Vec<f64> = d.modes.iter().map(|m| m.phase.to_f64()).collect();

    let counts = (0..samples)
        .into_par_iter()
        .fold(
            || vec![0u64; 1 << n],
            |mut acc, j| {
                let (x, y) = mc_sample(&base, j);
                let mut mask = 0usize;
                for i in 0..n {
                    let v = freqs[i][0] * x + freqs[i][1] * y + phases[i];
                    if v.rem_euclid(1.0) < 0.5 {
                        mask |= 1 << i;
                    }
                }
                acc[mask] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; 1 << n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mut weights = BTreeMap::new();
    for (mask, &count) in counts.iter().enumerate() {
        if count > 0 {
            weights.insert(
                SignPattern::from_mask(mask, n),
                Scalar::float(count as f64 / samples as f64),
            );
        }
    }
    SignPatternMeasure::new(n, weights)
}

// --- closed-form correlation integral --------------------------------------

/// `int_{(0,1)^2} f(k x + l y + c) dxdy` with `f` the 2-periodic unit step
/// (`+1` on `[0,1)`, `-1` on `[1,2)`).
///
/// Zero whenever `k` or `l` is even. For odd `k, l` the integral is the
/// 2-periodic function `I(c) = 2c(c-1)/(kl)` on `c in [0,1)`, extended by
/// `I(c+1) = -I(c)`.
pub fn correlation_integral(k: i64, l: i64, c: &Scalar) -> Result<Scalar, PeriodicError> {
    if k < 1 || l < 1 {
        return Err(PeriodicError::NonPositiveFrequency { k, l });
    }
    if k % 2 == 0 || l % 2 == 0 {
        return Ok(Scalar::zero());
    }
    // Reduce c mod 2 into [0, 2).
    let two = Scalar::from_int(2);
    let r = (c / &two).fract_mod_one() * &two;
    let kl = Scalar::from_int(k * l);
    let one = Scalar::one();
    if r < one {
        // 2 c (c - 1) / (k l)
        Ok(&two * &r * (&r - &one) / &kl)
    } else {
        // -2 (c - 1)(c - 2) / (k l)
        Ok(-(&two * (&r - &one) * (&r - &two)) / &kl)
    }
}

// --- support points ---------------------------------------------------------

/// Vertex map of the rank-one hypercube: `X_eps = sum_i eps_i a_i (x) n_i`.
pub fn support_points(d: &PeriodicDeformation) -> Vec<(SignPattern, Mat2)> {
    let n = d.len();
    let edges: Vec<Mat2> = d
        .modes
        .iter()
        .map(|m| {
            tensor(
                &m.amplitude,
                &Vec2::from_ints(m.frequency[0], m.frequency[1]),
            )
        })
        .collect();
    (0..(1usize << n))
        .map(|mask| {
            let pattern = SignPattern::from_mask(mask, n);
            let mut x = Mat2::zero();
            for (i, edge) in edges.iter().enumerate() {
                x = if pattern.0[i] > 0 { &x + edge } else { &x - edge };
            }
            (pattern, x)
        })
        .collect()
}
