//! Poissonized Plancherel measure on partitions, its point configuration on
//! the half-integers and the discrete Bessel kernel.

use std::fmt;

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// Largest `|n|` accepted by [`bessel_j`].
pub const MAX_BESSEL_ORDER: i64 = 200;
/// Largest `|t|` accepted by [`bessel_j`].
pub const MAX_BESSEL_ARGUMENT: f64 = 20.0;
/// Largest size cutoff for partition enumeration.
pub const MAX_PARTITION_CUTOFF: usize = 60;

/// Weakly decreasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) || parts.contains(&0) {
            return Err(DppError::InvalidInput(format!(
                "{parts:?} is not weakly decreasing"
            )));
        }
        Ok(Partition(parts))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(|&p| p as usize).sum()
    }

    pub fn length(&self) -> usize {
        self.0.len()
    }

    /// `λ_i` with 1-based `i`, zero beyond the length.
    pub fn part(&self, i: usize) -> i64 {
        self.0.get(i - 1).map_or(0, |&p| p as i64)
    }

    /// Whether the half-integer `x` belongs to `{λ_i - i + 1/2 : i >= 1}`.
    pub fn contains(&self, x: HalfInteger) -> bool {
        let l = self.length() as i64;
        // x = k + 1/2; the tail i > ℓ fills every k <= -ℓ-1.
        let k = (x.twice() - 1) / 2;
        if k < -l {
            return true;
        }
        (1..=self.length()).any(|i| self.part(i) - i as i64 == k)
    }
}

/// Every partition of `n`, in reverse lexicographic order.
pub fn partitions_of(n: usize) -> Vec<Partition> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n as u32, n as u32, &mut Vec::new(), &mut out);
    out
}

/// An element of `ℤ + 1/2`, stored as the odd integer `2x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HalfInteger(i64);

impl HalfInteger {
    pub fn from_twice(twice: i64) -> Result<Self> {
        if twice.rem_euclid(2) != 1 {
            return Err(DppError::InvalidInput(format!(
                "{twice}/2 is not a half-integer"
            )));
        }
        Ok(HalfInteger(twice))
    }

    /// `k + 1/2`.
    pub fn from_floor(k: i64) -> Self {
        HalfInteger(2 * k + 1)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// `self + 1/2` and `self - 1/2`, which are integers.
    fn up(self) -> i64 {
        (self.0 + 1) / 2
    }

    fn down(self) -> i64 {
        (self.0 - 1) / 2
    }

    /// Parses `"5/2"`, `"-1/2"` or a decimal such as `"2.5"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || DppError::InvalidInput(format!("cannot read {s:?} as a half-integer"));
        if let Some(num) = s.strip_suffix("/2") {
            return Self::from_twice(num.trim().parse().map_err(|_| bad())?);
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        let twice = 2.0 * v;
        if twice.fract() != 0.0 || twice.abs() > 1e15 {
            return Err(bad());
        }
        Self::from_twice(twice as i64)
    }

    /// Every half-integer in `[a, b]`.
    pub fn range(a: HalfInteger, b: HalfInteger) -> Vec<HalfInteger> {
        (a.0..=b.0).step_by(2).map(HalfInteger).collect()
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2", self.0)
    }
}

/// The finite data `S_+ = S ∖ ℤ'_{<0}` and `S_- = ℤ'_{<0} ∖ S` of
/// `S = {λ_i - i + 1/2}`, each listed in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointMap {
    pub plus: Vec<HalfInteger>,
    pub minus: Vec<HalfInteger>,
}

pub fn point_map(lambda: &Partition) -> PointMap {
    let l = lambda.length() as i64;
    let plus = (1..=lambda.length())
        .map(|i| lambda.part(i) - i as i64)
        .filter(|&k| k >= 0)
        .map(HalfInteger::from_floor)
        .collect();
    let minus = (-l..0)
        .rev()
        .map(HalfInteger::from_floor)
        .filter(|&x| !lambda.contains(x))
        .collect();
    PointMap { plus, minus }
}

fn ln_factorial(n: i64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^{-θ²} (Π_{i<j≤L} (λ_i - i - λ_j + j) / Π_{i≤L} (λ_i - i + L)! · θ^{|λ|})²`,
/// evaluated in log space.
pub fn plancherel_weight(lambda: &Partition, theta: f64, l: usize) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(DppError::ArgumentOutOfRange(theta));
    }
    if l < lambda.length() {
        return Err(DppError::InvalidInput(format!(
            "L = {l} is below the length {} of the partition",
            lambda.length()
        )));
    }
    let shifted: Vec<i64> = (1..=l).map(|i| lambda.part(i) - i as i64).collect();
    let mut log = 0.0;
    for i in 0..l {
        for j in i + 1..l {
            log += ((shifted[i] - shifted[j]) as f64).ln();
        }
        log -= ln_factorial(shifted[i] + l as i64);
    }
    log += lambda.size() as f64 * theta.ln();
    Ok((2.0 * log - theta * theta).exp())
}

/// `e^{-θ²} Σ_{k > cutoff} θ^{2k} / k!`, the Poisson mass beyond the cutoff.
pub fn poisson_tail(theta: f64, cutoff: usize) -> f64 {
    let t2 = theta * theta;
    let mut term = (-t2).exp();
    for k in 1..=cutoff {
        term *= t2 / k as f64;
    }
    let mut tail = 0.0;
    let mut k = cutoff + 1;
    loop {
        term *= t2 / k as f64;
        tail += term;
        if term <= tail * 1e-17 || term == 0.0 {
            return tail;
        }
        k += 1;
    }
}

/// Result of summing over all partitions up to a size cutoff. `tail_bound`
/// bounds the mass of the omitted partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated {
    pub value: f64,
    pub cutoff: usize,
    pub tail_bound: f64,
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff > MAX_PARTITION_CUTOFF {
        return Err(DppError::EnumerationTooLarge {
            size: cutoff,
            limit: MAX_PARTITION_CUTOFF,
        });
    }
    Ok(())
}

/// Total Plancherel mass of partitions with `|λ| <= cutoff`.
pub fn truncated_mass(theta: f64, cutoff: usize) -> Result<Truncated> {
    truncated_correlation(&[], theta, cutoff)
}

/// `Pr{x_1, ..., x_n ∈ L(λ)}` by direct summation over `|λ| <= cutoff`.
pub fn truncated_correlation(
    points: &[HalfInteger],
    theta: f64,
    cutoff: usize,
) -> Result<Truncated> {
    check_cutoff(cutoff)?;
    let mut value = 0.0;
    for n in 0..=cutoff {
        for lambda in partitions_of(n) {
            if points.iter().all(|&x| lambda.contains(x)) {
                value += plancherel_weight(&lambda, theta, lambda.length())?;
            }
        }
    }
    Ok(Truncated {
        value,
        cutoff,
        tail_bound: poisson_tail(theta, cutoff),
    })
}

/// Law of `L(λ) ∩ window` under the Plancherel measure restricted to
/// `|λ| <= cutoff`.
pub fn window_process(
    window: &[HalfInteger],
    theta: f64,
    cutoff: usize,
) -> Result<ExplicitProcess> {
    check_cutoff(cutoff)?;
    let mut weights = Vec::new();
    for n in 0..=cutoff {
        for lambda in partitions_of(n) {
            let idx: Vec<usize> = (0..window.len())
                .filter(|&k| lambda.contains(window[k]))
                .collect();
            let w = plancherel_weight(&lambda, theta, lambda.length())?;
            weights.push((Configuration::new(idx)?, linalg::c(w)));
        }
    }
    ExplicitProcess::new(window_ground_set(window)?, weights)
}

fn window_ground_set(window: &[HalfInteger]) -> Result<GroundSet> {
    GroundSet::new(window.iter().map(|x| x.to_string()))
}

/// `J_n(t)` for integer `n` by its power series, summed in double-double
/// arithmetic to survive the cancellation for moderate `t`.
pub fn bessel_j(n: i64, t: f64) -> Result<f64> {
    if n.abs() > MAX_BESSEL_ORDER {
        return Err(DppError::OrderTooLarge(n));
    }
    if t.is_nan() || t.abs() > MAX_BESSEL_ARGUMENT {
        return Err(DppError::ArgumentOutOfRange(t));
    }
    if n < 0 {
        let v = bessel_j(-n, t)?;
        return Ok(if n % 2 == 0 { v } else { -v });
    }
    let half = Dd::from(t / 2.0);
    // (t/2)^n / n!
    let mut term = Dd::ONE;
    for k in 1..=n {
        term = term * half / Dd::from(k as f64);
    }
    let x2 = -(half * half);
    let mut sum = term;
    let mut peak = term.abs().to_f64();
    let mut m = 1.0;
    loop {
        term = term * x2 / Dd::from(m * (m + n as f64));
        sum = sum + term;
        let mag = term.abs().to_f64();
        peak = peak.max(mag);
        if m > t.abs() / 2.0 && (mag <= 1e-33 * peak || mag == 0.0) {
            break;
        }
        m += 1.0;
    }
    Ok(sum.to_f64())
}

/// `K(x, y) = θ (J_{x-1/2} J_{y+1/2} - J_{x+1/2} J_{y-1/2}) / (x - y)` off the
/// diagonal and `Σ_{k ∈ ℤ'_{>0}} J_{x+k}²` on it, with `J = J(2θ)`.
pub fn discrete_bessel_kernel(x: HalfInteger, y: HalfInteger, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(DppError::ArgumentOutOfRange(theta));
    }
    if x == y {
        return discrete_bessel_series(x, y, theta);
    }
    let t = 2.0 * theta;
    let num = bessel_j(x.down(), t)? * bessel_j(y.up(), t)?
        - bessel_j(x.up(), t)? * bessel_j(y.down(), t)?;
    Ok(theta * num / (x.value() - y.value()))
}

/// `Σ_{k ∈ ℤ'_{>0}} J_{x+k} J_{y+k}`, truncated once terms fall below
/// `1e-16` of the running sum past the turning point.
pub fn discrete_bessel_series(x: HalfInteger, y: HalfInteger, theta: f64) -> Result<f64> {
    let t = 2.0 * theta;
    let mut sum = 0.0f64;
    let mut peak = 0.0f64;
    let mut k = 0;
    loop {
        let (a, b) = (x.up() + k, y.up() + k);
        if a.max(b) > MAX_BESSEL_ORDER {
            return Ok(sum);
        }
        let term = bessel_j(a, t)? * bessel_j(b, t)?;
        sum += term;
        peak = peak.max(term.abs());
        if a.min(b) as f64 > t && term.abs() <= 1e-16 * peak.max(sum.abs()) {
            return Ok(sum);
        }
        k += 1;
    }
}

/// The discrete Bessel kernel on a finite window.
pub fn discrete_bessel_matrix(window: &[HalfInteger], theta: f64) -> Result<KernelMatrix> {
    let n = window.len();
    let mut k = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = linalg::c(discrete_bessel_kernel(window[i], window[j], theta)?);
        }
    }
    KernelMatrix::new(window_ground_set(window)?, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i64) -> HalfInteger {
        HalfInteger::from_twice(twice).unwrap()
    }

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    /// `dim λ` by the hook length formula.
    fn dimension(lambda: &Partition) -> f64 {
        let n = lambda.size();
        let conj: Vec<usize> = (1..=lambda.part(1) as usize)
            .map(|j| lambda.parts().iter().filter(|&&r| r as usize >= j).count())
            .collect();
        let mut log = ln_factorial(n as i64);
        for (i, &row) in lambda.parts().iter().enumerate() {
            for j in 0..row as usize {
                let hook = (row as usize - j - 1) + (conj[j] - i - 1) + 1;
                log -= (hook as f64).ln();
            }
        }
        log.exp()
    }

    #[test]
    fn weight_examples() {
        let theta: f64 = 0.7;
        assert!(
            (plancherel_weight(&Partition::empty(), theta, 0).unwrap() - (-theta * theta).exp())
                .abs()
                < 1e-15
        );
        assert!(
            (plancherel_weight(&Partition::empty(), theta, 4).unwrap() - (-theta * theta).exp())
                .abs()
                < 1e-15
        );
        assert!((plancherel_weight(&p(&[1]), 1.0, 1).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn weight_matches_hook_formula_and_ignores_l() {
        let theta: f64 = 1.3;
        for n in 1..=8 {
            for lambda in partitions_of(n) {
                let l = lambda.length();
                let a = plancherel_weight(&lambda, theta, l).unwrap();
                let b = plancherel_weight(&lambda, theta, l + 3).unwrap();
                assert!((a - b).abs() <= 1e-13 * a);
                let fact = ln_factorial(n as i64).exp();
                let hook = (-theta * theta).exp()
                    * theta.powi(2 * n as i32)
                    * (dimension(&lambda) / fact).powi(2);
                assert!((a - hook).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn truncated_mass_converges() {
        let m = truncated_mass(0.5, 12).unwrap();
        assert!((m.value - 1.0).abs() < 1e-10);
        assert!(m.tail_bound < 1e-10);
        let small = truncated_mass(0.5, 3).unwrap();
        assert!(small.value < m.value);
        assert!((1.0 - small.value - small.tail_bound).abs() < 1e-14);
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..=10).map(|n| partitions_of(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
    }

    #[test]
    fn point_map_examples() {
        let e = point_map(&Partition::empty());
        assert!(e.plus.is_empty() && e.minus.is_empty());
        let one = point_map(&p(&[1]));
        assert_eq!(one.plus, vec![h(1)]);
        assert_eq!(one.minus, vec![h(-1)]);
        for n in 0..=9 {
            for lambda in partitions_of(n) {
                let m = point_map(&lambda);
                assert_eq!(m.plus.len(), m.minus.len(), "{lambda:?}");
            }
        }
        // (3, 1): λ_i - i = 2, -1, -3, -4, ...
        let m = point_map(&p(&[3, 1]));
        assert_eq!(m.plus, vec![h(5)]);
        assert_eq!(m.minus, vec![h(-3)]);
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for n in 1..5 {
            assert_eq!(bessel_j(n, 0.0).unwrap(), 0.0);
        }
        // Reference values.
        assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-16);
        assert!((bessel_j(1, 2.0).unwrap() - 0.576_724_807_756_873_4).abs() < 1e-16);
        assert!((bessel_j(3, 10.0).unwrap() - 0.058_379_379_305_186_81).abs() < 1e-15);
        assert!((bessel_j(0, 20.0).unwrap() - 0.167_024_664_340_583_2).abs() < 1e-15);
        assert!((bessel_j(-3, 2.0).unwrap() + bessel_j(3, 2.0).unwrap()).abs() < 1e-17);
        let total: f64 = (-40..=40).map(|n| bessel_j(n, 1.0).unwrap().powi(2)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_guards() {
        assert_eq!(bessel_j(500, 1.0), Err(DppError::OrderTooLarge(500)));
        assert!(matches!(
            bessel_j(1, 25.0),
            Err(DppError::ArgumentOutOfRange(_))
        ));
    }

    #[test]
    fn kernel_branches_agree() {
        for theta in [0.3, 1.0, 2.0] {
            for a in (-11..=11).step_by(2) {
                for b in (-11..=11).step_by(2) {
                    let (x, y) = (h(a), h(b));
                    let k = discrete_bessel_kernel(x, y, theta).unwrap();
                    assert!((k - discrete_bessel_kernel(y, x, theta).unwrap()).abs() < 1e-14);
                    if a != b {
                        let s = discrete_bessel_series(x, y, theta).unwrap();
                        assert!((k - s).abs() < 1e-12, "{a} {b} {theta}: {k} vs {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn one_point_function_matches_summation() {
        let theta = 0.5;
        for a in (-5..=5).step_by(2) {
            let x = h(a);
            let direct = truncated_correlation(&[x], theta, 14).unwrap();
            let k = discrete_bessel_kernel(x, x, theta).unwrap();
            assert!((k - direct.value).abs() < 1e-8);
        }
        let pair = [h(1), h(3)];
        let direct = truncated_correlation(&pair, theta, 14).unwrap();
        let m = discrete_bessel_matrix(&pair, theta).unwrap();
        let det = linalg::det(m.matrix()).re;
        assert!((det - direct.value).abs() < 1e-8);
    }

    #[test]
    fn parsing() {
        assert_eq!(HalfInteger::parse("-5/2").unwrap(), h(-5));
        assert_eq!(HalfInteger::parse("1.5").unwrap(), h(3));
        assert!(HalfInteger::parse("2").is_err());
        assert_eq!(HalfInteger::range(h(-3), h(3)).len(), 4);
    }
}
