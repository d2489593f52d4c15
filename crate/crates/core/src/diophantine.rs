//! Continued fractions, convergent tables and Farey intervals.
//!
//! Three kinds of input are supported. Quadratic surds `(u + v√d)/w` are
//! expanded with exact integer arithmetic, so the golden ratio and friends
//! are available to any depth. Rationals terminate. Plain floats go through
//! the Gauss map and stop being trusted once the remainder gets within
//! `2^-40` of an integer or the propagated error swamps the digit.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Relative cutoff for trusting a digit of a float expansion.
pub const FLOAT_RELIABILITY: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiophantineError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("expansion depth must be at least 1")]
    ZeroDepth,
    #[error("index {requested} exceeds the reliable depth {reliable}")]
    DepthExceeded { requested: usize, reliable: usize },
    #[error("index (i={i}, k={k}) out of range")]
    IndexOutOfRange { i: isize, k: u64 },
    #[error("fraction {0} is not irreducible")]
    NotIrreducible(Fraction),
    #[error("fractions must satisfy left < right")]
    NotOrdered,
    #[error("x lies in the Farey series of order {order}; no open interval contains it")]
    InFareySeries { order: u64 },
    #[error("x is an integer")]
    Integer,
    #[error("surd has a perfect-square radicand; use a rational input")]
    PerfectSquare,
    #[error("integer overflow in convergent recurrence at index {0}")]
    Overflow(usize),
}

pub type Result<T> = std::result::Result<T, DiophantineError>;

/// `num/den` with `den > 0`. Not necessarily in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: i128,
    den: i128,
}

impl Fraction {
    pub fn new(num: i128, den: i128) -> Result<Self> {
        match den.cmp(&0) {
            Ordering::Equal => Err(DiophantineError::ZeroDenominator),
            Ordering::Greater => Ok(Self { num, den }),
            Ordering::Less => Ok(Self { num: -num, den: -den }),
        }
    }

    /// Builds the fraction in lowest terms.
    pub fn reduced(num: i128, den: i128) -> Result<Self> {
        let f = Self::new(num, den)?;
        let g = gcd(f.num, f.den);
        Ok(Self {
            num: f.num / g,
            den: f.den / g,
        })
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn is_irreducible(&self) -> bool {
        gcd(self.num, self.den) == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn mediant(&self, other: &Fraction) -> Fraction {
        Fraction {
            num: self.num + other.num,
            den: self.den + other.den,
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i128
}

/// The real number `(u + v·√d) / w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub u: i64,
    pub v: i64,
    pub d: u64,
    pub w: i64,
}

impl QuadraticSurd {
    /// `τ = (1 + √5)/2`.
    pub const GOLDEN: QuadraticSurd = QuadraticSurd {
        u: 1,
        v: 1,
        d: 5,
        w: 2,
    };
    pub const SQRT2: QuadraticSurd = QuadraticSurd {
        u: 0,
        v: 1,
        d: 2,
        w: 1,
    };

    pub fn to_f64(&self) -> f64 {
        (self.u as f64 + self.v as f64 * (self.d as f64).sqrt()) / self.w as f64
    }
}

/// What a continued fraction should expand.
#[derive(Debug, Clone, PartialEq)]
pub enum CfInput {
    Float(f64),
    Quadratic(QuadraticSurd),
    Rational { num: i128, den: i128 },
    Sequence { a0: i128, quotients: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    FloatDerived,
    ExactQuadratic,
    ExplicitSequence,
}

/// State `(P + √D)/Q` of the exact surd expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SurdState {
    p: i128,
    q: i128,
}

#[derive(Debug, Clone)]
enum Tail {
    /// Complete quotients `ξ_1, ξ_2, …` evaluated from the exact states.
    Surd { radicand: i128, states: Vec<SurdState> },
    /// Gauss-map complete quotients; the last one carries `last_error`.
    Float { complete: Vec<f64>, last_error: f64 },
    /// Exact rational value; the expansion terminates.
    Rational { num: i128, den: i128 },
}

/// `[a0; a1, a2, …]` truncated at some depth.
#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    a0: i128,
    quotients: Vec<u64>,
    kind: ValueKind,
    value: f64,
    reliable_depth: usize,
    /// Float expansion stopped early because a digit became untrustworthy.
    truncated: bool,
    /// The expansion ends here because the value is rational.
    terminated: bool,
    /// `(start, len)` of the repeating block among `a1, a2, …` (1-based start).
    period: Option<(usize, usize)>,
    tail: Tail,
    table: OnceLock<ConvergentTable>,
}

/// Expands `x` to `depth` partial quotients after `a0`.
pub fn cf_expand(input: &CfInput, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(DiophantineError::ZeroDepth);
    }
    match input {
        CfInput::Float(x) => expand_float(*x, depth),
        CfInput::Quadratic(s) => expand_surd(s, depth),
        CfInput::Rational { num, den } => expand_rational(*num, *den, depth),
        CfInput::Sequence { a0, quotients } => {
            let quotients: Vec<u64> = quotients.iter().copied().take(depth).collect();
            assert!(quotients.iter().all(|&a| a >= 1), "partial quotients must be positive");
            let table = ConvergentTable::build(*a0, &quotients)?;
            let n = quotients.len();
            let (num, den) = (table.p(n as isize), table.q(n as isize));
            Ok(ContinuedFraction {
                a0: *a0,
                kind: ValueKind::ExplicitSequence,
                value: num as f64 / den as f64,
                reliable_depth: n,
                truncated: false,
                terminated: true,
                period: None,
                tail: Tail::Rational { num, den },
                table: OnceLock::new(),
                quotients,
            })
        }
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn expand_rational(num: i128, den: i128, depth: usize) -> Result<ContinuedFraction> {
    let f = Fraction::reduced(num, den)?;
    let (mut n, mut d) = (f.num, f.den);
    let a0 = floor_div(n, d);
    let mut quotients = Vec::new();
    n -= a0 * d;
    // x = a0 + n/d with 0 <= n < d
    while n != 0 && quotients.len() < depth {
        (n, d) = (d, n);
        let a = floor_div(n, d);
        quotients.push(a as u64);
        n -= a * d;
    }
    let reliable_depth = quotients.len();
    Ok(ContinuedFraction {
        a0,
        quotients,
        kind: ValueKind::ExplicitSequence,
        value: f.to_f64(),
        reliable_depth,
        truncated: false,
        terminated: n == 0,
        period: None,
        tail: Tail::Rational { num: f.num, den: f.den },
        table: OnceLock::new(),
    })
}

fn isqrt(n: i128) -> i128 {
    debug_assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn expand_surd(s: &QuadraticSurd, depth: usize) -> Result<ContinuedFraction> {
    if s.w == 0 {
        return Err(DiophantineError::ZeroDenominator);
    }
    if s.v == 0 {
        return expand_rational(s.u as i128, s.w as i128, depth);
    }
    let radicand0 = (s.v as i128) * (s.v as i128) * (s.d as i128);
    let root0 = isqrt(radicand0);
    if root0 * root0 == radicand0 {
        return Err(DiophantineError::PerfectSquare);
    }
    // (u + v√d)/w; a negative v flips the whole expression's sign
    let (mut p, mut q) = if s.v > 0 {
        (s.u as i128, s.w as i128)
    } else {
        (-(s.u as i128), -(s.w as i128))
    };
    let mut radicand = radicand0;
    if (radicand - p * p) % q != 0 {
        p *= q.abs();
        radicand *= q * q;
        q *= q.abs();
    }
    let root = isqrt(radicand);
    let digit = |p: i128, q: i128| -> i128 {
        // floor((P + √D)/Q), √D irrational
        if q > 0 {
            floor_div(p + root, q)
        } else {
            -(floor_div(p + root, -q) + 1)
        }
    };
    let a0 = digit(p, q);
    let mut states = Vec::with_capacity(depth + 1);
    let mut quotients = Vec::with_capacity(depth);
    let mut a = a0;
    let mut period = None;
    for _ in 0..=depth {
        p = a * q - p;
        q = (radicand - p * p) / q;
        let state = SurdState { p, q };
        if period.is_none() {
            if let Some(pos) = states.iter().position(|s| *s == state) {
                period = Some((pos + 1, states.len() - pos));
            }
        }
        states.push(state);
        a = digit(p, q);
        if quotients.len() < depth {
            quotients.push(a as u64);
        }
    }
    Ok(ContinuedFraction {
        a0,
        quotients,
        kind: ValueKind::ExactQuadratic,
        value: s.to_f64(),
        reliable_depth: depth,
        truncated: false,
        terminated: false,
        period,
        tail: Tail::Surd { radicand, states },
        table: OnceLock::new(),
    })
}

fn expand_float(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !x.is_finite() {
        return Err(DiophantineError::NonFinite(x));
    }
    let a0 = x.floor();
    let mut frac = x - a0;
    let a0 = a0 as i128;
    let mut quotients = Vec::with_capacity(depth);
    let mut complete = Vec::with_capacity(depth + 1);
    let (mut q_prev, mut q_cur) = (0.0f64, 1.0f64);
    let unit = f64::EPSILON * x.abs().max(1.0);
    let mut truncated = false;
    let mut terminated = frac == 0.0;
    let mut last_error = 0.0;
    while !terminated && quotients.len() < depth {
        let xi = 1.0 / frac;
        // error of ξ_n ≈ δx · (q_{n-1} ξ_n + q_{n-2})²
        let err = 4.0 * unit * (q_cur * xi + q_prev).powi(2);
        let digit = xi.floor();
        let f = xi - digit;
        let margin = f.min(1.0 - f);
        if margin <= FLOAT_RELIABILITY.max(err) {
            if f == 0.0 && err < FLOAT_RELIABILITY {
                // exact rational tail
                quotients.push(digit as u64);
                terminated = true;
            } else {
                // the digit could be flipped by rounding; keep ξ as the tail only
                truncated = true;
            }
            complete.push(xi);
            last_error = err;
            break;
        }
        quotients.push(digit as u64);
        complete.push(xi);
        (q_prev, q_cur) = (q_cur, digit * q_cur + q_prev);
        frac = f;
    }
    if !terminated && !truncated && frac > 0.0 {
        let xi = 1.0 / frac;
        last_error = 4.0 * unit * (q_cur * xi + q_prev).powi(2);
        complete.push(xi);
    }
    let reliable_depth = quotients.len();
    Ok(ContinuedFraction {
        a0,
        quotients,
        kind: ValueKind::FloatDerived,
        value: x,
        reliable_depth,
        truncated,
        terminated,
        period: None,
        tail: Tail::Float { complete, last_error },
        table: OnceLock::new(),
    })
}

impl ContinuedFraction {
    pub fn golden(depth: usize) -> Self {
        cf_expand(&CfInput::Quadratic(QuadraticSurd::GOLDEN), depth).expect("golden ratio expands")
    }

    pub fn a0(&self) -> i128 {
        self.a0
    }

    /// `a_i` for `i ≥ 1`.
    pub fn quotient(&self, i: usize) -> Option<u64> {
        if i == 0 {
            return None;
        }
        self.quotients.get(i - 1).copied()
    }

    /// `a1, a2, …, a_depth`.
    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Number of quotients after `a0` that can be trusted.
    pub fn reliable_depth(&self) -> usize {
        self.reliable_depth
    }

    /// The float expansion hit its reliability cutoff before the requested depth.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// The expansion is finite because the value is rational.
    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn period(&self) -> Option<(usize, usize)> {
        self.period
    }

    pub fn max_quotient(&self) -> Option<u64> {
        self.quotients.iter().copied().max()
    }

    /// Same expansion with `a0` shifted by `n`, i.e. the value `x + n`.
    pub fn shifted(&self, n: i128) -> Self {
        let mut out = self.clone();
        out.a0 += n;
        out.value += n as f64;
        if let Tail::Rational { num, den } = &mut out.tail {
            *num += n * *den;
        }
        out
    }

    /// Complete quotient `ξ_n` (`n ≥ 1`) as a float, if known.
    fn complete_quotient(&self, n: usize) -> Option<f64> {
        match &self.tail {
            Tail::Surd { radicand, states } => states
                .get(n.checked_sub(1)?)
                .map(|s| (s.p as f64 + (*radicand as f64).sqrt()) / s.q as f64),
            Tail::Float { complete, .. } => complete.get(n.checked_sub(1)?).copied(),
            Tail::Rational { .. } => None,
        }
    }

    /// A certain lower bound on the first partial quotient past the
    /// reliable depth, from the untrusted tail of a float expansion.
    fn tail_quotient_lower_bound(&self) -> Option<u64> {
        match &self.tail {
            Tail::Float { complete, last_error } if !self.terminated => {
                let xi = complete.get(self.depth())?;
                let lower = (xi - last_error).floor() - 1.0;
                (lower >= 1.0).then_some(lower as u64)
            }
            _ => None,
        }
    }

    /// Evaluates `[a0; a1, …, a_n + 1/ξ_{n+1}]` with the stored tail, which
    /// reproduces the value for every `n` within the expansion.
    pub fn evaluate_with_tail(&self, n: usize) -> f64 {
        let n = n.min(self.depth());
        let mut acc = self.complete_quotient(n + 1).unwrap_or(f64::INFINITY);
        for i in (1..=n).rev() {
            acc = self.quotients[i - 1] as f64 + 1.0 / acc;
        }
        self.a0 as f64 + 1.0 / acc
    }

    /// `⟨j·x⟩ ∈ (-½, ½]`, the signed distance from `j·x` to the nearest integer.
    ///
    /// Exact expansions reduce `j` greedily over the denominators `q_i`
    /// (`j = Σ c_i q_i`), so `j·x − Σ c_i p_i = Σ c_i (q_i x − p_i)` is
    /// accumulated from small, accurately known residues.
    pub fn frac_mul(&self, j: i64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        if j < 0 {
            let v = -self.frac_mul(-j);
            return if v <= -0.5 { v + 1.0 } else { v };
        }
        match &self.tail {
            Tail::Rational { num, den } => {
                let r = ((j as i128) * num).rem_euclid(*den);
                let r = if 2 * r > *den { r - den } else { r };
                r as f64 / *den as f64
            }
            Tail::Float { .. } => frac_mul_float(self.value, j),
            Tail::Surd { .. } => {
                let table = self.table.get_or_init(|| self.widest_table());
                let mut rest = j as i128;
                let mut acc = 0.0f64;
                let mut i = table.last_index();
                while rest > 0 {
                    while table.q(i) > rest {
                        i -= 1;
                    }
                    let c = rest / table.q(i);
                    rest -= c * table.q(i);
                    acc += c as f64 * table.residue_principal(i);
                }
                acc - acc.round_half_down()
            }
        }
    }

    fn widest_table(&self) -> ConvergentTable {
        let depth = self.reliable_depth.min(self.depth());
        let mut n = depth;
        // largest table that does not overflow
        loop {
            match convergents(self, n) {
                Ok(t) => return t,
                Err(_) if n > 1 => n -= 1,
                Err(e) => panic!("cannot build convergent table: {e}"),
            }
        }
    }
}

trait RoundHalfDown {
    fn round_half_down(self) -> f64;
}

impl RoundHalfDown for f64 {
    /// Nearest integer with `.5` rounding down, so the residue lands in `(-½, ½]`.
    fn round_half_down(self) -> f64 {
        let r = self.round();
        if r - self == 0.5 {
            r - 1.0
        } else {
            r
        }
    }
}

/// `⟨j·x⟩` for a float `x`, exact up to the final rounding via a two-product.
fn frac_mul_float(x: f64, j: i64) -> f64 {
    let jf = j as f64;
    let hi = jf * x;
    let lo = jf.mul_add(x, -hi);
    let r = hi - hi.round();
    let v = r + lo;
    v - v.round_half_down()
}

/// Convergents `p_i/q_i`, `i = -1..=i_max`, and the signed residues `q_i x − p_i`.
#[derive(Debug, Clone)]
pub struct ConvergentTable {
    p: Vec<i128>,
    q: Vec<i128>,
    a: Vec<u64>,
    residues: Vec<f64>,
}

/// Builds the table up to `i_max`.
pub fn convergents(cf: &ContinuedFraction, i_max: usize) -> Result<ConvergentTable> {
    let available = cf.reliable_depth.min(cf.depth());
    if i_max > available {
        return Err(DiophantineError::DepthExceeded {
            requested: i_max,
            reliable: available,
        });
    }
    let mut table = ConvergentTable::build(cf.a0, &cf.quotients[..i_max])?;
    // keep a_{i_max+1} around for intermediate accessors when known
    if let Some(a) = cf.quotient(i_max + 1) {
        table.a.push(a);
    }
    table.residues = (-1..=i_max as isize).map(|i| cf_residue(cf, &table, i)).collect();
    Ok(table)
}

fn cf_residue(cf: &ContinuedFraction, table: &ConvergentTable, i: isize) -> f64 {
    if i == -1 {
        return -1.0;
    }
    let (p, q) = (table.p(i), table.q(i));
    match &cf.tail {
        Tail::Rational { num, den } => (q * num - p * den) as f64 / *den as f64,
        Tail::Surd { .. } => {
            let xi = cf
                .complete_quotient(i as usize + 1)
                .expect("surd tail covers the table");
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign / (q as f64 * xi + table.q(i - 1) as f64)
        }
        Tail::Float { .. } => {
            const EXACT: i128 = 1 << 53;
            if p.abs() < EXACT && q.abs() < EXACT {
                (q as f64).mul_add(cf.value, -(p as f64))
            } else {
                match cf.complete_quotient(i as usize + 1) {
                    Some(xi) => {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        sign / (q as f64 * xi + table.q(i - 1) as f64)
                    }
                    None => q as f64 * cf.value - p as f64,
                }
            }
        }
    }
}

impl ConvergentTable {
    fn build(a0: i128, quotients: &[u64]) -> Result<Self> {
        let n = quotients.len();
        let mut p = Vec::with_capacity(n + 2);
        let mut q = Vec::with_capacity(n + 2);
        p.extend([1, a0]);
        q.extend([0, 1]);
        for (idx, &a) in quotients.iter().enumerate() {
            let a = a as i128;
            let next_p = a
                .checked_mul(p[idx + 1])
                .and_then(|v| v.checked_add(p[idx]))
                .ok_or(DiophantineError::Overflow(idx + 1))?;
            let next_q = a
                .checked_mul(q[idx + 1])
                .and_then(|v| v.checked_add(q[idx]))
                .ok_or(DiophantineError::Overflow(idx + 1))?;
            p.push(next_p);
            q.push(next_q);
        }
        Ok(Self {
            p,
            q,
            a: quotients.to_vec(),
            residues: Vec::new(),
        })
    }

    /// Largest principal index `i` stored.
    pub fn last_index(&self) -> isize {
        self.p.len() as isize - 2
    }

    /// `p_i` for `-1 ≤ i ≤ last_index`.
    pub fn p(&self, i: isize) -> i128 {
        self.p[(i + 1) as usize]
    }

    pub fn q(&self, i: isize) -> i128 {
        self.q[(i + 1) as usize]
    }

    /// `a_{i}` for `i ≥ 1`, when known.
    pub fn a(&self, i: usize) -> Option<u64> {
        if i == 0 {
            return None;
        }
        self.a.get(i - 1).copied()
    }

    fn check_intermediate(&self, i: isize, k: u64) -> Result<()> {
        let bad = DiophantineError::IndexOutOfRange { i, k };
        if i < 0 || i > self.last_index() {
            return Err(bad);
        }
        match self.a(i as usize + 1) {
            Some(a) if k <= a => Ok(()),
            // a_{i+1} unknown: only k ∈ {0} is meaningful
            None if k == 0 => Ok(()),
            _ => Err(bad),
        }
    }

    /// `p_{i,k} = k p_i + p_{i−1}`.
    pub fn p_ik(&self, i: isize, k: u64) -> Result<i128> {
        self.check_intermediate(i, k)?;
        Ok(k as i128 * self.p(i) + self.p(i - 1))
    }

    /// `q_{i,k} = k q_i + q_{i−1}`.
    pub fn q_ik(&self, i: isize, k: u64) -> Result<i128> {
        self.check_intermediate(i, k)?;
        Ok(k as i128 * self.q(i) + self.q(i - 1))
    }

    pub fn convergent(&self, i: isize) -> Fraction {
        Fraction {
            num: self.p(i),
            den: self.q(i),
        }
    }

    pub fn intermediate(&self, i: isize, k: u64) -> Result<Fraction> {
        Ok(Fraction {
            num: self.p_ik(i, k)?,
            den: self.q_ik(i, k)?,
        })
    }

    fn residue_principal(&self, i: isize) -> f64 {
        self.residues[(i + 1) as usize]
    }

    /// `q_{i,k}·x − p_{i,k}`; with `k = 0` this is the residue of `p_{i−1}/q_{i−1}`.
    pub fn residue(&self, i: isize, k: u64) -> Result<f64> {
        self.check_intermediate(i, k)?;
        Ok(k as f64 * self.residue_principal(i) + self.residue_principal(i - 1))
    }

    /// `q_i·x − p_i`, sign `(−1)^i`.
    pub fn principal_residue(&self, i: isize) -> Result<f64> {
        if i < -1 || i > self.last_index() {
            return Err(DiophantineError::IndexOutOfRange { i, k: 0 });
        }
        Ok(self.residue_principal(i))
    }
}

/// `mb − na = 1` for `a/m < b/n`, both irreducible.
pub fn is_farey_pair(left: &Fraction, right: &Fraction) -> Result<bool> {
    for f in [left, right] {
        if !f.is_irreducible() {
            return Err(DiophantineError::NotIrreducible(*f));
        }
    }
    if left >= right {
        return Err(DiophantineError::NotOrdered);
    }
    Ok(left.den * right.num - right.den * left.num == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Where a Farey interval sits relative to the convergents of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FareyClassification {
    /// Principal index; even means `p_i/q_i` is the left endpoint.
    pub i: isize,
    /// Intermediate index of the other endpoint, `0 ≤ k < a_{i+1}`.
    pub k: u64,
}

/// A connected component `(a/m, b/n)` of `ℝ ∖ F_order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FareyInterval {
    pub left: Fraction,
    pub right: Fraction,
    pub order: u64,
    pub classification: FareyClassification,
}

impl FareyInterval {
    pub fn mediant(&self) -> Fraction {
        self.left.mediant(&self.right)
    }

    pub fn endpoint(&self, side: Side) -> Fraction {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

/// The Farey interval of `order` containing the value of `cf`.
pub fn farey_interval_containing(cf: &ContinuedFraction, order: u64) -> Result<FareyInterval> {
    if order == 0 {
        return Err(DiophantineError::ZeroDepth);
    }
    let order_i = order as i128;
    // Need q_{i+1} > order, so extend until the table passes it.
    let available = cf.reliable_depth.min(cf.depth());
    let mut n = 0;
    let table = loop {
        let t = convergents(cf, n)?;
        if t.q(n as isize) > order_i {
            break t;
        }
        if n == available {
            if cf.terminated {
                return Err(DiophantineError::InFareySeries { order });
            }
            // a_{n+1} is not known exactly, but a lower bound may suffice
            if let Some(lower) = cf.tail_quotient_lower_bound() {
                let i = n as isize;
                if lower as i128 * t.q(i) + t.q(i - 1) > order_i {
                    let k = ((order_i - t.q(i - 1)) / t.q(i)) as u64;
                    let principal = t.convergent(i);
                    let other = Fraction {
                        num: k as i128 * t.p(i) + t.p(i - 1),
                        den: k as i128 * t.q(i) + t.q(i - 1),
                    };
                    return Ok(oriented_interval(principal, other, order, i, k));
                }
            }
            return Err(DiophantineError::DepthExceeded {
                requested: n + 1,
                reliable: available,
            });
        }
        n += 1;
    };
    // q_i ≤ order < q_{i+1}
    let i = table.last_index() - 1;
    let k = ((order_i - table.q(i - 1)) / table.q(i)) as u64;
    let principal = table.convergent(i);
    let other = table.intermediate(i, k)?;
    Ok(oriented_interval(principal, other, order, i, k))
}

fn oriented_interval(principal: Fraction, other: Fraction, order: u64, i: isize, k: u64) -> FareyInterval {
    let (left, right) = if i % 2 == 0 {
        (principal, other)
    } else {
        (other, principal)
    };
    FareyInterval {
        left,
        right,
        order,
        classification: FareyClassification { i, k },
    }
}

/// Convenience wrapper for a float `x`.
pub fn farey_interval_containing_f64(x: f64, order: u64) -> Result<FareyInterval> {
    let cf = cf_expand(&CfInput::Float(x), 64)?;
    farey_interval_containing(&cf, order)
}

/// One-sided best approximation with denominator at most `den_bound`.
pub fn best_approximation(cf: &ContinuedFraction, side: Side, den_bound: u64) -> Result<Fraction> {
    if cf.terminated && cf.depth() == 0 {
        return Err(DiophantineError::Integer);
    }
    Ok(farey_interval_containing(cf, den_bound)?.endpoint(side))
}

pub fn best_approximation_f64(x: f64, side: Side, den_bound: u64) -> Result<Fraction> {
    if x.fract() == 0.0 {
        return Err(DiophantineError::Integer);
    }
    let cf = cf_expand(&CfInput::Float(x), 64)?;
    best_approximation(&cf, side, den_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_minus_one() -> ContinuedFraction {
        ContinuedFraction::golden(60).shifted(-1)
    }

    #[test]
    fn golden_ratio_is_all_ones() {
        let cf = ContinuedFraction::golden(6);
        assert_eq!(cf.a0(), 1);
        assert_eq!(cf.quotients(), &[1, 1, 1, 1, 1, 1]);
        assert_eq!(cf.kind(), ValueKind::ExactQuadratic);
        assert_eq!(cf.period(), Some((1, 1)));
        // τ² = τ + 1 ⇒ 1/(τ − 1) = τ, so every complete quotient is τ
        let tau = QuadraticSurd::GOLDEN.to_f64();
        for n in 1..=6 {
            assert!((cf.complete_quotient(n).unwrap() - tau).abs() < 1e-15);
        }
        assert_eq!(cf.max_quotient(), Some(1));
    }

    #[test]
    fn sqrt2_period() {
        let cf = cf_expand(&CfInput::Quadratic(QuadraticSurd::SQRT2), 8).unwrap();
        assert_eq!(cf.a0(), 1);
        assert_eq!(cf.quotients(), &[2; 8]);
    }

    #[test]
    fn sqrt7_period() {
        // √7 = [2; 1,1,1,4, 1,1,1,4, …]
        let s = QuadraticSurd { u: 0, v: 1, d: 7, w: 1 };
        let cf = cf_expand(&CfInput::Quadratic(s), 8).unwrap();
        assert_eq!(cf.a0(), 2);
        assert_eq!(cf.quotients(), &[1, 1, 1, 4, 1, 1, 1, 4]);
        assert_eq!(cf.period(), Some((1, 4)));
    }

    #[test]
    fn negative_surd_matches_float() {
        let s = QuadraticSurd { u: 3, v: -2, d: 11, w: 5 };
        let exact = cf_expand(&CfInput::Quadratic(s), 10).unwrap();
        let float = cf_expand(&CfInput::Float(s.to_f64()), 10).unwrap();
        assert_eq!(exact.a0(), float.a0());
        assert_eq!(&exact.quotients()[..6], &float.quotients()[..6]);
    }

    #[test]
    fn rational_terminates() {
        let cf = cf_expand(&CfInput::Rational { num: 7, den: 3 }, 10).unwrap();
        assert_eq!(cf.a0(), 2);
        assert_eq!(cf.quotients(), &[3]);
        assert!(cf.is_terminated());
        let neg = cf_expand(&CfInput::Rational { num: -7, den: 3 }, 10).unwrap();
        assert_eq!(neg.a0(), -3);
        assert_eq!(neg.quotients(), &[1, 2]);
    }

    #[test]
    fn float_expansion_reproduces_input() {
        for x in [std::f64::consts::E, std::f64::consts::PI, std::f64::consts::FRAC_1_PI, 2f64.sqrt()] {
            let cf = cf_expand(&CfInput::Float(x), 30).unwrap();
            assert!(cf.reliable_depth() >= 5);
            for n in 0..=cf.depth() {
                let back = cf.evaluate_with_tail(n);
                assert!(((back - x) / x).abs() < FLOAT_RELIABILITY, "x={x} n={n} back={back}");
            }
        }
    }

    #[test]
    fn float_expansion_of_e_is_known() {
        let cf = cf_expand(&CfInput::Float(std::f64::consts::E), 12).unwrap();
        assert_eq!(cf.a0(), 2);
        assert_eq!(&cf.quotients()[..10], &[1, 2, 1, 1, 4, 1, 1, 6, 1, 1]);
    }

    #[test]
    fn float_expansion_marks_reliability() {
        let cf = cf_expand(&CfInput::Float(std::f64::consts::PI), 200).unwrap();
        assert!(cf.is_truncated());
        assert!(cf.reliable_depth() < 200);
        assert_eq!(&cf.quotients()[..5], &[7, 15, 1, 292, 1]);
        assert!(matches!(
            convergents(&cf, 150),
            Err(DiophantineError::DepthExceeded { .. })
        ));
        // 0.5 is a dyadic rational: the Gauss map terminates exactly
        let half = cf_expand(&CfInput::Float(0.5), 10).unwrap();
        assert!(half.is_terminated());
        assert_eq!(half.quotients(), &[2]);
    }

    #[test]
    fn fibonacci_convergents() {
        let cf = ContinuedFraction::golden(10);
        let t = convergents(&cf, 4).unwrap();
        let p: Vec<i128> = (0..=4).map(|i| t.p(i)).collect();
        let q: Vec<i128> = (0..=4).map(|i| t.q(i)).collect();
        assert_eq!(p, vec![1, 2, 3, 5, 8]);
        assert_eq!(q, vec![1, 1, 2, 3, 5]);
        assert_eq!(t.p_ik(0, 0).unwrap(), 1);
        assert_eq!(t.q_ik(0, 0).unwrap(), 0);
        assert_eq!(t.p(2) * t.q(1) - t.p(1) * t.q(2), -1);
    }

    #[test]
    fn deep_golden_table_needs_wide_integers() {
        let cf = ContinuedFraction::golden(100);
        let t = convergents(&cf, 100).unwrap();
        assert!(t.q(100) > i64::MAX as i128);
        for i in 0..=100 {
            // the true value is ±1, so arithmetic mod 2^128 is exact
            let det = t.p(i).wrapping_mul(t.q(i - 1)).wrapping_sub(t.p(i - 1).wrapping_mul(t.q(i)));
            assert_eq!(det, if i % 2 == 1 { 1 } else { -1 });
        }
    }

    #[test]
    fn intermediate_endpoints() {
        let s = QuadraticSurd { u: 0, v: 1, d: 7, w: 1 };
        let cf = cf_expand(&CfInput::Quadratic(s), 10).unwrap();
        let t = convergents(&cf, 6).unwrap();
        for i in 0..6isize {
            let a = t.a(i as usize + 1).unwrap();
            assert_eq!(t.p_ik(i, 0).unwrap(), t.p(i - 1));
            assert_eq!(t.p_ik(i, a).unwrap(), t.p(i + 1));
            assert_eq!(t.q_ik(i, a).unwrap(), t.q(i + 1));
        }
        assert!(t.p_ik(3, 5).is_err());
    }

    #[test]
    fn golden_residues() {
        let cf = ContinuedFraction::golden(20);
        let t = convergents(&cf, 10).unwrap();
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        // (i, k) = (2, 0) is principal i = 1: τ − 2
        assert!((t.residue(2, 0).unwrap() - (tau - 2.0)).abs() < 1e-15);
        assert!((t.residue(2, 0).unwrap() + 0.381966).abs() < 1e-6);
        assert!((t.principal_residue(2).unwrap() - 0.236068).abs() < 1e-6);
        for i in 0..=10 {
            let r = t.principal_residue(i).unwrap();
            assert_eq!(r > 0.0, i % 2 == 0, "i={i}");
        }
        let exact = cf_expand(&CfInput::Rational { num: 13, den: 8 }, 10).unwrap();
        let te = convergents(&exact, exact.depth()).unwrap();
        assert_eq!(te.principal_residue(te.last_index()).unwrap(), 0.0);
    }

    #[test]
    fn farey_pair_predicate() {
        let f = |n, d| Fraction::new(n, d).unwrap();
        assert!(is_farey_pair(&f(1, 3), &f(2, 5)).unwrap());
        assert!(!is_farey_pair(&f(1, 3), &f(3, 5)).unwrap());
        assert!(is_farey_pair(&f(3, 5), &f(2, 3)).unwrap());
        assert_eq!(f(3, 5).mediant(&f(2, 3)), f(5, 8));
        assert!(matches!(
            is_farey_pair(&f(2, 6), &f(2, 5)),
            Err(DiophantineError::NotIrreducible(_))
        ));
        assert!(matches!(is_farey_pair(&f(2, 3), &f(3, 5)), Err(DiophantineError::NotOrdered)));
    }

    #[test]
    fn farey_interval_examples() {
        let x = golden_minus_one();
        let iv = farey_interval_containing(&x, 5).unwrap();
        assert_eq!(iv.left, Fraction::new(3, 5).unwrap());
        assert_eq!(iv.right, Fraction::new(2, 3).unwrap());
        // x = [0;1,1,1,…]: q_4 = 5 ≤ 5 < q_5 = 8, i even ⇒ p_4/q_4 is on the left
        assert_eq!(iv.classification, FareyClassification { i: 4, k: 0 });

        let tau = ContinuedFraction::golden(20);
        let unit = farey_interval_containing(&tau, 1).unwrap();
        assert_eq!(unit.left, Fraction::new(1, 1).unwrap());
        assert_eq!(unit.right, Fraction::new(2, 1).unwrap());
    }

    #[test]
    fn farey_interval_rejects_members() {
        let cf = cf_expand(&CfInput::Rational { num: 2, den: 3 }, 10).unwrap();
        assert!(matches!(
            farey_interval_containing(&cf, 3),
            Err(DiophantineError::InFareySeries { order: 3 })
        ));
        assert!(farey_interval_containing(&cf, 2).is_ok());
    }

    #[test]
    fn best_approximation_examples() {
        let x = golden_minus_one();
        assert_eq!(best_approximation(&x, Side::Left, 5).unwrap(), Fraction::new(3, 5).unwrap());
        assert_eq!(best_approximation(&x, Side::Right, 5).unwrap(), Fraction::new(2, 3).unwrap());
        assert_eq!(
            best_approximation_f64(0.5 + 1e-9, Side::Left, 2).unwrap(),
            Fraction::new(1, 2).unwrap()
        );
        assert!(matches!(best_approximation_f64(3.0, Side::Left, 2), Err(DiophantineError::Integer)));
    }

    #[test]
    fn frac_mul_matches_rational_and_float() {
        let cf = ContinuedFraction::golden(80);
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        for j in [1i64, 2, 3, 7, 100, 9999, 123_456] {
            let fast = cf.frac_mul(j);
            let naive = {
                let v = j as f64 * tau;
                v - v.round()
            };
            assert!((fast - naive).abs() < 1e-9, "j={j}");
            assert!(fast > -0.5 && fast <= 0.5);
        }
        assert!((cf.frac_mul(1) - (tau - 2.0)).abs() < 1e-16);
        let r = cf_expand(&CfInput::Rational { num: 2, den: 7 }, 10).unwrap();
        assert!((r.frac_mul(3) - (-1.0 / 7.0)).abs() < 1e-16);
        assert!((r.frac_mul(-3) - (1.0 / 7.0)).abs() < 1e-16);
    }

    #[test]
    fn frac_mul_is_accurate_for_large_j() {
        // Compare against an exact integer computation for τ:
        // j·τ = (j + j√5)/2, and floor(j√5) = isqrt(5 j²).
        let cf = ContinuedFraction::golden(90);
        for j in [10_000i64, 1_000_003, 987_654_321] {
            let j128 = j as i128;
            let r = isqrt(5 * j128 * j128);
            // j√5 = r + s with s = m/(r + √(5j²)), m = 5j² − r² exact
            let m = (5 * j128 * j128 - r * r) as f64;
            let s = m / (r as f64 + ((5 * j128 * j128) as f64).sqrt());
            let half_int = (j128 + r) % 2;
            let frac = (half_int as f64 + s) / 2.0;
            let expected = frac - frac.round();
            let got = cf.frac_mul(j);
            assert!((got - expected).abs() < 1e-13, "j={j} got={got} want={expected}");
        }
    }
}
