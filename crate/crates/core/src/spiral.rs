//! Archimedean spiral lattices `S(α, θ) = {j^α e^{ijθ}}` and their
//! linearizations.
//!
//! Three site families share one parameterization (see [`SpiralSet`]):
//! the lattice `S` itself, the re-indexed `S_μ = {(μ+j)^α e^{i(μ+j)θ}}`
//! and the normalized `Σ_μ = {(1+j/μ)^α e^{ijθ}}`. Near the site `1` of
//! `Σ_μ` the lattice looks like `Λ_μ = λ_μ Z + 2πi Z` pushed through
//! `ψ(s+it) = (1+s/α)^α e^{it}`.
//!
//! Angles are always formed as `2π⟨j·θ/2π⟩`, with `⟨·⟩` evaluated by
//! [`ContinuedFraction::frac_mul`], so they stay accurate for large `j`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::diophantine::{self, cf_expand, CfInput, ContinuedFraction, QuadraticSurd, ValueKind};
use crate::geom::PlanarPoint;
use crate::linlattice::{self, parastichy_state, reduced_basis, CellShape, LinearLattice};

/// Depth of exact expansions; `q_i` of the golden ratio still fits in `i128`.
pub const EXACT_DEPTH: usize = 90;

/// Depth requested from float expansions (they usually stop earlier).
pub const FLOAT_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpiralError {
    #[error("exponent α must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("μ must be at least 1, got {0}")]
    InvalidMu(f64),
    #[error("index {j} is not above −μ = {neg_mu}")]
    IndexBelowRange { j: i64, neg_mu: f64 },
    #[error("θ/2π is rational; spiral lattice theory needs an irrational divergence")]
    RationalDivergence,
    #[error("partial quotient a_{index} = {value} exceeds the bound M1 = {bound}")]
    QuotientExceedsBound { index: usize, value: u64, bound: u64 },
    #[error("{0} lies outside the strip s > −α, |t| < π")]
    OutsideStrip(String),
    #[error(transparent)]
    Diophantine(#[from] diophantine::DiophantineError),
    #[error(transparent)]
    Lattice(#[from] linlattice::LatticeError),
}

pub type Result<T> = std::result::Result<T, SpiralError>;

#[derive(Debug, Clone)]
pub struct SpiralConfig {
    alpha: f64,
    theta: f64,
    cf: ContinuedFraction,
    m1: Option<u64>,
}

impl SpiralConfig {
    /// Divergence angle `theta` in radians, expanded as a float.
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(diophantine::DiophantineError::NonFinite(theta).into());
        }
        let cf = cf_expand(&CfInput::Float(theta / (2.0 * PI)), FLOAT_DEPTH)?;
        Self::build(alpha, theta, cf)
    }

    /// Divergence `θ = 2π·x` with `x` given by its continued fraction.
    pub fn from_cf(alpha: f64, cf: ContinuedFraction) -> Result<Self> {
        let theta = 2.0 * PI * cf.value();
        Self::build(alpha, theta, cf)
    }

    /// `θ = 2π(u + v√d)/w` expanded exactly.
    pub fn from_surd(alpha: f64, surd: QuadraticSurd) -> Result<Self> {
        Self::from_cf(alpha, cf_expand(&CfInput::Quadratic(surd), EXACT_DEPTH)?)
    }

    /// `θ = 2πτ`, the golden angle.
    pub fn golden(alpha: f64) -> Result<Self> {
        Self::from_surd(alpha, QuadraticSurd::GOLDEN)
    }

    fn build(alpha: f64, theta: f64, cf: ContinuedFraction) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(SpiralError::InvalidAlpha(alpha));
        }
        // a periodic expansion is bounded by its largest quotient
        let m1 = match cf.kind() {
            ValueKind::ExactQuadratic => cf.max_quotient(),
            _ => None,
        };
        Ok(Self { alpha, theta, cf, m1 })
    }

    /// Declares `a_i ≤ m1`, checked against every available quotient.
    pub fn with_quotient_bound(mut self, m1: u64) -> Result<Self> {
        if let Some((index, &value)) = self.cf.quotients().iter().enumerate().find(|(_, &a)| a > m1) {
            return Err(SpiralError::QuotientExceedsBound {
                index: index + 1,
                value,
                bound: m1,
            });
        }
        self.m1 = Some(m1);
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Continued fraction of `θ/2π`.
    pub fn cf(&self) -> &ContinuedFraction {
        &self.cf
    }

    /// Bound `M1` on the partial quotients, if known.
    pub fn m1(&self) -> Option<u64> {
        self.m1
    }

    /// `M2 = 1 + M1/2`.
    pub fn m2(&self) -> Option<f64> {
        self.m1.map(|m| 1.0 + 0.5 * m as f64)
    }

    /// `⟨j·θ/2π⟩ ∈ (−½, ½]`.
    pub fn turn(&self, j: i64) -> f64 {
        self.cf.frac_mul(j)
    }

    /// `⟨t·θ/2π⟩` for real `t`, splitting off the integer part exactly.
    pub fn turn_real(&self, t: f64) -> f64 {
        let whole = t.floor();
        let v = self.turn(whole as i64) + (t - whole) * (self.cf.value() - self.cf.a0() as f64);
        v - v.round()
    }

    /// Fails with [`SpiralError::RationalDivergence`] when `θ/2π` has a
    /// terminating expansion.
    pub fn require_irrational(&self) -> Result<()> {
        if self.cf.is_terminated() {
            return Err(SpiralError::RationalDivergence);
        }
        Ok(())
    }

    /// The linear lattice `Λ(z)`, `z = {θ/2π} + iy`.
    pub fn linear_lattice(&self, y: f64) -> Result<LinearLattice> {
        if self.cf.is_terminated() && self.cf.quotients().is_empty() {
            return Err(SpiralError::RationalDivergence);
        }
        let shifted = self.cf.shifted(-self.cf.a0());
        Ok(LinearLattice::from_cf(shifted, y)?)
    }
}

/// Identifies a site of a spiral family: the extra origin or an index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SiteId {
    Origin,
    Index(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralSite {
    pub j: u64,
    pub pos: PlanarPoint,
}

/// Which spiral point set the indices refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpiralSet {
    /// `S`: `z_j = j^α e^{ijθ}`, `j ≥ 1`; the origin is `z_0`.
    Standard,
    /// `S_μ`: `z_{μ+j} = (μ+j)^α e^{i(μ+j)θ}`, `j > −μ`, plus the origin.
    Parameterized { mu: f64 },
    /// `Σ_μ`: `z_{μ,j} = (1+j/μ)^α e^{ijθ}`, `j > −μ`, plus the origin.
    Normalized { mu: f64 },
}

/// A spiral point set bound to its configuration.
#[derive(Debug, Clone, Copy)]
pub struct SpiralFamily<'a> {
    pub cfg: &'a SpiralConfig,
    pub set: SpiralSet,
}

impl<'a> SpiralFamily<'a> {
    pub fn new(cfg: &'a SpiralConfig, set: SpiralSet) -> Result<Self> {
        match set {
            SpiralSet::Parameterized { mu } | SpiralSet::Normalized { mu } if !(mu >= 1.0 && mu.is_finite()) => {
                Err(SpiralError::InvalidMu(mu))
            }
            _ => Ok(Self { cfg, set }),
        }
    }

    pub fn standard(cfg: &'a SpiralConfig) -> Self {
        Self {
            cfg,
            set: SpiralSet::Standard,
        }
    }

    /// Smallest valid index.
    pub fn min_index(&self) -> i64 {
        match self.set {
            SpiralSet::Standard => 1,
            SpiralSet::Parameterized { mu } | SpiralSet::Normalized { mu } => (-mu).floor() as i64 + 1,
        }
    }

    /// Modulus of site `j` (no range check).
    pub fn modulus(&self, j: i64) -> f64 {
        let a = self.cfg.alpha;
        match self.set {
            SpiralSet::Standard => (j as f64).powf(a),
            SpiralSet::Parameterized { mu } => (mu + j as f64).powf(a),
            SpiralSet::Normalized { mu } => (a * (j as f64 / mu).ln_1p()).exp(),
        }
    }

    /// Real index whose modulus is `r`.
    fn index_of_modulus(&self, r: f64) -> f64 {
        let a = self.cfg.alpha;
        match self.set {
            SpiralSet::Standard => r.powf(1.0 / a),
            SpiralSet::Parameterized { mu } => r.powf(1.0 / a) - mu,
            SpiralSet::Normalized { mu } => mu * (r.ln() / a).exp_m1(),
        }
    }

    /// Argument of site `j`, in turns, reduced to `(−½, ½]`.
    pub fn turns(&self, j: i64) -> f64 {
        match self.set {
            SpiralSet::Standard | SpiralSet::Normalized { .. } => self.cfg.turn(j),
            SpiralSet::Parameterized { mu } => {
                let v = self.cfg.turn_real(mu) + self.cfg.turn(j);
                v - v.round()
            }
        }
    }

    pub fn position(&self, site: SiteId) -> PlanarPoint {
        match site {
            SiteId::Origin => PlanarPoint::ZERO,
            SiteId::Index(j) => PlanarPoint::from_polar(self.modulus(j), 2.0 * PI * self.turns(j)),
        }
    }

    /// Every site whose modulus lies in `[r_lo, r_hi]`.
    pub fn sites_in_band(&self, r_lo: f64, r_hi: f64) -> Vec<(SiteId, PlanarPoint)> {
        let mut out = Vec::new();
        if r_lo <= 0.0 {
            out.push((SiteId::Origin, PlanarPoint::ZERO));
        }
        let lo = if r_lo <= 0.0 {
            self.min_index()
        } else {
            (self.index_of_modulus(r_lo).ceil() as i64).max(self.min_index())
        };
        let hi = self.index_of_modulus(r_hi).floor() as i64;
        for j in lo..=hi {
            let id = SiteId::Index(j);
            out.push((id, self.position(id)));
        }
        out
    }

    /// Asymptotic cell area `2πα·(modulus)^{2 − 1/α}·(index scale)`, used as a size guess.
    pub fn area_guess(&self, j: i64) -> f64 {
        let a = self.cfg.alpha;
        match self.set {
            SpiralSet::Standard => 2.0 * PI * a * (j.max(1) as f64).powf(2.0 * a - 1.0),
            SpiralSet::Parameterized { mu } => 2.0 * PI * a * (mu + j as f64).max(1.0).powf(2.0 * a - 1.0),
            SpiralSet::Normalized { mu } => {
                let n = (mu + j as f64).max(1.0);
                2.0 * PI * a * n.powf(2.0 * a - 1.0) * mu.powf(-2.0 * a)
            }
        }
    }
}

/// `z_j = j^α e^{ijθ}`.
pub fn site(cfg: &SpiralConfig, j: u64) -> SpiralSite {
    let pos = if j == 0 {
        PlanarPoint::ZERO
    } else {
        SpiralFamily::standard(cfg).position(SiteId::Index(j as i64))
    };
    SpiralSite { j, pos }
}

/// `z_{μ+j} = (μ+j)^α e^{i(μ+j)θ}`, the `j`-th site of `S_μ`.
pub fn parameterized_site(cfg: &SpiralConfig, mu: f64, j: i64) -> Result<PlanarPoint> {
    let fam = SpiralFamily::new(cfg, SpiralSet::Parameterized { mu })?;
    check_index(j, mu)?;
    Ok(fam.position(SiteId::Index(j)))
}

/// `z_{μ,j} = (1+j/μ)^α e^{ijθ}`, the `j`-th site of `Σ_μ`.
pub fn normalized_site(cfg: &SpiralConfig, mu: f64, j: i64) -> Result<PlanarPoint> {
    let fam = SpiralFamily::new(cfg, SpiralSet::Normalized { mu })?;
    check_index(j, mu)?;
    Ok(fam.position(SiteId::Index(j)))
}

fn check_index(j: i64, mu: f64) -> Result<()> {
    if (j as f64) <= -mu {
        return Err(SpiralError::IndexBelowRange { j, neg_mu: -mu });
    }
    Ok(())
}

/// `λ_{μ,j} = jα/μ + 2πi⟨jθ/2π⟩`.
pub fn lambda_point(cfg: &SpiralConfig, mu: f64, j: i64) -> PlanarPoint {
    PlanarPoint::new(j as f64 * cfg.alpha / mu, 2.0 * PI * cfg.turn(j))
}

/// `y = α/(2πμ)`: `Λ_μ = 2πi·conj(Λ(⟨θ/2π⟩ + iy))`.
pub fn linear_height(alpha: f64, mu: f64) -> f64 {
    alpha / (2.0 * PI * mu)
}

/// Maps a point of `Λ(z)` to the corresponding point of `Λ_μ`.
pub fn to_lambda_mu(p: PlanarPoint) -> PlanarPoint {
    PlanarPoint::new(2.0 * PI * p.im, 2.0 * PI * p.re)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationState {
    pub mu: f64,
    /// `α/μ + 2πi⟨θ/2π⟩`
    pub lambda_mu: PlanarPoint,
    /// Shortest nonzero length in `Λ_μ`.
    pub delta_mu: f64,
    /// `|Im(λ2/λ1)|` of the reduced pair.
    pub v_mu: f64,
    /// `1 + M1/2`, when `M1` is known.
    pub m2: Option<f64>,
    /// `C_α (4+4M2)² sqrt(4πα/(√3 μ))`, when `M1` is known.
    pub epsilon_mu: Option<f64>,
    /// Regime `μ_{i,k} ≤ μ < μ_{i,k+1}`.
    pub i: usize,
    pub k: u64,
    pub shape: CellShape,
    /// Parastichy numbers `q_i, q_{i,k}` and, in a hexagon, `q_{i,k+1}`.
    pub parastichy_numbers: Vec<u64>,
}

pub fn linearization(cfg: &SpiralConfig, mu: f64) -> Result<LinearizationState> {
    if !(mu >= 1.0 && mu.is_finite()) {
        return Err(SpiralError::InvalidMu(mu));
    }
    cfg.require_irrational()?;
    let lat = cfg.linear_lattice(linear_height(cfg.alpha, mu))?;
    let state = parastichy_state(&lat)?;
    let basis = reduced_basis(&lat)?;
    let m2 = cfg.m2();
    let mut numbers: Vec<u64> = state.indices.iter().map(|f| f.den() as u64).collect();
    numbers.sort_unstable();
    Ok(LinearizationState {
        mu,
        lambda_mu: PlanarPoint::new(cfg.alpha / mu, 2.0 * PI * cfg.turn(1)),
        delta_mu: 2.0 * PI * basis.delta,
        v_mu: basis.v,
        m2,
        epsilon_mu: m2.map(|m2| epsilon_mu(cfg.alpha, mu, m2)),
        i: state.i,
        k: state.k,
        shape: state.shape,
        parastichy_numbers: numbers,
    })
}

/// `ε_μ = C_α (4+4M2)² sqrt(4πα/(√3 μ))`.
pub fn epsilon_mu(alpha: f64, mu: f64, m2: f64) -> f64 {
    taylor_constant(alpha) * (4.0 + 4.0 * m2).powi(2) * (4.0 * PI * alpha / (3f64.sqrt() * mu)).sqrt()
}

/// `μ_{i,k} = α/(2π η_{i,k})`, where the linearization changes parastichy numbers.
pub fn mu_transition(cfg: &SpiralConfig, i: usize, k: u64) -> Result<f64> {
    let lat = cfg.linear_lattice(1.0)?;
    let eta = linlattice::richards_eta(&lat, i, k)?;
    Ok(cfg.alpha / (2.0 * PI * eta))
}

/// `ψ(s+it) = (1+s/α)^α e^{it}` on `s > −α`, `|t| < π`.
///
/// `ψ(λ_{μ,j}) = z_{μ,j}` and `ψ(ζ) = 1 + ζ + O(|ζ|²)`.
pub fn phi(cfg: &SpiralConfig, zeta: PlanarPoint) -> Result<PlanarPoint> {
    let a = cfg.alpha;
    if !(zeta.re > -a && zeta.im.abs() < PI) {
        return Err(SpiralError::OutsideStrip(format!("{} + {}i", zeta.re, zeta.im)));
    }
    let r = ((zeta.re / a).ln_1p() * a).exp();
    Ok(PlanarPoint::from_polar(r, zeta.im))
}

/// Radius of the disk on which [`taylor_constant`] is certified.
pub fn taylor_radius(alpha: f64) -> f64 {
    1f64.min(0.5 * alpha)
}

/// `C_α` with `|ψ(ζ) − 1 − ζ| ≤ C_α |ζ|²` for `|ζ| ≤` [`taylor_radius`].
///
/// Along a ray the second derivative of `ψ = g(s) e^{it}` is
/// `g'' c² + 2i g' cs − g s²`, bounded by `|g''| + |g'| + |g|`; the
/// remainder is half that, maximized over a grid in `s` with a 1.25 margin.
pub fn taylor_constant(alpha: f64) -> f64 {
    const GRID: usize = 4096;
    let r = taylor_radius(alpha);
    let mut worst: f64 = 0.0;
    for n in 0..=GRID {
        let s = -r + 2.0 * r * n as f64 / GRID as f64;
        let base = 1.0 + s / alpha;
        let g = base.powf(alpha);
        let g1 = base.powf(alpha - 1.0);
        let g2 = ((alpha - 1.0) / alpha * base.powf(alpha - 2.0)).abs();
        worst = worst.max(g + g1 + g2);
    }
    1.25 * 0.5 * worst
}

/// Smallest μ covered by the local perturbation certificate:
/// `μ ≥ (4πα/√3)(16 C_α (1+M2))²`, and large enough that the disk of radius
/// `(4+4M2)δ_μ` stays inside the Taylor disk.
pub fn local_perturbation_floor(alpha: f64, m2: f64) -> f64 {
    let c = taylor_constant(alpha);
    let base = 4.0 * PI * alpha / 3f64.sqrt();
    let by_constant = base * (16.0 * c * (1.0 + m2)).powi(2);
    // δ_μ² ≤ (2π)² (2/√3) α/(2πμ) = base/μ
    let by_radius = base * ((4.0 + 4.0 * m2) / taylor_radius(alpha)).powi(2);
    by_constant.max(by_radius)
}

/// `μ ≥ (4πα/√3) C_α² (45+10M2)² (4+4M2)⁴`, from which the symmetric-difference
/// bound `C/√μ` is guaranteed.
pub fn area_rate_floor(alpha: f64, m2: f64) -> f64 {
    let c = taylor_constant(alpha);
    let eq = 4.0 * PI * alpha / 3f64.sqrt() * c * c * (45.0 + 10.0 * m2).powi(2) * (4.0 + 4.0 * m2).powi(4);
    eq.max(local_perturbation_floor(alpha, m2))
}

/// `C = 12 C_α (15+3M2)(4+4M2)² sqrt(4πα/√3)`.
pub fn area_rate_constant(alpha: f64, m2: f64) -> f64 {
    12.0 * taylor_constant(alpha)
        * (15.0 + 3.0 * m2)
        * (4.0 + 4.0 * m2).powi(2)
        * (4.0 * PI * alpha / 3f64.sqrt()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{self, angle};
    use crate::linlattice::voronoi_cell_origin_certified;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn golden(alpha: f64) -> SpiralConfig {
        SpiralConfig::golden(alpha).unwrap()
    }

    #[test]
    fn site_examples() {
        let cfg = golden(0.5);
        assert_eq!(site(&cfg, 0).pos, PlanarPoint::ZERO);
        assert_relative_eq!(site(&cfg, 4).pos.norm(), 2.0, max_relative = 1e-15);
        let z1 = site(&cfg, 1).pos;
        assert!((z1.re + 0.73736).abs() < 1e-5 && (z1.im + 0.67549).abs() < 1e-5);
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(z1.re, (2.0 * PI * tau).cos(), epsilon = 1e-14);
        assert_relative_eq!(z1.im, (2.0 * PI * tau).sin(), epsilon = 1e-14);
        assert_eq!(cfg.m1(), Some(1));
    }

    #[test]
    fn large_index_angles_use_exact_reduction() {
        let cfg = golden(1.0);
        // ⟨F_45 τ⟩ = τ^{-45}; naive f64 j·τ loses it entirely
        let f = 1_134_903_170i64;
        let expect = 3.940_544_068_618_276_4e-10;
        let turn = cfg.turn(f);
        assert!((turn - expect).abs() < 1e-18, "{turn} vs {expect}");
    }

    #[test]
    fn normalized_sites_and_scaling() {
        let cfg = golden(0.5);
        assert_eq!(normalized_site(&cfg, 10.0, 0).unwrap(), PlanarPoint::new(1.0, 0.0));
        assert!(normalized_site(&cfg, 10.0, -10).is_err());
        for (mu, j) in [(1.0, 3), (7.5, -6), (1234.25, 17), (1e4, -9999)] {
            let zn = normalized_site(&cfg, mu, j).unwrap();
            let zp = parameterized_site(&cfg, mu, j).unwrap();
            let rot = PlanarPoint::from_polar(mu.powf(0.5), 2.0 * PI * cfg.turn_real(mu));
            let scaled = rot * zn;
            assert!(scaled.distance(zp) <= 1e-10 * zp.norm().max(1.0));
        }
        // integer μ: S_μ reproduces S
        for j in -5..5 {
            let zp = parameterized_site(&cfg, 100.0, j).unwrap();
            let zs = site(&cfg, (100 + j) as u64).pos;
            assert!(zp.distance(zs) < 1e-12);
        }
    }

    #[test]
    fn transitions_golden() {
        let cfg = golden(0.5);
        let mu = mu_transition(&cfg, 2, 0).unwrap();
        assert!((mu - 0.374778).abs() < 1e-6, "{mu}");
        // right angle between λ_{μ,q_i} and λ_{μ,q_{i,k}} at the transition
        let oracle = |i: isize, k: u64| {
            let t = cfg.linear_lattice(1.0).unwrap();
            let t = t.table();
            let (qi, qik) = (t.q(i) as i64, t.q_ik(i, k).unwrap() as i64);
            let (mut lo, mut hi) = (1e-3, 1e12);
            let dot = |m: f64| lambda_point(&cfg, m, qi).dot(lambda_point(&cfg, m, qik));
            let s0 = dot(lo).signum();
            for _ in 0..300 {
                let mid = (lo * hi).sqrt();
                if dot(mid).signum() == s0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        assert_relative_eq!(mu, oracle(2, 0), max_relative = 1e-9);
        assert_relative_eq!(mu_transition(&cfg, 6, 0).unwrap(), oracle(6, 0), max_relative = 1e-9);
        let mut prev = 0.0;
        for i in 1..=10 {
            let a = cfg.cf().quotient(i + 1).unwrap();
            for k in 0..=a {
                let m = mu_transition(&cfg, i, k).unwrap();
                if k > 0 {
                    assert!(m > prev);
                }
                prev = m;
            }
            let end = mu_transition(&cfg, i, a).unwrap();
            assert_relative_eq!(end, mu_transition(&cfg, i + 1, 0).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn linearization_numbers_between_transitions() {
        let cfg = golden(0.5);
        for i in 3..12 {
            let lo = mu_transition(&cfg, i, 0).unwrap();
            let hi = mu_transition(&cfg, i + 1, 0).unwrap();
            let mu = (lo * hi).sqrt();
            let lin = linearization(&cfg, mu).unwrap();
            assert_eq!(lin.shape, CellShape::Hexagon);
            let t = cfg.linear_lattice(1.0).unwrap();
            let t = t.table();
            let ii = i as isize;
            let mut expect = vec![t.q(ii) as u64, t.q(ii - 1) as u64, t.q(ii + 1) as u64];
            expect.sort_unstable();
            assert_eq!(lin.parastichy_numbers, expect);
            // geometric cell of Λ_μ agrees
            let lat = cfg.linear_lattice(linear_height(0.5, mu)).unwrap();
            let cell = voronoi_cell_origin_certified(&lat).unwrap();
            let mut geo: Vec<u64> = cell.neighbors.iter().map(|n| n.m.unsigned_abs()).collect();
            geo.sort_unstable();
            geo.dedup();
            assert_eq!(geo, expect);
            // |V(0, Λ_μ)| = (2π)² α/(2πμ) = v δ²
            let area = (2.0 * PI).powi(2) * geom::area(&cell.polygon);
            assert_relative_eq!(area, 2.0 * PI * 0.5 / mu, max_relative = 1e-9);
            assert_relative_eq!(lin.v_mu * lin.delta_mu.powi(2), area, max_relative = 1e-9);
            assert!(lin.v_mu <= 1.5 + 1e-12 && lin.v_mu >= 3f64.sqrt() / 2.0 - 1e-12);
            assert!((lin.delta_mu / (2.0 * PI)).powi(2) <= 2.0 / 3f64.sqrt() * 0.5 / (2.0 * PI * mu) * (1.0 + 1e-12));
        }
        let at = mu_transition(&cfg, 5, 0).unwrap();
        let lin = linearization(&cfg, at).unwrap();
        assert_eq!(lin.shape, CellShape::Rectangle);
        assert_eq!(lin.parastichy_numbers.len(), 2);
    }

    #[test]
    fn lambda_points_lie_in_the_lattice() {
        let cfg = golden(0.5);
        let mu = 321.0;
        let lam = linearization(&cfg, mu).unwrap().lambda_mu;
        for j in [-300i64, -7, 1, 2, 55, 1000] {
            let p = lambda_point(&cfg, mu, j);
            let diff = p - lam * j as f64;
            assert!(diff.re.abs() < 1e-12);
            let n = diff.im / (2.0 * PI);
            assert!((n - n.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_examples() {
        let cfg = golden(0.5);
        assert_eq!(phi(&cfg, PlanarPoint::ZERO).unwrap(), PlanarPoint::ONE);
        assert_relative_eq!(phi(&cfg, PlanarPoint::new(0.0, 2.0)).unwrap().norm(), 1.0, max_relative = 1e-15);
        assert!(phi(&cfg, PlanarPoint::new(-0.5, 0.0)).is_err());
        assert!(phi(&cfg, PlanarPoint::new(0.0, PI)).is_err());
        let mu = 1e4;
        for j in [-50i64, -1, 1, 13, 89, 144] {
            let p = phi(&cfg, lambda_point(&cfg, mu, j)).unwrap();
            let z = normalized_site(&cfg, mu, j).unwrap();
            assert!(p.distance(z) < 1e-13);
        }
    }

    #[test]
    fn strip_points_map_onto_normalized_lattice() {
        let cfg = golden(0.25);
        let mu = 40.0;
        let lam = linearization(&cfg, mu).unwrap().lambda_mu;
        let mut images = Vec::new();
        for j in -60i64..=60 {
            for n in -40i64..=40 {
                let p = lam * j as f64 + PlanarPoint::new(0.0, 2.0 * PI * n as f64);
                if let Ok(w) = phi(&cfg, p) {
                    images.push((j, w));
                }
            }
        }
        let valid: Vec<i64> = (-39..=60).collect();
        assert_eq!(images.iter().map(|(j, _)| *j).collect::<Vec<_>>(), valid);
        for (j, w) in images {
            assert!(w.distance(normalized_site(&cfg, mu, j).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn taylor_constant_bounds_sampled_residual() {
        for alpha in [1.0, 0.5, 0.25] {
            let cfg = golden(alpha);
            let c = taylor_constant(alpha);
            let r = taylor_radius(alpha);
            let residual_max = |radius: f64| {
                let mut worst: f64 = 0.0;
                for a in 0..360 {
                    for s in 1..=40 {
                        let z = PlanarPoint::from_polar(radius * s as f64 / 40.0, a as f64 * PI / 180.0);
                        let res = (phi(&cfg, z).unwrap() - PlanarPoint::ONE - z).norm();
                        assert!(res <= c * z.norm_sqr() * (1.0 + 1e-12), "α={alpha} ζ={z:?}");
                        worst = worst.max(res);
                    }
                }
                worst
            };
            let small = residual_max(r * 1e-3);
            let half = residual_max(r * 0.5e-3);
            assert_relative_eq!(small / half, 4.0, max_relative = 0.01);
        }
    }

    #[test]
    fn floors_are_ordered() {
        for alpha in [1.0, 0.5, 0.25] {
            let m2 = 1.5;
            assert!(area_rate_floor(alpha, m2) >= local_perturbation_floor(alpha, m2));
            assert!(area_rate_constant(alpha, m2) > 0.0);
        }
    }

    #[test]
    fn rational_divergence_has_no_linearization() {
        let cfg = SpiralConfig::new(0.5, PI).unwrap();
        assert_eq!(cfg.require_irrational(), Err(SpiralError::RationalDivergence));
        assert_eq!(linearization(&cfg, 100.0).unwrap_err(), SpiralError::RationalDivergence);
        assert!(golden(0.5).require_irrational().is_ok());
    }

    #[test]
    fn quotient_bound_is_checked() {
        let cfg = SpiralConfig::new(0.5, 2.0 * PI * std::f64::consts::E).unwrap();
        assert_eq!(cfg.m1(), None);
        assert!(matches!(
            cfg.clone().with_quotient_bound(3),
            Err(SpiralError::QuotientExceedsBound { .. })
        ));
        let big = cfg.cf().max_quotient().unwrap();
        assert_eq!(cfg.with_quotient_bound(big).unwrap().m1(), Some(big));
    }

    #[test]
    fn right_angle_at_transition_is_quarter_turn() {
        let cfg = golden(1.0);
        let mu = mu_transition(&cfg, 4, 0).unwrap();
        let t = cfg.linear_lattice(1.0).unwrap();
        let t = t.table();
        let a = angle(
            lambda_point(&cfg, mu, t.q(4) as i64),
            PlanarPoint::ZERO,
            lambda_point(&cfg, mu, t.q(3) as i64),
        )
        .unwrap();
        assert_relative_eq!(a.abs(), PI / 2.0, max_relative = 1e-10);
    }

    proptest! {
        #[test]
        fn s_mu_equals_s_mu_plus_one(mu in 1.0f64..1e4, j in -500i64..500) {
            let cfg = golden(0.5);
            prop_assume!((j as f64) > -mu);
            let a = parameterized_site(&cfg, mu, j + 1).unwrap();
            let b = parameterized_site(&cfg, mu + 1.0, j).unwrap();
            prop_assert!(a.distance(b) <= 1e-9 * a.norm().max(1.0));
        }

        #[test]
        fn local_perturbation_certificate(mu_scale in 1.0f64..50.0, angle_t in 0.0f64..(2.0 * PI), r in 0.0f64..1.0) {
            for alpha in [1.0, 0.5, 0.25] {
                let cfg = golden(alpha);
                let m2 = cfg.m2().unwrap();
                let mu = local_perturbation_floor(alpha, m2) * mu_scale;
                let lin = linearization(&cfg, mu).unwrap();
                let eps = lin.epsilon_mu.unwrap();
                let r2 = (4.0 + 4.0 * lin.v_mu) * lin.delta_mu;
                let zeta = PlanarPoint::from_polar(r * r2, angle_t);
                let w = phi(&cfg, zeta).unwrap();
                prop_assert!((w - PlanarPoint::ONE - zeta).norm() <= eps * lin.delta_mu);
                let edge = PlanarPoint::from_polar(r2, angle_t);
                let we = phi(&cfg, edge).unwrap() - PlanarPoint::ONE;
                prop_assert!(we.norm() >= (3.0 + 3.0 * lin.v_mu) * lin.delta_mu);
            }
        }
    }
}
