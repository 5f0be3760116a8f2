//! Noise models, smoothed instance generation and certified noise parameters.
//!
//! Three perturbation families are supported: Gaussian `N_d(0, sigma)`,
//! Laplace `L_d(0, sigma)` (density proportional to `exp(-||x|| sqrt(d) / sigma)`)
//! and the Laplace-Gaussian glue `LG_d(0, sigma, r)`, which is Gaussian inside
//! radius `r sigma` and has an exponential radial tail outside.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::linalg::binomial;
use crate::lp::LpInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "laplace")]
    Laplace,
    #[serde(rename = "lg")]
    LaplaceGaussian,
}

impl NoiseKind {
    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
            NoiseKind::LaplaceGaussian => "lg",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" | "normal" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            "lg" | "laplace-gaussian" | "laplacegaussian" => Ok(NoiseKind::LaplaceGaussian),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
    /// Seam radius `r` of the Laplace-Gaussian model, in units of `sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lg_radius: Option<f64>,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, sigma: f64) -> Self {
        NoiseSpec {
            kind,
            sigma,
            lg_radius: None,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(NoiseKind::Gaussian, sigma)
    }

    pub fn laplace(sigma: f64) -> Self {
        Self::new(NoiseKind::Laplace, sigma)
    }

    pub fn lg(sigma: f64, radius: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::LaplaceGaussian,
            sigma,
            lg_radius: Some(radius),
        }
    }

    /// Fills in the default seam radius `4 sqrt(d ln n)` when none is set.
    pub fn resolved(mut self, d: usize, n: usize) -> Self {
        if self.kind == NoiseKind::LaplaceGaussian && self.lg_radius.is_none() {
            self.lg_radius = Some(default_lg_radius(d, n));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.kind == NoiseKind::LaplaceGaussian {
            match self.lg_radius {
                Some(r) if r > 0.0 && r.is_finite() => {}
                Some(r) => return Err(Error::Config(format!("lg_radius must be positive, got {r}"))),
                None => return Err(Error::Config("lg_radius is unresolved".into())),
            }
        }
        Ok(())
    }
}

pub fn default_lg_radius(d: usize, n: usize) -> f64 {
    4.0 * (d as f64 * (n as f64).ln()).sqrt()
}

/// Largest noise level the symmetric random vertex analysis works with:
/// `1 / (36 sqrt(d ln n))`.
pub fn sigma_bar(d: usize, n: usize) -> f64 {
    1.0 / (36.0 * (d as f64 * (n as f64).ln()).sqrt())
}

/// Uniform direction on the unit sphere.
pub fn unit_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// Reusable sampler; precomputes the Laplace-Gaussian mixture weight.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    spec: NoiseSpec,
    d: usize,
    lg: Option<LgMixture>,
}

#[derive(Clone, Debug)]
struct LgMixture {
    radius: f64,
    p_inner: f64,
    ln_q_seam: f64,
}

impl NoiseSampler {
    pub fn new(spec: &NoiseSpec, d: usize) -> Result<Self> {
        spec.validate()?;
        if d == 0 {
            return Err(Error::Domain("noise dimension must be at least 1".into()));
        }
        let lg = match spec.kind {
            NoiseKind::LaplaceGaussian => {
                let r = spec.lg_radius.expect("validated");
                Some(LgMixture::new(d, r))
            }
            _ => None,
        };
        Ok(NoiseSampler {
            spec: spec.clone(),
            d,
            lg,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Probability of the Gaussian core in the Laplace-Gaussian mixture.
    pub fn lg_inner_weight(&self) -> Option<f64> {
        self.lg.as_ref().map(|m| m.p_inner)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let (d, sigma) = (self.d, self.spec.sigma);
        match self.spec.kind {
            NoiseKind::Gaussian => {
                DVector::from_fn(d, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
            }
            NoiseKind::Laplace => {
                let gamma = Gamma::new(d as f64, sigma / (d as f64).sqrt()).expect("valid gamma");
                let s = gamma.sample(rng);
                unit_direction(d, rng) * s
            }
            NoiseKind::LaplaceGaussian => {
                self.lg.as_ref().expect("lg mixture").sample(d, sigma, rng)
            }
        }
    }
}

impl LgMixture {
    fn new(d: usize, r: f64) -> Self {
        let df = d as f64;
        // Radial masses with sigma = 1; the common surface factor cancels.
        let ln_z_in = (df / 2.0 - 1.0) * 2f64.ln()
            + ln_gamma(df / 2.0)
            + gamma_lr(df / 2.0, r * r / 2.0).ln();
        let ln_q_seam = ln_upper_regularized_int(d, r * r);
        let ln_z_out = r * r / 2.0 - df * r.ln() + ln_gamma(df) + ln_q_seam;
        let p_inner = 1.0 / (1.0 + (ln_z_out - ln_z_in).exp());
        LgMixture {
            radius: r,
            p_inner,
            ln_q_seam,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, d: usize, sigma: f64, rng: &mut R) -> DVector<f64> {
        let r = self.radius;
        if rng.random::<f64>() < self.p_inner {
            loop {
                let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                if g.norm() <= r {
                    return g * sigma;
                }
            }
        }
        // Tail radius t = sigma u / r with u ~ Gamma(d, 1) conditioned on u >= r^2.
        let target = rng.random::<f64>().max(f64::MIN_POSITIVE).ln() + self.ln_q_seam;
        let u = invert_decreasing(|u| ln_upper_regularized_int(d, u), target, r * r);
        unit_direction(d, rng) * (sigma * u / r)
    }
}

/// `ln Q(d, u)` for integer shape `d`, where `Q(d, u) = e^{-u} sum_{k<d} u^k / k!`.
pub fn ln_upper_regularized_int(d: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let ln_u = u.ln();
    let terms: Vec<f64> = (0..d)
        .map(|k| k as f64 * ln_u - ln_gamma(k as f64 + 1.0))
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    -u + max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Solves `f(u) = target` for decreasing `f` on `[lo, inf)`, `f(lo) >= target`.
fn invert_decreasing(f: impl Fn(f64) -> f64, target: f64, lo: f64) -> f64 {
    let mut a = lo;
    let mut b = lo.max(1.0) * 2.0;
    while f(b) > target {
        a = b;
        b *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) > target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    0.5 * (a + b)
}

/// One draw of mean-zero noise.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, d: usize, rng: &mut R) -> Result<DVector<f64>> {
    Ok(NoiseSampler::new(spec, d)?.sample(rng))
}

/// Unnormalised Laplace-Gaussian density `f_(center, sigma, r)`.
pub fn density_lg(x: &DVector<f64>, center: &DVector<f64>, sigma: f64, r: f64) -> f64 {
    let dist = (x - center).norm();
    if dist <= r * sigma {
        (-dist * dist / (2.0 * sigma * sigma)).exp()
    } else {
        (-dist * r / sigma + r * r / 2.0).exp()
    }
}

/// Normalised density of `N_d(center, sigma)`.
pub fn gaussian_density(x: &DVector<f64>, center: &DVector<f64>, sigma: f64) -> f64 {
    let d = x.len() as f64;
    let dist2 = (x - center).norm_squared();
    (-dist2 / (2.0 * sigma * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma * sigma).powf(d / 2.0)
}

/// Certified `(L, tau, R_{n,d}, r_n)` for a noise family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionCertificate {
    /// Log-Lipschitz constant; `None` when the density is not log-Lipschitz.
    #[serde(rename = "L")]
    pub lipschitz: Option<f64>,
    pub tau: f64,
    #[serde(rename = "R_nd")]
    pub cutoff_radius: f64,
    pub r_n: f64,
}

pub fn certificate(kind: NoiseKind, d: usize, n: usize, sigma: f64) -> Result<DistributionCertificate> {
    if d < 3 || n < d {
        return Err(Error::Domain(format!("certificates need n >= d >= 3, got d = {d}, n = {n}")));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let (df, ln_n) = (d as f64, (n as f64).ln());
    Ok(match kind {
        NoiseKind::Laplace => DistributionCertificate {
            lipschitz: Some(df.sqrt() / sigma),
            tau: sigma / (df * std::f64::consts::E).sqrt(),
            cutoff_radius: 14.0 * sigma * df.sqrt() * ln_n,
            r_n: 7.0 * sigma * ln_n,
        },
        NoiseKind::LaplaceGaussian => DistributionCertificate {
            lipschitz: Some(4.0 * (df * ln_n).sqrt() / sigma),
            tau: sigma / 4.0,
            cutoff_radius: 4.0 * sigma * (df * ln_n).sqrt(),
            r_n: 4.0 * sigma * ln_n.sqrt(),
        },
        NoiseKind::Gaussian => {
            // Invert exp(-(d/2)(t-1)^2) = 1 / (d C(n, d)) for the norm tail.
            let ln_inv_p = (df * binomial(n, d)).ln();
            let t = 1.0 + (2.0 * ln_inv_p / df).sqrt();
            DistributionCertificate {
                lipschitz: None,
                tau: sigma,
                cutoff_radius: sigma * df.sqrt() * t,
                r_n: gaussian_deviation(n, sigma),
            }
        }
    })
}

/// Smallest `r` with `int_r^inf 2 exp(-t^2 / (2 sigma^2)) dt <= r / n`.
fn gaussian_deviation(n: usize, sigma: f64) -> f64 {
    let gap = |r: f64| {
        sigma * (2.0 * std::f64::consts::PI).sqrt() * erfc(r / (sigma * 2f64.sqrt())) - r / n as f64
    };
    let (mut lo, mut hi) = (0.0, sigma);
    while gap(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Tail event tested by [`empirical_tail`], with thresholds in absolute units.
#[derive(Clone, Debug, PartialEq)]
pub enum TailEvent {
    /// `||X|| >= radius`.
    Norm { radius: f64 },
    /// `|<X, theta>| >= threshold` for a unit `theta`.
    Directional { theta: DVector<f64>, threshold: f64 },
}

impl TailEvent {
    pub fn holds(&self, x: &DVector<f64>) -> bool {
        match self {
            TailEvent::Norm { radius } => x.norm() >= *radius,
            TailEvent::Directional { theta, threshold } => x.dot(theta).abs() >= *threshold,
        }
    }
}

/// Empirical frequency of `event` over `samples` draws.
pub fn empirical_tail<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    d: usize,
    event: &TailEvent,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 samples, got {samples}")));
    }
    let sampler = NoiseSampler::new(spec, d)?;
    let hits = (0..samples).filter(|_| event.holds(&sampler.sample(rng))).count();
    Ok(hits as f64 / samples as f64)
}

/// Smoothed LP data: centers plus noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedModel {
    centers: DMatrix<f64>,
    rhs: DVector<f64>,
    c: DVector<f64>,
    noise: NoiseSpec,
    perturb_rhs: bool,
}

impl SmoothedModel {
    /// Unit LP model: `b = 1` exactly, only `A` is perturbed.
    pub fn unit(centers: DMatrix<f64>, c: DVector<f64>, noise: NoiseSpec) -> Result<Self> {
        let n = centers.nrows();
        Self::build(centers, DVector::from_element(n, 1.0), c, noise, false)
    }

    /// Smooth LP model: each row `(a_i, b_i)` receives a joint `(d+1)`-dimensional perturbation.
    pub fn smooth(
        centers: DMatrix<f64>,
        rhs: DVector<f64>,
        c: DVector<f64>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        Self::build(centers, rhs, c, noise, true)
    }

    fn build(
        centers: DMatrix<f64>,
        rhs: DVector<f64>,
        c: DVector<f64>,
        noise: NoiseSpec,
        perturb_rhs: bool,
    ) -> Result<Self> {
        let (n, d) = centers.shape();
        if d < 1 || n < d || rhs.len() != n || c.len() != d {
            return Err(Error::Config(format!(
                "inconsistent model shape: centers {n}x{d}, rhs {}, c {}",
                rhs.len(),
                c.len()
            )));
        }
        if c.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("objective is the zero vector".into()));
        }
        for i in 0..n {
            let mut norm2 = centers.row(i).norm_squared();
            if perturb_rhs {
                norm2 += rhs[i] * rhs[i];
            }
            if norm2.sqrt() > 1.0 + 1e-12 {
                return Err(Error::Config(format!("center row {i} has norm above 1")));
            }
        }
        let noise_dim = if perturb_rhs { d + 1 } else { d };
        let noise = noise.resolved(noise_dim, n);
        noise.validate()?;
        Ok(SmoothedModel {
            centers,
            rhs,
            c,
            noise,
            perturb_rhs,
        })
    }

    pub fn d(&self) -> usize {
        self.centers.ncols()
    }

    pub fn n(&self) -> usize {
        self.centers.nrows()
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn perturb_rhs(&self) -> bool {
        self.perturb_rhs
    }

    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LpInstance> {
        let (n, d) = (self.n(), self.d());
        let noise_dim = if self.perturb_rhs { d + 1 } else { d };
        let sampler = NoiseSampler::new(&self.noise, noise_dim)?;
        let mut a = self.centers.clone();
        let mut b = self.rhs.clone();
        for i in 0..n {
            let g = sampler.sample(rng);
            for j in 0..d {
                a[(i, j)] += g[j];
            }
            if self.perturb_rhs {
                b[i] += g[d];
            }
        }
        LpInstance::new(a, b, self.c.clone())
    }
}

/// Convenience wrapper around [`SmoothedModel::sample_instance`].
pub fn sample_instance<R: Rng + ?Sized>(model: &SmoothedModel, rng: &mut R) -> Result<LpInstance> {
    model.sample_instance(rng)
}

/// `n` i.i.d. rows uniform on the unit sphere of `R^dim`.
pub fn sphere_centers<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, dim);
    for i in 0..n {
        m.set_row(i, &unit_direction(dim, rng).transpose());
    }
    m
}
