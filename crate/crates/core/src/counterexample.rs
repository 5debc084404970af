//! The oscillating potential V_t, bump pairs at the ellipse foci, and the first
//! Born term a₁ evaluated through its asymptotic main term or through the
//! regularized spectral integral I_L.
//!
//! Points x₁ are parametrized by prolate spheroidal coordinates about the foci
//! x₀ = e₁ and y₀ = −e₁: the ellipse sum S = |x₀−x₁| + |x₁−y₀| = 2cosh μ, an
//! angle ν along the ellipse, and a direction on S^{n−2} transverse to the axis.
//! V_t depends on S only, so the delta-limit integral needs just (S, ν).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::kernel_calculus::BranchConvention;
use crate::oscillatory::{i_l_spec, OscError, OscIntegralSpec};
use crate::par::{self, Exec};
use crate::quad::{adaptive, GaussLegendre};
use crate::resolvent::{sphere_area, Dimension, ResolventError};

/// Support of the cutoff φ in the ellipse sum.
pub const SUM_MIN: f64 = 6.0;
pub const SUM_MAX: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CounterexampleError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Quadrature(#[from] OscError),
}

pub type Result<T> = std::result::Result<T, CounterexampleError>;

fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(CounterexampleError::Precondition(msg.into()))
}

/// Foci x₀ = e₁ and y₀ = −e₁ in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub n: Dimension,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

impl Geometry {
    pub fn new(n: Dimension) -> Self {
        let mut x0 = vec![0.0; n.get() as usize];
        x0[0] = 1.0;
        let y0 = x0.iter().map(|v| -v).collect();
        Geometry { n, x0, y0 }
    }

    /// A point with the given leading coordinates, zero-padded to dimension n.
    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.x0.len()];
        for (d, &c) in p.iter_mut().zip(coords) {
            *d = c;
        }
        p
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// |x₀ − x₁| + |x₁ − y₀|.
pub fn ellipse_sum(g: &Geometry, x1: &[f64]) -> f64 {
    dist(&g.x0, x1) + dist(x1, &g.y0)
}

/// Smooth step e^{−1/u}/(e^{−1/u} + e^{−1/(1−u)}), 0 for u ≤ 0 and 1 for u ≥ 1.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// F(s): 0 for s ≤ 0, s·step(2s) on (0, 1/2), s for s ≥ 1/2.
#[allow(non_snake_case)]
pub fn F_profile(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 0.5 {
        s
    } else {
        s * smooth_step(2.0 * s)
    }
}

/// Bump exp(−1/((u−6)(8−u))) scaled to peak 1 at u = 7.
pub fn phi_profile(u: f64) -> f64 {
    if u <= SUM_MIN || u >= SUM_MAX {
        0.0
    } else {
        (1.0 - 1.0 / ((u - SUM_MIN) * (SUM_MAX - u))).exp()
    }
}

/// A potential depending on x₁ only through the ellipse sum.
pub trait AxialPotential: Sync {
    fn at_sum(&self, sum: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> AxialPotential for F {
    fn at_sum(&self, sum: f64) -> f64 {
        self(sum)
    }
}

/// V_t(x₁) = Cn t^α φ(S) F(cos(S²/(4t))) with S the ellipse sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub geometry: Geometry,
    pub alpha: f64,
    pub t: f64,
    pub cn: f64,
}

impl PotentialSpec {
    pub fn new(geometry: Geometry, alpha: f64, t: f64, cn: f64) -> Result<Self> {
        let n = geometry.n.get();
        if n < 4 {
            return precondition(format!("the potential needs n ≥ 4, got {n}"));
        }
        let max_alpha = (f64::from(n) - 3.0) / 2.0;
        if !(alpha > 0.0 && alpha < max_alpha) {
            return precondition(format!("alpha = {alpha} must lie in (0, {max_alpha})"));
        }
        if !(t > 0.0 && t <= 1.0) {
            return precondition(format!("t = {t} must lie in (0, 1]"));
        }
        if !(cn > 0.0 && cn.is_finite()) {
            return precondition(format!("Cn = {cn} must be positive"));
        }
        Ok(PotentialSpec { geometry, alpha, t, cn })
    }

    pub fn with_cn(&self, cn: f64) -> Result<Self> {
        PotentialSpec::new(self.geometry.clone(), self.alpha, self.t, cn)
    }

    pub fn eval(&self, x1: &[f64]) -> f64 {
        self.at_sum(ellipse_sum(&self.geometry, x1))
    }
}

impl AxialPotential for PotentialSpec {
    fn at_sum(&self, sum: f64) -> f64 {
        let p = phi_profile(sum);
        if p == 0.0 {
            return 0.0;
        }
        let phase = sum * sum / (4.0 * self.t);
        self.cn * self.t.powf(self.alpha) * p * F_profile(phase.cos())
    }
}

/// Cn t^α φ(S): the same envelope without the synchronized oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothShell {
    pub cn: f64,
    pub t: f64,
    pub alpha: f64,
}

impl AxialPotential for SmoothShell {
    fn at_sum(&self, sum: f64) -> f64 {
        self.cn * self.t.powf(self.alpha) * phi_profile(sum)
    }
}

/// `factor` times another potential.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a, P: AxialPotential>(pub f64, pub &'a P);

impl<P: AxialPotential> AxialPotential for Scaled<'_, P> {
    fn at_sum(&self, sum: f64) -> f64 {
        self.0 * self.1.at_sum(sum)
    }
}

/// A straight segment of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub sup: f64,
    pub seminorm: f64,
}

impl HolderEstimate {
    pub fn norm(&self) -> f64 {
        self.sup + self.seminorm
    }
}

/// sup|f| + sup |f(x)−f(y)|/|x−y|^α over pairs on each segment, with points spaced
/// `grid_h` and separations growing geometrically from `grid_h` to 1.
pub fn holder_norm_estimate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    alpha: f64,
    domain: &[Segment],
    grid_h: f64,
) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return precondition(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    if !(grid_h > 0.0) {
        return precondition("grid_h must be positive");
    }
    let mut est = HolderEstimate { sup: 0.0, seminorm: 0.0 };
    for seg in domain {
        let len = dist(&seg.a, &seg.b);
        let m = (len / grid_h).ceil().max(1.0) as usize;
        let h = len / m as f64;
        let values: Vec<f64> = (0..=m)
            .map(|i| {
                let w = i as f64 / m as f64;
                let p: Vec<f64> = seg.a.iter().zip(&seg.b).map(|(a, b)| a + w * (b - a)).collect();
                f(&p)
            })
            .collect();
        let mut offsets = Vec::new();
        let mut d = 1.0f64;
        while d * h <= 1.0 + 1e-12 && (d as usize) <= m {
            let k = d.round() as usize;
            if offsets.last() != Some(&k) {
                offsets.push(k);
            }
            d *= 1.25;
        }
        for (i, &v) in values.iter().enumerate() {
            est.sup = est.sup.max(v.abs());
            for &k in &offsets {
                if let Some(&w) = values.get(i + k) {
                    let q = (v - w).abs() / (k as f64 * h).powf(alpha);
                    est.seminorm = est.seminorm.max(q);
                }
            }
        }
    }
    Ok(est)
}

/// Segments crossing the support shell along the major axis, the minor axis and a diagonal.
pub fn shell_segments(g: &Geometry) -> Vec<Segment> {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        Segment { a: g.point(&[2.5]), b: g.point(&[4.5]) },
        Segment { a: g.point(&[0.0, 2.5]), b: g.point(&[0.0, 4.2]) },
        Segment { a: g.point(&[2.5 * d, 2.5 * d]), b: g.point(&[4.4 * d, 4.4 * d]) },
    ]
}

/// Hölder norm estimate of V_t on [`shell_segments`] with grid spacing t/20.
pub fn potential_norm(spec: &PotentialSpec) -> Result<HolderEstimate> {
    let f = |x: &[f64]| spec.eval(x);
    holder_norm_estimate(&f, spec.alpha, &shell_segments(&spec.geometry), spec.t / 20.0)
}

/// Cn = 1 / max over the grid of the norm of V_t with Cn = 1.
pub fn calibrate_cn(g: &Geometry, alpha: f64, t_grid: &[f64], exec: Exec) -> Result<f64> {
    if t_grid.is_empty() {
        return precondition("empty t grid");
    }
    let norms = par::map(exec, t_grid, |&t| {
        let spec = PotentialSpec::new(g.clone(), alpha, t, 1.0)?;
        potential_norm(&spec).map(|e| e.norm())
    });
    let mut max = 0.0f64;
    for v in norms {
        max = max.max(v?);
    }
    if !(max > 0.0) {
        return precondition("potential vanishes on the whole grid");
    }
    Ok(1.0 / max)
}

fn bump_profile(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Radial mollifier of radius ε with unit mass, centred at a focus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpPair {
    n: Dimension,
    eps: f64,
    norm: f64,
}

impl BumpPair {
    pub fn new(n: Dimension, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return precondition(format!("eps = {eps} must lie in (0, 1/2)"));
        }
        let nn = n.get() as i32;
        let radial = adaptive(
            |u: f64| bump_profile(u) * u.powi(nn - 1),
            0.0,
            1.0,
            &[],
            1e-16,
            1e-14,
            200,
        );
        let norm = 1.0 / (sphere_area(n.get() - 1) * radial.value);
        Ok(BumpPair { n, eps, norm })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Density at offset `z` from the centre.
    pub fn density(&self, z: &[f64]) -> f64 {
        let rho = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.norm * bump_profile(rho / self.eps) / self.eps.powi(self.n.get() as i32)
    }

    /// ∫ density, by radial Gauss–Legendre.
    pub fn mass(&self) -> f64 {
        let nn = self.n.get() as i32;
        let gl = GaussLegendre::new(40);
        let mut acc = 0.0;
        for k in 0..8 {
            let a = k as f64 / 8.0;
            let b = a + 1.0 / 8.0;
            acc += gl.integrate(|u| bump_profile(u) * u.powi(nn - 1), a, b);
        }
        self.norm * sphere_area(self.n.get() - 1) * acc
    }

    /// A random offset distributed with the density, by rejection from the cube.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let nn = self.n.get() as usize;
        let peak = bump_profile(0.0);
        loop {
            let z: Vec<f64> = (0..nn).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rho = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rho >= 1.0 {
                continue;
            }
            if rng.random::<f64>() * peak < bump_profile(rho) {
                return z.into_iter().map(|v| v * self.eps).collect();
            }
        }
    }
}

/// How the x and y integrals against the bumps are performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bumps {
    /// f = δ_{x₀}, g = δ_{y₀}.
    Delta,
    /// Monte Carlo average over `samples` seeded draws of (x, y).
    Pair { pair: BumpPair, samples: usize, seed: u64 },
}

/// Quadrature layout for x₁ integrals over the support shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct X1Rule {
    /// Panel width in the phase S²/(4t).
    pub phase_step: f64,
    pub s_nodes: usize,
    /// Gauss–Legendre nodes per quarter turn in ν.
    pub nu_nodes: usize,
    /// Nodes per transverse angle (used only off the axis).
    pub angle_nodes: usize,
}

impl X1Rule {
    /// Eighth of a phase period per panel.
    pub const MAIN: X1Rule = X1Rule {
        phase_step: PI / 4.0,
        s_nodes: 6,
        nu_nodes: 16,
        angle_nodes: 8,
    };
    /// Coarser layout for integrands that cost a spectral integral per node.
    pub const FULL: X1Rule = X1Rule {
        phase_step: PI / 2.0,
        s_nodes: 6,
        nu_nodes: 8,
        angle_nodes: 6,
    };

    /// Number of (S, ν, angle) nodes for a given t and number of angle nodes.
    pub fn node_count(&self, t: f64, symmetric: bool, angles: usize) -> usize {
        let panels = s_panels(t, self.phase_step).len();
        let nu = if symmetric { self.nu_nodes } else { 2 * self.nu_nodes };
        panels * self.s_nodes * nu * angles
    }
}

fn s_panels(t: f64, phase_step: f64) -> Vec<(f64, f64)> {
    let th_a = SUM_MIN * SUM_MIN / (4.0 * t);
    let th_b = SUM_MAX * SUM_MAX / (4.0 * t);
    let m = ((th_b - th_a) / phase_step).ceil().max(1.0) as usize;
    let s = |i: usize| {
        if i == m {
            SUM_MAX
        } else {
            (4.0 * t * (th_a + (th_b - th_a) * i as f64 / m as f64)).sqrt()
        }
    };
    (0..m).map(|i| (s(i), s(i + 1))).collect()
}

/// Transverse quadrature: (ω·e_a, ω·e_b, weight) with weights summing to |S^{n−2}|.
fn angle_nodes(n: u32, dirs: usize, nodes: usize) -> Vec<(f64, f64, f64)> {
    let full = sphere_area(n - 2);
    match (dirs, n) {
        (0, _) => vec![(0.0, 0.0, full)],
        (_, 2) => vec![(1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)],
        (1, _) => {
            let gl = GaussLegendre::new(nodes);
            let area = sphere_area(n - 3);
            gl.mapped(0.0, PI)
                .map(|(p, w)| (p.cos(), 0.0, w * p.sin().powi(n as i32 - 3) * area))
                .collect()
        }
        (_, 3) => {
            let gl = GaussLegendre::new(2 * nodes);
            gl.mapped(0.0, 2.0 * PI)
                .map(|(p, w)| (p.cos(), p.sin(), w))
                .collect()
        }
        _ => {
            let gl = GaussLegendre::new(nodes);
            let area = sphere_area(n - 4);
            let mut out = Vec::with_capacity(nodes * nodes);
            for (p1, w1) in gl.mapped(0.0, PI) {
                for (p2, w2) in gl.mapped(0.0, PI) {
                    let w = w1 * w2 * p1.sin().powi(n as i32 - 3) * p2.sin().powi(n as i32 - 4) * area;
                    out.push((p1.cos(), p1.sin() * p2.cos(), w));
                }
            }
            out
        }
    }
}

/// A point written as (axial coordinate, components along two transverse unit vectors, |transverse|²).
struct Placed {
    axial: f64,
    a: f64,
    b: f64,
    perp2: f64,
}

fn place(x: &[f64], y: &[f64]) -> (Placed, Placed, usize) {
    let xt = &x[1..];
    let yt = &y[1..];
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let tiny = 1e-14;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in [xt, yt] {
        let mut w = v.to_vec();
        for e in &basis {
            let c = dot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        let nw = norm(&w);
        if nw > tiny {
            basis.push(w.iter().map(|c| c / nw).collect());
        }
    }
    let coord = |v: &[f64], i: usize| basis.get(i).map_or(0.0, |e| dot(v, e));
    let px = Placed { axial: x[0], a: coord(xt, 0), b: coord(xt, 1), perp2: dot(xt, xt) };
    let py = Placed { axial: y[0], a: coord(yt, 0), b: coord(yt, 1), perp2: dot(yt, yt) };
    (px, py, basis.len())
}

/// ∫ g(|x−x₁|, |x₁−y|, S) dx₁ over the shell 6 ≤ S ≤ 8.
///
/// `symmetric` folds ν ∈ [π/2, π] onto [0, π/2]; only valid when x, y are the
/// foci and g is symmetric in its first two arguments.
pub fn x1_integral<G>(
    n: Dimension,
    x: &[f64],
    y: &[f64],
    t: f64,
    rule: &X1Rule,
    symmetric: bool,
    exec: Exec,
    g: G,
) -> Result<Complex64>
where
    G: Fn(f64, f64, f64) -> Complex64 + Sync + Send,
{
    let nn = n.get();
    if x.len() != nn as usize || y.len() != nn as usize {
        return precondition("points must have n coordinates");
    }
    if !(t > 0.0) {
        return precondition(format!("t = {t} must be positive"));
    }
    let (px, py, dirs) = place(x, y);
    let angles = angle_nodes(nn, dirs, rule.angle_nodes);
    let gl_nu = GaussLegendre::new(rule.nu_nodes);
    let mut nu: Vec<(f64, f64, f64)> = gl_nu
        .mapped(0.0, PI / 2.0)
        .map(|(v, w)| (v.cos(), v.sin(), if symmetric { 2.0 * w } else { w }))
        .collect();
    if !symmetric {
        nu.extend(gl_nu.mapped(PI / 2.0, PI).map(|(v, w)| (v.cos(), v.sin(), w)));
    }
    let gl_s = GaussLegendre::new(rule.s_nodes);
    let panels = s_panels(t, rule.phase_step);
    let npow = nn as i32 - 2;
    let total = par::sum_ordered(exec, &panels, |&(a, b)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s_sum, ws) in gl_s.mapped(a, b) {
            let ch = 0.5 * s_sum;
            let sh = (ch * ch - 1.0).sqrt();
            for &(cv, sv, wv) in &nu {
                let u = ch * cv;
                let rho = sh * sv;
                let jac = (sh * sh + sv * sv) * (sh * sv).powi(npow) / (2.0 * sh);
                let w0 = ws * wv * jac;
                for &(ca, cb, wa) in &angles {
                    let r2 = (u - px.axial).powi(2) + rho * rho + px.perp2
                        - 2.0 * rho * (ca * px.a + cb * px.b);
                    let s2 = (u - py.axial).powi(2) + rho * rho + py.perp2
                        - 2.0 * rho * (ca * py.a + cb * py.b);
                    acc += g(r2.max(0.0).sqrt(), s2.max(0.0).sqrt(), s_sum) * (w0 * wa);
                }
            }
        }
        acc
    });
    Ok(total)
}

/// (r+s)^{n−2}(rs)^{−(n−1)/2} e^{−i(r+s)²/(4t)}, the leading-term profile without prefactor.
fn main_integrand(n: u32, r: f64, s: f64, t: f64) -> Complex64 {
    let nf = f64::from(n);
    let c = r + s;
    let amp = c.powf(nf - 2.0) / (r * s).powf((nf - 1.0) / 2.0);
    Complex64::from_polar(amp, -c * c / (4.0 * t))
}

/// ∫ (r+s)^{n−2}(rs)^{−(n−1)/2} e^{−i(r+s)²/(4t)} V(x₁) dx₁ with r = |x−x₁|, s = |x₁−y|.
pub fn main_term_x1_integral<P: AxialPotential>(
    n: Dimension,
    potential: &P,
    x: &[f64],
    y: &[f64],
    t: f64,
    rule: &X1Rule,
    exec: Exec,
) -> Result<Complex64> {
    let g = Geometry::new(n);
    let symmetric = x == g.x0.as_slice() && y == g.y0.as_slice();
    let nn = n.get();
    x1_integral(n, x, y, t, rule, symmetric, exec, |r, s, sum| {
        let v = potential.at_sum(sum);
        if v == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            main_integrand(nn, r, s, t) * v
        }
    })
}

/// i t^{(3−n)/2} / (2(−4πi)^{n−3/2}).
pub fn main_term_prefactor(n: Dimension, t: f64) -> Complex64 {
    let nf = f64::from(n.get());
    Complex64::new(0.0, 0.5) * t.powf((3.0 - nf) / 2.0) * BranchConvention::unit_pow(1.5 - nf)
}

fn bump_average<F>(g: &Geometry, bumps: &Bumps, mut per_pair: F) -> Result<Complex64>
where
    F: FnMut(&[f64], &[f64]) -> Result<Complex64>,
{
    match bumps {
        Bumps::Delta => per_pair(&g.x0, &g.y0),
        Bumps::Pair { pair, samples, seed } => {
            if *samples == 0 {
                return precondition("bump average needs at least one sample");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..*samples {
                let dx = pair.sample(&mut rng);
                let dy = pair.sample(&mut rng);
                let x: Vec<f64> = g.x0.iter().zip(&dx).map(|(a, b)| a + b).collect();
                let y: Vec<f64> = g.y0.iter().zip(&dy).map(|(a, b)| a + b).collect();
                acc += per_pair(&x, &y)?;
            }
            Ok(acc / *samples as f64)
        }
    }
}

/// Asymptotic main term of a₁: prefactor × ∫∫∫ (r+s)^{n−2}(rs)^{−(n−1)/2}e^{−i(r+s)²/(4t)} V f g.
pub fn a1_main_term<P: AxialPotential>(
    n: Dimension,
    potential: &P,
    bumps: &Bumps,
    t: f64,
    rule: &X1Rule,
    exec: Exec,
) -> Result<Complex64> {
    let g = Geometry::new(n);
    let integral = bump_average(&g, bumps, |x, y| {
        main_term_x1_integral(n, potential, x, y, t, rule, exec)
    })?;
    Ok(main_term_prefactor(n, t) * integral)
}

/// Rough count of resolvent-kernel evaluations one I_L call makes.
fn kernel_evals_per_il(t: f64, l: f64) -> f64 {
    let c = SUM_MAX + 1.0;
    let k = c / (t - 1.0 / l);
    4.0 * 15.0 * (t * k * k / PI + c * k / PI + 20.0)
}

/// a₁ᴸ = t^{n/2} ∫∫∫ I_L(t, |x−x₁|, |x₁−y|) V(x₁) f(x) g(y).
pub fn a1_full<P: AxialPotential>(
    n: Dimension,
    potential: &P,
    bumps: &Bumps,
    t: f64,
    l: f64,
    rule: &X1Rule,
    exec: Exec,
) -> Result<Complex64> {
    if t <= 1.0 / l {
        return precondition(format!("L = {l} must exceed 1/t = {}", 1.0 / t));
    }
    let g = Geometry::new(n);
    let pairs = match bumps {
        Bumps::Delta => 1,
        Bumps::Pair { samples, .. } => *samples,
    };
    let angles = match bumps {
        Bumps::Delta => 1,
        Bumps::Pair { .. } => rule.angle_nodes * rule.angle_nodes,
    };
    let evals = pairs as f64
        * rule.node_count(t, matches!(bumps, Bumps::Delta), angles) as f64
        * kernel_evals_per_il(t, l);
    if evals > 1e7 {
        log::warn!("a1_full at t = {t}, L = {l} needs about {evals:.1e} kernel evaluations");
    }
    let integral = bump_average(&g, bumps, |x, y| {
        let symmetric = x == g.x0.as_slice() && y == g.y0.as_slice();
        let failure: OnceLock<OscError> = OnceLock::new();
        let v = x1_integral(n, x, y, t, rule, symmetric, exec, |r, s, sum| {
            let v = potential.at_sum(sum);
            if v == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let spec = OscIntegralSpec::new(n, t, r, Some(s), l);
            match spec.and_then(|sp| i_l_spec(&sp)) {
                Ok(il) => il.value * v,
                Err(e) => {
                    let _ = failure.set(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        })?;
        match failure.into_inner() {
            Some(e) => Err(e.into()),
            None => Ok(v),
        }
    })?;
    Ok(t.powf(f64::from(n.get()) / 2.0) * integral)
}

/// Least-squares line through (log t, log value).
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval for the slope (Student t).
    pub slope_ci95: (f64, f64),
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return precondition(format!("need at least 4 samples, got {}", samples.len()));
    }
    for &(t, v) in samples {
        if !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()) {
            return precondition(format!("sample ({t}, {v}) must be positive"));
        }
    }
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return precondition("t values must be distinct");
    }
    let m = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = m - 2.0;
    let slope_stderr = (sse / dof / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| CounterexampleError::Precondition(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        samples: samples.to_vec(),
        slope,
        intercept,
        residual: (sse / m).sqrt(),
        slope_stderr,
        slope_ci95: (slope - q * slope_stderr, slope + q * slope_stderr),
    })
}
