//! High-dimensional Euclidean geometry: balls, spheres, shells, cones and
//! solid angles.
//!
//! Volumes and solid angles are returned as natural logs so that they stay
//! finite at large dimension.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};
use crate::special::{ln_beta_inc_reg, ln_gamma};

/// A cone with its origin at `apex`, axis running toward `axis_point`, and
/// the given half-angle.
///
/// Half-angles up to π are accepted; anything at or above π/2 is no longer a
/// convex cone, and a half-angle of π is the whole space. Decoders use that
/// degenerate setting to route every output to the standard messages.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    apex: Vec<f64>,
    axis_point: Vec<f64>,
    half_angle: f64,
}

impl ConeSpec {
    pub fn new(apex: Vec<f64>, axis_point: Vec<f64>, half_angle: f64) -> Result<Self> {
        if apex.len() != axis_point.len() {
            return Err(invalid("cone apex and axis point differ in dimension"));
        }
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(invalid(format!(
                "cone half-angle {half_angle} outside (0, π]"
            )));
        }
        if apex == axis_point {
            return Err(invalid("cone axis point coincides with apex"));
        }
        Ok(Self {
            apex,
            axis_point,
            half_angle,
        })
    }

    pub fn dim(&self) -> usize {
        self.apex.len()
    }

    pub fn apex(&self) -> &[f64] {
        &self.apex
    }

    pub fn axis_point(&self) -> &[f64] {
        &self.axis_point
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }
}

/// Spherical shell `{x : r_inner ≤ ‖x − center‖ ≤ r_outer}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpec {
    center: Vec<f64>,
    r_inner: f64,
    r_outer: f64,
}

impl ShellSpec {
    pub fn new(center: Vec<f64>, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner >= 0.0 && r_inner <= r_outer) {
            return Err(invalid(format!(
                "shell radii must satisfy 0 ≤ {r_inner} ≤ {r_outer}"
            )));
        }
        Ok(Self {
            center,
            r_inner,
            r_outer,
        })
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.center.len() {
            return Err(invalid("point and shell differ in dimension"));
        }
        let d = distance(point, &self.center);
        Ok(d >= self.r_inner && d <= self.r_outer)
    }

    /// ln of the shell volume; −∞ for a zero-width shell.
    pub fn log_volume(&self) -> Result<f64> {
        let n = self.center.len();
        if self.r_outer == 0.0 || self.r_inner == self.r_outer {
            return Ok(f64::NEG_INFINITY);
        }
        let outer = log_ball_volume(n, self.r_outer)?;
        if self.r_inner == 0.0 {
            return Ok(outer);
        }
        let ratio = n as f64 * (self.r_inner / self.r_outer).ln();
        Ok(outer + crate::special::ln_one_minus_exp(ratio))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance_sq(a, b).sqrt()
}

fn check_dim_radius(n: usize, r: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    Ok(())
}

/// ln Vol(B_n(r)) = ln(rⁿ π^{n/2} / Γ(n/2 + 1)).
pub fn log_ball_volume(n: usize, r: f64) -> Result<f64> {
    check_dim_radius(n, r)?;
    let nf = n as f64;
    Ok(nf * r.ln() + 0.5 * nf * PI.ln() - ln_gamma(0.5 * nf + 1.0))
}

/// ln of the (n−1)-dimensional surface area of the radius-r sphere in ℝⁿ.
pub fn log_sphere_surface(n: usize, r: f64) -> Result<f64> {
    check_dim_radius(n, r)?;
    let nf = n as f64;
    Ok(nf.ln() + (nf - 1.0) * r.ln() + 0.5 * nf * PI.ln() - ln_gamma(0.5 * nf + 1.0))
}

/// Angle in [0, π] between two nonzero vectors of equal length.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let na = norm_sq(a).sqrt();
    let nb = norm_sq(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(invalid("angle undefined for a zero vector"));
    }
    // 2·atan2(‖â − b̂‖, ‖â + b̂‖) stays accurate near 0 and π, unlike acos.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

pub(crate) fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Membership in the conical shell: inside the cone (closed) and at distance
/// at least `shell_min_distance` from its apex.
pub fn region_contains(point: &[f64], cone: &ConeSpec, shell_min_distance: f64) -> Result<bool> {
    if point.len() != cone.dim() {
        return Err(invalid(format!(
            "point has dimension {}, cone has {}",
            point.len(),
            cone.dim()
        )));
    }
    let mut off_sq = 0.0;
    let mut axis_sq = 0.0;
    let mut cross = 0.0;
    for ((p, a), q) in point.iter().zip(&cone.apex).zip(&cone.axis_point) {
        let u = p - a;
        let v = q - a;
        off_sq += u * u;
        axis_sq += v * v;
        cross += u * v;
    }
    let dist = off_sq.sqrt();
    if dist < shell_min_distance {
        return Ok(false);
    }
    if dist == 0.0 {
        // Only reachable with a zero minimum distance: the apex belongs to
        // the closed cone.
        return Ok(true);
    }
    let angle = clamped_acos(cross / (dist * axis_sq.sqrt()));
    Ok(angle <= cone.half_angle)
}

fn check_cone_angle(n: usize, theta: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid("solid angle needs dimension n ≥ 2"));
    }
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(invalid(format!("half-angle {theta} outside (0, π/2]")));
    }
    Ok(())
}

/// ln Ω(θ): log of the fraction of the sphere covered by a cone of
/// half-angle θ, ln(½ I_{sin²θ}((n−1)/2, ½)).
pub fn ln_solid_angle_exact(n: usize, theta: f64) -> Result<f64> {
    check_cone_angle(n, theta)?;
    if theta == FRAC_PI_2 {
        return Ok(-std::f64::consts::LN_2);
    }
    let s = theta.sin();
    let c = theta.cos();
    let a = 0.5 * (n as f64 - 1.0);
    Ok(ln_beta_inc_reg(a, 0.5, s * s, c * c) - std::f64::consts::LN_2)
}

/// Ω(θ) in (0, ½].
pub fn solid_angle_exact(n: usize, theta: f64) -> Result<f64> {
    ln_solid_angle_exact(n, theta).map(f64::exp)
}

/// Leading term of Shannon's cap asymptotic,
/// ln(sinⁿθ / (√(2πn) sin θ cos θ)).
pub fn log_solid_angle_asymptotic(n: usize, theta: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("solid angle needs dimension n ≥ 2"));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(invalid(format!("half-angle {theta} outside (0, π/2)")));
    }
    let nf = n as f64;
    let (s, c) = theta.sin_cos();
    Ok(nf * s.ln() - 0.5 * (2.0 * PI * nf).ln() - s.ln() - c.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ball_volume_examples() {
        assert_relative_eq!(
            log_ball_volume(2, 1.0).unwrap(),
            PI.ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_ball_volume(1, 0.7).unwrap(),
            (1.4f64).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_ball_volume(3, 2.0).unwrap(),
            (32.0 * PI / 3.0).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(log_ball_volume(3, 2.0).unwrap(), 3.511853, epsilon = 1e-6);
    }

    #[test]
    fn ball_volume_monte_carlo_3d() {
        // Hit-or-miss integration of the radius-2 ball inside [-2, 2]³.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 400_000;
        let hits = (0..trials)
            .filter(|_| {
                let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
                norm_sq(&p) <= 4.0
            })
            .count();
        let frac = hits as f64 / trials as f64;
        let est = 64.0 * frac;
        let se = 64.0 * (frac * (1.0 - frac) / trials as f64).sqrt();
        let exact = log_ball_volume(3, 2.0).unwrap().exp();
        assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact}");
    }

    #[test]
    fn sphere_surface_examples() {
        assert_relative_eq!(
            log_sphere_surface(2, 1.0).unwrap(),
            (2.0 * PI).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_sphere_surface(3, 1.0).unwrap(),
            (4.0 * PI).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_sphere_surface(4, 2.0).unwrap(),
            (16.0 * PI * PI).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sphere_surface_is_volume_derivative() {
        // d/dr Vol = Surf; central difference on the linear-domain volume.
        let (n, r, h) = (4usize, 2.0f64, 1e-5);
        let vol = |r: f64| log_ball_volume(n, r).unwrap().exp();
        let deriv = (vol(r + h) - vol(r - h)) / (2.0 * h);
        assert_relative_eq!(
            deriv.ln(),
            log_sphere_surface(n, r).unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(log_ball_volume(0, 1.0).is_err());
        assert!(log_ball_volume(3, 0.0).is_err());
        assert!(log_sphere_surface(3, -1.0).is_err());
        assert!(angle_between(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(angle_between(&[1.0], &[1.0, 0.0]).is_err());
        assert!(solid_angle_exact(3, 0.0).is_err());
        assert!(solid_angle_exact(3, 1.6).is_err());
        assert!(solid_angle_exact(1, 1.0).is_err());
        assert!(log_solid_angle_asymptotic(10, FRAC_PI_2).is_err());
        assert!(ConeSpec::new(vec![0.0; 2], vec![0.0; 2], 1.0).is_err());
        assert!(ConeSpec::new(vec![0.0; 2], vec![1.0; 2], 0.0).is_err());
        assert!(ShellSpec::new(vec![0.0], 2.0, 1.0).is_err());
    }

    #[test]
    fn angle_examples() {
        assert_relative_eq!(angle_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), FRAC_PI_2);
        let a = [0.3, -1.2, 4.5];
        assert_eq!(angle_between(&a, &a).unwrap(), 0.0);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert_relative_eq!(angle_between(&a, &neg).unwrap(), PI);
    }

    #[test]
    fn region_examples() {
        let l = 1.5;
        let cone = ConeSpec::new(vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], 0.5).unwrap();
        assert!(!region_contains(&[0.0, 0.0, 0.0], &cone, l).unwrap());
        assert!(region_contains(&[2.0 * l, 0.0, 0.0], &cone, l).unwrap());
        // Boundary is closed in distance.
        assert!(region_contains(&[l, 0.0, 0.0], &cone, l).unwrap());
        let outside = 0.5f64 + 0.01;
        assert!(
            !region_contains(&[3.0 * outside.cos(), 3.0 * outside.sin(), 0.0], &cone, l).unwrap()
        );
        let inside = 0.5f64 - 1e-9;
        assert!(region_contains(&[3.0 * inside.cos(), 3.0 * inside.sin(), 0.0], &cone, l).unwrap());
        assert!(region_contains(&[1.0, 0.0], &cone, l).is_err());
    }

    #[test]
    fn shell_membership_and_volume() {
        let shell = ShellSpec::new(vec![1.0, 1.0], 1.0, 2.0).unwrap();
        assert!(shell.contains(&[2.5, 1.0]).unwrap());
        assert!(!shell.contains(&[1.2, 1.0]).unwrap());
        assert!(!shell.contains(&[4.0, 1.0]).unwrap());
        assert_relative_eq!(
            shell.log_volume().unwrap(),
            (3.0 * PI).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn solid_angle_closed_forms() {
        for n in [2usize, 3, 7, 50, 5000] {
            assert_relative_eq!(solid_angle_exact(n, FRAC_PI_2).unwrap(), 0.5);
        }
        for &t in &[0.01, 0.3, 1.0, 1.5] {
            assert_relative_eq!(
                solid_angle_exact(2, t).unwrap(),
                t / PI,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                solid_angle_exact(3, t).unwrap(),
                (1.0 - t.cos()) / 2.0,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn solid_angle_against_statrs_beta() {
        for &n in &[4usize, 9, 30, 200] {
            for &t in &[0.2f64, 0.9, 1.3] {
                let s2 = t.sin().powi(2);
                let oracle =
                    0.5 * statrs::function::beta::beta_reg(0.5 * (n as f64 - 1.0), 0.5, s2);
                assert_relative_eq!(
                    solid_angle_exact(n, t).unwrap(),
                    oracle,
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn solid_angle_uniform_direction_monte_carlo() {
        // 10⁶ uniform directions per dimension; the fraction within θ of the
        // first axis must sit within 3 standard errors of Ω(θ).
        let theta = 0.9f64;
        let trials = 1_000_000u64;
        for n in 2..=10usize {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let cos_t = theta.cos();
            let mut hits = 0u64;
            let mut v = vec![0.0; n];
            for _ in 0..trials {
                for x in v.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                if v[0] / norm_sq(&v).sqrt() >= cos_t {
                    hits += 1;
                }
            }
            let p = solid_angle_exact(n, theta).unwrap();
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let frac = hits as f64 / trials as f64;
            assert!(
                (frac - p).abs() <= 3.0 * se,
                "n={n}: {frac} vs {p} (se {se})"
            );
        }
    }

    #[test]
    fn asymptotic_tracks_exact() {
        let v = log_solid_angle_asymptotic(100, std::f64::consts::FRAC_PI_4).unwrap();
        let e = ln_solid_angle_exact(100, std::f64::consts::FRAC_PI_4).unwrap();
        assert!((v - e).abs() <= 0.05);
        let gap = |n: usize, t: f64| {
            log_solid_angle_asymptotic(n, t).unwrap() - ln_solid_angle_exact(n, t).unwrap()
        };
        for n in [50usize, 80, 200, 1000] {
            for &t in &[0.2, 0.7, 1.0] {
                assert!(
                    gap(n, t).abs() <= 5.0 / n as f64,
                    "n={n}, θ={t}: {}",
                    gap(n, t)
                );
            }
        }
        // The neglected factor is 1 + O(1/n) with a constant near tan²θ, so
        // n·gap settles to a θ-dependent constant.
        for &t in &[0.2, 0.7, 1.0, 1.3] {
            let (a, b) = (1000.0 * gap(1000, t), 8000.0 * gap(8000, t));
            assert!((a - b).abs() <= 0.1 * b.abs().max(0.1), "θ={t}: {a} vs {b}");
            assert!(b.abs() <= t.tan().powi(2) + 0.5);
        }
        // Dominant term: (1/n)·value → ln sin θ.
        let t: f64 = 0.8;
        let n = 1_000_000;
        let per_n = log_solid_angle_asymptotic(n, t).unwrap() / n as f64;
        assert!((per_n - t.sin().ln()).abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ball_volume_homogeneity(n in 1usize..5000, r in 0.01f64..100.0) {
                let lhs = log_ball_volume(n, r).unwrap() - log_ball_volume(n, 1.0).unwrap();
                prop_assert!((lhs - n as f64 * r.ln()).abs() <= 1e-9 * (1.0 + lhs.abs()));
            }

            #[test]
            fn surface_times_r_over_n_is_volume(n in 1usize..5000, r in 0.01f64..100.0) {
                let lhs = log_sphere_surface(n, r).unwrap() + r.ln() - (n as f64).ln();
                let rhs = log_ball_volume(n, r).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }

            #[test]
            fn solid_angle_increasing(n in 2usize..3000, a in 0.01f64..1.5, b in 0.01f64..1.5) {
                prop_assume!((a - b).abs() > 1e-6);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(ln_solid_angle_exact(n, lo).unwrap() < ln_solid_angle_exact(n, hi).unwrap());
            }

            #[test]
            fn region_rotation_invariant(
                seed in any::<u64>(),
                half_angle in 0.2f64..1.4,
                min_dist in 0.0f64..3.0,
            ) {
                // Random rotation about the apex via a random orthogonal
                // matrix from Gram–Schmidt on Gaussian columns.
                let n = 5;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut rng)).collect() };
                let apex = draw(n);
                let axis = draw(n);
                let point = draw(n).iter().map(|x| 2.0 * x).collect::<Vec<_>>();
                let mut basis: Vec<Vec<f64>> = Vec::new();
                while basis.len() < n {
                    let mut v = draw(n);
                    for b in &basis {
                        let c = dot(&v, b);
                        for (vi, bi) in v.iter_mut().zip(b) { *vi -= c * bi; }
                    }
                    let nv = norm_sq(&v).sqrt();
                    if nv > 1e-6 {
                        basis.push(v.iter().map(|x| x / nv).collect());
                    }
                }
                let rotate = |p: &[f64]| -> Vec<f64> {
                    let rel: Vec<f64> = p.iter().zip(&apex).map(|(x, a)| x - a).collect();
                    (0..n).map(|i| apex[i] + dot(&basis[i], &rel)).collect()
                };
                let cone = ConeSpec::new(apex.clone(), axis.clone(), half_angle).unwrap();
                let rcone = ConeSpec::new(apex.clone(), rotate(&axis), half_angle).unwrap();
                let before = region_contains(&point, &cone, min_dist).unwrap();
                let after = region_contains(&rotate(&point), &rcone, min_dist).unwrap();
                // Skip points within rounding distance of the boundary.
                let rel: Vec<f64> = point.iter().zip(&apex).map(|(x, a)| x - a).collect();
                let ax: Vec<f64> = axis.iter().zip(&apex).map(|(x, a)| x - a).collect();
                let ang = angle_between(&rel, &ax).unwrap();
                prop_assume!((ang - half_angle).abs() > 1e-9);
                prop_assume!((norm_sq(&rel).sqrt() - min_dist).abs() > 1e-9);
                prop_assert_eq!(before, after);
            }
        }
    }
}
