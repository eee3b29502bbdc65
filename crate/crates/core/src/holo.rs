//! Holomorphic test subjects: finite zero sets, Blaschke products on a
//! disc of radius `R`, and quadratic-growth variants, together with the
//! pairing of a test function against a zero set.

use crate::error::{Error, Result};
use crate::geometry::{GridField, PlanarDomain, Point, PolarGrid};
use crate::measures::Majorant;
use crate::testfn::TestFunction;
use std::f64::consts::PI;
use std::path::Path;

/// Finite multiset of zeros: points with integer multiplicities.
#[derive(Debug, Clone, Default)]
pub struct ZeroSet {
    entries: Vec<(Point, u32)>,
}

impl ZeroSet {
    /// Builds a zero set, merging duplicate points into multiplicities.
    pub fn new(entries: Vec<(Point, u32)>) -> Result<Self> {
        let mut merged: Vec<(Point, u32)> = Vec::new();
        for (p, m) in entries {
            if m == 0 {
                return Err(Error::invalid("zero multiplicity >= 1 violated"));
            }
            if !(p.re.is_finite() && p.im.is_finite()) {
                return Err(Error::invalid("zero location must be finite"));
            }
            if let Some(e) = merged.iter_mut().find(|(q, _)| q.dist(p) < 1e-12) {
                e.1 += m;
            } else {
                merged.push((p, m));
            }
        }
        Ok(ZeroSet { entries: merged })
    }

    pub fn empty() -> Self {
        ZeroSet::default()
    }

    pub fn entries(&self) -> &[(Point, u32)] {
        &self.entries
    }

    pub fn total_multiplicity(&self) -> u32 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    /// Parses a plain-text zero list: one `re im multiplicity` triple per
    /// line, whitespace-separated, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_table(&text)
    }

    pub fn from_str_table(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = |what: &str| {
                it.next().ok_or_else(|| {
                    Error::Config(format!("zeros file line {}: missing {what}", ln + 1))
                })
            };
            let re: f64 = next("re")?
                .parse()
                .map_err(|e| Error::Config(format!("zeros file line {}: {e}", ln + 1)))?;
            let im: f64 = next("im")?
                .parse()
                .map_err(|e| Error::Config(format!("zeros file line {}: {e}", ln + 1)))?;
            let m: u32 = next("multiplicity")?
                .parse()
                .map_err(|e| Error::Config(format!("zeros file line {}: {e}", ln + 1)))?;
            if it.next().is_some() {
                return Err(Error::Config(format!(
                    "zeros file line {}: expected exactly 're im multiplicity'",
                    ln + 1
                )));
            }
            entries.push((Point::new(re, im), m));
        }
        ZeroSet::new(entries)
    }
}

/// A closed-form holomorphic subject: a Blaschke product over `zeros` on
/// the disc of radius `R`, optionally multiplied by `exp(alpha z^2 / 2)`,
/// with a subharmonic majorant certifying `|f| <= exp(M)`.
#[derive(Debug, Clone)]
pub struct HoloFunction {
    zeros: ZeroSet,
    radius: f64,
    alpha: f64,
    exp_majorant: Majorant,
    log_at_z0: f64,
}

impl HoloFunction {
    pub fn zeros(&self) -> &ZeroSet {
        &self.zeros
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn exp_majorant(&self) -> &Majorant {
        &self.exp_majorant
    }

    /// `log|f(0)|` (the distinguished point is the origin).
    pub fn log_at_z0(&self) -> f64 {
        self.log_at_z0
    }

    /// `log|f(z)|`; `-inf` at the zeros.
    pub fn log_abs(&self, z: Point) -> f64 {
        let r2 = self.radius * self.radius;
        let mut acc = 0.5 * self.alpha * (z.re * z.re - z.im * z.im);
        for (a, m) in self.zeros.entries() {
            let num = self.radius * a.dist(z);
            if num == 0.0 {
                return f64::NEG_INFINITY;
            }
            // |R^2 - conj(a) z|
            let dre = r2 - (a.re * z.re + a.im * z.im);
            let dim = -(a.re * z.im - a.im * z.re);
            acc += *m as f64 * (num.ln() - dre.hypot(dim).ln());
        }
        acc
    }
}

/// Blaschke product over the disc `|z| < R`:
/// `f = prod [ R (a_k - z) / (R^2 - conj(a_k) z) ]^{m_k}`.
/// `|f| <= 1` on the disc, so the majorant is the zero tag.
pub fn blaschke(zeros: ZeroSet, radius: f64) -> Result<HoloFunction> {
    if radius <= 0.0 {
        return Err(Error::invalid("disc radius R > 0 violated"));
    }
    let mut log0 = 0.0;
    for (a, m) in zeros.entries() {
        let r = a.abs();
        if r == 0.0 {
            return Err(Error::invalid("zero at the distinguished point 0: log|f(0)| = -inf"));
        }
        if r >= radius {
            return Err(Error::invalid("|a_k| < R violated"));
        }
        log0 += *m as f64 * (r / radius).ln();
    }
    Ok(HoloFunction {
        zeros,
        radius,
        alpha: 0.0,
        exp_majorant: Majorant::Zero,
        log_at_z0: log0,
    })
}

/// Blaschke product times `g(z) = exp(alpha z^2 / 2)`:
/// `log|g| = alpha Re(z^2)/2 <= alpha |z|^2`, so the quadratic majorant
/// certifies `|f| <= exp(alpha |z|^2)`; `g(0) = 1` keeps `log|f(0)|`
/// equal to the Blaschke value. The certificate is validated on sample
/// rings before returning.
pub fn with_growth(zeros: ZeroSet, alpha: f64, radius: f64) -> Result<HoloFunction> {
    if alpha < 0.0 {
        return Err(Error::invalid("alpha >= 0 violated"));
    }
    let base = blaschke(zeros, radius)?;
    let f = HoloFunction {
        alpha,
        exp_majorant: if alpha == 0.0 {
            Majorant::Zero
        } else {
            Majorant::Quadratic(alpha)
        },
        ..base
    };
    // sample-ring certificate: log|f| <= M
    for k in 1..=4 {
        let r = radius * k as f64 / 4.0 * 0.999;
        for j in 0..64 {
            let z = Point::from_polar(r, 2.0 * PI * j as f64 / 64.0);
            let lf = f.log_abs(z);
            if lf.is_finite() && lf > f.exp_majorant.eval(z) + 1e-9 {
                return Err(Error::Numerical(format!(
                    "majorant certificate fails at |z| = {r:.3}: log|f| = {lf:.6}"
                )));
            }
        }
    }
    Ok(f)
}

/// `u = log|f|` sampled on the grid, with `-inf` sentinels at the nodes
/// of the cells containing the zeros and the zeros declared singular.
pub fn log_modulus(f: &HoloFunction, grid: PolarGrid) -> Result<GridField> {
    let mut values = vec![0.0; grid.node_count()];
    for i in 0..grid.n_r() {
        for j in 0..grid.n_theta() {
            values[grid.index(i, j)] = f.log_abs(grid.node_point(i, j));
        }
    }
    let mut singular = Vec::new();
    for (a, _) in f.zeros.entries() {
        singular.push(*a);
        if a.abs() < grid.delta() {
            continue;
        }
        let ai = grid.band_of(a.abs());
        let mut ath = a.arg();
        if ath < 0.0 {
            ath += 2.0 * PI;
        }
        let aj = ((ath / grid.dtheta()).floor() as usize).min(grid.n_theta() - 1);
        values[grid.index(ai, aj)] = f64::NEG_INFINITY;
    }
    Ok(GridField::from_values(grid, values)?.with_singular_points(singular))
}

/// The zero-set side of the pairing: `sum m_k v(z_k)` over the zeros
/// outside `S` (those inside are excluded with the integration region).
pub fn sum_over_zeros(v: &TestFunction, zeros: &ZeroSet, dom: &PlanarDomain) -> Result<f64> {
    let mut acc = 0.0;
    for (z, m) in zeros.entries() {
        if z.abs() <= dom.eps() {
            continue;
        }
        let val = v.eval(*z);
        if val == f64::NEG_INFINITY {
            return Err(Error::Numerical("pairing singular: v = -inf at a zero".into()));
        }
        acc += *m as f64 * val;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::green_disc_radial;
    use crate::measures::{closed_form_riesz, riesz_from_grid};
    use crate::testfn::classify;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn zs(pts: &[(f64, f64, u32)]) -> ZeroSet {
        ZeroSet::new(pts.iter().map(|&(x, y, m)| (Point::new(x, y), m)).collect()).unwrap()
    }

    fn grid() -> PolarGrid {
        PolarGrid::new(256, 512, 0.03125, 1.0).unwrap()
    }

    #[test]
    fn zero_set_merges_duplicates() {
        let z = zs(&[(0.5, 0.0, 1), (0.5, 0.0, 2), (0.1, 0.2, 1)]);
        assert_eq!(z.entries().len(), 2);
        assert_eq!(z.total_multiplicity(), 4);
        assert!(ZeroSet::new(vec![(Point::new(0.1, 0.0), 0)]).is_err());
    }

    #[test]
    fn zero_file_parsing() {
        let text = "# test subject\n0.5 0.0 1\n0.1 0.2 3   # inner zero\n\n-0.3 0.0 1\n";
        let z = ZeroSet::from_str_table(text).unwrap();
        assert_eq!(z.entries().len(), 3);
        assert_eq!(z.total_multiplicity(), 5);
        assert!(ZeroSet::from_str_table("0.5 0.0").is_err());
        assert!(ZeroSet::from_str_table("0.5 x 1").is_err());
        assert!(ZeroSet::from_str_table("0.5 0.0 1 9").is_err());
    }

    #[test]
    fn blaschke_log_at_origin() {
        let f = blaschke(zs(&[(0.5, 0.0, 1)]), 1.0).unwrap();
        assert_abs_diff_eq!(f.log_at_z0(), 0.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.log_abs(Point::new(0.0, 0.0)), 0.5f64.ln(), epsilon = 1e-12);

        let f2 = blaschke(zs(&[(0.5, 0.0, 1), (0.0, 0.5, 1)]), 1.0).unwrap();
        assert_abs_diff_eq!(f2.log_at_z0(), 2.0 * 0.5f64.ln(), epsilon = 1e-15);

        let f0 = blaschke(ZeroSet::empty(), 1.0).unwrap();
        assert_eq!(f0.log_at_z0(), 0.0);
        assert_eq!(f0.log_abs(Point::new(0.3, 0.1)), 0.0);
    }

    #[test]
    fn blaschke_rejects_bad_zeros() {
        assert!(blaschke(zs(&[(0.0, 0.0, 1)]), 1.0).is_err());
        assert!(blaschke(zs(&[(1.0, 0.0, 1)]), 1.0).is_err());
        assert!(blaschke(zs(&[(0.5, 0.0, 1)]), 0.4).is_err());
    }

    #[test]
    fn blaschke_unimodular_on_boundary() {
        let f = blaschke(zs(&[(0.5, 0.0, 1), (-0.2, 0.3, 2)]), 1.0).unwrap();
        for j in 0..32 {
            let z = Point::from_polar(1.0, 2.0 * PI * j as f64 / 32.0);
            assert_abs_diff_eq!(f.log_abs(z), 0.0, epsilon = 1e-12);
        }
        // and |f| <= 1 inside
        for j in 0..32 {
            let z = Point::from_polar(0.7, 2.0 * PI * j as f64 / 32.0);
            assert!(f.log_abs(z) <= 1e-12);
        }
    }

    #[test]
    fn blaschke_scales_with_disc_radius() {
        let f = blaschke(zs(&[(0.5, 0.0, 1)]), 2.0).unwrap();
        assert_abs_diff_eq!(f.log_at_z0(), 0.25f64.ln(), epsilon = 1e-15);
        let z = Point::from_polar(2.0, 1.0);
        assert_abs_diff_eq!(f.log_abs(z), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn with_growth_reduces_to_blaschke_at_alpha_zero() {
        let f = with_growth(zs(&[(0.5, 0.0, 1)]), 0.0, 1.0).unwrap();
        assert!(matches!(f.exp_majorant(), Majorant::Zero));
        assert_abs_diff_eq!(f.log_at_z0(), 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn with_growth_majorant_and_riesz_mass() {
        let f = with_growth(ZeroSet::empty(), 1.0, 1.0).unwrap();
        assert_eq!(f.log_at_z0(), 0.0);
        // Riesz mass of the quadratic majorant over the unit disc is 2
        let nu = closed_form_riesz(f.exp_majorant(), grid()).unwrap();
        assert_relative_eq!(nu.total_mass(), 2.0, max_relative = 1e-2);

        let fz = with_growth(zs(&[(0.5, 0.0, 1)]), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(fz.log_at_z0(), 0.5f64.ln(), epsilon = 1e-15);
        assert!(with_growth(ZeroSet::empty(), -1.0, 1.0).is_err());
    }

    #[test]
    fn log_modulus_recovers_zeros_by_riesz() {
        let f = blaschke(zs(&[(0.5, 0.0, 1), (-0.2, 0.4, 2)]), 1.0).unwrap();
        let u = log_modulus(&f, grid()).unwrap();
        let nu = riesz_from_grid(&u).unwrap();
        assert_relative_eq!(nu.atom_mass(), 3.0, max_relative = 0.02);
        // atoms land on the zeros
        for (a, want_m) in [(Point::new(0.5, 0.0), 1.0), (Point::new(-0.2, 0.4), 2.0)] {
            let (pos, m) = nu
                .atoms()
                .iter()
                .min_by(|x, y| x.0.dist(a).total_cmp(&y.0.dist(a)))
                .copied()
                .unwrap();
            assert!(pos.dist(a) < 0.02, "atom missed zero at {a:?}");
            assert_relative_eq!(m, want_m, max_relative = 0.02);
        }
    }

    #[test]
    fn log_modulus_vanishes_on_boundary_ring() {
        // |B| = 1 on the circle; the outermost node sits half a cell
        // inside, so the sampled value is h/2 times the normal derivative
        // of log|B| (up to (1+|a|)/(1-|a|) = 3 here), not zero exactly.
        let f = blaschke(zs(&[(0.5, 0.0, 1)]), 1.0).unwrap();
        let u = log_modulus(&f, grid()).unwrap();
        let g = u.grid();
        let slack = 3.0 * g.dr();
        for j in 0..g.n_theta() {
            assert!(u.value(g.n_r() - 1, j).abs() <= slack);
        }
        // and the true boundary trace is zero
        assert_abs_diff_eq!(f.log_abs(Point::new(0.0, 1.0)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pairing_against_green_log() {
        let dom = PlanarDomain::new(1.0, 0.25, 0.5).unwrap();
        let g = PolarGrid::for_domain(&dom, 256, 512).unwrap();
        let field = GridField::from_fn(g, |p| green_disc_radial(1.0, p.abs()));
        let v = classify(field, dom, 4.0f64.ln()).unwrap();

        let z = zs(&[(0.5, 0.0, 1)]);
        let got = sum_over_zeros(&v, &z, &dom).unwrap();
        assert_abs_diff_eq!(got, 2.0f64.ln(), epsilon = 1e-4);

        // zero inside S contributes nothing
        let z_in = zs(&[(0.1, 0.0, 5)]);
        assert_eq!(sum_over_zeros(&v, &z_in, &dom).unwrap(), 0.0);
        assert_eq!(sum_over_zeros(&v, &ZeroSet::empty(), &dom).unwrap(), 0.0);
    }

    #[test]
    fn pairing_singular_is_error() {
        // a sign-changing Lyons potential is -inf at its atom; pairing a
        // zero placed exactly there must fail rather than return garbage
        let dom = PlanarDomain::new(1.0, 0.25, 0.5).unwrap();
        let g = PolarGrid::for_domain(&dom, 256, 512).unwrap();
        let z = Point::new(0.5, 0.0);
        let v = crate::testfn::lyons_modified(z, 0.1, dom, g).unwrap();
        let zeros = zs(&[(0.5, 0.0, 1)]);
        assert!(sum_over_zeros(&v, &zeros, &dom).is_err());
    }
}
