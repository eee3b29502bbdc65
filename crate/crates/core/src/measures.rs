//! Riesz measures of subharmonic data.
//!
//! Normalization: the Riesz measure of `u` is `(1/2pi) * Laplacian(u)`,
//! so `log|z - a|` carries Riesz mass exactly 1 and a unit-multiplicity
//! zero of a holomorphic function contributes mass 1.
//!
//! Measures are kept as point atoms plus an absolutely continuous density
//! sampled on the grid. Estimation from grid data separates the two by
//! clustering cells whose Laplacian mass concentrates beyond a threshold
//! and measuring each cluster by the gradient flux through the boundary of
//! a surrounding halo (flux telescoping makes this insensitive to the bad
//! stencils right at the singularity).

use crate::error::{Error, Result};
use crate::geometry::{GridField, Point, PolarGrid};
use std::collections::VecDeque;
use std::f64::consts::PI;

/// A cell whose Laplacian mass exceeds this is an atom candidate.
pub const ATOM_THRESHOLD: f64 = 0.1;

/// Halo width (in cells) around an atom cluster; the atom mass is the
/// flux through the halo boundary.
pub const ATOM_HALO: usize = 6;

/// Finite nonnegative measure: atoms plus a density on the grid.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    atoms: Vec<(Point, f64)>,
    density: Option<GridField>,
    /// Most negative raw density seen during estimation (clamped away);
    /// 0 for closed-form measures. Diagnostic for subharmonicity checks.
    min_raw_density: f64,
}

impl WeightedMeasure {
    pub fn new(atoms: Vec<(Point, f64)>, density: Option<GridField>) -> Result<Self> {
        for (_, m) in &atoms {
            if *m < 0.0 {
                return Err(Error::invalid("atom mass >= 0 violated"));
            }
        }
        if let Some(d) = &density {
            if d.values().iter().any(|&v| v < 0.0) {
                return Err(Error::invalid("density >= 0 violated"));
            }
        }
        Ok(WeightedMeasure {
            atoms,
            density,
            min_raw_density: 0.0,
        })
    }

    pub fn empty() -> Self {
        WeightedMeasure {
            atoms: Vec::new(),
            density: None,
            min_raw_density: 0.0,
        }
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&GridField> {
        self.density.as_ref()
    }

    pub fn min_raw_density(&self) -> f64 {
        self.min_raw_density
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    pub fn total_mass(&self) -> f64 {
        let mut t = self.atom_mass();
        if let Some(d) = &self.density {
            let g = *d.grid();
            t += d
                .integrate_annulus(g.delta(), g.radius())
                .expect("full-grid annulus is never empty");
        }
        t
    }
}

/// Subharmonic majorant `M` with `|f| <= exp(M)`: tagged closed forms
/// plus a grid-sampled fallback.
#[derive(Debug, Clone)]
pub enum Majorant {
    /// M identically 0 (bounded functions, Blaschke products).
    Zero,
    /// `M(z) = alpha |z|^2`.
    Quadratic(f64),
    /// `M(z) = beta log(1/(1 - |z|))` on the unit disc.
    LogBlowup(f64),
    /// Arbitrary grid-sampled majorant.
    CustomGrid(GridField),
}

impl Majorant {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Majorant::Zero => 0.0,
            Majorant::Quadratic(a) => {
                let r = p.abs();
                a * r * r
            }
            Majorant::LogBlowup(b) => {
                let r = p.abs();
                -b * (1.0 - r).ln()
            }
            Majorant::CustomGrid(f) => f.eval(p),
        }
    }

    /// `M(z0) = M(0)`; must be finite (Theorem hypothesis).
    pub fn m0(&self) -> f64 {
        match self {
            Majorant::Zero | Majorant::Quadratic(_) | Majorant::LogBlowup(_) => 0.0,
            Majorant::CustomGrid(f) => {
                // nearest available stand-in for the origin value
                f.eval(Point::new(f.grid().delta(), 0.0))
            }
        }
    }

    pub fn sample(&self, grid: PolarGrid) -> GridField {
        GridField::from_fn(grid, |p| self.eval(p))
    }

    /// Riesz density of the tagged majorant at radius `r`, in mass per
    /// unit area.
    fn density_at(&self, r: f64) -> Result<f64> {
        match self {
            Majorant::Zero => Ok(0.0),
            Majorant::Quadratic(a) => Ok(2.0 * a / PI),
            Majorant::LogBlowup(b) => {
                if r >= 1.0 {
                    return Err(Error::invalid("log_blowup majorant is defined on |z| < 1"));
                }
                let om = 1.0 - r;
                Ok(b / (2.0 * PI) * (1.0 / (om * om) + 1.0 / (r * om)))
            }
            Majorant::CustomGrid(_) => Err(Error::invalid(
                "custom_grid majorant has no closed-form Riesz measure; use riesz_from_grid",
            )),
        }
    }
}

/// Closed-form Riesz measure of a tagged majorant, sampled on `grid`.
/// Errors on `CustomGrid` (use [`riesz_from_grid`] for those).
pub fn closed_form_riesz(m: &Majorant, grid: PolarGrid) -> Result<WeightedMeasure> {
    if matches!(m, Majorant::Zero) {
        return Ok(WeightedMeasure::empty());
    }
    let mut values = vec![0.0; grid.node_count()];
    for i in 0..grid.n_r() {
        let d = m.density_at(grid.r_node(i))?;
        for j in 0..grid.n_theta() {
            values[grid.index(i, j)] = d;
        }
    }
    WeightedMeasure::new(vec![], Some(GridField::from_values(grid, values)?))
}

/// Lebesgue measure of the disc `|z| < R_ball`, normalized to total mass 1.
pub fn lebesgue_normalized(r_ball: f64, grid: PolarGrid) -> Result<WeightedMeasure> {
    if r_ball <= 0.0 {
        return Err(Error::invalid("R_ball > 0 violated"));
    }
    let dens = 1.0 / (PI * r_ball * r_ball);
    let f = GridField::from_fn(grid, |p| if p.abs() < r_ball { dens } else { 0.0 });
    WeightedMeasure::new(vec![], Some(f))
}

/// The modified measure of the worked example: normalized Lebesgue measure
/// on the unit disc with its restriction to `B(z, r)` swept into a point
/// atom at `z`. Total mass stays exactly 1: the atom carries precisely the
/// density mass removed on the grid.
///
/// Cells straddling the circle `|w - z| = r` are weighted by subsampled
/// coverage so the removed mass matches `r^2` closely.
pub fn lyons_modified_measure(z: Point, r: f64, grid: PolarGrid) -> Result<WeightedMeasure> {
    let zr = z.abs();
    if zr == 0.0 {
        return Err(Error::invalid("z != 0 violated"));
    }
    if !(r > 0.0 && r < 1.0 - zr) {
        return Err(Error::invalid("B(z, r) escapes the unit ball: need 0 < r < 1 - |z|"));
    }
    let dens = 1.0 / PI;
    let mut values = vec![0.0; grid.node_count()];
    let mut removed = 0.0;
    for i in 0..grid.n_r() {
        let area = grid.cell_area(i);
        let half_diag = 0.5 * (grid.dr() + grid.r_node(i) * grid.dtheta());
        for j in 0..grid.n_theta() {
            let p = grid.node_point(i, j);
            if p.abs() >= 1.0 {
                continue;
            }
            let d = p.dist(z);
            let inside_frac = if d <= r - half_diag {
                1.0
            } else if d >= r + half_diag {
                0.0
            } else {
                cell_coverage(grid, i, j, z, r)
            };
            values[grid.index(i, j)] = dens * (1.0 - inside_frac);
            removed += dens * inside_frac * area;
        }
    }
    let field = GridField::from_values(grid, values)?;
    WeightedMeasure::new(vec![(z, removed)], Some(field))
}

/// Fraction of cell (i, j) lying inside the disc `|w - z| < r`, by 8x8
/// midpoint subsampling in (radius, angle).
fn cell_coverage(grid: PolarGrid, i: usize, j: usize, z: Point, r: f64) -> f64 {
    const N: usize = 8;
    let r_in = grid.r_edge(i);
    let dr = grid.dr();
    let th0 = j as f64 * grid.dtheta();
    let dth = grid.dtheta();
    let mut hits = 0usize;
    for a in 0..N {
        let rr = r_in + (a as f64 + 0.5) * dr / N as f64;
        for b in 0..N {
            let tt = th0 + (b as f64 + 0.5) * dth / N as f64;
            if Point::from_polar(rr, tt).dist(z) < r {
                hits += 1;
            }
        }
    }
    hits as f64 / (N * N) as f64
}

/// Estimates the Riesz measure of grid-sampled `u`: cellwise
/// `(1/2pi) Laplacian` density, with concentrated mass reported as atoms.
pub fn riesz_from_grid(u: &GridField) -> Result<WeightedMeasure> {
    let grid = *u.grid();
    if grid.n_r() < 64 {
        return Err(Error::invalid("grid too coarse for Riesz estimation (n_r < 64)"));
    }
    let masses = u.riesz_cell_masses();
    let n_r = grid.n_r();
    let n_t = grid.n_theta();

    // Seed cells: concentrated mass, or indeterminate stencils around a
    // -inf sentinel.
    let mut seed = vec![false; grid.node_count()];
    for i in 0..n_r {
        for j in 0..n_t {
            let m = masses[grid.index(i, j)];
            if m.is_nan() || m == f64::INFINITY || m > ATOM_THRESHOLD {
                seed[grid.index(i, j)] = true;
            }
        }
    }

    // Cluster seeds by 4-adjacency (angular wraparound), then dilate each
    // cluster by ATOM_HALO rings of cells. label[k] = cluster id.
    let mut label = vec![usize::MAX; grid.node_count()];
    let mut dist = vec![usize::MAX; grid.node_count()];
    let mut queue = VecDeque::new();
    let mut n_clusters = 0usize;
    for i in 0..n_r {
        for j in 0..n_t {
            let k = grid.index(i, j);
            if seed[k] && label[k] == usize::MAX {
                // BFS over the seed cluster and its halo at once.
                let id = n_clusters;
                n_clusters += 1;
                label[k] = id;
                dist[k] = 0;
                queue.push_back((i, j));
                while let Some((ci, cj)) = queue.pop_front() {
                    let ck = grid.index(ci, cj);
                    let d = dist[ck];
                    for (ni, nj) in neighbors(ci, cj, n_r, n_t) {
                        let nk = grid.index(ni, nj);
                        let nd = if seed[nk] { 0 } else { d + 1 };
                        if nd > ATOM_HALO {
                            continue;
                        }
                        if label[nk] == usize::MAX || dist[nk] > nd {
                            // merge clusters that touch through halos
                            label[nk] = id;
                            dist[nk] = nd;
                            queue.push_back((ni, nj));
                        }
                    }
                }
            }
        }
    }

    // Relabel to account for merged ids (labels written by a later BFS can
    // overwrite an earlier cluster's halo; union them by connectivity).
    // A second pass: connected components of the labeled region.
    let mut comp = vec![usize::MAX; grid.node_count()];
    let mut n_comp = 0usize;
    for i in 0..n_r {
        for j in 0..n_t {
            let k = grid.index(i, j);
            if label[k] != usize::MAX && comp[k] == usize::MAX {
                let id = n_comp;
                n_comp += 1;
                comp[k] = id;
                queue.push_back((i, j));
                while let Some((ci, cj)) = queue.pop_front() {
                    for (ni, nj) in neighbors(ci, cj, n_r, n_t) {
                        let nk = grid.index(ni, nj);
                        if label[nk] != usize::MAX && comp[nk] == usize::MAX {
                            comp[nk] = id;
                            queue.push_back((ni, nj));
                        }
                    }
                }
            }
        }
    }

    // Atom mass per component: gradient flux through the component
    // boundary. Position: mass-weighted centroid of the seed cells, or the
    // declared singular point when one falls inside.
    let mut atom_mass = vec![0.0f64; n_comp];
    let mut cx = vec![0.0f64; n_comp];
    let mut cy = vec![0.0f64; n_comp];
    let mut cw = vec![0.0f64; n_comp];
    let dth = grid.dtheta();
    let dr = grid.dr();
    for i in 0..n_r {
        for j in 0..n_t {
            let k = grid.index(i, j);
            let Some(&id) = comp.get(k).filter(|&&c| c != usize::MAX) else {
                continue;
            };
            // boundary flux: edges from inside the component to outside
            for (ni, nj) in neighbors(i, j, n_r, n_t) {
                let nk = grid.index(ni, nj);
                if comp[nk] != usize::MAX {
                    continue;
                }
                let a = u.value(i, j);
                let b = u.value(ni, nj);
                if !(a.is_finite() && b.is_finite()) {
                    continue;
                }
                let w = if ni == i {
                    // angular edge
                    dr / (grid.r_node(i) * dth)
                } else {
                    dth / (grid.r_node(i.max(ni)) / grid.r_node(i.min(ni))).ln()
                };
                atom_mass[id] += (b - a) * w / (2.0 * PI);
            }
            if seed[k] {
                let m = masses[k];
                let wgt = if m.is_finite() && m > 0.0 { m } else { ATOM_THRESHOLD };
                let p = grid.node_point(i, j);
                cx[id] += wgt * p.re;
                cy[id] += wgt * p.im;
                cw[id] += wgt;
            }
        }
    }

    let mut atoms = Vec::new();
    for id in 0..n_comp {
        let mut pos = if cw[id] > 0.0 {
            Point::new(cx[id] / cw[id], cy[id] / cw[id])
        } else {
            continue;
        };
        // snap to a declared singular point when one is close
        for s in u.singular_points() {
            if s.dist(pos) < (ATOM_HALO as f64 + 1.0) * (dr + grid.r_node(grid.band_of(s.abs())) * dth) {
                pos = *s;
                break;
            }
        }
        let m = atom_mass[id];
        if m > 0.0 {
            atoms.push((pos, m));
        }
    }

    // Residual density on unlabeled cells, kept signed: stencil noise
    // around the singularities is +/- balanced, and clamping it would
    // bias every integral taken against the measure. The most negative
    // raw value is surfaced so callers can reject non-subharmonic input.
    let mut min_raw = 0.0f64;
    let mut dens = vec![0.0; grid.node_count()];
    for i in 0..n_r {
        for j in 0..n_t {
            let k = grid.index(i, j);
            if comp[k] != usize::MAX {
                continue;
            }
            let m = masses[k];
            if !m.is_finite() {
                continue;
            }
            let d = m / grid.cell_area(i);
            if d < min_raw {
                min_raw = d;
            }
            dens[k] = d;
        }
    }

    Ok(WeightedMeasure {
        atoms,
        density: Some(GridField::from_values(grid, dens)?),
        min_raw_density: min_raw,
    })
}

fn neighbors(i: usize, j: usize, n_r: usize, n_t: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut out = [(usize::MAX, usize::MAX); 4];
    let mut n = 0;
    if i > 0 {
        out[n] = (i - 1, j);
        n += 1;
    }
    if i + 1 < n_r {
        out[n] = (i + 1, j);
        n += 1;
    }
    out[n] = (i, (j + 1) % n_t);
    n += 1;
    out[n] = (i, (j + n_t - 1) % n_t);
    n += 1;
    out.into_iter().take(n)
}

/// `sum_atoms mass * field(point) + int field * density` over the annulus
/// `inner <= |z| <= outer`.
pub fn integrate_against(
    field: &GridField,
    mu: &WeightedMeasure,
    inner: f64,
    outer: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (p, m) in mu.atoms() {
        let r = p.abs();
        if r < inner || r > outer {
            continue;
        }
        let v = field.eval(*p);
        if v == f64::NEG_INFINITY {
            return Err(Error::Numerical("integrand singular at atom".into()));
        }
        total += m * v;
    }
    if let Some(d) = mu.density() {
        let g = d.grid();
        let inner = inner.max(g.delta());
        if inner < outer {
            for i in 0..g.n_r() {
                let r = g.r_node(i);
                if r < inner || r > outer {
                    continue;
                }
                let area = g.cell_area(i);
                for j in 0..g.n_theta() {
                    let v = field.value(i, j);
                    let dv = d.value(i, j);
                    if v.is_finite() && dv != 0.0 {
                        total += v * dv * area;
                    }
                }
            }
        }
    }
    Ok(total)
}
