//! Subharmonic test functions on `D` outside `S`: classification,
//! the max-gluing construction, pole normalization, sublevel truncation
//! and the Lyons-type potentials (positive and sign-changing).
//!
//! A test function vanishes at the boundary circle, is bounded on the
//! band `eps <= |z| <= r0`, is subharmonic off `S`, and is nonnegative
//! outside some compact witness disc `S_v`. It is "positive" when the
//! witness disc fits inside `S`.

use crate::error::{Error, Result};
use crate::geometry::{GridField, PlanarDomain, Point, PolarGrid};
use crate::kernels::{green_disc_radial, inf_green_on_circle, Kernel};
use crate::measures::WeightedMeasure;
use rayon::prelude::*;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

/// Sign class of a classified test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    /// Nonnegative on all of `D` minus `S`.
    Positive,
    /// Sign-changing: nonnegative only outside a witness disc larger
    /// than `S`.
    Real,
}

/// Numerical slacks used by the classifier.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Allowed negative Riesz mass per cell (discretization slack).
    pub subharmonic_mass: f64,
    /// Allowed |v| on the outermost grid ring.
    pub boundary: f64,
    /// Allowed dip below zero when locating the positivity witness.
    pub positivity: f64,
    /// Radius, in local cell sizes, of the disc around each declared
    /// singular point that is exempt from nodewise checks (the stencil is
    /// meaningless next to a logarithmic pole).
    pub singular_exclusion_cells: f64,
    /// Allowed negative aggregate mass over each exclusion disc.
    pub aggregate_mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            subharmonic_mass: 1e-6,
            boundary: 5e-3,
            positivity: 1e-6,
            singular_exclusion_cells: 12.0,
            aggregate_mass: 1e-3,
        }
    }
}

/// Structured classification failure naming the violated clause.
#[derive(Debug, Clone)]
pub enum Rejection {
    /// Negative Riesz mass off the exclusion zones (not subharmonic).
    Subharmonicity { ring: usize, col: usize, mass: f64 },
    /// Does not vanish on the outermost ring.
    BoundaryVanishing { max_abs: f64 },
    /// |v| exceeds the declared bound on the band `eps <= |z| <= r0`.
    SupBound { max_abs: f64, bound: f64 },
    /// No positivity witness disc strictly inside `D`.
    Positivity { last_bad_radius: f64 },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Subharmonicity { ring, col, mass } => write!(
                f,
                "subharmonicity fails at ring {ring}, col {col}: cell mass {mass:.3e}"
            ),
            Rejection::BoundaryVanishing { max_abs } => {
                write!(f, "boundary vanishing fails: max |v| on outer ring = {max_abs:.3e}")
            }
            Rejection::SupBound { max_abs, bound } => {
                write!(f, "bound on S0 minus S fails: sup |v| = {max_abs:.6} > b = {bound:.6}")
            }
            Rejection::Positivity { last_bad_radius } => write!(
                f,
                "no positivity witness inside D: negative values out to |z| = {last_bad_radius:.4}"
            ),
        }
    }
}

impl std::error::Error for Rejection {}

/// A classified test function: the sampled field plus class metadata.
#[derive(Debug, Clone)]
pub struct TestFunction {
    field: GridField,
    dom: PlanarDomain,
    sign_class: SignClass,
    bound: f64,
    s_v_radius: f64,
    pole_coeff: f64,
}

impl TestFunction {
    pub fn field(&self) -> &GridField {
        &self.field
    }

    pub fn domain(&self) -> &PlanarDomain {
        &self.dom
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn s_v_radius(&self) -> f64 {
        self.s_v_radius
    }

    pub fn pole_coeff(&self) -> f64 {
        self.pole_coeff
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.field.eval(p)
    }

    /// Nodewise scaling by a positive factor (class-preserving).
    pub fn scale(&self, s: f64) -> Result<TestFunction> {
        if s <= 0.0 {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(TestFunction {
            field: self.field.map(|v| v * s),
            dom: self.dom,
            sign_class: self.sign_class,
            bound: self.bound * s,
            s_v_radius: self.s_v_radius,
            pole_coeff: self.pole_coeff * s,
        })
    }
}

fn exclusion_radius(grid: &PolarGrid, p: Point, tol: &Tolerances) -> f64 {
    let local = grid.dr().max(p.abs() * grid.dtheta());
    tol.singular_exclusion_cells * local
}

fn in_exclusion(grid: &PolarGrid, singular: &[Point], q: Point, tol: &Tolerances) -> bool {
    singular
        .iter()
        .any(|s| q.dist(*s) < exclusion_radius(grid, *s, tol))
}

/// Ring-by-ring positivity scan: smallest radius beyond which every ring
/// minimum clears the tolerance. Returns `(s_v_radius, ok)` where `ok` is
/// false when negativity persists to the outermost interior rings.
fn scan_positivity(field: &GridField, tol: &Tolerances) -> (f64, bool) {
    let g = field.grid();
    let n_r = g.n_r();
    let mut first_good = 0usize;
    for i in (0..n_r).rev() {
        let mut min = f64::INFINITY;
        for j in 0..g.n_theta() {
            min = min.min(field.value(i, j));
        }
        // outermost rings carry boundary-vanishing noise
        let slack = if i >= n_r - 2 { tol.boundary } else { tol.positivity };
        if min < -slack {
            first_good = i + 1;
            break;
        }
    }
    if first_good >= n_r - 1 {
        (g.radius(), false)
    } else if first_good == 0 {
        (g.delta(), true)
    } else {
        (g.r_edge(first_good), true)
    }
}

/// Two-ring logarithmic slope at the pole-exclusion edge: the coefficient
/// `c` in `v(z) ~ -c log|z|` near the origin (0 for pole-free fields).
fn pole_coefficient(field: &GridField) -> f64 {
    let g = field.grid();
    let dl = (g.r_node(1) / g.r_node(0)).ln();
    let mut acc = 0.0;
    let mut n = 0usize;
    for j in 0..g.n_theta() {
        let a = field.value(0, j);
        let b = field.value(1, j);
        if a.is_finite() && b.is_finite() {
            acc += (a - b) / dl;
            n += 1;
        }
    }
    if n == 0 {
        return 0.0;
    }
    let c = acc / n as f64;
    if c.abs() < 1e-9 {
        0.0
    } else {
        c
    }
}

/// Verifies membership in the test-function class for `D` outside `S`
/// with sup bound `b` on the band, and assembles the class metadata.
pub fn classify(
    field: GridField,
    dom: PlanarDomain,
    b: f64,
) -> std::result::Result<TestFunction, Rejection> {
    classify_with(field, dom, b, &Tolerances::default())
}

pub fn classify_with(
    field: GridField,
    dom: PlanarDomain,
    b: f64,
    tol: &Tolerances,
) -> std::result::Result<TestFunction, Rejection> {
    let g = *field.grid();
    let n_r = g.n_r();
    let n_t = g.n_theta();

    // Singular set: declared points plus any -inf sentinel nodes.
    let mut singular: Vec<Point> = field.singular_points().to_vec();
    for i in 0..n_r {
        for j in 0..n_t {
            if field.value(i, j) == f64::NEG_INFINITY {
                let p = g.node_point(i, j);
                if !singular.iter().any(|s| s.dist(p) < 1e-9) {
                    singular.push(p);
                }
            }
        }
    }

    // (boundary vanishing)
    let mut max_bd = 0.0f64;
    for j in 0..n_t {
        max_bd = max_bd.max(field.value(n_r - 1, j).abs());
    }
    if !(max_bd <= tol.boundary) {
        return Err(Rejection::BoundaryVanishing { max_abs: max_bd });
    }

    // (subharmonicity off S, up to exclusion discs around poles)
    let masses = field.riesz_cell_masses();
    let mut excluded_aggregate = 0.0f64;
    for i in 1..n_r - 1 {
        let r = g.r_node(i);
        if r <= dom.eps() {
            continue;
        }
        for j in 0..n_t {
            let m = masses[g.index(i, j)];
            let p = g.node_point(i, j);
            let excl = in_exclusion(&g, &singular, p, tol);
            if excl {
                if m.is_finite() {
                    excluded_aggregate += m;
                }
                continue;
            }
            if !m.is_finite() || m < -tol.subharmonic_mass {
                return Err(Rejection::Subharmonicity { ring: i, col: j, mass: m });
            }
        }
    }
    if excluded_aggregate < -tol.aggregate_mass {
        return Err(Rejection::Subharmonicity { ring: 0, col: 0, mass: excluded_aggregate });
    }

    // (sup bound on the band, exclusion discs exempt)
    let mut max_band = 0.0f64;
    for i in 0..n_r {
        let r = g.r_node(i);
        if r < dom.eps() || r > dom.r0() {
            continue;
        }
        for j in 0..n_t {
            let v = field.value(i, j);
            if !v.is_finite() || v.abs() > b {
                let p = g.node_point(i, j);
                if in_exclusion(&g, &singular, p, tol) {
                    continue;
                }
            }
            max_band = max_band.max(v.abs());
        }
    }
    if !(max_band <= b + 1e-9) {
        return Err(Rejection::SupBound { max_abs: max_band, bound: b });
    }

    // (positivity witness)
    let (s_v_radius, ok) = scan_positivity(&field, tol);
    if !ok {
        return Err(Rejection::Positivity { last_bad_radius: s_v_radius });
    }
    let sign_class = if s_v_radius <= dom.eps() + 1e-12 {
        SignClass::Positive
    } else {
        SignClass::Real
    };

    let pole_coeff = pole_coefficient(&field).max(0.0);

    Ok(TestFunction {
        field,
        dom,
        sign_class,
        bound: b,
        s_v_radius,
        pole_coeff,
    })
}

/// Sup of |v| over the band `eps <= |z| <= r0`, exclusion discs exempt.
fn band_sup(field: &GridField, dom: &PlanarDomain, tol: &Tolerances) -> f64 {
    let g = field.grid();
    let singular = field.singular_points();
    let mut b = 0.0f64;
    for i in 0..g.n_r() {
        let r = g.r_node(i);
        if r < dom.eps() || r > dom.r0() {
            continue;
        }
        for j in 0..g.n_theta() {
            let v = field.value(i, j);
            if v.is_finite() && !in_exclusion(g, singular, g.node_point(i, j), tol) {
                b = b.max(v.abs());
            }
        }
    }
    b
}

/// Builds a test function from a field by measuring its own band sup and
/// classifying against it.
fn finish(field: GridField, dom: PlanarDomain, tol: &Tolerances) -> Result<TestFunction> {
    let b = band_sup(&field, &dom, tol);
    classify_with(field, dom, b, tol).map_err(|r| Error::Numerical(r.to_string()))
}

/// The max-gluing: extends `v` across `S` by a scaled Green function so
/// the result is subharmonic on the whole punctured disc with logarithmic
/// pole coefficient `c = (2b + 2) / inf g_U` at the origin.
///
/// `U` is the disc `|z| < rho_U`; the matching annulus is
/// `rho_U - w < |z| < rho_U + w`. Regions:
/// outside `U` the function is `v`; on the inner sub-annulus of `U` it is
/// `max(v, c g_U - b - 1)`; on the core it is `c g_U - b - 1`.
pub fn glue(v: &TestFunction, dom: PlanarDomain, rho_u: f64, w: f64) -> Result<TestFunction> {
    if w <= 0.0 {
        return Err(Error::invalid("gluing annulus half-width w > 0 violated"));
    }
    if !(dom.eps() < rho_u - w) {
        return Err(Error::invalid("eps < rho_U - w violated"));
    }
    if !(rho_u + w < dom.r0()) {
        return Err(Error::invalid("rho_U + w < r0 violated"));
    }
    let inf_g = inf_green_on_circle(rho_u, rho_u - w)?;
    if inf_g <= 0.0 {
        return Err(Error::Numerical("c undefined: inf g_U <= 0 on the matching circle".into()));
    }
    let b = v.bound;
    let c = (2.0 * b + 2.0) / inf_g;

    let g = *v.field.grid();
    let mut values = vec![0.0; g.node_count()];
    for i in 0..g.n_r() {
        let r = g.r_node(i);
        for j in 0..g.n_theta() {
            let vv = v.field.value(i, j);
            let k = g.index(i, j);
            values[k] = if r >= rho_u {
                vv
            } else {
                let core = c * green_disc_radial(rho_u, r) - b - 1.0;
                if r > rho_u - w {
                    vv.max(core)
                } else {
                    core
                }
            };
        }
    }
    // singular points of v inside U are overwritten by the Green core
    let singular: Vec<Point> = v
        .field
        .singular_points()
        .iter()
        .copied()
        .filter(|p| p.abs() >= rho_u)
        .collect();
    let field = GridField::from_values(g, values)?.with_singular_points(singular);

    let tol = Tolerances::default();
    let (s_v_radius, ok) = scan_positivity(&field, &tol);
    if !ok {
        return Err(Error::Numerical("glued function has no positivity witness".into()));
    }
    let sign_class = if s_v_radius <= dom.eps() + 1e-12 {
        SignClass::Positive
    } else {
        SignClass::Real
    };
    // The Green core rises above b + 1 where U overlaps the band, so the
    // declared bound is the measured band sup of the glued field.
    let bound = band_sup(&field, &dom, &tol).max(b + 1.0);
    Ok(TestFunction {
        field,
        dom,
        sign_class,
        bound,
        s_v_radius,
        pole_coeff: c,
    })
}

/// Normalization by the pole coefficient: the result has coefficient 1.
pub fn normalize_pole(vt: &TestFunction) -> Result<TestFunction> {
    let c = vt.pole_coeff;
    if c <= 0.0 {
        return Err(Error::invalid("pole coefficient c = 0: nothing to normalize"));
    }
    let field = vt.field.map(|v| v / c);
    let g = field.grid();
    let tol = Tolerances::default();
    for j in 0..g.n_theta() {
        if field.value(g.n_r() - 1, j).abs() > tol.boundary {
            return Err(Error::Numerical(
                "normalized potential does not vanish on the boundary ring".into(),
            ));
        }
    }
    Ok(TestFunction {
        field,
        dom: vt.dom,
        sign_class: vt.sign_class,
        bound: vt.bound / c,
        s_v_radius: vt.s_v_radius,
        pole_coeff: 1.0,
    })
}

/// Sublevel truncation: on the open set `{V < epsilon}`, connected
/// components touching the outermost ring are set to zero; everywhere
/// else the value drops by `epsilon`. Input must be pole-normalized.
pub fn epsilon_truncate(vt: &TestFunction, epsilon: f64) -> Result<TestFunction> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon > 0 violated"));
    }
    if (vt.pole_coeff - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("epsilon_truncate requires a pole-normalized input"));
    }
    let g = *vt.field.grid();
    let n_r = g.n_r();
    let n_t = g.n_theta();

    let in_sublevel = |i: usize, j: usize| vt.field.value(i, j) < epsilon;

    // connected components of the sublevel set, 4-adjacency with angular
    // wraparound; mark those touching the outermost ring
    let mut comp = vec![u32::MAX; g.node_count()];
    let mut touches = Vec::new();
    let mut n_comp = 0u32;
    let mut queue = VecDeque::new();
    for i in 0..n_r {
        for j in 0..n_t {
            if !in_sublevel(i, j) || comp[g.index(i, j)] != u32::MAX {
                continue;
            }
            let id = n_comp;
            n_comp += 1;
            touches.push(false);
            comp[g.index(i, j)] = id;
            queue.push_back((i, j));
            while let Some((ci, cj)) = queue.pop_front() {
                if ci == n_r - 1 {
                    touches[id as usize] = true;
                }
                let nbs = [
                    (ci.wrapping_sub(1), cj),
                    (ci + 1, cj),
                    (ci, (cj + 1) % n_t),
                    (ci, (cj + n_t - 1) % n_t),
                ];
                for (ni, nj) in nbs {
                    if ni >= n_r {
                        continue;
                    }
                    let nk = g.index(ni, nj);
                    if in_sublevel(ni, nj) && comp[nk] == u32::MAX {
                        comp[nk] = id;
                        queue.push_back((ni, nj));
                    }
                }
            }
        }
    }

    let mut values = vec![0.0; g.node_count()];
    for i in 0..n_r {
        let r = g.r_node(i);
        for j in 0..n_t {
            let k = g.index(i, j);
            let id = comp[k];
            let zeroed = id != u32::MAX && touches[id as usize];
            if zeroed {
                if r <= vt.dom.eps() {
                    return Err(Error::invalid(
                        "epsilon exceeds admissible range: zeroed region reaches S",
                    ));
                }
                if vt.field.value(i, j) < -Tolerances::default().positivity {
                    return Err(Error::invalid(
                        "epsilon exceeds admissible range: zeroed region meets negative values",
                    ));
                }
                values[k] = 0.0;
            } else {
                values[k] = vt.field.value(i, j) - epsilon;
            }
        }
    }
    let field = GridField::from_values(g, values)?
        .with_singular_points(vt.field.singular_points().to_vec());
    let tol = Tolerances::default();
    let (s_v_radius, ok) = scan_positivity(&field, &tol);
    if !ok {
        return Err(Error::Numerical("truncated function has no positivity witness".into()));
    }
    let sign_class = if s_v_radius <= vt.dom.eps() + 1e-12 {
        SignClass::Positive
    } else {
        SignClass::Real
    };
    Ok(TestFunction {
        field,
        dom: vt.dom,
        sign_class,
        bound: vt.bound + epsilon,
        s_v_radius,
        pole_coeff: 1.0,
    })
}

/// Closed form of the Lyons potential of normalized area measure on the
/// unit disc: `(|z|^2 - 1)/2 - log|z|` inside, 0 outside.
pub fn lyons_lambda_value(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (r * r - 1.0) / 2.0 - r.ln()
    }
}

/// Radial closed form of the Lyons potential in complex dimension `n`
/// (`kernel.dim()`), for normalized Lebesgue measure of the unit ball.
pub fn lyons_lambda_radial(kernel: Kernel, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::invalid("radius s > 0 violated"));
    }
    let n = kernel.dim();
    if n == 1 {
        return Ok(lyons_lambda_value(s));
    }
    if s >= 1.0 {
        return Ok(0.0);
    }
    let nn = n as f64;
    // uniform-ball potential minus the kernel of the unit point mass
    Ok(-(s * s) - nn * (1.0 - s * s) + s.powi(2 - 2 * n as i32))
}

/// The positive Lyons test function `V_lambda` on the unit disc, from the
/// closed form.
pub fn lyons_lambda(dom: PlanarDomain, grid: PolarGrid) -> Result<TestFunction> {
    let field = GridField::from_fn(grid, |p| lyons_lambda_value(p.abs()));
    finish(field, dom, &Tolerances::default())
}

/// The sign-changing modification `V_{mu_{z,r}}`: the Lyons potential of
/// normalized area measure with the mass of `B(z, r)` swept into an atom
/// at `z`. Closed form; `-inf` at `z` itself (the node of the containing
/// cell carries the sentinel).
pub fn lyons_modified(z: Point, r: f64, dom: PlanarDomain, grid: PolarGrid) -> Result<TestFunction> {
    let zr = z.abs();
    if zr == 0.0 {
        return Err(Error::invalid("z != 0 violated"));
    }
    if !(r > 0.0 && r < 1.0 - zr) {
        return Err(Error::invalid("B(z, r) escapes the unit ball: need 0 < r < 1 - |z|"));
    }
    let mut field = GridField::from_fn(grid, |p| {
        let base = lyons_lambda_value(p.abs());
        let d = p.dist(z);
        if d >= r {
            base
        } else if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            // swap the ball's smeared potential for the atom's
            base + r * r * d.ln() - (r * r * r.ln() + (d * d - r * r) / 2.0)
        }
    });
    // sentinel at the node of the cell containing the atom
    let zi = grid.band_of(zr);
    let mut zth = z.arg();
    if zth < 0.0 {
        zth += 2.0 * PI;
    }
    let zj = ((zth / grid.dtheta()).floor() as usize).min(grid.n_theta() - 1);
    let mut values = field.values().to_vec();
    values[grid.index(zi, zj)] = f64::NEG_INFINITY;
    field = GridField::from_values(grid, values)?.with_singular_points(vec![z]);
    finish(field, dom, &Tolerances::default())
}

/// Kernel value of a uniform cell of the given area against a point at
/// distance `d` from its center: plain `log d` outside the equal-area
/// disc, its interior potential inside (keeps near-diagonal quadrature
/// finite and second-order accurate).
fn log_kernel_cell(d: f64, cell_area: f64) -> f64 {
    let r_eq = (cell_area / PI).sqrt();
    if d >= r_eq {
        d.ln()
    } else {
        r_eq.ln() + (d * d - r_eq * r_eq) / (2.0 * r_eq * r_eq)
    }
}

/// Generic Lyons potential `V_mu(z) = int h(|z - z'|) d mu(z') - h(|z|)`
/// by direct quadrature against the measure, sampled on the grid.
/// Complex dimension 1 only (higher dimensions are radial-only, see
/// [`lyons_lambda_radial`]).
pub fn lyons_potential(
    mu: &WeightedMeasure,
    kernel: Kernel,
    dom: PlanarDomain,
    grid: PolarGrid,
) -> Result<TestFunction> {
    if kernel.dim() != 1 {
        return Err(Error::invalid(
            "grid-sampled Lyons potentials are n = 1 only; use lyons_lambda_radial for n > 1",
        ));
    }
    let mut values: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let i = k / grid.n_theta();
            let j = k % grid.n_theta();
            let p = grid.node_point(i, j);
            lyons_potential_value(mu, p)
        })
        .collect();
    // atoms force a sentinel at their containing node
    let mut singular = Vec::new();
    for (a, m) in mu.atoms() {
        if *m == 0.0 {
            continue;
        }
        singular.push(*a);
        let ai = grid.band_of(a.abs());
        let mut ath = a.arg();
        if ath < 0.0 {
            ath += 2.0 * PI;
        }
        let aj = ((ath / grid.dtheta()).floor() as usize).min(grid.n_theta() - 1);
        values[grid.index(ai, aj)] = f64::NEG_INFINITY;
    }
    let field = GridField::from_values(grid, values)?.with_singular_points(singular);
    finish(field, dom, &Tolerances::default())
}

/// Pointwise quadrature of the Lyons potential at an arbitrary point
/// (n = 1). Used as the independent oracle for the closed forms.
pub fn lyons_potential_value(mu: &WeightedMeasure, p: Point) -> f64 {
    let r = p.abs();
    if r == 0.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for (a, m) in mu.atoms() {
        let d = p.dist(*a);
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += m * d.ln();
    }
    if let Some(dens) = mu.density() {
        let g = dens.grid();
        for i in 0..g.n_r() {
            let area = g.cell_area(i);
            for j in 0..g.n_theta() {
                let w = dens.value(i, j);
                if w != 0.0 {
                    acc += w * area * log_kernel_cell(p.dist(g.node_point(i, j)), area);
                }
            }
        }
    }
    acc - r.ln()
}
