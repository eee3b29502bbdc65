//! Scenario-driven runner: builds domain, subject and family from a flat
//! sectioned config, runs the selected audit, and writes CSV artifacts.
//!
//! Config format: `[section]` headers, `key = value` lines, `#` comments.
//! Sections: `[domain]`, `[grid]`, `[subject]`, `[family]`, `[audit]`,
//! `[output]`. Floats in all CSVs carry 17 significant digits so reruns
//! are byte-identical.

use crate::audit::{
    arens_singer_duality_check, audit_inequality, criterion_audit, generate_family,
    majorant_duality_check, monotone_limit_check, AuditReport,
};
use crate::error::{Error, Result};
use crate::geometry::{GridField, PlanarDomain, PolarGrid};
use crate::holo::{blaschke, log_modulus, with_growth, HoloFunction, ZeroSet};
use crate::kernels::green_disc_radial;
use crate::measures::Majorant;
use crate::testfn::{classify, epsilon_truncate, Rejection, SignClass, TestFunction};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit statuses of the runner, per the documented contract.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_AUDIT_FAIL: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

fn fmt_float(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Parsed scenario config: section -> key -> value.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    base_dir: PathBuf,
}

impl Scenario {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "scenario line {}: expected 'key = value' or '[section]'",
                    ln + 1
                )));
            };
            if current.is_empty() {
                return Err(Error::Config(format!(
                    "scenario line {}: key before any [section]",
                    ln + 1
                )));
            }
            sections
                .get_mut(&current)
                .unwrap()
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Scenario {
            sections,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))),
        }
    }

    fn f64_req(&self, section: &str, key: &str) -> Result<f64> {
        self.require(section, key)?
            .parse()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))),
        }
    }

    pub fn domain(&self) -> Result<PlanarDomain> {
        PlanarDomain::new(
            self.f64_req("domain", "R")?,
            self.f64_req("domain", "eps")?,
            self.f64_req("domain", "r0")?,
        )
    }

    pub fn grid(&self, dom: &PlanarDomain) -> Result<PolarGrid> {
        let n_r = self.usize_or("grid", "n_r", 256)?;
        let n_theta = self.usize_or("grid", "n_theta", 512)?;
        let delta = self.f64_or("grid", "delta", dom.default_delta())?;
        let g = PolarGrid::new(n_r, n_theta, delta, dom.radius())?;
        if g.delta() >= dom.eps() {
            return Err(Error::Config("delta < eps violated".into()));
        }
        Ok(g)
    }

    pub fn subject(&self, dom: &PlanarDomain) -> Result<HoloFunction> {
        let zeros = match self.get("subject", "zeros") {
            Some(rel) => {
                let path = self.base_dir.join(rel);
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "zeros file does not exist: {}",
                        path.display()
                    )));
                }
                ZeroSet::from_file(&path)?
            }
            None => ZeroSet::empty(),
        };
        match self.get("subject", "type").unwrap_or("blaschke") {
            "blaschke" => blaschke(zeros, dom.radius()),
            "growth" => {
                let alpha = self.f64_or("subject", "alpha", 1.0)?;
                with_growth(zeros, alpha, dom.radius())
            }
            other => Err(Error::Config(format!("unknown subject type '{other}'"))),
        }
    }
}

/// Outcome of a scenario run: exit status plus the written artifacts.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit: i32,
    pub summary_lines: Vec<String>,
}

/// Normalized reference potential `log(R/|z|)` used by the duality and
/// monotone audits as the truncation source.
fn reference_potential(dom: &PlanarDomain, grid: PolarGrid, b: f64) -> Result<TestFunction> {
    let field = GridField::from_fn(grid, |p| green_disc_radial(dom.radius(), p.abs()));
    classify(field, *dom, b).map_err(|r| Error::Numerical(r.to_string()))
}

/// Runs a scenario file end to end. Returns the exit status; all numeric
/// or config errors surface as `Err` (exit 1 at the binary boundary).
pub fn run(scenario_path: &Path) -> Result<RunOutcome> {
    let sc = Scenario::load(scenario_path)?;
    let dom = sc.domain()?;
    let grid = sc.grid(&dom)?;
    let f = sc.subject(&dom)?;
    let b = sc.f64_or("family", "b", 4.0f64.ln())?;
    let size = sc.usize_or("family", "size", 8)?;
    let seed = sc
        .usize_or("family", "seed", 1)
        .map(|s| s as u64)?;
    let tol = sc.f64_or("audit", "tolerance", 0.02)?;
    let fault = sc.get("audit", "fault_inject") == Some("true");
    let kind = sc.get("audit", "kind").unwrap_or("inequality");

    let out_dir = sc
        .get("output", "dir")
        .map(|d| sc.base_dir.join(d))
        .unwrap_or_else(|| sc.base_dir.clone());
    std::fs::create_dir_all(&out_dir)?;

    let mut summary_lines = Vec::new();
    let mut pass = true;

    let mut report_csv = String::from("id,constructor,b,lhs,rhs_integral,slack\n");
    let mut profiles_csv = String::from("id,constructor,r,mean_value\n");

    let write_profiles = |members: &[(String, TestFunction)], profiles: &mut String| {
        for (id, (name, v)) in members.iter().enumerate() {
            let g = v.field().grid();
            for i in 0..g.n_r() {
                let mut acc = 0.0;
                let mut n = 0usize;
                for j in 0..g.n_theta() {
                    let x = v.field().value(i, j);
                    if x.is_finite() {
                        acc += x;
                        n += 1;
                    }
                }
                let mean = if n > 0 { acc / n as f64 } else { f64::NEG_INFINITY };
                let _ = writeln!(
                    profiles,
                    "{id},{name},{},{}",
                    fmt_float(g.r_node(i)),
                    fmt_float(mean)
                );
            }
        }
    };

    let fill_report = |rep: &AuditReport, names: &[String], report: &mut String| {
        for row in &rep.rows {
            let name = names.get(row.id).cloned().unwrap_or_else(|| row.constructor.clone());
            let _ = writeln!(
                report,
                "{},{},{},{},{},{}",
                row.id,
                name,
                fmt_float(row.bound),
                fmt_float(row.lhs),
                fmt_float(row.rhs_integral),
                fmt_float(row.slack)
            );
        }
    };

    match kind {
        "inequality" => {
            let family = generate_family(&dom, grid, b, size, seed)?;
            let members: Vec<TestFunction> = family.iter().map(|(_, v)| v.clone()).collect();
            let names: Vec<String> = family.iter().map(|(n, _)| n.clone()).collect();
            let rep = audit_inequality(&f, &members, &dom, b)?;
            fill_report(&rep, &names, &mut report_csv);
            write_profiles(&family, &mut profiles_csv);
            pass = rep.pass && rep.warnings.is_empty();
            summary_lines.push(format!("C,{}", fmt_float(rep.c)));
            summary_lines.push(format!("K,{}", fmt_float(rep.k)));
            summary_lines.push(format!("C_required,{}", fmt_float(rep.c_required)));
            summary_lines.push(format!("log_f_z0,{}", fmt_float(rep.log_f_z0)));
        }
        "criterion" => {
            let m = f.exp_majorant().clone();
            let rep = criterion_audit(f.zeros(), &m, &dom, grid, b, size, seed)?;
            let names: Vec<String> = rep.rows.iter().map(|r| r.constructor.clone()).collect();
            fill_report(&rep, &names, &mut report_csv);
            let family = generate_family(&dom, grid, b, size, seed)?;
            write_profiles(&family, &mut profiles_csv);
            pass = rep.pass;
            summary_lines.push(format!("sup_gap,{}", fmt_float(rep.k)));
            summary_lines.push(format!("C_required,{}", fmt_float(rep.c_required)));
        }
        "duality" => {
            let vt = reference_potential(&dom, grid, b)?;
            let eps_t = sc.f64_or("audit", "epsilon", 0.1)?;
            let v_eps = epsilon_truncate(&vt, eps_t)?;
            let u = log_modulus(&f, grid)?;
            let (l1, r1) = arens_singer_duality_check(&v_eps, &u, f.log_at_z0())?;
            let rel1 = rel_gap(l1, r1);
            summary_lines.push(format!("arens_singer_lhs,{}", fmt_float(l1)));
            summary_lines.push(format!("arens_singer_rhs,{}", fmt_float(r1)));
            summary_lines.push(format!("arens_singer_rel,{}", fmt_float(rel1)));
            pass &= rel1 <= tol;
            if let Majorant::Quadratic(_) = f.exp_majorant() {
                let (l2, r2) = majorant_duality_check(&v_eps, f.exp_majorant())?;
                let rel2 = rel_gap(l2, r2);
                summary_lines.push(format!("majorant_lhs,{}", fmt_float(l2)));
                summary_lines.push(format!("majorant_rhs,{}", fmt_float(r2)));
                summary_lines.push(format!("majorant_rel,{}", fmt_float(rel2)));
                pass &= rel2 <= tol;
            }
            write_profiles(
                &[("v_eps".to_string(), v_eps)],
                &mut profiles_csv,
            );
        }
        "monotone" => {
            let vt = reference_potential(&dom, grid, b)?;
            let seq: Vec<f64> = match sc.get("audit", "eps_sequence") {
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|e| Error::Config(format!("[audit] eps_sequence: {e}")))
                    })
                    .collect::<Result<_>>()?,
                None => vec![0.4, 0.2, 0.1, 0.05, 0.025],
            };
            let rep = monotone_limit_check(&vt, &f, &seq)?;
            for (e, v) in seq.iter().zip(&rep.values) {
                summary_lines.push(format!("value_at_{e},{}", fmt_float(*v)));
            }
            summary_lines.push(format!("reference,{}", fmt_float(rep.reference)));
            summary_lines.push(format!("final_within,{}", fmt_float(rep.final_within)));
            pass = rep.monotone && rep.final_within <= tol;
            write_profiles(&[("reference".to_string(), vt)], &mut profiles_csv);
        }
        other => return Err(Error::Config(format!("unknown audit kind '{other}'"))),
    }

    if fault {
        // forced failure path for exit-code testing
        pass = false;
        summary_lines.push("fault_injected,true".into());
    }
    summary_lines.push(format!("pass,{}", pass));

    let mut summary_csv = String::from("key,value\n");
    for l in &summary_lines {
        let _ = writeln!(summary_csv, "{l}");
    }
    std::fs::write(out_dir.join("report.csv"), report_csv)?;
    std::fs::write(out_dir.join("summary.csv"), summary_csv)?;
    std::fs::write(out_dir.join("profiles.csv"), profiles_csv)?;

    Ok(RunOutcome {
        exit: if pass { EXIT_PASS } else { EXIT_AUDIT_FAIL },
        summary_lines,
    })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Writes a [`GridField`] in the interchange layout: header
/// `r,theta,value`, row-major by radius, `-inf` as a literal token.
pub fn write_grid_csv(field: &GridField, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut out = String::from("r,theta,value\n");
    for i in 0..g.n_r() {
        for j in 0..g.n_theta() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_float(g.r_node(i)),
                fmt_float(g.theta_node(j)),
                fmt_float(field.value(i, j))
            );
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a grid CSV back, validating the node layout against the grid.
pub fn read_grid_csv(path: &Path, grid: PolarGrid) -> Result<GridField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "r,theta,value" => {}
        _ => return Err(Error::Config("grid CSV: missing 'r,theta,value' header".into())),
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (r, th, v) = (it.next(), it.next(), it.next());
        let (Some(r), Some(th), Some(v)) = (r, th, v) else {
            return Err(Error::Config(format!("grid CSV line {}: expected 3 fields", ln + 2)));
        };
        let parse = |s: &str, what: &str| -> Result<f64> {
            if s.trim() == "-inf" {
                return Ok(f64::NEG_INFINITY);
            }
            s.trim()
                .parse()
                .map_err(|e| Error::Config(format!("grid CSV line {}: {what}: {e}", ln + 2)))
        };
        let (rv, tv, vv) = (parse(r, "r")?, parse(th, "theta")?, parse(v, "value")?);
        let k = values.len();
        if k >= grid.node_count() {
            return Err(Error::Config("grid CSV: more rows than grid nodes".into()));
        }
        let (i, j) = (k / grid.n_theta(), k % grid.n_theta());
        if (rv - grid.r_node(i)).abs() > 1e-9 || (tv - grid.theta_node(j)).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "grid CSV line {}: node ({rv}, {tv}) does not match declared grid",
                ln + 2
            )));
        }
        values.push(vv);
    }
    if values.len() != grid.node_count() {
        return Err(Error::Config(format!(
            "grid CSV: {} rows, grid expects {}",
            values.len(),
            grid.node_count()
        )));
    }
    GridField::from_values(grid, values)
}

/// Classifies a CSV-encoded field and prints the verdict. Exit statuses:
/// 0 member (positive or real), 3 rejected; shape errors surface as `Err`.
pub fn verify_class(
    field_csv: &Path,
    dom: PlanarDomain,
    grid: PolarGrid,
    b: f64,
) -> Result<(String, i32)> {
    let field = read_grid_csv(field_csv, grid)?;
    match classify(field, dom, b) {
        Ok(tf) => {
            let verdict = match tf.sign_class() {
                SignClass::Positive => "positive".to_string(),
                SignClass::Real => "real (not positive)".to_string(),
            };
            Ok((verdict, EXIT_PASS))
        }
        Err(rej) => {
            let clause = match &rej {
                Rejection::Subharmonicity { .. } => "subharmonicity",
                Rejection::BoundaryVanishing { .. } => "boundary vanishing",
                Rejection::SupBound { .. } => "sup bound",
                Rejection::Positivity { .. } => "positivity witness",
            };
            Ok((format!("rejected ({clause}): {rej}"), EXIT_REJECTED))
        }
    }
}
