//! Named example systems and their standard check suites, shared by the
//! command line and the C interface: resolving a target string to a loaded
//! system, running the identity suite for its formulation, and wiring up
//! ladder Hamiltonian flows.

use std::path::Path;

use crate::algebroid::LieAlgebroid;
use crate::config;
use crate::error::{Error, Result};
use crate::exterior::{EndomorphismField, Multivector};
use crate::flows::FlowField;
use crate::hierarchy;
use crate::modular;
use crate::nijenhuis;
use crate::poisson;
use crate::report::{CheckResult, Report, ResidualScan};
use crate::sample::sample_points;
use crate::scalar::ScalarField;
use crate::toda::{self, Formulation};

/// A loaded system: one of the built-in chain formulations, or a system
/// assembled from a JSON config.
pub enum System {
    Physical(Box<toda::TodaPhysical>),
    Extended(Box<toda::TodaExtended>),
    Reduced(Box<toda::TodaReduced>),
    Algebroid(Box<toda::TodaAlgebroid>),
    Custom(Box<config::System>),
}

impl System {
    /// Resolves a built-in example name (`toda-physical[-n]` and friends),
    /// or treats the target as a JSON config path.
    pub fn load(target: &str) -> Result<System> {
        if let Some((f, sites)) = toda::parse_example(target) {
            return Ok(match f {
                Formulation::Physical => {
                    System::Physical(Box::new(toda::toda_physical(sites)?))
                }
                Formulation::Extended => {
                    System::Extended(Box::new(toda::toda_extended(sites)?))
                }
                Formulation::Flaschka => {
                    System::Reduced(Box::new(toda::toda_reduced(sites)?))
                }
                Formulation::Algebroid => {
                    System::Algebroid(Box::new(toda::toda_algebroid(sites)?))
                }
            });
        }
        let path = Path::new(target);
        if target.ends_with(".json") || path.exists() {
            return Ok(System::Custom(Box::new(config::load_config(path)?)));
        }
        Err(Error::UnknownSystem(format!(
            "`{target}` is neither a built-in example (toda-physical[-n], \
             toda-extended[-n], toda-flaschka[-n], toda-algebroid[-n]) nor \
             an existing JSON config path"
        )))
    }

    pub fn algebroid(&self) -> &LieAlgebroid {
        match self {
            System::Physical(s) => &s.algebroid,
            System::Extended(s) => &s.algebroid,
            System::Reduced(s) => &s.algebroid,
            System::Algebroid(s) => &s.algebroid,
            System::Custom(s) => &s.algebroid,
        }
    }

    pub fn name(&self) -> &str {
        self.algebroid().name()
    }

    /// The bivector and recursion operator driving the hierarchy, for
    /// systems that carry both.
    pub fn recursion_data(&self) -> Result<(&Multivector, &EndomorphismField)> {
        match self {
            System::Physical(s) => Ok((&s.pi0, &s.n)),
            System::Extended(s) => Ok((&s.pi0, &s.n)),
            System::Algebroid(s) => Ok((&s.pi0, &s.n)),
            System::Reduced(_) => Err(Error::Invalid(
                "the reduced chart carries no recursion operator; use \
                 toda-algebroid-<n> for the hierarchy over these coordinates"
                    .into(),
            )),
            System::Custom(s) => {
                let pi = s.pi.as_ref().ok_or_else(|| {
                    Error::Config("the config declares no bivector (`pi`)".into())
                })?;
                let n = s.n.as_ref().ok_or_else(|| {
                    Error::Config("the config declares no endomorphism (`N`)".into())
                })?;
                Ok((pi, n))
            }
        }
    }

    /// Runs the identity suite for this system's formulation: each check
    /// scans seeded sample points and passes when its worst residual stays
    /// within `tol`.
    pub fn standard_report(&self, points: usize, tol: f64, seed: u64) -> Result<Report> {
        let mut report = Report::new(self.name());
        let pts = sample_points(self.algebroid().domain(), points, seed);
        match self {
            System::Physical(sys) => {
                // det N vanishes on a momentum variety (for odd chains it
                // runs through the phase-space origin), so checks that
                // invert N sample with momenta bounded away from it.
                let mut inv_box = vec![(-0.3, 0.3); sys.sites];
                inv_box.extend(vec![(0.15, 0.3); sys.sites]);
                let inv_pts = sample_points(&inv_box, points, seed);
                report.extend(sys.algebroid.validate_axioms(&pts, tol, seed)?);
                report.push(nijenhuis::torsion_check(
                    &sys.algebroid, &sys.n, &pts, tol, seed,
                )?);
                for (tag, pi) in [("pi0", &sys.pi0), ("pi1", &sys.pi1)] {
                    for c in poisson::is_poisson_checks(&sys.algebroid, pi, &pts, tol, seed)? {
                        report.push(tagged(c, tag));
                    }
                }
                report.extend(hierarchy::pairwise_compatibility(
                    &sys.algebroid, &sys.pi0, &sys.n, 2, &pts, tol, seed,
                )?);
                report.extend(poisson::compatibility_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, &pts, tol, seed,
                )?);
                report.push(modular::deformation_check(
                    &sys.algebroid, &sys.n, &pts, tol, seed,
                )?);
                report.extend(nijenhuis::trace_identity_checks(
                    &sys.algebroid, &sys.n, 5, &inv_pts, tol, seed,
                )?);
                report.extend(hierarchy::cross_relation_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, (-1, 3), (-1, 4), &inv_pts, tol, seed,
                )?);
                report.push(hierarchy::recursion_step_check(
                    &sys.algebroid, &sys.pi0, &sys.n, (0, 3), &inv_pts, tol, seed,
                )?);
                report.push(toda::bihamiltonian_check(sys, &pts, tol, seed)?);
                for j in [0, 1] {
                    report.push(toda::toda_multi_check(sys, j, 0.5, &inv_pts, tol, seed)?);
                }
            }
            System::Extended(sys) => {
                report.extend(sys.algebroid.validate_axioms(&pts, tol, seed)?);
                for (tag, pi) in [("pi0", &sys.pi0), ("pi1", &sys.pi1)] {
                    for c in poisson::is_poisson_checks(&sys.algebroid, pi, &pts, tol, seed)? {
                        report.push(tagged(c, tag));
                    }
                }
                report.push(nijenhuis::torsion_check(
                    &sys.algebroid, &sys.n, &pts, tol, seed,
                )?);
                report.extend(poisson::compatibility_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, &pts, tol, seed,
                )?);
                report.extend(toda::involution_checks(sys, &pts, tol, seed)?);
            }
            System::Reduced(sys) => {
                report.extend(sys.algebroid.validate_axioms(&pts, tol, seed)?);
                for (tag, pi) in [("pi0", &sys.pi0), ("pi1", &sys.pi1)] {
                    for c in poisson::is_poisson_checks(&sys.algebroid, pi, &pts, tol, seed)? {
                        report.push(tagged(c, tag));
                    }
                }
                let bracket = sys.algebroid.schouten(&sys.pi0, &sys.pi1)?;
                report.push(residual_check("pencil-0:1", &bracket, &pts, tol, seed));
            }
            System::Algebroid(sys) => {
                report.extend(sys.algebroid.validate_axioms(&pts, tol, seed)?);
                for (tag, pi) in [("pi0", &sys.pi0), ("pi1", &sys.pi1)] {
                    for c in poisson::is_poisson_checks(&sys.algebroid, pi, &pts, tol, seed)? {
                        report.push(tagged(c, tag));
                    }
                }
                report.push(nijenhuis::torsion_check(
                    &sys.algebroid, &sys.n, &pts, tol, seed,
                )?);
                report.extend(poisson::compatibility_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, &pts, tol, seed,
                )?);
                report.extend(hierarchy::pairwise_compatibility(
                    &sys.algebroid, &sys.pi0, &sys.n, 2, &pts, tol, seed,
                )?);
                // The reduced tensors are the targets the covered
                // structures must reproduce.
                let red = toda::toda_reduced(sys.sites)?;
                for (tag, pi, target) in [
                    ("covered-pi0", &sys.pi0, &red.pi0),
                    ("covered-pi1", &sys.pi1, &red.pi1),
                ] {
                    let (_, w) = poisson::covered_bivector(&sys.algebroid, pi, "covered-base")?;
                    let diff = w.sub(target)?;
                    report.push(residual_check(tag, &diff, &pts, tol, seed));
                }
                // Positive indices keep the checks clear of det N, which
                // may vanish inside the wide sample box.
                report.extend(hierarchy::cross_relation_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, (1, 3), (2, 4), &pts, tol, seed,
                )?);
                report.extend(hierarchy::covered_cross_checks(
                    &sys.algebroid, &sys.pi0, &sys.n, (1, 3), (2, 4), &pts, tol, seed,
                )?);
            }
            System::Custom(sys) => {
                report.extend(sys.algebroid.validate_axioms(&pts, tol, seed)?);
                if let Some(pi) = &sys.pi {
                    report.extend(poisson::is_poisson_checks(
                        &sys.algebroid, pi, &pts, tol, seed,
                    )?);
                }
                if let Some(n) = &sys.n {
                    report.push(nijenhuis::torsion_check(&sys.algebroid, n, &pts, tol, seed)?);
                    report.push(modular::deformation_check(
                        &sys.algebroid, n, &pts, tol, seed,
                    )?);
                    report.extend(nijenhuis::trace_identity_checks(
                        &sys.algebroid, n, 3, &pts, tol, seed,
                    )?);
                }
                if let (Some(pi), Some(n)) = (&sys.pi, &sys.n) {
                    report.extend(poisson::compatibility_checks(
                        &sys.algebroid, pi, n, &pts, tol, seed,
                    )?);
                    report.extend(hierarchy::pairwise_compatibility(
                        &sys.algebroid, pi, n, 1, &pts, tol, seed,
                    )?);
                    report.extend(hierarchy::cross_relation_checks(
                        &sys.algebroid, pi, n, (1, 2), (2, 3), &pts, tol, seed,
                    )?);
                }
            }
        }
        Ok(report)
    }

    /// Builds the flow of the ladder Hamiltonian `h_index` along the
    /// deformed bracket `N^k pi0`. The reduced chart offers brackets 0 and
    /// 1 with the chain trace Hamiltonians; the fibered chart pushes its
    /// bracket down to the covered base before integrating. Also returns
    /// the conserved ladder for drift reports and a default start point.
    pub fn ladder_flow(&self, index: i64, bracket: i64) -> Result<LadderFlow> {
        match self {
            System::Reduced(sys) => {
                if index < 0 {
                    return Err(Error::Config(format!(
                        "the reduced ladder starts at h0, got h{index}"
                    )));
                }
                let pi = match bracket {
                    0 => &sys.pi0,
                    1 => &sys.pi1,
                    other => {
                        return Err(Error::Config(format!(
                            "the reduced chart has brackets 0 and 1 only, got {other}"
                        )))
                    }
                };
                let hams = toda::lax_hamiltonians(sys.sites, index.max(3) as usize)?;
                let h = hams[index as usize].1.clone();
                let conserved = hams.into_iter().filter(|(name, _)| name != "h0").collect();
                Ok(LadderFlow {
                    field: FlowField::hamiltonian(&sys.algebroid, pi, &h)?,
                    conserved,
                    coords: sys.algebroid.coords().to_vec(),
                    start: midpoint(sys.algebroid.domain()),
                })
            }
            System::Algebroid(sys) => {
                let (h, conserved) = trace_ladder(&sys.n, index);
                let pi_k = poisson::deformed_bivector(&sys.pi0, &sys.n, bracket)?;
                let (base, w) = poisson::covered_bivector(&sys.algebroid, &pi_k, "covered-base")?;
                Ok(LadderFlow {
                    field: FlowField::hamiltonian(&base, &w, &h)?,
                    conserved,
                    coords: base.coords().to_vec(),
                    start: midpoint(base.domain()),
                })
            }
            _ => {
                let (pi, n) = self.recursion_data()?;
                let (h, conserved) = trace_ladder(n, index);
                let pi_k = poisson::deformed_bivector(pi, n, bracket)?;
                let a = self.algebroid();
                Ok(LadderFlow {
                    field: FlowField::hamiltonian(a, &pi_k, &h)?,
                    conserved,
                    coords: a.coords().to_vec(),
                    start: midpoint(a.domain()),
                })
            }
        }
    }
}

/// A ready-to-integrate Hamiltonian flow with its conserved ladder.
pub struct LadderFlow {
    pub field: FlowField,
    pub conserved: Vec<(String, ScalarField)>,
    pub coords: Vec<String>,
    pub start: Vec<f64>,
}

fn tagged(mut check: CheckResult, tag: &str) -> CheckResult {
    check.name = format!("{}-{tag}", check.name);
    check
}

fn residual_check(
    name: &str,
    diff: &Multivector,
    pts: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> CheckResult {
    let mut scan = ResidualScan::new();
    for pt in pts {
        scan.observe(diff.max_abs_at(pt));
    }
    scan.into_check(name, tol, pts.len(), seed)
}

fn midpoint(domain: &[(f64, f64)]) -> Vec<f64> {
    domain.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
}

/// The trace Hamiltonian `h_index` together with the ladder h1..h3 (plus
/// `h_index` itself when outside that window) for drift reporting.
fn trace_ladder(n: &EndomorphismField, index: i64) -> (ScalarField, Vec<(String, ScalarField)>) {
    let hams = hierarchy::hamiltonians(n, index.min(1), index.max(3));
    let h = hams[&index].clone();
    let conserved = hams
        .iter()
        .filter(|&(i, _)| (1..=3).contains(i) || *i == index)
        .map(|(i, f)| (format!("h{i}"), f.clone()))
        .collect();
    (h, conserved)
}
