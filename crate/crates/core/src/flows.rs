//! Fixed-step fourth-order integration of coordinate vector fields, with
//! conservation bookkeeping along the trajectory and CSV export.

use std::io::Write;

use crate::algebroid::LieAlgebroid;
use crate::error::{Error, Result};
use crate::exterior::Multivector;
use crate::scalar::ScalarField;

type FieldEval = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A vector field on the coordinate box, evaluated pointwise. The closure
/// form lets Hamiltonian fields share one jet evaluation across all
/// components instead of re-deriving the Hamiltonian per component.
pub struct FlowField {
    dim: usize,
    eval: FieldEval,
}

enum Entry {
    Const(f64),
    Field(ScalarField),
}

impl Entry {
    fn lift(f: &ScalarField) -> Entry {
        match f.constant_value() {
            Some(c) => Entry::Const(c),
            None => Entry::Field(f.clone()),
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Entry::Const(c) => Ok(*c),
            Entry::Field(f) => f.value(x),
        }
    }
}

impl FlowField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::PointDimension {
                got: x.len(),
                expected: self.dim,
            });
        }
        (self.eval)(x)
    }

    pub fn from_components(comps: Vec<ScalarField>) -> FlowField {
        let dim = comps.len();
        FlowField {
            dim,
            eval: Box::new(move |x| comps.iter().map(|f| f.value(x)).collect()),
        }
    }

    /// The base flow of a fiber Hamiltonian: `rho(pi# d_A h)`. One order-1
    /// jet of `h` per point supplies the whole gradient; the anchor and
    /// bivector entries are plain values after that.
    pub fn hamiltonian(
        a: &LieAlgebroid,
        pi: &Multivector,
        h: &ScalarField,
    ) -> Result<FlowField> {
        let rank = a.rank();
        let dim = a.dim();
        let pihat: Vec<Vec<Entry>> = pi
            .bivector_matrix()?
            .iter()
            .map(|row| row.iter().map(Entry::lift).collect())
            .collect();
        let anchor: Vec<Vec<Entry>> = (0..rank)
            .map(|i| a.anchor_row(i).iter().map(Entry::lift).collect())
            .collect();
        let h = h.clone();
        Ok(FlowField {
            dim,
            eval: Box::new(move |x| {
                let jh = h.eval(x, 1)?;
                let mut unit = vec![0usize; dim];
                let mut grad = vec![0.0; dim];
                for u in 0..dim {
                    unit[u] = 1;
                    grad[u] = jh.derivative(&unit)?;
                    unit[u] = 0;
                }
                let mut rho = vec![vec![0.0; dim]; rank];
                for i in 0..rank {
                    for u in 0..dim {
                        rho[i][u] = anchor[i][u].value(x)?;
                    }
                }
                // d_A h paired with the frame, then through the bivector,
                // then back down through the anchor.
                let dh: Vec<f64> = (0..rank)
                    .map(|i| (0..dim).map(|u| rho[i][u] * grad[u]).sum())
                    .collect();
                let mut fiber = vec![0.0; rank];
                for i in 0..rank {
                    if dh[i] == 0.0 {
                        continue;
                    }
                    for j in 0..rank {
                        fiber[j] += dh[i] * pihat[i][j].value(x)?;
                    }
                }
                Ok((0..dim)
                    .map(|u| (0..rank).map(|i| fiber[i] * rho[i][u]).sum())
                    .collect())
            }),
        })
    }
}

/// Sampled integral curve; `times` and `states` always include both the
/// initial condition and the final time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least t = 0")
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step; the final step is
/// clamped so the trajectory ends exactly at `t_end`. Evaluation failures
/// carry the time at which the flow left the field's domain.
pub fn integrate(field: &FlowField, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Invalid(format!(
            "step size must be a positive number, got {dt}"
        )));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Invalid(format!(
            "integration time must be nonnegative, got {t_end}"
        )));
    }
    if x0.len() != field.dim() {
        return Err(Error::PointDimension {
            got: x0.len(),
            expected: field.dim(),
        });
    }
    let stamp = |time: f64| move |e: Error| Error::FlowAt {
        time,
        source: Box::new(e),
    };
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut step: u64 = 0;
    while t < t_end {
        step += 1;
        let grid = step as f64 * dt;
        // Snap to t_end when the grid lands there up to roundoff; otherwise
        // the remainder becomes one genuine short step.
        let t_next = if grid >= t_end - dt * 1e-9 { t_end } else { grid };
        let h = t_next - t;
        let k1 = field.value(&x).map_err(stamp(t))?;
        let at = |k: &[f64], w: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(xi, ki)| xi + w * h * ki).collect()
        };
        let k2 = field.value(&at(&k1, 0.5)).map_err(stamp(t + 0.5 * h))?;
        let k3 = field.value(&at(&k2, 0.5)).map_err(stamp(t + 0.5 * h))?;
        let k4 = field.value(&at(&k3, 1.0)).map_err(stamp(t_next))?;
        for u in 0..x.len() {
            x[u] += h / 6.0 * (k1[u] + 2.0 * k2[u] + 2.0 * k3[u] + k4[u]);
        }
        t = t_next;
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

/// Worst relative deviation of a supposed constant of motion along a
/// trajectory, normalized by `max(1, |initial|)`.
pub struct Drift {
    pub name: String,
    pub initial: f64,
    pub max_drift: f64,
}

pub fn conservation_report(
    traj: &Trajectory,
    fields: &[(String, ScalarField)],
) -> Result<Vec<Drift>> {
    fields
        .iter()
        .map(|(name, f)| {
            let initial = f.value(&traj.states[0])?;
            let scale = initial.abs().max(1.0);
            let mut worst = 0.0f64;
            for state in &traj.states {
                worst = worst.max((f.value(state)? - initial).abs());
            }
            Ok(Drift {
                name: name.clone(),
                initial,
                max_drift: worst / scale,
            })
        })
        .collect()
}

/// Writes `t,<coords>` rows. Every `stride`-th sample is kept, and the final
/// sample is always written.
pub fn write_csv<W: Write>(
    mut out: W,
    traj: &Trajectory,
    names: &[String],
    stride: usize,
) -> Result<()> {
    let stride = stride.max(1);
    writeln!(out, "t,{}", names.join(","))?;
    let last = traj.times.len() - 1;
    for idx in 0..traj.times.len() {
        if idx % stride != 0 && idx != last {
            continue;
        }
        let row: Vec<String> = traj.states[idx].iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", traj.times[idx], row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::sharp;
    use crate::toda::{lax_hamiltonians, toda_reduced};

    fn oscillator() -> FlowField {
        let q = ScalarField::coordinate(0, "q");
        let p = ScalarField::coordinate(1, "p");
        FlowField::from_components(vec![p, q.neg()])
    }

    #[test]
    fn rejects_bad_steps_and_shapes() {
        let f = oscillator();
        assert!(integrate(&f, &[1.0, 0.0], 1.0, 0.0).is_err());
        assert!(integrate(&f, &[1.0, 0.0], 1.0, -0.1).is_err());
        assert!(integrate(&f, &[1.0, 0.0], -1.0, 0.1).is_err());
        assert!(integrate(&f, &[1.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn constant_field_is_integrated_exactly_and_clamped() {
        let f = FlowField::from_components(vec![
            ScalarField::constant(1.0),
            ScalarField::constant(2.0),
        ]);
        let traj = integrate(&f, &[0.0, 0.0], 0.05, 0.02).unwrap();
        let expected: Vec<f64> = vec![0.0, 0.02, 0.04, 0.05];
        assert_eq!(traj.times, expected);
        let end = traj.last_state();
        assert!((end[0] - 0.05).abs() < 1e-15);
        assert!((end[1] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn oscillator_returns_after_a_period() {
        let f = oscillator();
        let t = 2.0 * std::f64::consts::PI;
        let traj = integrate(&f, &[1.0, 0.0], t, 1e-3).unwrap();
        let end = traj.last_state();
        assert!((end[0] - 1.0).abs() < 1e-8, "q drifted to {}", end[0]);
        assert!(end[1].abs() < 1e-8, "p drifted to {}", end[1]);
        let q = ScalarField::coordinate(0, "q");
        let p = ScalarField::coordinate(1, "p");
        let energy = q.mul(&q).add(&p.mul(&p)).scale(0.5);
        let report =
            conservation_report(&traj, &[("energy".to_string(), energy)]).unwrap();
        assert!(report[0].max_drift < 1e-10, "drift {}", report[0].max_drift);
    }

    #[test]
    fn halving_the_step_divides_the_error_by_sixteen() {
        let f = oscillator();
        let exact = (1.0f64.cos(), -(1.0f64.sin()));
        let err = |dt: f64| {
            let end = integrate(&f, &[1.0, 0.0], 1.0, dt).unwrap();
            let s = end.last_state();
            ((s[0] - exact.0).powi(2) + (s[1] - exact.1).powi(2)).sqrt()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((12.0..22.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn hamiltonian_field_matches_the_symbolic_route() {
        let a = LieAlgebroid::tangent(
            "plane",
            vec!["q".into(), "p".into()],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap();
        let q = ScalarField::coordinate(0, "q");
        let p = ScalarField::coordinate(1, "p");
        let pi = Multivector::zero(2, 2).with_component(&[0, 1], ScalarField::one());
        let h = q.mul(&q).mul(&p).add(&p.mul(&p).scale(0.5));
        let fast = FlowField::hamiltonian(&a, &pi, &h).unwrap();
        let x = sharp(&pi, &a.differential_scalar(&h)).unwrap();
        let slow = FlowField::from_components(x.vector_components().unwrap());
        for pt in [[0.3, -0.7], [0.9, 0.2], [-0.5, 0.55]] {
            let f = fast.value(&pt).unwrap();
            let s = slow.value(&pt).unwrap();
            for u in 0..2 {
                assert!((f[u] - s[u]).abs() < 1e-14, "{f:?} vs {s:?}");
            }
        }
    }

    #[test]
    fn reduced_chain_flow_conserves_the_ladder() {
        let red = toda_reduced(3).unwrap();
        let h = lax_hamiltonians(3, 3).unwrap();
        let field =
            FlowField::hamiltonian(&red.algebroid, &red.pi0, &h[2].1).unwrap();
        let x0 = [1.0, 0.8, 0.3, -0.1, 0.2];
        let traj = integrate(&field, &x0, 1.0, 1e-3).unwrap();
        let conserved: Vec<(String, ScalarField)> = h[1..]
            .iter()
            .map(|(n, f)| (n.clone(), f.clone()))
            .collect();
        for d in conservation_report(&traj, &conserved).unwrap() {
            assert!(d.max_drift < 1e-8, "{} drift {}", d.name, d.max_drift);
        }
        // The chain preserves positivity of the off-diagonal coordinates.
        for state in &traj.states {
            assert!(state[0] > 0.0 && state[1] > 0.0);
        }
        // Second route to the same flow: bracket 1 with the lower
        // Hamiltonian. The trajectories must coincide.
        let other =
            FlowField::hamiltonian(&red.algebroid, &red.pi1, &h[1].1).unwrap();
        let traj2 = integrate(&other, &x0, 1.0, 1e-3).unwrap();
        for (s1, s2) in traj.states.iter().zip(&traj2.states) {
            for u in 0..5 {
                assert!((s1[u] - s2[u]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_writes_header_stride_and_final_row() {
        let f = FlowField::from_components(vec![ScalarField::constant(1.0)]);
        let traj = integrate(&f, &[0.0], 0.5, 0.1).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &traj, &["x".to_string()], 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x");
        // samples 0, 2, 4 plus the clamped final sample 5
        assert_eq!(lines.len(), 5);
        assert!(lines.last().unwrap().starts_with("0.5,"));
    }

    #[test]
    fn singular_flow_reports_the_failure_time() {
        // dx/dt = ln x from x0 = 1/2 decreases and leaves the domain of the
        // logarithm near t ~ 0.38.
        let x = ScalarField::coordinate(0, "x");
        let f = FlowField::from_components(vec![x.ln()]);
        let err = integrate(&f, &[0.5], 1.0, 1e-3).unwrap_err();
        match err {
            Error::FlowAt { time, .. } => {
                assert!((0.2..0.6).contains(&time), "failed at t = {time}");
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
