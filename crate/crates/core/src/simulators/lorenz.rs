use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, GeneratedData};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::series::MultivariateSeries;

const DIM: usize = 9;
type State = [f64; DIM];

/// Three Lorenz subsystems, the first coordinate of subsystem `i` driving
/// that of subsystem `i + 1` through `C (x_{i-1} - x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzSpec {
    pub coupling: f64,
    pub n: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::rtol")]
    pub rtol: f64,
    #[serde(default = "defaults::atol")]
    pub atol: f64,
    /// Integration time discarded before sampling starts.
    #[serde(default = "defaults::transient")]
    pub transient: f64,
}

mod defaults {
    pub fn dt() -> f64 {
        0.01
    }
    pub fn rtol() -> f64 {
        1e-6
    }
    pub fn atol() -> f64 {
        1e-9
    }
    pub fn transient() -> f64 {
        10.0
    }
}

impl LorenzSpec {
    pub fn new(coupling: f64, n: usize) -> Self {
        Self {
            coupling,
            n,
            dt: defaults::dt(),
            rtol: defaults::rtol(),
            atol: defaults::atol(),
            transient: defaults::transient(),
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        vec![Edge { source: 0, target: 1 }, Edge { source: 1, target: 2 }]
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if !(self.dt > 0.0) || !(self.rtol > 0.0) || !(self.atol > 0.0) || !(self.transient >= 0.0) {
            return Err(Error::InvalidSpec(format!("bad Lorenz integration settings {self:?}")));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidSpec("coupling must be finite".into()));
        }
        Ok(())
    }
}

fn rhs(c: f64, s: &State) -> State {
    let mut d = [0.0; DIM];
    for i in 0..3 {
        let (x, y, z) = (s[3 * i], s[3 * i + 1], s[3 * i + 2]);
        d[3 * i] = -10.0 * x + 10.0 * y;
        d[3 * i + 1] = 28.0 * x - y - x * z;
        d[3 * i + 2] = x * y - 8.0 / 3.0 * z;
        if i > 0 {
            d[3 * i] += c * (s[3 * (i - 1)] - x);
        }
    }
    d
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (a, k) in terms {
        if *a != 0.0 {
            for j in 0..DIM {
                out[j] += h * a * k[j];
            }
        }
    }
    out
}

/// One accepted Dormand–Prince step with what dense output needs.
struct Step {
    y0: State,
    y1: State,
    rcont3: State,
    rcont4: State,
    rcont5: State,
}

impl Step {
    fn at(&self, theta: f64) -> State {
        let th1 = 1.0 - theta;
        std::array::from_fn(|j| {
            let d = self.y1[j] - self.y0[j];
            self.y0[j] + theta * (d + th1 * (self.rcont3[j] + theta * (self.rcont4[j] + th1 * self.rcont5[j])))
        })
    }
}

/// Adaptive Dormand–Prince 5(4) with the Hairer–Wanner continuous extension.
struct Dopri5<F: Fn(&State) -> State> {
    f: F,
    rtol: f64,
    atol: f64,
    h: f64,
    t: f64,
    y: State,
    k1: State,
}

impl<F: Fn(&State) -> State> Dopri5<F> {
    fn new(f: F, y: State, h: f64, rtol: f64, atol: f64) -> Self {
        let k1 = f(&y);
        Self {
            f,
            rtol,
            atol,
            h,
            t: 0.0,
            y,
            k1,
        }
    }

    fn step(&mut self) -> Result<(f64, Step)> {
        loop {
            let h = self.h;
            if !(h > 1e-12 * self.t.abs().max(1.0)) {
                return Err(Error::IntegrationFailure(format!("step size underflow at t = {}", self.t)));
            }
            let y = &self.y;
            let k1 = &self.k1;
            let k2 = (self.f)(&axpy(y, h, &[(1.0 / 5.0, k1)]));
            let k3 = (self.f)(&axpy(y, h, &[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]));
            let k4 = (self.f)(&axpy(y, h, &[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]));
            let k5 = (self.f)(&axpy(
                y,
                h,
                &[
                    (19372.0 / 6561.0, k1),
                    (-25360.0 / 2187.0, &k2),
                    (64448.0 / 6561.0, &k3),
                    (-212.0 / 729.0, &k4),
                ],
            ));
            let k6 = (self.f)(&axpy(
                y,
                h,
                &[
                    (9017.0 / 3168.0, k1),
                    (-355.0 / 33.0, &k2),
                    (46732.0 / 5247.0, &k3),
                    (49.0 / 176.0, &k4),
                    (-5103.0 / 18656.0, &k5),
                ],
            ));
            let y1 = axpy(
                y,
                h,
                &[
                    (35.0 / 384.0, k1),
                    (500.0 / 1113.0, &k3),
                    (125.0 / 192.0, &k4),
                    (-2187.0 / 6784.0, &k5),
                    (11.0 / 84.0, &k6),
                ],
            );
            let k7 = (self.f)(&y1);

            let mut err = 0.0;
            for j in 0..DIM {
                let e = h
                    * (71.0 / 57600.0 * k1[j] - 71.0 / 16695.0 * k3[j] + 71.0 / 1920.0 * k4[j]
                        - 17253.0 / 339200.0 * k5[j]
                        + 22.0 / 525.0 * k6[j]
                        - 1.0 / 40.0 * k7[j]);
                let sc = self.atol + self.rtol * y[j].abs().max(y1[j].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / DIM as f64).sqrt();
            if !err.is_finite() {
                self.h *= 0.2;
                continue;
            }
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            if err <= 1.0 {
                let mut rcont3 = [0.0; DIM];
                let mut rcont4 = [0.0; DIM];
                let mut rcont5 = [0.0; DIM];
                for j in 0..DIM {
                    let d = y1[j] - y[j];
                    rcont3[j] = h * k1[j] - d;
                    rcont4[j] = d - h * k7[j] - rcont3[j];
                    rcont5[j] = h
                        * (-12715105075.0 / 11282082432.0 * k1[j] + 87487479700.0 / 32700410799.0 * k3[j]
                            - 10690763975.0 / 1880347072.0 * k4[j]
                            + 701980252875.0 / 199316789632.0 * k5[j]
                            - 1453857185.0 / 822651844.0 * k6[j]
                            + 69997945.0 / 29380423.0 * k7[j]);
                }
                let step = Step {
                    y0: self.y,
                    y1,
                    rcont3,
                    rcont4,
                    rcont5,
                };
                self.t += h;
                self.y = y1;
                self.k1 = k7;
                self.h = h * factor.min(5.0);
                return Ok((h, step));
            }
            self.h = h * factor.min(1.0);
        }
    }

    /// States at `t0 + i dt` for `i in 0..n`, with `t0 >= self.t`.
    fn sample(&mut self, t0: f64, dt: f64, n: usize) -> Result<Vec<State>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let start = self.t;
            let (h, step) = self.step()?;
            let end = start + h;
            loop {
                let target = t0 + out.len() as f64 * dt;
                if out.len() == n || target > end {
                    break;
                }
                if target >= start {
                    out.push(step.at((target - start) / h));
                } else {
                    // only reachable before t0
                    break;
                }
            }
        }
        Ok(out)
    }
}

/// Coupled Lorenz flows sampled every `dt` after the transient, starting from
/// a random point near the attractor. Returns the `x` coordinate of each
/// subsystem.
pub fn gen_coupled_lorenz(spec: &LorenzSpec, seed: u64) -> Result<GeneratedData> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    let mut y0 = [0.0; DIM];
    for i in 0..3 {
        y0[3 * i] = rng.random_range(-10.0..10.0);
        y0[3 * i + 1] = rng.random_range(-10.0..10.0);
        y0[3 * i + 2] = rng.random_range(10.0..40.0);
    }
    let c = spec.coupling;
    let mut solver = Dopri5::new(move |s: &State| rhs(c, s), y0, spec.dt, spec.rtol, spec.atol);
    let states = solver.sample(spec.transient, spec.dt, spec.n)?;
    let cols = (0..3).map(|i| states.iter().map(|s| s[3 * i]).collect()).collect();
    Ok(GeneratedData {
        series: MultivariateSeries::new(cols, vec!["X".into(), "Y".into(), "Z".into()])?,
        edges: spec.edges(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dense_output_matches_exponential() {
        // y' = -y on every coordinate
        let mut s = Dopri5::new(|y: &State| y.map(|v| -v), [1.0; DIM], 0.1, 1e-10, 1e-12);
        let out = s.sample(0.0, 0.037, 60).unwrap();
        for (i, st) in out.iter().enumerate() {
            let t = i as f64 * 0.037;
            assert_abs_diff_eq!(st[4], (-t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn harmonic_oscillator_keeps_energy() {
        let f = |y: &State| {
            let mut d = [0.0; DIM];
            d[0] = y[1];
            d[1] = -y[0];
            d
        };
        let mut init = [0.0; DIM];
        init[0] = 1.0;
        let mut s = Dopri5::new(f, init, 0.01, 1e-9, 1e-12);
        let out = s.sample(0.0, 0.5, 200).unwrap();
        for (i, st) in out.iter().enumerate() {
            let t = i as f64 * 0.5;
            assert_abs_diff_eq!(st[0], t.cos(), epsilon = 1e-6);
        }
    }

    #[test]
    fn trajectories_stay_bounded() {
        for seed in 0..5 {
            let d = gen_coupled_lorenz(&LorenzSpec::new(2.0, 3000), seed).unwrap();
            assert!(d.series.columns().iter().flatten().all(|x| x.abs() <= 25.0));
        }
    }

    #[test]
    fn uncoupled_first_subsystem_ignores_coupling() {
        let short = |c| LorenzSpec {
            transient: 0.0,
            ..LorenzSpec::new(c, 100)
        };
        let a = gen_coupled_lorenz(&short(0.0), 4).unwrap();
        let b = gen_coupled_lorenz(&short(3.0), 4).unwrap();
        // step-size control sees all nine coordinates, so only closeness holds
        for (u, v) in a.series.column(0).iter().zip(b.series.column(0)) {
            assert!((u - v).abs() < 1e-3);
        }
        assert!(a.series.column(1).iter().zip(b.series.column(1)).any(|(u, v)| (u - v).abs() > 1e-3));
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = LorenzSpec::new(2.0, 100);
        assert_eq!(gen_coupled_lorenz(&s, 1).unwrap(), gen_coupled_lorenz(&s, 1).unwrap());
        assert_eq!(s.edges().len(), 2);
        assert!(gen_coupled_lorenz(&LorenzSpec::new(2.0, 0), 1).is_err());
    }
}
