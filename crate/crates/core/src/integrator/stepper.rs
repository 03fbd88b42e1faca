use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::linear::{block_factors, diagonal_factors, scalar_factors};
use super::{InitialCondition, IntegratorConfig, Model};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGrid, NoiseSpec, NoiseStream, SpectralOps};
use crate::models::positive_p::{adiabatic_local, adiabatic_noise, full_pp_local, full_pp_noise};
use crate::models::quadrature::xy_local;
use crate::models::{quadratures_complex, Block2, ScaledParams};
use crate::observables::Sample;

type C = Complex64;

/// Extra observables recorded by the full positive-P level, site averaged.
pub const FULL_PP_EXTRAS: [&str; 7] = [
    "pump_re",
    "pump_im",
    "pump_adiabatic_re",
    "pump_adiabatic_im",
    "signal_re",
    "signal_im",
    "photon_density",
];

/// Dynamical fields of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFields {
    Gl(Vec<f64>),
    Xy {
        x: Vec<C>,
        y: Vec<C>,
    },
    Adiabatic {
        plus: Vec<C>,
        cross: Vec<C>,
    },
    FullPositiveP {
        signal: Vec<C>,
        signal_cross: Vec<C>,
        pump: Vec<C>,
        pump_cross: Vec<C>,
    },
}

impl ModelFields {
    /// Largest modulus over all components; NaN if any is non-finite.
    pub fn max_abs(&self) -> f64 {
        let fold = |m: f64, v: f64| {
            if v.is_finite() && m.is_finite() {
                m.max(v)
            } else {
                f64::NAN
            }
        };
        let cmax = |vs: &[&Vec<C>]| {
            vs.iter()
                .flat_map(|v| v.iter())
                .fold(0.0, |m, z| fold(m, z.norm()))
        };
        match self {
            ModelFields::Gl(x) => x.iter().fold(0.0, |m, v| fold(m, v.abs())),
            ModelFields::Xy { x, y } => cmax(&[x, y]),
            ModelFields::Adiabatic { plus, cross } => cmax(&[plus, cross]),
            ModelFields::FullPositiveP {
                signal,
                signal_cross,
                pump,
                pump_cross,
            } => cmax(&[signal, signal_cross, pump, pump_cross]),
        }
    }
}

/// Fields, clock and private noise stream of one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub fields: ModelFields,
    pub time: f64,
    pub steps: u64,
    /// Set once the divergence guard trips; further steps are no-ops.
    pub diverged: bool,
    stream: NoiseStream,
}

#[derive(Clone)]
enum Kernel {
    Gl {
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
    },
    Block {
        e: Vec<Block2>,
        phi: Vec<Block2>,
    },
    Diag {
        signal: Vec<(C, C)>,
        pump: Vec<(C, C)>,
    },
}

/// Advances trajectories of one model on one grid.
///
/// Cloning is cheap (FFT plans are shared), so ensembles clone one
/// prepared stepper per trajectory.
#[derive(Clone)]
pub struct Stepper {
    model: Model,
    config: IntegratorConfig,
    grid: Arc<LatticeGrid>,
    ops: SpectralOps,
    kernel: Kernel,
    mirror: Vec<usize>,
    keep: Option<Vec<bool>>,
    scaled: Option<ScaledParams>,
    noise_strength: f64,
    bufs: Vec<Vec<C>>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl Stepper {
    pub fn new(model: Model, grid: Arc<LatticeGrid>, config: IntegratorConfig) -> Result<Self> {
        model.validate()?;
        config.validate(&model)?;
        let n = grid.len();
        let (scaled, noise_strength) = match &model {
            Model::Gl(p) => (None, p.noise_strength),
            Model::Xy(_) => (None, 1.0),
            Model::Adiabatic(s) => (Some(s.clone()), 1.0),
            Model::FullPositiveP(p) => (Some(p.derive_scaled()?), 1.0),
        };
        let mut stepper = Self {
            ops: SpectralOps::new(grid.clone()),
            mirror: (0..n).map(|i| grid.mirror(i)).collect(),
            keep: config.dealias.then(|| grid.two_thirds_mask()),
            kernel: Kernel::Gl {
                a: Vec::new(),
                b: Vec::new(),
                c: Vec::new(),
            },
            bufs: vec![vec![C::new(0.0, 0.0); n]; 10],
            w1: vec![0.0; n],
            w2: vec![0.0; n],
            model,
            config,
            grid,
            scaled,
            noise_strength,
        };
        stepper.rebuild()?;
        Ok(stepper)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<LatticeGrid> {
        &self.grid
    }

    pub fn ops(&mut self) -> &mut SpectralOps {
        &mut self.ops
    }

    /// Scaled constants used for quadratures (adiabatic and full levels).
    pub fn scaled(&self) -> Option<&ScaledParams> {
        self.scaled.as_ref()
    }

    /// Changes the control parameter between steps. Only the GL and
    /// quadrature levels are parameterized by `γₓ` directly.
    pub fn set_gamma_x(&mut self, gamma_x: f64) -> Result<()> {
        match &mut self.model {
            Model::Gl(p) => p.gamma_x = gamma_x,
            Model::Xy(q) => q.gamma_x = gamma_x,
            _ => {
                return Err(Error::params(
                    "gamma_x scans are supported at the gl and xy levels only",
                ))
            }
        }
        self.model.validate()?;
        self.rebuild()
    }

    fn rebuild(&mut self) -> Result<()> {
        let h = self.config.dt;
        let scheme = self.config.scheme;
        let k2 = self.grid.k2_table();
        // many modes share |k|²
        fn memo<T: Clone>(k2: &[f64], mut f: impl FnMut(f64) -> Result<T>) -> Result<Vec<T>> {
            let mut cache: HashMap<u64, T> = HashMap::new();
            k2.iter()
                .map(|&k| {
                    if let Some(v) = cache.get(&k.to_bits()) {
                        return Ok(v.clone());
                    }
                    let v = f(k)?;
                    cache.insert(k.to_bits(), v.clone());
                    Ok(v)
                })
                .collect()
        }
        self.kernel = match &self.model {
            Model::Gl(p) => {
                let f = memo(&k2, |k| scalar_factors(p.lambda(k), h, scheme))?;
                let mut b: Vec<f64> = f.iter().map(|t| t.1).collect();
                if let Some(keep) = &self.keep {
                    for (bi, &k) in b.iter_mut().zip(keep) {
                        if !k {
                            *bi = 0.0;
                        }
                    }
                }
                Kernel::Gl {
                    a: f.iter().map(|t| t.0).collect(),
                    b,
                    c: f.iter().map(|t| t.2).collect(),
                }
            }
            Model::Xy(q) => {
                let f = memo(&k2, |k| block_factors(&q.linear_block(k), h, scheme))?;
                let (e, phi) = f.into_iter().unzip();
                Kernel::Block { e, phi }
            }
            Model::Adiabatic(s) => {
                let f = memo(&k2, |k| block_factors(&s.linear_block(k), h, scheme))?;
                let (e, phi) = f.into_iter().unzip();
                Kernel::Block { e, phi }
            }
            Model::FullPositiveP(p) => Kernel::Diag {
                signal: memo(&k2, |k| diagonal_factors(p.signal_rate(k), h, scheme))?,
                pump: memo(&k2, |k| diagonal_factors(p.pump_rate(k), h, scheme))?,
            },
        };
        Ok(())
    }

    /// Fresh trajectory whose noise stream is seeded with `stream_seed`.
    pub fn initial_state(
        &self,
        initial: InitialCondition,
        stream_seed: u64,
    ) -> Result<TrajectoryState> {
        let noise = NoiseSpec::new(self.noise_strength, &self.grid, self.config.dt, stream_seed)?;
        let n = self.grid.len();
        // initial randomness comes from a stream distinct from the noise
        let mut init_rng = NoiseStream::from_seed(stream_seed ^ 0x5eed_1c0d_e5ee_d1c0);
        let x: Vec<f64> = match initial {
            InitialCondition::Vacuum => vec![0.0; n],
            InitialCondition::Uniform { value } => vec![value; n],
            InitialCondition::Random { mean, amplitude } => (0..n)
                .map(|_| mean + amplitude * init_rng.standard_normal())
                .collect(),
        };
        let real =
            |v: &[f64], s: f64| -> Vec<C> { v.iter().map(|&a| C::new(a * s, 0.0)).collect() };
        let fields = match &self.model {
            Model::Gl(_) => ModelFields::Gl(x),
            Model::Xy(_) => ModelFields::Xy {
                x: real(&x, 1.0),
                y: vec![C::new(0.0, 0.0); n],
            },
            Model::Adiabatic(s) => {
                let a = real(&x, 0.5 / s.gc.sqrt());
                ModelFields::Adiabatic {
                    plus: a.clone(),
                    cross: a,
                }
            }
            Model::FullPositiveP(p) => {
                let s = self
                    .scaled
                    .as_ref()
                    .expect("full level has scaled constants");
                let a = real(&x, 0.5 / (s.gc.sqrt() * s.x0));
                let a0 = p.empty_signal_pump();
                ModelFields::FullPositiveP {
                    signal: a.clone(),
                    signal_cross: a,
                    pump: vec![a0; n],
                    pump_cross: vec![a0.conj(); n],
                }
            }
        };
        let state = TrajectoryState {
            fields,
            time: 0.0,
            steps: 0,
            diverged: false,
            stream: noise.stream(),
        };
        Ok(state)
    }

    /// One step of length `dt`. Trips the divergence guard instead of
    /// returning an error, so ensembles can discard the trajectory.
    pub fn step(&mut self, st: &mut TrajectoryState) {
        if st.diverged {
            return;
        }
        let noise = self.config.noise;
        let dt = self.config.dt;
        let Self {
            model,
            ops,
            kernel,
            mirror,
            keep,
            bufs,
            w1,
            w2,
            ..
        } = self;
        match (kernel, &mut st.fields) {
            (Kernel::Gl { a, b, c }, ModelFields::Gl(x)) => {
                let cubic = matches!(model, Model::Gl(p) if p.cubic);
                let [z, wz, out, ..] = &mut bufs[..] else {
                    unreachable!()
                };
                for (zi, &xi) in z.iter_mut().zip(x.iter()) {
                    *zi = C::new(xi, if cubic { -xi * xi * xi } else { 0.0 });
                }
                ops.forward(z);
                if noise {
                    st.stream.fill(w1);
                    for (o, &w) in wz.iter_mut().zip(w1.iter()) {
                        *o = C::new(w * dt, 0.0);
                    }
                    ops.forward(wz);
                }
                let half_i = C::new(0.0, -0.5);
                for i in 0..z.len() {
                    let zj = z[mirror[i]].conj();
                    let xh = (z[i] + zj) * 0.5;
                    let nh = (z[i] - zj) * half_i;
                    let mut v = xh * a[i] + nh * b[i];
                    if noise {
                        v += wz[i] * c[i];
                    }
                    out[i] = v;
                }
                ops.inverse(out);
                for (xi, o) in x.iter_mut().zip(out.iter()) {
                    *xi = o.re;
                }
            }
            (Kernel::Block { e, phi }, fields) => {
                let (u, v) = match fields {
                    ModelFields::Xy { x, y } => (x, y),
                    ModelFields::Adiabatic { plus, cross } => (plus, cross),
                    _ => unreachable!("block kernel pairs with two-field models"),
                };
                if noise {
                    st.stream.fill(w1);
                    st.stream.fill(w2);
                }
                let [fu, fv, nu, nv, hu, hv, ..] = &mut bufs[..] else {
                    unreachable!()
                };
                for i in 0..u.len() {
                    let (a, b) = (u[i], v[i]);
                    match model {
                        Model::Xy(q) => {
                            let (lx, ly) = xy_local(a, b, q.gc);
                            fu[i] = lx;
                            fv[i] = ly;
                            if noise {
                                nu[i] = C::new(w1[i] + w2[i], 0.0);
                                nv[i] = C::new(0.0, (w2[i] - w1[i]) / q.gc.sqrt());
                            }
                        }
                        Model::Adiabatic(s) => {
                            let (lp, lc) = adiabatic_local(a, b, s.gc);
                            fu[i] = lp;
                            fv[i] = lc;
                            if noise {
                                let (bp, bc) = adiabatic_noise(a, b, s);
                                nu[i] = bp * w1[i];
                                nv[i] = bc * w2[i];
                            }
                        }
                        _ => unreachable!(),
                    }
                }
                forcing_hat(ops, keep.as_deref(), fu, nu, noise);
                forcing_hat(ops, keep.as_deref(), fv, nv, noise);
                hu.copy_from_slice(u);
                hv.copy_from_slice(v);
                ops.forward(hu);
                ops.forward(hv);
                for i in 0..u.len() {
                    let (m, p) = (&e[i], &phi[i]);
                    let (a, b) = (hu[i], hv[i]);
                    hu[i] = m[0][0] * a + m[0][1] * b + p[0][0] * fu[i] + p[0][1] * fv[i];
                    hv[i] = m[1][0] * a + m[1][1] * b + p[1][0] * fu[i] + p[1][1] * fv[i];
                }
                ops.inverse(hu);
                ops.inverse(hv);
                u.copy_from_slice(hu);
                v.copy_from_slice(hv);
            }
            (
                Kernel::Diag {
                    signal: fs,
                    pump: fp,
                },
                ModelFields::FullPositiveP {
                    signal,
                    signal_cross,
                    pump,
                    pump_cross,
                },
            ) => {
                let Model::FullPositiveP(p) = model else {
                    unreachable!()
                };
                if noise {
                    st.stream.fill(w1);
                    st.stream.fill(w2);
                }
                let [l1, l1c, l0, l0c, n1, n1c, ..] = &mut bufs[..] else {
                    unreachable!()
                };
                for i in 0..signal.len() {
                    let loc = full_pp_local(signal[i], signal_cross[i], pump[i], pump_cross[i], p);
                    l1[i] = loc[0];
                    l1c[i] = loc[1];
                    l0[i] = loc[2];
                    l0c[i] = loc[3];
                    if noise {
                        let (b, bc) = full_pp_noise(pump[i], pump_cross[i], p);
                        n1[i] = b * w1[i];
                        n1c[i] = bc * w2[i];
                    }
                }
                forcing_hat(ops, keep.as_deref(), l1, n1, noise);
                forcing_hat(ops, keep.as_deref(), l1c, n1c, noise);
                forcing_hat(ops, keep.as_deref(), l0, n1, false);
                forcing_hat(ops, keep.as_deref(), l0c, n1c, false);
                type Slot<'a> = (&'a mut Vec<C>, &'a Vec<C>, &'a Vec<(C, C)>, bool);
                let fields: [Slot; 4] = [
                    (signal, l1, fs, false),
                    (signal_cross, l1c, fs, true),
                    (pump, l0, fp, false),
                    (pump_cross, l0c, fp, true),
                ];
                for (field, force, factors, conj) in fields {
                    ops.forward(field);
                    for i in 0..field.len() {
                        let (ef, pf) = factors[i];
                        let (ef, pf) = if conj {
                            (ef.conj(), pf.conj())
                        } else {
                            (ef, pf)
                        };
                        field[i] = ef * field[i] + pf * force[i];
                    }
                    ops.inverse(field);
                }
            }
            _ => unreachable!("kernel and fields come from the same model"),
        }
        st.time += dt;
        st.steps += 1;
        let m = st.fields.max_abs();
        if !(m.is_finite() && m <= self.config.max_field_norm) {
            st.diverged = true;
        }
    }

    pub fn advance(&mut self, st: &mut TrajectoryState, steps: usize) {
        for _ in 0..steps {
            if st.diverged {
                break;
            }
            self.step(st);
        }
    }

    /// Quadrature fields `(X, Y)` of the current state. At the GL level
    /// `Y` is its slaved value `∇²X/2`.
    pub fn quadratures(&mut self, st: &TrajectoryState) -> (Vec<C>, Vec<C>) {
        match &st.fields {
            ModelFields::Gl(x) => {
                let xc: Vec<C> = x.iter().map(|&v| C::new(v, 0.0)).collect();
                let mut y = xc.clone();
                self.ops.laplacian_complex(&mut y);
                y.iter_mut().for_each(|v| *v *= 0.5);
                (xc, y)
            }
            ModelFields::Xy { x, y } => (x.clone(), y.clone()),
            ModelFields::Adiabatic { plus, cross } => {
                quadratures_complex(plus, cross, self.scaled.as_ref().map_or(1.0, |s| s.gc))
            }
            ModelFields::FullPositiveP {
                signal,
                signal_cross,
                ..
            } => {
                let s = self
                    .scaled
                    .as_ref()
                    .expect("full level has scaled constants");
                let a: Vec<C> = signal.iter().map(|v| v * s.x0).collect();
                let ap: Vec<C> = signal_cross.iter().map(|v| v * s.x0).collect();
                quadratures_complex(&a, &ap, s.gc)
            }
        }
    }

    /// Reduces the current state to a [`Sample`].
    pub fn observe(&mut self, st: &TrajectoryState) -> Sample {
        let (x, y) = self.quadratures(st);
        let extras = match (&st.fields, &self.model) {
            (
                ModelFields::FullPositiveP {
                    signal,
                    signal_cross,
                    pump,
                    ..
                },
                Model::FullPositiveP(p),
            ) => {
                let n = signal.len() as f64;
                let g0 = p.gamma0_tilde();
                let mut acc = [C::new(0.0, 0.0); 4];
                for i in 0..signal.len() {
                    acc[0] += pump[i];
                    acc[1] += (p.pump - 0.5 * p.chi.conj() * signal[i] * signal[i]) / g0;
                    acc[2] += signal[i];
                    acc[3] += signal_cross[i] * signal[i];
                }
                let [a0, ad, a1, nd] = acc.map(|z| z / n);
                vec![a0.re, a0.im, ad.re, ad.im, a1.re, a1.im, nd.re]
            }
            _ => Vec::new(),
        };
        Sample::from_fields(&x, &y, &mut self.ops, extras)
    }
}

/// Transforms the forcing `local + noise`; with a dealiasing mask only the
/// local part is truncated.
fn forcing_hat(
    ops: &mut SpectralOps,
    keep: Option<&[bool]>,
    local: &mut [C],
    noise: &mut [C],
    with_noise: bool,
) {
    match keep {
        None => {
            if with_noise {
                for (l, n) in local.iter_mut().zip(noise.iter()) {
                    *l += n;
                }
            }
            ops.forward(local);
        }
        Some(keep) => {
            ops.forward(local);
            for (l, &k) in local.iter_mut().zip(keep) {
                if !k {
                    *l = C::new(0.0, 0.0);
                }
            }
            if with_noise {
                ops.forward(noise);
                for (l, n) in local.iter_mut().zip(noise.iter()) {
                    *l += n;
                }
            }
        }
    }
}
