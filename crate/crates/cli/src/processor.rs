//! The model as a pipeline stage: one engine per sensor, grouped into
//! instances that may run on their own threads.

use std::sync::Arc;

use carfac::fixed::{FxConfig, FxEngine, OpHistogram};
use carfac::model::carfac_sample;
use carfac::stream::FrameProcessor;
use carfac::{CarfacCoeffs, CarfacState, Mode, Result};

enum Engine {
    Float(CarfacState),
    /// The fixed engine runs beside a float approx-mode reference so the
    /// run can report its SNR.
    Fixed {
        fx: Box<FxEngine>,
        reference: CarfacState,
    },
}

/// Accumulated fixed-vs-float comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fidelity {
    pub signal_energy: f64,
    pub error_energy: f64,
    pub saturations: u64,
}

impl Fidelity {
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.signal_energy / self.error_energy).log10()
    }
}

struct Instance {
    first_sensor: usize,
    engines: Vec<Engine>,
    fidelity: Fidelity,
    buf: Vec<f32>,
}

impl Instance {
    fn run(&mut self, coeffs: &CarfacCoeffs, frames: &[f64], n_sensors: usize) -> Result<()> {
        self.buf.clear();
        let k = self.engines.len();
        for frame in frames.chunks_exact(n_sensors) {
            for (e, &x) in self.engines.iter_mut().zip(&frame[self.first_sensor..self.first_sensor + k]) {
                match e {
                    Engine::Float(st) => {
                        let y = carfac_sample(st, coeffs, x)?;
                        self.buf.extend(y.iter().map(|&v| v as f32));
                    }
                    Engine::Fixed { fx, reference } => {
                        let yref = carfac_sample(reference, coeffs, x)?;
                        let y = fx.process_f64(x)?;
                        for (r, q) in yref.iter().zip(y) {
                            let q = q.to_f64();
                            self.fidelity.signal_energy += r * r;
                            self.fidelity.error_energy += (r - q) * (r - q);
                            self.buf.push(q as f32);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub enum EngineKind {
    Float(Mode),
    Fixed(FxConfig),
}

pub struct CarfacProcessor {
    coeffs: Arc<CarfacCoeffs>,
    instances: Vec<Instance>,
    n_sensors: usize,
    parallel: bool,
}

impl CarfacProcessor {
    /// Splits `n_sensors` into `n_instances` contiguous groups, sizes
    /// differing by at most one.
    pub fn new(
        coeffs: Arc<CarfacCoeffs>,
        kind: &EngineKind,
        n_sensors: usize,
        n_instances: usize,
        parallel: bool,
    ) -> Result<Self> {
        if n_instances == 0 || n_instances > n_sensors {
            return Err(carfac::Error::config(format!(
                "{n_instances} instances for {n_sensors} sensors; need 1 to {n_sensors}"
            )));
        }
        let mut instances = Vec::with_capacity(n_instances);
        let mut first = 0;
        for i in 0..n_instances {
            let count = n_sensors / n_instances + usize::from(i < n_sensors % n_instances);
            let engines = (0..count)
                .map(|_| match kind {
                    EngineKind::Float(mode) => Ok(Engine::Float(CarfacState::new(&coeffs, *mode)?)),
                    EngineKind::Fixed(cfg) => Ok(Engine::Fixed {
                        fx: Box::new(FxEngine::new(&coeffs, *cfg)?),
                        reference: CarfacState::new(&coeffs, Mode::Approx)?,
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            instances.push(Instance {
                first_sensor: first,
                engines,
                fidelity: Fidelity::default(),
                buf: Vec::new(),
            });
            first += count;
        }
        Ok(CarfacProcessor {
            coeffs,
            instances,
            n_sensors,
            parallel,
        })
    }

    /// Fixed mode only: the combined comparison against the float reference.
    pub fn fidelity(&self) -> Option<Fidelity> {
        let mut total = Fidelity::default();
        let mut any = false;
        for inst in &self.instances {
            total.signal_energy += inst.fidelity.signal_energy;
            total.error_energy += inst.fidelity.error_energy;
            for e in &inst.engines {
                if let Engine::Fixed { fx, .. } = e {
                    any = true;
                    total.saturations += fx.saturations();
                }
            }
        }
        any.then_some(total)
    }

    pub fn histogram(&self) -> Option<OpHistogram> {
        let mut h = OpHistogram::default();
        let mut any = false;
        for e in self.instances.iter().flat_map(|i| &i.engines) {
            if let Engine::Fixed { fx, .. } = e {
                any = true;
                h.merge(&fx.histogram());
            }
        }
        any.then_some(h)
    }
}

impl FrameProcessor for CarfacProcessor {
    fn outputs_per_frame(&self) -> usize {
        self.n_sensors * self.coeffs.n_channels()
    }

    fn process(&mut self, frames: &[f64], n_sensors: usize, out: &mut Vec<f32>) -> Result<()> {
        if n_sensors != self.n_sensors {
            return Err(carfac::Error::Layout(format!(
                "processor built for {} sensors, got {n_sensors}",
                self.n_sensors
            )));
        }
        let coeffs = &*self.coeffs;
        if self.parallel && self.instances.len() > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .instances
                    .iter_mut()
                    .map(|inst| s.spawn(move || inst.run(coeffs, frames, n_sensors)))
                    .collect();
                handles
                    .into_iter()
                    .try_for_each(|h| h.join().expect("instance thread panicked"))
            })?;
        } else {
            for inst in &mut self.instances {
                inst.run(coeffs, frames, n_sensors)?;
            }
        }
        // Re-interleave: per frame, instances in sensor order.
        let ch = coeffs.n_channels();
        for f in 0..frames.len() / n_sensors {
            for inst in &self.instances {
                let w = inst.engines.len() * ch;
                out.extend_from_slice(&inst.buf[f * w..(f + 1) * w]);
            }
        }
        Ok(())
    }
}
