//! Observation sets of delay differences, either drawn from the
//! uniform-direction statistical model or assembled from traced scenes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::channel::{detect, ChannelParams, DetectedMpc};
use crate::error::{Error, Result};
use crate::geom::{trace_paths, PathSpec, Point3, Room, UnitVec3, SPEED_OF_LIGHT};

/// Per-trial random generator. ChaCha with one stream per trial index, so
/// results do not depend on how trials are scheduled across threads.
pub type TrialRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn trial(self, index: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    /// Derives an independent seed for a sub-experiment.
    pub fn derive(self, tag: u64) -> RngSeed {
        let mut rng = self.trial(tag ^ 0x9e37_79b9_7f4a_7c15);
        RngSeed(rng.random())
    }
}

/// Ground truth kept alongside an observation set for scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    /// Distance between the two nodes, meters.
    pub d: f64,
    /// Clock offset, seconds (zero for synchronous sets).
    pub epsilon: f64,
}

/// K delay differences (seconds) with their per-observation error standard
/// deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    deltas: Vec<f64>,
    sigmas: Vec<f64>,
    sync: bool,
    truth: Option<Truth>,
}

impl ObservationSet {
    pub fn new(deltas: Vec<f64>, sigmas: Vec<f64>, sync: bool) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::domain("observation set is empty"));
        }
        if deltas.len() != sigmas.len() {
            return Err(Error::domain(format!(
                "{} deltas but {} sigmas",
                deltas.len(),
                sigmas.len()
            )));
        }
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("delay differences must be finite"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::domain("sigmas must be finite and non-negative"));
        }
        Ok(Self { deltas, sigmas, sync, truth: None })
    }

    /// Errorless observations (all sigmas zero).
    pub fn exact(deltas: Vec<f64>, sync: bool) -> Result<Self> {
        let n = deltas.len();
        Self::new(deltas, vec![0.0; n], sync)
    }

    pub fn with_truth(mut self, truth: Truth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn is_sync(&self) -> bool {
        self.sync
    }

    pub fn truth(&self) -> Option<Truth> {
        self.truth
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn is_errorless(&self) -> bool {
        self.sigmas.iter().all(|s| *s == 0.0)
    }

    /// Replaces every sigma with `sigma`.
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain("sigma must be finite and non-negative"));
        }
        self.sigmas.iter_mut().for_each(|s| *s = sigma);
        Ok(self)
    }

    /// Adds a common clock offset to every observation and marks the set
    /// asynchronous.
    pub fn with_offset(mut self, epsilon: f64) -> Self {
        self.deltas.iter_mut().for_each(|d| *d += epsilon);
        self.sync = false;
        if let Some(t) = self.truth.as_mut() {
            t.epsilon += epsilon;
        }
        self
    }

    /// Same observations, flagged synchronous or not.
    pub fn with_sync(mut self, sync: bool) -> Self {
        self.sync = sync;
        self
    }
}

/// Direction uniformly distributed on the unit sphere.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    UnitVec3::new(x, y, z).expect("unit sphere sample is nonzero")
}

/// Draws `k` delay differences for two nodes `d` meters apart under
/// uniformly distributed path directions.
///
/// The displacement is taken along +z. If `sync` is false, `epsilon` is
/// added to every observation; Gaussian errors with standard deviation
/// `sigma` are added in any case.
pub fn synth_statistical<R: Rng + ?Sized>(
    d: f64,
    k: usize,
    epsilon: f64,
    sigma: f64,
    sync: bool,
    rng: &mut R,
) -> Result<ObservationSet> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("distance must be non-negative, got {d}")));
    }
    if k == 0 {
        return Err(Error::domain("need at least one observation"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be non-negative, got {sigma}")));
    }
    let offset = if sync { 0.0 } else { epsilon };
    let deltas = (0..k)
        .map(|_| {
            let e = sample_unit_sphere(rng);
            let mut delta = -e.z() * d / SPEED_OF_LIGHT;
            if sigma > 0.0 {
                let w: f64 = StandardNormal.sample(rng);
                delta += sigma * w;
            }
            delta + offset
        })
        .collect();
    Ok(ObservationSet {
        deltas,
        sigmas: vec![sigma; k],
        sync,
        truth: Some(Truth { d, epsilon: offset }),
    })
}

/// Detected components from node A and node B to one observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverLinks {
    pub observer: Point3,
    pub from_a: Vec<DetectedMpc>,
    pub from_b: Vec<DetectedMpc>,
}

impl ObserverLinks {
    /// Components detected on both links, paired by path, ordered by A's delay.
    pub fn common(&self) -> Vec<(&DetectedMpc, &DetectedMpc)> {
        let by_path: HashMap<&PathSpec, &DetectedMpc> =
            self.from_b.iter().map(|m| (&m.mpc.path, m)).collect();
        self.from_a
            .iter()
            .filter_map(|a| by_path.get(&a.mpc.path).map(|b| (a, *b)))
            .collect()
    }
}

/// A traced and detected scene: nodes A and B seen by one or more observers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub p_a: Point3,
    pub p_b: Point3,
    pub links: Vec<ObserverLinks>,
}

impl Scene {
    pub fn trace(
        room: &Room,
        p_a: Point3,
        p_b: Point3,
        observers: &[Point3],
        max_bounces: usize,
        params: &ChannelParams,
    ) -> Result<Self> {
        let links = observers
            .iter()
            .map(|&o| {
                let a = trace_paths(p_a, o, room, max_bounces, params)?;
                let b = trace_paths(p_b, o, room, max_bounces, params)?;
                Ok(ObserverLinks { observer: o, from_a: detect(&a, params), from_b: detect(&b, params) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p_a, p_b, links })
    }

    pub fn distance(&self) -> f64 {
        self.p_a.distance(self.p_b)
    }

    /// Number of common detected components pooled over all observers.
    pub fn common_count(&self) -> usize {
        self.links.iter().map(|l| l.common().len()).sum()
    }
}

/// Builds observations from every component detected from both nodes at
/// every observer. `σ_k² = σ_A,k² + σ_B,k²`; noise is drawn only when
/// `inject_noise` is set.
pub fn synth_from_scene<R: Rng + ?Sized>(
    scene: &Scene,
    epsilon: f64,
    inject_noise: bool,
    rng: &mut R,
) -> Result<ObservationSet> {
    let mut deltas = Vec::new();
    let mut sigmas = Vec::new();
    for link in &scene.links {
        for (a, b) in link.common() {
            let sigma = a.sigma_tau.hypot(b.sigma_tau);
            let mut delta = b.mpc.delay - a.mpc.delay;
            if inject_noise {
                let w: f64 = StandardNormal.sample(rng);
                delta += sigma * w;
            }
            deltas.push(delta + epsilon);
            sigmas.push(sigma);
        }
    }
    if deltas.is_empty() {
        return Err(Error::domain("no common MPCs"));
    }
    let sync = epsilon == 0.0;
    Ok(ObservationSet { deltas, sigmas, sync, truth: Some(Truth { d: scene.distance(), epsilon }) })
}
