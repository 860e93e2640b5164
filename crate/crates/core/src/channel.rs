//! Radio annotations on traced paths: free-space amplitudes with a fixed
//! loss per bounce, a double-exponential diffuse-multipath power delay
//! profile, SINR-based detection and the delay-extraction CRLB.

use crate::geom::{Mpc, SPEED_OF_LIGHT};

/// Carrier used to fix the default absolute power scale, Hz.
pub const REFERENCE_CARRIER_HZ: f64 = 7.0e9;

/// Default `N0` relative to the 1 m free-space power at
/// [`REFERENCE_CARRIER_HZ`] over the reference SNR. Chosen so that the
/// canonical room yields about 20 common detected MPCs with three observers.
pub const DEFAULT_NOISE_SCALE: f64 = 0.5;

/// Free-space amplitude gain at 1 m for [`REFERENCE_CARRIER_HZ`], `λ / (4π · 1 m)`.
pub fn reference_free_space_gain() -> f64 {
    SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * REFERENCE_CARRIER_HZ)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Signal bandwidth `B`, Hz.
    pub bandwidth: f64,
    /// Single-sided noise spectral density `N0`, on the same scale as `|a|²`.
    pub noise_density: f64,
    /// Effective pulse duration `T_p`, seconds. `None` means `1 / B`.
    pub pulse_duration: Option<f64>,
    /// Rise time constant of the diffuse PDP, seconds.
    pub pdp_rise: f64,
    /// Decay time constant of the diffuse PDP, seconds.
    pub pdp_decay: f64,
    /// Total power of the diffuse PDP.
    pub pdp_power: f64,
    /// Detection threshold, dB.
    pub sinr_threshold_db: f64,
    /// Attenuation per reflection, dB.
    pub reflection_loss_db: f64,
    /// SNR of a 1 m line-of-sight path, dB. Together with `noise_density` this
    /// fixes the amplitude scale.
    pub reference_snr_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        let reference_snr_db = 30.0;
        let g = reference_free_space_gain();
        Self {
            bandwidth: 1.0e9,
            noise_density: DEFAULT_NOISE_SCALE * g * g / db_to_linear(reference_snr_db),
            pulse_duration: None,
            pdp_rise: 5.0e-9,
            pdp_decay: 20.0e-9,
            pdp_power: 1.16e-6,
            sinr_threshold_db: 0.0,
            reflection_loss_db: 3.0,
            reference_snr_db,
        }
    }
}

impl ChannelParams {
    pub fn pulse_duration(&self) -> f64 {
        self.pulse_duration.unwrap_or(1.0 / self.bandwidth)
    }

    /// Amplitude of a line-of-sight path at 1 m.
    pub fn reference_amplitude(&self) -> f64 {
        (self.noise_density * db_to_linear(self.reference_snr_db)).sqrt()
    }

    /// RMS (effective) bandwidth, flat-spectrum approximation `B / √12`.
    pub fn effective_bandwidth(&self) -> f64 {
        self.bandwidth / 12f64.sqrt()
    }

    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("noise_density", self.noise_density),
            ("pdp_rise", self.pdp_rise),
            ("pdp_decay", self.pdp_decay),
            ("pulse_duration", self.pulse_duration()),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.pdp_power >= 0.0 && self.pdp_power.is_finite()) {
            return Err(crate::Error::Config(format!(
                "pdp_power must be non-negative, got {}",
                self.pdp_power
            )));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `|a| = A_ref · (1 m)/(c·τ) · 10^(−bounces·loss/20)`.
pub fn path_amplitude(mpc: &Mpc, params: &ChannelParams) -> f64 {
    let length = mpc.delay * SPEED_OF_LIGHT;
    params.reference_amplitude() / length * 10f64.powf(-(mpc.bounces as f64) * params.reflection_loss_db / 20.0)
}

/// Diffuse-multipath power delay profile at excess delay `tau` (seconds
/// after the line-of-sight arrival). Zero for `tau ≤ 0`.
pub fn pdp(tau: f64, params: &ChannelParams) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let (rise, decay) = (params.pdp_rise, params.pdp_decay);
    // ∫ (1 − e^{−t/rise}) e^{−t/decay} dt = decay² / (rise + decay)
    let scale = params.pdp_power * (rise + decay) / (decay * decay);
    scale * (-(-tau / rise).exp_m1()) * (-tau / decay).exp()
}

/// SINR of `mpc` in dB; `reference_delay` is the line-of-sight delay of the
/// same link, where the diffuse profile starts.
pub fn sinr(mpc: &Mpc, reference_delay: f64, params: &ChannelParams) -> f64 {
    let interference = params.pulse_duration() * pdp(mpc.delay - reference_delay, params);
    linear_to_db(mpc.amplitude * mpc.amplitude / (params.noise_density + interference))
}

/// Standard deviation of delay extraction from the CRLB,
/// `1 / (2√2 π β √SINR)`.
pub fn crlb_sigma(sinr_db: f64, params: &ChannelParams) -> f64 {
    let beta = params.effective_bandwidth();
    1.0 / (2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI * beta * db_to_linear(sinr_db).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedMpc {
    pub mpc: Mpc,
    pub sinr_db: f64,
    /// CRLB standard deviation of the extracted delay, seconds.
    pub sigma_tau: f64,
}

/// Keeps the components whose SINR reaches the threshold. The diffuse
/// profile is referenced to the earliest arrival in `mpcs`, i.e. the
/// direct path when the input is a full trace of one link.
pub fn detect(mpcs: &[Mpc], params: &ChannelParams) -> Vec<DetectedMpc> {
    let Some(reference) = mpcs.iter().map(|m| m.delay).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    mpcs.iter()
        .filter_map(|m| {
            let s = sinr(m, reference, params);
            (s >= params.sinr_threshold_db).then(|| DetectedMpc {
                mpc: m.clone(),
                sinr_db: s,
                sigma_tau: crlb_sigma(s, params),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PathSpec, Point3, UnitVec3};

    fn mpc(length: f64, bounces: usize) -> Mpc {
        Mpc {
            path: PathSpec::los(),
            virtual_sink: Point3::new(length, 0.0, 0.0),
            delay: length / SPEED_OF_LIGHT,
            direction: UnitVec3::new(1.0, 0.0, 0.0).unwrap(),
            amplitude: 0.0,
            bounces,
        }
    }

    fn with_amplitude(mut m: Mpc, p: &ChannelParams) -> Mpc {
        m.amplitude = path_amplitude(&m, p);
        m
    }

    #[test]
    fn amplitude_reference_point_and_laws() {
        let p = ChannelParams::default();
        let a1 = path_amplitude(&mpc(1.0, 0), &p);
        assert!((a1 - p.reference_amplitude()).abs() < 1e-15 * a1.max(1.0));
        let ratio = path_amplitude(&mpc(2.5, 1), &p) / path_amplitude(&mpc(2.5, 0), &p);
        assert!((ratio - 0.707_945_784).abs() < 1e-9);
        let half = path_amplitude(&mpc(6.0, 2), &p) / path_amplitude(&mpc(3.0, 2), &p);
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reference_snr_is_thirty_db_at_one_meter() {
        let p = ChannelParams::default();
        let m = with_amplitude(mpc(1.0, 0), &p);
        assert!((sinr(&m, m.delay, &p) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn pdp_endpoints() {
        let p = ChannelParams::default();
        assert_eq!(pdp(0.0, &p), 0.0);
        assert!(pdp(5e-6, &p) < 1e-80);
        assert!(pdp(8e-9, &p) > 0.0);
    }

    #[test]
    fn sinr_noise_only_and_quadratic_numerator() {
        let p = ChannelParams { pdp_power: 0.0, noise_density: 2.0, ..ChannelParams::default() };
        let mut m = mpc(3.0, 0);
        m.amplitude = 2f64.sqrt();
        assert!(sinr(&m, 0.0, &p).abs() < 1e-12);
        let base = sinr(&m, 0.0, &p);
        m.amplitude *= 2.0;
        assert!((sinr(&m, 0.0, &p) - base - 6.020_599_913).abs() < 1e-8);
    }

    #[test]
    fn crlb_values() {
        let p = ChannelParams::default();
        let s0 = crlb_sigma(0.0, &p);
        assert!((s0 * 1e9 - 0.389_848).abs() < 1e-5, "{s0}");
        assert!((s0 * SPEED_OF_LIGHT - 0.116_873).abs() < 1e-5);
        assert!(crlb_sigma(200.0, &p) < 1e-18);
        assert!(crlb_sigma(10.0, &p) < s0);
        let wide = ChannelParams { bandwidth: 2e9, ..p.clone() };
        assert!(crlb_sigma(0.0, &wide) < s0);
    }

    #[test]
    fn detect_thresholds() {
        let p = ChannelParams::default();
        let mpcs: Vec<Mpc> = [(2.0, 0), (4.0, 1), (9.0, 2), (14.0, 3), (30.0, 3)]
            .into_iter()
            .map(|(l, b)| with_amplitude(mpc(l, b), &p))
            .collect();
        let all = detect(&mpcs, &ChannelParams { sinr_threshold_db: f64::NEG_INFINITY, ..p.clone() });
        assert_eq!(all.len(), mpcs.len());
        let none = detect(&mpcs, &ChannelParams { sinr_threshold_db: f64::INFINITY, ..p.clone() });
        assert!(none.is_empty());
        let some = detect(&mpcs, &p);
        assert!(some.iter().all(|d| d.sinr_db >= 0.0 && d.sigma_tau > 0.0));
        assert!(!some.is_empty() && some.len() < mpcs.len());
        assert!(detect(&[], &p).is_empty());
    }

    #[test]
    fn validate_rejects_nonpositive() {
        assert!(ChannelParams::default().validate().is_ok());
        assert!(ChannelParams { bandwidth: 0.0, ..Default::default() }.validate().is_err());
        assert!(ChannelParams { pdp_power: -1.0, ..Default::default() }.validate().is_err());
    }
}
