//! Block-fading link model for the BS → IRS → receiver cascade.
//!
//! The direct BS → UE path is assumed to be in a deep fade and is not drawn
//! at all; every legitimate and eavesdropper link goes through an IRS. Each
//! leg carries log-distance path loss and an Exp(1) (Rayleigh power) fading
//! gain that is redrawn once per association period.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::topology::{NetworkTopology, Position};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// How the dB figures in [`ChannelParams`] are read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "units", rename_all = "lowercase")]
pub enum LinkUnits {
    /// Normalised budget: noise is the 0 dB reference and `tx_power_db` is
    /// the transmit SNR before path loss.
    #[default]
    Normalized,
    /// `tx_power_db` is in dBm, noise is thermal over `bandwidth_hz` plus a
    /// noise figure, and the 1 m free-space loss at the carrier is added to
    /// `ref_loss_db`.
    Absolute { bandwidth_hz: f64, noise_figure_db: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    /// Log-distance exponent applied to each leg of the cascade.
    pub pathloss_exponent: f64,
    pub ref_loss_db: f64,
    /// Aggregate passive array gain of one IRS panel.
    pub irs_gain_db: f64,
    pub tx_power_db: f64,
    pub noise_power_db: f64,
    pub units: LinkUnits,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 5.0e9,
            pathloss_exponent: 2.2,
            ref_loss_db: 0.0,
            irs_gain_db: 65.0,
            tx_power_db: 5.0,
            noise_power_db: 0.0,
            units: LinkUnits::Normalized,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(invalid("channel.carrier_hz", "must be positive"));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent >= 2.0) {
            return Err(invalid("channel.pathloss_exponent", "must be at least 2"));
        }
        if !(self.irs_gain_db.is_finite() && self.irs_gain_db >= 0.0) {
            return Err(invalid("channel.irs_gain_db", "must be non-negative"));
        }
        for (key, v) in [
            ("channel.ref_loss_db", self.ref_loss_db),
            ("channel.tx_power_db", self.tx_power_db),
            ("channel.noise_power_db", self.noise_power_db),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if let LinkUnits::Absolute {
            bandwidth_hz,
            noise_figure_db,
        } = self.units
        {
            if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
                return Err(invalid("channel.bandwidth_hz", "must be positive"));
            }
            if !noise_figure_db.is_finite() {
                return Err(invalid("channel.noise_figure_db", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn effective_ref_loss_db(&self) -> f64 {
        match self.units {
            LinkUnits::Normalized => self.ref_loss_db,
            LinkUnits::Absolute { .. } => {
                self.ref_loss_db + 20.0 * (4.0 * std::f64::consts::PI * self.carrier_hz / SPEED_OF_LIGHT).log10()
            }
        }
    }

    pub fn effective_noise_db(&self) -> f64 {
        match self.units {
            LinkUnits::Normalized => self.noise_power_db,
            LinkUnits::Absolute {
                bandwidth_hz,
                noise_figure_db,
            } => THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db,
        }
    }

    /// Fading-free received power (dB) over `bs → irs → rx`.
    pub fn mean_received_db(&self, bs: &Position, irs: &Position, rx: &Position) -> f64 {
        let n = self.pathloss_exponent;
        let r = self.effective_ref_loss_db();
        self.tx_power_db + self.irs_gain_db - path_loss_db(bs.distance(irs), n, r) - path_loss_db(irs.distance(rx), n, r)
    }
}

/// Log-distance path loss in dB. Distances below the 1 m reference are
/// clamped to it.
pub fn path_loss_db(distance_m: f64, exponent: f64, ref_loss_db: f64) -> f64 {
    ref_loss_db + 10.0 * exponent * distance_m.max(1.0).log10()
}

/// One Rayleigh power gain, i.e. an Exp(1) draw. Never returns zero.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let g: f64 = Exp1.sample(rng);
        if g > 0.0 {
            return g;
        }
    }
}

/// Fading gains of every link for one association period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `bs_irs[irs]`: serving small-cell BS to panel.
    pub bs_irs: Vec<f64>,
    /// `irs_ue[irs][ue]`.
    pub irs_ue: Vec<Vec<f64>>,
    /// `irs_eve[irs][eve]`.
    pub irs_eve: Vec<Vec<f64>>,
}

impl ChannelRealization {
    /// Draws all gains in a fixed order: BS→IRS legs, then IRS→UE legs
    /// panel by panel, then IRS→eavesdropper legs.
    pub fn draw<R: Rng + ?Sized>(n_irs: usize, n_ue: usize, n_eve: usize, rng: &mut R) -> Self {
        let bs_irs = (0..n_irs).map(|_| sample_fading(rng)).collect();
        let irs_ue = (0..n_irs)
            .map(|_| (0..n_ue).map(|_| sample_fading(rng)).collect())
            .collect();
        let irs_eve = (0..n_irs)
            .map(|_| (0..n_eve).map(|_| sample_fading(rng)).collect())
            .collect();
        Self { bs_irs, irs_ue, irs_eve }
    }

    pub fn for_topology<R: Rng + ?Sized>(topo: &NetworkTopology, rng: &mut R) -> Self {
        Self::draw(topo.irs_panels.len(), topo.ues.len(), topo.eavesdroppers.len(), rng)
    }
}

/// Linear SNR of the two-hop passive cascade with the given leg gains.
pub fn cascaded_snr(
    bs: &Position,
    irs: &Position,
    rx: &Position,
    g_bs_irs: f64,
    g_irs_rx: f64,
    params: &ChannelParams,
) -> f64 {
    let mean_db = params.mean_received_db(bs, irs, rx) - params.effective_noise_db();
    10f64.powf(mean_db / 10.0) * g_bs_irs * g_irs_rx
}

/// Shannon rate in bits/s/Hz.
pub fn achievable_rate(snr: f64) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::NegativeSnr(snr));
    }
    Ok((1.0 + snr).log2())
}

/// Received power (dB) through one IRS including the current fading.
pub fn rssi_db(
    bs: &Position,
    irs: &Position,
    rx: &Position,
    g_bs_irs: f64,
    g_irs_rx: f64,
    params: &ChannelParams,
) -> f64 {
    params.mean_received_db(bs, irs, rx) + 10.0 * (g_bs_irs * g_irs_rx).log10()
}

/// `max(0, r_main - r_eve)`.
pub fn secrecy_rate(r_main: f64, r_eve: f64) -> f64 {
    (r_main - r_eve).max(0.0)
}

/// Secrecy rate against the strongest of several non-colluding eavesdroppers.
pub fn secrecy_rate_multi(r_main: f64, r_eves: impl IntoIterator<Item = f64>) -> f64 {
    let worst = r_eves.into_iter().fold(0.0_f64, f64::max);
    secrecy_rate(r_main, worst)
}
