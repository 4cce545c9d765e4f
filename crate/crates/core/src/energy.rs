//! Sensing/transmission energy model and battery bookkeeping.
//!
//! Sensing costs `b * V_sup * I_sense * T_sense` and transmitting a packet
//! over `d` metres costs `b * E_elec + b * d^n * E_amp`. Currents and times
//! are converted from mA/ms to A/s; the packet size in kilobits enters the
//! sensing product as a plain multiplier and is expanded to bits for
//! transmission.

use crate::model::DeviceEnergyProfile;

/// Watt-hours per joule, rounded as the reference model publishes it.
pub const WH_PER_JOULE: f64 = 0.000277778;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EnergyAmount {
    joules: f64,
}

impl EnergyAmount {
    pub const ZERO: EnergyAmount = EnergyAmount { joules: 0.0 };

    /// Negative or NaN inputs clamp to zero.
    pub fn from_joules(joules: f64) -> Self {
        Self {
            joules: if joules > 0.0 { joules } else { 0.0 },
        }
    }

    pub fn joules(self) -> f64 {
        self.joules
    }
}

impl std::ops::Add for EnergyAmount {
    type Output = EnergyAmount;

    fn add(self, rhs: Self) -> Self {
        EnergyAmount {
            joules: self.joules + rhs.joules,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub residual_mah: f64,
    pub depleted: bool,
}

impl BatteryState {
    pub fn full(profile: &DeviceEnergyProfile) -> Self {
        Self::with_residual(profile, profile.battery_capacity_mah)
    }

    pub fn with_residual(profile: &DeviceEnergyProfile, residual_mah: f64) -> Self {
        Self {
            residual_mah,
            depleted: residual_mah <= profile.depletion_threshold_mah,
        }
    }
}

pub fn sense_energy(profile: &DeviceEnergyProfile) -> EnergyAmount {
    EnergyAmount::from_joules(
        profile.packet_kb
            * profile.supply_voltage_v
            * (profile.sense_current_ma * 1e-3)
            * (profile.sense_duration_ms * 1e-3),
    )
}

pub fn transmit_energy(profile: &DeviceEnergyProfile, distance_m: f64) -> EnergyAmount {
    let bits = profile.packet_kb * 1000.0;
    let electronics = bits * (profile.e_elec_nj_per_bit * 1e-9);
    let amplifier = bits
        * distance_m.powi(profile.loss_exponent_n as i32)
        * (profile.e_amp_pj_per_bit_m * 1e-12);
    EnergyAmount::from_joules(electronics + amplifier)
}

pub fn joules_to_mah(energy: EnergyAmount, voltage_v: f64) -> f64 {
    1000.0 * (energy.joules() * WH_PER_JOULE) / voltage_v
}

/// Removes `energy` from the battery, clamping at zero.
pub fn drain(state: BatteryState, profile: &DeviceEnergyProfile, energy: EnergyAmount) -> BatteryState {
    let spent = joules_to_mah(energy, profile.supply_voltage_v);
    let residual = (state.residual_mah - spent).max(0.0);
    BatteryState::with_residual(profile, residual)
}

/// Energy of one full sense-and-transmit request.
pub fn request_energy(profile: &DeviceEnergyProfile, distance_m: f64) -> EnergyAmount {
    sense_energy(profile) + transmit_energy(profile, distance_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifetime {
    Ticks(u64),
    /// Requests drain nothing, so the battery never reaches the threshold.
    Unbounded,
}

/// Closed-form lifetime of a device served only by periodic requests:
/// `interval * floor((capacity - threshold) / per_request_mah)`.
pub fn lifetime_closed_form(
    profile: &DeviceEnergyProfile,
    distance_m: f64,
    interval_ticks: u64,
) -> Lifetime {
    let per_request = joules_to_mah(request_energy(profile, distance_m), profile.supply_voltage_v);
    lifetime_for_drain(profile, per_request, interval_ticks)
}

/// Same as [`lifetime_closed_form`] for an arbitrary per-request drain.
pub fn lifetime_for_drain(
    profile: &DeviceEnergyProfile,
    per_request_mah: f64,
    interval_ticks: u64,
) -> Lifetime {
    if per_request_mah.is_nan() || per_request_mah <= 0.0 {
        return Lifetime::Unbounded;
    }
    let budget = (profile.battery_capacity_mah - profile.depletion_threshold_mah).max(0.0);
    let requests = (budget / per_request_mah).floor() as u64;
    Lifetime::Ticks(interval_ticks.saturating_mul(requests))
}
