//! Floating-point reference chain.

pub mod agc;
pub mod car;
pub mod chain;
pub mod hair_cell;
pub mod highpass;
pub mod params;

pub use agc::{agc_step, spatial_smooth, AgcCoeffs, AgcState, AGC_STAGES};
pub use car::{car_step, g_exact, transfer_at, CarState};
pub use chain::{carfac_sample, process_buffer, CarfacState, IhcState, Mode, OhcState};
pub use hair_cell::{ihc_exact, ohc_exact};
pub use highpass::{highpass_step, HighpassState};
pub use params::{
    design_carfac, erb_hz, erb_rate_to_hz, hz_to_erb_rate, CarCoeffs, CarfacCoeffs, CarfacParams,
    ChannelCoeffs, IhcCoeffs, OhcCoeffs,
};
