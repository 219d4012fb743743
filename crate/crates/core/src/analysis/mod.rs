//! Time-tag analysis: coincidences, joint temporal intensity, fringe fits,
//! CHSH, simulated scans and report writers.

mod chsh;
mod coincidence;
mod fringe;
pub mod report;
mod runs;

pub use chsh::{chsh_s, correlator, ChshResult, SettingCounts, CHSH_THETA_A, CHSH_THETA_B};
pub use coincidence::{
    coincidence_pairs, count_coincidences, histogram, jti, merge_sorted, CoincidenceHistogram,
    JtiMap,
};
pub use fringe::{fit_fringe, fit_fringe_power, FringeFit, HEATER_P_PI_MW};
pub use runs::{chsh_run, fringe_scan, phase_grid, port_pair_counts};

/// Default coincidence half-window (ps).
pub const DEFAULT_WINDOW_PS: i64 = 300;

/// Quantum information density `d^N / (Δt·Δν)` with `Δt = 2·bin_separation`
/// and `Δν = 2·bandwidth`.
pub fn info_density(d: u32, n: u32, bin_separation_s: f64, bandwidth_hz: f64) -> f64 {
    (d as f64).powi(n as i32) / (2.0 * bin_separation_s * 2.0 * bandwidth_hz)
}
