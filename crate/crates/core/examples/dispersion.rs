//! Dispersive broadening of the time bins in standard fiber, and where it
//! starts to exceed the detector jitter.

use tbq::sim::{dispersion_broadened_width, dispersion_onset_km, ChannelModel, DetectorModel};

fn main() {
    let pulse_fwhm_ps = 5.0;
    let jitter = DetectorModel::default().jitter_fwhm_ps;
    for km in [0.0, 1.0, 5.0, 10.0, 25.0, 50.0, 100.0] {
        let ch = ChannelModel {
            fiber_km: km,
            ..ChannelModel::lossless()
        };
        println!("{km:>6} km  pulse FWHM {:>8.2} ps", dispersion_broadened_width(pulse_fwhm_ps, &ch));
    }
    let onset = dispersion_onset_km(pulse_fwhm_ps, ChannelModel::SMF_BETA2_PS2_PER_KM, jitter);
    println!("broadening reaches the {jitter} ps jitter after {onset:.2} km");
}
