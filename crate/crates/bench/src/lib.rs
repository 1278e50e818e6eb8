//! Shared inputs for the benchmarks.

use exposalign::eval::{synth_exposure, synth_scene, synth_warp};
use exposalign::{GrayImage, Motion};

/// A reference scene and a darker, rotated and shifted slave of it.
pub fn exposure_pair(size: usize, seed: u64) -> (GrayImage, GrayImage) {
    let reference = synth_scene(size, size, seed).expect("valid scene size");
    let darker = synth_exposure(&reference, -2.0).expect("valid exposure change");
    let slave = synth_warp(&darker, &Motion::from_degrees(5.0, 10.0, 30.0)).image;
    (reference, slave)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_is_darker_and_same_size() {
        let (r, s) = exposure_pair(64, 1);
        assert!(r.same_dims(&s));
        assert!(s.mean() < r.mean());
    }
}
