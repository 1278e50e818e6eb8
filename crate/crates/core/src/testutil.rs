use crate::eval::synth_scene;
use crate::image::FloatImage;

pub(crate) fn textured(width: usize, height: usize, seed: u64) -> FloatImage {
    synth_scene(width, height, seed).unwrap().to_float()
}
