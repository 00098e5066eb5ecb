//! Expansive dilations, anisotropic cubes and the periodic signal model.

mod cube;
mod dilation;
mod signal;

pub use cube::{cube_index, AnisoCube};
pub use dilation::{check_expansive, ExpansiveDilation, MatrixSpec, DEFAULT_MAX_SCALE};
pub(crate) use dilation::{mat_vec, spectral_norm};
pub use signal::{dilate_translate, dilate_translate_spectrum, fft_nd, Grid, SampledSignal, Spectrum};
