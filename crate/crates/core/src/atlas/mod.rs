//! Figure generators: the `Y_c` dataset and its SVG/CSV companions, the
//! parameter-plane renderer of the set `X`, and the averaging probe.

mod probe;
mod xset;
mod yc;

pub use probe::{averaging_density_probe, ProbeEntry};
pub use xset::{
    classify_pixel, emit_xset_image, render_xset, Bounds, GridSpec, Palette, PixelClass, PixelOutcome,
    RenderConfig, XGrid, XsetManifest,
};
pub use yc::{build_yc, emit_yc_csv, emit_yc_figure, YcDataset, YcRow};
