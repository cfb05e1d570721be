//! Learnable acoustic models.

mod bands;
mod directivity;
mod params;
mod reflection;
mod spline;

pub use bands::{BandInterp, Bands};
pub use directivity::{fibonacci_lattice, validate_rotation, DirectivityMap, LATTICE_POINTS};
pub use params::{
    transfer_surface, translate_source, ParamGroup, SceneGradient, SceneParams, CHECKPOINT_VERSION,
    DEFAULT_KNOT_VALUE,
};
pub use reflection::{reflection_response, SurfaceResponse};
pub use spline::{gamma_curve, gamma_curve_backward, gamma_weight, SPLINE_KNOTS};

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
