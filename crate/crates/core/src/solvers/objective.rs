use crate::array::{CoeffStack, Image};
use crate::error::{Error, Result};
use crate::operators::{ConvKernel, ForwardModel};

pub(crate) fn check_shape(expected: (usize, usize), g: &Image) -> Result<()> {
    if expected != g.shape() {
        return Err(Error::ShapeMismatch {
            left: format!("{expected:?}"),
            right: format!("{:?}", g.shape()),
        });
    }
    Ok(())
}

/// `<g, log(model)>` with `0 log 0 = 0`; `None` when some `g > 0` meets a zero model value.
fn data_log_term(g: &Image, model: &Image) -> Option<f64> {
    let mut acc = 0.0;
    for (&y, &m) in g.as_slice().iter().zip(model.as_slice()) {
        if y == 0.0 {
            continue;
        }
        if m <= 0.0 {
            return None;
        }
        acc += y * m.ln();
    }
    Some(acc)
}

/// Negative Poisson log-likelihood (up to constants) of data `g` under model
/// intensity `model`: `<1, model> - <g, log model>`, `+inf` if infeasible.
pub(crate) fn poisson_energy(g: &Image, model: &Image) -> f64 {
    match data_log_term(g, model) {
        Some(log_term) => model.sum() - log_term,
        None => f64::INFINITY,
    }
}

/// `E(f) = <1, H f> - <g, log(H f)>`.
pub fn ml_objective(g: &Image, h: &ConvKernel, f: &Image) -> Result<f64> {
    check_shape(f.shape(), g)?;
    Ok(poisson_energy(g, &h.conv_forward(f)?))
}

/// `E(f) = ||f||_1 - <g, log(H f)>`; equals [`ml_objective`] for normalized `h`.
pub fn ml_objective_l1(g: &Image, h: &ConvKernel, f: &Image) -> Result<f64> {
    check_shape(f.shape(), g)?;
    Ok(match data_log_term(g, &h.conv_forward(f)?) {
        Some(log_term) => f.sum() - log_term,
        None => f64::INFINITY,
    })
}

/// `E(c) = <1, A c> - <g, log(A c)> + lambda ||c||_1`.
pub fn map_objective(g: &Image, model: &ForwardModel, c: &CoeffStack, lambda: f64) -> Result<f64> {
    check_shape(model.image_shape(), g)?;
    let ac = model.forward(c)?;
    Ok(poisson_energy(g, &ac) + lambda * c.l1_norm())
}

/// `E(c) = ||c||_{w,1} - <g, log(A c)>` with `w = v + lambda`.
pub fn map_objective_weighted(g: &Image, model: &ForwardModel, c: &CoeffStack, lambda: f64) -> Result<f64> {
    check_shape(model.image_shape(), g)?;
    let ac = model.forward(c)?;
    let weighted: f64 = model
        .column_sums()
        .as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(v, x)| (v + lambda) * x)
        .sum();
    Ok(match data_log_term(g, &ac) {
        Some(log_term) => weighted - log_term,
        None => f64::INFINITY,
    })
}

/// `grad E(c) = v - A*{g / A c} + lambda sign(c)` with `sign(0) = 0`.
///
/// The result is signed and shares the coefficient layout of `c`.
pub fn gradient_map(g: &Image, model: &ForwardModel, c: &CoeffStack, lambda: f64) -> Result<Vec<f64>> {
    check_shape(model.image_shape(), g)?;
    let ac = model.forward(c)?;
    let back = model.adjoint(&g.div(&ac)?)?;
    Ok(model
        .column_sums()
        .as_slice()
        .iter()
        .zip(back.as_slice())
        .zip(c.as_slice())
        .map(|((v, b), x)| v - b + if *x > 0.0 { lambda } else { 0.0 })
        .collect())
}
