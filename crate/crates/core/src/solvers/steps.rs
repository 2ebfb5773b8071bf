//! Single multiplicative updates of the three reconstruction schemes.

use crate::array::{floored_div, CoeffStack, Image};
use crate::error::Result;
use crate::operators::{ConvKernel, ForwardModel};

use super::objective::check_shape;
use super::{tv, SolverConfig};

/// Denominator floor of the RLTV update; keeps `1 - gamma div(...)` positive.
pub const RLTV_DENOM_FLOOR: f64 = 0.1;

/// `g / model` under the division policy.
pub(crate) fn data_ratio(g: &Image, model: &Image, eps: f64) -> Result<Image> {
    g.div_floored(model, eps)
}

/// Richardson-Lucy: `f * H*{g / H f}`.
pub fn rl_step(g: &Image, h: &ConvKernel, f: &Image, cfg: &SolverConfig) -> Result<Image> {
    check_shape(f.shape(), g)?;
    rl_update(g, h, f, &h.conv_forward(f)?, cfg)
}

pub(crate) fn rl_update(g: &Image, h: &ConvKernel, f: &Image, hf: &Image, cfg: &SolverConfig) -> Result<Image> {
    let back = h.conv_adjoint(&data_ratio(g, hf, cfg.eps_div)?)?;
    f.mul(&back)
}

/// Sparse RL: `c * A*{g / A c} / (v + lambda)`.
pub fn srl_step(g: &Image, model: &ForwardModel, c: &CoeffStack, cfg: &SolverConfig) -> Result<CoeffStack> {
    check_shape(model.image_shape(), g)?;
    srl_update(g, model, c, &model.forward(c)?, cfg)
}

pub(crate) fn srl_update(g: &Image, model: &ForwardModel, c: &CoeffStack, ac: &Image, cfg: &SolverConfig) -> Result<CoeffStack> {
    let back = model.adjoint(&data_ratio(g, ac, cfg.eps_div)?)?;
    let data: Vec<f64> = c
        .as_slice()
        .iter()
        .zip(back.as_slice())
        .zip(model.column_sums().as_slice())
        .map(|((x, b), v)| floored_div(x * b, v + cfg.lambda, cfg.eps_div))
        .collect();
    CoeffStack::new(c.layout(), data)
}

/// RL with total-variation regularization:
/// `f / max(1 - gamma div(grad f / |grad f|), 0.1) * H*{g / H f}`.
pub fn rltv_step(g: &Image, h: &ConvKernel, f: &Image, cfg: &SolverConfig) -> Result<Image> {
    check_shape(f.shape(), g)?;
    rltv_update(g, h, f, &h.conv_forward(f)?, cfg)
}

pub(crate) fn rltv_update(g: &Image, h: &ConvKernel, f: &Image, hf: &Image, cfg: &SolverConfig) -> Result<Image> {
    let rl = rl_update(g, h, f, hf, cfg)?;
    if cfg.gamma_tv == 0.0 {
        return Ok(rl);
    }
    let curv = tv::curvature(f, cfg.eps_tv);
    let data = rl
        .as_slice()
        .iter()
        .zip(&curv)
        .map(|(x, k)| (x / (1.0 - cfg.gamma_tv * k).max(RLTV_DENOM_FLOOR)).max(0.0))
        .collect();
    Image::new(f.rows(), f.cols(), data)
}
