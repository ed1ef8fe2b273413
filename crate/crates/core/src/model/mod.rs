//! Flow models under one differentiable contract.
//!
//! | kind | prediction |
//! |------|------------|
//! | `M`   | homogeneous (no-slip) choke flow through a linear area `c_d a_max u/100` |
//! | `M*`  | process structure: slip and equal-percentage area, parameters unknown |
//! | `D`   | neural network on the six measured inputs |
//! | `H-E` | `M` plus an additive network correction |
//! | `H-A` | `M` with its area multiplied by a positive network output |
//!
//! Every trainable parameter sits in one [`ParamVector`]: the physical
//! parameters first, then the network weights.

mod checkpoint;
mod params;

pub use checkpoint::{checkpoint, restore, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use params::{Bounds, ParamGroup, ParamSpec, ParamVector, Prior};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::choke::FluidSpec;
use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::nn::{self, Mlp, NetSpec, Scratch};
use crate::process::{unit_flow_response, Inputs, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "M*")]
    MechOracle,
    #[serde(rename = "M")]
    MechPlain,
    #[serde(rename = "H-A")]
    HybridArea,
    #[serde(rename = "H-E")]
    HybridError,
    #[serde(rename = "D")]
    DataDriven,
}

impl ModelKind {
    /// Report column order.
    pub const ALL: [ModelKind; 5] = [
        ModelKind::MechOracle,
        ModelKind::MechPlain,
        ModelKind::HybridArea,
        ModelKind::HybridError,
        ModelKind::DataDriven,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::MechOracle => "M*",
            ModelKind::MechPlain => "M",
            ModelKind::HybridArea => "H-A",
            ModelKind::HybridError => "H-E",
            ModelKind::DataDriven => "D",
        }
    }

    pub fn has_network(&self) -> bool {
        matches!(self, ModelKind::DataDriven | ModelKind::HybridError | ModelKind::HybridArea)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "m*" | "mstar" | "mechoracle" => Ok(ModelKind::MechOracle),
            "m" | "mechplain" => Ok(ModelKind::MechPlain),
            "d" | "datadriven" => Ok(ModelKind::DataDriven),
            "he" | "hybriderror" => Ok(ModelKind::HybridError),
            "ha" | "hybridarea" => Ok(ModelKind::HybridArea),
            _ => Err(Error::Config(format!("unknown model `{s}` (expected M*, M, H-A, H-E or D)"))),
        }
    }
}

/// Which physical parameters of `M` (and the hybrids built on it) are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechVariant {
    /// `c_d` and `a_max`.
    #[default]
    Full,
    /// `c_d` only; `a_max` fixed at its prior mean.
    DischargeOnly,
}

/// What every model shares with the process: fluid constants and the
/// reporting unit of flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub fluid: FluidSpec,
    pub flow_unit_scale: f64,
    #[serde(default)]
    pub mech: MechVariant,
}

impl ModelSetup {
    pub fn for_process(process: &ProcessSpec) -> Self {
        ModelSetup { fluid: *process.fluid(), flow_unit_scale: process.flow_unit_scale(), mech: MechVariant::Full }
    }
}

impl Default for ModelSetup {
    fn default() -> Self {
        Self::for_process(&ProcessSpec::calibrated())
    }
}

const M_CD_PRIOR: Prior = Prior::new(0.84, 0.1);
const M_AMAX_PRIOR: Prior = Prior::new(5e-4, 2e-4);
const MSTAR_CD_PRIOR: Prior = Prior::new(0.7, 0.2);
const MSTAR_AMAX_PRIOR: Prior = Prior::new(4e-4, 2e-4);
const MSTAR_R_PRIOR: Prior = Prior::new(30.0, 20.0);
const NET_PRIOR: Prior = Prior::new(0.0, 10.0);
const CD_BOUNDS: Bounds = Bounds { lo: 0.05, hi: 2.0 };
const AMAX_BOUNDS: Bounds = Bounds { lo: 1e-6, hi: 1e-2 };
const R_BOUNDS: Bounds = Bounds { lo: 1.01, hi: 1000.0 };

/// `softplus(HA_HEAD_BIAS) = 1`.
pub const HA_HEAD_BIAS: f64 = 0.541_324_854_612_918_1;

fn physical(name: &str, prior: Prior, bounds: Bounds) -> ParamSpec {
    ParamSpec { name: name.into(), prior, bounds: Some(bounds), group: ParamGroup::Physical, step_scale: prior.std }
}

fn network_specs(spec: &NetSpec) -> Vec<ParamSpec> {
    let mut out = Vec::with_capacity(spec.param_count());
    for (l, w) in spec.layer_sizes.windows(2).enumerate() {
        for i in 0..w[1] {
            for j in 0..w[0] {
                out.push(format!("net.{l}.w{i}_{j}"));
            }
        }
        for i in 0..w[1] {
            out.push(format!("net.{l}.b{i}"));
        }
    }
    out.into_iter()
        .map(|name| ParamSpec { name, prior: NET_PRIOR, bounds: None, group: ParamGroup::Network, step_scale: 1.0 })
        .collect()
}

/// Input standardization and output affine map of the network head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub input_mean: [f64; 6],
    pub input_std: [f64; 6],
    pub output_offset: f64,
    pub output_scale: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling { input_mean: [0.0; 6], input_std: [1.0; 6], output_offset: 0.0, output_scale: 1.0 }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn usable_std(std: f64, mean: f64) -> f64 {
    if std > 1e-9 * mean.abs().max(1.0) {
        std
    } else {
        1.0
    }
}

impl Scaling {
    /// Statistics of a training sample. Constant features keep unit scale.
    pub fn fit(rows: &[Observation]) -> Self {
        let mut s = Scaling::default();
        if rows.is_empty() {
            return s;
        }
        for k in 0..6 {
            let (m, sd) = mean_std(rows.iter().map(|o| o.inputs().to_array()[k]));
            s.input_mean[k] = m;
            s.input_std[k] = usable_std(sd, m);
        }
        let (m, sd) = mean_std(rows.iter().map(|o| o.y));
        s.output_offset = m;
        s.output_scale = if sd > 1e-9 * m.abs().max(1.0) { sd } else { m.abs().max(1.0) };
        s
    }

    fn standardize(&self, x: &Inputs) -> [f64; 6] {
        let a = x.to_array();
        std::array::from_fn(|k| (a[k] - self.input_mean[k]) / self.input_std[k])
    }
}

/// Per-observation quantities that do not depend on trainable parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub x_std: [f64; 6],
    pub u_frac: f64,
    /// Flow per unit effective area in reporting units.
    pub response: f64,
}

/// Reusable evaluation buffers.
#[derive(Debug, Clone)]
pub struct ModelScratch {
    net: Option<Scratch>,
}

#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    setup: ModelSetup,
    params: ParamVector,
    net_spec: Option<NetSpec>,
    mlp: Option<Mlp>,
    n_phys: usize,
    scaling: Scaling,
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Builds a model at its initial parameters: physical parameters at their
/// prior means, networks from `net_spec`'s seed.
pub fn build(kind: ModelKind, setup: &ModelSetup, net_spec: Option<&NetSpec>) -> Result<Model> {
    setup.fluid.validate()?;
    let mut specs = Vec::new();
    match kind {
        ModelKind::MechOracle => {
            specs.push(physical("c_d", MSTAR_CD_PRIOR, CD_BOUNDS));
            specs.push(physical("a_max", MSTAR_AMAX_PRIOR, AMAX_BOUNDS));
            specs.push(physical("rangeability", MSTAR_R_PRIOR, R_BOUNDS));
        }
        ModelKind::MechPlain | ModelKind::HybridError | ModelKind::HybridArea => {
            specs.push(physical("c_d", M_CD_PRIOR, CD_BOUNDS));
            if setup.mech == MechVariant::Full {
                specs.push(physical("a_max", M_AMAX_PRIOR, AMAX_BOUNDS));
            }
        }
        ModelKind::DataDriven => {}
    }
    let n_phys = specs.len();
    let mut values: Vec<f64> = specs.iter().map(|s| s.prior.mean).collect();

    let (net_spec, mlp) = if kind.has_network() {
        let spec = net_spec.ok_or_else(|| Error::Config(format!("model {kind} requires a network specification")))?;
        if spec.input_width() != Inputs::DIM {
            return Err(Error::Dimension { expected: Inputs::DIM, got: spec.input_width() });
        }
        let mlp = Mlp::new(spec)?;
        let mut weights = nn::init(spec)?.flat;
        match kind {
            ModelKind::HybridError => {
                weights[mlp.output_weight_range()].iter_mut().for_each(|w| *w = 0.0);
            }
            ModelKind::HybridArea => {
                weights[mlp.output_weight_range()].iter_mut().for_each(|w| *w = 0.0);
                weights[mlp.output_bias_index()] = HA_HEAD_BIAS;
            }
            _ => {}
        }
        specs.extend(network_specs(spec));
        values.extend(weights);
        (Some(spec.clone()), Some(mlp))
    } else {
        (None, None)
    };

    Ok(Model {
        kind,
        setup: *setup,
        params: ParamVector::new(values, specs)?,
        net_spec,
        mlp,
        n_phys,
        scaling: Scaling::default(),
    })
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn setup(&self) -> &ModelSetup {
        &self.setup
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn net_spec(&self) -> Option<&NetSpec> {
        self.net_spec.as_ref()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_physical(&self) -> usize {
        self.n_phys
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn set_scaling(&mut self, scaling: Scaling) {
        self.scaling = scaling;
    }

    /// Refits input standardization and output scale on training rows.
    pub fn fit_scaling(&mut self, rows: &[Observation]) {
        if self.kind.has_network() {
            self.scaling = Scaling::fit(rows);
        }
    }

    pub fn scratch(&self) -> ModelScratch {
        ModelScratch { net: self.mlp.as_ref().map(Mlp::scratch) }
    }

    fn uses_slip(&self) -> bool {
        self.kind == ModelKind::MechOracle
    }

    pub fn features(&self, x: &Inputs) -> Result<Features> {
        let response = unit_flow_response(x, &self.setup.fluid, self.uses_slip(), self.setup.flow_unit_scale)?;
        Ok(Features { x_std: self.scaling.standardize(x), u_frac: x.u_pct / 100.0, response })
    }

    fn a_max(&self) -> f64 {
        if self.n_phys >= 2 {
            self.params.values[1]
        } else {
            M_AMAX_PRIOR.mean
        }
    }

    /// Linear-area physics: prediction and its gradient w.r.t. `(c_d, a_max)`.
    fn mech_linear(&self, f: &Features) -> (f64, [f64; 2]) {
        let c_d = self.params.values[0];
        let a_max = self.a_max();
        let base = f.u_frac * f.response;
        (c_d * a_max * base, [a_max * base, c_d * base])
    }

    fn net_output(&self, f: &Features, scratch: &mut ModelScratch) -> f64 {
        let mlp = self.mlp.as_ref().expect("network model");
        let s = scratch.net.as_mut().expect("network scratch");
        mlp.forward_with(&self.params.values[self.n_phys..], &f.x_std, s)
    }

    pub fn predict_features(&self, f: &Features, scratch: &mut ModelScratch) -> f64 {
        match self.kind {
            ModelKind::MechPlain => self.mech_linear(f).0,
            ModelKind::MechOracle => {
                let v = &self.params.values;
                let (c_d, a_max, r) = (v[0], v[1], v[2]);
                c_d * a_max * (r.powf(f.u_frac) - 1.0) / (r - 1.0) * f.response
            }
            ModelKind::DataDriven => {
                self.scaling.output_offset + self.scaling.output_scale * self.net_output(f, scratch)
            }
            ModelKind::HybridError => self.mech_linear(f).0 + self.scaling.output_scale * self.net_output(f, scratch),
            ModelKind::HybridArea => self.mech_linear(f).0 * softplus(self.net_output(f, scratch)),
        }
    }

    /// Adds `weight * ∂ŷ/∂φ` into `grad` and returns `ŷ`.
    pub fn accumulate_gradient(&self, f: &Features, scratch: &mut ModelScratch, weight: f64, grad: &mut [f64]) -> f64 {
        self.backprop(f, scratch, grad, |_| weight)
    }

    /// Like [`Model::accumulate_gradient`], with the weight computed from
    /// `ŷ` (one forward pass instead of two).
    pub fn backprop(
        &self,
        f: &Features,
        scratch: &mut ModelScratch,
        grad: &mut [f64],
        weight_of: impl FnOnce(f64) -> f64,
    ) -> f64 {
        debug_assert_eq!(grad.len(), self.params.len());
        let np = self.n_phys;
        let net_backward = |d_out: f64, scratch: &mut ModelScratch, grad: &mut [f64]| {
            let mlp = self.mlp.as_ref().expect("network model");
            let s = scratch.net.as_mut().expect("network scratch");
            mlp.backward_with(&self.params.values[np..], &f.x_std, s, d_out, &mut grad[np..], None);
        };
        match self.kind {
            ModelKind::MechPlain => {
                let (y, g) = self.mech_linear(f);
                let w = weight_of(y);
                for (dst, src) in grad.iter_mut().zip(g.iter().take(np)) {
                    *dst += w * src;
                }
                y
            }
            ModelKind::MechOracle => {
                let v = &self.params.values;
                let (c_d, a_max, r) = (v[0], v[1], v[2]);
                let s = f.u_frac;
                let rs = r.powf(s);
                let shape = (rs - 1.0) / (r - 1.0);
                let d_shape = (s * rs / r * (r - 1.0) - (rs - 1.0)) / ((r - 1.0) * (r - 1.0));
                let y = c_d * a_max * shape * f.response;
                let w = weight_of(y);
                grad[0] += w * a_max * shape * f.response;
                grad[1] += w * c_d * shape * f.response;
                grad[2] += w * c_d * a_max * d_shape * f.response;
                y
            }
            ModelKind::DataDriven => {
                let z = self.net_output(f, scratch);
                let y = self.scaling.output_offset + self.scaling.output_scale * z;
                net_backward(weight_of(y) * self.scaling.output_scale, scratch, grad);
                y
            }
            ModelKind::HybridError => {
                let (ym, g) = self.mech_linear(f);
                let z = self.net_output(f, scratch);
                let y = ym + self.scaling.output_scale * z;
                let w = weight_of(y);
                for (dst, src) in grad.iter_mut().zip(g.iter().take(np)) {
                    *dst += w * src;
                }
                net_backward(w * self.scaling.output_scale, scratch, grad);
                y
            }
            ModelKind::HybridArea => {
                let (ym, g) = self.mech_linear(f);
                let z = self.net_output(f, scratch);
                let m = softplus(z);
                let y = ym * m;
                let w = weight_of(y);
                for (dst, src) in grad.iter_mut().zip(g.iter().take(np)) {
                    *dst += w * src * m;
                }
                net_backward(w * ym * sigmoid(z), scratch, grad);
                y
            }
        }
    }

    pub fn predict(&self, x: &Inputs) -> Result<f64> {
        let f = self.features(x)?;
        Ok(self.predict_features(&f, &mut self.scratch()))
    }

    /// `∂ŷ/∂φ` in parameter-vector order.
    pub fn predict_gradient(&self, x: &Inputs) -> Result<Vec<f64>> {
        let f = self.features(x)?;
        let mut g = vec![0.0; self.params.len()];
        self.accumulate_gradient(&f, &mut self.scratch(), 1.0, &mut g);
        Ok(g)
    }

    /// Raw network output for the H-A area multiplier, before softplus.
    pub fn network_output(&self, x: &Inputs) -> Result<Option<f64>> {
        if self.mlp.is_none() {
            return Ok(None);
        }
        let f = self.features(x)?;
        Ok(Some(self.net_output(&f, &mut self.scratch())))
    }
}
