//! Crossbar operation counts and inference energy for a memristive accelerator.
//!
//! A layer's weight matrix is tiled into `xs × xs` crossbar blocks. A
//! convolution reuses each block at every one of its `d × d` output
//! positions, a fully connected layer uses each block once. Energy is the
//! total operation count times the per-operation energy `epx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{HpVector, ParamValue, SearchSpace};

/// Energy of one 16-bit 128×128 crossbar matrix-vector operation, in joules.
pub const DEFAULT_EPX: f64 = 44e-9;
pub const DEFAULT_XS: u64 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv {
        /// Output spatial dimension.
        d: u64,
        nc_in: u64,
        k: u64,
        nc_out: u64,
    },
    Fc {
        nf_in: u64,
        nf_out: u64,
    },
}

impl LayerSpec {
    pub fn conv(d: u64, nc_in: u64, k: u64, nc_out: u64) -> Self {
        LayerSpec::Conv { d, nc_in, k, nc_out }
    }

    pub fn fc(nf_in: u64, nf_out: u64) -> Self {
        LayerSpec::Fc { nf_in, nf_out }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv { d, nc_in, k, nc_out } => d > 0 && nc_in > 0 && k > 0 && nc_out > 0,
            LayerSpec::Fc { nf_in, nf_out } => nf_in > 0 && nf_out > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLayer {
                layer: format!("{self:?}"),
                message: "dimensions must be positive".into(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    /// Crossbar side length.
    pub xs: u64,
    /// Joules per crossbar operation.
    pub epx: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            xs: DEFAULT_XS,
            epx: DEFAULT_EPX,
        }
    }
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.xs == 0 || !(self.epx > 0.0 && self.epx.is_finite()) {
            return Err(Error::Config(format!(
                "hardware needs xs >= 1 and epx > 0 (got xs={}, epx={})",
                self.xs, self.epx
            )));
        }
        Ok(())
    }
}

/// Crossbar operations for a convolution: `d·d·⌈nc_in·k·k / xs⌉·⌈nc_out / xs⌉`.
pub fn conv_crossbars(d: u64, nc_in: u64, k: u64, nc_out: u64, hw: &HardwareConfig) -> u64 {
    d * d * (nc_in * k * k).div_ceil(hw.xs) * nc_out.div_ceil(hw.xs)
}

/// Crossbar operations for a fully connected layer: `⌈nf_in / xs⌉·⌈nf_out / xs⌉`.
pub fn fc_crossbars(nf_in: u64, nf_out: u64, hw: &HardwareConfig) -> u64 {
    nf_in.div_ceil(hw.xs) * nf_out.div_ceil(hw.xs)
}

pub fn layer_crossbars(layer: &LayerSpec, hw: &HardwareConfig) -> u64 {
    match *layer {
        LayerSpec::Conv { d, nc_in, k, nc_out } => conv_crossbars(d, nc_in, k, nc_out, hw),
        LayerSpec::Fc { nf_in, nf_out } => fc_crossbars(nf_in, nf_out, hw),
    }
}

/// Total crossbar operations per inference.
pub fn total_crossbars(layers: &[LayerSpec], hw: &HardwareConfig) -> u64 {
    let conv: u64 = layers
        .iter()
        .filter(|l| matches!(l, LayerSpec::Conv { .. }))
        .map(|l| layer_crossbars(l, hw))
        .sum();
    let fc: u64 = layers
        .iter()
        .filter(|l| matches!(l, LayerSpec::Fc { .. }))
        .map(|l| layer_crossbars(l, hw))
        .sum();
    conv + fc
}

/// Inference energy in joules.
pub fn total_energy(layers: &[LayerSpec], hw: &HardwareConfig) -> f64 {
    total_crossbars(layers, hw) as f64 * hw.epx
}

/// A layer dimension: either fixed in the template or read from a hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dim {
    Fixed(u64),
    Param(String),
}

impl Dim {
    fn resolve(&self, space: &SearchSpace, hp: &HpVector, what: &str) -> Result<u64> {
        match self {
            Dim::Fixed(v) => Ok(*v),
            Dim::Param(name) => {
                let idx = space
                    .param_index(name)
                    .ok_or_else(|| Error::UnknownHyperparameter(name.clone()))?;
                match space.value(hp, idx) {
                    ParamValue::Number(v) if *v >= 1.0 && v.fract() == 0.0 && *v < 1e15 => Ok(*v as u64),
                    other => Err(Error::InvalidLayer {
                        layer: what.to_string(),
                        message: format!("hyperparameter `{name}` = {other} is not a positive integer"),
                    }),
                }
            }
        }
    }

    fn param_name(&self) -> Option<&str> {
        match self {
            Dim::Param(name) => Some(name),
            Dim::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Padding {
    Amount(u64),
    /// Only `"same"` is accepted: `k / 2` on each side.
    Mode(String),
}

impl Default for Padding {
    fn default() -> Self {
        Padding::Amount(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pool {
    pub size: u64,
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvTemplate {
    pub out_channels: Dim,
    pub kernel: Dim,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub padding: Padding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<Pool>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcTemplate {
    /// Hidden widths; layer `i < count-1` outputs `hidden[i]`, the last outputs `classes`.
    pub hidden: Vec<Dim>,
}

/// Layer geometry of a network family with hyperparameter bindings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureTemplate {
    pub name: String,
    pub input_size: u64,
    pub input_channels: u64,
    pub classes: u64,
    /// Number of leading `conv` entries in use; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_count: Option<Dim>,
    /// Number of fully connected layers including the classifier; `hidden.len() + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_count: Option<Dim>,
    /// Pooling applied after the last active convolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_pool: Option<Pool>,
    pub conv: Vec<ConvTemplate>,
    pub fc: FcTemplate,
}

fn conv_out(input: u64, k: u64, stride: u64, pad: u64, layer: &str) -> Result<u64> {
    let padded = input + 2 * pad;
    if k > padded || stride == 0 {
        return Err(Error::InvalidLayer {
            layer: layer.to_string(),
            message: format!("kernel {k} does not fit padded input {padded} (stride {stride})"),
        });
    }
    Ok((padded - k) / stride + 1)
}

fn pool_out(input: u64, pool: &Pool, layer: &str) -> Result<u64> {
    if pool.size == 0 || pool.stride == 0 || pool.size > input {
        return Err(Error::InvalidLayer {
            layer: layer.to_string(),
            message: format!("pool {}x{} does not fit input {input}", pool.size, pool.stride),
        });
    }
    Ok((input - pool.size) / pool.stride + 1)
}

impl ArchitectureTemplate {
    pub fn parse(document: &str) -> Result<Self> {
        toml::from_str(document).map_err(|e| Error::Config(e.to_string()))
    }

    fn dims(&self) -> impl Iterator<Item = &Dim> {
        self.conv
            .iter()
            .flat_map(|c| [&c.out_channels, &c.kernel])
            .chain(self.fc.hidden.iter())
            .chain(self.conv_count.iter())
            .chain(self.fc_count.iter())
    }

    /// Names of every hyperparameter the template reads.
    pub fn referenced_params(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.dims().filter_map(Dim::param_name).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    /// Checks that every binding names a parameter of `space`.
    pub fn check_bindings(&self, space: &SearchSpace) -> Result<()> {
        for name in self.referenced_params() {
            if space.param_index(name).is_none() {
                return Err(Error::UnknownHyperparameter(name.to_string()));
            }
        }
        for conv in &self.conv {
            if let Padding::Mode(m) = &conv.padding {
                if m != "same" {
                    return Err(Error::Config(format!("unknown padding mode `{m}`")));
                }
            }
        }
        Ok(())
    }

    /// Expands the template for one grid point.
    pub fn layers(&self, space: &SearchSpace, hp: &HpVector) -> Result<Vec<LayerSpec>> {
        self.check_bindings(space)?;
        let conv_count = match &self.conv_count {
            Some(d) => d.resolve(space, hp, "conv_count")? as usize,
            None => self.conv.len(),
        };
        if conv_count > self.conv.len() {
            return Err(Error::Config(format!(
                "template `{}` defines {} conv layers, {conv_count} requested",
                self.name,
                self.conv.len()
            )));
        }
        let fc_count = match &self.fc_count {
            Some(d) => d.resolve(space, hp, "fc_count")? as usize,
            None => self.fc.hidden.len() + 1,
        };
        if fc_count == 0 || fc_count > self.fc.hidden.len() + 1 {
            return Err(Error::Config(format!(
                "template `{}` cannot build {fc_count} fc layers from {} hidden widths",
                self.name,
                self.fc.hidden.len()
            )));
        }

        let mut layers = Vec::with_capacity(conv_count + fc_count);
        let mut size = self.input_size;
        let mut channels = self.input_channels;
        for (i, conv) in self.conv.iter().take(conv_count).enumerate() {
            let label = format!("conv{}", i + 1);
            let k = conv.kernel.resolve(space, hp, &label)?;
            let out = conv.out_channels.resolve(space, hp, &label)?;
            let pad = match &conv.padding {
                Padding::Amount(p) => *p,
                Padding::Mode(_) => k / 2,
            };
            let d = conv_out(size, k, conv.stride, pad, &label)?;
            layers.push(LayerSpec::conv(d, channels, k, out));
            size = d;
            channels = out;
            if let Some(pool) = &conv.pool {
                size = pool_out(size, pool, &label)?;
            }
        }
        if let Some(pool) = &self.final_pool {
            size = pool_out(size, pool, "final pool")?;
        }

        let mut features = size * size * channels;
        for i in 0..fc_count {
            let label = format!("fc{}", i + 1);
            let width = if i + 1 == fc_count {
                self.classes
            } else {
                self.fc.hidden[i].resolve(space, hp, &label)?
            };
            layers.push(LayerSpec::fc(features, width));
            features = width;
        }
        for l in &layers {
            l.validate()?;
        }
        Ok(layers)
    }
}
