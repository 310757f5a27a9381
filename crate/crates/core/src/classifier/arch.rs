use std::fmt;

use crate::error::{GolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Conv { filters: usize, kernel: usize },
    MaxPool { size: usize },
    Dense { units: usize },
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Conv { filters, kernel } => write!(f, "conv{kernel}x{kernel}x{filters}"),
            Layer::MaxPool { size } => write!(f, "pool{size}"),
            Layer::Dense { units } => write!(f, "fc{units}"),
        }
    }
}

/// Input shape, hidden layers and class count. The softmax output layer of
/// width `classes` is implicit.
///
/// Text form: `WxHxC:layer,layer,...` with layers `convKxKxF`, `poolS`, `fcU`,
/// e.g. `32x32x1:conv5x5x8,pool2,conv5x5x16,pool2,fc64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub hidden: Vec<Layer>,
    pub classes: usize,
}

impl Architecture {
    /// 32x32 grayscale, two conv/pool stages and a 64-unit hidden layer.
    pub fn default_for(classes: usize) -> Self {
        Self {
            width: 32,
            height: 32,
            channels: 1,
            hidden: vec![
                Layer::Conv { filters: 8, kernel: 5 },
                Layer::MaxPool { size: 2 },
                Layer::Conv { filters: 16, kernel: 5 },
                Layer::MaxPool { size: 2 },
                Layer::Dense { units: 64 },
            ],
            classes,
        }
    }

    pub fn parse(text: &str, classes: usize) -> Result<Self> {
        let bad = |why: &str| GolError::config(format!("invalid architecture '{text}': {why}"));
        let (input, layers) = text.split_once(':').unwrap_or((text, ""));
        let dims: Vec<usize> = input
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("input must be WxHxC"))?;
        let [width, height, channels] = dims[..] else {
            return Err(bad("input must be WxHxC"));
        };
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(bad("input dimensions must be positive with 1 or 3 channels"));
        }
        let hidden = layers
            .split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| parse_layer(l).ok_or_else(|| bad(&format!("unknown layer '{l}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width,
            height,
            channels,
            hidden,
            classes,
        })
    }

    /// The text form without the class count.
    pub fn spec(&self) -> String {
        let layers: Vec<String> = self.hidden.iter().map(Layer::to_string).collect();
        format!("{}x{}x{}:{}", self.width, self.height, self.channels, layers.join(","))
    }
}

fn parse_layer(text: &str) -> Option<Layer> {
    if let Some(rest) = text.strip_prefix("conv") {
        let parts: Vec<usize> = rest.split('x').map(|p| p.parse().ok()).collect::<Option<_>>()?;
        match parts[..] {
            [k1, k2, filters] if k1 == k2 => Some(Layer::Conv { filters, kernel: k1 }),
            _ => None,
        }
    } else if let Some(rest) = text.strip_prefix("pool") {
        rest.parse().ok().map(|size| Layer::MaxPool { size })
    } else if let Some(rest) = text.strip_prefix("fc") {
        rest.parse().ok().map(|units| Layer::Dense { units })
    } else {
        None
    }
}
