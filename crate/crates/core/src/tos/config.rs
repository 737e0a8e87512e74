use std::path::Path;
use std::str::FromStr;

use crate::bloom::{sizing, BloomParams};
use crate::knn::{NumericField, SchemeParams};
use crate::trs::DEFAULT_PATH_CAP;

use super::TosError;

/// Server settings, read from `key = value` lines. `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerConfig {
    pub port: u16,
    /// Seconds between automatic epoch rotations; 0 disables them.
    pub epoch_period: u64,
    /// Bloom filter length; derived from `max_items` and `fpp` when unset.
    pub m: Option<usize>,
    pub alpha: Option<usize>,
    pub max_items: usize,
    pub fpp: f64,
    pub k: usize,
    pub ell: usize,
    pub capacity_default: u32,
    pub p_max: usize,
    pub tokens_per_bundle: usize,
    pub regenerate_keys_on_rotate: bool,
    pub seed: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 7878,
            epoch_period: 86_400,
            m: None,
            alpha: None,
            max_items: 60,
            fpp: 0.01,
            k: 11,
            ell: 25,
            capacity_default: 3,
            p_max: DEFAULT_PATH_CAP,
            tokens_per_bundle: 32,
            regenerate_keys_on_rotate: false,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, TosError> {
    value.parse().map_err(|_| TosError::Config(format!("bad value for {key}: {value}")))
}

impl ServerConfig {
    pub fn parse(text: &str) -> Result<Self, TosError> {
        let mut c = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| TosError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "port" => c.port = parse(key, value)?,
                "epoch_period" => c.epoch_period = parse(key, value)?,
                "m" => c.m = Some(parse(key, value)?),
                "alpha" => c.alpha = Some(parse(key, value)?),
                "max_items" => c.max_items = parse(key, value)?,
                "fpp" => c.fpp = parse(key, value)?,
                "k" => c.k = parse(key, value)?,
                "ell" => c.ell = parse(key, value)?,
                "capacity_default" => c.capacity_default = parse(key, value)?,
                "p_max" => c.p_max = parse(key, value)?,
                "tokens_per_bundle" => c.tokens_per_bundle = parse(key, value)?,
                "regenerate_keys_on_rotate" => c.regenerate_keys_on_rotate = parse(key, value)?,
                "seed" => c.seed = parse(key, value)?,
                _ => return Err(TosError::Config(format!("unknown key {key}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, TosError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("port = {}", self.port),
            format!("epoch_period = {}", self.epoch_period),
        ];
        if let Some(m) = self.m {
            lines.push(format!("m = {m}"));
        }
        if let Some(a) = self.alpha {
            lines.push(format!("alpha = {a}"));
        }
        lines.extend([
            format!("max_items = {}", self.max_items),
            format!("fpp = {}", self.fpp),
            format!("k = {}", self.k),
            format!("ell = {}", self.ell),
            format!("capacity_default = {}", self.capacity_default),
            format!("p_max = {}", self.p_max),
            format!("tokens_per_bundle = {}", self.tokens_per_bundle),
            format!("regenerate_keys_on_rotate = {}", self.regenerate_keys_on_rotate),
            format!("seed = {}", self.seed),
        ]);
        lines.join("\n") + "\n"
    }

    pub fn bloom(&self) -> Result<BloomParams, TosError> {
        let sized = sizing(self.max_items, self.fpp)?;
        let m = self.m.unwrap_or(sized.m);
        let alpha = self.alpha.unwrap_or(if self.m.is_some() {
            ((m as f64 / self.max_items as f64) * std::f64::consts::LN_2).ceil() as usize
        } else {
            sized.alpha
        });
        Ok(BloomParams { m, alpha })
    }

    pub fn scheme_params(&self) -> Result<SchemeParams, TosError> {
        let p = SchemeParams { m: self.bloom()?.m, k: self.k, ell: self.ell, numeric: NumericField::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TosError> {
        let bloom = self.bloom()?;
        if bloom.alpha == 0 || bloom.alpha > bloom.m {
            return Err(TosError::Config(format!("alpha {} invalid for m {}", bloom.alpha, bloom.m)));
        }
        if bloom.m < crate::bloom::NRS_TIME_SLOTS {
            return Err(TosError::Config("m must hold the 48 time slots".into()));
        }
        if self.p_max == 0 || self.tokens_per_bundle == 0 {
            return Err(TosError::Config("p_max and tokens_per_bundle must be positive".into()));
        }
        self.scheme_params().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let c = ServerConfig::parse("port = 9000\n# comment\nm = 2048 # fixed size\nk=11\n").unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.bloom().unwrap(), BloomParams { m: 2048, alpha: 24 });
        assert_eq!(ServerConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(ServerConfig::default().bloom().unwrap(), BloomParams { m: 576, alpha: 7 });
    }

    #[test]
    fn errors() {
        assert!(ServerConfig::parse("colour = red").is_err());
        assert!(ServerConfig::parse("port").is_err());
        assert!(ServerConfig::parse("port = x").is_err());
        assert!(ServerConfig::parse("m = 16").is_err());
    }
}
