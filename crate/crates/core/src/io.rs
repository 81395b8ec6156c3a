//! Flat `key = value` run configuration and output headers.
//!
//! Times `t_cool`, `t_final` and `window` are in mechanical periods `τ_m`;
//! `dt` is in `1/ω_m`. Lists are comma separated. Lines starting with `#`
//! are comments.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::bath::{DrudeBath, ModeLabel, ModeParams};
use crate::config::{tau_m, SystemConfig, TimeGrid};
use crate::control::{Basis, OptimizeOptions};
use crate::error::{Error, Result};
use crate::scenario::{Regime, RegimeKind, SweepSpec};

/// Every key accepted by [`RunConfig::parse`], with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("omega_mech", "1"),
    ("omega_opt", "1"),
    ("gamma", "1e-6"),
    ("kappa", "1e-4"),
    ("cutoff_mech", "100"),
    ("cutoff_opt", "100"),
    ("n_T", "100"),
    ("n_c", "0"),
    ("bath_n_mech", ""),
    ("bath_n_opt", ""),
    ("dt", ""),
    ("t_cool", "0.55"),
    ("t_final", ""),
    ("g_max", "5"),
    ("g_const", "0"),
    ("basis", "piecewise_linear"),
    ("knots", "64"),
    ("n_starts", "4"),
    ("max_iters", "200"),
    ("tol", "1e-10"),
    ("sample_stride", "1"),
    ("window", "50"),
    ("maintain_g_max", "0.1"),
    ("maintain_knots", "16"),
    ("markovian_cutoff", "100"),
    ("non_markovian_cutoff", "1"),
    ("gamma_list", "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1"),
    ("kappa_list", "1e-4"),
    ("t_cool_list", "0.55"),
    ("memory_horizon", ""),
    ("omega_max_factor", "50"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses the text form. With `strict`, unknown keys are rejected;
    /// otherwise they are ignored. Repeated keys are always an error.
    pub fn parse(text: &str, strict: bool) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut seen = std::collections::BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !values.contains_key(k) {
                if strict {
                    return Err(Error::Parse(format!("line {}: unknown key `{k}`", n + 1)));
                }
                continue;
            }
            if !seen.insert(k.to_string()) {
                return Err(Error::Parse(format!("line {}: key `{k}` repeated", n + 1)));
            }
            values.insert(k.to_string(), v.to_string());
        }
        let cfg = RunConfig { values };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn defaults() -> Self {
        Self::parse("", true).expect("defaults parse")
    }

    /// Sets one key, validating its value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let slot = self
            .values
            .get_mut(key)
            .ok_or_else(|| Error::Parse(format!("unknown key `{key}`")))?;
        *slot = value.to_string();
        self.check()
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Parse(format!("key `{key}`: expected a number, got `{v}`")))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.raw(key);
        v.parse::<usize>()
            .map_err(|_| Error::Parse(format!("key `{key}`: expected a non-negative integer, got `{v}`")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse(format!("key `{key}`: bad list entry `{s}`")))
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        for (k, _) in KEYS {
            match *k {
                "basis" => {
                    self.basis()?;
                }
                "knots" | "n_starts" | "max_iters" | "sample_stride" | "maintain_knots" => {
                    self.usize(k)?;
                }
                "gamma_list" | "kappa_list" | "t_cool_list" => {
                    self.list(k)?;
                }
                _ => {
                    self.opt_f64(k)?;
                }
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<Basis> {
        Basis::from_name(self.raw("basis"), self.usize("knots")?)
    }

    /// Period-valued key converted to `1/ω_m` units.
    pub fn time(&self, key: &str) -> Result<f64> {
        Ok(self.f64(key)? * tau_m::<f64>())
    }

    /// System configuration over `[0, t_final]` (`1/ω_m` units).
    pub fn system(&self, t_final: f64) -> Result<SystemConfig<f64>> {
        let n_t = self.f64("n_T")?;
        let n_c = self.f64("n_c")?;
        let mech = ModeParams::new(ModeLabel::Mechanical, self.f64("omega_mech")?)?;
        let opt = ModeParams::new(ModeLabel::Optical, self.f64("omega_opt")?)?;
        let mech_bath = DrudeBath::new(
            self.f64("gamma")?,
            self.f64("cutoff_mech")?,
            self.opt_f64("bath_n_mech")?.unwrap_or(n_t),
        )?;
        let opt_bath = DrudeBath::new(
            self.f64("kappa")?,
            self.f64("cutoff_opt")?,
            self.opt_f64("bath_n_opt")?.unwrap_or(n_c),
        )?;
        let mut cfg = SystemConfig::new(mech, opt, mech_bath, opt_bath, n_t, n_c, t_final)?;
        if let Some(dt) = self.opt_f64("dt")? {
            cfg = cfg.with_grid(TimeGrid::covering(t_final, dt)?);
        }
        cfg.numerics.memory_horizon = self.opt_f64("memory_horizon")?;
        cfg.numerics.omega_max_factor = self.f64("omega_max_factor")?;
        Ok(cfg)
    }

    pub fn optimize_options(&self, seed: u64) -> Result<OptimizeOptions> {
        let o = OptimizeOptions {
            n_starts: self.usize("n_starts")?,
            max_iters: self.usize("max_iters")?,
            tol: self.f64("tol")?,
            seed,
            g_max: self.f64("g_max")?,
            basis: self.basis()?,
            ..OptimizeOptions::default()
        };
        o.validate()?;
        Ok(o)
    }

    pub fn regimes(&self) -> Result<(Regime, Regime)> {
        Ok((
            Regime::new(RegimeKind::Markovian, self.f64("markovian_cutoff")?)?,
            Regime::new(RegimeKind::NonMarkovian, self.f64("non_markovian_cutoff")?)?,
        ))
    }

    pub fn sweep(&self, seed: u64) -> Result<SweepSpec> {
        let (markovian, non_markovian) = self.regimes()?;
        let tau = tau_m::<f64>();
        Ok(SweepSpec {
            gamma_list: self.list("gamma_list")?,
            kappa_list: self.list("kappa_list")?,
            t_cool_list: self.list("t_cool_list")?.into_iter().map(|t| t * tau).collect(),
            n_t: self.f64("n_T")?,
            n_c: self.f64("n_c")?,
            options: self.optimize_options(seed)?,
            markovian,
            non_markovian,
        })
    }

    /// All keys with their effective values, one `key = value` per line in
    /// sorted order.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Comment header placed at the top of every output file.
    pub fn header(&self, seed: u64) -> String {
        format!(
            "# optocool {} config-sha256 {} seed {}\n",
            env!("CARGO_PKG_VERSION"),
            self.hash(),
            seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_system() {
        let c = RunConfig::defaults();
        let s = c.system(c.time("t_cool").unwrap()).unwrap();
        assert_eq!(s.mech_bath.occupation, 100.0);
        assert_eq!(s.opt_bath.cutoff, 100.0);
        assert_eq!(s.grid.n_steps, 173);
        assert_eq!(c.optimize_options(3).unwrap().seed, 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse("gamma = 1e-3\ngamam = 2\n", true).unwrap_err();
        assert!(e.to_string().contains("gamam"), "{e}");
        assert!(RunConfig::parse("gamam = 2\n", false).is_ok());
    }

    #[test]
    fn bad_value_is_named() {
        let e = RunConfig::parse("kappa = fast\n", true).unwrap_err();
        assert!(e.to_string().contains("kappa"), "{e}");
        let e = RunConfig::parse("knots = -3\n", true).unwrap_err();
        assert!(e.to_string().contains("knots"), "{e}");
    }

    #[test]
    fn repeated_key_rejected() {
        assert!(RunConfig::parse("n_T = 1\nn_T = 2\n", true).is_err());
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = RunConfig::parse("gamma = 1e-3  # comment\n", true).unwrap();
        let b = RunConfig::parse("\n# header\ngamma=1e-3\n", true).unwrap();
        let c = RunConfig::parse("gamma = 1e-2\n", true).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert!(a.header(0).starts_with("# optocool "));
    }

    #[test]
    fn explicit_step_and_bath_occupation() {
        let c = RunConfig::parse("dt = 0.01\nbath_n_mech = 1\nt_final = 2\n", true).unwrap();
        let s = c.system(c.time("t_final").unwrap()).unwrap();
        assert!(s.grid.dt <= 0.01);
        assert_eq!(s.mech_bath.occupation, 1.0);
        assert_eq!(s.n_t, 100.0);
    }
}
