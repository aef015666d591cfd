//! Experiment description, loaded from TOML or taken from a built-in preset.

use std::fmt;
use std::path::Path;

use afdm_core::{AfdmConfig64, AfdmParams64, PriorParams, SblOptions64};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::metrics::RmseKind;

/// Largest target count the exhaustive estimate/truth pairing accepts.
pub const MAX_TARGETS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Offgrid,
    Ongrid,
    IntegerCs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Offgrid => "offgrid",
            Method::Ongrid => "ongrid",
            Method::IntegerCs => "integer_cs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    pub delta_f_hz: f64,
    pub f_c_hz: f64,
    pub alpha_max: usize,
    pub ell_max: usize,
    pub k_v: usize,
    pub c2: f64,
    pub n_cpp: usize,
}

impl Default for SystemSpec {
    fn default() -> Self {
        let p = AfdmParams64::default();
        Self {
            n: p.n,
            delta_f_hz: p.delta_f,
            f_c_hz: p.f_c,
            alpha_max: p.alpha_max,
            ell_max: p.ell_max,
            k_v: p.k_v,
            c2: p.c2,
            n_cpp: p.n_cpp,
        }
    }
}

impl SystemSpec {
    pub fn config(&self) -> Result<AfdmConfig64> {
        Ok(AfdmParams64 {
            n: self.n,
            delta_f: self.delta_f_hz,
            f_c: self.f_c_hz,
            alpha_max: self.alpha_max,
            ell_max: self.ell_max,
            k_v: self.k_v,
            c2: self.c2,
            n_cpp: self.n_cpp,
        }
        .build()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalTarget {
    pub range_m: f64,
    pub velocity_mps: f64,
}

/// Fixed positions (fresh random gains each trial) or fully random targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Explicit {
        list: Vec<PhysicalTarget>,
    },
    Random {
        /// Target counts to sweep.
        counts: Vec<usize>,
        /// Minimum Doppler separation of two targets in one delay bin.
        #[serde(default = "default_gap")]
        min_doppler_gap: f64,
    },
}

fn default_gap() -> f64 {
    1.0
}

impl TargetSpec {
    pub fn counts(&self) -> Vec<usize> {
        match self {
            TargetSpec::Explicit { list } => vec![list.len()],
            TargetSpec::Random { counts, .. } => counts.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SblSpec {
    pub eps: f64,
    pub max_iter: usize,
    pub b: f64,
    pub d: f64,
    pub e: f64,
}

impl Default for SblSpec {
    fn default() -> Self {
        let o = SblOptions64::default();
        Self {
            eps: o.eps,
            max_iter: o.max_iter,
            b: o.prior.b,
            d: o.prior.d,
            e: o.prior.e,
        }
    }
}

impl SblSpec {
    pub fn options(&self) -> SblOptions64 {
        SblOptions64 {
            eps: self.eps,
            max_iter: self.max_iter,
            prior: PriorParams {
                b: self.b,
                d: self.d,
                e: self.e,
            },
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub system: SystemSpec,
    pub targets: TargetSpec,
    pub snr_db: Vec<f64>,
    pub r_k: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rmse: RmseKind,
    #[serde(default)]
    pub sbl: SblSpec,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let s = Self::from_toml(&text).map_err(|source| BenchError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario is always representable")
    }

    pub fn preset(name: &str) -> Result<Self> {
        let s = match name {
            "fig2" => Self::fig2(),
            "fig3" => Self::fig3(),
            "fig4" => Self::fig4(),
            other => return Err(BenchError::UnknownPreset(other.to_string())),
        };
        Ok(s)
    }

    /// Three fixed targets at 5 dB over three grid resolutions.
    pub fn fig2() -> Self {
        let t = |range_m, velocity_mps| PhysicalTarget { range_m, velocity_mps };
        Self {
            name: "fig2".into(),
            system: SystemSpec::default(),
            targets: TargetSpec::Explicit {
                list: vec![t(39.0, -13.68), t(78.0, 83.75), t(195.0, 28.36)],
            },
            snr_db: vec![5.0],
            r_k: vec![0.5, 0.3, 0.1],
            methods: all_methods(),
            trials: 200,
            seed: 2,
            rmse: RmseKind::default(),
            sbl: SblSpec::default(),
        }
    }

    /// SNR sweep with three random targets.
    pub fn fig3() -> Self {
        Self {
            name: "fig3".into(),
            system: SystemSpec::default(),
            targets: TargetSpec::Random {
                counts: vec![3],
                min_doppler_gap: default_gap(),
            },
            snr_db: (0..=6).map(|i| 2.5 * i as f64).collect(),
            r_k: vec![0.5, 0.1],
            methods: all_methods(),
            trials: 200,
            seed: 3,
            rmse: RmseKind::default(),
            sbl: SblSpec::default(),
        }
    }

    /// Target-count sweep at low and high SNR.
    pub fn fig4() -> Self {
        Self {
            name: "fig4".into(),
            system: SystemSpec::default(),
            targets: TargetSpec::Random {
                counts: (1..=5).collect(),
                min_doppler_gap: default_gap(),
            },
            snr_db: vec![0.0, 15.0],
            r_k: vec![0.1],
            methods: all_methods(),
            trials: 200,
            seed: 4,
            rmse: RmseKind::default(),
            sbl: SblSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Scenario(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.snr_db.is_empty() {
            return bad("empty SNR list");
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("SNR values must be numbers");
        }
        if self.r_k.is_empty() {
            return bad("empty r_k list");
        }
        if self.r_k.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("r_k values must lie in (0, 1]");
        }
        let counts = self.targets.counts();
        if counts.is_empty() {
            return bad("no target counts");
        }
        if counts.iter().any(|&p| p == 0 || p > MAX_TARGETS) {
            return Err(BenchError::Scenario(format!(
                "target counts must lie in 1..={MAX_TARGETS}"
            )));
        }
        let cfg = self.system.config()?;
        if let TargetSpec::Explicit { list } = &self.targets {
            for t in list {
                afdm_core::target_from_physical(t.range_m, t.velocity_mps, &cfg)?;
            }
        }
        if !(self.sbl.eps > 0.0) || self.sbl.max_iter == 0 {
            return bad("sbl.eps must be positive and sbl.max_iter at least 1");
        }
        Ok(())
    }
}

fn all_methods() -> Vec<Method> {
    vec![Method::Offgrid, Method::Ongrid, Method::IntegerCs]
}
