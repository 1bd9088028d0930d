//! Plain-text scenario configuration.
//!
//! One `key = value` per line; `#` starts a comment. Keys:
//!
//! | key | value | default |
//! |---|---|---|
//! | `case` | `narrow`, `rect`, `cos`, `cospow` | `rect` |
//! | `state.kind` | as `case` | from `case` |
//! | `state.s` | slit separation | 1 |
//! | `state.w` | slit width | s/2 |
//! | `state.n` | cosine power | 1 (`cos`), 2 (`cospow`) |
//! | `state.sigma_slit` | narrow-slit width | s/200 |
//! | `hbar` | ħ | 1 |
//! | `measurement` | `sign`, `identity`, `partial:<α>`, `kicks:<N>@<k>,...`, `phase:<N>@<c0> <c1> ...;...` | `sign` |
//! | `route` | `direct`, `char` | `direct` |
//! | `p.min`, `p.max`, `p.points` | momentum grid | ±20ħ/s, 801 (`simulate`: −16..15.5, 64 bins) |
//! | `apod.kappa0`, `apod.rungs`, `apod.order` | apodization ladder; order `none` = full | 64ħ/s, 6, none |
//! | `widths.eps` | comma-separated confidence levels | `1, 0.9, 0.5` |
//! | `moments.max` | highest apodized moment | 6 |
//! | `sim.mode` | `anomalous`, `reconstruct` | `anomalous` |
//! | `meter.sigma` | pointer width | 50 (`anomalous`), 3 (`reconstruct`) |
//! | `meter.trials` | trials per rung | 10⁶ (`anomalous`), 10⁸ (`reconstruct`) |
//! | `seed` | u64 | 42 |
//! | `out` | output directory | `wvt-out` |

use crate::analysis::ApodizationSpec;
use crate::numerics::GridSpec;
use crate::physics::{MeasurementSet, SlitKind, SlitSpec};
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementDesc {
    Sign,
    Identity,
    Partial(f64),
    /// (N, k) per kick.
    Kicks(Vec<(f64, f64)>),
    /// (N, phase polynomial coefficients) per branch.
    Phase(Vec<(f64, Vec<f64>)>),
}

fn num(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: '{}'", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: '{}'", s.trim()))
    }
}

impl MeasurementDesc {
    pub fn parse(v: &str) -> std::result::Result<Self, String> {
        let (head, rest) = v.split_once(':').unwrap_or((v, ""));
        let pairs = |sep: char| -> std::result::Result<Vec<(f64, String)>, String> {
            rest.split(sep)
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    let (w, r) = t.split_once('@').ok_or_else(|| format!("expected <N>@..., got '{t}'"))?;
                    Ok((num(w)?, r.to_string()))
                })
                .collect()
        };
        match head.trim() {
            "sign" => Ok(Self::Sign),
            "identity" => Ok(Self::Identity),
            "partial" => Ok(Self::Partial(num(rest)?)),
            "kicks" => {
                let k = pairs(',')?.into_iter().map(|(w, r)| Ok((w, num(&r)?))).collect::<std::result::Result<Vec<_>, String>>()?;
                if k.is_empty() {
                    return Err("kicks: need at least one <N>@<k>".into());
                }
                Ok(Self::Kicks(k))
            }
            "phase" => {
                let b = pairs(';')?
                    .into_iter()
                    .map(|(w, r)| Ok((w, r.split_whitespace().map(num).collect::<std::result::Result<Vec<_>, _>>()?)))
                    .collect::<std::result::Result<Vec<_>, String>>()?;
                if b.is_empty() {
                    return Err("phase: need at least one <N>@<c0> <c1> ...".into());
                }
                Ok(Self::Phase(b))
            }
            other => Err(format!("unknown measurement '{other}'")),
        }
    }

    pub fn build(&self) -> MeasurementSet {
        match self {
            Self::Sign => MeasurementSet::heaviside_sign(),
            Self::Identity => MeasurementSet::identity(),
            Self::Partial(a) => MeasurementSet::partial(*a),
            Self::Kicks(k) => MeasurementSet::pure_kicks(k),
            Self::Phase(b) => MeasurementSet::phase_kicks(b),
        }
    }

    fn canonical(&self) -> String {
        match self {
            Self::Sign => "sign".into(),
            Self::Identity => "identity".into(),
            Self::Partial(a) => format!("partial:{a:?}"),
            Self::Kicks(k) => {
                format!("kicks:{}", k.iter().map(|(w, k)| format!("{w:?}@{k:?}")).collect::<Vec<_>>().join(","))
            }
            Self::Phase(b) => format!(
                "phase:{}",
                b.iter()
                    .map(|(w, c)| format!("{w:?}@{}", c.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")))
                    .collect::<Vec<_>>()
                    .join(";")
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Direct,
    Char,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    Anomalous,
    Reconstruct,
}

pub const CASES: [&str; 4] = ["narrow", "rect", "cos", "cospow"];

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub case: String,
    pub kind: Option<String>,
    pub s: f64,
    pub w: Option<f64>,
    pub n: Option<u32>,
    pub sigma_slit: Option<f64>,
    pub hbar: f64,
    pub measurement: MeasurementDesc,
    pub route: Route,
    pub p_grid: Option<(f64, f64, usize)>,
    pub kappa0: Option<f64>,
    pub rungs: usize,
    pub order: Option<usize>,
    pub eps_levels: Vec<f64>,
    pub max_moment: u32,
    pub sim_mode: SimMode,
    pub meter_sigma: Option<f64>,
    pub trials: Option<u64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            case: "rect".into(),
            kind: None,
            s: 1.0,
            w: None,
            n: None,
            sigma_slit: None,
            hbar: 1.0,
            measurement: MeasurementDesc::Sign,
            route: Route::Direct,
            p_grid: None,
            kappa0: None,
            rungs: 6,
            order: None,
            eps_levels: vec![1.0, 0.9, 0.5],
            max_moment: 6,
            sim_mode: SimMode::Anomalous,
            meter_sigma: None,
            trials: None,
            seed: 42,
            out: PathBuf::from("wvt-out"),
        }
    }
}

fn check_case(v: &str) -> std::result::Result<String, String> {
    if CASES.contains(&v) {
        Ok(v.to_string())
    } else {
        Err(format!("unknown case '{v}' (expected one of {})", CASES.join(", ")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let (mut pmin, mut pmax, mut ppts) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(err(format!("duplicate key '{key}' (first on line {first})")));
            }
            let int = |v: &str| v.parse::<u64>().map_err(|_| format!("not a non-negative integer: '{v}'"));
            let r: std::result::Result<(), String> = (|| {
                match key {
                    "case" => cfg.case = check_case(value)?,
                    "state.kind" => cfg.kind = Some(check_case(value)?),
                    "state.s" => cfg.s = num(value)?,
                    "state.w" => cfg.w = Some(num(value)?),
                    "state.n" => cfg.n = Some(int(value)? as u32),
                    "state.sigma_slit" => cfg.sigma_slit = Some(num(value)?),
                    "hbar" => cfg.hbar = num(value)?,
                    "measurement" => cfg.measurement = MeasurementDesc::parse(value)?,
                    "route" => {
                        cfg.route = match value {
                            "direct" => Route::Direct,
                            "char" => Route::Char,
                            _ => return Err(format!("unknown route '{value}'")),
                        }
                    }
                    "p.min" => pmin = Some(num(value)?),
                    "p.max" => pmax = Some(num(value)?),
                    "p.points" => ppts = Some(int(value)? as usize),
                    "apod.kappa0" => cfg.kappa0 = Some(num(value)?),
                    "apod.rungs" => cfg.rungs = int(value)? as usize,
                    "apod.order" => cfg.order = if value == "none" { None } else { Some(int(value)? as usize) },
                    "widths.eps" => cfg.eps_levels = value.split(',').map(num).collect::<std::result::Result<_, _>>()?,
                    "moments.max" => cfg.max_moment = int(value)? as u32,
                    "sim.mode" => {
                        cfg.sim_mode = match value {
                            "anomalous" => SimMode::Anomalous,
                            "reconstruct" => SimMode::Reconstruct,
                            _ => return Err(format!("unknown sim.mode '{value}'")),
                        }
                    }
                    "meter.sigma" => cfg.meter_sigma = Some(num(value)?),
                    "meter.trials" => cfg.trials = Some(int(value)?),
                    "seed" => cfg.seed = int(value)?,
                    "out" => cfg.out = PathBuf::from(value),
                    _ => return Err(format!("unknown key '{key}'")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        match (pmin, pmax, ppts) {
            (None, None, None) => {}
            (Some(a), Some(b), Some(n)) => {
                GridSpec::new(a, b, n).map_err(|e| Error::Config { line: seen["p.points"], message: e.to_string() })?;
                cfg.p_grid = Some((a, b, n));
            }
            _ => {
                let line = ["p.min", "p.max", "p.points"].iter().filter_map(|k| seen.get(*k)).copied().min().unwrap_or(0);
                return Err(Error::Config { line, message: "p.min, p.max and p.points must be given together".into() });
            }
        }
        cfg.state().map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn state(&self) -> Result<SlitSpec> {
        let kind = self.kind.as_deref().unwrap_or(&self.case);
        let s = self.s;
        let w = self.w.unwrap_or(0.5 * s);
        let spec = match kind {
            "narrow" => SlitSpec::narrow(s, self.sigma_slit.unwrap_or(s / 200.0)),
            "rect" => SlitSpec::rectangular(s, w),
            "cos" => SlitSpec::cosine_power(s, w, self.n.unwrap_or(1)),
            _ => SlitSpec::cosine_power(s, w, self.n.unwrap_or(2)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_narrow(&self) -> bool {
        self.state().map(|s| s.kind == SlitKind::Narrow).unwrap_or(false)
    }

    pub fn apodization(&self) -> Result<ApodizationSpec> {
        let scale = self.hbar / self.s;
        ApodizationSpec::new(self.kappa0.unwrap_or(64.0 * scale), self.rungs, self.order, scale)
    }

    pub fn p_grid_or(&self, default: (f64, f64, usize)) -> Result<GridSpec> {
        let (a, b, n) = self.p_grid.unwrap_or(default);
        GridSpec::new(a, b, n)
    }

    pub fn meter_sigma(&self) -> f64 {
        self.meter_sigma.unwrap_or(match self.sim_mode {
            SimMode::Anomalous => 50.0,
            SimMode::Reconstruct => 3.0,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(match self.sim_mode {
            SimMode::Anomalous => 1_000_000,
            SimMode::Reconstruct => 100_000_000,
        })
    }

    /// Fully resolved configuration, one sorted `key = value` per line.
    /// The output directory is not part of it.
    pub fn canonical(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        match self.state() {
            Ok(st) => {
                kv.insert("state.kind", format!("{:?}", st.kind));
                kv.insert("state.s", format!("{:?}", st.s));
                kv.insert("state.w", format!("{:?}", st.w));
                kv.insert("state.n", st.n.to_string());
                kv.insert("state.sigma_slit", format!("{:?}", st.sigma_slit));
            }
            Err(e) => {
                kv.insert("state", format!("invalid: {e}"));
            }
        }
        kv.insert("hbar", format!("{:?}", self.hbar));
        kv.insert("measurement", self.measurement.canonical());
        kv.insert("route", format!("{:?}", self.route).to_lowercase());
        if let Some((a, b, n)) = self.p_grid {
            kv.insert("p", format!("{a:?} {b:?} {n}"));
        }
        if let Ok(ap) = self.apodization() {
            kv.insert("apod", format!("{:?} {} {:?}", ap.kappa0, ap.rungs, ap.order));
        }
        kv.insert("widths.eps", format!("{:?}", self.eps_levels));
        kv.insert("moments.max", self.max_moment.to_string());
        kv.insert("sim.mode", format!("{:?}", self.sim_mode).to_lowercase());
        kv.insert("meter.sigma", format!("{:?}", self.meter_sigma()));
        kv.insert("meter.trials", self.trials().to_string());
        kv.insert("seed", self.seed.to_string());
        kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        config_hash(&self.canonical())
    }
}

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = ScenarioConfig::parse(
            "# scenario\ncase = cos\nstate.w = 0.4\nmeasurement = kicks:0.5@1, 0.5@-2\np.min = -4\np.max = 4\np.points = 9\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.case, "cos");
        assert_eq!(cfg.measurement, MeasurementDesc::Kicks(vec![(0.5, 1.0), (0.5, -2.0)]));
        assert_eq!(cfg.p_grid, Some((-4.0, 4.0, 9)));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.state().unwrap().w, 0.4);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ScenarioConfig::parse("case = rect\n\nbogus = 1\n").unwrap_err();
        assert_eq!(e, Error::Config { line: 3, message: "unknown key 'bogus'".into() });
        let e = ScenarioConfig::parse("seed = -1").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        let e = ScenarioConfig::parse("p.min = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        assert!(ScenarioConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ScenarioConfig::parse("measurement = phase:1@0 x").is_err());
    }

    #[test]
    fn hash_tracks_resolved_values() {
        let a = ScenarioConfig::parse("case = rect").unwrap();
        let b = ScenarioConfig::parse("case = rect\nstate.w = 0.5").unwrap();
        let c = ScenarioConfig::parse("case = rect\nstate.w = 0.25").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn phase_measurement_round_trips_through_build() {
        let m = MeasurementDesc::parse("phase:0.25@0 1;0.75@0 0 0 2").unwrap();
        let set = m.build();
        assert_eq!(set.branches.len(), 2);
        assert!(set.completeness_at(0.3) - 1.0 < 1e-12);
    }
}
