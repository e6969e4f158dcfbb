//! Receiver power consumption per beamforming architecture.
//!
//! ```text
//! ABF: N_MS (P_LNA + P_PS) + P_C + P_RF + 2 P_ADC
//! DBF: N_MS (P_LNA + P_RF + 2 P_ADC)
//! HBF: N_MS (P_LNA + P_SP + N_RF P_PS) + N_RF (P_C + P_RF + 2 P_ADC)
//! PSN: N_MS (P_LNA + P_SP + N_C P_PS) + N_C P_C + P_RF + P_Comp + P_Sw + 2 P_ADC
//! ```
//!
//! with `P_RF = P_M + P_LO + P_LPF + P_BB_amp` and `P_ADC = c B 2^b`.
//!
//! Component values come from a TOML file with one table per component:
//!
//! ```toml
//! [p_lna]
//! value = 0.020
//! source = "where the number comes from"
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::schemes::SchemeKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerComponents {
    pub p_lna: f64,
    pub p_ps: f64,
    pub p_c: f64,
    pub p_m: f64,
    pub p_lo: f64,
    pub p_lpf: f64,
    pub p_bb_amp: f64,
    pub p_sp: f64,
    pub p_sw: f64,
    pub p_comp: f64,
    /// Energy per conversion step, joules.
    pub adc_c: f64,
    /// ADC sampling bandwidth, Hz.
    pub adc_bandwidth_hz: f64,
}

/// Keys of the component file, in file order.
pub const COMPONENT_KEYS: [&str; 12] = [
    "p_lna",
    "p_ps",
    "p_c",
    "p_m",
    "p_lo",
    "p_lpf",
    "p_bb_amp",
    "p_sp",
    "p_sw",
    "p_comp",
    "adc_c",
    "adc_bandwidth_hz",
];

impl PowerComponents {
    /// RF chain power `P_M + P_LO + P_LPF + P_BB_amp`.
    pub fn p_rf(&self) -> f64 {
        self.p_m + self.p_lo + self.p_lpf + self.p_bb_amp
    }

    pub fn p_adc(&self, bits: u32) -> Result<f64> {
        adc_power(self.adc_c, self.adc_bandwidth_hz, bits)
    }

    fn values(&self) -> [f64; 12] {
        [
            self.p_lna,
            self.p_ps,
            self.p_c,
            self.p_m,
            self.p_lo,
            self.p_lpf,
            self.p_bb_amp,
            self.p_sp,
            self.p_sw,
            self.p_comp,
            self.adc_c,
            self.adc_bandwidth_hz,
        ]
    }

    fn from_values(v: [f64; 12]) -> Self {
        Self {
            p_lna: v[0],
            p_ps: v[1],
            p_c: v[2],
            p_m: v[3],
            p_lo: v[4],
            p_lpf: v[5],
            p_bb_amp: v[6],
            p_sp: v[7],
            p_sw: v[8],
            p_comp: v[9],
            adc_c: v[10],
            adc_bandwidth_hz: v[11],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in COMPONENT_KEYS.iter().zip(self.values()) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ComponentFile(format!(
                    "`{key}` must be finite and nonnegative"
                )));
            }
        }
        if self.adc_c == 0.0 || self.adc_bandwidth_hz == 0.0 {
            return Err(Error::ComponentFile(
                "`adc_c` and `adc_bandwidth_hz` must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A parsed component file: values plus the provenance note of each entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFile {
    pub components: PowerComponents,
    pub sources: BTreeMap<String, String>,
}

impl ComponentFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ComponentFile(e.message().to_string()))?;
        if let Some(unknown) = table.keys().find(|k| !COMPONENT_KEYS.contains(&k.as_str())) {
            return Err(Error::ComponentFile(format!("unknown key `{unknown}`")));
        }
        let mut values = [0.0; 12];
        let mut sources = BTreeMap::new();
        for (slot, key) in values.iter_mut().zip(COMPONENT_KEYS) {
            let entry = table
                .get(key)
                .ok_or_else(|| Error::MissingComponent(key.to_string()))?
                .as_table()
                .ok_or_else(|| Error::ComponentFile(format!("`{key}` must be a table")))?;
            if let Some(extra) = entry.keys().find(|k| *k != "value" && *k != "source") {
                return Err(Error::ComponentFile(format!("unknown key `{key}.{extra}`")));
            }
            *slot = match entry.get("value") {
                Some(toml::Value::Float(f)) => *f,
                Some(toml::Value::Integer(i)) => *i as f64,
                Some(_) => {
                    return Err(Error::ComponentFile(format!(
                        "`{key}.value` must be a number"
                    )))
                }
                None => return Err(Error::MissingComponent(format!("{key}.value"))),
            };
            let source = entry
                .get("source")
                .and_then(|s| s.as_str())
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| Error::MissingComponent(format!("{key}.source")))?;
            sources.insert(key.to_string(), source.to_string());
        }
        let components = PowerComponents::from_values(values);
        components.validate()?;
        Ok(Self {
            components,
            sources,
        })
    }
}

/// ADC power `c B 2^b` in watts.
pub fn adc_power(c: f64, bandwidth_hz: f64, bits: u32) -> Result<f64> {
    if bits == 0 {
        return Err(Error::ZeroAdcBits);
    }
    if !(c > 0.0 && bandwidth_hz > 0.0) {
        return Err(Error::invalid("adc", "c and B must be positive"));
    }
    if bits > 1023 {
        return Err(Error::invalid("adc_bits", "too large"));
    }
    Ok(c * bandwidth_hz * 2f64.powi(bits as i32))
}

/// Additive terms of the receiver power models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PowerTerm {
    Lna,
    PhaseShifters,
    Splitters,
    Combiners,
    RfChains,
    Comparator,
    Switch,
    Adc,
}

impl PowerTerm {
    pub const ALL: [PowerTerm; 8] = [
        PowerTerm::Lna,
        PowerTerm::PhaseShifters,
        PowerTerm::Splitters,
        PowerTerm::Combiners,
        PowerTerm::RfChains,
        PowerTerm::Comparator,
        PowerTerm::Switch,
        PowerTerm::Adc,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            PowerTerm::Lna => "lna",
            PowerTerm::PhaseShifters => "ps",
            PowerTerm::Splitters => "sp",
            PowerTerm::Combiners => "c",
            PowerTerm::RfChains => "rf",
            PowerTerm::Comparator => "comp",
            PowerTerm::Switch => "sw",
            PowerTerm::Adc => "adc",
        }
    }
}

impl fmt::Display for PowerTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerBreakdown {
    pub scheme: SchemeKind,
    pub adc_bits: u32,
    /// Every term of [`PowerTerm::ALL`] in order; absent terms are zero.
    pub per_component: Vec<(PowerTerm, f64)>,
    pub total: f64,
}

impl PowerBreakdown {
    pub fn term(&self, term: PowerTerm) -> f64 {
        self.per_component
            .iter()
            .find(|(t, _)| *t == term)
            .map_or(0.0, |&(_, w)| w)
    }
}

pub fn total_power(
    scheme: SchemeKind,
    comps: &PowerComponents,
    n_ms: usize,
    bits: u32,
) -> Result<PowerBreakdown> {
    if n_ms == 0 {
        return Err(Error::invalid("n_ms", "must be positive"));
    }
    if matches!(scheme, SchemeKind::Psn(0) | SchemeKind::Hbf(0)) {
        return Err(Error::invalid("branches", "must be at least 1"));
    }
    let n = n_ms as f64;
    let adc_pair = 2.0 * comps.p_adc(bits)?;
    let rf = comps.p_rf();
    use PowerTerm::*;
    let terms: Vec<(PowerTerm, f64)> = match scheme {
        SchemeKind::Abf => vec![
            (Lna, n * comps.p_lna),
            (PhaseShifters, n * comps.p_ps),
            (Combiners, comps.p_c),
            (RfChains, rf),
            (Adc, adc_pair),
        ],
        SchemeKind::Dbf => vec![
            (Lna, n * comps.p_lna),
            (RfChains, n * rf),
            (Adc, n * adc_pair),
        ],
        SchemeKind::Hbf(k) => {
            let k = k as f64;
            vec![
                (Lna, n * comps.p_lna),
                (Splitters, n * comps.p_sp),
                (PhaseShifters, n * k * comps.p_ps),
                (Combiners, k * comps.p_c),
                (RfChains, k * rf),
                (Adc, k * adc_pair),
            ]
        }
        SchemeKind::Psn(k) => {
            let k = k as f64;
            vec![
                (Lna, n * comps.p_lna),
                (Splitters, n * comps.p_sp),
                (PhaseShifters, n * k * comps.p_ps),
                (Combiners, k * comps.p_c),
                (RfChains, rf),
                (Comparator, comps.p_comp),
                (Switch, comps.p_sw),
                (Adc, adc_pair),
            ]
        }
    };
    let per_component: Vec<_> = PowerTerm::ALL
        .iter()
        .map(|&t| {
            let w = terms.iter().find(|(u, _)| *u == t).map_or(0.0, |&(_, w)| w);
            (t, w)
        })
        .collect();
    let total = per_component.iter().map(|(_, w)| w).sum();
    Ok(PowerBreakdown {
        scheme,
        adc_bits: bits,
        per_component,
        total,
    })
}
