//! Deterministic synthetic NetFlow scenarios.
//!
//! Background traffic comes from many sources with log-normal durations and
//! Pareto-tailed byte counts. A handful of botnet sources follow one of two
//! profiles: a port scan (many destinations and ports, tiny flows) or a
//! beacon (one C&C endpoint, fixed port, near-constant duration). A
//! `mimicry` share of botnet flows is drawn from the background generator
//! instead, which blurs the classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Pareto};
use serde::{Deserialize, Serialize};

use crate::flow::{FlowRecord, FlowTable, Timestamp};
use crate::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BotnetProfile {
    PortScan,
    Beacon,
}

/// Shape parameters of the background and botnet distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Log-normal location of background durations, in ln(seconds).
    pub dur_log_mean: f64,
    pub dur_log_std: f64,
    /// Pareto tail index of background bytes per packet.
    pub bytes_tail: f64,
    /// Probability that a botnet flow looks like background traffic.
    pub mimicry: f64,
    /// Relative jitter of beacon periods and durations.
    pub beacon_jitter: f64,
    /// Zipf-like skew of background source activity; 0 is uniform.
    pub source_skew: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            dur_log_mean: -6.9,
            dur_log_std: 2.5,
            bytes_tail: 1.5,
            mimicry: 0.0,
            beacon_jitter: 0.05,
            source_skew: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_background_flows: usize,
    pub n_background_sources: usize,
    /// Zero gives a background-only scenario.
    pub n_botnet_sources: usize,
    /// Flows per minute emitted by each botnet source.
    pub botnet_flow_rate: f64,
    pub duration_secs: f64,
    pub profile: BotnetProfile,
    pub noise: NoiseConfig,
    /// First possible flow start, in the flow file's timestamp format.
    pub start: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_background_flows: 50_000,
            n_background_sources: 20_000,
            n_botnet_sources: 1,
            botnet_flow_rate: 20.0,
            duration_secs: 3600.0,
            profile: BotnetProfile::PortScan,
            noise: NoiseConfig::default(),
            start: "2011/08/10 09:46:53.000000".to_string(),
            seed: crate::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SynthError {
    SynthError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Smallest duration accepted, so every scenario spans at least one default window.
pub const MIN_DURATION_SECS: f64 = 120.0;

impl SynthConfig {
    pub fn validate(&self) -> Result<Timestamp, SynthError> {
        if self.n_background_flows == 0 {
            return Err(invalid("n_background_flows", "must be positive"));
        }
        if self.n_background_sources == 0 {
            return Err(invalid("n_background_sources", "must be positive"));
        }
        if self.n_botnet_sources > 0 && !(self.botnet_flow_rate.is_finite() && self.botnet_flow_rate > 0.0) {
            return Err(invalid("botnet_flow_rate", "must be positive"));
        }
        if !(self.duration_secs.is_finite() && self.duration_secs >= MIN_DURATION_SECS) {
            return Err(invalid(
                "duration_secs",
                format!("must be at least {MIN_DURATION_SECS}"),
            ));
        }
        let n = &self.noise;
        if !(n.dur_log_std.is_finite() && n.dur_log_std > 0.0 && n.dur_log_mean.is_finite()) {
            return Err(invalid("noise.dur_log_std", "must be finite and positive"));
        }
        if !(n.bytes_tail.is_finite() && n.bytes_tail > 0.0) {
            return Err(invalid("noise.bytes_tail", "must be positive"));
        }
        if !(0.0..=1.0).contains(&n.mimicry) {
            return Err(invalid("noise.mimicry", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&n.beacon_jitter) {
            return Err(invalid("noise.beacon_jitter", "must lie in [0, 1)"));
        }
        if !(n.source_skew.is_finite() && n.source_skew >= 0.0) {
            return Err(invalid("noise.source_skew", "must be non-negative"));
        }
        Timestamp::parse(&self.start).ok_or_else(|| invalid("start", format!("cannot parse {:?}", self.start)))
    }

    /// Expected number of botnet flows over the whole scenario.
    pub fn expected_botnet_flows(&self) -> f64 {
        self.n_botnet_sources as f64 * self.botnet_flow_rate * self.duration_secs / 60.0
    }
}

/// Common service ports of background traffic and their relative weights.
const SERVICES: [(&str, &str, u32); 8] = [
    ("443", "tcp", 30),
    ("80", "tcp", 25),
    ("53", "udp", 20),
    ("123", "udp", 5),
    ("25", "tcp", 5),
    ("993", "tcp", 5),
    ("22", "tcp", 5),
    ("8080", "tcp", 5),
];

const BACKGROUND_LABEL: &str = "flow=Background";

fn background_label(proto: &str) -> &'static str {
    if proto == "tcp" {
        "flow=Background-TCP-Established"
    } else {
        "flow=Background-UDP-Established"
    }
}

fn background_src(i: usize) -> String {
    format!("10.{}.{}.{}", (i >> 16) & 0xff, (i >> 8) & 0xff, i & 0xff)
}

fn botnet_src(i: usize) -> String {
    format!("147.32.{}.{}", 84 + i / 200, 10 + i % 200)
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    start: Timestamp,
    source_cdf: Vec<f64>,
    dur: LogNormal<f64>,
    bytes: Pareto<f64>,
}

fn round_micros(secs: f64) -> f64 {
    libm::round(secs * 1e6) / 1e6
}

impl Generator<'_> {
    fn at(&self, offset_secs: f64) -> Timestamp {
        self.start.add_micros(libm::floor(offset_secs * 1e6) as i64)
    }

    fn pick_source(&mut self) -> usize {
        let u: f64 = self.rng.random::<f64>() * self.source_cdf.last().copied().unwrap_or(1.0);
        self.source_cdf
            .partition_point(|&c| c <= u)
            .min(self.source_cdf.len() - 1)
    }

    fn sport(&mut self) -> String {
        self.rng.random_range(1024u32..65536).to_string()
    }

    /// A background-looking flow from `src` starting at `offset` seconds.
    fn background_flow(&mut self, src: String, offset: f64, label: &str) -> FlowRecord {
        let total: u32 = SERVICES.iter().map(|s| s.2).sum();
        let mut r = self.rng.random_range(0..total);
        let (dport, proto) = SERVICES
            .iter()
            .find(|s| {
                if r < s.2 {
                    true
                } else {
                    r -= s.2;
                    false
                }
            })
            .map(|s| (s.0, s.1))
            .expect("weights cover the range");
        let server = libm::floor(libm::pow(self.rng.random::<f64>(), 3.0) * 2000.0) as u32;
        let dst = format!("147.32.{}.{}", 80 + server / 250, server % 250 + 1);
        let dur = round_micros(self.dur.sample(&mut self.rng).min(3600.0));
        let pkts = 1 + (libm::floor(dur * 4.0) as u64).min(10_000) + self.rng.random_range(0..3u64);
        let per_pkt = self.bytes.sample(&mut self.rng).min(1500.0);
        let tot_bytes = (libm::round(per_pkt * pkts as f64) as u64).max(pkts * 40);
        let src_bytes = tot_bytes
            .min(((tot_bytes as f64) * self.rng.random_range(0.2..0.8)) as u64 + 40)
            .max(1);
        FlowRecord {
            start_time: self.at(offset),
            dur,
            proto: proto.to_string(),
            src_addr: src,
            sport: Some(self.sport()),
            dir: "<->".to_string(),
            dst_addr: dst,
            dport: Some(dport.to_string()),
            state: Some(if proto == "tcp" { "SRPA_SPA" } else { "CON" }.to_string()),
            s_tos: Some(0),
            d_tos: Some(0),
            tot_pkts: pkts,
            tot_bytes,
            src_bytes: src_bytes.min(tot_bytes),
            label: if label == BACKGROUND_LABEL {
                background_label(proto)
            } else {
                label
            }
            .to_string(),
        }
    }

    fn scan_flow(&mut self, src: String, offset: f64, label: &str) -> FlowRecord {
        let dst = format!(
            "{}.{}.{}.{}",
            self.rng.random_range(1..224u32),
            self.rng.random_range(0..256u32),
            self.rng.random_range(0..256u32),
            self.rng.random_range(1..255u32)
        );
        let pkts = self.rng.random_range(1..3u64);
        let tot_bytes = pkts * 62;
        FlowRecord {
            start_time: self.at(offset),
            dur: round_micros(self.rng.random::<f64>() * 0.003),
            proto: "tcp".to_string(),
            src_addr: src,
            sport: Some(self.sport()),
            dir: "->".to_string(),
            dst_addr: dst,
            dport: Some(self.rng.random_range(1..10_000u32).to_string()),
            state: Some("S_".to_string()),
            s_tos: Some(0),
            d_tos: None,
            tot_pkts: pkts,
            tot_bytes,
            src_bytes: tot_bytes,
            label: label.to_string(),
        }
    }

    fn beacon_flow(&mut self, src: String, offset: f64, label: &str, bot: usize) -> FlowRecord {
        let jitter = self.cfg.noise.beacon_jitter;
        let dur = round_micros(1.0 + jitter * (self.rng.random::<f64>() - 0.5));
        FlowRecord {
            start_time: self.at(offset),
            dur,
            proto: "tcp".to_string(),
            src_addr: src,
            sport: Some(self.sport()),
            dir: "->".to_string(),
            dst_addr: format!("195.88.191.{}", 50 + bot % 8),
            dport: Some("6667".to_string()),
            state: Some("SRPA_SPA".to_string()),
            s_tos: Some(0),
            d_tos: Some(0),
            tot_pkts: 6,
            tot_bytes: 412,
            src_bytes: 218,
            label: label.to_string(),
        }
    }
}

/// Generates a scenario; the flows are sorted by start time and the same
/// config always yields the same table.
pub fn generate_scenario(cfg: &SynthConfig) -> Result<FlowTable, SynthError> {
    let start = cfg.validate()?;
    let mut source_cdf = Vec::with_capacity(cfg.n_background_sources);
    let mut acc = 0.0;
    for i in 0..cfg.n_background_sources {
        acc += 1.0 / libm::pow((i + 1) as f64, cfg.noise.source_skew);
        source_cdf.push(acc);
    }
    let mut g = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        start,
        source_cdf,
        dur: LogNormal::new(cfg.noise.dur_log_mean, cfg.noise.dur_log_std).expect("validated"),
        bytes: Pareto::new(60.0, cfg.noise.bytes_tail).expect("validated"),
    };

    let mut records = Vec::with_capacity(cfg.n_background_flows + cfg.expected_botnet_flows() as usize);
    for _ in 0..cfg.n_background_flows {
        let src = background_src(g.pick_source());
        let offset = g.rng.random::<f64>() * cfg.duration_secs;
        records.push(g.background_flow(src, offset, BACKGROUND_LABEL));
    }

    let label = match cfg.profile {
        BotnetProfile::PortScan => "flow=From-Botnet-Synth-PortScan",
        BotnetProfile::Beacon => "flow=From-Botnet-Synth-Beacon",
    };
    let rate_per_sec = cfg.botnet_flow_rate / 60.0;
    for bot in 0..cfg.n_botnet_sources {
        let src = botnet_src(bot);
        let gap = Exp::new(rate_per_sec).expect("validated");
        let period = 1.0 / rate_per_sec;
        let mut t = g.rng.random::<f64>() * period;
        while t < cfg.duration_secs {
            let rec = if g.rng.random::<f64>() < cfg.noise.mimicry {
                g.background_flow(src.clone(), t, label)
            } else {
                match cfg.profile {
                    BotnetProfile::PortScan => g.scan_flow(src.clone(), t, label),
                    BotnetProfile::Beacon => g.beacon_flow(src.clone(), t, label, bot),
                }
            };
            records.push(rec);
            t += match cfg.profile {
                BotnetProfile::PortScan => gap.sample(&mut g.rng),
                BotnetProfile::Beacon => period * (1.0 + cfg.noise.beacon_jitter * (g.rng.random::<f64>() - 0.5)),
            };
        }
    }

    records.sort_by_key(|r| r.start_time);
    Ok(FlowTable::from_records(format!("synth:seed={}", cfg.seed), records))
}
