//! BB84 post-processing pipeline simulation.
//!
//! One round draws Alice's bits and bases, passes them through a channel
//! model, sifts, estimates the bit-error rate on a random subsample that is
//! then discarded, charges error correction as `ceil(n' h(e_b))` leaked
//! bits, sizes the list key with the finite-key bound and runs list privacy
//! amplification on Alice's remaining bits.

use serde::Serialize;

use crate::bounds::{
    auth_cost, bb84_min_entropy, bb84_phase_threshold, binary_entropy, clamp_length, epsilon_total,
    qllhl_length, Bb84Params, ListSize,
};
use crate::listhash::{list_pa_with, HashFamily, ListHashSeed, ListKeyBundle, ListPaParams};
use crate::{BitString, Error, Exec, MasterSeed, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Each sifted bit flips independently with this probability.
    IidFlip(f64),
    /// Eve measures every pulse in a random basis and resends her result.
    InterceptResend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub n_raw: usize,
    pub channel: Channel,
    /// Fraction of the sifted bits spent on error estimation.
    pub sample_fraction: f64,
    /// Security parameters. `n_sift`, `e_b` and `e_ph` are filled in from
    /// the run.
    pub bounds: Bb84Params,
    /// Phase-error rate to use instead of the estimated bit-error rate.
    pub e_ph_override: Option<f64>,
    pub eps_ec: f64,
    pub family: HashFamily,
    /// Keys are only computed when `L` is at most this.
    pub materialize_limit: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_raw: 10_000,
            channel: Channel::IidFlip(0.01),
            sample_fraction: 0.1,
            bounds: Bb84Params {
                epsilon: 2f64.powi(-20),
                epsilon_auth: 2f64.powi(-20),
                ..Bb84Params::default()
            },
            e_ph_override: None,
            eps_ec: 0.0,
            family: HashFamily::Toeplitz,
            materialize_limit: 1024,
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<()> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(Error::OutOfRange {
                value: self.sample_fraction,
                range: "(0, 1)",
            });
        }
        if let Channel::IidFlip(e) = self.channel {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::OutOfRange {
                    value: e,
                    range: "[0, 1]",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.eps_ec) {
            return Err(Error::OutOfRange {
                value: self.eps_ec,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoKey,
}

/// The public part of a round, with fixed field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub n_raw: u64,
    pub n_sift: u64,
    pub e_b_est: f64,
    pub lambda_ec: u64,
    pub k: f64,
    pub ell: u64,
    #[serde(rename = "L")]
    pub list: f64,
    pub auth_bits: u64,
    pub net_len: u64,
    pub eps_pa: f64,
    pub eps_ec: f64,
    pub eps_auth: f64,
    pub eps_total: f64,
    pub status: Status,
    /// Only present in unsafe reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    /// Only present in unsafe reports: hex keys separated by spaces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keys: Option<String>,
}

/// What Eve saw on one pulse under intercept-resend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveObservation {
    pub basis: bool,
    pub bit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub report: Report,
    /// Sifted pulses before the estimation subsample is removed.
    pub n_sifted: usize,
    pub n_sample: usize,
    pub e_ph: f64,
    /// `k` before clamping at zero.
    pub k_raw: f64,
    pub threshold: f64,
    key_material: BitString,
    seed: Option<ListHashSeed>,
    bundle: Option<ListKeyBundle>,
    eve: Option<Vec<EveObservation>>,
}

impl Transcript {
    /// Alice's bits left after sifting and estimation.
    pub fn key_material(&self) -> &BitString {
        &self.key_material
    }
    pub fn seed(&self) -> Option<&ListHashSeed> {
        self.seed.as_ref()
    }
    pub fn bundle(&self) -> Option<&ListKeyBundle> {
        self.bundle.as_ref()
    }
    /// Eve's per-pulse record (intercept-resend only).
    pub fn eve_record(&self) -> Option<&[EveObservation]> {
        self.eve.as_deref()
    }
    pub fn keys_materialized(&self) -> bool {
        self.bundle.is_some()
    }
}

/// Runs one round.
pub fn simulate_round(cfg: &PipelineConfig, master: MasterSeed) -> Result<Transcript> {
    cfg.validate()?;
    let mut alice = master.stream("qkdsim/alice");
    let mut bob = master.stream("qkdsim/bob");
    let mut noise = master.stream("qkdsim/channel");
    let mut eve_rng = master.stream("qkdsim/eve");
    let mut eve = matches!(cfg.channel, Channel::InterceptResend).then(Vec::new);

    let mut sift_a = Vec::new();
    let mut sift_b = Vec::new();
    for _ in 0..cfg.n_raw {
        let (bit, basis) = (alice.next_bit(), alice.next_bit());
        let bob_basis = bob.next_bit();
        let received = match cfg.channel {
            Channel::IidFlip(e) => {
                if bob_basis == basis {
                    bit ^ noise.bernoulli(e)
                } else {
                    noise.next_bit()
                }
            }
            Channel::InterceptResend => {
                let eve_basis = eve_rng.next_bit();
                let eve_bit = if eve_basis == basis {
                    bit
                } else {
                    eve_rng.next_bit()
                };
                if let Some(rec) = eve.as_mut() {
                    rec.push(EveObservation {
                        basis: eve_basis,
                        bit: eve_bit,
                    });
                }
                if bob_basis == eve_basis {
                    eve_bit
                } else {
                    noise.next_bit()
                }
            }
        };
        if bob_basis == basis {
            sift_a.push(bit);
            sift_b.push(received);
        }
    }

    // parameter estimation on a uniformly chosen subsample
    let n_sifted = sift_a.len();
    let n_sample = ((cfg.sample_fraction * n_sifted as f64).round() as usize).min(n_sifted);
    let mut order: Vec<usize> = (0..n_sifted).collect();
    let mut pick = master.stream("qkdsim/sample");
    for i in 0..n_sample {
        let j = i + pick.below((n_sifted - i) as u64) as usize;
        order.swap(i, j);
    }
    let errors = order[..n_sample]
        .iter()
        .filter(|&&i| sift_a[i] != sift_b[i])
        .count();
    let e_b_est = if n_sample == 0 {
        0.0
    } else {
        errors as f64 / n_sample as f64
    };
    let mut rest = order[n_sample..].to_vec();
    rest.sort_unstable();
    let key_material: BitString = rest.iter().map(|&i| sift_a[i]).collect();
    let n_sift = key_material.len();

    let e_ph = cfg.e_ph_override.unwrap_or(e_b_est);
    let params = Bb84Params {
        n_sift: n_sift.max(1) as f64,
        e_b: e_b_est.min(0.5),
        e_ph: e_ph.min(0.5),
        ..cfg.bounds
    };
    let lambda_ec = (n_sift as f64 * binary_entropy(params.e_b)?).ceil() as u64;
    let k_raw = if n_sift == 0 {
        0.0
    } else {
        bb84_min_entropy(&params)?
    };
    let k = k_raw.max(0.0);
    let threshold = if n_sift == 0 {
        0.0
    } else {
        bb84_phase_threshold(&params)?
    };
    let list = cfg.bounds.list;
    let mut ell = clamp_length(qllhl_length(k, cfg.bounds.epsilon, list)?);
    let auth_bits = auth_cost(list, cfg.bounds.epsilon_auth)?;
    let eps_pa = (4.0 * cfg.bounds.epsilon).min(1.0);
    let eps_auth = cfg.bounds.epsilon_auth;
    let aborted = e_ph >= threshold || ell == 0 || ell as usize > n_sift;
    if aborted {
        ell = 0;
    }
    let net_len = ell.saturating_sub(auth_bits);
    let status = if net_len > 0 {
        Status::Ok
    } else {
        Status::NoKey
    };

    let (mut seed, mut bundle) = (None, None);
    if status == Status::Ok {
        if let Some(count) = list.count().filter(|&c| c <= cfg.materialize_limit) {
            let params = ListPaParams {
                family: cfg.family,
                ell: ell as usize,
                list: count as usize,
            };
            let out = list_pa_with(&key_material, &params, master, Exec::Sequential)?;
            seed = Some(out.seed);
            bundle = Some(out.bundle);
        }
    }

    Ok(Transcript {
        report: Report {
            n_raw: cfg.n_raw as u64,
            n_sift: n_sift as u64,
            e_b_est,
            lambda_ec,
            k,
            ell,
            list: list.log2().exp2(),
            auth_bits,
            net_len,
            eps_pa,
            eps_ec: cfg.eps_ec,
            eps_auth,
            eps_total: epsilon_total(eps_pa, cfg.eps_ec, eps_auth)?,
            status,
            index: None,
            keys: None,
        },
        n_sifted,
        n_sample,
        e_ph,
        k_raw,
        threshold,
        key_material,
        seed,
        bundle,
        eve,
    })
}

/// Runs `rounds` independent rounds, each on its own derived master seed.
pub fn simulate_rounds(
    cfg: &PipelineConfig,
    master: MasterSeed,
    rounds: usize,
    exec: Exec,
) -> Result<Vec<Transcript>> {
    exec.map(rounds, |r| {
        let seed = MasterSeed(master.stream(&format!("qkdsim/round/{r}")).next_bits(64));
        simulate_round(cfg, seed)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Serializes the report. The secret index and the keys are only included
/// when `reveal_secrets` is set.
pub fn emit_report(t: &Transcript, format: Format, reveal_secrets: bool) -> Result<Vec<u8>> {
    let mut report = t.report.clone();
    if reveal_secrets {
        if let Some(b) = &t.bundle {
            report.index = Some(b.index().reveal() as u64);
            report.keys = Some(
                b.keys()
                    .iter()
                    .map(|k| {
                        k.as_bytes()
                            .iter()
                            .map(|v| format!("{v:02x}"))
                            .collect::<String>()
                    })
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
    }
    serialize(&[report], format)
}

/// Serializes rows with one shared header (CSV) or as a JSON array.
pub fn serialize<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = if rows.len() == 1 {
                serde_json::to_vec_pretty(&rows[0])
            } else {
                serde_json::to_vec_pretty(rows)
            }
            .map_err(|e| Error::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub n_raw: u64,
    pub e_b_est: f64,
    pub k: f64,
    #[serde(rename = "L")]
    pub list: f64,
    pub epsilon: f64,
    /// Key length with a single hash.
    pub standard_len: u64,
    /// `clamp(k + log L - 2 log(1/eps) - 3)` at the estimated `k`.
    pub list_len: u64,
    pub standard_status: Status,
    pub list_status: Status,
}

/// Intercept-resend attack: compares a single hash with a list of `list`
/// hashes at the same security parameter.
pub fn intercept_resend_demo(
    n_raw: usize,
    list: ListSize,
    epsilon: f64,
    master: MasterSeed,
) -> Result<DemoReport> {
    let base = PipelineConfig {
        n_raw,
        channel: Channel::InterceptResend,
        bounds: Bb84Params {
            epsilon,
            list: ListSize::ONE,
            ..PipelineConfig::default().bounds
        },
        ..PipelineConfig::default()
    };
    let standard = simulate_round(&base, master)?;
    let with_list = PipelineConfig {
        bounds: Bb84Params {
            list,
            ..base.bounds
        },
        ..base
    };
    let listed = simulate_round(&with_list, master)?;
    Ok(DemoReport {
        n_raw: n_raw as u64,
        e_b_est: standard.report.e_b_est,
        k: standard.report.k,
        list: list.log2().exp2(),
        epsilon,
        standard_len: standard.report.ell,
        list_len: clamp_length(qllhl_length(standard.report.k, epsilon, list)?),
        standard_status: standard.report.status,
        list_status: listed.report.status,
    })
}
