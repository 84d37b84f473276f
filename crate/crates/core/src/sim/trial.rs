//! End-to-end Monte Carlo trials.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use crate::cs::{cs_detect, SensingMatrix};
use crate::decoder::{decode_joint, DecodeParams, JointGraph};
use crate::error::{invalid, Result};
use crate::ldpc::CodeCache;
use crate::presets::code_for_rate;
use crate::rng::trial_rng;
use crate::sim::config::SimConfig;
use crate::tx::channel::{draw_gains, ChannelMode};
use crate::tx::encoder::{PayloadCode, UserEncoder};
use crate::tx::layout::{FrameLayout, Message};
use crate::tx::repetition::RepetitionDD;

/// Code, repetition and sensing matrix shared by every trial of a run.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub layout: FrameLayout,
    pub mode: ChannelMode,
    pub rate: f64,
    pub dd: RepetitionDD,
    pub code: PayloadCode,
    pub sensing: Arc<SensingMatrix>,
    pub interleaver_seed: u64,
}

impl Scheme {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let (rate, dd) = cfg.preset.defaults(cfg.k_a)?;
        let rate = cfg.rate.unwrap_or(rate);
        let dd = match &cfg.nu {
            Some(nu) => RepetitionDD::new(nu.clone())?,
            None => dd,
        };
        let cache = cfg.code_cache.as_ref().map(CodeCache::new).transpose()?;
        let b_c = cfg.layout.b_c() as usize;
        let code = code_for_rate(rate)?.build(b_c, cache.as_ref())?;
        let code = PayloadCode::new(code, b_c)?;
        dd.check_fits(code.n(), cfg.layout.n_c())?;
        let sensing = SensingMatrix::new(cfg.layout.b_p, cfg.layout.n_p, 1.0, cfg.sensing_seed, cfg.channel)?;
        Ok(Self {
            layout: cfg.layout,
            mode: cfg.channel,
            rate,
            dd,
            code,
            sensing: Arc::new(sensing),
            interleaver_seed: cfg.interleaver_seed,
        })
    }

    /// Encoder with powers set for `ebn0_db` and `P1 = split_ratio P2`.
    pub fn encoder_at(&self, ebn0_db: f64, split_ratio: f64) -> Result<UserEncoder> {
        let layout = self.layout.at_ebn0(ebn0_db, split_ratio)?;
        UserEncoder::new(
            layout,
            self.dd.clone(),
            self.code.clone(),
            Arc::new(self.sensing.with_power(layout.p1)),
            self.interleaver_seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: u64,
    pub transmitted: Vec<Message>,
    /// Distinct decoded messages.
    pub decoded: Vec<Message>,
    /// Users whose message is absent from `decoded`.
    pub misses: usize,
    /// Users sharing their preamble with another user.
    pub collisions: usize,
    /// Users whose preamble the detector did not list.
    pub missed_detections: usize,
    /// Decoded messages nobody sent; logged only.
    pub false_alarms: usize,
    pub iterations: usize,
}

/// `k_a` messages drawn uniformly and independently.
pub fn sample_messages<R: Rng + ?Sized>(k_a: usize, layout: &FrameLayout, rng: &mut R) -> Vec<Message> {
    (0..k_a)
        .map(|_| Message {
            w_p: rng.random_range(0..layout.m_p()),
            w_c: rng.random_range(0..layout.m_c()),
        })
        .collect()
}

/// Users whose preamble is shared with at least one other user.
pub fn count_collisions(messages: &[Message]) -> usize {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for m in messages {
        *counts.entry(m.w_p).or_default() += 1;
    }
    counts.values().filter(|&&c| c > 1).sum()
}

/// Users whose exact message is not in `decoded`.
pub fn count_misses(transmitted: &[Message], decoded: &[Message]) -> usize {
    transmitted.iter().filter(|m| decoded.binary_search(m).is_err()).count()
}

/// One trial: sample, encode, transmit, detect and decode.
///
/// Trial `index` of master seed `seed` always draws the same messages, gains
/// and noise, whatever the operating point.
pub fn run_trial(
    encoder: &UserEncoder,
    k_a: usize,
    k_b: usize,
    params: &DecodeParams,
    seed: u64,
    index: u64,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, index);
    let transmitted = sample_messages(k_a, encoder.layout(), &mut rng);
    let mut out = run_messages(encoder, transmitted, k_b, params, &mut rng)?;
    out.index = index;
    Ok(out)
}

/// Sends the given messages through the channel and receiver.
pub fn run_messages<R: Rng + ?Sized>(
    encoder: &UserEncoder,
    transmitted: Vec<Message>,
    k_b: usize,
    params: &DecodeParams,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let layout = *encoder.layout();
    if u64::try_from(k_b).map_or(true, |k| k > layout.m_p()) {
        return Err(invalid("K_b exceeds the number of preambles"));
    }
    let gains = draw_gains(encoder.mode(), transmitted.len(), rng);
    let obs = encoder.transmit(&transmitted, &gains, 1.0, rng)?;
    let pre = encoder.mode().preamble_len(&layout);
    let y_p = obs.y.slice(0..pre);
    let y_c = obs.y.slice(pre..obs.y.len());
    let detection = cs_detect(&y_p, encoder.sensing(), k_b)?;
    let graph = JointGraph::build(&detection, encoder, y_c)?;
    let result = decode_joint(&graph, params);

    let decoded = result.decoded;
    let misses = count_misses(&transmitted, &decoded);
    let missed_detections = transmitted.iter().filter(|m| !detection.contains(m.w_p)).count();
    let false_alarms = decoded.iter().filter(|m| !transmitted.contains(m)).count();
    Ok(TrialOutcome {
        index: 0,
        collisions: count_collisions(&transmitted),
        transmitted,
        decoded,
        misses,
        missed_detections,
        false_alarms,
        iterations: result.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn collision_count() {
        let m = |p| Message { w_p: p, w_c: 0 };
        assert_eq!(count_collisions(&[m(1), m(2), m(1), m(3), m(1)]), 3);
        assert_eq!(count_collisions(&[m(1), m(2)]), 0);
        assert_eq!(count_collisions(&[]), 0);
    }

    #[test]
    fn membership_misses() {
        let m = |p, c| Message { w_p: p, w_c: c };
        let decoded = vec![m(1, 5), m(2, 7)];
        assert_eq!(count_misses(&[m(1, 5), m(1, 5), m(2, 8)], &decoded), 1);
        assert_eq!(count_misses(&[], &decoded), 0);
    }

    #[test]
    fn messages_in_range_and_reproducible() {
        let layout = FrameLayout::default();
        let a = sample_messages(50, &layout, &mut trial_rng(3, 9));
        let b = sample_messages(50, &layout, &mut trial_rng(3, 9));
        assert_eq!(a, b);
        assert!(a.iter().all(|m| m.w_p < layout.m_p() && m.w_c < layout.m_c()));
    }

    #[test]
    fn zero_users_have_no_misses() {
        let cfg = SimConfig {
            k_a: 0,
            trials: 1,
            ..Default::default()
        };
        let scheme = Scheme::from_config(&SimConfig { k_a: 1, ..cfg.clone() }).unwrap();
        let enc = scheme.encoder_at(10.0, 1.0).unwrap();
        let out = run_trial(&enc, 0, 0, &DecodeParams::default(), 1, 0).unwrap();
        assert_eq!(out.misses, 0);
        assert!(out.transmitted.is_empty());
    }
}
