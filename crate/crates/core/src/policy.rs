//! Deterministic rule-based agent behaviour.
//!
//! Voters read the proposer's tone band, guess its hidden willingness, pick a
//! strategy by comparing band levels and turn that strategy into a vote.
//! Proposers react to the vote round with keep / update / compromise.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{band_of, ConstraintItem, DomainKind, Preference, ToneBand, WillingnessScore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Base,
    #[default]
    Mind,
    ToneOnly,
    AppraisalOnly,
}

impl Mode {
    /// Agents express their willingness through tone.
    pub fn tone_on(self) -> bool {
        matches!(self, Mode::Mind | Mode::ToneOnly)
    }

    /// Agents read others' tone (voter appraisal, proposer signal reading).
    pub fn appraisal_on(self) -> bool {
        matches!(self, Mode::Mind | Mode::AppraisalOnly)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Mind => "mind",
            Mode::ToneOnly => "tone_only",
            Mode::AppraisalOnly => "appraisal_only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub mode: Mode,
    /// Probability of shifting an expressed tone one level up or down.
    pub tone_noise_eps: f64,
    /// Fraction of the group (proposer included) that must agree.
    pub consensus_threshold: f64,
    pub max_rounds: u32,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Mind,
            tone_noise_eps: 0.0,
            consensus_threshold: 0.75,
            max_rounds: 3,
        }
    }
}

impl PolicyConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.consensus_threshold > 0.0 && self.consensus_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "consensus threshold {} outside (0, 1]",
                self.consensus_threshold
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tone_noise_eps) {
            return Err(Error::InvalidConfig(format!(
                "tone noise {} outside [0, 1]",
                self.tone_noise_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Accept,
    Yield,
    Compromise,
    Push,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Accept => "accept",
            Strategy::Yield => "yield",
            Strategy::Compromise => "compromise",
            Strategy::Push => "push",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accept" => Some(Strategy::Accept),
            "yield" => Some(Strategy::Yield),
            "compromise" => Some(Strategy::Compromise),
            "push" => Some(Strategy::Push),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A voter's private read of the current proposal. Never shown to others.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appraisal {
    pub guessed_opponent_w: WillingnessScore,
    pub room_for_compromise: bool,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VoteChoice {
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub vote: VoteChoice,
    pub revised_value: Option<String>,
    pub rationale: String,
    pub tone: ToneBand,
}

impl Vote {
    pub fn agree(rationale: impl Into<String>, tone: ToneBand) -> Self {
        Self {
            vote: VoteChoice::Agree,
            revised_value: None,
            rationale: rationale.into(),
            tone,
        }
    }

    pub fn disagree(value: impl Into<String>, rationale: impl Into<String>, tone: ToneBand) -> Self {
        Self {
            vote: VoteChoice::Disagree,
            revised_value: Some(value.into()),
            rationale: rationale.into(),
            tone,
        }
    }

    pub fn is_agree(&self) -> bool {
        self.vote == VoteChoice::Agree
    }

    /// Agree carries no value; Disagree carries an allowed value.
    pub fn check(&self, item: &ConstraintItem) -> Result<()> {
        match (&self.vote, &self.revised_value) {
            (VoteChoice::Agree, None) => Ok(()),
            (VoteChoice::Agree, Some(v)) => Err(Error::MalformedVote(format!("AGREE with revised value `{v}`"))),
            (VoteChoice::Disagree, None) => Err(Error::MalformedVote("DISAGREE without revised value".into())),
            (VoteChoice::Disagree, Some(v)) => item.require(v).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Keep,
    Update,
    Compromise,
}

impl ActionKind {
    pub fn label(self) -> &'static str {
        match self {
            ActionKind::Keep => "KEEP",
            ActionKind::Update => "UPDATE",
            ActionKind::Compromise => "COMPROMISE",
        }
    }

    pub fn parse(s: &str) -> Option<ActionKind> {
        match s.trim().to_ascii_uppercase().as_str() {
            "KEEP" => Some(ActionKind::Keep),
            "UPDATE" => Some(ActionKind::Update),
            "COMPROMISE" => Some(ActionKind::Compromise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposerAction {
    pub action: ActionKind,
    pub new_value: String,
    pub rationale: String,
    pub tone: ToneBand,
}

impl ProposerAction {
    pub fn check(&self, item: &ConstraintItem, current_value: &str) -> Result<()> {
        item.require(&self.new_value)?;
        if self.action == ActionKind::Keep && self.new_value != current_value {
            return Err(Error::MalformedVote(format!(
                "KEEP must retain `{current_value}`, got `{}`",
                self.new_value
            )));
        }
        Ok(())
    }
}

/// Expressed tone for willingness `w`.
///
/// With tone suppressed every agent sounds Neutral. Otherwise the tone is
/// `band_of(w)`, shifted one level up or down (clamped) with probability
/// `eps`. No random draw is consumed when `eps == 0`.
pub fn encode_tone<R: Rng + ?Sized>(w: WillingnessScore, tone_on: bool, eps: f64, rng: &mut R) -> ToneBand {
    if !tone_on {
        return ToneBand::Neutral;
    }
    let band = band_of(w);
    if eps <= 0.0 || !rng.gen_bool(eps.min(1.0)) {
        return band;
    }
    let shift = if rng.gen_bool(0.5) { 1 } else { -1 };
    ToneBand::from_level(band.level() + shift)
}

/// Representative willingness heard in a tone: the band midpoint rounded
/// half-up.
pub fn decode_w(tone: ToneBand) -> WillingnessScore {
    let w = match tone {
        ToneBand::Neutral => 2,
        ToneBand::Warm => 5,
        ToneBand::Firm => 8,
        ToneBand::Strict => 10,
    };
    WillingnessScore::saturating(w)
}

/// Strategic appraisal of the current proposal against the voter's own
/// preference.
///
/// Rules apply in order: matching value accepts; a Strict voter pushes; a
/// proposer two or more bands above yields; two or more bands below pushes;
/// anything closer compromises.
pub fn appraise(own: &Preference, current_value: &str, proposer_tone: ToneBand) -> Appraisal {
    let own_level = band_of(own.w).level();
    let gap = proposer_tone.level() - own_level;
    let strategy = if current_value == own.value {
        Strategy::Accept
    } else if band_of(own.w) == ToneBand::Strict {
        Strategy::Push
    } else if gap >= 2 {
        Strategy::Yield
    } else if gap <= -2 {
        Strategy::Push
    } else {
        Strategy::Compromise
    };
    Appraisal {
        guessed_opponent_w: decode_w(proposer_tone),
        room_for_compromise: proposer_tone != ToneBand::Strict,
        strategy,
    }
}

/// Middle value between `current` and `own` on an ordinal domain, rounding
/// toward `own`. Categorical domains have no middle; `own` is returned.
pub fn middle_ground(item: &ConstraintItem, current: &str, own: &str) -> Result<String> {
    let ci = item.require(current)?;
    let oi = item.require(own)?;
    if item.kind == DomainKind::Categorical {
        return Ok(own.to_string());
    }
    Ok(item.allowed_values[midpoint_toward(ci, oi)].clone())
}

/// Midpoint of two indices, rounding toward `toward` when the sum is odd.
fn midpoint_toward(from: usize, toward: usize) -> usize {
    let sum = from + toward;
    if sum % 2 == 1 && toward > from {
        sum / 2 + 1
    } else {
        sum / 2
    }
}

fn index_distance(item: &ConstraintItem, a: &str, b: &str) -> Result<usize> {
    let ia = item.require(a)?;
    let ib = item.require(b)?;
    Ok(ia.abs_diff(ib))
}

/// Adjacent ordinal values are conceded from round 2 onward.
fn concedes_adjacent(item: &ConstraintItem, own: &str, current: &str, round: u32) -> Result<bool> {
    Ok(item.kind == DomainKind::Ordinal && round >= 2 && index_distance(item, own, current)? <= 1)
}

fn item_label(item: &ConstraintItem) -> String {
    item.item_name().replace('_', " ")
}

/// Turns an appraisal into a vote.
pub fn cast_vote(
    appraisal: &Appraisal,
    own: &Preference,
    item: &ConstraintItem,
    current_value: &str,
    round: u32,
    tone: ToneBand,
) -> Result<Vote> {
    item.require(current_value)?;
    item.require(&own.value)?;
    let what = item_label(item);
    let vote = match appraisal.strategy {
        Strategy::Accept => Vote::agree(format!("[{tone}] {current_value} matches what I want for {what}."), tone),
        Strategy::Yield => Vote::agree(
            format!("[{tone}] This clearly matters to you, so I can go with {current_value} for {what}."),
            tone,
        ),
        Strategy::Push => Vote::disagree(
            own.value.clone(),
            format!("[{tone}] I have to insist on {} for {what}.", own.value),
            tone,
        ),
        Strategy::Compromise => {
            if concedes_adjacent(item, &own.value, current_value, round)? {
                Vote::agree(
                    format!("[{tone}] {current_value} is close enough to my preference for {what}."),
                    tone,
                )
            } else {
                let middle = middle_ground(item, current_value, &own.value)?;
                Vote::disagree(
                    middle.clone(),
                    format!("[{tone}] I think {middle} is a fair compromise for {what}."),
                    tone,
                )
            }
        }
    };
    Ok(vote)
}

/// Baseline vote: no appraisal, willingness never consulted, always Neutral
/// unless the caller passes an expressive tone (tone-only ablation).
pub fn base_vote(own: &Preference, item: &ConstraintItem, current_value: &str, round: u32, tone: ToneBand) -> Result<Vote> {
    item.require(current_value)?;
    item.require(&own.value)?;
    let what = item_label(item);
    if current_value == own.value || concedes_adjacent(item, &own.value, current_value, round)? {
        Ok(Vote::agree(format!("[{tone}] I can agree to {current_value} for {what}."), tone))
    } else {
        Ok(Vote::disagree(
            own.value.clone(),
            format!("[{tone}] I would rather have {} for {what}.", own.value),
            tone,
        ))
    }
}

/// Most frequent revised value among dissenters; ties go to the earliest
/// voter.
fn modal_dissent<'a>(dissent: &[&'a Vote]) -> Option<&'a str> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (order, v) in dissent.iter().enumerate() {
        if let Some(value) = v.revised_value.as_deref() {
            let e = counts.entry(value).or_insert((0, order));
            e.0 += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(v, _)| v)
}

/// Proposer's reaction to a failed vote round.
///
/// `votes` is in agent order. In Mind-style modes (`signal_reading`) the
/// proposer keeps at `w = 10` or low dissent, adopts the value of a louder
/// dissenter, or else compromises toward the modal dissent. The baseline
/// updates to the modal dissent only under majority disagreement.
pub fn propose_update(
    own: &Preference,
    current_value: &str,
    votes: &[Vote],
    item: &ConstraintItem,
    signal_reading: bool,
    tone: ToneBand,
) -> Result<ProposerAction> {
    if votes.is_empty() {
        return Err(Error::EmptyInput("proposer update needs at least one vote"));
    }
    item.require(current_value)?;
    for v in votes {
        v.check(item)?;
    }
    let dissent: Vec<&Vote> = votes.iter().filter(|v| !v.is_agree()).collect();
    let rate = dissent.len() as f64 / votes.len() as f64;
    let what = item_label(item);
    let keep = || ProposerAction {
        action: ActionKind::Keep,
        new_value: current_value.to_string(),
        rationale: format!("[{tone}] {current_value} is still the best choice for {what}."),
        tone,
    };
    let update = |value: &str, why: &str| ProposerAction {
        action: ActionKind::Update,
        new_value: value.to_string(),
        rationale: format!("[{tone}] {why} I will update {what} to {value}."),
        tone,
    };

    if !signal_reading {
        return Ok(match modal_dissent(&dissent) {
            Some(modal) if rate > 0.5 => update(modal, "Most of the group disagrees."),
            _ => keep(),
        });
    }

    if own.w == WillingnessScore::MAX || rate <= 0.5 {
        return Ok(keep());
    }
    let own_level = band_of(own.w).level();
    let loudest = dissent
        .iter()
        .filter(|v| v.tone.level() > own_level)
        // max_by_key keeps the last maximum; iterate reversed for earliest
        .rev()
        .max_by_key(|v| v.tone.level());
    if let Some(v) = loudest {
        let value = v.revised_value.as_deref().expect("checked dissent");
        return Ok(update(value, "You clearly feel strongly about this."));
    }

    let modal = modal_dissent(&dissent).expect("rate > 0.5 implies dissent");
    let target = match item.kind {
        DomainKind::Categorical => modal.to_string(),
        DomainKind::Ordinal => {
            let ci = item.require(current_value)?;
            let mi = item.require(modal)?;
            item.allowed_values[midpoint_toward(ci, mi)].clone()
        }
    };
    // a middle ground that lands on a dissenter's own suggestion is adopting it
    if dissent.iter().any(|v| v.revised_value.as_deref() == Some(target.as_str())) {
        return Ok(update(&target, "To reach consensus"));
    }
    Ok(ProposerAction {
        action: ActionKind::Compromise,
        rationale: format!("[{tone}] Let us meet in the middle on {what} with {target}."),
        new_value: target,
        tone,
    })
}
