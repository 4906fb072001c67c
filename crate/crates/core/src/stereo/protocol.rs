//! Trial schedule of the viewing experiment and behavioral task scoring.
//!
//! Each trial is a fixation cross (1–1.5 s), the object (2.5–3 s) and a
//! question mark (1.5 s). 160 trials per condition (C, NC, flat) are spread
//! over 4 sub-sessions of 120.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{ComfortZoneSpec, DepthRange};
use crate::data::ConditionLabel;
use crate::error::{Error, Result};

pub const TRIALS_PER_CONDITION: usize = 160;
pub const N_SUB_SESSIONS: usize = 4;
pub const N_TRIALS: usize = 3 * TRIALS_PER_CONDITION;
pub const CROSS_DURATION_S: (f64, f64) = (1.0, 1.5);
pub const OBJECT_DURATION_S: (f64, f64) = (2.5, 3.0);
pub const QUESTION_DURATION_S: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub condition: ConditionLabel,
    pub depth_m: f64,
    /// 1-based.
    pub sub_session: usize,
    pub start_s: f64,
    pub cross_duration_s: f64,
    pub object_duration_s: f64,
    pub question_duration_s: f64,
}

impl Trial {
    pub fn object_onset_s(&self) -> f64 {
        self.start_s + self.cross_duration_s
    }

    pub fn question_onset_s(&self) -> f64 {
        self.object_onset_s() + self.object_duration_s
    }

    pub fn end_s(&self) -> f64 {
        self.question_onset_s() + self.question_duration_s
    }

    pub fn duration_s(&self) -> f64 {
        self.cross_duration_s + self.object_duration_s + self.question_duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub trials: Vec<Trial>,
}

impl TrialSchedule {
    pub fn count(&self, condition: ConditionLabel) -> usize {
        self.trials.iter().filter(|t| t.condition == condition).count()
    }

    pub fn sub_session_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; N_SUB_SESSIONS];
        for t in &self.trials {
            sizes[t.sub_session - 1] += 1;
        }
        sizes
    }

    pub fn end_s(&self) -> f64 {
        self.trials.last().map_or(0.0, Trial::end_s)
    }

    pub fn mean_trial_duration_s(&self) -> f64 {
        self.trials.iter().map(Trial::duration_s).sum::<f64>() / self.trials.len().max(1) as f64
    }
}

fn sample_in(rng: &mut ChaCha8Rng, r: DepthRange) -> f64 {
    rng.random_range(r.min_m..=r.max_m)
}

/// Randomized 480-trial schedule. Each sub-session holds 40 trials of each
/// condition in shuffled order; close and far sub-ranges are equiprobable.
pub fn generate_schedule(spec: &ComfortZoneSpec, seed: u64) -> Result<TrialSchedule> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_block = TRIALS_PER_CONDITION / N_SUB_SESSIONS;
    let mut trials = Vec::with_capacity(N_TRIALS);
    let mut clock = 0.0;
    for sub_session in 1..=N_SUB_SESSIONS {
        let mut conditions: Vec<ConditionLabel> = [
            ConditionLabel::Comfort,
            ConditionLabel::NoComfort,
            ConditionLabel::Flat,
        ]
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, per_block))
        .collect();
        conditions.shuffle(&mut rng);
        for condition in conditions {
            let far = rng.random_bool(0.5);
            let depth_m = match (condition, far) {
                (ConditionLabel::Comfort, false) => sample_in(&mut rng, spec.comfort_close),
                (ConditionLabel::Comfort, true) => sample_in(&mut rng, spec.comfort_far),
                (ConditionLabel::NoComfort, false) => sample_in(&mut rng, spec.no_comfort_close),
                (ConditionLabel::NoComfort, true) => sample_in(&mut rng, spec.no_comfort_far),
                (ConditionLabel::Flat, _) => spec.flat_depth_m,
            };
            let trial = Trial {
                condition,
                depth_m,
                sub_session,
                start_s: clock,
                cross_duration_s: rng.random_range(CROSS_DURATION_S.0..=CROSS_DURATION_S.1),
                object_duration_s: rng.random_range(OBJECT_DURATION_S.0..=OBJECT_DURATION_S.1),
                question_duration_s: QUESTION_DURATION_S,
            };
            clock = trial.end_s();
            trials.push(trial);
        }
    }
    Ok(TrialSchedule { trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskResponse {
    Correct,
    Incorrect,
    None,
}

/// +1 per correct, −1 per incorrect answer, normalized by the trial count to
/// `[-1, 1]`.
pub fn score_task(responses: &[TaskResponse]) -> Result<f64> {
    if responses.len() != N_TRIALS {
        return Err(Error::WrongResponseCount {
            expected: N_TRIALS,
            got: responses.len(),
        });
    }
    let points: i64 = responses
        .iter()
        .map(|r| match r {
            TaskResponse::Correct => 1,
            TaskResponse::Incorrect => -1,
            TaskResponse::None => 0,
        })
        .sum();
    Ok(points as f64 / N_TRIALS as f64)
}
