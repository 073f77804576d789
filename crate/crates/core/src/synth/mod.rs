//! Synthetic access-log corpora in the standard 42-column layout.
//!
//! Two regimes are supported. With [`Separability::Low`] every user draws
//! each field independently from the shared global marginals, so users are
//! statistically indistinguishable. With [`Separability::High`] each user
//! gets a distinct dominant profile (match rule, device/signature state,
//! browser, usual hour) and deviates from it on one field at a time with
//! probability `1 - profile_concentration`.

mod templates;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    format_timestamp, group_by_user, parse_fields, ColumnLayout, LogRecord, UserStore,
    STANDARD_COLUMNS,
};
use crate::schema::{BROWSERS, DEVICE_VALUES, MATCH_RULES, SIGNATURE_VALUES};
use crate::seed::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Separability {
    #[default]
    Low,
    High,
}

/// Distribution of records per user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordsPerUser {
    Uniform { min: usize, max: usize },
    /// Truncated power law with density proportional to `x^-exponent` on
    /// `[min, max + 1)`, floored to an integer.
    PowerLaw { min: usize, max: usize, exponent: f64 },
}

impl Default for RecordsPerUser {
    fn default() -> Self {
        RecordsPerUser::PowerLaw {
            min: 10,
            max: 20_000,
            exponent: 2.0,
        }
    }
}

impl RecordsPerUser {
    fn validate(&self) -> Result<()> {
        match *self {
            RecordsPerUser::Uniform { min, max } if min <= max && min >= 1 => Ok(()),
            RecordsPerUser::PowerLaw { min, max, exponent }
                if min <= max && min >= 1 && exponent > 0.0 && exponent != 1.0 =>
            {
                Ok(())
            }
            _ => Err(Error::invalid(format!("invalid records_per_user {self:?}"))),
        }
    }

    fn power_cdf(min: usize, max: usize, exponent: f64, x: f64) -> f64 {
        let e = 1.0 - exponent;
        let lo = (min as f64).powf(e);
        let hi = ((max + 1) as f64).powf(e);
        let x = x.clamp(min as f64, (max + 1) as f64);
        (x.powf(e) - lo) / (hi - lo)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            RecordsPerUser::Uniform { min, max } => rng.random_range(min..=max),
            RecordsPerUser::PowerLaw { min, max, exponent } => {
                let e = 1.0 - exponent;
                let lo = (min as f64).powf(e);
                let hi = ((max + 1) as f64).powf(e);
                let u: f64 = rng.random();
                let x = (lo + u * (hi - lo)).powf(1.0 / e);
                (x.floor() as usize).clamp(min, max)
            }
        }
    }

    /// Probability that a user's count falls in `lo..=hi`.
    pub fn band_probability(&self, lo: usize, hi: usize) -> f64 {
        match *self {
            RecordsPerUser::Uniform { min, max } => {
                let a = lo.max(min);
                let b = hi.min(max);
                if a > b {
                    0.0
                } else {
                    (b - a + 1) as f64 / (max - min + 1) as f64
                }
            }
            RecordsPerUser::PowerLaw { min, max, exponent } => {
                Self::power_cdf(min, max, exponent, (hi + 1) as f64)
                    - Self::power_cdf(min, max, exponent, lo as f64)
            }
        }
    }
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Global browser marginals, in [`BROWSERS`] order. Internet Explorer
/// dominates, Chrome follows, and Opera, PSP and SeaMonkey are near-absent.
pub fn default_browser_marginals() -> Vec<f64> {
    let rare = 4e-6;
    let (android, chrome, firefox, safari) = (0.015, 0.135, 0.07, 0.04);
    let ie = 1.0 - (android + chrome + firefox + safari + 3.0 * rare);
    vec![android, chrome, firefox, ie, rare, rare, safari, rare]
}

/// Global match-rule marginals, in [`MATCH_RULES`] order.
pub fn default_match_rule_marginals() -> Vec<f64> {
    normalized(&[0.06, 0.0002, 0.52, 0.09, 0.04, 0.0003, 0.0002, 0.2893])
}

/// `NN`, `YN`, `YY`.
pub fn default_device_marginals() -> Vec<f64> {
    vec![0.10, 0.04, 0.86]
}

/// Monday first.
pub fn default_day_marginals() -> Vec<f64> {
    normalized(&[1.0, 1.0, 1.0, 1.0, 1.0, 0.3, 0.3])
}

pub fn default_hour_marginals() -> Vec<f64> {
    normalized(&[
        0.05, 0.02, 0.02, 0.02, 0.03, 0.2, 1.0, 3.0, 8.0, 10.0, 10.0, 10.0, 8.0, 10.0, 10.0, 10.0,
        8.0, 5.0, 2.0, 1.5, 1.0, 0.8, 0.5, 0.2,
    ])
}

/// Generator settings. Every field has a default, so `{}` is a valid spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub user_count: usize,
    pub records_per_user: RecordsPerUser,
    pub match_rule_marginals: Vec<f64>,
    pub browser_marginals: Vec<f64>,
    pub device_check_marginals: Vec<f64>,
    /// Probability of signature `N` when the device check is `NN`; known
    /// devices always carry signature `Y`.
    pub signature_n_given_no_device: f64,
    pub day_of_week_marginals: Vec<f64>,
    pub hour_marginals: Vec<f64>,
    /// Probability that a High-separability record follows its user's profile.
    pub profile_concentration: f64,
    pub separability: Separability,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub days: u32,
    pub users_per_file: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            user_count: 1000,
            records_per_user: RecordsPerUser::default(),
            match_rule_marginals: default_match_rule_marginals(),
            browser_marginals: default_browser_marginals(),
            device_check_marginals: default_device_marginals(),
            signature_n_given_no_device: 0.6,
            day_of_week_marginals: default_day_marginals(),
            hour_marginals: default_hour_marginals(),
            profile_concentration: 0.96,
            separability: Separability::Low,
            seed: 7,
            start_date: NaiveDate::from_ymd_opt(2014, 2, 15).expect("valid date"),
            days: 89,
            users_per_file: 1000,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.user_count < 1 {
            return Err(Error::invalid("user_count must be at least 1"));
        }
        self.records_per_user.validate()?;
        let checks: [(&str, &[f64], usize); 5] = [
            ("match_rule_marginals", &self.match_rule_marginals, MATCH_RULES.len()),
            ("browser_marginals", &self.browser_marginals, BROWSERS.len()),
            ("device_check_marginals", &self.device_check_marginals, DEVICE_VALUES.len()),
            ("day_of_week_marginals", &self.day_of_week_marginals, 7),
            ("hour_marginals", &self.hour_marginals, 24),
        ];
        for (name, m, len) in checks {
            if m.len() != len {
                return Err(Error::invalid(format!("{name} needs {len} entries")));
            }
            if m.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::invalid(format!("{name} has a negative entry")));
            }
            let sum: f64 = m.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("{name} sums to {sum}, not 1")));
            }
        }
        for (name, p) in [
            ("signature_n_given_no_device", self.signature_n_given_no_device),
            ("profile_concentration", self.profile_concentration),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} outside [0, 1]")));
            }
        }
        if self.days < 1 || self.users_per_file < 1 {
            return Err(Error::invalid("days and users_per_file must be at least 1"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::at_path(path))?;
        let spec: CorpusSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Categorical state of one record, as ordinals into the shipped orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    pub match_rule: u8,
    pub device_check: u8,
    pub signature_check: u8,
    pub browser: u8,
}

impl Profile {
    pub fn match_rule_name(&self) -> &'static str {
        MATCH_RULES[self.match_rule as usize]
    }

    pub fn device_check_name(&self) -> &'static str {
        DEVICE_VALUES[self.device_check as usize]
    }

    pub fn signature_check_name(&self) -> &'static str {
        SIGNATURE_VALUES[self.signature_check as usize]
    }

    pub fn browser_name(&self) -> &'static str {
        BROWSERS[self.browser as usize]
    }
}

/// Valid (device, signature) pairs: a known device always has signature Y.
const DEVICE_SIGNATURE_PAIRS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 1), (2, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub log_id: u64,
    pub timestamp: NaiveDateTime,
    pub profile: Profile,
    pub ua_variant: u32,
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUser {
    pub id: String,
    pub records: Vec<SynthRecord>,
}

/// An in-memory corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    spec: CorpusSpec,
    users: Vec<SynthUser>,
    next_log_id: u64,
    injections: u64,
}

pub fn format_log_id(id: u64) -> String {
    format!("L{id:09}")
}

pub fn user_id_for(index: usize) -> String {
    format!("user{:05}", index + 1)
}

/// Inverse CDF over the categories with positive probability.
struct Ranked {
    order: Vec<u8>,
    cumulative: Vec<f64>,
}

impl Ranked {
    fn new(marginals: &[f64]) -> Self {
        let order: Vec<u8> = (0..marginals.len() as u8)
            .filter(|&i| marginals[i as usize] > 0.0)
            .collect();
        let mut acc = 0.0;
        let cumulative = order
            .iter()
            .map(|&i| {
                acc += marginals[i as usize];
                acc
            })
            .collect();
        Ranked { order, cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u8 {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.order[k.min(self.order.len() - 1)]
    }
}

struct Sampler {
    match_rule: Ranked,
    browser: Ranked,
    device: Ranked,
    day: WeightedIndex<f64>,
    hour: WeightedIndex<f64>,
    signature_n: f64,
    start: NaiveDate,
    days: u32,
    /// Window day offsets grouped by weekday (Monday = 0).
    offsets_by_weekday: Vec<Vec<u32>>,
}

impl Sampler {
    fn new(spec: &CorpusSpec) -> Result<Self> {
        let w = |m: &[f64]| WeightedIndex::new(m).map_err(|e| Error::invalid(e.to_string()));
        let mut offsets_by_weekday = vec![Vec::new(); 7];
        for off in 0..spec.days {
            let date = spec.start_date + Duration::days(off as i64);
            offsets_by_weekday[date.weekday().num_days_from_monday() as usize].push(off);
        }
        Ok(Sampler {
            match_rule: Ranked::new(&spec.match_rule_marginals),
            browser: Ranked::new(&spec.browser_marginals),
            device: Ranked::new(&spec.device_check_marginals),
            day: w(&spec.day_of_week_marginals)?,
            hour: w(&spec.hour_marginals)?,
            signature_n: spec.signature_n_given_no_device,
            start: spec.start_date,
            days: spec.days,
            offsets_by_weekday,
        })
    }

    fn signature_for<R: Rng>(&self, device: u8, rng: &mut R) -> u8 {
        if device == 0 && rng.random_bool(self.signature_n) {
            0
        } else {
            1
        }
    }

    fn global_profile<R: Rng>(&self, rng: &mut R) -> Profile {
        let device = self.device.sample(rng);
        Profile {
            match_rule: self.match_rule.sample(rng),
            signature_check: self.signature_for(device, rng),
            device_check: device,
            browser: self.browser.sample(rng),
        }
    }

    fn date<R: Rng>(&self, rng: &mut R) -> NaiveDate {
        loop {
            let weekday = self.day.sample(rng);
            let offsets = &self.offsets_by_weekday[weekday];
            if !offsets.is_empty() {
                return self.start + Duration::days(offsets[rng.random_range(0..offsets.len())] as i64);
            }
            if self.days >= 7 {
                unreachable!("every weekday occurs in a window of 7+ days");
            }
        }
    }

    fn timestamp<R: Rng>(&self, hour: u32, rng: &mut R) -> NaiveDateTime {
        let time = NaiveTime::from_hms_opt(hour, rng.random_range(0..60), rng.random_range(0..60))
            .expect("valid time");
        NaiveDateTime::new(self.date(rng), time)
    }
}

fn all_profiles() -> Vec<Profile> {
    let mut out = Vec::with_capacity(MATCH_RULES.len() * 4 * BROWSERS.len());
    for mr in 0..MATCH_RULES.len() as u8 {
        for &(dev, sig) in &DEVICE_SIGNATURE_PAIRS {
            for br in 0..BROWSERS.len() as u8 {
                out.push(Profile {
                    match_rule: mr,
                    device_check: dev,
                    signature_check: sig,
                    browser: br,
                });
            }
        }
    }
    out
}

/// Redraws one field group of `base` uniformly.
fn perturb<R: Rng>(base: Profile, rng: &mut R) -> Profile {
    let mut p = base;
    match rng.random_range(0..3) {
        0 => p.match_rule = rng.random_range(0..MATCH_RULES.len() as u8),
        1 => {
            let (d, s) = DEVICE_SIGNATURE_PAIRS[rng.random_range(0..DEVICE_SIGNATURE_PAIRS.len())];
            p.device_check = d;
            p.signature_check = s;
        }
        _ => p.browser = rng.random_range(0..BROWSERS.len() as u8),
    }
    p
}

fn generate_user(spec: &CorpusSpec, sampler: &Sampler, index: usize, profile: Profile) -> Vec<SynthRecord> {
    let mut rng = stream_rng(spec.seed, index as u64);
    // must stay the first draw on the stream; see `planned_record_counts`
    let count = spec.records_per_user.sample(&mut rng);
    let usual_hour = rng.random_range(7..=18u32);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (p, hour) = match spec.separability {
            Separability::Low => (sampler.global_profile(&mut rng), sampler.hour.sample(&mut rng) as u32),
            Separability::High => {
                if rng.random_bool(spec.profile_concentration) {
                    let jitter = rng.random_range(0..3u32);
                    (profile, (usual_hour + jitter).saturating_sub(1))
                } else {
                    (perturb(profile, &mut rng), sampler.hour.sample(&mut rng) as u32)
                }
            }
        };
        out.push(SynthRecord {
            log_id: 0,
            timestamp: sampler.timestamp(hour, &mut rng),
            profile: p,
            ua_variant: rng.random_range(0..16),
            injected: false,
        });
    }
    out
}

/// Record count each user will get from [`generate`], before injections,
/// without generating the records.
pub fn planned_record_counts(spec: &CorpusSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    Ok((0..spec.user_count)
        .into_par_iter()
        .map(|i| spec.records_per_user.sample(&mut stream_rng(spec.seed, i as u64)))
        .collect())
}

/// Generates a corpus in memory. Deterministic in `spec`.
pub fn generate(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let sampler = Sampler::new(spec)?;
    let profiles = {
        let mut all = all_profiles();
        let mut rng: ChaCha8Rng = stream_rng(derive_seed(spec.seed, "profiles", 0), 0);
        all.shuffle(&mut rng);
        all
    };
    let per_user: Vec<Vec<SynthRecord>> = (0..spec.user_count)
        .into_par_iter()
        .map(|i| generate_user(spec, &sampler, i, profiles[i % profiles.len()]))
        .collect();
    let mut next = 1u64;
    let users = per_user
        .into_iter()
        .enumerate()
        .map(|(i, mut records)| {
            for r in &mut records {
                r.log_id = next;
                next += 1;
            }
            SynthUser {
                id: user_id_for(i),
                records,
            }
        })
        .collect();
    Ok(Corpus {
        spec: spec.clone(),
        users,
        next_log_id: next,
        injections: 0,
    })
}

/// Field overrides applied to a user's usual profile.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileDelta {
    pub match_rule: Option<String>,
    pub signature_check: Option<String>,
    pub device_check: Option<String>,
    pub browser: Option<String>,
    pub hour_of_day: Option<u8>,
}

fn ordinal_of(values: &[&str], raw: &str, field: &str) -> Result<u8> {
    values
        .iter()
        .position(|v| *v == raw)
        .map(|p| p as u8)
        .ok_or_else(|| Error::UnknownCategory {
            dimension: field.to_owned(),
            value: raw.to_owned(),
        })
}

impl ProfileDelta {
    pub fn apply(&self, base: Profile) -> Result<Profile> {
        let mut p = base;
        if let Some(v) = &self.match_rule {
            p.match_rule = ordinal_of(&MATCH_RULES, v, "match_rule")?;
        }
        if let Some(v) = &self.signature_check {
            p.signature_check = ordinal_of(&SIGNATURE_VALUES, v, "signature_check")?;
        }
        if let Some(v) = &self.device_check {
            p.device_check = ordinal_of(&DEVICE_VALUES, v, "device_check")?;
        }
        if let Some(v) = &self.browser {
            p.browser = ordinal_of(&BROWSERS, v, "browser")?;
        }
        Ok(p)
    }
}

fn mode<T: Ord + Copy>(values: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    // ties go to the smallest value
    counts
        .into_iter()
        .fold(None, |best: Option<(T, usize)>, (v, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((v, c)),
        })
        .map(|(v, _)| v)
}

/// Appends `count` records for `user` that follow the user's usual profile
/// except for the fields set in `delta`. Returns their record references.
pub fn inject_known_anomalies(
    corpus: &mut Corpus,
    user: &str,
    count: usize,
    delta: &ProfileDelta,
) -> Result<Vec<String>> {
    corpus.inject(user, count, delta)
}

/// Summary of a written corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub users: usize,
    pub total_records: usize,
    pub injected_records: usize,
    pub files: Vec<String>,
    pub records_per_user: BTreeMap<String, usize>,
}

/// Subdirectory holding the log shards, kept apart from the metadata files.
pub const LOG_DIR: &str = "logs";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LAYOUT_FILE: &str = "layout.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

impl Corpus {
    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn users(&self) -> &[SynthUser] {
        &self.users
    }

    pub fn user(&self, id: &str) -> Option<&SynthUser> {
        self.users.iter().find(|u| u.id == id)
    }

    pub fn total_records(&self) -> usize {
        self.users.iter().map(|u| u.records.len()).sum()
    }

    /// Most frequent categorical profile among the user's generated records.
    pub fn usual_profile(&self, user: &str) -> Result<Profile> {
        let u = self.user(user).ok_or_else(|| Error::UnknownUser(user.to_owned()))?;
        mode(u.records.iter().filter(|r| !r.injected).map(|r| r.profile))
            .ok_or_else(|| Error::invalid(format!("user {user} has no records")))
    }

    fn usual_hour(&self, user: &SynthUser) -> u32 {
        mode(user.records.iter().filter(|r| !r.injected).map(|r| {
            use chrono::Timelike;
            r.timestamp.hour()
        }))
        .unwrap_or(9)
    }

    fn inject(&mut self, user: &str, count: usize, delta: &ProfileDelta) -> Result<Vec<String>> {
        if count < 1 {
            return Err(Error::invalid("count must be at least 1"));
        }
        if delta.hour_of_day.is_some_and(|h| h > 23) {
            return Err(Error::invalid("hour_of_day must be 0..=23"));
        }
        if self.user(user).is_none() {
            return Err(Error::invalid(format!("unknown user {user:?}")));
        }
        let base = self.usual_profile(user)?;
        let profile = delta.apply(base)?;
        let slot = self.users.iter().position(|u| u.id == user).expect("user exists");
        let hour = delta
            .hour_of_day
            .map_or_else(|| self.usual_hour(&self.users[slot]), u32::from);
        let sampler = Sampler::new(&self.spec)?;
        let mut rng = stream_rng(derive_seed(self.spec.seed, "inject", slot as u64), self.injections);
        self.injections += 1;
        let mut refs = Vec::with_capacity(count);
        for _ in 0..count {
            let id = self.next_log_id;
            self.next_log_id += 1;
            let ua_variant = rng.random_range(0..16);
            self.users[slot].records.push(SynthRecord {
                log_id: id,
                timestamp: sampler.timestamp(hour, &mut rng),
                profile,
                ua_variant,
                injected: true,
            });
            refs.push(format_log_id(id));
        }
        Ok(refs)
    }

    /// References of every injected record.
    pub fn ground_truth(&self) -> Vec<String> {
        self.users
            .iter()
            .flat_map(|u| u.records.iter().filter(|r| r.injected).map(|r| format_log_id(r.log_id)))
            .collect()
    }

    fn row(user: &SynthUser, r: &SynthRecord) -> Vec<String> {
        let mut row = vec![String::new(); STANDARD_COLUMNS.len()];
        let p = &r.profile;
        let known_device = p.device_check != 0;
        let values: [(&str, String); 14] = [
            ("LOG_ID", format_log_id(r.log_id)),
            ("DATE_TIME", format_timestamp(&r.timestamp)),
            ("USER_ID", user.id.clone()),
            ("ORG_NAME", "PAYROLL".to_owned()),
            ("CHANNEL", "WEB".to_owned()),
            ("ACTION", "LOGIN".to_owned()),
            ("MATCH_RULE", p.match_rule_name().to_owned()),
            ("SIGNATURE_CHECK", p.signature_check_name().to_owned()),
            ("DEVICE_CHECK", p.device_check_name().to_owned()),
            ("DEVICE_SIGNATURE", templates::device_signature(p.browser_name(), r.ua_variant)),
            (
                "DEVICE_ID",
                if known_device {
                    format!("D-{}-{}", user.id, r.ua_variant % 3)
                } else {
                    String::new()
                },
            ),
            ("RISK_SCORE", ((r.log_id * 37) % 100).to_string()),
            ("ADVICE", "ALLOW".to_owned()),
            ("STATUS", "OK".to_owned()),
        ];
        for (name, v) in values {
            let i = STANDARD_COLUMNS.iter().position(|c| *c == name).expect("standard column");
            row[i] = v;
        }
        row
    }

    /// Every record parsed through the standard layout, grouped by user.
    pub fn user_store(&self) -> Result<UserStore> {
        let layout = ColumnLayout::default();
        let mut records: Vec<LogRecord> = Vec::with_capacity(self.total_records());
        for u in &self.users {
            for r in &u.records {
                let fields = csv::StringRecord::from(Self::row(u, r));
                records.push(parse_fields(fields, &layout, r.log_id)?);
            }
        }
        Ok(group_by_user(records))
    }

    /// Writes log shards under [`LOG_DIR`], plus the layout sidecar, the
    /// manifest and the ground truth next to it.
    pub fn write(&self, dir: &Path) -> Result<CorpusManifest> {
        let log_dir = dir.join(LOG_DIR);
        fs::create_dir_all(&log_dir).map_err(Error::at_path(&log_dir))?;
        let mut files = Vec::new();
        for (shard, users) in self.users.chunks(self.spec.users_per_file).enumerate() {
            let name = format!("{LOG_DIR}/logs-{shard:04}.csv");
            let path = dir.join(&name);
            let file = fs::File::create(&path).map_err(Error::at_path(&path))?;
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(BufWriter::new(file));
            for u in users {
                for r in &u.records {
                    w.write_record(Self::row(u, r))?;
                }
            }
            w.flush()?;
            files.push(name);
        }
        ColumnLayout::default().save(&dir.join(LAYOUT_FILE))?;

        let gt_path = dir.join(GROUND_TRUTH_FILE);
        let mut gt = csv::Writer::from_writer(BufWriter::new(
            fs::File::create(&gt_path).map_err(Error::at_path(&gt_path))?,
        ));
        gt.write_record(["record_ref", "user", "injected"])?;
        for u in &self.users {
            for r in &u.records {
                gt.write_record([format_log_id(r.log_id), u.id.clone(), r.injected.to_string()])?;
            }
        }
        gt.flush()?;

        let manifest = CorpusManifest {
            seed: self.spec.seed,
            users: self.users.len(),
            total_records: self.total_records(),
            injected_records: self.users.iter().flat_map(|u| &u.records).filter(|r| r.injected).count(),
            files,
            records_per_user: self.users.iter().map(|u| (u.id.clone(), u.records.len())).collect(),
        };
        let path = dir.join(MANIFEST_FILE);
        let mut f = fs::File::create(&path).map_err(Error::at_path(&path))?;
        f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(manifest)
    }
}

/// Generates a corpus for `spec` and writes it under `dir`.
pub fn generate_corpus(spec: &CorpusSpec, dir: &Path) -> Result<CorpusManifest> {
    generate(spec)?.write(dir)
}
