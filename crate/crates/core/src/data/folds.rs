//! Leave-one-session-out folds with a stratified validation split.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::Manifest;
use crate::error::{Error, Result};

/// Record indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    /// Held-out session; also the fold id.
    pub session: u32,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    pub fn ids<'a>(&self, manifest: &'a Manifest, which: &[usize]) -> Vec<&'a str> {
        which.iter().map(|&i| manifest.records[i].id.as_str()).collect()
    }
}

/// Folds for every session of the manifest, ordered by session.
pub fn split_folds(manifest: &Manifest, val_fraction: f64, seed: u64) -> Result<Vec<Fold>> {
    let sessions = manifest.sessions();
    if sessions.len() < 2 {
        return Err(Error::config(format!(
            "cross-validation needs at least 2 sessions, manifest has {}",
            sessions.len()
        )));
    }
    sessions
        .iter()
        .map(|&s| fold_for_session(manifest, s, val_fraction, seed))
        .collect()
}

/// Fold that tests on `session`. The validation set takes `val_fraction` of
/// each class among the remaining utterances (at least one when a class has
/// two or more), chosen by a shuffle seeded from `(seed, session)`.
pub fn fold_for_session(
    manifest: &Manifest,
    session: u32,
    val_fraction: f64,
    seed: u64,
) -> Result<Fold> {
    let mut test = Vec::new();
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in manifest.records.iter().enumerate() {
        if r.session == session {
            test.push(i);
        } else {
            by_class.entry(manifest.label_index(r)).or_default().push(i);
        }
    }
    if test.is_empty() {
        return Err(Error::config(format!("session {session} has no utterances")));
    }
    let test_speakers: HashSet<&str> = test
        .iter()
        .map(|&i| manifest.records[i].speaker.as_str())
        .collect();
    if let Some(r) = manifest
        .records
        .iter()
        .find(|r| r.session != session && test_speakers.contains(r.speaker.as_str()))
    {
        return Err(Error::config(format!(
            "speaker '{}' appears in session {} and held-out session {session}",
            r.speaker, r.session
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(session));
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        let mut n_val = (val_fraction * members.len() as f64).round() as usize;
        if val_fraction > 0.0 && members.len() >= 2 {
            n_val = n_val.max(1);
        }
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok(Fold {
        session,
        train,
        val,
        test,
    })
}
