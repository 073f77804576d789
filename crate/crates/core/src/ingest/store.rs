use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layout::ColumnLayout;
use super::record::LogRecord;
use super::timestamp::format_timestamp;
use super::{read_records, ParseMode};
use crate::error::{Error, Result};

pub const STORE_FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const LAYOUT_FILE: &str = "layout.json";
const USERS_DIR: &str = "users";

/// Records grouped by user, each user's records sorted by timestamp.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserStore {
    users: BTreeMap<String, Vec<LogRecord>>,
    total: usize,
}

/// Groups records by user. Each user's sequence is stably sorted by time.
pub fn group_by_user<I: IntoIterator<Item = LogRecord>>(records: I) -> UserStore {
    let mut store = UserStore::default();
    for r in records {
        store.push(r);
    }
    store.sort();
    store
}

impl UserStore {
    fn push(&mut self, record: LogRecord) {
        self.total += 1;
        match self.users.get_mut(record.user_id.as_str()) {
            Some(v) => v.push(record),
            None => {
                self.users.insert(record.user_id.clone(), vec![record]);
            }
        }
    }

    fn sort(&mut self) {
        for v in self.users.values_mut() {
            v.sort_by_key(|r| r.timestamp);
        }
    }

    /// Appends `other`'s records after this store's, then re-sorts.
    pub fn merge(mut self, other: UserStore) -> UserStore {
        for (_, records) in other.users {
            for r in records {
                self.push(r);
            }
        }
        self.sort();
        self
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn total_record_count(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn records(&self, user_id: &str) -> Option<&[LogRecord]> {
        self.users.get(user_id).map(Vec::as_slice)
    }

    /// Users in ascending id order.
    pub fn users(&self) -> impl Iterator<Item = (&str, &[LogRecord])> {
        self.users.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.users.keys().map(String::as_str)
    }

    pub fn counts(&self) -> BTreeMap<&str, usize> {
        self.users.iter().map(|(k, v)| (k.as_str(), v.len())).collect()
    }

    /// Users with `lo <= count <= hi`, ascending by id.
    pub fn select_users_by_frequency(&self, lo: usize, hi: usize) -> Result<Vec<String>> {
        select_users_by_frequency(self, lo, hi)
    }

    pub fn manifest(&self) -> StoreManifest {
        StoreManifest {
            format_version: STORE_FORMAT_VERSION,
            total_records: self.total,
            users: self
                .users
                .iter()
                .map(|(id, recs)| UserEntry {
                    user_id: id.clone(),
                    file: user_file_name(id),
                    count: recs.len(),
                    first: recs.first().map(|r| format_timestamp(&r.timestamp)),
                    last: recs.last().map(|r| format_timestamp(&r.timestamp)),
                })
                .collect(),
        }
    }

    /// Writes one CSV per user under `dir/users/` plus the manifest and layout.
    pub fn save(&self, dir: &Path, layout: &ColumnLayout) -> Result<StoreManifest> {
        let users_dir = dir.join(USERS_DIR);
        fs::create_dir_all(&users_dir).map_err(Error::at_path(&users_dir))?;
        let manifest = self.manifest();
        for entry in &manifest.users {
            let path = users_dir.join(&entry.file);
            let file = fs::File::create(&path).map_err(Error::at_path(&path))?;
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(BufWriter::new(file));
            for r in &self.users[&entry.user_id] {
                if r.raw_fields.len() != layout.column_count {
                    return Err(Error::invalid(format!(
                        "record for {} has no raw fields to persist",
                        r.user_id
                    )));
                }
                writer.write_record(&r.raw_fields)?;
            }
            writer.flush()?;
        }
        layout.save(&dir.join(LAYOUT_FILE))?;
        let path = dir.join(MANIFEST_FILE);
        let mut f = fs::File::create(&path).map_err(Error::at_path(&path))?;
        f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(manifest)
    }

    /// Loads a store written by [`UserStore::save`].
    pub fn load(dir: &Path) -> Result<(UserStore, ColumnLayout)> {
        let layout = ColumnLayout::load(&dir.join(LAYOUT_FILE))?;
        let manifest = StoreManifest::load(dir)?;
        let mut store = UserStore::default();
        for entry in &manifest.users {
            let path = dir.join(USERS_DIR).join(&entry.file);
            let file = fs::File::open(&path).map_err(Error::at_path(&path))?;
            let mut records = Vec::with_capacity(entry.count);
            read_records(file, &layout, ParseMode::Strict, |r| records.push(r))?;
            if records.len() != entry.count || records.iter().any(|r| r.user_id != entry.user_id) {
                return Err(Error::DataQuality(format!(
                    "{} does not match manifest entry for {}",
                    path.display(),
                    entry.user_id
                )));
            }
            store.total += records.len();
            store.users.insert(entry.user_id.clone(), records);
        }
        store.sort();
        if store.total != manifest.total_records {
            return Err(Error::DataQuality("manifest total mismatch".into()));
        }
        Ok((store, layout))
    }
}

/// Users with `lo <= count <= hi`, ascending by id.
pub fn select_users_by_frequency(store: &UserStore, lo: usize, hi: usize) -> Result<Vec<String>> {
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(store
        .users
        .iter()
        .filter(|(_, v)| (lo..=hi).contains(&v.len()))
        .map(|(k, _)| k.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserEntry {
    pub user_id: String,
    pub file: String,
    pub count: usize,
    pub first: Option<String>,
    pub last: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub format_version: u32,
    pub total_records: usize,
    pub users: Vec<UserEntry>,
}

impl StoreManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(Error::at_path(&path))?;
        let manifest: StoreManifest = serde_json::from_str(&text)?;
        if manifest.format_version != STORE_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: manifest.format_version,
                expected: STORE_FORMAT_VERSION,
            });
        }
        Ok(manifest)
    }
}

/// File name for a user's records; injective over user ids.
pub fn user_file_name(user_id: &str) -> String {
    let mut out = String::with_capacity(user_id.len() + 4);
    for b in user_id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'_' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out.push_str(".csv");
    out
}
