//! On-disk dataset layout: `index.json` next to the room geometry and the
//! audio files it references.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::AudioClip;
use crate::error::{invalid, read_json, write_json, Error, Result};
use crate::geometry::{Point, Room};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetEntry {
    pub mic_position: [f64; 3],
    /// Response WAV relative to the dataset root.
    pub rir: String,
    #[serde(default)]
    pub music_paths: Vec<String>,
    /// Whether `rir` is a two-ear recording.
    #[serde(default)]
    pub binaural: bool,
    pub split: Split,
}

impl DatasetEntry {
    pub fn position(&self) -> Point {
        Point::from(self.mic_position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetIndex {
    /// Room geometry file relative to the dataset root.
    pub room: String,
    pub sample_rate: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_location: Option<[f64; 3]>,
    /// Dry source audio for music renders, relative to the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dry_music: Option<String>,
    pub entries: Vec<DatasetEntry>,
}

/// A loaded and validated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub index: DatasetIndex,
    pub room: Room,
}

pub const INDEX_FILE: &str = "index.json";

impl Dataset {
    pub fn load(root: &Path) -> Result<Self> {
        let index: DatasetIndex = read_json(&root.join(INDEX_FILE))?;
        let room = Room::load(&root.join(&index.room))?;
        let bb = room.bounding_box();
        for (i, e) in index.entries.iter().enumerate() {
            if !bb.contains(&e.position(), 1e-9) {
                return Err(invalid(format!("entry {i}: microphone outside the room")));
            }
            for f in std::iter::once(&e.rir).chain(&e.music_paths) {
                let p = root.join(f);
                if !p.is_file() {
                    return Err(Error::io(
                        &p,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset file"),
                    ));
                }
            }
        }
        Ok(Dataset {
            root: root.to_path_buf(),
            index,
            room,
        })
    }

    /// Write `index.json` (and nothing else) under `root`.
    pub fn write_index(root: &Path, index: &DatasetIndex) -> Result<()> {
        write_json(&root.join(INDEX_FILE), index)
    }

    pub fn source_location(&self) -> Option<Point> {
        self.index.source_location.map(Point::from)
    }

    pub fn entries(&self, split: Split) -> impl Iterator<Item = (usize, &DatasetEntry)> {
        self.index.entries.iter().enumerate().filter(move |(_, e)| e.split == split)
    }

    pub fn load_rir(&self, i: usize) -> Result<AudioClip> {
        let e = &self.index.entries[i];
        let clip = AudioClip::read_wav(&self.root.join(&e.rir))?;
        clip.require_rate(self.index.sample_rate)?;
        if !e.binaural && clip.channels() != 1 {
            return Err(Error::Format(format!("{}: expected a mono response", e.rir)));
        }
        Ok(clip)
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
}
