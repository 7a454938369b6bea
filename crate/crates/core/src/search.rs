//! Coarse-to-fine similarity search over a corpus of blur stacks.
//!
//! Every indexed stack is reduced to one 64x64 thumbnail per layer. A query
//! is compared level by level starting from the coarsest blur; only the
//! entries whose score stays within that level's threshold go on to the next,
//! finer level.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::BlurStack;
use crate::error::{Error, Result};
use crate::raster::{clamp8, resize_bilinear, Plane, RasterImage};
use crate::scale_space::PAPER_SIGMAS;

pub const THUMBNAIL_SIZE: usize = 64;

const MANIFEST: &str = "manifest.txt";
const MANIFEST_MAGIC: &str = "blurstack-index 1";

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    /// Container the entry was built from, if it came from a file.
    pub path: Option<PathBuf>,
    /// One thumbnail per level, coarsest first.
    pub thumbnails: Vec<RasterImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackIndex {
    preset: String,
    sigmas: Vec<f32>,
    channels: usize,
    entries: BTreeMap<String, IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub id: String,
    /// Mean absolute difference / 255 for each level actually compared.
    pub per_level_scores: Vec<f64>,
    /// Number of levels compared (1-based depth).
    pub deepest_level_reached: usize,
    /// Survived every threshold.
    pub accepted: bool,
}

/// Name of the schedule a stack was built with.
pub fn preset_name(sigmas: &[f32]) -> String {
    let paper: Vec<f32> = PAPER_SIGMAS.iter().map(|&s| s as f32).collect();
    if sigmas == paper.as_slice() {
        "paper".into()
    } else {
        "custom".into()
    }
}

/// Per-level 64x64 thumbnails of a stack's decoded layers.
pub fn thumbnails(stack: &BlurStack) -> Result<Vec<RasterImage>> {
    (1..=stack.layer_count())
        .into_par_iter()
        .map(|i| {
            let planes = stack
                .layer_planes(i)?
                .iter()
                .map(|p| resize_bilinear(p, THUMBNAIL_SIZE, THUMBNAIL_SIZE).clamped())
                .collect();
            RasterImage::new(planes)
        })
        .collect()
}

/// `mean |a - b| / 255` over all samples and channels.
pub fn level_score(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if a.channels() != b.channels() || a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Shape("thumbnail shapes differ".into()));
    }
    let total: u64 = a
        .planes()
        .iter()
        .zip(b.planes())
        .flat_map(|(p, q)| p.samples().iter().zip(q.samples()))
        .map(|(&x, &y)| (x - y).unsigned_abs() as u64)
        .sum();
    Ok(total as f64 / (255.0 * a.sample_count() as f64))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl StackIndex {
    pub fn new(sigmas: Vec<f32>, channels: usize) -> Self {
        StackIndex {
            preset: preset_name(&sigmas),
            sigmas,
            channels,
            entries: BTreeMap::new(),
        }
    }

    /// An empty index using the schedule and channel count of `stack`.
    pub fn for_stack(stack: &BlurStack) -> Self {
        Self::new(stack.layers.iter().map(|l| l.sigma).collect(), stack.channels)
    }

    pub fn preset(&self) -> &str {
        &self.preset
    }

    pub fn sigmas(&self) -> &[f32] {
        &self.sigmas
    }

    pub fn level_count(&self) -> usize {
        self.sigmas.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn check_compatible(&self, stack: &BlurStack) -> Result<()> {
        let sigmas: Vec<f32> = stack.layers.iter().map(|l| l.sigma).collect();
        if sigmas != self.sigmas {
            return Err(Error::Index(format!(
                "stack schedule {sigmas:?} differs from the index schedule {:?}",
                self.sigmas
            )));
        }
        if stack.channels != self.channels {
            return Err(Error::Index(format!(
                "stack has {} channels, index holds {}",
                stack.channels, self.channels
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, id: &str, stack: &BlurStack, path: Option<PathBuf>) -> Result<()> {
        if !valid_id(id) {
            return Err(Error::Index(format!("invalid entry id `{id}`")));
        }
        self.check_compatible(stack)?;
        if self.entries.contains_key(id) {
            return Err(Error::Conflict(format!("entry `{id}` already indexed")));
        }
        let thumbnails = thumbnails(stack)?;
        self.entries.insert(id.to_string(), IndexEntry { path, thumbnails });
        Ok(())
    }

    /// Splits entries round-robin (in id order) into `k` shards.
    pub fn shard(&self, k: usize) -> Vec<StackIndex> {
        let k = k.max(1);
        let mut shards: Vec<StackIndex> = (0..k)
            .map(|_| StackIndex {
                entries: BTreeMap::new(),
                ..self.clone_empty()
            })
            .collect();
        for (i, (id, e)) in self.entries.iter().enumerate() {
            shards[i % k].entries.insert(id.clone(), e.clone());
        }
        shards
    }

    fn clone_empty(&self) -> StackIndex {
        StackIndex {
            preset: self.preset.clone(),
            sigmas: self.sigmas.clone(),
            channels: self.channels,
            entries: BTreeMap::new(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("thumbs"))?;
        let mut manifest = format!(
            "{MANIFEST_MAGIC}\npreset {}\nsigmas {}\nlevels {}\nchannels {}\n",
            self.preset,
            self.sigmas.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
            self.level_count(),
            self.channels
        );
        for (id, entry) in &self.entries {
            let path = entry
                .path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into());
            manifest.push_str(&format!("entry {id} {path}\n"));
            let entry_dir = dir.join("thumbs").join(id);
            fs::create_dir_all(&entry_dir)?;
            for (level, thumb) in entry.thumbnails.iter().enumerate() {
                let bytes: Vec<u8> = thumb
                    .planes()
                    .iter()
                    .flat_map(|p| p.samples().iter().map(|&v| clamp8(v) as u8))
                    .collect();
                fs::write(entry_dir.join(format!("level_{:02}.raw", level + 1)), bytes)?;
            }
        }
        fs::write(dir.join(MANIFEST), manifest)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<StackIndex> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let mut lines = text.lines();
        let bad = |line: usize, msg: &str| Error::Index(format!("{MANIFEST} line {}: {msg}", line + 1));
        if lines.next() != Some(MANIFEST_MAGIC) {
            return Err(bad(0, "not an index manifest"));
        }
        let mut preset = None;
        let mut sigmas = None;
        let mut levels = None;
        let mut channels = None;
        let mut listed = Vec::new();
        for (n, line) in lines.enumerate() {
            let n = n + 1;
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad(n, "malformed line"))?;
            match key {
                "preset" => preset = Some(rest.to_string()),
                "sigmas" => {
                    sigmas = Some(
                        rest.split(',')
                            .map(|s| s.parse::<f32>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad(n, "bad sigma list"))?,
                    )
                }
                "levels" => levels = Some(rest.parse::<usize>().map_err(|_| bad(n, "bad level count"))?),
                "channels" => channels = Some(rest.parse::<usize>().map_err(|_| bad(n, "bad channel count"))?),
                "entry" => {
                    let (id, path) = rest.split_once(' ').ok_or_else(|| bad(n, "entry needs id and path"))?;
                    if !valid_id(id) {
                        return Err(bad(n, "invalid entry id"));
                    }
                    let path = (path != "-").then(|| PathBuf::from(path));
                    listed.push((id.to_string(), path));
                }
                _ => return Err(bad(n, "unknown key")),
            }
        }
        let sigmas = sigmas.ok_or_else(|| Error::Index("manifest lacks sigmas".into()))?;
        let channels = channels.ok_or_else(|| Error::Index("manifest lacks channels".into()))?;
        if levels != Some(sigmas.len()) {
            return Err(Error::Index("manifest level count disagrees with sigmas".into()));
        }
        if !matches!(channels, 1 | 3) {
            return Err(Error::Index(format!("{channels} channels")));
        }
        let mut index = StackIndex {
            preset: preset.unwrap_or_else(|| preset_name(&sigmas)),
            sigmas,
            channels,
            entries: BTreeMap::new(),
        };
        let plane_len = THUMBNAIL_SIZE * THUMBNAIL_SIZE;
        for (id, path) in listed {
            let mut thumbs = Vec::with_capacity(index.level_count());
            for level in 1..=index.level_count() {
                let file = dir.join("thumbs").join(&id).join(format!("level_{level:02}.raw"));
                let bytes = fs::read(&file)?;
                if bytes.len() != plane_len * channels {
                    return Err(Error::Index(format!("{} has {} bytes", file.display(), bytes.len())));
                }
                let planes = bytes
                    .chunks_exact(plane_len)
                    .map(|c| Plane::new(THUMBNAIL_SIZE, THUMBNAIL_SIZE, c.iter().map(|&b| b as i32).collect()))
                    .collect::<Result<Vec<_>>>()?;
                thumbs.push(RasterImage::new(planes)?);
            }
            if index
                .entries
                .insert(
                    id.clone(),
                    IndexEntry {
                        path,
                        thumbnails: thumbs,
                    },
                )
                .is_some()
            {
                return Err(Error::Conflict(format!("entry `{id}` listed twice")));
            }
        }
        Ok(index)
    }
}

/// Level-by-level comparison with pruning.
///
/// Level 1 compares every entry; level `L + 1` compares only entries whose
/// level-`L` score was `<= thresholds[L]`. Results are ranked accepted first,
/// then by depth reached (deeper first), then by the deepest score ascending,
/// then by id.
pub fn coarse_to_fine_search(
    index: &StackIndex,
    reference: &BlurStack,
    thresholds: &[f64],
    max_results: usize,
) -> Result<Vec<MatchResult>> {
    if thresholds.is_empty() || thresholds.len() > index.level_count() {
        return Err(Error::param(format!(
            "need 1..={} thresholds, got {}",
            index.level_count(),
            thresholds.len()
        )));
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    index.check_compatible(reference)?;
    let query = thumbnails(reference)?;

    let mut results: Vec<MatchResult> = index
        .entries
        .keys()
        .map(|id| MatchResult {
            id: id.clone(),
            per_level_scores: Vec::new(),
            deepest_level_reached: 0,
            accepted: false,
        })
        .collect();
    let mut survivors: Vec<usize> = (0..results.len()).collect();
    let entries: Vec<&IndexEntry> = index.entries.values().collect();
    for (level, &threshold) in thresholds.iter().enumerate() {
        let scores = survivors
            .par_iter()
            .map(|&i| level_score(&query[level], &entries[i].thumbnails[level]))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(survivors.len());
        for (&i, score) in survivors.iter().zip(scores) {
            let r = &mut results[i];
            r.per_level_scores.push(score);
            r.deepest_level_reached = level + 1;
            if score <= threshold {
                next.push(i);
            }
        }
        survivors = next;
    }
    for i in survivors {
        results[i].accepted = true;
    }
    Ok(rank(results, max_results))
}

fn rank(mut results: Vec<MatchResult>, max_results: usize) -> Vec<MatchResult> {
    results.sort_by(|a, b| {
        b.accepted
            .cmp(&a.accepted)
            .then(b.deepest_level_reached.cmp(&a.deepest_level_reached))
            .then(
                a.per_level_scores
                    .last()
                    .unwrap_or(&f64::INFINITY)
                    .total_cmp(b.per_level_scores.last().unwrap_or(&f64::INFINITY)),
            )
            .then(a.id.cmp(&b.id))
    });
    results.truncate(max_results);
    results
}

/// Searches each shard independently and merges into one ranking.
pub fn sharded_search(
    shards: &[StackIndex],
    reference: &BlurStack,
    thresholds: &[f64],
    max_results: usize,
) -> Result<Vec<MatchResult>> {
    let parts = shards
        .par_iter()
        .map(|s| coarse_to_fine_search(s, reference, thresholds, max_results))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank(parts.into_iter().flatten().collect(), max_results))
}
