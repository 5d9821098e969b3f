//! File formats: detection JSON, embedding sidecar, ground truth, results.
//!
//! All loaders are strict — the first malformed value, dangling reference, or
//! header mismatch aborts with an error naming the offending record; nothing
//! is skipped silently. All writers emit canonically ordered, pretty-printed
//! JSON, so writing the same data twice produces byte-identical files and a
//! write → read → write cycle through this module is a byte-level fixpoint.
//!
//! # Detection file
//!
//! A JSON document with four top-level sections:
//!
//! * `videos` — id, name, ordered keyframe image ids, keyframe rate;
//! * `images` — id, owning video, frame index (position on that video's
//!   keyframe grid); fully redundant with `videos` and cross-checked;
//! * `detections` — det id, image id, `[x, y, w, h]` box, score, category,
//!   and either an `embedding_offset` into the sidecar or (for tiny fixtures)
//!   an inline `embedding` array — a file that declares `embedding_meta` and
//!   also carries inline embeddings is rejected;
//! * `embedding_meta` — sidecar dimension, row count, file name, and dtype
//!   (always `"f32le"`).
//!
//! # Embedding sidecar
//!
//! A 16-byte header — magic `EMB1`, little-endian `u32` dimension, `u32` row
//! count, four reserved zero bytes — followed by exactly `count * dim`
//! little-endian `f32` values. Any size deviation is rejected.
//!
//! # Ground-truth file
//!
//! Same schema family as the detection file (`videos` + `images`), with a
//! `tracks` section instead of detections: track id, video, category, and
//! per-image boxes.
//!
//! # Result file
//!
//! A JSON array of records `{image_id, video_id, category_id, bbox, score,
//! track_id}` — one record per track member, ordered by (video, track,
//! frame). `(video_id, track_id, image_id)` triples are unique; track ids are
//! unique within a video.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{
    BoundingBox, Detection, EmbeddingStore, GroundTruthTrack, SequenceDataset, Track, TrackMember,
    VideoEntry,
};
use crate::Result;

/// Magic bytes opening an embedding sidecar.
pub const SIDECAR_MAGIC: [u8; 4] = *b"EMB1";

/// Fixed sidecar header length in bytes.
pub const SIDECAR_HEADER_LEN: usize = 16;

// ---------------------------------------------------------------------------
// Wire structs
// ---------------------------------------------------------------------------

fn default_fps() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VideoJson {
    id: u64,
    name: String,
    keyframes: Vec<u64>,
    #[serde(default = "default_fps")]
    keyframe_fps: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageJson {
    id: u64,
    video_id: u64,
    frame_index: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionJson {
    det_id: u64,
    image_id: u64,
    bbox: [f64; 4],
    score: f64,
    category_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding_offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingMetaJson {
    dim: usize,
    count: usize,
    file: String,
    dtype: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionFileJson {
    videos: Vec<VideoJson>,
    images: Vec<ImageJson>,
    detections: Vec<DetectionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding_meta: Option<EmbeddingMetaJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtBoxJson {
    image_id: u64,
    bbox: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtTrackJson {
    gt_track_id: u64,
    video_id: u64,
    category_id: u64,
    boxes: Vec<GtBoxJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthFileJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    videos: Option<Vec<VideoJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    images: Option<Vec<ImageJson>>,
    tracks: Vec<GtTrackJson>,
}

/// One row of a result file: a single track member on a single keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub image_id: u64,
    pub video_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub score: f64,
    pub track_id: u64,
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::parse(path_str(path), format!("cannot read file: {e}")))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path_str(path), format!("cannot serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(path_str(path), e.to_string()))
}

/// Validates the `videos`/`images` sections against each other and returns the
/// video entries plus an image index `image_id -> (video_id, frame_index)`.
fn build_grid(
    videos: Vec<VideoJson>,
    images: Vec<ImageJson>,
    path: &Path,
) -> Result<(Vec<VideoEntry>, BTreeMap<u64, (u64, usize)>)> {
    let mut image_index = BTreeMap::new();
    for img in &images {
        if image_index
            .insert(img.id, (img.video_id, img.frame_index))
            .is_some()
        {
            return Err(Error::parse(
                path_str(path),
                format!("image id {} appears more than once", img.id),
            ));
        }
    }

    let mut entries = Vec::with_capacity(videos.len());
    let mut referenced = BTreeSet::new();
    for video in videos {
        for (pos, &image_id) in video.keyframes.iter().enumerate() {
            match image_index.get(&image_id) {
                None => {
                    return Err(Error::reference(format!(
                        "{}: keyframe image {image_id} of video {} has no entry in `images`",
                        path_str(path),
                        video.id
                    )))
                }
                Some(&(vid, frame)) if vid != video.id || frame != pos => {
                    return Err(Error::reference(format!(
                        "{}: image {image_id} is keyframe {pos} of video {}, but `images` binds \
                         it to video {vid}, frame {frame}",
                        path_str(path),
                        video.id
                    )))
                }
                Some(_) => {
                    referenced.insert(image_id);
                }
            }
        }
        entries.push(VideoEntry {
            video_id: video.id,
            name: video.name,
            image_ids: video.keyframes,
            keyframe_fps: video.keyframe_fps,
        });
    }

    if let Some(orphan) = image_index.keys().find(|id| !referenced.contains(id)) {
        return Err(Error::reference(format!(
            "{}: image {orphan} is not on any video's keyframe grid",
            path_str(path)
        )));
    }
    Ok((entries, image_index))
}

fn resolve_gt_tracks(
    tracks: Vec<GtTrackJson>,
    image_index: &BTreeMap<u64, (u64, usize)>,
    path: &Path,
) -> Result<Vec<GroundTruthTrack>> {
    let mut out = Vec::with_capacity(tracks.len());
    for track in tracks {
        let mut boxes = BTreeMap::new();
        for entry in track.boxes {
            let &(video_id, frame) = image_index.get(&entry.image_id).ok_or_else(|| {
                Error::reference(format!(
                    "{}: ground-truth track {} references unknown image {}",
                    path_str(path),
                    track.gt_track_id,
                    entry.image_id
                ))
            })?;
            if video_id != track.video_id {
                return Err(Error::reference(format!(
                    "{}: ground-truth track {} belongs to video {} but has a box on image {} of \
                     video {video_id}",
                    path_str(path),
                    track.gt_track_id,
                    track.video_id,
                    entry.image_id
                )));
            }
            let bbox = BoundingBox::from_array(entry.bbox).map_err(|e| {
                Error::parse(
                    path_str(path),
                    format!("ground-truth track {}: {e}", track.gt_track_id),
                )
            })?;
            if boxes.insert(frame, bbox).is_some() {
                return Err(Error::parse(
                    path_str(path),
                    format!(
                        "ground-truth track {} has two boxes for image {}",
                        track.gt_track_id, entry.image_id
                    ),
                ));
            }
        }
        out.push(
            GroundTruthTrack::new(track.gt_track_id, track.video_id, track.category_id, boxes)
                .map_err(|e| Error::parse(path_str(path), e.to_string()))?,
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Embedding sidecar
// ---------------------------------------------------------------------------

/// Reads and validates an embedding sidecar.
pub fn read_sidecar(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path)
        .map_err(|e| Error::parse(path_str(path), format!("cannot read sidecar: {e}")))?;
    if bytes.len() < SIDECAR_HEADER_LEN {
        return Err(Error::parse(
            path_str(path),
            format!(
                "sidecar holds {} bytes, shorter than the {SIDECAR_HEADER_LEN}-byte header",
                bytes.len()
            ),
        ));
    }
    if bytes[0..4] != SIDECAR_MAGIC {
        return Err(Error::parse(
            path_str(path),
            format!("bad sidecar magic {:?} (expected `EMB1`)", &bytes[0..4]),
        ));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().expect("slice of 4")) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().expect("slice of 4")) as usize;
    let expected = SIDECAR_HEADER_LEN + 4 * dim * count;
    if bytes.len() != expected {
        return Err(Error::parse(
            path_str(path),
            format!(
                "sidecar declares {count} rows of dim {dim} ({expected} bytes) but holds {} bytes",
                bytes.len()
            ),
        ));
    }
    let mut raw = Vec::with_capacity(dim * count);
    for chunk in bytes[SIDECAR_HEADER_LEN..].chunks_exact(4) {
        raw.push(f32::from_le_bytes(chunk.try_into().expect("slice of 4")));
    }
    EmbeddingStore::from_raw(dim, raw).map_err(|e| Error::parse(path_str(path), e.to_string()))
}

/// Writes an embedding sidecar; the store must be non-empty.
pub fn write_sidecar(store: &EmbeddingStore, path: &Path) -> Result<()> {
    if store.is_empty() {
        return Err(Error::spec("refusing to write an empty embedding sidecar"));
    }
    let mut bytes = Vec::with_capacity(SIDECAR_HEADER_LEN + store.raw().len() * 4);
    bytes.extend_from_slice(&SIDECAR_MAGIC);
    bytes.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    bytes.extend_from_slice(&(store.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&[0u8; 4]);
    for v in store.raw() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Detection file
// ---------------------------------------------------------------------------

/// Loads a detection file, its embeddings, and (optionally) ground truth.
///
/// `sidecar_override` replaces the sidecar location named by the file's
/// `embedding_meta`; by default the sidecar is resolved relative to the
/// detection file's directory. Ground truth is resolved against the detection
/// file's image table.
pub fn load_dataset(
    det_path: &Path,
    sidecar_override: Option<&Path>,
    gt_path: Option<&Path>,
) -> Result<(SequenceDataset, EmbeddingStore)> {
    let text = read_to_string(det_path)?;
    let file: DetectionFileJson = parse_json(&text, det_path)?;
    let (videos, image_index) = build_grid(file.videos, file.images, det_path)?;

    let inline_rows = file
        .detections
        .iter()
        .filter(|d| d.embedding.is_some())
        .count();
    if file.embedding_meta.is_some() && inline_rows > 0 {
        return Err(Error::parse(
            path_str(det_path),
            "file declares `embedding_meta` and also carries inline embeddings; \
             exactly one source is allowed",
        ));
    }

    let store = match &file.embedding_meta {
        Some(meta) => {
            if meta.dtype != "f32le" {
                return Err(Error::parse(
                    path_str(det_path),
                    format!("unsupported embedding dtype `{}` (expected `f32le`)", meta.dtype),
                ));
            }
            let sidecar_path: PathBuf = match sidecar_override {
                Some(p) => p.to_path_buf(),
                None => det_path
                    .parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join(&meta.file),
            };
            let store = read_sidecar(&sidecar_path)?;
            if store.dim() != meta.dim || store.len() != meta.count {
                return Err(Error::HeaderMismatch {
                    detail: format!(
                        "detection file expects {} rows of dim {}, sidecar {} holds {} rows of \
                         dim {}",
                        meta.count,
                        meta.dim,
                        path_str(&sidecar_path),
                        store.len(),
                        store.dim()
                    ),
                });
            }
            store
        }
        None if inline_rows > 0 => {
            let mut dim = None;
            let mut raw: Vec<f32> = Vec::new();
            for det in &file.detections {
                if let Some(values) = &det.embedding {
                    match dim {
                        None => dim = Some(values.len()),
                        Some(d) if d != values.len() => {
                            return Err(Error::parse(
                                path_str(det_path),
                                format!(
                                    "detection {}: inline embedding has {} entries, earlier \
                                     embeddings have {d}",
                                    det.det_id,
                                    values.len()
                                ),
                            ))
                        }
                        Some(_) => {}
                    }
                    raw.extend(values.iter().map(|&v| v as f32));
                }
            }
            EmbeddingStore::from_raw(dim.expect("inline_rows > 0"), raw)
                .map_err(|e| Error::parse(path_str(det_path), e.to_string()))?
        }
        None => EmbeddingStore::empty(),
    };

    let sidecar_mode = file.embedding_meta.is_some();
    let mut detections = Vec::with_capacity(file.detections.len());
    let mut next_inline_row = 0usize;
    for det in file.detections {
        let &(video_id, frame_index) = image_index.get(&det.image_id).ok_or_else(|| {
            Error::reference(format!(
                "{}: detection {} references unknown image {}",
                path_str(det_path),
                det.det_id,
                det.image_id
            ))
        })?;
        let embedding_ref = if sidecar_mode {
            match det.embedding_offset {
                Some(offset) if offset >= store.len() => {
                    return Err(Error::reference(format!(
                        "{}: detection {} embedding offset {offset} out of range (sidecar holds \
                         {} rows)",
                        path_str(det_path),
                        det.det_id,
                        store.len()
                    )))
                }
                other => other,
            }
        } else if det.embedding.is_some() {
            let row = next_inline_row;
            next_inline_row += 1;
            Some(row)
        } else if det.embedding_offset.is_some() {
            return Err(Error::reference(format!(
                "{}: detection {} has an embedding_offset but the file declares no embedding_meta",
                path_str(det_path),
                det.det_id
            )));
        } else {
            None
        };
        let bbox = BoundingBox::from_array(det.bbox).map_err(|e| {
            Error::parse(path_str(det_path), format!("detection {}: {e}", det.det_id))
        })?;
        detections.push(
            Detection::new(
                det.det_id,
                video_id,
                frame_index,
                det.image_id,
                bbox,
                det.category_id,
                det.score,
                embedding_ref,
            )
            .map_err(|e| {
                Error::parse(path_str(det_path), format!("detection {}: {e}", det.det_id))
            })?,
        );
    }

    let ground_truth = match gt_path {
        Some(path) => {
            let text = read_to_string(path)?;
            let file: GroundTruthFileJson = parse_json(&text, path)?;
            resolve_gt_tracks(file.tracks, &image_index, path)?
        }
        None => Vec::new(),
    };

    let dataset = SequenceDataset::new(videos, detections, ground_truth)
        .map_err(|e| match e {
            e @ (Error::Ref { .. } | Error::GridMismatch { .. } | Error::UnknownVideo { .. }) => e,
            other => Error::parse(path_str(det_path), other.to_string()),
        })?;
    Ok((dataset, store))
}

/// Writes a detection file in canonical order.
///
/// When `sidecar` is given, its name is recorded in `embedding_meta` (the
/// binary payload itself is written separately with [`write_sidecar`]).
pub fn write_detection_file(
    dataset: &SequenceDataset,
    sidecar: Option<(&str, &EmbeddingStore)>,
    path: &Path,
) -> Result<()> {
    if sidecar.is_none() {
        if let Some(det) = dataset.all_detections().find(|d| d.embedding_ref.is_some()) {
            return Err(Error::spec(format!(
                "detection {} has an embedding reference but no sidecar was provided",
                det.det_id
            )));
        }
    }
    let videos: Vec<VideoJson> = dataset
        .videos()
        .map(|v| VideoJson {
            id: v.video_id,
            name: v.name.clone(),
            keyframes: v.image_ids.clone(),
            keyframe_fps: v.keyframe_fps,
        })
        .collect();
    let images: Vec<ImageJson> = dataset
        .videos()
        .flat_map(|v| {
            v.image_ids.iter().enumerate().map(|(frame, &id)| ImageJson {
                id,
                video_id: v.video_id,
                frame_index: frame,
            })
        })
        .collect();
    let detections: Vec<DetectionJson> = dataset
        .all_detections()
        .map(|d| DetectionJson {
            det_id: d.det_id,
            image_id: d.image_id,
            bbox: d.bbox.to_array(),
            score: d.score,
            category_id: d.category_id,
            embedding_offset: d.embedding_ref,
            embedding: None,
        })
        .collect();
    let embedding_meta = sidecar.map(|(file, store)| EmbeddingMetaJson {
        dim: store.dim(),
        count: store.len(),
        file: file.to_string(),
        dtype: "f32le".to_string(),
    });
    write_json(
        &DetectionFileJson {
            videos,
            images,
            detections,
            embedding_meta,
        },
        path,
    )
}

// ---------------------------------------------------------------------------
// Ground-truth file
// ---------------------------------------------------------------------------

/// Writes a ground-truth file carrying the full keyframe grid, so it can be
/// consumed standalone (e.g. by evaluation).
pub fn write_ground_truth_file(dataset: &SequenceDataset, path: &Path) -> Result<()> {
    let videos: Vec<VideoJson> = dataset
        .videos()
        .map(|v| VideoJson {
            id: v.video_id,
            name: v.name.clone(),
            keyframes: v.image_ids.clone(),
            keyframe_fps: v.keyframe_fps,
        })
        .collect();
    let images: Vec<ImageJson> = dataset
        .videos()
        .flat_map(|v| {
            v.image_ids.iter().enumerate().map(|(frame, &id)| ImageJson {
                id,
                video_id: v.video_id,
                frame_index: frame,
            })
        })
        .collect();
    let mut tracks: Vec<GtTrackJson> = dataset
        .ground_truth()
        .iter()
        .map(|gt| {
            let video = dataset.video(gt.video_id).expect("validated at construction");
            GtTrackJson {
                gt_track_id: gt.gt_track_id,
                video_id: gt.video_id,
                category_id: gt.category_id,
                boxes: gt
                    .boxes()
                    .iter()
                    .map(|(&frame, bbox)| GtBoxJson {
                        image_id: video.image_ids[frame],
                        bbox: bbox.to_array(),
                    })
                    .collect(),
            }
        })
        .collect();
    tracks.sort_by_key(|t| t.gt_track_id);
    write_json(
        &GroundTruthFileJson {
            videos: Some(videos),
            images: Some(images),
            tracks,
        },
        path,
    )
}

/// Loads a ground-truth file standalone: the result is a dataset with the
/// file's keyframe grid, its tracks, and no detections.
pub fn load_ground_truth_file(path: &Path) -> Result<SequenceDataset> {
    let text = read_to_string(path)?;
    let file: GroundTruthFileJson = parse_json(&text, path)?;
    let (videos, images) = match (file.videos, file.images) {
        (Some(v), Some(i)) => (v, i),
        _ => {
            return Err(Error::parse(
                path_str(path),
                "standalone ground-truth files must carry `videos` and `images` sections",
            ))
        }
    };
    let (entries, image_index) = build_grid(videos, images, path)?;
    let tracks = resolve_gt_tracks(file.tracks, &image_index, path)?;
    SequenceDataset::new(entries, Vec::new(), tracks)
}

// ---------------------------------------------------------------------------
// Result file
// ---------------------------------------------------------------------------

/// Flattens tracks into result records ordered by (video, track, frame).
pub fn tracks_to_records(tracks: &[Track], dataset: &SequenceDataset) -> Result<Vec<ResultRecord>> {
    let mut sorted: Vec<&Track> = tracks.iter().filter(|t| !t.is_empty()).collect();
    sorted.sort_by_key(|t| (t.video_id(), t.track_id()));
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for track in sorted {
        let video = dataset.video(track.video_id())?;
        if !seen.insert((track.video_id(), track.track_id())) {
            return Err(Error::spec(format!(
                "two tracks share id {} within video {}",
                track.track_id(),
                track.video_id()
            )));
        }
        for member in track.members() {
            let image_id = *video.image_ids.get(member.frame_index).ok_or_else(|| {
                Error::reference(format!(
                    "track {} member frame {} is off video {}'s keyframe grid",
                    track.track_id(),
                    member.frame_index,
                    track.video_id()
                ))
            })?;
            records.push(ResultRecord {
                image_id,
                video_id: track.video_id(),
                category_id: track.category_id(),
                bbox: member.bbox.to_array(),
                score: member.det_score,
                track_id: track.track_id(),
            });
        }
    }
    Ok(records)
}

/// Writes tracks as a result file (one record per member, canonical order).
pub fn write_results(tracks: &[Track], dataset: &SequenceDataset, path: &Path) -> Result<()> {
    let records = tracks_to_records(tracks, dataset)?;
    write_result_records(&records, path)
}

/// Writes raw result records exactly as given.
pub fn write_result_records(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_json(&records, path)
}

/// Reads raw result records without resolving them against a dataset.
pub fn read_result_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = read_to_string(path)?;
    let records: Vec<ResultRecord> = parse_json(&text, path)?;
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert((r.video_id, r.track_id, r.image_id)) {
            return Err(Error::Overlap {
                video_id: r.video_id,
                track_id: r.track_id,
                image_id: r.image_id,
            });
        }
    }
    Ok(records)
}

/// Reads a result file back into tracks, resolving frames through `dataset`.
///
/// Members regain their source `det_id` when exactly one detection at the
/// same keyframe matches box, score, and category; otherwise the id is 0 and
/// the member is treated as detached from any detection. Track scores are the
/// mean of the record scores by construction.
pub fn read_results(path: &Path, dataset: &SequenceDataset) -> Result<Vec<Track>> {
    let records = read_result_records(path)?;
    let mut grouped: BTreeMap<(u64, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for record in &records {
        grouped
            .entry((record.video_id, record.track_id))
            .or_default()
            .push(record);
    }

    let mut tracks = Vec::with_capacity(grouped.len());
    for ((video_id, track_id), mut records) in grouped {
        let video = dataset.video(video_id).map_err(|_| {
            Error::reference(format!(
                "{}: track {track_id} references unknown video {video_id}",
                path_str(path)
            ))
        })?;
        let category = records[0].category_id;
        if records.iter().any(|r| r.category_id != category) {
            return Err(Error::parse(
                path_str(path),
                format!("track {track_id} in video {video_id} mixes categories"),
            ));
        }
        let mut resolved: Vec<(usize, &ResultRecord)> = Vec::with_capacity(records.len());
        records.sort_by_key(|r| r.image_id);
        for record in records {
            let frame = video
                .image_ids
                .iter()
                .position(|&id| id == record.image_id)
                .ok_or_else(|| {
                    Error::reference(format!(
                        "{}: track {track_id} references image {} which is not a keyframe of \
                         video {video_id}",
                        path_str(path),
                        record.image_id
                    ))
                })?;
            resolved.push((frame, record));
        }
        resolved.sort_by_key(|(frame, _)| *frame);

        let mut track = Track::new(track_id, video_id, category);
        for (frame, record) in resolved {
            let bbox = BoundingBox::from_array(record.bbox).map_err(|e| {
                Error::parse(
                    path_str(path),
                    format!("track {track_id}, image {}: {e}", record.image_id),
                )
            })?;
            let candidates: Vec<&Detection> = dataset
                .detections_at(video_id, frame)?
                .iter()
                .filter(|d| {
                    d.bbox.to_array() == record.bbox
                        && d.score == record.score
                        && d.category_id == record.category_id
                })
                .collect();
            let det_id = if candidates.len() == 1 {
                candidates[0].det_id
            } else {
                0
            };
            track
                .push_member(
                    TrackMember {
                        frame_index: frame,
                        det_id,
                        bbox,
                        det_score: record.score,
                    },
                    None,
                )
                .map_err(|e| Error::parse(path_str(path), e.to_string()))?;
        }
        tracks.push(track);
    }
    Ok(tracks)
}

// ===========================================================================
// Tests
// ===========================================================================
